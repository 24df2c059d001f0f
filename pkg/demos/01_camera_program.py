"""
A fixed camera program
======================

The camera owns one set of random curves, fixed at manufacture. Here we
draw one, look at a few curves, and show that the stored file refuses to
load once anyone edits it.
"""

from oahash import gen_program, load_program, save_program
from oahash.errors import IntegrityError

# 1000 circles with radii between 15 and 50 pixels on a 1280x720 frame
program = gen_program("circle", 1000, 1280, 720, seed=7, r_min=15, r_max=50)
print(program.n, "curves, digest", hex(program.digest))

for curve in program.curves[:3]:
    cx, cy, r = curve.params
    print(f"circle at ({cx}, {cy}) r={r}: {len(curve.pixels)} raster pixels, first {curve.pixels[0].tolist()}")

# lines run between two random boundary pixels
lines = gen_program("line", 4, 64, 64, seed=42)
print([c.params for c in lines.curves])

raw = save_program(program)
print("program file:", len(raw), "bytes =", 30, "+ 1000 x 6")
assert load_program(raw) == program

# nudge one centre coordinate: the regeneration check catches it
tampered = bytearray(raw)
tampered[30] ^= 1
try:
    load_program(bytes(tampered))
except IntegrityError as exc:
    print("tampered program rejected:", exc)
