"""
What does a hash reveal?
========================

Three views: every 3x3 image with four grey levels pushed through a
two-line camera (how many collide), where on a scene the extrema come
from, and an audit of the stored record.
"""

from oahash import (collision_census, coverage_map, fingerprint, gen_program, leak_audit,
                    save_fingerprint, textured_scene)
from oahash.privacy import hash_count_bound

program = gen_program("line", 2, 3, 3, seed=1)
census = collision_census(3, 3, 4, program)
print(census.summary())
print("counting bound on distinct hashes:", hash_count_bound(4, 2))
print("largest preimage sizes:", sorted(census.preimage_histogram)[-5:])

scene = textured_scene(640, 360, seed=4)
for kind, radii in (("circle", (15, 50)), ("line", (None, None))):
    prog = gen_program(kind, 1000, 640, 360, 3, *radii)
    rep = coverage_map(scene, prog)
    print(f"{kind:6s}: extrema come from {rep.coverage_fraction:.2%} of pixels, "
          f"TV(sampled, true intensities) = {rep.divergence:.3f}")
    with open(f"coverage_{kind}.pgm", "wb") as fh:
        fh.write(rep.mask_pgm())

prog = gen_program("circle", 1000, 1280, 720, seed=7)
raw = save_fingerprint(fingerprint(textured_scene(1280, 720, seed=2), prog))
print(leak_audit(raw, 1280, 720).summary())
