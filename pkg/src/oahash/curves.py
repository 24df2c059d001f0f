"""Fixed random curve sets: the simulated DMD mask sequence.

A CameraProgram is generated once from a seed and never changes; the
serialized form is checked against regeneration on load.
"""

import math
import struct
from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np

from .errors import FormatError, IntegrityError
from .rng import SplitMix64

LINE, CIRCLE = "line", "circle"
KIND_CODES = {LINE: 1, CIRCLE: 2}
KIND_NAMES = {v: k for k, v in KIND_CODES.items()}

PROGRAM_MAGIC = b"OAPG"
PROGRAM_VERSION = 1
# magic, version, kind, n, width, height, seed, r_min, r_max
PROGRAM_HEADER = struct.Struct("<4sBBIIIQHH")
LINE_RECORD = struct.Struct("<HHHH")
CIRCLE_RECORD = struct.Struct("<HHH")

DEFAULT_RADII = (15, 50)
U16_MAX = 0xFFFF


@dataclass(frozen=True)
class Curve:
    """A line (x0, y0, x1, y1) or circle (cx, cy, r) in integer pixel coordinates."""

    kind: str
    params: tuple

    def __post_init__(self):
        if self.kind not in KIND_CODES:
            raise ValueError(f"unknown curve kind {self.kind!r}")
        expected = 4 if self.kind == LINE else 3
        if len(self.params) != expected:
            raise ValueError(f"{self.kind} needs {expected} parameters, got {self.params}")
        object.__setattr__(self, "params", tuple(int(p) for p in self.params))

    @classmethod
    def line(cls, x0, y0, x1, y1):
        return cls(LINE, (x0, y0, x1, y1))

    @classmethod
    def circle(cls, cx, cy, r):
        return cls(CIRCLE, (cx, cy, r))

    @property
    def pixels(self):
        """Ordered (x, y) raster positions, shape (m, 2)."""
        if self.kind == LINE:
            return _line_pixels(*self.params)
        cx, cy, r = self.params
        return _circle_offsets(r) + np.array([cx, cy])


def _line_pixels(x0, y0, x1, y1):
    # Integer midpoint form: the minor coordinate at major step i is the
    # half-up rounding of i * d_minor / d_major, i.e. the classic
    # error-accumulator Bresenham walk started at (x0, y0).
    dx, dy = x1 - x0, y1 - y0
    adx, ady = abs(dx), abs(dy)
    sx = 1 if dx >= 0 else -1
    sy = 1 if dy >= 0 else -1
    if adx >= ady:
        i = np.arange(adx + 1)
        xs = x0 + sx * i
        ys = y0 + sy * ((2 * i * ady + adx) // (2 * adx)) if adx else np.full(1, y0)
    else:
        i = np.arange(ady + 1)
        ys = y0 + sy * i
        xs = x0 + sx * ((2 * i * adx + ady) // (2 * ady))
    return np.stack([xs, ys], axis=1).astype(np.int64)


@lru_cache(maxsize=None)
def _circle_offsets(r):
    """Midpoint-circle offsets, deduplicated, clockwise on screen from east."""
    if r < 0:
        raise ValueError("radius must be non-negative")
    pts = set()
    x, y, d = r, 0, 1 - r
    while x >= y:
        for px, py in ((x, y), (y, x), (-y, x), (-x, y), (-x, -y), (-y, -x), (y, -x), (x, -y)):
            pts.add((px, py))
        y += 1
        if d < 0:
            d += 2 * y + 1
        else:
            x -= 1
            d += 2 * (y - x) + 1
    # image y grows downwards, so increasing atan2(dy, dx) is clockwise on screen
    ordered = sorted(pts, key=lambda p: (math.atan2(p[1], p[0]) % (2 * math.pi), p[0] * p[0] + p[1] * p[1]))
    arr = np.array(ordered, dtype=np.int64).reshape(-1, 2)
    arr.setflags(write=False)
    return arr


def fnv1a64(data):
    h = 0xCBF29CE484222325
    for b in data:
        h = ((h ^ b) * 0x100000001B3) & 0xFFFFFFFFFFFFFFFF
    return h


def on_boundary(x, y, width, height):
    return x == 0 or y == 0 or x == width - 1 or y == height - 1


def check_curve(curve, width, height):
    """Raise ValueError unless the curve satisfies the in-frame invariants."""
    if curve.kind == LINE:
        x0, y0, x1, y1 = curve.params
        for x, y in ((x0, y0), (x1, y1)):
            if not (0 <= x < width and 0 <= y < height):
                raise ValueError(f"line endpoint ({x},{y}) outside {width}x{height} frame")
    else:
        cx, cy, r = curve.params
        if r < 0 or not (r <= cx <= width - 1 - r and r <= cy <= height - 1 - r):
            raise ValueError(f"circle {curve.params} not contained in {width}x{height} frame")


def rasterize(curve, width, height):
    check_curve(curve, width, height)
    return curve.pixels


def perimeter_size(width, height):
    if width == 1 or height == 1:
        return width * height
    return 2 * (width + height) - 4


def perimeter_point(t, width, height):
    """Boundary pixel number t, walking clockwise from (0, 0) along the top edge."""
    if height == 1:
        return t, 0
    if width == 1:
        return 0, t
    if t < width:
        return t, 0
    t -= width
    if t < height - 1:
        return width - 1, t + 1
    t -= height - 1
    if t < width - 1:
        return width - 2 - t, height - 1
    t -= width - 1
    return 0, height - 2 - t


def _draw_curves(kind, n, width, height, seed, r_min, r_max):
    rng = SplitMix64(seed)
    curves = []
    if kind == LINE:
        perim = perimeter_size(width, height)
        for _ in range(n):
            while True:
                a = rng.bounded(perim)
                b = rng.bounded(perim)
                if a != b:
                    break
            curves.append(Curve.line(*perimeter_point(a, width, height), *perimeter_point(b, width, height)))
    else:
        for _ in range(n):
            r = r_min + rng.bounded(r_max - r_min + 1)
            cx = r + rng.bounded(width - 2 * r)
            cy = r + rng.bounded(height - 2 * r)
            curves.append(Curve.circle(cx, cy, r))
    return tuple(curves)


@dataclass(frozen=True)
class CameraProgram:
    width: int
    height: int
    curve_kind: str
    n: int
    seed: int
    r_min: int
    r_max: int
    curves: tuple

    def __post_init__(self):
        if len(self.curves) != self.n:
            raise ValueError("curve count does not match n")
        for c in self.curves:
            if c.kind != self.curve_kind:
                raise ValueError("mixed curve kinds in one program")
            check_curve(c, self.width, self.height)

    @cached_property
    def pixel_index(self):
        """(flat pixel indices of all curves concatenated, start offset of each curve)."""
        if self.n == 0:
            return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
        pix = [c.pixels for c in self.curves]
        lengths = np.fromiter((len(p) for p in pix), dtype=np.int64, count=len(pix))
        allpix = np.concatenate(pix)
        flat = allpix[:, 1] * self.width + allpix[:, 0]
        starts = np.concatenate([[0], np.cumsum(lengths)[:-1]])
        flat.setflags(write=False)
        starts.setflags(write=False)
        return flat, starts

    @cached_property
    def digest(self):
        """FNV-1a 64 of the program bytes with curve records in sorted order.

        Sorting makes the digest name the curve set, so it is as blind to
        curve order as the fingerprints it is stamped on.
        """
        return fnv1a64(save_program(self, canonical=True))

    def with_seed(self, seed):
        """Same parameters, fresh curves."""
        return gen_program(self.curve_kind, self.n, self.width, self.height, seed,
                           self.r_min if self.curve_kind == CIRCLE else None,
                           self.r_max if self.curve_kind == CIRCLE else None)

    def permuted(self, order):
        """Same curves in another order; used to probe order invariance."""
        curves = tuple(self.curves[i] for i in order)
        return program_from_curves(self.curve_kind, curves, self.width, self.height,
                                   seed=self.seed, r_min=self.r_min, r_max=self.r_max)


def gen_program(kind, n, width, height, seed, r_min=None, r_max=None):
    """Draw n random curves of one kind from the splitmix64 stream of `seed`."""
    if kind not in KIND_CODES:
        raise ValueError(f"unknown curve kind {kind!r}")
    if n < 0:
        raise ValueError("n must be non-negative")
    if not (1 <= width <= U16_MAX + 1 and 1 <= height <= U16_MAX + 1):
        raise ValueError(f"frame {width}x{height} outside supported range")
    if not 0 <= seed < 2 ** 64:
        raise ValueError("seed must fit in 64 bits")
    if kind == LINE:
        if r_min is not None or r_max is not None:
            raise ValueError("radius range only applies to circle programs")
        if n and perimeter_size(width, height) < 2:
            raise ValueError("frame too small for two distinct boundary points")
        r_min = r_max = 0
    else:
        if r_min is None and r_max is None:
            r_min, r_max = DEFAULT_RADII
        elif r_min is None or r_max is None:
            raise ValueError("give both r_min and r_max")
        if not 1 <= r_min <= r_max:
            raise ValueError(f"need 1 <= r_min <= r_max, got [{r_min}, {r_max}]")
        if 2 * r_max >= min(width, height):
            raise ValueError(f"r_max={r_max} too large for {width}x{height} frame")
        if r_max > U16_MAX:
            raise ValueError("radius does not fit the program format")
    curves = _draw_curves(kind, n, width, height, seed, r_min, r_max)
    return CameraProgram(width, height, kind, n, seed, r_min, r_max, curves)


def program_from_curves(kind, curves, width, height, seed=0, r_min=0, r_max=0):
    """Hand-built program. It serializes, but fails the regeneration check on load."""
    curves = tuple(curves)
    if kind == LINE:
        for c in curves:
            x0, y0, x1, y1 = c.params
            if not (on_boundary(x0, y0, width, height) and on_boundary(x1, y1, width, height)):
                raise ValueError(f"line {c.params} does not start and end on the frame boundary")
    return CameraProgram(width, height, kind, len(curves), seed, r_min, r_max, curves)


def save_program(program, canonical=False):
    out = [PROGRAM_HEADER.pack(PROGRAM_MAGIC, PROGRAM_VERSION, KIND_CODES[program.curve_kind],
                               program.n, program.width, program.height, program.seed,
                               program.r_min, program.r_max)]
    rec = LINE_RECORD if program.curve_kind == LINE else CIRCLE_RECORD
    records = [rec.pack(*c.params) for c in program.curves]
    out.extend(sorted(records) if canonical else records)
    return b"".join(out)


def load_program(raw):
    raw = bytes(raw)
    if len(raw) < PROGRAM_HEADER.size:
        raise FormatError("program file shorter than its header")
    magic, version, kind_code, n, width, height, seed, r_min, r_max = PROGRAM_HEADER.unpack_from(raw)
    if magic != PROGRAM_MAGIC:
        raise FormatError(f"bad program magic {magic!r}")
    if version != PROGRAM_VERSION:
        raise FormatError(f"unsupported program version {version}")
    if kind_code not in KIND_NAMES:
        raise FormatError(f"unknown curve kind code {kind_code}")
    kind = KIND_NAMES[kind_code]
    rec = LINE_RECORD if kind == LINE else CIRCLE_RECORD
    if len(raw) != PROGRAM_HEADER.size + n * rec.size:
        raise FormatError(f"program file length {len(raw)} does not match n={n}")
    stored = tuple(Curve(kind, rec.unpack_from(raw, PROGRAM_HEADER.size + i * rec.size)) for i in range(n))
    try:
        if kind == LINE:
            if r_min or r_max:
                raise ValueError("line program with radius range")
            regen = gen_program(kind, n, width, height, seed)
        else:
            regen = gen_program(kind, n, width, height, seed, r_min, r_max)
    except ValueError as exc:
        raise IntegrityError(f"program parameters cannot be regenerated: {exc}") from None
    if regen.curves != stored:
        raise IntegrityError("stored curves differ from regeneration of the stored seed")
    return regen
