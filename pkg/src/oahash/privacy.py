"""How much does a fingerprint give away?

Exhaustive collision counts on tiny frames, where the extrema come from
(coverage), and a format audit of the digitised record.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from math import comb

import numpy as np

from .errors import EmptyInputError, FeasibilityError
from .hashing import FP_HEADER, FP_FIELDS, check_sorted_pairs, curve_extrema, parse_fingerprint_header

CENSUS_LIMIT = 1 << 24
POSITIONAL_NAMES = {"x", "y", "x0", "y0", "x1", "y1", "cx", "cy", "row", "col", "position", "curve_index"}


@dataclass(frozen=True)
class CollisionCensus:
    image_space_size: int
    distinct_hash_count: int
    max_preimage_size: int
    preimage_histogram: dict  # preimage size -> number of hashes with that many preimages
    exhaustive: bool = True

    @property
    def collision_ratio(self):
        return self.distinct_hash_count / self.image_space_size

    def to_csv(self):
        lines = ["preimage_size,hash_count"]
        lines += [f"{s},{c}" for s, c in sorted(self.preimage_histogram.items())]
        return "\n".join(lines) + "\n"

    def summary(self):
        label = "" if self.exhaustive else " (sampled: lower bound on collisions)"
        return (f"images={self.image_space_size} distinct_hashes={self.distinct_hash_count} "
                f"max_preimage={self.max_preimage_size} ratio={self.collision_ratio:.6g}{label}")


def level_values(levels):
    """`levels` intensities spread evenly over [0, 255], rounded half-up."""
    if levels < 1:
        raise ValueError("levels must be >= 1")
    if levels == 1:
        return np.zeros(1, dtype=np.uint8)
    l = np.arange(levels)
    return ((l * 255 * 2 + (levels - 1)) // (2 * (levels - 1))).astype(np.uint8)


def hash_count_bound(levels, n):
    """Number of multisets of n (min <= max) pairs over `levels` intensities."""
    pairs = levels * (levels + 1) // 2
    return comb(pairs + n - 1, n)


def _chunk_keys(start, stop, width, height, levels, program):
    idx = np.arange(start, stop, dtype=np.int64)
    npix = width * height
    digits = (idx[:, None] // (levels ** np.arange(npix, dtype=np.int64))[None, :]) % levels
    vals = level_values(levels)[digits]
    flat, starts = program.pixel_index
    sampled = vals[:, flat]
    mins = np.minimum.reduceat(sampled, starts, axis=1).astype(np.int64)
    maxs = np.maximum.reduceat(sampled, starts, axis=1).astype(np.int64)
    keys = np.sort(mins * 256 + maxs, axis=1)
    return np.unique(keys, axis=0, return_counts=True)


def collision_census(width, height, levels, program, jobs=1, chunk=1 << 16):
    """Fingerprint every image of a width x height frame with `levels` grey levels."""
    if (program.width, program.height) != (width, height):
        raise ValueError("program does not match the census frame size")
    if program.n == 0:
        raise ValueError("census needs at least one curve")
    if levels < 1:
        raise ValueError("levels must be >= 1")
    space = levels ** (width * height)
    if space > CENSUS_LIMIT:
        raise FeasibilityError(f"{levels}^{width * height} = {space} images exceeds the "
                               f"exhaustive limit of 2^24 = {CENSUS_LIMIT}")
    bounds = [(s, min(s + chunk, space)) for s in range(0, space, chunk)]

    def run(b):
        return _chunk_keys(b[0], b[1], width, height, levels, program)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            parts = list(pool.map(run, bounds))
    else:
        parts = [run(b) for b in bounds]
    keys = np.concatenate([k for k, _ in parts])
    counts = np.concatenate([c for _, c in parts])
    uniq, inverse = np.unique(keys, axis=0, return_inverse=True)
    sizes = np.bincount(inverse.ravel(), weights=counts).astype(np.int64)
    hist_sizes, hist_counts = np.unique(sizes, return_counts=True)
    return CollisionCensus(space, len(uniq), int(sizes.max()),
                           {int(s): int(c) for s, c in zip(hist_sizes, hist_counts)})


def sampled_census(width, height, levels, program, samples, seed=0):
    """Random images instead of all of them; collision counts are lower bounds."""
    rng = np.random.default_rng(seed)
    vals = level_values(levels)[rng.integers(0, levels, size=(samples, width * height))]
    flat, starts = program.pixel_index
    sampled = vals[:, flat]
    mins = np.minimum.reduceat(sampled, starts, axis=1).astype(np.int64)
    maxs = np.maximum.reduceat(sampled, starts, axis=1).astype(np.int64)
    _, sizes = np.unique(np.sort(mins * 256 + maxs, axis=1), axis=0, return_counts=True)
    hs, hc = np.unique(sizes, return_counts=True)
    return CollisionCensus(samples, len(sizes), int(sizes.max()),
                           {int(s): int(c) for s, c in zip(hs, hc)}, exhaustive=False)


@dataclass(frozen=True, eq=False)
class CoverageReport:
    extrema_location_mask: np.ndarray
    sampled_intensity_histogram: np.ndarray
    full_image_histogram: np.ndarray
    divergence: float

    def mask_pgm(self):
        m = self.extrema_location_mask
        h, w = m.shape
        return f"P5\n{w} {h}\n255\n".encode("ascii") + (m.astype(np.uint8) * 255).tobytes()

    @property
    def coverage_fraction(self):
        return float(self.extrema_location_mask.mean())


def first_extrema_positions(image, program):
    """Flat pixel index of the first argmin and first argmax of each curve, in raster order."""
    mins, maxs = curve_extrema(image, program)
    flat, starts = program.pixel_index
    lengths = np.diff(np.append(starts, len(flat)))
    vals = image.data[flat]
    pos = np.arange(len(flat))
    sentinel = len(flat)
    at_min = np.where(vals == np.repeat(mins, lengths), pos, sentinel)
    at_max = np.where(vals == np.repeat(maxs, lengths), pos, sentinel)
    return flat[np.minimum.reduceat(at_min, starts)], flat[np.minimum.reduceat(at_max, starts)]


def total_variation(p, q):
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    return 0.5 * float(np.abs(p / p.sum() - q / q.sum()).sum())


def coverage_map(image, program):
    if program.n == 0:
        raise EmptyInputError("coverage of an empty program")
    mins, maxs = curve_extrema(image, program)
    argmin, argmax = first_extrema_positions(image, program)
    mask = np.zeros(image.width * image.height, dtype=bool)
    mask[argmin] = True
    mask[argmax] = True
    sampled = np.bincount(np.concatenate([mins, maxs]), minlength=256)
    full = np.bincount(image.data, minlength=256)
    return CoverageReport(mask.reshape(image.height, image.width), sampled, full,
                          total_variation(sampled, full))


@dataclass(frozen=True)
class AuditResult:
    n: int
    header_bytes: int
    payload_bytes: int
    positional_fields: int
    pixel_count: int | None = None

    @property
    def payload_ratio(self):
        return None if not self.pixel_count else self.payload_bytes / self.pixel_count

    def summary(self):
        ratio = "n/a" if self.payload_ratio is None else f"{self.payload_ratio:.6g}"
        return (f"n={self.n} header={self.header_bytes}B payload={self.payload_bytes}B "
                f"positional_fields={self.positional_fields} payload/pixels={ratio}")


def leak_audit(raw, width=None, height=None):
    """Check a fingerprint record carries nothing but sorted (min, max) bytes."""
    raw = bytes(raw)
    _, _, n, _ = parse_fingerprint_header(raw)
    payload = raw[FP_HEADER.size:]
    pairs = np.frombuffer(payload, dtype=np.uint8).reshape(n, 2)
    check_sorted_pairs(pairs)
    positional = sum(name in POSITIONAL_NAMES for name in FP_FIELDS)
    pixels = width * height if width and height else None
    return AuditResult(n, FP_HEADER.size, len(payload), positional, pixels)
