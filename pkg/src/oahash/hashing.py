"""Extrema hashing: the simulated optical-analogue boundary.

Everything downstream of `fingerprint` sees only a sorted multiset of
(min, max) byte pairs; curve order, curve identity and pixel positions
never leave this module.
"""

import io
import struct
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .curves import CIRCLE, KIND_CODES, KIND_NAMES, check_curve
from .errors import EmptyInputError, FormatError, IntegrityError

FP_MAGIC = b"OAHF"
FP_VERSION = 1
# magic, version, curve kind, flags, reserved, n, program digest
FP_HEADER = struct.Struct("<4sBBBBIQ")
FP_FIELDS = ("magic", "version", "curve_kind", "flags", "reserved", "n", "program_digest", "min", "max")
FLAG_RANDOMIZED = 0x01


class ExtremaPair(NamedTuple):
    min: int
    max: int


@dataclass(frozen=True, eq=False)
class Fingerprint:
    pairs: np.ndarray  # (n, 2) uint8, columns (min, max), lexicographically sorted
    program_digest: int
    randomized_per_image: bool = False
    curve_kind: str = CIRCLE

    def __post_init__(self):
        arr = np.array(self.pairs, dtype=np.uint8).reshape(-1, 2)
        arr.setflags(write=False)
        object.__setattr__(self, "pairs", arr)

    @property
    def n(self):
        return len(self.pairs)

    @property
    def mins(self):
        return self.pairs[:, 0]

    @property
    def maxs(self):
        return self.pairs[:, 1]

    def as_pairs(self):
        return [ExtremaPair(int(a), int(b)) for a, b in self.pairs]

    def __eq__(self, other):
        if not isinstance(other, Fingerprint):
            return NotImplemented
        return (self.program_digest == other.program_digest
                and self.randomized_per_image == other.randomized_per_image
                and self.curve_kind == other.curve_kind
                and np.array_equal(self.pairs, other.pairs))

    def __repr__(self):
        return f"Fingerprint(n={self.n}, kind={self.curve_kind}, randomized={self.randomized_per_image})"


def sort_pairs(mins, maxs):
    order = np.lexsort((maxs, mins))
    return np.stack([mins[order], maxs[order]], axis=1).astype(np.uint8)


def trace_extrema(image, curve):
    check_curve(curve, image.width, image.height)
    pix = curve.pixels
    vals = image.pixels[pix[:, 1], pix[:, 0]]
    return ExtremaPair(int(vals.min()), int(vals.max()))


def curve_extrema(image, program):
    """Per-curve (mins, maxs) in program order. Internal to the hashing boundary."""
    if (image.width, image.height) != (program.width, program.height):
        raise ValueError(f"image is {image.width}x{image.height} but program expects "
                         f"{program.width}x{program.height}")
    flat, starts = program.pixel_index
    if program.n == 0:
        empty = np.zeros(0, dtype=np.uint8)
        return empty, empty
    vals = image.data[flat]
    return np.minimum.reduceat(vals, starts), np.maximum.reduceat(vals, starts)


def fingerprint(image, program, per_image_seed=None):
    """Hash an image through a camera program.

    With `per_image_seed`, a fresh program with the same parameters is drawn
    from that seed, used once and dropped; the recorded digest stays that of
    the base program.
    """
    active = program if per_image_seed is None else program.with_seed(per_image_seed)
    mins, maxs = curve_extrema(image, active)
    return Fingerprint(sort_pairs(mins, maxs), program.digest,
                       per_image_seed is not None, program.curve_kind)


@dataclass(frozen=True, eq=False)
class DensityGrid:
    """Rows index the min intensity bin, columns the max intensity bin."""

    values: np.ndarray

    @property
    def resolution(self):
        return self.values.shape[0]

    def mass_above_diagonal(self):
        return float(np.tril(self.values, k=-1).sum())

    def to_pgm(self):
        """8-bit PGM scaled to max 255, min axis pointing up as in a scatter plot."""
        v = self.values
        peak = v.max()
        img = np.zeros_like(v) if peak <= 0 else np.round(v * (255.0 / peak))
        img = img[::-1].astype(np.uint8)
        res = self.resolution
        return f"P5\n{res} {res}\n255\n".encode("ascii") + img.tobytes()

    def to_csv(self):
        buf = io.StringIO()
        buf.write("row,col,value\n")
        for r, c in zip(*np.nonzero(self.values)):
            buf.write(f"{r},{c},{self.values[r, c]:.12g}\n")
        return buf.getvalue()


def _bin(v, bins):
    return (v.astype(np.int64) * bins) // 256


def histogram2d(fp, bins=256):
    if bins < 1:
        raise ValueError("bins must be >= 1")
    if fp.n == 0:
        raise EmptyInputError("cannot build a histogram of an empty fingerprint")
    grid = np.zeros((bins, bins))
    np.add.at(grid, (_bin(fp.mins, bins), _bin(fp.maxs, bins)), 1.0)
    return DensityGrid(grid / fp.n)


def silverman_bandwidth(values, bin_width=1.0):
    values = np.asarray(values, dtype=float)
    sigma = values.std(ddof=1)
    if sigma == 0:
        return bin_width
    return 1.06 * sigma * len(values) ** (-0.2)


def bin_centers(resolution):
    """Cell centres in intensity units; equal to the bin index at resolution 256."""
    return (np.arange(resolution) + 0.5) * (256.0 / resolution) - 0.5


def _kernel_rows(points, centers, h):
    d = (centers[None, :] - points[:, None]) / h
    k = np.exp(-0.5 * d * d)
    k[np.abs(d) > 4.0] = 0.0
    return k


def kde_render(fp, resolution=256, bandwidth=None):
    """Gaussian-smoothed extrema histogram.

    `bandwidth` is in intensity units, either one value or (h_max, h_min);
    by default each axis gets Silverman's rule. Cells above the diagonal
    (min > max) are outside the support and are zeroed before normalizing.
    """
    if resolution < 1:
        raise ValueError("resolution must be >= 1")
    if fp.n == 0:
        raise EmptyInputError("cannot render an empty fingerprint")
    bin_width = 256.0 / resolution
    if bandwidth is None:
        if fp.n < 2:
            raise ValueError("automatic bandwidth needs at least two pairs")
        h_max = silverman_bandwidth(fp.maxs, bin_width)
        h_min = silverman_bandwidth(fp.mins, bin_width)
    elif np.ndim(bandwidth) == 0:
        h_max = h_min = float(bandwidth)
    else:
        h_max, h_min = (float(b) for b in bandwidth)
    if h_max <= 0 or h_min <= 0:
        raise ValueError("bandwidth must be positive")

    uniq, counts = np.unique(fp.pairs, axis=0, return_counts=True)
    centers = bin_centers(resolution)
    ky = _kernel_rows(uniq[:, 0].astype(float), centers, h_min) * counts[:, None]
    kx = _kernel_rows(uniq[:, 1].astype(float), centers, h_max)
    grid = ky.T @ kx
    grid[np.tril_indices(resolution, k=-1)] = 0.0
    total = grid.sum()
    if total <= 0:
        raise ValueError("bandwidth too small for this resolution: no mass on the grid")
    return DensityGrid(grid / total)


def save_fingerprint(fp):
    flags = FLAG_RANDOMIZED if fp.randomized_per_image else 0
    header = FP_HEADER.pack(FP_MAGIC, FP_VERSION, KIND_CODES[fp.curve_kind], flags, 0,
                            fp.n, fp.program_digest)
    return header + fp.pairs.tobytes()


def parse_fingerprint_header(raw):
    if len(raw) < FP_HEADER.size:
        raise FormatError("fingerprint file shorter than its header")
    magic, version, kind, flags, reserved, n, digest = FP_HEADER.unpack_from(raw)
    if magic != FP_MAGIC:
        raise FormatError(f"bad fingerprint magic {magic!r}")
    if version != FP_VERSION:
        raise FormatError(f"unsupported fingerprint version {version}")
    if kind not in KIND_NAMES:
        raise FormatError(f"unknown curve kind code {kind}")
    if reserved != 0 or flags & ~FLAG_RANDOMIZED:
        raise FormatError("reserved fingerprint header bits are set")
    if len(raw) != FP_HEADER.size + 2 * n:
        raise FormatError(f"fingerprint length {len(raw)} does not match n={n}")
    return KIND_NAMES[kind], bool(flags & FLAG_RANDOMIZED), n, digest


def load_fingerprint(raw):
    raw = bytes(raw)
    kind, randomized, n, digest = parse_fingerprint_header(raw)
    pairs = np.frombuffer(raw, dtype=np.uint8, offset=FP_HEADER.size).reshape(n, 2)
    check_sorted_pairs(pairs)
    return Fingerprint(pairs, digest, randomized, kind)


def check_sorted_pairs(pairs):
    if np.any(pairs[:, 0] > pairs[:, 1]):
        raise IntegrityError("fingerprint contains a pair with min > max")
    if len(pairs) > 1:
        key = pairs[:, 0].astype(np.int64) * 256 + pairs[:, 1]
        if np.any(np.diff(key) < 0):
            raise IntegrityError("fingerprint pairs are not in sorted order")
