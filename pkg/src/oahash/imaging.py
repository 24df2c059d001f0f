"""Grayscale rasters: ingestion, PGM interchange and synthetic fixtures."""

import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image
from scipy import ndimage

from .errors import FormatError

PNG_SIGNATURE = b"\x89PNG\r\n\x1a\n"


@dataclass(frozen=True, eq=False)
class GrayImage:
    """8-bit single-channel raster, stored as a read-only (height, width) array."""

    pixels: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.pixels)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"expected non-empty 2-D raster, got shape {arr.shape}")
        if arr.dtype != np.uint8:
            if arr.size and (arr.min() < 0 or arr.max() > 255):
                raise ValueError("intensities must lie in [0, 255]")
            if np.issubdtype(arr.dtype, np.floating) and not np.all(arr == np.round(arr)):
                raise ValueError("intensities must be integers")
        arr = np.array(arr, dtype=np.uint8, copy=True)
        arr.setflags(write=False)
        object.__setattr__(self, "pixels", arr)

    @property
    def width(self):
        return self.pixels.shape[1]

    @property
    def height(self):
        return self.pixels.shape[0]

    @property
    def data(self):
        """Row-major flat view of the intensities."""
        return self.pixels.ravel()

    def __eq__(self, other):
        if not isinstance(other, GrayImage):
            return NotImplemented
        return self.pixels.shape == other.pixels.shape and bool(np.array_equal(self.pixels, other.pixels))

    def __repr__(self):
        return f"GrayImage({self.width}x{self.height})"


def luma(rgb):
    """BT.601 luma, rounded half-up, in exact integer arithmetic."""
    rgb = np.asarray(rgb, dtype=np.int64)
    y = (299 * rgb[..., 0] + 587 * rgb[..., 1] + 114 * rgb[..., 2] + 500) // 1000
    return y.astype(np.uint8)


def _parse_pgm(raw):
    # header tokens may be separated by arbitrary whitespace and '#' comments
    tokens = []
    pos = 0
    while len(tokens) < 4:
        if pos >= len(raw):
            raise FormatError("truncated PGM header")
        c = raw[pos:pos + 1]
        if c == b"#":
            while pos < len(raw) and raw[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
        elif c.isspace():
            pos += 1
        else:
            start = pos
            while pos < len(raw) and not raw[pos:pos + 1].isspace() and raw[pos:pos + 1] != b"#":
                pos += 1
            tokens.append(raw[start:pos])
    magic = tokens[0]
    try:
        width, height, maxval = (int(t) for t in tokens[1:])
    except ValueError:
        raise FormatError("malformed PGM header") from None
    if width < 1 or height < 1:
        raise FormatError("PGM with zero dimension")
    if maxval != 255:
        raise FormatError(f"only maxval 255 PGM is supported, got {maxval}")
    if magic == b"P5":
        pos += 1  # single whitespace byte before the raster
        body = raw[pos:pos + width * height]
        if len(body) != width * height:
            raise FormatError("truncated PGM raster")
        arr = np.frombuffer(body, dtype=np.uint8).reshape(height, width)
    elif magic == b"P2":
        try:
            vals = np.array([int(t) for t in raw[pos:].split()], dtype=np.int64)
        except ValueError:
            raise FormatError("malformed ASCII PGM raster") from None
        if vals.size != width * height or vals.min() < 0 or vals.max() > 255:
            raise FormatError("bad ASCII PGM raster")
        arr = vals.reshape(height, width)
    else:
        raise FormatError(f"unsupported PNM variant {magic!r}")
    return GrayImage(arr)


def _decode_png(raw):
    try:
        img = Image.open(io.BytesIO(raw))
        img.load()
    except Exception as exc:
        raise FormatError(f"cannot decode PNG: {exc}") from None
    mode = img.mode
    if mode in ("L", "1"):
        return GrayImage(np.asarray(img.convert("L")))
    if mode == "LA":
        return GrayImage(np.asarray(img)[..., 0])
    if mode in ("RGB", "RGBA", "P", "PA"):
        rgb = np.asarray(img.convert("RGB"))
        return GrayImage(luma(rgb))
    raise FormatError(f"unsupported PNG mode {mode}")


def load_grayscale(path):
    """Load a PNG or PGM file as a GrayImage; colour goes through BT.601 luma."""
    raw = Path(path).read_bytes()
    if raw.startswith(PNG_SIGNATURE):
        return _decode_png(raw)
    if raw[:2] in (b"P5", b"P2"):
        return _parse_pgm(raw)
    raise FormatError(f"{path}: not a PNG or PGM file")


def pgm_bytes(image):
    header = f"P5\n{image.width} {image.height}\n255\n".encode("ascii")
    return header + image.pixels.tobytes()


def save_pgm(image, path):
    Path(path).write_bytes(pgm_bytes(image))


def synth_image(kind, width, height, value=128, cell=8):
    """Deterministic fixtures: 'constant', 'h_ramp', 'v_ramp' or 'checker'."""
    if width < 1 or height < 1:
        raise ValueError(f"dimensions must be positive, got {width}x{height}")
    if kind == "constant":
        if not 0 <= value <= 255:
            raise ValueError("constant value must lie in [0, 255]")
        arr = np.full((height, width), value, dtype=np.uint8)
    elif kind == "h_ramp":
        x = np.arange(width)
        row = (255 * x) // (width - 1) if width > 1 else np.zeros(1, dtype=np.int64)
        arr = np.broadcast_to(row, (height, width))
    elif kind == "v_ramp":
        y = np.arange(height)
        col = (255 * y) // (height - 1) if height > 1 else np.zeros(1, dtype=np.int64)
        arr = np.broadcast_to(col[:, None], (height, width))
    elif kind == "checker":
        if cell < 1:
            raise ValueError("checker cell must be >= 1")
        yy, xx = np.mgrid[0:height, 0:width]
        arr = (((yy // cell) + (xx // cell)) % 2) * 255
    else:
        raise ValueError(f"unknown synthetic image kind {kind!r}")
    return GrayImage(arr)


def textured_scene(width, height, seed=0):
    """Office-like clutter: multiscale noise, flat panels and a few saturated patches.

    Statistics vary across the frame, so crops taken from different places
    give different extrema distributions.
    """
    rng = np.random.default_rng(seed)
    field = np.zeros((height, width))
    scale_cap = min(width, height) / 4.0
    for sigma, weight in ((48.0, 1.0), (12.0, 0.6), (3.0, 0.35), (1.0, 0.15)):
        sigma = min(sigma, scale_cap)
        noise = ndimage.gaussian_filter(rng.standard_normal((height, width)), sigma, mode="wrap")
        field += weight * noise / (noise.std() + 1e-12)
    field = 110 + 28 * field

    n_rect = max(4, width * height // 6000)
    for _ in range(n_rect):
        w = int(rng.integers(8, max(9, width // 5)))
        h = int(rng.integers(8, max(9, height // 4)))
        x = int(rng.integers(0, max(1, width - w)))
        y = int(rng.integers(0, max(1, height - h)))
        level = rng.uniform(0, 255)
        alpha = rng.uniform(0.5, 1.0)
        field[y:y + h, x:x + w] = alpha * level + (1 - alpha) * field[y:y + h, x:x + w]

    # slow illumination drift gives each region its own contrast
    gain = ndimage.gaussian_filter(rng.standard_normal((height, width)), min(80.0, scale_cap), mode="wrap")
    gain = 1.0 + 0.6 * gain / (np.abs(gain).max() + 1e-12)
    field = 128 + (field - 128) * gain
    return GrayImage(np.clip(np.round(field), 0, 255).astype(np.uint8))
