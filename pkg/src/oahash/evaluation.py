"""Localisation-by-retrieval protocol: trajectory split, accuracy, sweeps."""

import csv
import io
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import ndimage

from .curves import CIRCLE, DEFAULT_RADII, LINE, gen_program
from .errors import DatasetError, FormatError
from .hashing import fingerprint
from .imaging import GrayImage, load_grayscale, textured_scene
from .localisation import DEFAULT_K, build_index, distinct_points, query, train_codebook
from .rng import derive_seed

FIXED, RANDOM = "fixed", "random"
BASELINE = "siftlite"
REPORT_HEADER = ["kind", "mode", "n", "k", "accuracy", "queries", "seed"]
IMAGE_SUFFIXES = {".png", ".pgm"}


@dataclass
class EvalConfig:
    stride: int = 20
    tolerance: int = 30
    n_values: tuple = (4, 16, 64, 256, 1024, 4096)
    curve_kinds: tuple = (CIRCLE,)
    modes: tuple = (FIXED,)
    k: int = DEFAULT_K
    seed: int = 0
    r_min: int = DEFAULT_RADII[0]
    r_max: int = DEFAULT_RADII[1]
    baseline: bool = False
    query_set: str = "test"

    def __post_init__(self):
        if self.stride < 1:
            raise ValueError("stride must be >= 1")
        if self.tolerance < 0:
            raise ValueError("tolerance must be >= 0")
        if not self.n_values:
            raise ValueError("n_values must not be empty")
        bad = set(self.curve_kinds) - {LINE, CIRCLE}
        if bad:
            raise ValueError(f"unknown curve kinds {sorted(bad)}")
        bad = set(self.modes) - {FIXED, RANDOM}
        if bad:
            raise ValueError(f"unknown modes {sorted(bad)}")
        if self.query_set not in ("test", "train"):
            raise ValueError("query_set must be 'test' or 'train'")


@dataclass(frozen=True)
class ReportRow:
    kind: str
    mode: str
    n: int
    k: int
    correct: int
    queries: int
    seed: int

    @property
    def accuracy(self):
        return self.correct / self.queries if self.queries else 0.0


@dataclass
class EvalReport:
    rows: list
    provenance: dict = field(default_factory=dict)
    per_query: dict = field(default_factory=dict)  # (kind, mode, n) -> [(query, predicted, correct)]

    def accuracy(self, kind, mode, n):
        for r in self.rows:
            if (r.kind, r.mode, r.n) == (kind, mode, n):
                return r.accuracy
        raise KeyError((kind, mode, n))

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(REPORT_HEADER)
        for r in self.rows:
            w.writerow([r.kind, r.mode, r.n, r.k, f"{r.accuracy:.6f}", r.queries, r.seed])
        return buf.getvalue()

    def per_query_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["kind", "mode", "n", "query_id", "predicted_id", "correct"])
        for (kind, mode, n), results in self.per_query.items():
            for q, p, ok in results:
                w.writerow([kind, mode, n, q, p, int(ok)])
        return buf.getvalue()


def split_trajectory(frame_count, stride):
    if frame_count < 1:
        raise ValueError("frame_count must be >= 1")
    if stride < 1:
        raise ValueError("stride must be >= 1")
    train = list(range(0, frame_count, stride))
    test = [i for i in range(frame_count) if i % stride]
    return train, test


def is_correct(predicted_id, true_id, tolerance):
    return abs(predicted_id - true_id) <= tolerance


def natural_key(name):
    return [int(t) if t.isdigit() else t.lower() for t in re.split(r"(\d+)", name)]


def list_frames(dataset_dir):
    d = Path(dataset_dir)
    if not d.is_dir():
        raise DatasetError(f"{d} is not a directory")
    files = sorted((p for p in d.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES and p.is_file()),
                   key=lambda p: natural_key(p.name))
    if not files:
        raise DatasetError(f"{d} contains no PNG or PGM frames")
    return files


def load_frames(dataset_dir, jobs=1):
    files = list_frames(dataset_dir)

    def load(path):
        try:
            return load_grayscale(path)
        except (OSError, FormatError) as exc:
            raise DatasetError(f"cannot read frame {path}: {exc}") from exc

    with ThreadPoolExecutor(max_workers=max(1, jobs)) as pool:
        frames = list(pool.map(load, files))
    shapes = {(f.width, f.height) for f in frames}
    if len(shapes) != 1:
        raise DatasetError(f"frames have differing sizes: {sorted(shapes)}")
    return frames


def synthetic_trajectory(frame_count=200, width=320, height=240, step=3, seed=0):
    """Handheld-style pan: a crop sliding across a wide textured mosaic with a slight bob."""
    bob = 6
    mosaic = textured_scene(width + step * (frame_count - 1), height + 2 * bob, seed).pixels
    frames = []
    for i in range(frame_count):
        x = i * step
        y = bob + int(round(bob * np.sin(i / 9.0)))
        frames.append(GrayImage(mosaic[y:y + height, x:x + width]))
    return frames


def _pmap(fn, items, jobs):
    if jobs <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def _run_retrieval(features, config, jobs):
    train_ids, test_ids = split_trajectory(len(features), config.stride)
    query_ids = train_ids if config.query_set == "train" else test_ids
    train = [features[i] for i in train_ids]
    # small n gives fewer distinct training points than words; shrink the vocabulary
    k = min(config.k, distinct_points(train))
    if k < 1:
        raise DatasetError("training frames produced no features")
    codebook = train_codebook(train, k, config.seed)
    index = build_index([(i, features[i]) for i in train_ids], codebook, stride=config.stride)

    def answer(qid):
        best, _ = query(index, features[qid], 1)[0]
        return qid, best, is_correct(best, qid, config.tolerance)

    return k, _pmap(answer, query_ids, jobs)


def evaluate_frames(frames, config, jobs=1):
    """Run every (kind, mode, n) combination of `config` over in-memory frames."""
    if not frames:
        raise DatasetError("empty dataset")
    width, height = frames[0].width, frames[0].height
    rows, per_query = [], {}
    for kind in config.curve_kinds:
        for mode in config.modes:
            for n in config.n_values:
                radii = (config.r_min, config.r_max) if kind == CIRCLE else (None, None)
                program = gen_program(kind, n, width, height, config.seed, *radii)
                if mode == FIXED:
                    hash_one = lambda i: fingerprint(frames[i], program)
                else:
                    hash_one = lambda i: fingerprint(frames[i], program, derive_seed(config.seed, i))
                fps = _pmap(hash_one, range(len(frames)), jobs)
                k, results = _run_retrieval(fps, config, jobs)
                correct = sum(ok for _, _, ok in results)
                rows.append(ReportRow(kind, mode, n, k, correct, len(results), config.seed))
                per_query[(kind, mode, n)] = results
    if config.baseline:
        descs = _pmap(baseline_descriptors, frames, jobs)
        k, results = _run_retrieval(descs, config, jobs)
        correct = sum(ok for _, _, ok in results)
        rows.append(ReportRow(BASELINE, FIXED, MAX_KEYPOINTS, k, correct, len(results), config.seed))
        per_query[(BASELINE, FIXED, MAX_KEYPOINTS)] = results
    provenance = {"frames": len(frames), "width": width, "height": height, "seed": config.seed}
    return EvalReport(rows, provenance, per_query)


def evaluate(dataset_dir, config, jobs=1):
    frames = load_frames(dataset_dir, jobs)
    report = evaluate_frames(frames, config, jobs)
    report.provenance["dataset"] = str(dataset_dir)
    return report


# SIFT-lite: Harris keypoints with a 4x4x8 gradient-orientation descriptor.
# A protocol stand-in for the conventional-feature baseline, not SIFT.

MAX_KEYPOINTS = 200
PATCH = 16
HARRIS_K = 0.04
HARRIS_SIGMA = 1.5


def harris_response(pixels, sigma=HARRIS_SIGMA, k=HARRIS_K):
    img = np.asarray(pixels, dtype=np.float64)
    ix = ndimage.sobel(img, axis=1, mode="reflect")
    iy = ndimage.sobel(img, axis=0, mode="reflect")
    sxx = ndimage.gaussian_filter(ix * ix, sigma, mode="reflect")
    syy = ndimage.gaussian_filter(iy * iy, sigma, mode="reflect")
    sxy = ndimage.gaussian_filter(ix * iy, sigma, mode="reflect")
    return sxx * syy - sxy * sxy - k * (sxx + syy) ** 2


def harris_keypoints(image, max_keypoints=MAX_KEYPOINTS):
    """(x, y) keypoints, strongest first, far enough from the border for a full patch."""
    resp = harris_response(image.pixels)
    peak = resp.max()
    if peak <= 0:
        return np.zeros((0, 2), dtype=np.int64)
    local_max = resp == ndimage.maximum_filter(resp, size=3, mode="constant", cval=-np.inf)
    cand = local_max & (resp > 1e-6 * peak)
    half = PATCH // 2
    cand[:half, :] = cand[-half:, :] = False
    cand[:, :half] = cand[:, -half:] = False
    ys, xs = np.nonzero(cand)
    order = np.lexsort((xs, ys, -resp[ys, xs]))[:max_keypoints]
    return np.stack([xs[order], ys[order]], axis=1)


def describe(pixels, keypoints):
    img = np.asarray(pixels, dtype=np.float64)
    gy, gx = np.gradient(img)
    mag = np.hypot(gx, gy)
    ang = np.mod(np.arctan2(gy, gx), 2 * np.pi)
    obin = np.minimum((ang * (8 / (2 * np.pi))).astype(np.int64), 7)
    half = PATCH // 2
    yy, xx = np.mgrid[0:PATCH, 0:PATCH]
    window = np.exp(-((yy - half + 0.5) ** 2 + (xx - half + 0.5) ** 2) / (2 * half ** 2))
    cell = (yy // 4) * 4 + xx // 4
    out = []
    for x, y in keypoints:
        sl = np.s_[y - half:y + half, x - half:x + half]
        hist = np.zeros(128)
        np.add.at(hist, (cell * 8 + obin[sl]).ravel(), (mag[sl] * window).ravel())
        norm = np.linalg.norm(hist)
        if norm == 0:
            continue
        hist = np.minimum(hist / norm, 0.2)
        out.append(hist / np.linalg.norm(hist))
    return np.array(out).reshape(-1, 128)


def baseline_descriptors(image):
    if image.width < 32 or image.height < 32:
        raise ValueError("baseline descriptors need an image of at least 32x32")
    return describe(image.pixels, harris_keypoints(image))
