"""Bag-of-visual-words retrieval over extrema fingerprints."""

import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateInputError, EmptyInputError, FormatError
from .rng import SplitMix64

DEFAULT_K = 64
INDEX_MAGIC = b"OACB"
INDEX_VERSION = 1


@dataclass(frozen=True, eq=False)
class Codebook:
    centroids: np.ndarray  # (k, d) float64
    trained_on: int = 0

    @property
    def k(self):
        return len(self.centroids)


def _points_of(fingerprints):
    pts = [np.asarray(fp.pairs if hasattr(fp, "pairs") else fp, dtype=np.float64) for fp in fingerprints]
    pts = [p.reshape(len(p), -1) for p in pts if len(p)]
    if not pts:
        return np.zeros((0, 2))
    return np.concatenate(pts)


def _sq_dists(points, centroids):
    # exact for small integer-valued data, unlike the |a|^2 - 2ab + |b|^2 expansion
    diff = points[:, None, :] - centroids[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


def _nearest(points, centroids):
    chunk = max(1, (1 << 21) // max(1, centroids.size))
    labels = np.empty(len(points), dtype=np.int64)
    dist = np.empty(len(points))
    for s in range(0, len(points), chunk):
        d = _sq_dists(points[s:s + chunk], centroids)
        labels[s:s + chunk] = d.argmin(axis=1)
        dist[s:s + chunk] = d[np.arange(len(d)), labels[s:s + chunk]]
    return labels, dist


def _weighted_pick(rng, weights):
    total = weights.sum()
    cum = np.cumsum(weights)
    u = rng.uniform() * total
    i = int(np.searchsorted(cum, u, side="right"))
    return min(i, len(weights) - 1)


def kmeans(points, k, seed, max_iter=100, tol=1e-4, weights=None):
    """Weighted Lloyd iterations with k-means++ seeding from splitmix64.

    Returns (centroids, labels). Empty clusters are moved to the point
    farthest from its current centroid.
    """
    points = np.asarray(points, dtype=np.float64)
    w = np.ones(len(points)) if weights is None else np.asarray(weights, dtype=np.float64)
    if k < 1:
        raise ValueError("k must be >= 1")
    if len(points) < k:
        raise DegenerateInputError(f"need at least k={k} distinct points, got {len(points)}")
    rng = SplitMix64(seed)

    centroids = np.empty((k, points.shape[1]))
    centroids[0] = points[rng.bounded(len(points))]
    closest = _sq_dists(points, centroids[:1])[:, 0]
    for j in range(1, k):
        idx = _weighted_pick(rng, closest * w)
        centroids[j] = points[idx]
        closest = np.minimum(closest, _sq_dists(points, centroids[j:j + 1])[:, 0])

    labels = None
    for _ in range(max_iter):
        labels, dist = _nearest(points, centroids)
        mass = np.bincount(labels, weights=w, minlength=k)
        sums = np.stack([np.bincount(labels, weights=w * points[:, d], minlength=k)
                         for d in range(points.shape[1])], axis=1)
        new = centroids.copy()
        filled = mass > 0
        new[filled] = sums[filled] / mass[filled, None]
        for j in np.flatnonzero(~filled):
            far = int(np.argmax(dist))
            new[j] = points[far]
            dist[far] = -1.0
        shift = np.sqrt(((new - centroids) ** 2).sum(axis=1)).max()
        centroids = new
        if shift < tol:
            break
    labels, _ = _nearest(points, centroids)
    return centroids, labels


def train_codebook(fingerprints, k=DEFAULT_K, seed=0):
    """k-means over all (min, max) pairs of the given fingerprints.

    Also accepts raw (m, d) descriptor arrays in place of fingerprints.
    """
    points = _points_of(fingerprints)
    if len(points) < k:
        raise DegenerateInputError(f"{len(points)} points cannot support k={k} words")
    uniq, counts = np.unique(points, axis=0, return_counts=True)
    if len(uniq) < k:
        raise DegenerateInputError(f"only {len(uniq)} distinct points for k={k} words")
    centroids, _ = kmeans(uniq, k, seed, weights=counts)
    return Codebook(centroids, trained_on=len(points))


def distinct_points(fingerprints):
    pts = _points_of(fingerprints)
    return len(np.unique(pts, axis=0)) if len(pts) else 0


def quantize(fp, codebook):
    """Raw word counts; ties go to the lower centroid index."""
    pts = _points_of([fp])
    hist = np.zeros(codebook.k, dtype=np.int64)
    if len(pts) == 0:
        return hist
    uniq, inverse, counts = np.unique(pts, axis=0, return_inverse=True, return_counts=True)
    labels, _ = _nearest(uniq, codebook.centroids)
    np.add.at(hist, labels, counts)
    return hist


def _normalize(v):
    norm = np.sqrt((v * v).sum())
    return v / norm if norm > 0 else v


@dataclass(frozen=True, eq=False)
class RetrievalIndex:
    codebook: Codebook
    idf: np.ndarray
    image_ids: np.ndarray
    vectors: np.ndarray  # (D, k), rows L2-normalized tf-idf
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.image_ids)

    def weigh(self, counts):
        return _normalize(np.asarray(counts, dtype=np.float64) * self.idf)


def idf_weights(histograms):
    histograms = np.asarray(histograms)
    n_docs = len(histograms)
    doc_freq = (histograms > 0).sum(axis=0)
    return np.log((1.0 + n_docs) / (1.0 + doc_freq)) + 1.0


def build_index(entries, codebook, **meta):
    """Index (image_id, fingerprint) pairs; extra keywords are kept as metadata."""
    entries = sorted(entries, key=lambda e: e[0])
    if not entries:
        raise EmptyInputError("cannot build an index from no fingerprints")
    ids = np.array([int(e[0]) for e in entries], dtype=np.int64)
    if len(np.unique(ids)) != len(ids):
        raise ValueError("duplicate image ids in index input")
    hists = np.stack([quantize(fp, codebook) for _, fp in entries])
    idf = idf_weights(hists)
    vectors = np.stack([_normalize(h * idf) for h in hists])
    return RetrievalIndex(codebook, idf, ids, vectors, dict(meta))


def query(index, fp, top_m=1):
    """Best matches as [(image_id, cosine similarity)], ties by lower id."""
    if top_m < 1:
        raise ValueError("top_m must be >= 1")
    if len(index) == 0:
        raise EmptyInputError("query against an empty index")
    q = index.weigh(quantize(fp, index.codebook))
    sims = index.vectors @ q
    order = np.lexsort((index.image_ids, -sims))[:top_m]
    return [(int(index.image_ids[i]), float(sims[i])) for i in order]


def save_index(index):
    cb = index.codebook
    if cb.centroids.shape[1] != 2:
        raise ValueError("only 2-D (min, max) codebooks have a file format")
    parts = [struct.pack("<4sBI", INDEX_MAGIC, INDEX_VERSION, cb.k),
             cb.centroids.astype("<f4").tobytes(),
             index.idf.astype("<f4").tobytes(),
             struct.pack("<I", len(index))]
    for image_id, vec in zip(index.image_ids, index.vectors):
        parts.append(struct.pack("<I", int(image_id)))
        parts.append(vec.astype("<f4").tobytes())
    return b"".join(parts)


def load_index(raw):
    raw = bytes(raw)
    head = struct.calcsize("<4sBI")
    if len(raw) < head:
        raise FormatError("index file shorter than its header")
    magic, version, k = struct.unpack_from("<4sBI", raw)
    if magic != INDEX_MAGIC:
        raise FormatError(f"bad index magic {magic!r}")
    if version != INDEX_VERSION:
        raise FormatError(f"unsupported index version {version}")
    if k < 1:
        raise FormatError("index with zero words")
    pos = head
    need = pos + 8 * k + 4 * k + 4
    if len(raw) < need:
        raise FormatError("truncated index file")
    centroids = np.frombuffer(raw, "<f4", 2 * k, pos).reshape(k, 2).astype(np.float64)
    pos += 8 * k
    idf = np.frombuffer(raw, "<f4", k, pos).astype(np.float64)
    pos += 4 * k
    (n_docs,) = struct.unpack_from("<I", raw, pos)
    pos += 4
    if len(raw) != pos + n_docs * (4 + 4 * k):
        raise FormatError(f"index length does not match D={n_docs}, k={k}")
    ids = np.empty(n_docs, dtype=np.int64)
    vectors = np.empty((n_docs, k))
    for i in range(n_docs):
        (ids[i],) = struct.unpack_from("<I", raw, pos)
        vectors[i] = np.frombuffer(raw, "<f4", k, pos + 4)
        pos += 4 + 4 * k
    if np.any(np.diff(ids) <= 0):
        raise FormatError("index image ids are not strictly increasing")
    return RetrievalIndex(Codebook(centroids), idf, ids, vectors)
