"""Graph embeddings, feature fusion, and principal components.

The embedding is a Weisfeiler-Lehman subtree histogram: node labels start
as degrees, each refinement round rehashes a node's label together with the
sorted multiset of its neighbors' labels, and every label observed in every
round lands in a fixed-width histogram which is then l2-normalized. All
hashing is FNV-1a over 64-bit words, so identical graphs embed identically
on every platform and run; isomorphic graphs embed identically because
only label multisets enter the hash.
"""

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "WlConfig",
    "FeatureMatrix",
    "PcaModel",
    "wl_embed",
    "fuse",
    "pca_fit",
    "pca_fit_variance",
    "pca_transform",
]

# FNV-1a, 64-bit: standard offset basis and prime. Fixed here as the single
# documented source of hashing determinism for embeddings.
FNV64_OFFSET = 0xCBF29CE484222325
FNV64_PRIME = 0x100000001B3
_MASK64 = 0xFFFFFFFFFFFFFFFF


def _fnv1a(words) -> int:
    """FNV-1a over a sequence of 64-bit words, little-endian byte order."""
    h = FNV64_OFFSET
    for w in words:
        w &= _MASK64
        for _ in range(8):
            h ^= w & 0xFF
            h = (h * FNV64_PRIME) & _MASK64
            w >>= 8
    return h


@dataclass(frozen=True)
class WlConfig:
    """Refinement depth h and histogram width dim."""

    h: int = 3
    dim: int = 128

    def __post_init__(self):
        if not isinstance(self.h, int) or self.h < 0:
            raise ValueError(f"h must be a non-negative integer, got {self.h}")
        if not isinstance(self.dim, int) or self.dim < 1:
            raise ValueError(f"dim must be a positive integer, got {self.dim}")


def wl_embed(g, cfg: WlConfig) -> np.ndarray:
    """Embed a graph as an l2-normalized label histogram of width cfg.dim.

    Rounds 0..h all contribute: round 0 buckets the raw degrees, each later
    round buckets the refined labels. Distinct labels may share a bucket
    (plain modular bucketing); that is an accepted lossy step and is the
    same for every graph.
    """
    if g.n == 0:
        raise ValueError("cannot embed an empty graph")
    counts = np.zeros(cfg.dim, dtype=np.float64)
    labels = [int(d) for d in g.degrees]
    nbrs = g.neighbor_sets
    bucket_of: dict[int, int] = {}

    def bucket(label: int) -> int:
        b = bucket_of.get(label)
        if b is None:
            b = _fnv1a((label,)) % cfg.dim
            bucket_of[label] = b
        return b

    for rnd in range(cfg.h + 1):
        for lab in labels:
            counts[bucket(lab)] += 1.0
        if rnd == cfg.h:
            break
        labels = [
            _fnv1a((labels[u], *sorted(labels[v] for v in nbrs[u])))
            for u in range(g.n)
        ]
    norm = float(np.linalg.norm(counts))
    return counts / norm


def fuse(parts: list[np.ndarray]) -> np.ndarray:
    """Concatenate embedding vectors in the given order."""
    if not parts:
        raise ValueError("nothing to fuse")
    return np.concatenate([np.asarray(p, dtype=np.float64) for p in parts])


@dataclass(frozen=True)
class FeatureMatrix:
    """Row-per-sample features with aligned labels and named columns.

    column_meta holds one short origin string per column (channel,
    expansion order, window, bucket index); snr_db optionally tags each row
    with the noise level it was generated at (None = clean).
    """

    rows: np.ndarray
    labels: list[str]
    column_meta: list[str]
    snr_db: list[float | None] | None = None

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=np.float64)
        if rows.ndim != 2:
            raise ValueError("rows must be 2-D")
        if rows.shape[0] != len(self.labels):
            raise ValueError("labels must align with rows")
        if rows.shape[1] != len(self.column_meta):
            raise ValueError("column_meta must align with columns")
        if self.snr_db is not None and len(self.snr_db) != rows.shape[0]:
            raise ValueError("snr_db must align with rows")
        object.__setattr__(self, "rows", rows)

    @property
    def shape(self) -> tuple[int, int]:
        return self.rows.shape


@dataclass(frozen=True)
class PcaModel:
    """Mean vector, orthonormal component rows, explained variance per row."""

    mean: np.ndarray
    components: np.ndarray
    explained_variance: np.ndarray

    @property
    def theta(self) -> int:
        return self.components.shape[0]

    def truncate(self, theta: int) -> "PcaModel":
        if not 1 <= theta <= self.theta:
            raise ValueError(f"theta must be in [1, {self.theta}], got {theta}")
        return PcaModel(self.mean, self.components[:theta].copy(),
                        self.explained_variance[:theta].copy())


def pca_fit(x: FeatureMatrix, theta: int) -> PcaModel:
    """Fit a theta-component PCA of the feature rows.

    Components are the covariance eigenvectors with eigenvalues sorted
    descending; each component's sign is fixed so its largest-magnitude
    entry is positive. theta must not exceed min(rows - 1, cols), the
    covariance rank bound. Zero-variance data fits fine and projects
    everything to zero.
    """
    rows = x.rows
    n, p = rows.shape
    if n < 2:
        raise ValueError("need at least two rows to fit")
    cap = min(n - 1, p)
    if not isinstance(theta, int) or not 1 <= theta <= cap:
        raise ValueError(f"theta must be an integer in [1, {cap}], got {theta}")
    mean = rows.mean(axis=0)
    centered = rows - mean
    # SVD of the centered matrix: right singular vectors are the covariance
    # eigenvectors and s^2/(n-1) the eigenvalues, without forming the p x p
    # covariance explicitly.
    _, s, vt = np.linalg.svd(centered, full_matrices=False)
    ev = (s * s) / (n - 1)
    comp = vt[:cap]
    ev = ev[:cap]
    comp = _fix_signs(comp)
    return PcaModel(mean=mean, components=comp[:theta].copy(),
                    explained_variance=np.maximum(ev[:theta], 0.0).copy())


def pca_fit_variance(x: FeatureMatrix, target: float) -> PcaModel:
    """Fit with the smallest theta whose cumulative explained variance
    reaches ``target`` (a fraction in (0, 1])."""
    if not 0.0 < target <= 1.0:
        raise ValueError(f"variance target must be in (0, 1], got {target}")
    n, p = x.rows.shape
    cap = min(n - 1, p)
    full = pca_fit(x, cap)
    total = float(full.explained_variance.sum())
    if total == 0.0:
        return full.truncate(1)
    frac = np.cumsum(full.explained_variance) / total
    theta = int(np.searchsorted(frac, target - 1e-12) + 1)
    return full.truncate(min(theta, cap))


def pca_transform(model: PcaModel, x: FeatureMatrix) -> FeatureMatrix:
    """Project rows onto the model's components."""
    if x.rows.shape[1] != model.mean.shape[0]:
        raise ValueError(
            f"feature width {x.rows.shape[1]} does not match the model ({model.mean.shape[0]})")
    proj = (x.rows - model.mean) @ model.components.T
    meta = [f"pc{i}" for i in range(model.theta)]
    return FeatureMatrix(rows=proj, labels=list(x.labels), column_meta=meta,
                         snr_db=None if x.snr_db is None else list(x.snr_db))


def _fix_signs(components: np.ndarray) -> np.ndarray:
    out = components.copy()
    for i in range(out.shape[0]):
        j = int(np.argmax(np.abs(out[i])))
        if out[i, j] < 0:
            out[i] = -out[i]
    return out
