"""Polyhedral-cone geometry: cone descriptions, synthetic samplers, and the
empirical affinity/density quantities behind the no-false-discovery certificate.

Conventions
-----------
- A pointed polyhedral cone is the set {D a : a >= 0} for a ray matrix D whose
  columns are the extreme-ray directions.
- Data matrices are column-major in the sample sense: shape (n, N), one sample
  per column.
- Cluster labels are 1-based integers in [1..L].
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

__all__ = [
    "ConeSpec",
    "DataSet",
    "UopcCertificate",
    "sample_cone_2d",
    "sample_cone_3d",
    "sample_uopc",
    "ball_volume",
    "empirical_affinity",
    "empirical_density",
    "pointwise_density",
    "min_cross_affinity",
    "min_cone_density",
    "check_certificate",
    "spherical_ray",
    "synthetic_cones_2d",
    "synthetic_cones_3d",
    "cone_to_text",
    "cone_from_text",
    "read_cone_file",
    "write_cone_file",
]

_UNIT_NORM_ATOL = 1e-9


@dataclass
class ConeSpec:
    """A pointed polyhedral cone given by its extreme-ray matrix.

    Parameters
    ----------
    extreme_rays : (n, d) ndarray
        One nonzero direction vector per column. The number of rays d may
        exceed the ambient dimension n.
    """

    extreme_rays: np.ndarray

    def __post_init__(self):
        rays = np.asarray(self.extreme_rays, dtype=float)
        if rays.ndim != 2:
            raise ValueError("extreme_rays must be a 2-D matrix (one ray per column)")
        if rays.shape[1] < 1:
            raise ValueError("a cone needs at least one extreme ray")
        norms = np.linalg.norm(rays, axis=0)
        if np.any(norms <= 0.0):
            raise ValueError("every extreme ray must have strictly positive norm")
        self.extreme_rays = rays

    @property
    def ambient_dim(self) -> int:
        return self.extreme_rays.shape[0]

    @property
    def num_rays(self) -> int:
        return self.extreme_rays.shape[1]


@dataclass
class DataSet:
    """N points in R^n with optional ground-truth cone labels.

    Carries both the raw points and their unit-normalized view used by all
    distance-based operations.

    Fields
    ------
    points : (n, N) ndarray of raw samples.
    normalized : (n, N) ndarray, column i equals points[:, i] / ||points[:, i]||.
    labels : optional (N,) int ndarray with entries in [1..num_clusters].
    num_clusters : number of clusters L (0 when unlabeled).
    """

    points: np.ndarray
    normalized: np.ndarray
    labels: Optional[np.ndarray] = None
    num_clusters: int = 0

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        nrm = np.asarray(self.normalized, dtype=float)
        if pts.ndim != 2 or nrm.shape != pts.shape:
            raise ValueError("points and normalized must be matching (n, N) matrices")
        col_norms = np.linalg.norm(pts, axis=0)
        if np.any(col_norms == 0.0):
            raise ValueError("raw points must not contain the zero vector")
        unit = np.linalg.norm(nrm, axis=0)
        if np.any(np.abs(unit - 1.0) > _UNIT_NORM_ATOL):
            raise ValueError("normalized columns must have unit norm within 1e-9")
        self.points = pts
        self.normalized = nrm
        if self.labels is not None:
            lab = np.asarray(self.labels, dtype=int)
            if lab.shape != (pts.shape[1],):
                raise ValueError("labels must be a length-N vector")
            L = int(self.num_clusters)
            if L < 1:
                raise ValueError("labeled datasets need num_clusters >= 1")
            present = np.unique(lab)
            if present[0] < 1 or present[-1] > L:
                raise ValueError(f"labels must lie in [1..{L}]")
            if present.size != L:
                raise ValueError("every cluster index in [1..L] must occur at least once")
            self.labels = lab

    @classmethod
    def from_points(cls, points: np.ndarray, labels: Optional[np.ndarray] = None) -> "DataSet":
        """Build a DataSet from raw points, computing the normalized view."""
        pts = np.asarray(points, dtype=float)
        if pts.ndim != 2:
            raise ValueError("points must be an (n, N) matrix")
        norms = np.linalg.norm(pts, axis=0)
        if np.any(norms == 0.0):
            raise ValueError("raw points must not contain the zero vector")
        normalized = pts / norms
        if labels is None:
            return cls(pts, normalized, None, 0)
        lab = np.asarray(labels, dtype=int)
        return cls(pts, normalized, lab, int(lab.max()) if lab.size else 0)

    @property
    def ambient_dim(self) -> int:
        return self.points.shape[0]

    @property
    def num_points(self) -> int:
        return self.points.shape[1]

    def normalized_view(self, label: int) -> np.ndarray:
        """Normalized columns belonging to one cluster label."""
        if self.labels is None:
            raise ValueError("dataset has no labels")
        return self.normalized[:, self.labels == label]


@dataclass
class UopcCertificate:
    """Outcome of the no-false-discovery check.

    holds is True exactly when rho_star * V_n(t_star) >= K, and k_max is the
    largest neighbor count for which the bound holds.
    """

    t_star: float
    rho_star: float
    K: int
    holds: bool
    k_max: int


# ---------------------------------------------------------------------------
# Synthetic samplers
# ---------------------------------------------------------------------------

def sample_cone_2d(rays: ConeSpec, count: int, rng: np.random.Generator) -> DataSet:
    """Sample a planar cone between two rays by uniform convex combination.

    Each point is a*e1 + (1-a)*e2 with a ~ Uniform(0,1), where e1, e2 are the
    unit-normalized extreme rays. Deterministic given the generator state.
    """
    if rays.ambient_dim != 2 or rays.num_rays != 2:
        raise ValueError("sample_cone_2d needs a 2-D cone with exactly 2 extreme rays")
    if count < 1:
        raise ValueError("count must be positive")
    unit = rays.extreme_rays / np.linalg.norm(rays.extreme_rays, axis=0)
    a = rng.random(count)
    pts = np.outer(unit[:, 0], a) + np.outer(unit[:, 1], 1.0 - a)
    return DataSet.from_points(pts)


def sample_cone_3d(rays: ConeSpec, count: int, rng: np.random.Generator) -> DataSet:
    """Sample a 3-ray cone in R^3 by simplex-weighted ray combinations.

    Per point, draws (u1, u2, u3) i.i.d. Uniform(0,1) and uses the
    sum-normalized coefficients c_i = u_i / (u1+u2+u3). A zero-sum draw is
    redrawn (probability-zero guard).
    """
    if rays.ambient_dim != 3 or rays.num_rays != 3:
        raise ValueError("sample_cone_3d needs a 3-D cone with exactly 3 extreme rays")
    if count < 1:
        raise ValueError("count must be positive")
    u = rng.random((3, count))
    sums = u.sum(axis=0)
    while np.any(sums == 0.0):
        redo = sums == 0.0
        u[:, redo] = rng.random((3, int(redo.sum())))
        sums = u.sum(axis=0)
    coeff = u / sums
    pts = rays.extreme_rays @ coeff
    return DataSet.from_points(pts)


def sample_uopc(cones: Sequence[ConeSpec], counts: Sequence[int],
                rng: np.random.Generator) -> DataSet:
    """Sample a labeled dataset from a union of polyhedral cones.

    2-ray planar cones use the convex-combination sampler and 3-ray cones in
    R^3 the simplex sampler; any other cone draws D @ a with a entrywise
    Uniform(0,1). Points from cone l get label l (1-based).
    """
    if len(cones) != len(counts):
        raise ValueError("counts must have one entry per cone")
    if len(cones) == 0:
        raise ValueError("at least one cone is required")
    n = cones[0].ambient_dim
    if any(c.ambient_dim != n for c in cones):
        raise ValueError("all cones must share the same ambient dimension")
    blocks = []
    labels = []
    for idx, (cone, count) in enumerate(zip(cones, counts), start=1):
        if count < 1:
            raise ValueError("counts must be positive")
        if n == 2 and cone.num_rays == 2:
            block = sample_cone_2d(cone, count, rng).points
        elif n == 3 and cone.num_rays == 3:
            block = sample_cone_3d(cone, count, rng).points
        else:
            a = rng.random((cone.num_rays, count))
            block = cone.extreme_rays @ a
        blocks.append(block)
        labels.append(np.full(count, idx, dtype=int))
    pts = np.concatenate(blocks, axis=1)
    return DataSet.from_points(pts, np.concatenate(labels))


# ---------------------------------------------------------------------------
# Affinity, density, certificate
# ---------------------------------------------------------------------------

def ball_volume(n: int, x: float) -> float:
    """Volume of the n-ball of radius x: pi^(n/2) x^n / Gamma(n/2 + 1).

    Evaluated through log-gamma for numerical stability; x = 0 gives 0.
    """
    if n < 1:
        raise ValueError("dimension must be >= 1")
    if x < 0:
        raise ValueError("radius must be nonnegative")
    if x == 0.0:
        return 0.0
    log_v = 0.5 * n * math.log(math.pi) + n * math.log(x) - math.lgamma(0.5 * n + 1.0)
    return math.exp(log_v)


def empirical_affinity(a: np.ndarray, b: np.ndarray) -> float:
    """Minimum pairwise Euclidean distance between two sets of unit vectors.

    Both arguments are (n, count) views of normalized points; the result lies
    in [0, 2].
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.ndim != 2 or b.ndim != 2 or a.shape[0] != b.shape[0]:
        raise ValueError("views must be (n, count) matrices with matching n")
    if a.shape[1] == 0 or b.shape[1] == 0:
        raise ValueError("views must be nonempty")
    best = np.inf
    # Chunk the broadcast so large views stay within memory.
    chunk = max(1, int(4e6 // max(1, a.shape[1] * a.shape[0])))
    for start in range(0, b.shape[1], chunk):
        diff = a[:, :, None] - b[:, None, start:start + chunk]
        d2 = (diff * diff).sum(axis=0)
        best = min(best, float(d2.min()))
    return math.sqrt(best)


def pointwise_density(points: np.ndarray, J: int) -> np.ndarray:
    """Per-point density J / V_n(r) with r the distance to the J-th nearest
    other point in the same view. Duplicate points give +inf entries."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2:
        raise ValueError("points must be an (n, count) matrix")
    n, count = pts.shape
    if J < 1:
        raise ValueError("J must be positive")
    if J >= count:
        raise ValueError(f"J={J} needs at least J+1 points, got {count}")
    cols = np.ascontiguousarray(pts.T)
    dens = np.empty(count)
    for i in range(count):
        d2 = np.sum((cols - cols[i]) ** 2, axis=1)
        d2[i] = np.inf
        r = math.sqrt(float(np.partition(d2, J - 1)[J - 1]))
        dens[i] = math.inf if r == 0.0 else J / ball_volume(n, r)
    return dens


def empirical_density(points: np.ndarray, J: int) -> float:
    """Minimum of the per-point densities over a single-cone view.

    Infinite per-point values (duplicates) are ignored as long as at least
    one finite value exists; an all-duplicate view raises.
    """
    dens = pointwise_density(points, J)
    finite = dens[np.isfinite(dens)]
    if finite.size == 0:
        raise ValueError("all per-point densities are infinite (duplicated points)")
    return float(finite.min())


def min_cross_affinity(ds: DataSet) -> float:
    """Smallest empirical affinity over all pairs of distinct clusters."""
    if ds.labels is None:
        raise ValueError("dataset has no labels")
    views = [ds.normalized_view(l) for l in range(1, ds.num_clusters + 1)]
    if len(views) < 2:
        raise ValueError("need at least two clusters")
    best = math.inf
    for i in range(len(views)):
        for j in range(i + 1, len(views)):
            best = min(best, empirical_affinity(views[i], views[j]))
    return best


def min_cone_density(ds: DataSet, J: int) -> float:
    """Smallest per-cluster empirical density across the labeled dataset."""
    if ds.labels is None:
        raise ValueError("dataset has no labels")
    return min(empirical_density(ds.normalized_view(l), J)
               for l in range(1, ds.num_clusters + 1))


def check_certificate(t_star: float, rho_star: float, K: int, n: int) -> UopcCertificate:
    """Evaluate the no-false-discovery bound rho_star * V_n(t_star) >= K.

    Returns the certificate together with k_max, the largest neighbor count
    for which the bound still holds.
    """
    if not 0.0 <= t_star <= 2.0:
        raise ValueError("t_star must lie in [0, 2]")
    if not (rho_star >= 0.0 and math.isfinite(rho_star)):
        raise ValueError("rho_star must be finite and nonnegative")
    if K < 1:
        raise ValueError("K must be >= 1")
    bound = rho_star * ball_volume(n, t_star)
    return UopcCertificate(
        t_star=float(t_star),
        rho_star=float(rho_star),
        K=int(K),
        holds=bool(bound >= K),
        k_max=int(math.floor(bound)),
    )


# ---------------------------------------------------------------------------
# Benchmark cone fixtures
# ---------------------------------------------------------------------------

def spherical_ray(r: float, theta: float, phi: float) -> np.ndarray:
    """Convert a spherical triple (radius, azimuth, inclination) to Cartesian.

    Uses the physics convention x = r sin(phi) cos(theta),
    y = r sin(phi) sin(theta), z = r cos(phi); phi = 0 is the z-axis pole.
    """
    return np.array([
        r * math.sin(phi) * math.cos(theta),
        r * math.sin(phi) * math.sin(theta),
        r * math.cos(phi),
    ])


def synthetic_cones_2d() -> list[ConeSpec]:
    """The two planar benchmark cones used by the 2-D synthetic experiments."""
    def ray(angle):
        return [math.cos(angle), math.sin(angle)]

    first = np.array([ray(-math.pi / 2), ray(2 * math.pi / 9)]).T
    second = np.array([ray(math.pi), ray(5 * math.pi / 18)]).T
    return [ConeSpec(first), ConeSpec(second)]


def synthetic_cones_3d() -> list[ConeSpec]:
    """The two 3-ray benchmark cones used by the 3-D synthetic experiments."""
    first = np.column_stack([
        spherical_ray(1.0, 2 * math.pi / 9, math.pi / 4),
        spherical_ray(1.0, math.pi / 2, math.pi / 4),
        spherical_ray(1.0, 0.0, 0.0),
    ])
    second = np.column_stack([
        spherical_ray(1.0, 5 * math.pi / 18, math.pi / 4),
        spherical_ray(1.0, math.pi / 2, math.pi / 2),
        spherical_ray(1.0, math.pi / 4, math.pi / 2),
    ])
    return [ConeSpec(first), ConeSpec(second)]


# ---------------------------------------------------------------------------
# Plain-text cone serialization
# ---------------------------------------------------------------------------

def cone_to_text(cone: ConeSpec) -> str:
    """Serialize a cone: first line is the ambient dimension, then one line
    per extreme ray as comma-separated decimals."""
    lines = [str(cone.ambient_dim)]
    for j in range(cone.num_rays):
        lines.append(",".join(format(v, ".17g") for v in cone.extreme_rays[:, j]))
    return "\n".join(lines) + "\n"


def cone_from_text(text: str) -> ConeSpec:
    """Parse a single cone block produced by :func:`cone_to_text`."""
    lines = [ln.strip() for ln in text.strip().splitlines() if ln.strip()]
    if len(lines) < 2:
        raise ValueError("cone block needs a dimension line and at least one ray line")
    try:
        n = int(lines[0])
    except ValueError as exc:
        raise ValueError(f"bad ambient dimension line: {lines[0]!r}") from exc
    rays = []
    for ln in lines[1:]:
        parts = [p.strip() for p in ln.split(",")]
        if len(parts) != n:
            raise ValueError(f"ray line has {len(parts)} components, expected {n}: {ln!r}")
        try:
            rays.append([float(p) for p in parts])
        except ValueError as exc:
            raise ValueError(f"bad ray line: {ln!r}") from exc
    return ConeSpec(np.array(rays).T)


def read_cone_file(path) -> list[ConeSpec]:
    """Read one or more blank-line-separated cone blocks from a text file."""
    with open(path, "r", encoding="ascii") as fh:
        text = fh.read()
    blocks = [b for b in text.split("\n\n") if b.strip()]
    if not blocks:
        raise ValueError(f"no cone blocks found in {path}")
    return [cone_from_text(b) for b in blocks]


def write_cone_file(cones: Iterable[ConeSpec], path) -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(cone_to_text(c) for c in cones))
