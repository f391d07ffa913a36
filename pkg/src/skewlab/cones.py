"""Cones, critical bands, and their images under linear maps.

A cone C_E(alpha) collects vectors v = e + f (e in the axis subspace E,
f in the complement F) with ||f|| < alpha * ||e||; the closed variant uses
<=.  Critical regions are finite unions of bands [a, b] x T^(s-1) in one
designated coordinate of a fiber block.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from skewlab.torus import TWO_PI


@dataclass(frozen=True)
class Cone:
    """Open/closed cone with orthonormal axis and complement bases (columns)."""

    axis_basis: np.ndarray
    complement_basis: np.ndarray
    aperture: float

    def __post_init__(self):
        if self.aperture <= 0:
            raise ValueError("aperture must be positive")
        object.__setattr__(self, "axis_basis",
                           np.atleast_2d(np.asarray(self.axis_basis, dtype=float)))
        object.__setattr__(self, "complement_basis",
                           np.atleast_2d(np.asarray(self.complement_basis, dtype=float)))

    @property
    def dim(self) -> int:
        return self.axis_basis.shape[0]

    @property
    def axis_dimension(self) -> int:
        return self.axis_basis.shape[1]

    def components(self, v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Norms (||e||, ||f||) of the axis/complement components; batched."""
        v = np.asarray(v, dtype=float)
        e = v @ self.axis_basis
        f = v @ self.complement_basis
        return (np.linalg.norm(np.atleast_2d(e), axis=-1),
                np.linalg.norm(np.atleast_2d(f), axis=-1))

    def complement(self) -> "Cone":
        """The complementary cone: axis and complement swapped, aperture inverted."""
        return Cone(self.complement_basis, self.axis_basis, 1.0 / self.aperture)


def axis_cone(dim: int, axis_index: int, aperture: float) -> Cone:
    """Cone whose axis is one coordinate direction of R^dim."""
    e = np.zeros((dim, 1))
    e[axis_index, 0] = 1.0
    comp = np.delete(np.eye(dim), axis_index, axis=1)
    return Cone(e, comp, aperture)


def cone_contains(cone: Cone, v: np.ndarray, closed: bool = False):
    """Membership test; the zero vector belongs to every cone.

    Accepts a single vector or an (N, dim) batch; returns bool or bool array.
    """
    v = np.asarray(v, dtype=float)
    single = v.ndim == 1
    ne, nf = cone.components(np.atleast_2d(v))
    zero = (ne == 0) & (nf == 0)
    inside = (nf <= cone.aperture * ne) if closed else (nf < cone.aperture * ne)
    out = inside | zero
    return bool(out[0]) if single else out


def _slack(cone: Cone, vecs: np.ndarray) -> np.ndarray:
    """Normalized slack alpha*||e|| - ||f|| per unit vector (positive inside)."""
    vecs = np.atleast_2d(vecs)
    norms = np.linalg.norm(vecs, axis=-1)
    ne, nf = cone.components(vecs)
    with np.errstate(invalid="ignore", divide="ignore"):
        return (cone.aperture * ne - nf) / np.where(norms == 0, 1.0, norms)


def _boundary_rays_2d(cone: Cone) -> np.ndarray:
    a = cone.axis_basis[:, 0]
    f = cone.complement_basis[:, 0]
    return np.stack([a + cone.aperture * f, a - cone.aperture * f])


def fibonacci_sphere_directions(dim: int, n: int) -> np.ndarray:
    """Deterministic quasi-uniform direction sample on S^(dim-1).

    Uses a golden-ratio lattice pushed through the Gaussian quantile trick
    (dimension-agnostic, no RNG state).
    """
    phi = (1 + np.sqrt(5.0)) / 2
    idx = np.arange(1, n + 1)
    u = np.empty((n, dim))
    for j in range(dim):
        u[:, j] = (idx * phi ** (j + 1)) % 1.0
    from scipy.special import ndtri
    g = ndtri(np.clip(u, 1e-12, 1 - 1e-12))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


@dataclass
class ConeImageResult:
    contained: bool
    margin: float
    n_samples: int
    worst_ray: np.ndarray


def cone_image(M: np.ndarray, cone: Cone, target: Cone | None = None,
               closed: bool = True, n_samples: int = 1000,
               refine: int = 2) -> ConeImageResult:
    """Whether M maps `cone` into `target` (default: into itself).

    In dimension 2 the decision is exact: a linear map sends extreme rays
    to extreme rays, so it suffices to check the two boundary rays plus the
    interior kinks where an image component vanishes.  In higher dimension
    the unit sphere of the cone is sampled on a deterministic grid with
    local refinement; the reported margin is the minimum target-cone slack
    over the samples.
    """
    M = np.asarray(M, dtype=float)
    if abs(np.linalg.det(M)) < 1e-14:
        raise ValueError("singular matrix")
    target = target or cone
    if cone.dim == 2 and cone.axis_dimension == 1:
        a = cone.axis_basis[:, 0]
        f = cone.complement_basis[:, 0]
        # rays (a + t f), |t| <= aperture; slack along the image is
        # piecewise-smooth in t with kinks where e- or f-components vanish
        ts = [-cone.aperture, 0.0, cone.aperture]
        for comp in (target.axis_basis[:, 0], target.complement_basis[:, 0]):
            c0 = float((M @ a) @ comp)
            c1 = float((M @ f) @ comp)
            if c1 != 0.0:
                t0 = -c0 / c1
                if abs(t0) < cone.aperture:
                    ts.append(t0)
        rays = np.stack([a + t * f for t in sorted(ts)])
        rays /= np.linalg.norm(rays, axis=1, keepdims=True)
        imgs = rays @ M.T
        slacks = _slack(target, imgs)
        margin = float(slacks.min())
        ok = margin >= 0 if closed else margin > 0
        return ConeImageResult(bool(ok), margin, len(rays), rays[int(np.argmin(slacks))])

    dirs = fibonacci_sphere_directions(cone.dim, n_samples)
    inside = cone_contains(cone, dirs, closed=True)
    # always include the boundary shell: mix axis/complement at the aperture
    ne, nf = cone.components(dirs)
    scale = np.where(nf > 0, cone.aperture * ne / np.where(nf == 0, 1, nf), 0.0)
    proj_axis = dirs @ cone.axis_basis @ cone.axis_basis.T
    proj_comp = dirs @ cone.complement_basis @ cone.complement_basis.T
    boundary = proj_axis + scale[:, None] * proj_comp
    norms = np.linalg.norm(boundary, axis=1)
    boundary = boundary[norms > 1e-12] / norms[norms > 1e-12, None]
    samples = np.concatenate([dirs[inside], boundary], axis=0)
    for _ in range(refine):
        imgs = samples @ M.T
        slacks = _slack(target, imgs)
        order = np.argsort(slacks)[: max(8, len(samples) // 20)]
        worst = samples[order]
        jitter = 0.05 * np.mean(np.linalg.norm(np.diff(samples[:32], axis=0), axis=1))
        neighbors = np.concatenate([
            worst + jitter * fibonacci_sphere_directions(cone.dim, len(worst)),
            worst,
        ])
        neighbors /= np.linalg.norm(neighbors, axis=1, keepdims=True)
        keep = cone_contains(cone, neighbors, closed=True)
        samples = np.concatenate([samples, neighbors[keep]], axis=0)
    imgs = samples @ M.T
    slacks = _slack(target, imgs)
    margin = float(slacks.min())
    ok = margin >= 0 if closed else margin > 0
    return ConeImageResult(bool(ok), margin, len(samples), samples[int(np.argmin(slacks))])


def _normalize_bands(bands) -> list[tuple[float, float]]:
    """Reduce bands mod 2*pi, split wrap-around ones, merge overlaps."""
    flat: list[tuple[float, float]] = []
    for a, b in bands:
        if b < a:
            raise ValueError("band endpoints must satisfy a <= b")
        if b - a >= TWO_PI:
            return [(0.0, TWO_PI)]
        a_, b_ = a % TWO_PI, b % TWO_PI
        if b_ >= a_ and (b - a) == (b_ - a_):
            flat.append((a_, b_))
        else:  # wraps through 0
            flat.append((a_, TWO_PI))
            flat.append((0.0, b_))
    flat.sort()
    merged = [flat[0]]
    for a, b in flat[1:]:
        la, lb = merged[-1]
        if a <= lb:
            merged[-1] = (la, max(lb, b))
        else:
            merged.append((a, b))
    return merged


@dataclass
class CriticalRegion:
    """Union of coordinate bands [a, b] x T^(s_i - 1) inside one fiber block."""

    block_index: int
    bands: list = field(default_factory=list)
    coordinate_index: int = 0

    def __post_init__(self):
        self.bands = _normalize_bands(self.bands) if self.bands else []

    @property
    def length(self) -> float:
        return float(sum(b - a for a, b in self.bands))

    def contains_coord(self, x) -> np.ndarray:
        """Membership of the designated coordinate value(s); batched."""
        x = np.asarray(x, dtype=float) % TWO_PI
        out = np.zeros(np.shape(x), dtype=bool)
        for a, b in self.bands:
            out |= (x >= a) & (x <= b)
        return out

    def complement_intervals(self) -> list[tuple[float, float]]:
        """Circular complement of the bands; the last gap may wrap past 2*pi."""
        if not self.bands:
            return [(0.0, TWO_PI)]
        out = []
        for i, (_, b) in enumerate(self.bands):
            last = i + 1 == len(self.bands)
            a_next = self.bands[0][0] + TWO_PI if last else self.bands[i + 1][0]
            if a_next > b:
                out.append((b, a_next))
        return out


def standard_critical_region(r: float, block_index: int = 0,
                             coordinate_index: int = 0) -> CriticalRegion:
    """Bands around x = pi/2 and 3*pi/2 where |cos x| <= 1/sqrt(r).

    Band edges: b1 = arccos(1/sqrt(r)), b2 = arccos(-1/sqrt(r)),
    b3 = 2*pi - b2, b4 = 2*pi - b1; total length 2*(b2 - b1), and it is
    bounded by 8/sqrt(r).
    """
    if r <= 1:
        raise ValueError("r must exceed 1")
    b1 = float(np.arccos(1.0 / np.sqrt(r)))
    b2 = float(np.arccos(-1.0 / np.sqrt(r)))
    return CriticalRegion(block_index=block_index,
                          bands=[(b1, b2), (TWO_PI - b2, TWO_PI - b1)],
                          coordinate_index=coordinate_index)


def delta_cone(r: float, dim: int = 2, axis_index: int = 0) -> Cone:
    """Expanding cone {(1, n): |n| <= r^(1/4)} around the block's first axis."""
    if r <= 0:
        raise ValueError("r must be positive")
    return axis_cone(dim, axis_index, float(r) ** 0.25)
