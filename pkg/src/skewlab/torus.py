"""Torus arithmetic and linear base dynamics.

Points live on T^n with circumference 2*pi per coordinate.  Base maps are
integer matrices in GL(n, Z); their hyperbolic splittings are computed by
an ordered real Schur decomposition, so defective (non-diagonalizable)
automorphisms are handled as well.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import schur

TWO_PI = 2.0 * np.pi


class NotHyperbolic(ValueError):
    """Raised when a matrix has an eigenvalue on the unit circle."""


def reduce_mod_torus(v) -> "TorusVector":
    """Reduce a raw real vector componentwise mod 2*pi into [0, 2*pi).

    Rejects non-finite input.  Additive homomorphism: reduce(a + b) equals
    reduce(reduce(a) + reduce(b)).
    """
    arr = np.asarray(v, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError("non-finite coordinates cannot be reduced to the torus")
    return TorusVector(arr % TWO_PI)


def mod_angles(arr: np.ndarray) -> np.ndarray:
    """Componentwise reduction of an array of angles into [0, 2*pi)."""
    return np.asarray(arr, dtype=float) % TWO_PI


def angle_dist(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Componentwise distance on the circle of circumference 2*pi."""
    d = np.abs(np.asarray(a) - np.asarray(b)) % TWO_PI
    return np.minimum(d, TWO_PI - d)


@dataclass(frozen=True)
class TorusVector:
    """A point on T^n; every coordinate is kept in [0, 2*pi)."""

    coords: np.ndarray

    def __post_init__(self):
        arr = np.atleast_1d(np.asarray(self.coords, dtype=float))
        if not np.all(np.isfinite(arr)):
            raise ValueError("non-finite coordinates")
        object.__setattr__(self, "coords", arr % TWO_PI)

    @property
    def dim(self) -> int:
        return self.coords.shape[-1]

    def __add__(self, other) -> "TorusVector":
        other = other.coords if isinstance(other, TorusVector) else np.asarray(other)
        return TorusVector(self.coords + other)

    def __array__(self, dtype=None, copy=None):
        arr = self.coords
        if dtype is not None:
            arr = arr.astype(dtype)
        return np.array(arr, copy=True) if copy in (None, True) else arr

    def isclose(self, other, tol: float = 1e-9) -> bool:
        other = other.coords if isinstance(other, TorusVector) else np.asarray(other)
        return bool(np.all(angle_dist(self.coords, other) <= tol))


@dataclass(frozen=True)
class Splitting:
    """Invariant expanding/contracting subspaces of a hyperbolic matrix.

    Bases are orthonormal per subspace (columns).  `unstable_rate` is the
    one-step co-norm m(A|E^u) and `stable_rate` the one-step norm
    ||A|E^s||; `unstable_norm` is ||A|E^u||.  For defective restrictions
    the one-step rates differ from the spectral rates, which are stored
    separately.
    """

    unstable_basis: np.ndarray
    stable_basis: np.ndarray
    unstable_rate: float      # m(A|E^u), one step
    unstable_norm: float      # ||A|E^u||, one step
    stable_rate: float        # ||A|E^s||, one step
    stable_conorm: float      # m(A|E^s), one step
    spectral_unstable: float  # min |eigenvalue| over the unstable spectrum
    spectral_stable: float    # max |eigenvalue| over the stable spectrum

    @property
    def dim_unstable(self) -> int:
        return self.unstable_basis.shape[1]

    @property
    def dim_stable(self) -> int:
        return self.stable_basis.shape[1]


def _ordered_invariant_subspace(M: np.ndarray, expanding: bool) -> np.ndarray:
    sort = (lambda re, im: np.hypot(re, im) > 1.0) if expanding else (
        lambda re, im: np.hypot(re, im) < 1.0)
    _, Z, sdim = schur(M.astype(float), output="real", sort=sort)
    return Z[:, :sdim]


def hyperbolic_splitting(A: "ToralAutomorphism | np.ndarray",
                         tol: float = 1e-9) -> Splitting:
    """Invariant expanding/contracting splitting of a hyperbolic matrix.

    Raises NotHyperbolic when any eigenvalue has modulus within `tol`
    of the unit circle.  The returned bases satisfy the invariance
    contract ||A u - proj(A u)|| <= 1e-10 for u in either subspace.
    """
    M = A.matrix if isinstance(A, ToralAutomorphism) else np.asarray(A)
    M = M.astype(float)
    eig = np.linalg.eigvals(M)
    moduli = np.abs(eig)
    if np.any(np.abs(moduli - 1.0) <= tol):
        raise NotHyperbolic(f"eigenvalue moduli {np.sort(moduli)} touch the unit circle")
    Eu = _ordered_invariant_subspace(M, expanding=True)
    Es = _ordered_invariant_subspace(M, expanding=False)
    Ru = Eu.T @ M @ Eu
    Rs = Es.T @ M @ Es
    su = np.linalg.svd(Ru, compute_uv=False)
    ss = np.linalg.svd(Rs, compute_uv=False)
    return Splitting(
        unstable_basis=Eu,
        stable_basis=Es,
        unstable_rate=float(su[-1]),
        unstable_norm=float(su[0]),
        stable_rate=float(ss[0]),
        stable_conorm=float(ss[-1]),
        spectral_unstable=float(moduli[moduli > 1].min()),
        spectral_stable=float(moduli[moduli < 1].max()),
    )


@dataclass
class ToralAutomorphism:
    """Integer lattice automorphism of T^n (|det| = 1).

    The hyperbolic splitting is computed lazily.  `lam` / `tau` are the
    one-step expansion co-norm and contraction norm of the restriction to
    the invariant subspaces.
    """

    matrix: np.ndarray
    _splitting: Splitting | None = field(default=None, repr=False)

    def __post_init__(self):
        M = np.asarray(self.matrix)
        if not np.allclose(M, np.round(M)):
            raise ValueError("entries must be integers")
        M = np.round(M).astype(np.int64)
        det = int(round(np.linalg.det(M.astype(float))))
        if abs(det) != 1:
            raise ValueError(f"|det| must be 1, got {det}")
        self.matrix = M

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def inverse_matrix(self) -> np.ndarray:
        inv = np.linalg.inv(self.matrix.astype(float))
        inv_int = np.round(inv).astype(np.int64)
        if not np.allclose(self.matrix @ inv_int, np.eye(self.dim)):
            raise ValueError("inverse is not integral")
        return inv_int

    @property
    def splitting(self) -> Splitting:
        if self._splitting is None:
            self._splitting = hyperbolic_splitting(self.matrix)
        return self._splitting

    @property
    def lam(self) -> float:
        return self.splitting.unstable_rate

    @property
    def tau(self) -> float:
        return self.splitting.stable_rate

    def conformal_flags(self, tol: float = 1e-9) -> dict:
        s = self.splitting
        mu = s.unstable_norm - s.unstable_rate
        ms = s.stable_rate - s.stable_conorm
        return {
            "conformal_u": bool(mu <= tol),
            "conformal_s": bool(ms <= tol),
            "margin_u": float(mu),
            "margin_s": float(ms),
        }

    def apply(self, pts: np.ndarray) -> np.ndarray:
        """One application, mod 2*pi.  Accepts (n,) or (N, n) arrays."""
        pts = np.asarray(pts, dtype=float)
        return (pts @ self.matrix.T.astype(float)) % TWO_PI

    def apply_inverse(self, pts: np.ndarray) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        return (pts @ self.inverse_matrix.T.astype(float)) % TWO_PI


def is_u_conformal(A: ToralAutomorphism, tol: float = 1e-9,
                   iterates: int = 1) -> tuple[bool, float]:
    """Whether ||A^k|E^u||^(1/k) and m(A^k|E^u)^(1/k) agree within tol.

    With iterates=1 this is the literal one-step conformality test.  For
    defective unstable blocks the one-step margin is bounded away from 0
    while the k-step normalized margin decays (conformality only holds at
    the level of asymptotic rates); larger `iterates` expose that trend.
    Returns (verdict, margin).
    """
    s = A.splitting
    if iterates == 1:
        margin = s.unstable_norm - s.unstable_rate
    else:
        Mk = np.linalg.matrix_power(A.matrix.astype(float), iterates)
        R = s.unstable_basis.T @ Mk @ s.unstable_basis
        sv = np.linalg.svd(R, compute_uv=False)
        margin = float(sv[0] ** (1.0 / iterates) - sv[-1] ** (1.0 / iterates))
    return bool(margin <= tol), float(margin)


def apply_iterated(A: ToralAutomorphism, k: int, x) -> TorusVector:
    """Apply A k times to a torus point, reducing mod 2*pi after each step.

    A^k is never formed as a matrix: its entries grow geometrically and the
    mod-reduced orbit is the numerically meaningful object.  Negative k
    iterates the (integral) inverse.
    """
    if not float(k).is_integer():
        raise ValueError("k must be an integer")
    k = int(k)
    pt = x.coords if isinstance(x, TorusVector) else np.asarray(x, dtype=float)
    pt = pt % TWO_PI
    M = A.matrix.astype(float) if k >= 0 else A.inverse_matrix.astype(float)
    for _ in range(abs(k)):
        pt = (pt @ M.T) % TWO_PI
    return TorusVector(pt)


def iterate_batch(matrix: np.ndarray, k: int, pts: np.ndarray) -> np.ndarray:
    """Batched mod-2*pi iteration of an integer matrix on (N, n) points."""
    M = np.asarray(matrix, dtype=float)
    out = np.asarray(pts, dtype=float) % TWO_PI
    for _ in range(k):
        out = (out @ M.T) % TWO_PI
    return out
