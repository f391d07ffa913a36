"""Fiber maps and skew products.

All fiber maps act on T^d with circumference 2*pi, evaluate on (N, d)
batches, and expose analytic Jacobians, closed-form inverses and sup-norm
derivative bounds.  Kick amplitudes written with the family parameter r are
quantized to floor(r), matching the derivative formulas; real-valued
amplitudes (coupling strengths, potential coefficients) stay real.

Skew products couple an integer toral automorphism base to a fiber map
through the projection kick phi(x) = first coordinate of A^kick_iterates x,
replicated into the first coordinate of each designated fiber block.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from skewlab.torus import TWO_PI, ToralAutomorphism, iterate_batch, mod_angles


@dataclass
class FiberMap:
    """Evaluatable conservative map of T^d with block structure.

    `eval_fn(points, reduce)` maps (N, d) -> (N, d); with reduce=False the
    lift to R^d is returned (needed for finite differencing across the cut).
    `jacobian_fn(points)` returns (N, d, d).  `depends_on[i]` lists the
    input coordinates the block-i Jacobian actually depends on; hypothesis
    grids are restricted to those coordinates.
    """

    name: str
    dim: int
    block_sizes: tuple
    eval_fn: Callable
    jacobian_fn: Callable
    inverse_fn: Callable | None = None
    inverse_jacobian_fn: Callable | None = None
    norm_bounds: dict = field(default_factory=dict)
    depends_on: tuple = ()
    params: dict = field(default_factory=dict)
    factors: dict = field(default_factory=dict)

    def __post_init__(self):
        if sum(self.block_sizes) != self.dim:
            raise ValueError("block sizes must sum to the dimension")

    def __call__(self, pts: np.ndarray, reduce: bool = True) -> np.ndarray:
        return self.eval_fn(np.atleast_2d(np.asarray(pts, dtype=float)), reduce)

    def jacobian(self, pts: np.ndarray) -> np.ndarray:
        return self.jacobian_fn(np.atleast_2d(np.asarray(pts, dtype=float)))

    def inverse(self, pts: np.ndarray) -> np.ndarray:
        if self.inverse_fn is None:
            raise ValueError(f"{self.name} has no inverse")
        return self.inverse_fn(np.atleast_2d(np.asarray(pts, dtype=float)))

    def inverse_jacobian(self, pts: np.ndarray) -> np.ndarray:
        """Jacobian of the inverse map at the given (image) points."""
        if self.inverse_jacobian_fn is not None:
            return self.inverse_jacobian_fn(np.atleast_2d(np.asarray(pts, dtype=float)))
        pre = self.inverse(pts)
        return np.linalg.inv(self.jacobian(pre))

    def block_slices(self) -> list[slice]:
        out, off = [], 0
        for s in self.block_sizes:
            out.append(slice(off, off + s))
            off += s
        return out


def _mod(pts: np.ndarray, reduce: bool) -> np.ndarray:
    return pts % TWO_PI if reduce else pts


def standard_map(r: float) -> FiberMap:
    """Chirikov standard family (x, y) -> (2x - y + [r] sin x, x) on T^2.

    Jacobian [[2 + [r] cos x, -1], [1, 0]], determinant 1.  The inverse is
    (X, Y) -> (Y, 2Y - X + [r] sin Y).
    """
    if r < 0:
        raise ValueError("kick strength must be nonnegative")
    rf = float(np.floor(r))

    def ev(p, reduce=True):
        x, y = p[:, 0], p[:, 1]
        return _mod(np.stack([2 * x - y + rf * np.sin(x), x], -1), reduce)

    def jac(p):
        om = 2 + rf * np.cos(p[:, 0])
        J = np.zeros((len(p), 2, 2))
        J[:, 0, 0] = om
        J[:, 0, 1] = -1.0
        J[:, 1, 0] = 1.0
        return J

    def inv(p):
        X, Y = p[:, 0], p[:, 1]
        return np.stack([Y % TWO_PI, (2 * Y - X + rf * np.sin(Y)) % TWO_PI], -1)

    def invjac(p):
        om = 2 + rf * np.cos(p[:, 1])
        J = np.zeros((len(p), 2, 2))
        J[:, 0, 1] = 1.0
        J[:, 1, 0] = -1.0
        J[:, 1, 1] = om
        return J

    return FiberMap(
        name="standard", dim=2, block_sizes=(2,),
        eval_fn=ev, jacobian_fn=jac, inverse_fn=inv, inverse_jacobian_fn=invjac,
        norm_bounds={"dS": rf + 3.0, "dS_inv": rf + 3.0, "d2S": rf},
        depends_on=((0,),),
        params={"r": r,
                "omega_profiles": [{"amp": rf, "offset": 2.0, "pad": 0.0}],
                "block_structure": "diagonal"},
    )


def _involution_J(rf: float):
    def J(p, reduce=True):
        x, y, z, w = p.T
        return _mod(np.stack([x, 2 * x - y + rf * np.sin(x),
                              z, 2 * z - w + rf * np.sin(z)], -1), reduce)
    return J


def _swap_R(p, reduce=True):
    x, y, z, w = p.T
    out = np.stack([y, x, w, z], -1)
    return _mod(out, reduce)


def _shear_T(tau: float):
    def T(p, reduce=True):
        x, y, z, w = p.T
        s = tau * np.sin(y + w)
        return _mod(np.stack([x + s, y, z + s, w], -1), reduce)
    return T


def coupled_p(r: float, tau: float) -> FiberMap:
    """Two standard maps coupled through a sin(x + z) kick on T^4.

    Factorizes as T_tau o R o J_r with J_r, R involutions and
    T_tau^(-1) = T_(-tau); the inverse is J_r o R o T_(-tau).
    """
    if r < 0 or not (0 <= tau < 1):
        raise ValueError("need r >= 0 and 0 <= tau < 1")
    rf = float(np.floor(r))
    Jr, R, Tt, Tm = _involution_J(rf), _swap_R, _shear_T(tau), _shear_T(-tau)

    def ev(p, reduce=True):
        x, y, z, w = p.T
        s = tau * np.sin(x + z)
        return _mod(np.stack([2 * x - y + rf * np.sin(x) + s, x,
                              2 * z - w + rf * np.sin(z) + s, z], -1), reduce)

    def jac(p):
        x, z = p[:, 0], p[:, 2]
        c = tau * np.cos(x + z)
        J = np.zeros((len(p), 4, 4))
        J[:, 0, 0] = 2 + rf * np.cos(x) + c
        J[:, 0, 1] = -1.0
        J[:, 0, 2] = c
        J[:, 1, 0] = 1.0
        J[:, 2, 0] = c
        J[:, 2, 2] = 2 + rf * np.cos(z) + c
        J[:, 2, 3] = -1.0
        J[:, 3, 2] = 1.0
        return J

    def inv(p, reduce=True):
        return _mod(Jr(R(Tm(p, False), False), False), reduce)

    return FiberMap(
        name="coupled_p", dim=4, block_sizes=(2, 2),
        eval_fn=ev, jacobian_fn=jac, inverse_fn=inv,
        norm_bounds={"dS": rf + 3.0 + 2 * tau, "dS_inv": rf + 3.0 + 2 * tau,
                     "d2S": rf + 2 * tau},
        depends_on=((0, 2), (0, 2)),
        params={"r": r, "tau": tau,
                "omega_profiles": [{"amp": rf, "offset": 2.0, "pad": tau},
                                   {"amp": rf, "offset": 2.0, "pad": tau}],
                "block_structure": "diagonal" if tau == 0 else "coupled"},
        factors={"J": Jr, "R": R, "T": Tt, "T_inv": Tm},
    )


def _translate_E(p, reduce=True):
    # adds the pre-swap x (sitting in coordinate 2 after R o J) to block 2
    x, y, z, w = p.T
    return _mod(np.stack([x, y, z + y, w], -1), reduce)


def _translate_E_inv(p, reduce=True):
    x, y, z, w = p.T
    return _mod(np.stack([x, y, z - y, w], -1), reduce)


def coupled_q(r: float) -> FiberMap:
    """Translation-coupled pair (s_r(x,y), s_r(z,w) + (x, 0)) on T^4.

    Factorizes as E o R o J_r where E translates block 2 by the original
    first coordinate (which R o J_r leaves in position 2).
    """
    if r < 0:
        raise ValueError("kick strength must be nonnegative")
    rf = float(np.floor(r))
    Jr, R = _involution_J(rf), _swap_R

    def ev(p, reduce=True):
        x, y, z, w = p.T
        return _mod(np.stack([2 * x - y + rf * np.sin(x), x,
                              2 * z - w + rf * np.sin(z) + x, z], -1), reduce)

    def jac(p):
        x, z = p[:, 0], p[:, 2]
        J = np.zeros((len(p), 4, 4))
        J[:, 0, 0] = 2 + rf * np.cos(x)
        J[:, 0, 1] = -1.0
        J[:, 1, 0] = 1.0
        J[:, 2, 0] = 1.0
        J[:, 2, 2] = 2 + rf * np.cos(z)
        J[:, 2, 3] = -1.0
        J[:, 3, 2] = 1.0
        return J

    def inv(p, reduce=True):
        return _mod(Jr(R(_translate_E_inv(p, False), False), False), reduce)

    return FiberMap(
        name="coupled_q", dim=4, block_sizes=(2, 2),
        eval_fn=ev, jacobian_fn=jac, inverse_fn=inv,
        norm_bounds={"dS": rf + 4.0, "dS_inv": rf + 4.0, "d2S": rf},
        depends_on=((0,), (0, 2)),
        params={"r": r,
                "omega_profiles": [{"amp": rf, "offset": 2.0, "pad": 0.0},
                                   {"amp": rf, "offset": 2.0, "pad": 0.0}],
                "block_structure": "lower_triangular"},
        factors={"J": Jr, "R": R, "E": _translate_E, "E_inv": _translate_E_inv},
    )


def froeschle(tau1: float, tau2: float, tau3: float) -> FiberMap:
    """Twist map of the three-cosine potential, in block coordinates.

    The phase space is ordered (q1, p1, q2, p2) so that the two standard-
    map-like degrees of freedom occupy contiguous blocks; with tau3 = 0 the
    map decouples into two independent twist maps of kick -tau_i sin(q_i).
    """
    def grad(q1, q2):
        g1 = -tau1 * np.sin(q1) - tau3 * np.sin(q1 + q2)
        g2 = -tau2 * np.sin(q2) - tau3 * np.sin(q1 + q2)
        return g1, g2

    def ev(p, reduce=True):
        q1, p1, q2, p2 = p.T
        g1, g2 = grad(q1, q2)
        return _mod(np.stack([2 * q1 - p1 + g1, q1, 2 * q2 - p2 + g2, q2], -1), reduce)

    def jac(p):
        q1, q2 = p[:, 0], p[:, 2]
        h11 = -tau1 * np.cos(q1) - tau3 * np.cos(q1 + q2)
        h22 = -tau2 * np.cos(q2) - tau3 * np.cos(q1 + q2)
        h12 = -tau3 * np.cos(q1 + q2)
        J = np.zeros((len(p), 4, 4))
        J[:, 0, 0] = 2 + h11
        J[:, 0, 1] = -1.0
        J[:, 0, 2] = h12
        J[:, 1, 0] = 1.0
        J[:, 2, 0] = h12
        J[:, 2, 2] = 2 + h22
        J[:, 2, 3] = -1.0
        J[:, 3, 2] = 1.0
        return J

    def inv(p, reduce=True):
        Q1, P1, Q2, P2 = p.T
        g1, g2 = grad(P1, P2)
        return _mod(np.stack([P1, 2 * P1 - Q1 + g1, P2, 2 * P2 - Q2 + g2], -1), reduce)

    a = abs(tau1) + abs(tau3)
    b = abs(tau2) + abs(tau3)
    return FiberMap(
        name="froeschle", dim=4, block_sizes=(2, 2),
        eval_fn=ev, jacobian_fn=jac, inverse_fn=inv,
        norm_bounds={"dS": 3.0 + a + b, "dS_inv": 3.0 + a + b, "d2S": a + b},
        depends_on=((0, 2), (0, 2)),
        params={"tau1": tau1, "tau2": tau2, "tau3": tau3,
                "omega_profiles": [
                    {"amp": -tau1, "offset": 2.0, "pad": abs(tau3)},
                    {"amp": -tau2, "offset": 2.0, "pad": abs(tau3)}],
                "block_structure": "diagonal" if tau3 == 0 else "coupled"},
    )


def generic_twist(potential_grad: Callable, d: int, name: str = "twist",
                  grad_bound: float = 0.0, hess_bound: float = 0.0) -> FiberMap:
    """Twist map (q, p) -> (2q - p + grad V(q), q) on T^(2d).

    `potential_grad(q)` maps (N, d) -> (N, d) and must be 2*pi-periodic.
    The Jacobian's Hessian block is obtained by central differences unless
    an analytic `hessian` attribute is attached to the gradient callable.
    """
    def ev(p, reduce=True):
        q, mom = p[:, :d], p[:, d:]
        g = potential_grad(q)
        return _mod(np.concatenate([2 * q - mom + g, q], -1), reduce)

    hess = getattr(potential_grad, "hessian", None)

    def jac(p):
        q = p[:, :d]
        if hess is not None:
            H = hess(q)
        else:
            h = 1e-6
            H = np.zeros((len(p), d, d))
            for j in range(d):
                dq = np.zeros(d)
                dq[j] = h
                H[:, :, j] = (potential_grad(q + dq) - potential_grad(q - dq)) / (2 * h)
        J = np.zeros((len(p), 2 * d, 2 * d))
        J[:, :d, :d] = 2 * np.eye(d) + H
        J[:, :d, d:] = -np.eye(d)
        J[:, d:, :d] = np.eye(d)
        return J

    def inv(p, reduce=True):
        Q, P = p[:, :d], p[:, d:]
        return _mod(np.concatenate([P, 2 * P - Q + potential_grad(P)], -1), reduce)

    return FiberMap(
        name=name, dim=2 * d, block_sizes=(2 * d,),
        eval_fn=ev, jacobian_fn=jac, inverse_fn=inv,
        norm_bounds={"dS": 3.0 + grad_bound, "dS_inv": 3.0 + grad_bound,
                     "d2S": hess_bound},
        depends_on=(tuple(range(d)),),
    )


def identity_fiber(d: int = 2) -> FiberMap:
    """Identity map of T^d; the degenerate reference fiber."""
    def ev(p, reduce=True):
        return _mod(p.copy(), reduce)

    def jac(p):
        return np.tile(np.eye(d), (len(p), 1, 1))

    return FiberMap(name="identity", dim=d, block_sizes=(d,),
                    eval_fn=ev, jacobian_fn=jac, inverse_fn=ev,
                    inverse_jacobian_fn=jac,
                    norm_bounds={"dS": 1.0, "dS_inv": 1.0, "d2S": 0.0})


@dataclass
class SkewProduct:
    """f(x, y) = (A^L x, S(y) + phi(x)), phi = per-block replicated projection.

    `kick_blocks` lists the fiber blocks receiving the kick (all by
    default); the kick value is the first coordinate of A^l x, written into
    the first coordinate of each receiving block.  The derivative is block
    lower-triangular; the inverse is evaluated in fibered closed form.
    """

    base: ToralAutomorphism
    base_iterates: int
    kick_iterates: int
    fiber: FiberMap
    kick_blocks: tuple | None = None
    kick_coordinate: int = 0

    def __post_init__(self):
        if self.base_iterates < 1:
            raise ValueError("base_iterates must be positive")
        if self.kick_iterates < 0:
            raise ValueError("kick_iterates must be nonnegative")
        if self.kick_blocks is None:
            self.kick_blocks = tuple(range(len(self.fiber.block_sizes)))
        if self.kick_coordinate >= self.base.dim:
            raise ValueError("kick coordinate outside the base torus")
        # tangent pushes use the dense powers (no mod applies to vectors);
        # point orbits are always iterated with mod reduction per step
        self._AL = np.linalg.matrix_power(self.base.matrix, self.base_iterates).astype(float)
        self._Al = np.linalg.matrix_power(self.base.matrix, self.kick_iterates).astype(float)
        sl = self.fiber.block_slices()
        self._kick_rows = tuple(sl[b].start for b in self.kick_blocks)

    @property
    def dim(self) -> int:
        return self.base.dim + self.fiber.dim

    @property
    def base_dim(self) -> int:
        return self.base.dim

    def split(self, pts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        return pts[:, : self.base_dim], pts[:, self.base_dim:]

    def kick(self, base_pts: np.ndarray) -> np.ndarray:
        """phi(x) as an (N, d) fiber translation, reduced mod 2*pi."""
        base_pts = np.atleast_2d(np.asarray(base_pts, dtype=float))
        c = iterate_batch(self.base.matrix, self.kick_iterates,
                          base_pts)[:, self.kick_coordinate]
        out = np.zeros((len(base_pts), self.fiber.dim))
        for row in self._kick_rows:
            out[:, row] = c
        return out

    def kick_matrix(self) -> np.ndarray:
        """The constant d x l derivative of phi."""
        D = np.zeros((self.fiber.dim, self.base_dim))
        for row in self._kick_rows:
            D[row, :] = self._Al[self.kick_coordinate, :]
        return D

    def __call__(self, pts: np.ndarray) -> np.ndarray:
        x, y = self.split(pts)
        xb = iterate_batch(self.base.matrix, self.base_iterates, x)
        yb = (self.fiber(y) + self.kick(x)) % TWO_PI
        return np.concatenate([xb, yb], axis=1)

    def inverse(self, pts: np.ndarray) -> np.ndarray:
        x, y = self.split(pts)
        xp = iterate_batch(self.base.inverse_matrix, self.base_iterates, x)
        yp = self.fiber.inverse((y - self.kick(xp)) % TWO_PI)
        return np.concatenate([xp, yp], axis=1)

    def jacobian(self, pts: np.ndarray) -> np.ndarray:
        x, y = self.split(pts)
        n, l, d = len(x), self.base_dim, self.fiber.dim
        J = np.zeros((n, l + d, l + d))
        J[:, :l, :l] = self._AL
        J[:, l:, :l] = self.kick_matrix()
        J[:, l:, l:] = self.fiber.jacobian(y)
        return J

    def push_tangent(self, pts: np.ndarray, vecs: np.ndarray) -> np.ndarray:
        """Apply the derivative without assembling full Jacobian matrices."""
        x, y = self.split(pts)
        vb, vf = self.split(vecs)
        nb = vb @ self._AL.T
        c = (vb @ self._Al.T)[:, self.kick_coordinate]
        Jf = self.fiber.jacobian(y)
        nf = np.einsum("nij,nj->ni", Jf, vf)
        for row in self._kick_rows:
            nf[:, row] += c
        return np.concatenate([nb, nf], axis=1)

    def fiber_jacobian(self, pts: np.ndarray) -> np.ndarray:
        _, y = self.split(pts)
        return self.fiber.jacobian(y)

    def orbit(self, p0: np.ndarray, n: int) -> np.ndarray:
        """Forward orbit (n + 1, dim) starting at p0."""
        out = np.empty((n + 1, self.dim))
        out[0] = np.atleast_2d(p0)[0]
        cur = out[0][None, :]
        for i in range(n):
            cur = self(cur)
            out[i + 1] = cur[0]
        return out


def build_skew(base: ToralAutomorphism, base_iterates: int, kick_iterates: int,
               fiber: FiberMap, kick_blocks: tuple | None = None,
               kick_coordinate: int = 0) -> SkewProduct:
    """Assemble a skew product after validating shape compatibility."""
    skew = SkewProduct(base, base_iterates, kick_iterates, fiber,
                       kick_blocks, kick_coordinate)
    return skew


def cat_map() -> ToralAutomorphism:
    return ToralAutomorphism(np.array([[2, 1], [1, 1]]))


def block_cat_B() -> ToralAutomorphism:
    """The 4x4 upper block-triangular automorphism [[A, I], [0, A]]."""
    A = np.array([[2, 1], [1, 1]])
    Z = np.zeros((2, 2), dtype=int)
    return ToralAutomorphism(np.block([[A, np.eye(2, dtype=int)], [Z, A]]))


# ---------------------------------------------------------------------------
# reversibility conjugacies
# ---------------------------------------------------------------------------

@dataclass
class ConjugacyPair:
    """A fibered conjugacy Gamma together with its inverse and the map it
    conjugates the inverse dynamics to (in closed form)."""

    name: str
    gamma: Callable
    gamma_inv: Callable
    conjugated: Callable | None = None
    coupling_sup: float | None = None


def reversibility_conjugacies(family: str, base: ToralAutomorphism | None = None,
                              base_iterates: int | None = None,
                              kick_iterates: int | None = None,
                              r: float = 10.0, tau: float = 0.01) -> ConjugacyPair:
    """Conjugacies exhibiting reversibility of the coupled families.

    family 'p': fiber-level Gamma = T_tau o R with
        Gamma^(-1) o p^(-1) o Gamma = (s_r x s_r) - tau sin(Theta0) (0,1,0,1),
        Theta0 = 2(x+z) - (y+w) + [r](sin x + sin z).
    family 'q': fiber-level Gamma = R with R o q^(-1) o R = q (q is reversible).
    family 'g': full-skew Gamma_tau(m, v) = (m, T_tau R v); the conjugated
        map has the same skew form over the inverse base with coupling term
        -tau sin(Theta0 + 2 c(m)) in the second coordinate of each block,
        where c(m) is the inverse-kick value.  (The base-dependent phase
        2 c(m) is required for the identity to hold exactly.)
    family 'h': Gamma_hat(m, v) = (m, R v) conjugates h^(-1) to the skew
        product of the inverse base with the unchanged fiber q_r.
    """
    rf = float(np.floor(r))
    if family == "p":
        p = coupled_p(r, tau)
        Tt, R = p.factors["T"], p.factors["R"]

        def gam(v):
            return Tt(R(np.atleast_2d(v)))

        def gam_inv(v):
            return _swap_R(_shear_T(-tau)(np.atleast_2d(v), False))

        def phat(v):
            v = np.atleast_2d(np.asarray(v, dtype=float))
            x, y, z, w = v.T
            th = 2 * (x + z) - (y + w) + rf * (np.sin(x) + np.sin(z))
            s = tau * np.sin(th)
            return np.stack([2 * x - y + rf * np.sin(x), x - s,
                             2 * z - w + rf * np.sin(z), z - s], -1) % TWO_PI

        return ConjugacyPair("p", gam, gam_inv, phat, coupling_sup=tau * np.sqrt(2))

    if family == "q":
        def gam(v):
            return _swap_R(np.atleast_2d(v))

        q = coupled_q(r)

        def qhat(v):
            return q(np.atleast_2d(v))

        return ConjugacyPair("q", gam, gam, qhat)

    if family in ("g", "h"):
        if base is None:
            base = block_cat_B()
        L = base_iterates if base_iterates is not None else 2 * int(np.floor(r))
        l = kick_iterates if kick_iterates is not None else int(np.floor(r))
        fiber = coupled_p(r, tau) if family == "g" else coupled_q(r)
        skew = build_skew(base, L, l, fiber)
        bd = base.dim

        def inv_kick_value(m):
            mp = iterate_batch(base.inverse_matrix, l, m)
            return mp[:, skew.kick_coordinate]

        if family == "g":
            def gam(mv):
                mv = np.atleast_2d(mv)
                m, v = mv[:, :bd], mv[:, bd:]
                return np.concatenate([m, _shear_T(tau)(_swap_R(v, False))], axis=1)

            def gam_inv(mv):
                mv = np.atleast_2d(mv)
                m, v = mv[:, :bd], mv[:, bd:]
                return np.concatenate([m, _swap_R(_shear_T(-tau)(v, False))], axis=1)

            def ghat(mv):
                mv = np.atleast_2d(np.asarray(mv, dtype=float))
                m, v = mv[:, :bd], mv[:, bd:]
                mp = iterate_batch(base.inverse_matrix, L, m)
                c = inv_kick_value(m)
                x, y, z, w = v.T
                th = 2 * (x + z) - (y + w) + rf * (np.sin(x) + np.sin(z)) + 2 * c
                s = tau * np.sin(th)
                fib = np.stack([2 * x - y + rf * np.sin(x) + c, x - s,
                                2 * z - w + rf * np.sin(z) + c, z - s], -1) % TWO_PI
                return np.concatenate([mp, fib], axis=1)

            return ConjugacyPair("g", gam, gam_inv, ghat,
                                 coupling_sup=tau * np.sqrt(2))

        def gam_hat(mv):
            mv = np.atleast_2d(mv)
            m, v = mv[:, :bd], mv[:, bd:]
            return np.concatenate([m, _swap_R(v)], axis=1)

        def hhat(mv):
            mv = np.atleast_2d(np.asarray(mv, dtype=float))
            m, v = mv[:, :bd], mv[:, bd:]
            mp = iterate_batch(base.inverse_matrix, L, m)
            c = inv_kick_value(m)
            fib = fiber(v)
            fib[:, 0] = (fib[:, 0] + c) % TWO_PI
            fib[:, 2] = (fib[:, 2] + c) % TWO_PI
            return np.concatenate([mp, fib], axis=1)

        return ConjugacyPair("h", gam_hat, gam_hat, hhat)

    raise ValueError(f"unknown family {family!r}")


MAP_FAMILIES = {
    "standard": lambda **kw: standard_map(kw["r"]),
    "coupled_p": lambda **kw: coupled_p(kw["r"], kw.get("tau", 0.0)),
    "coupled_q": lambda **kw: coupled_q(kw["r"]),
    "froeschle": lambda **kw: froeschle(kw["tau1"], kw["tau2"], kw["tau3"]),
    "identity": lambda **kw: identity_fiber(int(kw.get("d", 2))),
}


def make_fiber(family: str, **params) -> FiberMap:
    """Catalog lookup by family name and parameters."""
    if family not in MAP_FAMILIES:
        raise ValueError(f"unknown map family {family!r}; "
                         f"choose from {sorted(MAP_FAMILIES)}")
    return MAP_FAMILIES[family](**params)
