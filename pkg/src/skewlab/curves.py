"""Admissible curves, adapted fields, and the decomposition ledger.

An admissible curve is a long unstable segment reparametrized so the first
coordinate of a designated fiber block moves at unit speed, spanning one
full 2*pi turn.  Curves are built dynamically: a short seed segment along
the base unstable direction is pushed forward until its image reaches the
requested turn count; the pushed tangents converge into the unstable cone
at the domination rate.  Images of a curve decompose into full 2*pi pieces
plus one partial piece; the ledger classifies the pushed center field on
every piece and tracks the backward unstable Jacobian sums.

J^u along curves is always computed from forward tangent growth (backward
pushing mixes in backward-expanding directions and is numerically
unstable); expansion integrals use the turn parameter t in [0, 2*pi], so a
good field integrates to roughly (2*pi - crit length) * log(beta).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from skewlab.torus import TWO_PI
from skewlab.cones import Cone, CriticalRegion, cone_contains
from skewlab.maps import SkewProduct
from skewlab.hypotheses import NotDominated, xi_and_unstable_cone


def _trapz(y: np.ndarray, x: np.ndarray) -> float:
    return float(np.trapezoid(y, x))


def _wrap_diff(a: np.ndarray) -> np.ndarray:
    return (a + np.pi) % TWO_PI - np.pi


@dataclass
class AdmissibleCurve:
    """Sampled unstable curve with unit speed in the designated coordinate.

    `points` are (M, dim) samples, `tangents` the (M, dim) tangent vectors
    normalized so the designated fiber coordinate component is +1, and `t`
    the cumulative designated-coordinate displacement (0 to 2*pi).
    """

    block: int
    coord: int                 # absolute index of the designated coordinate
    points: np.ndarray
    tangents: np.ndarray
    t: np.ndarray
    xi: float
    meta: dict = field(default_factory=dict)

    @property
    def n_samples(self) -> int:
        return len(self.points)

    @property
    def speeds(self) -> np.ndarray:
        return np.linalg.norm(self.tangents, axis=1)

    def arclength(self, point_based: bool = True) -> float:
        if point_based:
            dp = _wrap_diff(np.diff(self.points, axis=0))
            return float(np.sqrt((dp ** 2).sum(axis=1)).sum())
        return _trapz(self.speeds, self.t)

    def turn(self) -> float:
        return float(self.t[-1])

    def max_speed_unit_check(self) -> float:
        """Max deviation of |P tangent| from 1 (0 by construction)."""
        return float(np.abs(np.abs(self.tangents[:, self.coord]) - 1.0).max())


@dataclass
class AdaptedField:
    """Unit vector field along a curve, tangent to one fiber block."""

    curve: AdmissibleCurve
    block: int
    vectors: np.ndarray        # (M, fiber_dim), unit rows
    holder: dict = field(default_factory=dict)


@dataclass
class Piece:
    index: int
    sl: slice                  # sample range inside the level arrays
    length: float              # arclength (tangent-based)
    min_ju: float
    max_ju: float
    classification: str = ""
    expansion: float = 0.0
    holder_measured: float = 0.0


@dataclass
class Level:
    k: int
    points: np.ndarray
    tangents: np.ndarray       # unit-P normalized
    ju: np.ndarray             # J^u_{f^{-k}} per sample
    t: np.ndarray              # cumulative designated displacement
    pieces: list
    partial: Piece | None


@dataclass
class DecompositionLedger:
    levels: dict = field(default_factory=dict)
    sums: dict = field(default_factory=dict)
    checks: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# unstable directions and curve growth
# ---------------------------------------------------------------------------

def _embedded_eu(skew: SkewProduct) -> np.ndarray:
    s = skew.base.splitting
    v = np.zeros(skew.dim)
    v[: skew.base_dim] = s.unstable_basis[:, 0]
    return v


def _push_tangents(skew: SkewProduct, pts, vecs, steps: int,
                   collect_growth: bool = False):
    """Push (points, tangents) forward; tangents renormalized per step."""
    logg = np.zeros(len(pts)) if collect_growth else None
    for _ in range(steps):
        new = skew.push_tangent(pts, vecs)
        nrm = np.linalg.norm(new, axis=1)
        if collect_growth:
            logg += np.log(nrm / np.linalg.norm(vecs, axis=1))
        vecs = new / nrm[:, None]
        pts = skew(pts)
    return pts, vecs, logg


def approximate_unstable_vector(skew: SkewProduct, m: np.ndarray,
                                k_back: int = 25) -> np.ndarray:
    """Unit unstable direction at m via cone-seeded forward iteration.

    Walks k_back steps backward, seeds the base unstable direction, and
    pushes forward with renormalization; the contamination of the seed
    contracts at the domination rate per step.  k_back = 0 returns the
    seed unchanged.  Raises NotDominated outside the cone regime.
    """
    check = xi_and_unstable_cone(skew, n_samples=8)
    if check["xi"] >= 1.0:
        raise NotDominated(f"xi = {check['xi']:.3g} >= 1")
    pts = np.atleast_2d(np.asarray(m, dtype=float))
    single = np.asarray(m).ndim == 1
    orbit = pts
    back = [orbit]
    for _ in range(k_back):
        orbit = skew.inverse(orbit)
        back.append(orbit)
    vecs = np.tile(_embedded_eu(skew), (len(pts), 1))
    for i in range(k_back, 0, -1):
        new = skew.push_tangent(back[i], vecs)
        vecs = new / np.linalg.norm(new, axis=1)[:, None]
    return vecs[0] if single else vecs


def grow_admissible_curve(skew: SkewProduct, start, block: int = 0, *,
                          n_samples: int = 400_000, target_turns: float = 3.0,
                          seed_size: float = 0.01, max_gap: float = 0.02,
                          max_retries: int = 2) -> AdmissibleCurve:
    """Grow the admissible curve through (a point near) `start`.

    A seed segment along the base unstable direction at a backward image of
    `start` is pushed forward; the number of pushes is chosen so the seed
    is short enough to be linear but long enough that its image makes
    `target_turns` turns of the designated coordinate.  The central 2*pi
    window is returned, reparametrized to unit designated-coordinate speed.

    Degenerate couplings (zero kick derivative on the unstable direction)
    are rejected; insufficient sampling density triggers refine-and-retry.
    """
    info = xi_and_unstable_cone(skew, n_samples=8)
    xi = info["xi"]
    if xi >= 1.0:
        raise NotDominated(f"xi = {xi:.3g} >= 1")
    s = skew.base.splitting
    lam_L = s.unstable_rate ** skew.base_iterates
    U = s.unstable_basis
    D = skew.kick_matrix()
    mphi = float(np.linalg.svd(D @ U, compute_uv=False)[-1])
    if mphi <= 0:
        raise ValueError("degenerate coupling: admissibility impossible")
    if block not in skew.kick_blocks:
        raise ValueError("designated block receives no kick")
    coord = skew.base_dim + skew.fiber.block_slices()[block].start

    target_plen = target_turns * TWO_PI
    # seed length needed after k pushes: delta * lam_L^k * (mphi / lam_L)
    k_grow = 1
    while seed_size * lam_L ** k_grow * (mphi / lam_L) < target_plen:
        k_grow += 1
    delta = target_plen / (mphi / lam_L) / lam_L ** k_grow
    for attempt in range(max_retries + 1):
        if delta / n_samples < 1e-14:
            raise ValueError("seed spacing below float resolution; "
                             "reduce target_turns or n_samples")
        p0 = np.atleast_2d(np.asarray(start, dtype=float))
        for _ in range(k_grow):
            p0 = skew.inverse(p0)
        offs = np.linspace(-delta / 2, delta / 2, n_samples)
        pts = (p0 + np.outer(offs, _embedded_eu(skew)))
        pts[:, : skew.base_dim] %= TWO_PI
        vecs = np.tile(_embedded_eu(skew), (n_samples, 1))
        pts, vecs, _ = _push_tangents(skew, pts, vecs, k_grow)
        d = _wrap_diff(np.diff(pts[:, coord]))
        if np.abs(d).max() <= max_gap and (np.all(d > 0) or np.all(d < 0)):
            break
        n_samples *= 2
    else:
        raise ValueError("could not reach required sampling density")
    cum = np.r_[0.0, np.cumsum(np.abs(d))]
    if cum[-1] < TWO_PI:
        raise ValueError("image too short for a full turn; increase target_turns")
    lo = cum[-1] / 2 - np.pi
    i0, i1 = np.searchsorted(cum, lo), np.searchsorted(cum, lo + TWO_PI)
    i1 = min(i1, len(pts) - 1)
    sign = np.sign(vecs[i0:i1 + 1, coord])
    tangents = vecs[i0:i1 + 1] * sign[:, None]
    tangents = tangents / tangents[:, coord][:, None]
    return AdmissibleCurve(
        block=block, coord=coord, points=pts[i0:i1 + 1], tangents=tangents,
        t=cum[i0:i1 + 1] - cum[i0], xi=xi,
        meta={"k_grow": k_grow, "seed_delta": float(delta),
              "n_samples": int(n_samples), "lam_L": float(lam_L),
              "m_phi_u": float(mphi), "start": list(np.atleast_1d(start))},
    )


def curve_in_cone(curve: AdmissibleCurve, skew: SkewProduct) -> dict:
    """Check tangents against the xi-cone (l1 splitting coefficients)."""
    s = skew.base.splitting
    l, d = skew.base_dim, skew.fiber.dim
    ku, ks = s.dim_unstable, s.dim_stable
    Bmat = np.zeros((skew.dim, skew.dim))
    Bmat[:l, :ku] = s.unstable_basis
    Bmat[:l, ku:ku + ks] = s.stable_basis
    Bmat[l:, ku + ks:] = np.eye(d)
    co = curve.tangents @ np.linalg.inv(Bmat).T
    uu = np.abs(co[:, :ku]).sum(axis=1)
    ee = np.abs(co[:, ku:]).sum(axis=1)
    ratio = ee / uu
    return {"max_ratio": float(ratio.max()), "xi": curve.xi,
            "inside": bool(np.all(ratio < curve.xi))}


def expected_length_window(skew: SkewProduct, K: float = 1.0,
                           slack: float = 0.35) -> tuple[float, float]:
    """Admissible-curve length window from the measured skew constants.

    Structure: 2*pi * lambda_L / ||dphi|Eu|| below, 2*pi * K * lambda_L /
    m(dphi|Eu) above, opened by `slack` to absorb the O(||dS||/lambda_L)
    corrections a finite domination margin produces.
    """
    s = skew.base.splitting
    lam_L = s.unstable_rate ** skew.base_iterates
    D = skew.kick_matrix()
    sv = np.linalg.svd(D @ s.unstable_basis, compute_uv=False)
    lo = TWO_PI * lam_L / sv[0] * (1 - slack) / K
    hi = TWO_PI * K * lam_L / sv[-1] * (1 + slack)
    return float(lo), float(hi)


# ---------------------------------------------------------------------------
# decomposition and fields
# ---------------------------------------------------------------------------

def decompose_image(skew: SkewProduct, curve: AdmissibleCurve, k: int, *,
                    max_gap: float = 0.35,
                    field_vectors: np.ndarray | None = None) -> Level | tuple:
    """Push the curve k steps and cut the image into 2*pi pieces.

    Per-sample J^u_{f^{-k}} is the reciprocal forward tangent growth; the
    final fragment is the partial piece.  If `field_vectors` is given, the
    normalized fiber push-forward is returned alongside.  k = 0 returns the
    curve itself as a single piece.  Raises when the image is undersampled
    (consecutive designated-coordinate gaps above `max_gap`).
    """
    if k == 0:
        lvl = Level(0, curve.points, curve.tangents,
                    np.ones(curve.n_samples), curve.t,
                    [Piece(0, slice(0, curve.n_samples),
                           curve.arclength(point_based=False), 1.0, 1.0)], None)
        return (lvl, field_vectors) if field_vectors is not None else lvl

    pts = curve.points.copy()
    T = curve.tangents.copy()
    Y = None if field_vectors is None else field_vectors.copy()
    logg = np.zeros(curve.n_samples)
    for _ in range(k):
        new = skew.push_tangent(pts, T)
        nrm = np.linalg.norm(new, axis=1)
        logg += np.log(nrm / np.linalg.norm(T, axis=1))
        T = new / nrm[:, None]
        if Y is not None:
            Jf = skew.fiber_jacobian(pts)
            Y = np.einsum("nij,nj->ni", Jf, Y)
            Y /= np.linalg.norm(Y, axis=1)[:, None]
        pts = skew(pts)
    d = _wrap_diff(np.diff(pts[:, curve.coord]))
    if np.abs(d).max() > max_gap:
        raise ValueError(
            f"undersampled image at level {k}: max gap {np.abs(d).max():.3f}"
            f" > {max_gap}; regrow the curve with more samples")
    cum = np.r_[0.0, np.cumsum(np.abs(d))]
    ju = np.exp(-logg)
    sign = np.sign(T[:, curve.coord])
    Tn = T * sign[:, None]
    Tn = Tn / np.abs(Tn[:, curve.coord])[:, None]

    nfull = int(cum[-1] // TWO_PI)
    bounds = np.searchsorted(cum, TWO_PI * np.arange(nfull + 1))
    pieces = []
    for j in range(nfull):
        a, b = int(bounds[j]), min(int(bounds[j + 1]) + 1, len(pts))
        if b - a < 3:
            continue
        tloc = cum[a:b] - cum[a]
        plen = _trapz(np.linalg.norm(Tn[a:b], axis=1), tloc)
        pieces.append(Piece(j, slice(a, b), plen,
                            float(ju[a:b].min()), float(ju[a:b].max())))
    partial = None
    a = int(bounds[nfull])
    if a < len(pts) - 2:
        tloc = cum[a:] - cum[a]
        partial = Piece(nfull, slice(a, len(pts)),
                        _trapz(np.linalg.norm(Tn[a:], axis=1), tloc),
                        float(ju[a:].min()), float(ju[a:].max()))
    lvl = Level(k, pts, Tn, ju, cum, pieces, partial)
    return (lvl, Y) if Y is not None else lvl


def holder_constant_target(skew: SkewProduct, theta: float = 0.9,
                           p: int = 3) -> float:
    """The reference Holder constant lambda^(-theta (1 - 1/(2p)))."""
    lam_L = skew.base.splitting.unstable_rate ** skew.base_iterates
    return float(lam_L ** (-theta * (1 - 1.0 / (2 * p))))


def holder_recursion_bound(skew: SkewProduct, c_parent: float,
                           theta: float = 0.9) -> float:
    """One-step certification bound built from the measured norms.

    Mirrors the push-forward induction: the pushed field is Holder with
    constant (6 max(||dS||, ||d2S||) + 4 ||dS^-1|| ||dS|| c_parent) /
    lambda^theta along each full piece.
    """
    nb = skew.fiber.norm_bounds
    lam_L = skew.base.splitting.unstable_rate ** skew.base_iterates
    top = 6 * max(nb.get("dS", np.inf), nb.get("d2S", 0.0)) \
        + 4 * nb.get("dS_inv", np.inf) * nb.get("dS", np.inf) * c_parent
    return float(top / lam_L ** theta)


def measure_holder(points: np.ndarray, vectors: np.ndarray, t: np.ndarray,
                   speeds: np.ndarray, theta: float = 0.9,
                   n_sub: int = 120) -> float:
    """Max ||Y_m - Y_m'|| / d(m, m')^theta over subsampled pairs with
    intrinsic distance at most half the piece length."""
    idx = np.linspace(0, len(points) - 1, min(n_sub, len(points))).astype(int)
    arc = np.r_[0.0, np.cumsum(0.5 * (speeds[1:] + speeds[:-1]) * np.diff(t))]
    a = arc[idx]
    V = vectors[idx]
    dv = np.linalg.norm(V[:, None, :] - V[None, :, :], axis=-1)
    da = np.abs(a[:, None] - a[None, :])
    mask = (da > 0) & (da <= arc[-1] / 2)
    if not mask.any():
        return 0.0
    return float((dv[mask] / da[mask] ** theta).max())


def push_adapted_field(skew: SkewProduct, curve: AdmissibleCurve,
                       afield: AdaptedField, k: int, *, theta: float = 0.9,
                       p: int = 3) -> dict:
    """Push an adapted field k steps and re-certify it on every full piece.

    Certification is checked against two constants: the reference
    lambda^(-theta(1 - 1/(2p))) of the asymptotic regime, and the
    recursion bound propagated from the parent's measured constant with
    the measured fiber norms.  A violation of the reference constant is
    reported (it signals parameters outside the asymptotic regime), never
    raised.
    """
    lvl, Y = decompose_image(skew, curve, k, field_vectors=afield.vectors)
    c_ref = holder_constant_target(skew, theta, p)
    c_parent = afield.holder.get("measured", 0.0)
    c_rec = c_parent
    for _ in range(k):
        c_rec = holder_recursion_bound(skew, c_rec, theta)
    out = []
    for pc in lvl.pieces:
        sl = pc.sl
        measured = measure_holder(lvl.points[sl], Y[sl], lvl.t[sl],
                                  np.linalg.norm(lvl.tangents[sl], axis=1),
                                  theta)
        pc.holder_measured = measured
        out.append({"piece": pc.index, "measured": measured,
                    "reference_ok": bool(measured <= c_ref),
                    "recursion_ok": bool(measured <= c_rec)})
    return {"level": lvl, "field": Y, "theta": theta, "p": p,
            "reference_constant": c_ref, "recursion_bound": c_rec,
            "pieces": out,
            "all_recursion_ok": all(o["recursion_ok"] for o in out),
            "all_reference_ok": all(o["reference_ok"] for o in out)}


def classify_field(vectors: np.ndarray, cones: list, block_slices: list,
                   e: int | None = None) -> str:
    """good / almost-good / bad per the block cone membership of all rows.

    good: every sample's block component lies in the block cone, for every
    block; almost-good (multi-block mode): at least one block is uniformly
    inside; bad otherwise.  Blocks whose component vanishes identically
    are ignored (a field tangent to one block says nothing about others).
    """
    verdicts = []
    for cone, sl in zip(cones, block_slices):
        comp = vectors[:, sl]
        norms = np.linalg.norm(comp, axis=1)
        if np.all(norms < 1e-13):
            verdicts.append(None)
            continue
        verdicts.append(bool(np.all(cone_contains(cone, comp, closed=True))))
    active = [v for v in verdicts if v is not None]
    if not active:
        return "bad"
    if all(active):
        return "good"
    if any(active):
        return "almost-good"
    return "bad"


def expansion_integral(skew: SkewProduct, points: np.ndarray,
                       vectors: np.ndarray, t: np.ndarray) -> float:
    """One-step expansion integral of a fiber field over the turn parameter.

    E = integral over t in [0, 2*pi] of log ||dS(Y)||; for a good field
    this is about (2*pi - l(Crit)) log(beta) plus the critical dip.  Zero
    vectors are rejected.
    """
    norms = np.linalg.norm(vectors, axis=1)
    if np.any(norms == 0):
        raise ValueError("zero field vector")
    Jf = skew.fiber_jacobian(points)
    img = np.einsum("nij,nj->ni", Jf, vectors / norms[:, None])
    return _trapz(np.log(np.linalg.norm(img, axis=1)), t)


def iterated_expansion(skew: SkewProduct, curve: AdmissibleCurve,
                       vectors: np.ndarray, n: int) -> list:
    """I_m for m = 1..n: turn-parameter integrals of the accumulated
    log growth of the pushed field along each sample orbit."""
    pts = curve.points.copy()
    Y = vectors / np.linalg.norm(vectors, axis=1)[:, None]
    acc = np.zeros(curve.n_samples)
    out = []
    for _ in range(n):
        Jf = skew.fiber_jacobian(pts)
        Y2 = np.einsum("nij,nj->ni", Jf, Y)
        nrm = np.linalg.norm(Y2, axis=1)
        acc += np.log(nrm)
        Y = Y2 / nrm[:, None]
        pts = skew(pts)
        out.append(_trapz(acc, curve.t))
    return out


def distortion_constant(skew: SkewProduct, curve: AdmissibleCurve, k: int, *,
                        k_back: int = 25, n_sub: int = 400) -> dict:
    """Max ratio of J^u_{f^{-j}} over sample pairs of the curve, j <= k.

    Backward orbits are stored and the unstable Jacobian products are
    accumulated forward along them (pushing tangents backward mixes in
    backward-expanding directions and destroys the estimate).
    """
    idx = np.linspace(0, curve.n_samples - 1, min(n_sub, curve.n_samples)).astype(int)
    pts = curve.points[idx]
    orbit = [pts]
    p = pts
    for _ in range(k + k_back):
        p = skew.inverse(p)
        orbit.append(p)
    orbit = orbit[::-1]
    V = np.tile(_embedded_eu(skew), (len(pts), 1))
    for i in range(k_back):
        new = skew.push_tangent(orbit[i], V)
        V = new / np.linalg.norm(new, axis=1)[:, None]
    logj = np.zeros(len(pts))
    per_level = {}
    for j in range(1, k + 1):
        new = skew.push_tangent(orbit[k_back + j - 1], V)
        nrm = np.linalg.norm(new, axis=1)
        logj += np.log(nrm)
        V = new / nrm[:, None]
        ju = np.exp(-logj)
        per_level[j] = float(ju.max() / ju.min())
    return {"E": per_level, "k_back": k_back, "n_sub": int(len(pts))}


# ---------------------------------------------------------------------------
# the ledger
# ---------------------------------------------------------------------------

def _projection_cover_length(values: np.ndarray, mask: np.ndarray,
                             gap: float) -> float:
    """Length of the circle subset covered by the masked coordinate values."""
    vals = np.sort(values[mask] % TWO_PI)
    if len(vals) == 0:
        return 0.0
    gaps = np.diff(np.r_[vals, vals[0] + TWO_PI])
    return float(min(TWO_PI, (np.minimum(gaps, gap)).sum()))


def ledger_sums(skew: SkewProduct, curve: AdmissibleCurve,
                afield: AdaptedField, k_max: int, cones: list,
                crits: list, sigma: int = 2, R: float = np.pi / 2) -> DecompositionLedger:
    """Level-by-level good/bad/almost-good bookkeeping.

    For k = 1..k_max the image is decomposed, the pushed field classified
    per piece, and the sums g_k (min J^u over good pieces), b_k (max over
    bad), p_k (min over almost-good) accumulated, together with:

    * the change-of-variables identity: sum_j int_piece J^u d(arc) against
      the point-based length of the original curve (relative error);
    * the sandwich sum g_k + p_k + b_k against the window built from the
      measured piece-length comparability and distortion constants;
    * the good-dominates-bad inequality g_k >= sigma * b_k;
    * the lengths of the projections of the everywhere-noncritical set.
    """
    ledger = DecompositionLedger()
    block_slices = [sl for sl in skew.fiber.block_slices()]
    glen = curve.arclength(point_based=True)
    pts = curve.points.copy()
    T = curve.tangents.copy()
    Y = afield.vectors.copy()
    logg = np.zeros(curve.n_samples)
    fiber_off = skew.base_dim
    for k in range(1, k_max + 1):
        new = skew.push_tangent(pts, T)
        nrm = np.linalg.norm(new, axis=1)
        logg += np.log(nrm / np.linalg.norm(T, axis=1))
        T = new / nrm[:, None]
        Jf = skew.fiber_jacobian(pts)
        Y = np.einsum("nij,nj->ni", Jf, Y)
        Y /= np.linalg.norm(Y, axis=1)[:, None]
        pts = skew(pts)
        ju = np.exp(-logg)
        d = _wrap_diff(np.diff(pts[:, curve.coord]))
        cum = np.r_[0.0, np.cumsum(np.abs(d))]
        sign = np.sign(T[:, curve.coord])
        Tn = T * sign[:, None]
        Tn = Tn / np.abs(Tn[:, curve.coord])[:, None]
        speeds = np.linalg.norm(Tn, axis=1)

        nfull = int(cum[-1] // TWO_PI)
        bounds = np.searchsorted(cum, TWO_PI * np.arange(nfull + 1))
        g = b = pgood = 0.0
        counts = {"good": 0, "bad": 0, "almost-good": 0}
        cov = 0.0
        sum_je = 0.0
        lens = []
        pieces = []
        for j in range(nfull):
            a_, b_ = int(bounds[j]), min(int(bounds[j + 1]) + 1, len(pts))
            if b_ - a_ < 3:
                continue
            tloc = cum[a_:b_] - cum[a_]
            jp = ju[a_:b_]
            plen = _richardson_trapz(speeds[a_:b_], tloc)
            cov += _richardson_trapz(jp * speeds[a_:b_], tloc)
            cls = classify_field(Y[a_:b_], cones,
                                 [slice(s.start, s.stop) for s in block_slices])
            counts[cls] += 1
            piece = Piece(j, slice(a_, b_), plen, float(jp.min()), float(jp.max()),
                          classification=cls)
            Jfp = skew.fiber_jacobian(pts[a_:b_])
            img = np.einsum("nij,nj->ni", Jfp, Y[a_:b_])
            piece.expansion = _trapz(np.log(np.linalg.norm(img, axis=1)), tloc)
            pieces.append(piece)
            lens.append(plen)
            if cls == "good":
                g += piece.min_ju
                sum_je += piece.min_ju * piece.expansion
            elif cls == "bad":
                b += piece.max_ju
                sum_je += piece.min_ju * piece.expansion
            else:
                pgood += piece.min_ju
                sum_je += piece.min_ju * piece.expansion
        # partial piece contribution to the covering identity
        a_ = int(bounds[nfull])
        partial = None
        cov_partial = 0.0
        if a_ < len(pts) - 2:
            tloc = cum[a_:] - cum[a_]
            cov_partial = _richardson_trapz(ju[a_:] * speeds[a_:], tloc)
            cov += cov_partial
            partial = Piece(nfull, slice(a_, len(pts)),
                            _trapz(speeds[a_:], tloc),
                            float(ju[a_:].min()), float(ju[a_:].max()))
        lens = np.array(lens)
        len_ratio = float(lens.max() / lens.min()) if len(lens) else np.nan
        k_len = float(np.sqrt(len_ratio)) if len(lens) else np.nan
        e_piece = max((pc.max_ju / pc.min_ju for pc in pieces), default=np.nan)
        # everywhere-noncritical subset and its projections
        mask = np.ones(len(pts), dtype=bool)
        for crit, sl in zip(crits, block_slices):
            coordv = pts[:, fiber_off + sl.start + crit.coordinate_index]
            mask &= ~crit.contains_coord(coordv)
        gap = 4.0 * float(np.abs(d).max()) if len(d) else TWO_PI
        proj = {}
        for i, (crit, sl) in enumerate(zip(crits, block_slices)):
            coordv = pts[:, fiber_off + sl.start + crit.coordinate_index]
            proj[i] = _projection_cover_length(coordv, mask, gap)

        cov_rel = abs(cov - glen) / glen
        # g + p + b lies between sum(min J) and sum(max J); with the
        # per-piece distortion and length comparability folded in:
        # (glen - partial) / (E max_len) <= sum <= E glen / min_len
        if len(lens):
            sandal_lo = (glen - cov_partial) / (e_piece * lens.max())
            sandal_hi = e_piece * glen / lens.min()
        else:
            sandal_lo = sandal_hi = np.nan
        total = g + b + pgood
        ledger.levels[k] = Level(k, pts.copy(), Tn, ju.copy(), cum, pieces, partial)
        ledger.sums[k] = {
            "N": nfull, "g": float(g), "b": float(b), "p": float(pgood),
            "counts": counts, "sum_min_ju_E": float(sum_je),
            "change_of_variables_rel_err": float(cov_rel),
            "piece_length_ratio": len_ratio, "K_len": k_len,
            "piece_distortion": float(e_piece),
            "sandwich": [float(sandal_lo), float(sandal_hi)],
            "sandwich_ok": bool(sandal_lo - 1e-12 <= total <= sandal_hi + 1e-12),
            "good_dominates": bool(g >= sigma * b),
            "noncritical_projection_lengths": proj,
            "projection_ge_half_R": bool(all(v >= R / 2 for v in proj.values())),
        }
    ledger.checks = {
        "sigma": sigma, "R": R,
        "g_ge_sigma_b_all": bool(all(v["good_dominates"] for v in ledger.sums.values())),
    }
    return ledger


def _richardson_trapz(y: np.ndarray, x: np.ndarray) -> float:
    """Trapezoid refined by Richardson extrapolation against the half grid."""
    full = np.trapezoid(y, x)
    half = np.trapezoid(y[::2], x[::2])
    return float(full + (full - half) / 3.0)
