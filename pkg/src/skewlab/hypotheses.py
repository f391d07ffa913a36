"""Numerical verification of the expansion and coupling hypotheses.

Estimates the per-block expansion constants (infimum of cone-restricted
co-norms off the critical bands, infimum of smallest singular values),
checks cone invariance and the recovery band, and evaluates the coupling
ratios for a skew product, including the appendix conditions governing the
inverse map.  All infima/suprema are taken over deterministic uniform
grids restricted to the coordinates each block Jacobian depends on, then
sharpened by golden-section refinement near the grid minimizer; every
reported number carries the resolution that produced it.
"""

from __future__ import annotations

from dataclasses import dataclass, field, asdict

import numpy as np

from skewlab.torus import TWO_PI
from skewlab.cones import Cone, CriticalRegion, cone_image
from skewlab.maps import FiberMap, SkewProduct

GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0


class NotDominated(ValueError):
    """The base expansion does not dominate the rest of the derivative."""


# ---------------------------------------------------------------------------
# grid utilities
# ---------------------------------------------------------------------------

def _golden_min(fn, a: float, b: float, iters: int = 60):
    """Golden-section minimizer of a scalar function on [a, b]."""
    x1 = b - GOLDEN * (b - a)
    x2 = a + GOLDEN * (b - a)
    f1, f2 = fn(x1), fn(x2)
    for _ in range(iters):
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - GOLDEN * (b - a)
            f1 = fn(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + GOLDEN * (b - a)
            f2 = fn(x2)
    return (a + b) / 2, min(f1, f2)


def _block_jacobians(S: FiberMap, block: int, coords: np.ndarray) -> np.ndarray:
    """Block Jacobians on a grid of the depends_on coordinates.

    `coords` is (N, k) for the k coordinates the block depends on; the
    remaining coordinates are held at 0 (the Jacobian does not depend on
    them by declaration).
    """
    dep = S.depends_on[block] if S.depends_on else tuple(range(S.dim))
    pts = np.zeros((len(coords), S.dim))
    for j, c in enumerate(dep):
        pts[:, c] = coords[:, j]
    sl = S.block_slices()[block]
    return S.jacobian(pts)[:, sl, sl], dep, sl


def _cone_directions(cone: Cone, n_dirs: int) -> np.ndarray:
    """Unit directions filling a 2-D cone, endpoints included."""
    if cone.dim != 2 or cone.axis_dimension != 1:
        raise NotImplementedError("direction grids are implemented for 2-D cones")
    half = np.arctan(cone.aperture)
    th = np.linspace(-half, half, n_dirs)
    a = cone.axis_basis[:, 0]
    f = cone.complement_basis[:, 0]
    return np.cos(th)[:, None] * a + np.sin(th)[:, None] * f


def _min_expansion(J: np.ndarray, dirs: np.ndarray) -> np.ndarray:
    """min_v ||J v|| over the given unit directions, per matrix."""
    img = np.einsum("nij,dj->ndi", J, dirs)
    return np.linalg.norm(img, axis=-1).min(axis=1)


def estimate_beta(S: FiberMap, block: int, cone: Cone, crit: CriticalRegion,
                  grid_n: int = 2048, n_dirs: int = 257) -> dict:
    """Infimum over the critical complement of the cone-restricted co-norm.

    The grid covers only the coordinates the block Jacobian depends on;
    points whose designated coordinate lies strictly inside the critical
    bands are excluded, and the band edges are appended explicitly (the
    infimum over the open complement is attained in its closure).
    """
    Jfn = lambda coords: _block_jacobians(S, block, coords)[0]
    dep = S.depends_on[block] if S.depends_on else tuple(range(S.dim))
    sl = S.block_slices()[block]
    crit_coord_abs = sl.start + crit.coordinate_index
    if crit_coord_abs not in dep:
        raise ValueError("critical coordinate must be one the Jacobian depends on")
    crit_axis = dep.index(crit_coord_abs)
    if crit.length >= TWO_PI:
        raise ValueError("critical region covers the whole circle")

    per_axis = grid_n if len(dep) == 1 else max(16, int(round(grid_n ** (1.0 / len(dep)))))
    axes = []
    for j, c in enumerate(dep):
        g = np.linspace(0.0, TWO_PI, per_axis, endpoint=False)
        if j == crit_axis:
            keep = ~crit.contains_coord(g)
            edges = np.array([e for band in crit.bands for e in band])
            g = np.sort(np.concatenate([g[keep], edges]))
        axes.append(g)
    mesh = np.meshgrid(*axes, indexing="ij")
    coords = np.stack([m.ravel() for m in mesh], axis=-1)
    dirs = _cone_directions(cone, n_dirs)
    vals = _min_expansion(Jfn(coords), dirs)
    i = int(np.argmin(vals))
    best = coords[i].copy()

    # golden-section sharpening, cyclic over grid coordinates then the
    # in-cone direction; movement is confined to the critical complement
    half = np.arctan(cone.aperture)
    a_ax = cone.axis_basis[:, 0]
    f_ax = cone.complement_basis[:, 0]

    def value_at(pt: np.ndarray) -> float:
        J = Jfn(pt[None, :])
        return float(_min_expansion(J, dirs).min())

    for j in range(len(dep)):
        step = TWO_PI / per_axis

        def fn(x, j=j):
            p = best.copy()
            p[j] = x
            if j == crit_axis and crit.contains_coord(np.array([x]))[0]:
                return np.inf
            return value_at(p)

        x, _ = _golden_min(fn, best[j] - step, best[j] + step)
        if np.isfinite(fn(x)):
            best[j] = x % TWO_PI
    Jb = Jfn(best[None, :])[0]

    def dir_fn(t):
        v = np.cos(t) * a_ax + np.sin(t) * f_ax
        return float(np.linalg.norm(Jb @ v))

    _, refined = _golden_min(dir_fn, -half, half)
    estimate = min(refined, value_at(best))
    return {"estimate": float(estimate), "location": [float(v) for v in best],
            "grid_n": grid_n, "n_dirs": n_dirs}


def estimate_zeta(S: FiberMap, block: int, grid_n: int = 2048) -> dict:
    """Infimum of the smallest singular value of the block Jacobian."""
    dep = S.depends_on[block] if S.depends_on else tuple(range(S.dim))
    per_axis = grid_n if len(dep) == 1 else max(16, int(round(grid_n ** (1.0 / len(dep)))))
    axes = [np.linspace(0.0, TWO_PI, per_axis, endpoint=False) for _ in dep]
    mesh = np.meshgrid(*axes, indexing="ij")
    coords = np.stack([m.ravel() for m in mesh], axis=-1)
    J, _, _ = _block_jacobians(S, block, coords)
    sv = np.linalg.svd(J, compute_uv=False)[:, -1]
    i = int(np.argmin(sv))
    best = coords[i].copy()

    def val(pt):
        Jp, _, _ = _block_jacobians(S, block, pt[None, :])
        return float(np.linalg.svd(Jp[0], compute_uv=False)[-1])

    step = TWO_PI / per_axis
    for j in range(len(dep)):
        def fn(x, j=j):
            p = best.copy()
            p[j] = x
            return val(p)

        x, _ = _golden_min(fn, best[j] - step, best[j] + step)
        best[j] = x % TWO_PI
    return {"estimate": float(min(val(best), float(sv[i]))),
            "location": [float(v) for v in best], "grid_n": grid_n}


def check_S1(beta: float, zeta: float, crit_length: float, sigma: int) -> dict:
    """The three expansion clauses with numeric margins."""
    if sigma < 1:
        raise ValueError("sigma must be a positive integer")
    product = beta ** 6 * zeta ** (1.0 / sigma)
    clauses = {
        "product_gt_1": {"value": float(product), "margin": float(product - 1.0),
                         "passed": bool(product > 1.0)},
        "beta_gt_zeta": {"value": float(beta - zeta), "margin": float(beta - zeta),
                         "passed": bool(beta > zeta)},
        "crit_length": {"value": float(crit_length),
                        "margin": float(TWO_PI - crit_length),
                        "passed": bool(crit_length < TWO_PI)},
    }
    return {"sigma": sigma, "clauses": clauses,
            "passed": all(c["passed"] for c in clauses.values())}


def _omega_bad_intervals(amp: float, offset: float, pad: float,
                         lo: float, hi: float) -> list:
    """x-intervals where offset + amp*cos(x) (+/- pad) meets [lo, hi]."""
    if amp == 0.0:
        inside = lo - pad <= offset <= hi + pad
        return [(0.0, TWO_PI)] if inside else []
    a = max(-1.0, min(1.0, (lo - pad - offset) / amp))
    b = max(-1.0, min(1.0, (hi + pad - offset) / amp))
    lo_c, hi_c = min(a, b), max(a, b)
    if ((lo - pad - offset) / amp > 1 and (hi + pad - offset) / amp > 1) or \
       ((lo - pad - offset) / amp < -1 and (hi + pad - offset) / amp < -1):
        return []
    x1, x2 = float(np.arccos(hi_c)), float(np.arccos(lo_c))
    out = []
    if x2 > x1:
        out.append((x1, x2))
        out.append((TWO_PI - x2, TWO_PI - x1))
    return out


def check_S2(S: FiberMap, block: int, cone: Cone, crit: CriticalRegion,
             R_target: float = np.pi / 2, sample_n: int = 10_000,
             n_dirs: int = 64, sweep_n: int = 4096) -> dict:
    """Cone invariance off the bands, and the recovery-band sweep.

    Part (a) verifies d_y S(closure of cone) inside the cone at `sample_n`
    off-critical grid points via exact boundary-ray images.

    Part (b) sweeps the designated coordinate for the widest band on which
    every sampled block vector (an angular grid plus the complementary-cone
    rays) lands inside the cone after one step.  For blocks carrying an
    `omega_profile` (twist blocks whose relevant derivative entry is
    offset + amp*cos x within a declared coupling pad) the per-direction
    failure set is computed in closed form, so the band verdict does not
    depend on a sweep grid.
    """
    Jfn = lambda coords: _block_jacobians(S, block, coords)[0]
    dep = S.depends_on[block] if S.depends_on else tuple(range(S.dim))
    sl = S.block_slices()[block]
    crit_axis = dep.index(sl.start + crit.coordinate_index)

    # (a) invariance at off-critical samples
    per_axis = max(2, int(round(sample_n ** (1.0 / len(dep)))))
    axes = [np.linspace(0.0, TWO_PI, per_axis, endpoint=False) for _ in dep]
    mesh = np.meshgrid(*axes, indexing="ij")
    coords = np.stack([m.ravel() for m in mesh], axis=-1)
    coords = coords[~crit.contains_coord(coords[:, crit_axis])]
    J = Jfn(coords)
    inv_margin = np.inf
    ok = True
    worst = None
    for i in range(len(J)):
        res = cone_image(J[i], cone, closed=False)
        if res.margin < inv_margin:
            inv_margin, worst = res.margin, coords[i]
        ok &= res.contained
    part_a = {"passed": bool(ok), "margin": float(inv_margin),
              "samples": int(len(J)),
              "worst_point": None if worst is None else [float(v) for v in worst]}

    # (b) recovery band
    half = np.arctan(cone.aperture)
    th = np.linspace(0.0, np.pi, n_dirs, endpoint=False)
    comp_rays = [np.array([np.cos(half), np.sin(half)]),
                 np.array([np.cos(half), -np.sin(half)]),
                 np.array([1.0 / cone.aperture, 1.0]),
                 np.array([-1.0 / cone.aperture, 1.0]),
                 np.array([0.0, 1.0])]
    dirs = np.concatenate([np.stack([np.cos(th), np.sin(th)], -1),
                           np.stack(comp_rays)], axis=0)
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)

    profile = None
    profiles = getattr(S, "params", {}).get("omega_profiles")
    if profiles is None and hasattr(S, "omega_profiles"):
        profiles = S.omega_profiles
    if profiles:
        profile = profiles[block]

    if profile is not None:
        bad: list = []
        alpha = cone.aperture
        for v in dirs:
            if abs(v[0]) < 1e-300:
                continue  # axis-orthogonal input maps onto the axis
            c = v[1] / v[0]
            bad.extend(_omega_bad_intervals(profile["amp"], profile["offset"],
                                            profile.get("pad", 0.0),
                                            c - 1.0 / alpha, c + 1.0 / alpha))
        band, width = _widest_free_arc(bad)
        resolution = "exact"
    else:
        xs = np.linspace(0.0, TWO_PI, sweep_n, endpoint=False)
        grid = np.zeros((sweep_n, len(dep)))
        grid[:, crit_axis] = xs
        Jx = Jfn(grid)
        img = np.einsum("nij,dj->ndi", Jx, dirs)
        e = np.abs(img[:, :, 0])
        f = np.linalg.norm(img[:, :, 1:], axis=-1) if img.shape[-1] > 1 else 0 * e
        good = np.all(f <= cone.aperture * e, axis=1)
        band, width = _longest_true_run(xs, good)
        resolution = f"grid:{sweep_n}"

    part_b = {"passed": bool(width >= R_target), "band": band,
              "width": float(width), "R_target": float(R_target),
              "resolution": resolution}
    return {"invariance": part_a, "recovery": part_b,
            "passed": bool(part_a["passed"] and part_b["passed"])}


def _widest_free_arc(bad: list) -> tuple:
    """Longest circular arc avoiding the given intervals."""
    if not bad:
        return (0.0, TWO_PI), TWO_PI
    merged = []
    for a, b in sorted((a % TWO_PI, min(b, a + TWO_PI)) for a, b in bad):
        if merged and a <= merged[-1][1]:
            merged[-1] = (merged[-1][0], max(merged[-1][1], b))
        else:
            merged.append((a, b))
    best, band = 0.0, None
    for i, (_, b) in enumerate(merged):
        nxt = merged[0][0] + TWO_PI if i + 1 == len(merged) else merged[i + 1][0]
        if nxt - b > best:
            best, band = nxt - b, (float(b), float(nxt))
    return band, best


def _longest_true_run(xs: np.ndarray, good: np.ndarray) -> tuple:
    if good.all():
        return (0.0, TWO_PI), TWO_PI
    if not good.any():
        return None, 0.0
    ext = np.r_[good, good]
    best = cur = 0
    end = -1
    for i, v in enumerate(ext):
        cur = cur + 1 if v else 0
        if cur > best:
            best, end = cur, i
    best = min(best, len(xs))
    step = xs[1] - xs[0]
    start = (end - best + 1) % len(xs)
    return (float(xs[start]), float(xs[start] + best * step)), float(best * step)


# ---------------------------------------------------------------------------
# coupling conditions
# ---------------------------------------------------------------------------

def _log_row_norm(A: np.ndarray, k: int, row: int = 0) -> tuple[float, np.ndarray]:
    """log ||e_row^T A^k|| and the unit row direction, without overflow."""
    w = np.zeros(A.shape[0])
    w[row] = 1.0
    logn = 0.0
    for _ in range(k):
        w = A.T.astype(float) @ w
        n = np.linalg.norm(w)
        w /= n
        logn += np.log(n)
    return logn, w


def _log_kick_coordinates(A: np.ndarray, k: int, basis: np.ndarray,
                          coord: int = 0) -> list:
    """Per-column log |e_coord . A^k v| for the basis columns (overflow-safe).

    Each column is iterated with renormalization so its own scale is kept
    exactly; the extracted coordinate carries the accumulated log.  Returns
    (log magnitude, sign-carrying unit value) pairs.
    """
    out = []
    Af = np.asarray(A, dtype=float)
    for j in range(basis.shape[1]):
        v = basis[:, j].astype(float).copy()
        logn = 0.0
        for _ in range(k):
            v = Af @ v
            n = np.linalg.norm(v)
            v /= n
            logn += np.log(n)
        c = v[coord]
        with np.errstate(divide="ignore"):
            out.append(logn + np.log(abs(c)) if c != 0 else -np.inf)
    return out


def _phi_restriction_logs(skew: SkewProduct) -> dict:
    """Logs of the kick-derivative norms and subspace restrictions.

    Restrictions are computed by iterating each splitting basis column
    through the base (projecting the propagated row direction instead
    would lose the exponentially small stable component to roundoff).
    """
    A = skew.base.matrix
    s = skew.base.splitting
    nblocks = len(skew.kick_blocks)
    scale = 0.5 * np.log(nblocks)  # replication into nblocks block rows
    logn, _ = _log_row_norm(A, skew.kick_iterates, skew.kick_coordinate)
    logs_u = _log_kick_coordinates(A, skew.kick_iterates, s.unstable_basis,
                                   skew.kick_coordinate)
    logs_s = _log_kick_coordinates(A, skew.kick_iterates, s.stable_basis,
                                   skew.kick_coordinate)
    return {
        "log_norm": logn + scale,
        "log_norm_u": max(logs_u) + scale,
        "log_m_u": (logs_u[0] + scale if s.dim_unstable == 1 else -np.inf),
        "log_norm_sc": (max(logs_s) + scale if logs_s else -np.inf),
    }


def check_A1(skew: SkewProduct, p_max: int = 12, threshold: float = 0.1) -> dict:
    """Domination ratios of the coupling, evaluated at this family member.

    The limits are finite-r proxies: each ratio is reported in log space
    (overflow-safe) and passes when below `threshold`.  The integer
    witness for the second condition is the smallest p for which both of
    its clauses are below 1.
    """
    s = skew.base.splitting
    L, lam = skew.base_iterates, s.unstable_rate
    log_lam_r = L * np.log(lam)
    phi = _phi_restriction_logs(skew)
    nb = skew.fiber.norm_bounds
    dS, dSi, d2S = nb.get("dS", np.inf), nb.get("dS_inv", np.inf), nb.get("d2S", 0.0)
    if not np.isfinite(phi["log_m_u"]):
        return {"passed": False, "degenerate": True,
                "reason": "m(dphi|Eu) = 0 (degenerate coupling)"}

    log_r1 = np.logaddexp(phi["log_norm_sc"], 3 * np.log(dS)) - phi["log_m_u"]
    log_r2 = phi["log_norm"] - log_lam_r
    p_witness = None
    p_detail = []
    for p in range(1, p_max + 1):
        c1 = log_lam_r - p * phi["log_norm"]
        c2 = np.logaddexp(3 * p * np.log(dSi * dS),
                          3 * p * np.log(dSi * max(d2S, 1e-300))) - log_lam_r
        p_detail.append({"p": p, "log_clause1": float(c1), "log_clause2": float(c2)})
        if c1 < 0 and c2 < 0 and p_witness is None:
            p_witness = p
    out = {
        "log_ratio1": float(log_r1), "ratio1": float(np.exp(min(log_r1, 700))),
        "log_ratio2": float(log_r2), "ratio2": float(np.exp(min(log_r2, 700))),
        "threshold": threshold,
        "ratio1_passed": bool(log_r1 < np.log(threshold)),
        "ratio2_passed": bool(log_r2 < np.log(threshold)),
        "p_witness": p_witness,
        "p_search": p_detail,
        "degenerate": False,
    }
    out["passed"] = bool(out["ratio1_passed"] and out["ratio2_passed"]
                         and p_witness is not None)
    return out


def check_A2(skew: SkewProduct) -> dict:
    """Near-conformality of the coupling seen from the base unstable space.

    K(r) = ||dphi|Eu|| / min_i m(P_i o dphi|Eu).  For a one-dimensional
    unstable space and a single kicked block the two numbers are the same
    float, so K is exactly 1.  If any projected restriction is singular
    (unavoidable when dim Eu exceeds the per-block kick rank) the check is
    a degenerate fail.
    """
    s = skew.base.splitting
    U = s.unstable_basis
    D = skew.kick_matrix()
    Mu = D @ U                      # (d, dim_Eu)
    norm_u = float(np.linalg.svd(Mu, compute_uv=False)[0])
    k = Mu.shape[1]
    ms = []
    for b, sl in zip(range(len(skew.fiber.block_sizes)), skew.fiber.block_slices()):
        if b not in skew.kick_blocks:
            continue
        row = Mu[sl.start: sl.start + 1, :]   # P_i keeps the block's first coord
        # as a map out of the k-dimensional unstable space the restriction
        # has rank at most 1, so its co-norm vanishes whenever k > 1
        ms.append(float(np.linalg.svd(row, compute_uv=False)[-1]) if k == 1 else 0.0)
    m_min = min(ms) if ms else 0.0
    if m_min <= 0.0:
        return {"passed": False, "degenerate": True, "K": float("inf"),
                "norm_u": norm_u, "m_min": m_min,
                "reason": "m(P_i o dphi|Eu) = 0"}
    K = norm_u / m_min
    return {"passed": True, "degenerate": False, "K": float(K),
            "norm_u": norm_u, "m_min": float(m_min)}


def _grid_fiber_points(S: FiberMap, grid_n: int) -> np.ndarray:
    deps = sorted({c for dep in (S.depends_on or ((),)) for c in dep})
    if not deps:
        return np.zeros((1, S.dim))
    per = max(2, int(round(grid_n ** (1.0 / len(deps)))))
    axes = [np.linspace(0.0, TWO_PI, per, endpoint=False) for _ in deps]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.zeros((mesh[0].size, S.dim))
    for j, c in enumerate(deps):
        pts[:, c] = mesh[j].ravel()
    return pts


def check_A3_A4(skew: SkewProduct, q_max: int = 12, threshold: float = 0.1,
                grid_n: int = 512) -> dict:
    """Appendix conditions for the inverse map, with grid-estimated norms.

    Because the kick derivative has rank one (one base row replicated into
    the block pattern), every composite splits as a scalar row factor times
    the y-dependent column dS^(-1)(y) p, where p is the unit block pattern.
    All row factors are accumulated in log space, so paper-tie iterate
    counts do not overflow.  Reports the two appendix ratio conditions
    with an integer witness, the projected-co-norm condition (whose exact
    vanishing blocks bi-adaptedness for the translation-kick families),
    and the inverse-map cone quantity with its wPH verdict.
    """
    S = skew.fiber
    if S.inverse_fn is None:
        raise ValueError("fiber inverse required")
    s = skew.base.splitting
    A = skew.base.matrix
    L, l = skew.base_iterates, skew.kick_iterates
    tau1 = s.stable_rate
    log_tau_r = L * np.log(tau1)

    # rank-1 kick: dphi = c(x) * pat with c = (row of A^l) . x
    nblocks = len(skew.kick_blocks)
    pat = np.zeros(S.dim)
    for b, sl in zip(range(len(S.block_sizes)), S.block_slices()):
        if b in skew.kick_blocks:
            pat[sl.start] = 1.0
    pat_unit = pat / np.sqrt(nblocks)
    scale = 0.5 * np.log(nblocks)
    if L < l:
        raise ValueError("base_iterates must dominate kick_iterates here")
    # row of dphi o A^(-L): the kick row of A^(l - L)
    log_row_inv, _ = _log_row_norm(skew.base.inverse_matrix, L - l,
                                   skew.kick_coordinate)
    log_row_inv += scale
    # |kick coordinate of A^l x| for x in the stable / of A^(l-L) x for x
    # in the unstable basis (column-iterated, overflow/underflow safe)
    logs_phi_s = _log_kick_coordinates(A, l, s.stable_basis,
                                       skew.kick_coordinate)
    logs_inv_u = _log_kick_coordinates(skew.base.inverse_matrix, L - l,
                                       s.unstable_basis, skew.kick_coordinate)

    pts = _grid_fiber_points(S, grid_n)
    Jinv = S.inverse_jacobian(pts)
    G = np.einsum("nij,j->ni", Jinv, pat_unit)       # dS^-1(y) applied to the pattern
    Gn = np.linalg.norm(G, axis=1)
    log_G_sup = float(np.log(Gn.max()))
    log_G_inf = float(np.log(max(Gn.min(), 1e-300)))

    # ||dS^-1 dphi | E^s|| and its co-norm over the grid; the co-norm of
    # the rank-1 composite vanishes when dim E^s exceeds 1
    log_phi_s = max(logs_phi_s) + scale
    log_norm_comp_s = log_phi_s + log_G_sup
    log_m_comp_s = (log_phi_s + log_G_inf if s.dim_stable == 1 else -np.inf)
    # ||dS^-1 dphi A^-L|| and its E^c + E^u restriction
    log_norm_compA = log_row_inv + log_G_sup
    log_norm_compA_cu = max(logs_inv_u) + scale + log_G_sup

    dS = S.norm_bounds.get("dS", np.inf)
    dSi = S.norm_bounds.get("dS_inv", np.inf)
    d2Si = S.norm_bounds.get("d2S", 0.0)

    log_a3_1 = (log_tau_r
                + np.logaddexp(log_norm_compA_cu, 3 * np.log(dSi))
                - log_m_comp_s)
    log_a3_2 = log_tau_r + log_norm_compA
    q_witness = None
    for q in range(1, q_max + 1):
        c1 = log_tau_r + q * log_norm_compA          # must diverge upward
        c2 = log_tau_r + np.logaddexp(3 * q * np.log(dS * dSi),
                                      3 * q * np.log(dS * max(d2Si, 1e-300)))
        if c1 > 0 and c2 < 0 and q_witness is None:
            q_witness = q

    # the projected co-norm (A-4 quantity): per kicked block,
    # inf over y and unit x in E^s of |first coordinate of dS^-1 dphi x|
    m_proj = np.inf
    for b, sl in zip(range(len(S.block_sizes)), S.block_slices()):
        if b not in skew.kick_blocks:
            continue
        if s.dim_stable > 1:
            m_proj = 0.0
            break
        g_first = np.abs(G[:, sl.start]).min()
        m_proj = min(m_proj, float(np.exp(min(log_phi_s, 700.0)) * g_first))
    a4_ratio = float(np.exp(log_norm_comp_s) / m_proj) if m_proj > 0 else float("inf")
    a4 = {"m_projected": float(m_proj if np.isfinite(m_proj) else 0.0),
          "ratio": a4_ratio,
          "passed": bool(m_proj > 1e-12 and np.isfinite(a4_ratio))}

    # inverse-map cone quantity and the wPH verdict for f^(-1)
    log_dfinv_Ep = np.logaddexp(log_norm_compA,
                                np.logaddexp(np.log(dSi), 0.0))
    tau_term = np.exp(min(log_tau_r + log_dfinv_Ep, 700.0))
    denom = 1.0 - tau_term
    xi_inv = float(np.exp(log_norm_comp_s) / denom) if denom > 0 else float("inf")
    ph = bool(denom > 0 and xi_inv < 1.0)

    def _safe_exp(x):
        return float(np.exp(min(x, 700.0)))

    return {
        "A3": {
            "log_clause1": float(log_a3_1), "clause1": _safe_exp(log_a3_1),
            "log_clause2": float(log_a3_2), "clause2": _safe_exp(log_a3_2),
            "threshold": threshold,
            "passed": bool(log_a3_1 < np.log(threshold)
                           and log_a3_2 < np.log(threshold)),
            "q_witness": q_witness,
        },
        "A4": a4,
        "xi_inverse": xi_inv,
        "inverse_wPH": ph,
        "grid_n": grid_n,
        "passed": bool(a4["passed"]),
    }


def a3_trend(make_skew, r_values, threshold: float = 0.1) -> dict:
    """Evaluate the appendix ratio clauses along an r-grid and report the
    trend: pass-trend means both clause values decrease and end below the
    threshold."""
    rows = []
    for r in r_values:
        rep = check_A3_A4(make_skew(r))
        rows.append({"r": float(r),
                     "log_clause1": rep["A3"]["log_clause1"],
                     "log_clause2": rep["A3"]["log_clause2"]})
    c1 = [row["log_clause1"] for row in rows]
    c2 = [row["log_clause2"] for row in rows]
    decreasing = all(a > b for a, b in zip(c1, c1[1:])) and \
        all(a > b for a, b in zip(c2, c2[1:]))
    final_ok = c1[-1] < np.log(threshold) and c2[-1] < np.log(threshold)
    return {"rows": rows, "decreasing": bool(decreasing),
            "final_below_threshold": bool(final_ok),
            "pass_trend": bool(decreasing and final_ok)}


def xi_and_unstable_cone(skew: SkewProduct, n_samples: int = 200,
                         seed: int = 7) -> dict:
    """The unstable-cone aperture and the sampled expansion inequality.

    xi = 2 ||dphi|Eu|| / (lambda - ||df|E||) with the block l1 norm
    ||df|E|| = ||dS|| + ||dphi|Es (+) Ec|| + ||A^L|Es (+) Ec||.  Raises
    NotDominated when the denominator is not positive.  Then samples base
    points and rays of the closed cone to confirm the image stays in the
    open cone with the two-sided expansion bounds (l1 norms on the
    splitting)."""
    s = skew.base.splitting
    L = skew.base_iterates
    lam_L = s.unstable_rate ** L
    D = skew.kick_matrix()
    U, St = s.unstable_basis, s.stable_basis
    norm_phi_u = float(np.linalg.svd(D @ U, compute_uv=False)[0])
    norm_phi_sc = float(np.linalg.svd(D @ St, compute_uv=False)[0]) if s.dim_stable else 0.0
    dS = skew.fiber.norm_bounds.get("dS", np.inf)
    norm_df_E = dS + norm_phi_sc + s.stable_rate ** L
    denom = lam_L - norm_df_E
    if denom <= 0:
        raise NotDominated(
            f"lambda^L = {lam_L:.6g} <= ||df|E|| = {norm_df_E:.6g}")
    xi = 2.0 * norm_phi_u / denom

    rng = np.random.Generator(np.random.Philox(key=seed))
    pts = rng.uniform(0, TWO_PI, (n_samples, skew.dim))
    l, d = skew.base_dim, skew.fiber.dim
    ku, ks = s.dim_unstable, s.dim_stable
    # coefficient basis: unstable columns, stable columns, fiber identity;
    # the l1 norm of the coefficient groups realizes the splitting norm
    Bmat = np.zeros((skew.dim, skew.dim))
    Bmat[:l, :ku] = U
    Bmat[:l, ku:ku + ks] = St
    Bmat[l:, ku + ks:] = np.eye(d)
    Binv = np.linalg.inv(Bmat)

    def l1_split(v):
        co = v @ Binv.T
        return np.abs(co[:, :ku]).sum(axis=1), np.abs(co[:, ku:]).sum(axis=1)

    eu = np.zeros(skew.dim)
    eu[:l] = U[:, 0]
    # rays on the closed cone boundary: unit u-part plus xi-normed E part
    e_dirs = rng.normal(size=(n_samples, skew.dim))
    e_dirs[:, :l] -= np.outer(e_dirs[:, :l] @ U[:, 0], U[:, 0])
    _, e_norm = l1_split(e_dirs)
    rays = eu[None, :] + xi * e_dirs / e_norm[:, None]
    lo = lam_L * (1 - xi) / (1 + xi)
    hi = lam_L * (1 + xi)
    img = skew.push_tangent(pts, rays)
    nu, ne = l1_split(rays)
    niu, nie = l1_split(img)
    in_cone = nie < xi * niu
    norms_in = nu + ne
    norms_out = niu + nie
    ratio = norms_out / norms_in
    expansion_ok = np.all((ratio >= lo * (1 - 1e-12)) & (ratio <= hi * (1 + 1e-12)))
    return {
        "xi": float(xi), "lambda_L": float(lam_L), "norm_df_E": float(norm_df_E),
        "norm_phi_u": float(norm_phi_u),
        "cone_invariant": bool(np.all(in_cone)),
        "cone_margin": float(np.min(xi * niu - nie)),
        "expansion_bounds": [float(lo), float(hi)],
        "expansion_observed": [float(ratio.min()), float(ratio.max())],
        "expansion_ok": bool(expansion_ok),
        "n_samples": n_samples,
    }


def q_bound(betas, zetas, sigma: int) -> float:
    """Exponent floor min_i 0.99 sigma/(sigma+1) log(beta_i^6 zeta_i^(1/sigma));
    only defined when every block passes the product clause."""
    vals = []
    for b, z in zip(np.atleast_1d(betas), np.atleast_1d(zetas)):
        prod = b ** 6 * z ** (1.0 / sigma)
        if prod <= 1.0:
            raise ValueError(f"expansion product {prod:.6g} <= 1; bound undefined")
        vals.append(0.99 * sigma / (sigma + 1) * np.log(prod))
    return float(min(vals))


@dataclass
class HypothesisReport:
    r: float
    sigma: int
    family: str
    beta: list
    zeta: list
    paper_beta_bound: float
    crit_length: float
    crit_length_bound: float
    S1: dict
    S2: list
    A1: dict | None = None
    A2: dict | None = None
    A3A4: dict | None = None
    xi: dict | None = None
    Q: float | None = None
    grid_n: int = 0
    passed: bool = False
    notes: list = field(default_factory=list)

    def as_dict(self) -> dict:
        return asdict(self)
