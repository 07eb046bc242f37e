"""Radial quadrature against structurally represented measures.

Every measure density in this package is either a 1-D profile m(r) dr pushed
forward along a ray r -> r*w (axis supports are the special case w = e_j), or
a bounded full-orthant density in low dimension.  Integrals of a scalar- or
matrix-valued integrand f against such parts share one strategy:

  * below a cut ``eps`` the contribution is replaced by an analytic lump
    (f(0) times an exact partial mass when one is known, otherwise zero for
    integrands vanishing at the origin) with a certified error bound;
  * on [eps, split] the variable is log-transformed, r = e^v, which turns the
    origin singularity m(r) = O(r^-beta) into a decaying smooth integrand;
  * on [split, R] the integrand is integrated directly, with R chosen from
    tail-mass bounds and, when available, the exponential decay of f;
  * beyond R, if f settles to a known limit and the tail mass is exact, the
    settled part is added back in closed form.

The caller supplies the analytic ingredients (Lipschitz coefficient at the
origin, sup bound, decay rate, settle value); this module assembles them into
a value plus a certified error estimate.
"""

from __future__ import annotations

import numpy as np
from scipy.integrate import quad_vec


class QuadratureError(RuntimeError):
    """Quadrature failed to meet its tolerance; carries the achieved estimate."""

    def __init__(self, message: str, error_estimate: float | None = None):
        super().__init__(message)
        self.error_estimate = error_estimate


def expm1c(z):
    """exp(z) - 1 without cancellation, for real or complex arguments.

    The naive exp(z) - 1 loses all significant digits for |z| ~ 1e-12 and
    below; multiplied by a singular density r**-beta that noise dominates
    the integral, so every e^{z} - 1 integrand in this package goes through
    here.  Real part uses expm1(x)*cos(y) - 2*sin(y/2)**2, both terms exact
    to machine precision.
    """
    z = np.asarray(z)
    if np.isrealobj(z):
        return np.expm1(z)
    x, y = z.real, z.imag
    return (np.expm1(x) * np.cos(y) - 2.0 * np.sin(0.5 * y) ** 2
            + 1j * np.exp(x) * np.sin(y))


def _norm(x) -> float:
    if isinstance(x, np.ndarray):
        return float(np.linalg.norm(x.ravel(), 2))
    return abs(x)


def _interior_points(hints, lo, hi):
    pts = sorted(float(h) for h in hints if lo < h < hi)
    return pts if pts else None


def _quad(f, a, b, tol, points=None):
    # quad_vec's norm for arrays is the flattened 2-norm, which dominates the
    # spectral norm, so epsabs requests are conservative for matrices.
    value, err = quad_vec(f, a, b, epsabs=0.25 * tol, epsrel=1e-12,
                          points=points, limit=6000)
    return value, float(err)


def integrate_radial(f, part, *, f_zero, f_lipschitz, f_sup,
                     f_settle=None, f_decay=0.0, f_far_coeff=None,
                     f_over_r=None, tol=1e-9, r_cap=1e8):
    """Integrate f(r) * m(r) dr over (0, inf) for a 1-D radial profile.

    ``part`` must expose: density(r), beta, sing_coeff (m(r) <= sing_coeff *
    r**-beta for r <= split_radius), split_radius, tail_mass(R) (upper bound
    on the mass beyond R; exact when tail_exact), mass_below(r) (exact
    partial mass or None), hints.

    f bounds, all valid on the stated ranges:
      f_zero        limit of f at 0+  (used with exact partial masses);
      f_lipschitz   L with ||f(r) - f_zero|| <= L*r on (0, split];
      f_sup         global bound on ||f|| over (0, inf);
      f_settle      limit of f at infinity, or None if unknown;
      f_decay       gamma >= 0 with ||f(r) - settle|| <= f_far_coeff *
                    exp(-gamma*r) for r >= split (settle read as 0 if None);
      f_far_coeff   coefficient of that decay bound (default f_sup + ||settle||);
      f_over_r      optional stable evaluation of f(r)/r; must return the
                    r -> 0 limit once r is subnormal-small (below ~1e-250),
                    where a literal quotient loses precision.  Paired with
                    part.log_density it keeps the inner segment finite for
                    beta close to 2, where density(r) itself overflows.

    Returns (value, error_estimate).
    """
    split = float(part.split_radius)
    budget = tol / 4.0
    m = part.density
    err_total = 0.0
    settle_norm = 0.0 if f_settle is None else _norm(f_settle)
    far_given = f_far_coeff is not None
    if f_far_coeff is None:
        f_far_coeff = f_sup + settle_norm

    logm = getattr(part, "log_density", None)
    compensated = f_over_r is not None and logm is not None

    # ----- inner lump below exp(log_eps) -----
    if part.mass_below is not None:
        eps = split if f_lipschitz <= 0 else min(split, max(budget / f_lipschitz, 1e-300))
        lump_mass = float(part.mass_below(eps))
        # mass_below is exact by contract, so the lump's only error is the
        # variation of f below eps: int_0^eps ||f - f0|| m <= L*eps*mass.
        value = f_zero * lump_mass
        if f_lipschitz > 0:
            err_total += f_lipschitz * eps * lump_mass
        log_eps = np.log(eps)
    else:
        if _norm(f_zero) > 1e-300:
            raise ValueError("integrand must vanish at 0 when no exact partial mass is available")
        beta = part.beta
        coeff = f_lipschitz * part.sing_coeff
        if coeff <= 0:
            log_eps = np.log(split)
        else:
            log_eps = np.log(budget * (2.0 - beta) / coeff) / (2.0 - beta)
            if not compensated and part.sing_coeff > 0:
                # without a log-space density the segment must stop where
                # density(r) is still representable
                log_eps = max(log_eps, np.log(part.sing_coeff * 1e-290) / beta)
            log_eps = min(log_eps, np.log(split))
            err_total += coeff * np.exp((2.0 - beta) * log_eps) / (2.0 - beta)
        value = 0.0 * f_zero if np.ndim(f_zero) else 0.0

    # ----- transformed segment [exp(log_eps), split] -----
    b_log = np.log(split)
    if log_eps < b_log - 1e-14:
        if compensated:
            # substitute tau = r**(2 - beta): the image interval is short and
            # the integrand f/r * m*r*r/tau stays bounded however close beta
            # is to 2.  f_over_r must return the r -> 0 limit when r
            # underflows to 0.0.
            p_exp = 2.0 - part.beta
            t0 = max(np.exp(p_exp * log_eps), 5e-324)
            t1 = np.exp(p_exp * b_log)
            pts = _interior_points(
                (np.exp(p_exp * np.log(h)) for h in part.hints if h > 0), t0, t1)

            def g(t):
                v = np.log(t) / p_exp
                return f_over_r(np.exp(v)) * (np.exp(logm(v) + 2.0 * v - np.log(t)) / p_exp)

            seg, err = _quad(g, t0, t1, tol, points=pts)
        else:
            pts = _interior_points((np.log(h) for h in part.hints if h > 0), log_eps, b_log)

            def g(v):
                r = np.exp(v)
                return f(r) * (m(r) * r)

            seg, err = _quad(g, log_eps, b_log, tol, points=pts)
        value = value + seg
        err_total += err

    # ----- outer truncation radius -----
    tail_at_split = float(part.tail_mass(split))
    settle_usable = f_settle is not None and (settle_norm == 0.0 or part.tail_exact)
    flat_coeff = (f_sup + settle_norm) if settle_usable else f_sup
    # the decay bound speaks about f - settle, so it only certifies the tail
    # when the settle correction is actually applied (or settle is zero)
    far_usable = (far_given or f_decay > 0.0) and (settle_usable or f_settle is None)

    def tail_err(R):
        bounds = [flat_coeff * part.tail_mass(R)]
        if far_usable:
            bounds.append(f_far_coeff * np.exp(-f_decay * R) * part.tail_mass(R))
        return min(bounds)

    R = max(split, *[2.0 * h for h in part.hints]) if part.hints else split
    if far_usable and f_decay > 0.0:
        # direct solve from the decay bound, then let the loop confirm
        need = f_far_coeff * max(tail_at_split, 1e-300) / max(budget, 1e-300)
        if need > 1.0:
            R = max(R, np.log(need) / f_decay)
    while tail_err(R) > budget:
        R *= 2.0
        if R > r_cap:
            raise QuadratureError(
                "radial tail not resolvable to tolerance %.3g (remaining bound %.3g at R=%.3g)"
                % (tol, tail_err(R / 2.0), R / 2.0),
                error_estimate=tail_err(R / 2.0))
    err_total += tail_err(R)

    # ----- direct segment [split, R] -----
    if R > split * (1.0 + 1e-14):
        pts = _interior_points(part.hints, split, R)

        def h(r):
            return f(r) * m(r)

        seg, err = _quad(h, split, R, tol, points=pts)
        value = value + seg
        err_total += err

    # ----- settled tail beyond R -----
    if settle_usable and settle_norm > 0.0:
        value = value + f_settle * float(part.tail_mass(R))

    return value, err_total


def integrate_orthant(part, f, *, f_sup, tol=1e-9, r_cap=1e5):
    """Nested quadrature for a bounded full-orthant density in dimension 2.

    ``part`` exposes: n (== 2), density(u) on the open orthant, axis_tail[j]
    (upper bound on the mass of the region {u_j > R}), hints.  The density
    must be bounded near the origin; singular orthant densities are outside
    the supported structural catalog.
    """
    if part.n != 2:
        raise NotImplementedError("orthant densities are supported for n = 2 only")
    budget = tol / 4.0
    radii = []
    for j in range(2):
        R = 1.0
        while f_sup * part.axis_tail[j](R) > budget / 2.0:
            R *= 2.0
            if R > r_cap:
                raise QuadratureError(
                    "orthant tail not resolvable along axis %d" % j,
                    error_estimate=f_sup * part.axis_tail[j](R / 2.0))
        radii.append(R)
    err_tail = f_sup * (part.axis_tail[0](radii[0]) + part.axis_tail[1](radii[1]))

    inner_tol = tol / (4.0 * max(1.0, radii[1]))
    pts0 = _interior_points(part.hints, 0.0, radii[0])

    def outer(u2):
        val, _ = _quad(lambda u1: f(np.array([u1, u2])) * part.density(np.array([u1, u2])),
                       0.0, radii[0], inner_tol, points=pts0)
        return val

    pts1 = _interior_points(part.hints, 0.0, radii[1])
    value, err = _quad(outer, 0.0, radii[1], tol, points=pts1)
    return value, err + err_tail


def composite_gauss(f, a: float, b: float, panels: int, order: int = 24):
    """Fixed composite Gauss-Legendre rule for smooth matrix-valued integrands.

    Used for integrals of products of matrix exponentials over a bounded
    interval, where the integrand is entire and a fixed high-order rule on
    unit-scale panels reaches machine precision.
    """
    if b <= a:
        shape = np.shape(f(a))
        return np.zeros(shape, dtype=complex) if shape else 0.0 + 0.0j
    nodes, weights = np.polynomial.legendre.leggauss(order)
    total = None
    edges = np.linspace(a, b, panels + 1)
    for lo, hi in zip(edges[:-1], edges[1:]):
        mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
        for x, w in zip(nodes, weights):
            term = (half * w) * f(mid + half * x)
            total = term if total is None else total + term
    return total
