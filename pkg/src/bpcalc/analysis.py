"""Holomorphy criterion, moment inequality, boundedness and convergence runs.

The holomorphy side weighs per-generator defects b_j = limsup ||I - T_j(t)||
against the threshold 2; the moment side checks the K_M-weighted bound on
||psi(A)x|| pointwise.  Both are verification harnesses: they measure, they
do not assume.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .bernstein import BernsteinFunction, eval_psi
from .calculus import apply_psi, apply_psi_spectral
from .semigroup import (DiagonalRayModel, OperatorTuple,
                        fourier_translation_model, semigroup_apply)

__all__ = [
    "HolomorphyReport", "MomentReport", "k_constant", "moment_check",
    "step_bound_check", "holomorphy_criterion", "boundedness_experiment",
    "convergence_experiment",
]


@dataclass(frozen=True)
class HolomorphyReport:
    defects: tuple
    weights: tuple
    weighted_sum: float
    satisfied: bool
    measured_limsup: Optional[float] = None
    samples: tuple = ()


@dataclass(frozen=True)
class MomentReport:
    M: float
    k_m: float
    n: int
    lhs: float
    rhs: float
    slack: float
    ratio: float
    zero_face: bool


def k_constant(M: float) -> float:
    """(M+1)/(1 - e^{-(M+1)/M}), the moment-inequality constant."""
    if M < 1.0:
        raise ValueError("K_M is defined for M >= 1")
    return float((M + 1.0) / -np.expm1(-(M + 1.0) / M))


def moment_check(psi: BernsteinFunction, A: OperatorTuple, x) -> MomentReport:
    """Pointwise bound ||psi(A)x|| <= -n K_M M^{n-1} psi(-||A_j x||/(n||x||)) ||x||."""
    x = np.asarray(x, dtype=complex)
    nx = float(np.linalg.norm(x))
    if nx == 0.0:
        raise ValueError("x must be nonzero")
    if psi.n != A.n:
        raise ValueError("function arity and tuple size differ")
    M = float(max(A.bounds))
    K = k_constant(M)
    norms = np.array([float(np.linalg.norm(A.generators[j] @ x))
                      for j in range(A.n)])
    # A_j x = 0 pins the argument to the face s_j = 0; catalog functions are
    # continuous up to that face, so direct evaluation is the extension
    zero_face = bool(np.any(norms == 0.0))
    arg = -norms / (A.n * nx)
    psi_val = float(np.real(eval_psi(psi, arg)))
    if A.spectral is not None:
        lhs = float(np.linalg.norm(apply_psi_spectral(psi, A) @ x))
    else:
        lhs = float(np.linalg.norm(apply_psi(psi, A) @ x))
    rhs = -A.n * K * M ** (A.n - 1) * psi_val * nx
    if rhs > 0.0:
        ratio = lhs / rhs
    else:
        ratio = 0.0 if lhs == 0.0 else float("inf")
    return MomentReport(M=M, k_m=K, n=A.n, lhs=lhs, rhs=rhs,
                        slack=rhs - lhs, ratio=ratio, zero_face=zero_face)


def step_bound_check(A: OperatorTuple, x, u) -> float:
    """RHS - LHS of ||(T(u)-I)x|| <= n K_M M^{n-1} (1 - e^{-sum_j ||A_j x|| u_j / n})."""
    x = np.asarray(x, dtype=complex)
    if abs(np.linalg.norm(x) - 1.0) > 1e-9:
        raise ValueError("x must be a unit vector")
    u = np.asarray(u, dtype=float)
    M = float(max(A.bounds))
    K = k_constant(M)
    lhs = float(np.linalg.norm(semigroup_apply(A, u) @ x - x))
    dot = sum(float(np.linalg.norm(A.generators[j] @ x)) * u[j]
              for j in range(A.n))
    rhs = A.n * K * M ** (A.n - 1) * float(-np.expm1(-dot / A.n))
    return rhs - lhs


# ---------------------------------------------------------------------------
# holomorphy criterion


def _resolve_source(m):
    """(defect b_j, sampler(t, reach) -> spectrum sample points)."""
    if isinstance(m, (float, int)) and not isinstance(m, bool):
        m = DiagonalRayModel(theta=float(m))
    if isinstance(m, DiagonalRayModel):
        if m.theta is not None:
            theta = m.theta

            def sampler(t, reach, _th=theta):
                return np.geomspace(1e-6, reach, 160) * np.exp(1j * _th)

            return float(m.defect(1.0)), sampler, theta
        pts = np.array(m.points)
        return 0.0, (lambda t, reach, _p=pts: _p), None
    if isinstance(m, OperatorTuple):
        if m.n != 1:
            raise TypeError("per-generator sources must be single-parameter")
        vals = (m.spectral.joint[:, 0] if m.spectral is not None
                else np.linalg.eigvals(m.generators[0]))
        return 0.0, (lambda t, reach, _v=vals: _v), None
    m = np.asarray(m)
    if m.ndim == 2 and m.shape[0] == m.shape[1]:
        vals = np.linalg.eigvals(m)
        return 0.0, (lambda t, reach, _v=vals: _v), None
    raise TypeError("unknown defect source %r" % type(m))


def _reach(psi: BernsteinFunction, j: int, theta: float, t: float) -> float:
    # extend the ray until the subordination exponent saturates, so the
    # sampled sup actually sees the far end where the defect lives
    R = 1.0
    e = np.exp(1j * theta)
    probe = np.zeros(psi.n, dtype=complex)
    while R < 1e30:
        probe[j] = R * e
        if abs(t * complex(eval_psi(psi, probe))) >= 20.0:
            break
        R *= 4.0
    return R


def holomorphy_criterion(models, bounds, psi: Optional[BernsteinFunction] = None,
                         k_max: int = 40) -> HolomorphyReport:
    """Weighted-defect test sum_j C_j b_j < 2, C_j = prod_{k<j} M_k.

    When the criterion holds and ``psi`` is given, ||I - g_t(A)|| is also
    measured on the dyadic grid t = 2^{-k} over the joint diagonal model,
    and the limsup estimate (max of the last 10 grid points) is reported.
    """
    n = len(models)
    if len(bounds) != n:
        raise ValueError("one bound per defect source")
    if any(M < 1.0 for M in bounds):
        raise ValueError("semigroup bounds are >= 1")
    resolved = [_resolve_source(m) for m in models]
    defects = tuple(r[0] for r in resolved)
    if any(not 0.0 <= b <= 2.0 for b in defects):
        raise ValueError("defects must lie in [0, 2]")
    weights = tuple(float(np.prod([1.0] + list(bounds[:j]))) for j in range(n))
    total = float(sum(C * b for C, b in zip(weights, defects)))
    satisfied = total < 2.0
    if psi is None or not satisfied:
        return HolomorphyReport(defects=defects, weights=weights,
                                weighted_sum=total, satisfied=satisfied)
    if psi.n != n:
        raise ValueError("function arity and model count differ")

    per_model = 160 if n == 1 else (40 if n == 2 else 12)
    samples = []
    for k in range(k_max + 1):
        t = 2.0 ** -k
        axes = []
        for j, (_, sampler, theta) in enumerate(resolved):
            reach = _reach(psi, j, theta, t) if theta is not None else 1.0
            pts = np.asarray(sampler(t, reach))
            if len(pts) > per_model:
                idx = np.unique(np.linspace(0, len(pts) - 1, per_model).astype(int))
                pts = pts[idx]
            axes.append(pts)
        grid = np.stack([g.ravel() for g in np.meshgrid(*axes, indexing="ij")],
                        axis=-1)
        worst = 0.0
        for z in grid:
            g = np.exp(t * complex(eval_psi(psi, z)))
            worst = max(worst, abs(1.0 - g))
        samples.append((t, worst))
    tail = [v for _, v in samples[-10:]]
    return HolomorphyReport(defects=defects, weights=weights,
                            weighted_sum=total, satisfied=satisfied,
                            measured_limsup=float(max(tail)),
                            samples=tuple(samples))


# ---------------------------------------------------------------------------
# corollary experiments


def boundedness_experiment(psi: BernsteinFunction, K_list) -> np.ndarray:
    """||psi(A_K)|| for Fourier translation models of increasing cutoff.

    Evaluated on the diagonal: the model's joint spectrum sits on the
    imaginary axes, where the generators are simultaneously diagonal and
    psi(A) is exactly diag(psi(ik)).  Bounded psi keeps the sequence flat;
    unbounded psi diverges with K.
    """
    out = []
    for K in K_list:
        model = fourier_translation_model(int(K), n=psi.n)
        vals = [abs(complex(eval_psi(psi, row))) for row in model.spectral.joint]
        out.append(max(vals))
    return np.array(out)


def convergence_experiment(psi_sequence, A: OperatorTuple, x,
                           spot_grid=None) -> np.ndarray:
    """||psi_k(A)x|| along a sequence of functions decaying pointwise to 0."""
    x = np.asarray(x, dtype=complex)
    first, last = psi_sequence[0], psi_sequence[-1]
    if spot_grid is None:
        spot_grid = [np.full(first.n, s) for s in (-5.0, -1.0, -0.1)]
    for s in spot_grid:
        v0 = abs(complex(eval_psi(first, s)))
        v1 = abs(complex(eval_psi(last, s)))
        if v1 > 0.05 * v0 + 1e-6:
            raise ValueError("sequence is not pointwise decaying on the spot grid")
    out = []
    for psi in psi_sequence:
        if A.spectral is not None:
            out.append(float(np.linalg.norm(apply_psi_spectral(psi, A) @ x)))
        else:
            out.append(float(np.linalg.norm(apply_psi(psi, A) @ x)))
    return np.array(out)
