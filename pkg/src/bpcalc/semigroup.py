"""Commuting generator tuples and their n-parameter semigroups.

Tuples come in two constructive families: jointly diagonalizable (shared
eigenbasis with controlled conditioning) and polynomials in one nilpotent
block (exactly commuting, non-diagonalizable).  A lazy diagonal ray model
covers the spectra that no finite matrix can host.
"""

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.linalg import expm
from scipy.optimize import minimize_scalar

__all__ = [
    "SpectralData", "OperatorTuple", "DiagonalRayModel",
    "make_tuple", "make_commuting_random", "make_jordan_polynomial",
    "adjoint", "semigroup_apply", "estimate_bound",
    "fourier_translation_model", "holomorphy_defect_ray",
]

_COMMUTE_REL = 1e-10
_SPECTRAL_REL = 1e-10
_RE_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class SpectralData:
    """Joint eigenstructure: row k of ``joint`` is the eigenvalue tuple of
    the shared eigenvector P[:, k]."""

    joint: np.ndarray       # d x n complex
    basis: np.ndarray       # d x d, columns are joint eigenvectors
    cond: float

    def eigenvalues(self, j: int) -> np.ndarray:
        return self.joint[:, j]


@dataclass(frozen=True, eq=False)
class OperatorTuple:
    n: int
    d: int
    generators: tuple          # n complex d x d arrays
    bounds: tuple              # certified M_j >= 1
    commutator_residual: float
    spectral: Optional[SpectralData] = None

    def norm(self, j: int) -> float:
        return float(np.linalg.norm(self.generators[j], 2))


def _as_matrices(generators) -> tuple:
    mats = tuple(np.asarray(g, dtype=complex) for g in generators)
    d = mats[0].shape[0]
    for g in mats:
        if g.shape != (d, d):
            raise ValueError("generators must be square matrices of equal size")
    return mats


def make_tuple(generators: Sequence, spectral: Optional[SpectralData] = None,
               bounds: Optional[Sequence[float]] = None) -> OperatorTuple:
    """Validate and assemble an OperatorTuple.

    Rejects tuples whose commutators exceed round-off scale, generators with
    spectrum reaching into the open right half-plane, and spectral data that
    does not reproduce the generators.
    """
    mats = _as_matrices(generators)
    n, d = len(mats), mats[0].shape[0]

    norms = [max(float(np.linalg.norm(g, 2)), 1e-300) for g in mats]
    residual = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            residual = max(residual, float(np.linalg.norm(
                mats[i] @ mats[j] - mats[j] @ mats[i], 2)))
    if residual > _COMMUTE_REL * max(norms) ** 2:
        raise ValueError(
            "tuple is not commuting: residual %.3g exceeds %.3g"
            % (residual, _COMMUTE_REL * max(norms) ** 2))

    if spectral is not None:
        for j in range(n):
            recon = spectral.basis @ np.diag(spectral.joint[:, j]) \
                @ np.linalg.inv(spectral.basis)
            if np.linalg.norm(recon - mats[j], 2) > _SPECTRAL_REL * norms[j] + 1e-13:
                raise ValueError("spectral data does not reproduce generator %d" % j)
        if np.any(spectral.joint.real > _RE_TOL):
            raise ValueError("joint spectrum leaves the closed left half-plane")
    else:
        for j in range(n):
            if np.any(np.linalg.eigvals(mats[j]).real > _RE_TOL):
                raise ValueError("generator %d has spectrum with Re > 0" % j)

    A = OperatorTuple(n=n, d=d, generators=mats, bounds=(1.0,) * n,
                      commutator_residual=residual, spectral=spectral)
    if bounds is None:
        bounds = tuple(estimate_bound(A, j) for j in range(n))
    else:
        bounds = tuple(float(b) for b in bounds)
        if any(b < 1.0 for b in bounds):
            raise ValueError("semigroup bounds must be >= 1")
    object.__setattr__(A, "bounds", bounds)
    return A


def make_commuting_random(n: int, d: int, seed,
                          spectral_box=((-4.0, -0.05), (-3.0, 3.0)),
                          max_cond: float = 20.0) -> OperatorTuple:
    """Jointly diagonalizable tuple A_j = P D_j P^{-1} with cond(P) <= max_cond.

    ``spectral_box`` is ((re_lo, re_hi), (im_lo, im_hi)) inside Re <= 0; the
    joint eigenvalues are drawn uniformly from it.
    """
    (re_lo, re_hi), (im_lo, im_hi) = spectral_box
    if re_hi > 0:
        raise ValueError("spectral box must lie in the closed left half-plane")
    rng = np.random.default_rng(seed)
    for _ in range(10):
        raw = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
        U, _, Vh = np.linalg.svd(raw)
        # prescribe the singular values so the conditioning is exact
        target = rng.uniform(1.0, max_cond) if d > 1 else 1.0
        sigma = np.geomspace(1.0, 1.0 / target, d)
        P = (U * sigma) @ Vh
        cond = float(np.linalg.cond(P))
        if cond <= max_cond * (1.0 + 1e-9):
            break
    else:
        raise RuntimeError("could not draw a basis with bounded conditioning")

    joint = (rng.uniform(re_lo, re_hi, (d, n))
             + 1j * rng.uniform(im_lo, im_hi, (d, n)))
    Pinv = np.linalg.inv(P)
    gens = [P @ np.diag(joint[:, j]) @ Pinv for j in range(n)]
    spec = SpectralData(joint=joint, basis=P, cond=cond)
    return make_tuple(gens, spectral=spec, bounds=(cond,) * n)


def make_jordan_polynomial(n: int, d: int, seed,
                           re_box=(-3.0, -0.3)) -> OperatorTuple:
    """Non-diagonalizable commuting tuple: each A_j is a polynomial in one
    shared nilpotent block, b0_j I + a1_j N + a2_j N^2."""
    rng = np.random.default_rng(seed)
    N = np.diag(np.ones(d - 1), 1).astype(complex) if d > 1 else np.zeros((1, 1), complex)
    gens = []
    for _ in range(n):
        b0 = rng.uniform(*re_box) + 1j * rng.uniform(-1.0, 1.0)
        a1 = rng.uniform(0.3, 1.0) * np.exp(2j * np.pi * rng.uniform())
        a2 = rng.uniform(0.0, 0.5) * np.exp(2j * np.pi * rng.uniform())
        gens.append(b0 * np.eye(d, dtype=complex) + a1 * N + a2 * (N @ N))
    return make_tuple(gens)


def adjoint(A: OperatorTuple) -> OperatorTuple:
    """The adjoint tuple; semigroup bounds carry over since
    ||exp(t A*)|| = ||exp(t A)||."""
    gens = [g.conj().T for g in A.generators]
    spec = None
    if A.spectral is not None:
        basis = np.linalg.inv(A.spectral.basis).conj().T
        spec = SpectralData(joint=A.spectral.joint.conj(), basis=basis,
                            cond=A.spectral.cond)
    return make_tuple(gens, spectral=spec, bounds=A.bounds)


def semigroup_apply(A: OperatorTuple, u) -> np.ndarray:
    """T(u) = prod_j exp(u_j A_j) for u in the closed positive orthant."""
    u = np.atleast_1d(np.asarray(u, dtype=float))
    if len(u) != A.n:
        raise ValueError("parameter u must have one component per generator")
    if np.any(u < 0):
        raise ValueError("semigroup parameters must be nonnegative")
    if not np.any(u > 0):
        return np.eye(A.d, dtype=complex)
    if A.spectral is not None:
        lam = A.spectral.joint @ u
        P = A.spectral.basis
        return (P * np.exp(lam)) @ np.linalg.inv(P)
    T = np.eye(A.d, dtype=complex)
    for j in range(A.n):
        if u[j] > 0:
            T = T @ expm(u[j] * A.generators[j])
    return T


def _sampled_bound(g: np.ndarray) -> float:
    # geometric octaves of t, refined until the running sup stops moving
    sup, flat = 1.0, 0
    t_lo = 1e-3
    for _ in range(40):
        ts = np.geomspace(t_lo, 2.0 * t_lo, 8, endpoint=False)
        octave = max(float(np.linalg.norm(expm(t * g), 2)) for t in ts)
        if octave > 1e6:
            raise ValueError("semigroup norms diverge; generator rejected")
        if octave <= sup * (1.0 + 1e-9):
            flat += 1
            if flat >= 3 and octave < 0.5 * sup:
                break
        else:
            sup, flat = octave, 0
        t_lo *= 2.0
    # contractions certify exactly 1; only a genuine overshoot gets the
    # sampling safety factor
    return 1.0 if sup <= 1.0 + 1e-9 else 1.01 * sup


def estimate_bound(A: OperatorTuple, j: int) -> float:
    """Certified M_j with sup_t ||exp(t A_j)|| <= M_j."""
    if not (0 <= j < A.n):
        raise IndexError("generator index out of range")
    if A.spectral is not None:
        return max(1.0, A.spectral.cond)
    return _sampled_bound(A.generators[j])


def fourier_translation_model(K: int, n: int = 1) -> OperatorTuple:
    """Diagonal surrogate of the translation tuple on trigonometric
    polynomials: eigenvalues i*k for k = -K..K, tensored over n axes."""
    if K < 1:
        raise ValueError("mode cutoff must be at least 1")
    modes = 1j * np.arange(-K, K + 1, dtype=float)
    d = len(modes) ** n
    grids = np.meshgrid(*([modes] * n), indexing="ij")
    joint = np.stack([g.ravel() for g in grids], axis=1)
    gens = [np.diag(joint[:, j]) for j in range(n)]
    spec = SpectralData(joint=joint, basis=np.eye(d, dtype=complex), cond=1.0)
    return make_tuple(gens, spectral=spec, bounds=(1.0,) * n)


@dataclass(frozen=True, eq=False)
class DiagonalRayModel:
    """Diagonal operator with spectrum on the ray r*e^{i theta}, r > 0, or a
    prescribed countable set in Re <= 0.

    ||I - T(t)|| is a supremum over the spectrum, evaluated analytically;
    matrix truncation would underestimate it.
    """

    theta: Optional[float] = None
    points: Optional[tuple] = None

    def __post_init__(self):
        if (self.theta is None) == (self.points is None):
            raise ValueError("specify exactly one of theta or points")
        if self.theta is not None:
            if np.cos(self.theta) > 1e-15:
                raise ValueError("ray must lie in the closed left half-plane")
        else:
            pts = tuple(complex(z) for z in self.points)
            if any(z.real > 1e-15 for z in pts):
                raise ValueError("spectrum must lie in the closed left half-plane")
            object.__setattr__(self, "points", pts)

    def defect(self, t: float) -> float:
        """||I - T(t)|| = sup over the spectrum of |1 - e^{t z}|."""
        if t < 0:
            raise ValueError("t must be nonnegative")
        if t == 0:
            return 0.0
        if self.theta is not None:
            # substitution rho = t*r makes the ray supremum t-independent
            return holomorphy_defect_ray(self.theta)
        return max(abs(1.0 - np.exp(t * z)) for z in self.points)


def _ray_objective(rho: float, c: float, s: float) -> float:
    return abs(1.0 - np.exp(rho * c + 1j * rho * s))


def holomorphy_defect_ray(theta: float, resolution: int = 20001) -> float:
    """sup_{rho > 0} |1 - e^{rho e^{i theta}}|, accurate to about 1e-8.

    Dense scan plus local refinement; past rho_max the modulus is within
    e^{rho_max cos(theta)} of 1, which the scan already dominates.
    """
    if not (np.pi / 2 - 1e-12 <= theta <= 3 * np.pi / 2 + 1e-12):
        raise ValueError("theta must lie in [pi/2, 3pi/2]")
    c, s = np.cos(theta), np.sin(theta)
    if c > 0:
        c = 0.0
    rho_max = 4.0 * np.pi if c == 0.0 else max(4.0 * np.pi, 21.0 / abs(c))
    grid = np.linspace(0.0, rho_max, resolution)[1:]
    vals = np.abs(1.0 - np.exp(grid * (c + 1j * s)))
    k = int(np.argmax(vals))
    best = float(vals[k])
    lo = grid[max(k - 1, 0)]
    hi = grid[min(k + 1, len(grid) - 1)]
    res = minimize_scalar(lambda r: -_ray_objective(r, c, s),
                          bounds=(lo, hi), method="bounded",
                          options={"xatol": 1e-10})
    best = max(best, float(-res.fun))
    # the tail past rho_max contributes at most 1 + e^{c rho_max} <= best here
    return max(best, 1.0 - np.exp(c * rho_max) if c < 0 else best)
