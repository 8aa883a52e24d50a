"""Eigen-structure of a core matrix.

Eigenvalues are grouped (numerically coincident eigenvalues form one group)
and every group carries its spectral projection ``P``, the nilpotent part
``N = (A - lam I) P`` and the nilpotency index ``nu``.  Projections come from
a reordered complex Schur form decoupled by a Sylvester solve, which stays
well behaved for defective cores where eigenvector matrices do not.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .errors import InvalidArgument, ModelError, NumericError
from .model import check_irreducible

__all__ = [
    "Regime",
    "EigenGroup",
    "SpectralDecomposition",
    "decompose",
    "principal_pair",
    "classify",
    "f_product",
    "f_scalar",
    "f_gamma_ratio",
    "matrix_power_x",
]

DEFAULT_TOL = 1e-7
DEFAULT_TOL_HALF = 1e-9
NU_RTOL = 1e-8


class Regime(str, enum.Enum):
    SMALL = "small"
    CRITICAL = "critical"
    LARGE = "large"


@dataclass(frozen=True)
class EigenGroup:
    lam: complex
    multiplicity: int
    P: np.ndarray
    N: np.ndarray
    nu: int
    members: tuple[complex, ...]

    @property
    def algebraic_multiplicity(self) -> int:
        return self.multiplicity


@dataclass(frozen=True)
class SpectralDecomposition:
    core: np.ndarray
    groups: tuple[EigenGroup, ...]
    lambda1: float
    v1: np.ndarray | None
    nu2: int
    index: float | None
    regime: Regime
    irreducible: bool
    tol: float

    @property
    def b(self) -> float:
        return self.lambda1

    @property
    def eigenvalues(self) -> list[complex]:
        return [g.lam for g in self.groups]

    @property
    def P1(self) -> np.ndarray:
        return self.groups[0].P

    @property
    def P_hat(self) -> np.ndarray:
        """Projection onto everything except the principal eigenvalue."""
        return np.eye(self.core.shape[0]) - self.groups[0].P

    def groups_with_real_part(self, re: float) -> list[EigenGroup]:
        thr = self.tol * (1.0 + abs(re))
        return [g for g in self.groups[1:] if abs(g.lam.real - re) <= thr]

    def to_dict(self) -> dict:
        lam = [[float(g.lam.real), float(g.lam.imag)] for g in self.groups]
        return {
            "lambda": lam,
            "multiplicity": [g.multiplicity for g in self.groups],
            "nu": [g.nu for g in self.groups],
            "index": self.index,
            "regime": self.regime.value,
            "nu2": self.nu2,
            "irreducible": self.irreducible,
            "v1": None if self.v1 is None else [float(v) for v in self.v1],
        }


def _cluster(eigs: np.ndarray, tol: float) -> list[list[int]]:
    k = len(eigs)
    parent = list(range(k))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    def close(i, j):
        return abs(eigs[i] - eigs[j]) <= tol * (1.0 + max(abs(eigs[i]), abs(eigs[j])))

    for i in range(k):
        for j in range(i + 1, k):
            if close(i, j):
                parent[find(i)] = find(j)
    clusters: dict[int, list[int]] = {}
    for i in range(k):
        clusters.setdefault(find(i), []).append(i)
    out = list(clusters.values())
    for c in out:
        for a in c:
            for b in c:
                if not close(a, b):
                    raise NumericError(
                        f"eigenvalues {eigs[a]:.6g} and {eigs[b]:.6g} were merged through a chain "
                        f"of neighbours but are not within tol={tol:g}; try a different tol")
    return out


def _projector(A: np.ndarray, center: complex, m: int, radius: float) -> np.ndarray:
    k = A.shape[0]
    if m == k:
        return np.eye(k, dtype=complex)
    T, Z, sdim = sla.schur(A.astype(complex), output="complex",
                           sort=lambda z: abs(z - center) <= radius)
    if sdim != m:
        raise NumericError(
            f"Schur reordering selected {sdim} eigenvalues near {center:.6g}, expected {m}")
    T11, T12, T22 = T[:m, :m], T[:m, m:], T[m:, m:]
    # T11 R - R T22 = -T12 decouples the two diagonal blocks
    R = sla.solve_sylvester(T11, -T22, -T12)
    Pi = np.zeros((k, k), dtype=complex)
    Pi[:m, :m] = np.eye(m)
    Pi[:m, m:] = -R
    return Z @ Pi @ Z.conj().T


def _nilpotency(N: np.ndarray, m: int, scale: float) -> int:
    nu = 0
    M = N.copy()
    for j in range(1, m + 1):
        if np.linalg.norm(M) <= NU_RTOL * scale ** j:
            return nu
        nu = j
        M = M @ N
    return min(nu, m - 1)


def principal_pair(core) -> tuple[float, np.ndarray]:
    """Perron eigenvalue ``b`` and the left eigenvector normalized to sum 1."""
    A = np.asarray(core, dtype=float)
    if not check_irreducible(np.asarray(core)):
        raise ModelError("principal pair requires an irreducible core")
    b = float(A[0].sum())
    k = A.shape[0]
    M = np.vstack([(A - b * np.eye(k)).T, np.ones((1, k))])
    rhs = np.zeros(k + 1)
    rhs[-1] = 1.0
    v1, *_ = np.linalg.lstsq(M, rhs, rcond=None)
    resid = np.max(np.abs(v1 @ A - b * v1))
    if resid > 1e-10 * max(1.0, abs(b)) or np.any(v1 <= 0):
        raise NumericError(f"principal eigenvector solve is inaccurate (residual {resid:.3g})")
    return b, v1


def classify(dec: SpectralDecomposition, tol_half: float = DEFAULT_TOL_HALF) -> Regime:
    if dec.index is None:
        return Regime.SMALL
    if len(dec.groups) > 1 and dec.groups[0].multiplicity == 1:
        re2 = dec.groups[1].lam.real
    else:
        re2 = dec.groups[0].lam.real
    b = dec.lambda1
    # exact-rational critical cases land on b/2 up to rounding
    if abs(2.0 * re2 - b) <= 1e-9 * abs(b):
        regime = Regime.CRITICAL
    elif abs(dec.index - 0.5) <= tol_half:
        regime = Regime.CRITICAL
    elif dec.index < 0.5:
        regime = Regime.SMALL
    else:
        regime = Regime.LARGE
    if abs(dec.index - 0.5) < 1e-6:
        warnings.warn(
            f"core index {dec.index:.12g} is within 1e-6 of 1/2; the regime call "
            f"({regime.value}) depends on the tolerance", RuntimeWarning, stacklevel=2)
    return regime


def decompose(core, tol: float | None = None) -> SpectralDecomposition:
    tol = DEFAULT_TOL if tol is None else float(tol)
    if tol <= 0:
        raise InvalidArgument(f"tol must be positive, got {tol}")
    A = np.asarray(core, dtype=float)
    k = A.shape[0]
    try:
        eigs = sla.eigvals(A)
    except sla.LinAlgError as exc:
        raise NumericError(f"eigenvalue solver failed: {exc}") from exc

    clusters = _cluster(eigs, tol)
    normA = max(1.0, float(np.linalg.norm(A, 2)))
    groups = []
    for c in clusters:
        members = eigs[c]
        lam = complex(members.mean())
        m = len(c)
        spread = float(np.max(np.abs(members - lam))) if m > 1 else 0.0
        others = np.delete(eigs, c)
        gap = float(np.min(np.abs(others - lam))) if others.size else np.inf
        if gap <= spread:
            raise NumericError(f"eigenvalue cluster near {lam:.6g} is not separated; try a different tol")
        radius = 0.5 * (spread + gap) if np.isfinite(gap) else np.inf
        P = _projector(A, lam, m, radius)
        N = (A - lam * np.eye(k)) @ P
        nu = _nilpotency(N, m, normA)
        if nu == 0:
            N = np.zeros_like(N)
        groups.append(EigenGroup(lam, m, P, N, nu, tuple(complex(z) for z in members)))

    groups.sort(key=lambda g: (-g.lam.real, -g.lam.imag))

    Psum = sum(g.P for g in groups)
    recon = sum(g.lam * g.P + g.N for g in groups)
    if (np.max(np.abs(Psum - np.eye(k))) > 1e-6
            or np.max(np.abs(recon - A)) > 1e-6 * normA):
        raise NumericError("spectral projections fail to reconstruct the core; try a different tol")

    irreducible = check_irreducible(np.asarray(core))
    lambda1 = float(A[0].sum())
    if abs(groups[0].lam - lambda1) > 1e-6 * normA:
        # unbalanced input; fall back to the dominant eigenvalue
        lambda1 = float(groups[0].lam.real)

    balanced = bool(np.allclose(A.sum(axis=1), A[0].sum(), rtol=0, atol=1e-12 * normA))
    v1 = None
    if irreducible and balanced:
        _, v1 = principal_pair(core)
    elif groups[0].multiplicity == 1:
        row = groups[0].P[np.argmax(np.abs(groups[0].P).sum(axis=1))]
        if abs(row.sum()) > 1e-12:
            v1 = np.real(row / row.sum())

    if len(groups) == 1 and groups[0].multiplicity == 1:
        index, nu2 = None, 0
    else:
        if groups[0].multiplicity > 1:
            re2 = groups[0].lam.real
            nu2 = groups[0].nu
        else:
            re2 = groups[1].lam.real
            thr = tol * (1.0 + abs(re2))
            nu2 = max(g.nu for g in groups[1:] if abs(g.lam.real - re2) <= thr)
        index = float(re2 / lambda1)

    dec = SpectralDecomposition(A, tuple(groups), lambda1, v1, nu2, index,
                                Regime.SMALL, irreducible, tol)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        regime = classify(dec)
    object.__setattr__(dec, "regime", regime)
    return dec


def f_product(i: int, j: int, core, tau0: int, b: int) -> np.ndarray:
    """``prod_{i <= l < j} (I + A / (b l + tau0))``; identity when ``i == j``."""
    if i < 0 or j < i:
        raise InvalidArgument(f"need 0 <= i <= j, got i={i}, j={j}")
    A = np.asarray(core, dtype=float)
    k = A.shape[0]
    F = np.eye(k)
    I = np.eye(k)
    for ell in range(i, j):
        F = F @ (I + A / (b * ell + tau0))
    return F


def f_scalar(i: int, j: int, z: complex, tau0: int, b: int) -> complex:
    out = 1.0 + 0j
    for ell in range(i, j):
        out *= 1.0 + z / (b * ell + tau0)
    return out


# B_{2m} / (2m (2m - 1)) for the Stirling series of log Gamma
_STIRLING = (1 / 12, -1 / 360, 1 / 1260, -1 / 1680, 1 / 1188, -691 / 360360, 1 / 156,
             -3617 / 122400)
_STIRLING_MIN = 20.0


def _clog1p(z: complex) -> complex:
    # numpy's complex log1p is log(1 + z) and loses digits for small |z|
    zr, zi = z.real, z.imag
    return complex(0.5 * math.log1p(zr * (2.0 + zr) + zi * zi), math.atan2(zi, 1.0 + zr))


def _lgamma_diff(x: float, d: complex) -> complex:
    """``log Gamma(x + d) - log Gamma(x)`` without cancelling two large logs.

    ``x`` is shifted up to ``_STIRLING_MIN`` and the Stirling series is written
    in difference form, so every term is of the size of the result.  The
    imaginary part is only defined modulo ``2 pi``.
    """
    d = complex(d)
    acc = 0j
    while x < _STIRLING_MIN:
        acc -= _clog1p(d / x)
        x += 1.0
    y = x + d
    acc += (x - 0.5) * _clog1p(d / x) + d * np.log(y) - d
    px, py = 1.0 / x, 1.0 / y
    x2, y2 = px * px, py * py
    for c in _STIRLING:
        acc += c * (py - px)
        px *= x2
        py *= y2
    return acc


def f_gamma_ratio(i: int, j: int, z: complex, tau0: int, b: int) -> complex:
    """Closed form of :func:`f_scalar` as a ratio of Gamma functions.

    ``Gamma(j + w) Gamma(i + a) / (Gamma(j + a) Gamma(i + w))`` with
    ``a = tau0 / b`` and ``w = (tau0 + z) / b``.
    """
    if i < 0 or j < i:
        raise InvalidArgument(f"need 0 <= i <= j, got i={i}, j={j}")
    z = complex(z)
    root = -(tau0 + z.real) / b
    if z.imag == 0 and root.is_integer() and i <= root < j:
        return 0j  # one factor 1 + z / tau_l vanishes
    a = tau0 / b
    return complex(np.exp(_lgamma_diff(j + a, z / b) - _lgamma_diff(i + a, z / b)))


def matrix_power_x(core, b: float, x: float) -> np.ndarray:
    """``x ** (-A / b) = exp(-ln(x) A / b)`` for ``0 < x <= 1``."""
    if not (0.0 < x <= 1.0):
        raise InvalidArgument(f"x must lie in (0, 1], got {x}")
    A = np.asarray(core, dtype=float)
    if x == 1.0:
        return np.eye(A.shape[0])
    return sla.expm(-math.log(x) * A / b)
