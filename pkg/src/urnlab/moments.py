"""Exact and asymptotic first and second moments of the composition vector.

Exact moments run the one-step recurrences forward from the start vector.
The asymptotic side builds the matrix ``B = A^T Qcal A / s^2`` and the
limiting covariance of the small-index regime (solved twice: as a restricted
Lyapunov equation and by quadrature of its integral representation) or the
critical-index limit.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
import scipy.linalg as sla
from scipy.integrate import quad_vec

from .errors import InvalidArgument, ModelError, NumericError
from .model import Mode, UrnSpec
from .spectral import Regime, SpectralDecomposition, decompose

__all__ = [
    "MomentTrajectory",
    "AsymptoticSummary",
    "exact_mean",
    "exact_cov",
    "moment_trajectory",
    "exact_moments_rational",
    "qcal_conditional",
    "cov_factor",
    "b_matrix",
    "sigma_small",
    "sigma_small_lyapunov",
    "sigma_small_quadrature",
    "sigma_critical",
    "clt_params",
    "xi",
]

SIGMA_AGREE_RTOL = 1e-8
SIGMA_FAIL_RTOL = 1e-6


def cov_factor(tau, s: int, mode: Mode):
    """Coefficient of the ``A^T(...)A`` correction in the covariance step."""
    if mode is Mode.WITH_REPLACEMENT:
        return 1 / (s * tau * tau)
    if s == 1:
        return 1 / (tau * tau)
    return (tau - s) / (s * tau * tau * (tau - 1))


@dataclass
class MomentTrajectory:
    ns: np.ndarray
    mu: np.ndarray
    sigma: np.ndarray
    mode: Mode

    @property
    def n_max(self) -> int:
        return int(self.ns[-1])

    def at(self, n: int) -> tuple[np.ndarray, np.ndarray]:
        i = int(np.searchsorted(self.ns, n))
        if i >= len(self.ns) or self.ns[i] != n:
            raise InvalidArgument(f"step {n} was not recorded")
        return self.mu[i], self.sigma[i]


def _steps(spec: UrnSpec, n: int, mode: Mode, record_every: int | None):
    A = spec.core.astype(float)
    k, s, b = spec.k, spec.s, spec.b
    I = np.eye(k)
    mu = np.array(spec.x0, dtype=float)
    S = np.zeros((k, k))
    tau = spec.tau0
    # Sigma 1 = 0 holds exactly for balanced cores; projecting each step back
    # onto that subspace keeps rounding from accumulating along 1
    balanced = bool(np.all(spec.core.sum(axis=1) == spec.core[0].sum()))
    Pb = I - np.full((k, k), 1.0 / k) if balanced else None
    out = []
    if record_every:
        out.append((0, mu.copy(), S.copy()))
    for step in range(1, n + 1):
        G = I + A / tau
        c = cov_factor(float(tau), s, mode)
        D = S + np.outer(mu, mu) - tau * np.diag(mu)
        S = G.T @ S @ G - c * (A.T @ D @ A)
        if Pb is not None:
            S = Pb @ S @ Pb
        S = 0.5 * (S + S.T)
        mu = mu @ G
        tau += b
        if record_every and (step % record_every == 0 or step == n):
            out.append((step, mu.copy(), S.copy()))
    return mu, S, out


def _check_n(n):
    if int(n) != n or n < 0:
        raise InvalidArgument(f"n must be a nonnegative integer, got {n!r}")
    return int(n)


def exact_mean(spec: UrnSpec, n: int) -> np.ndarray:
    """``E[X_n] = X_0 prod_{i<n} (I + A/tau_i)``; the same for both sampling modes."""
    n = _check_n(n)
    A = spec.core.astype(float)
    mu = np.array(spec.x0, dtype=float)
    tau = spec.tau0
    for _ in range(n):
        mu = mu + (mu @ A) / tau
        tau += spec.b
    return mu


def exact_cov(spec: UrnSpec, n: int, mode: Mode | str | None = None) -> np.ndarray:
    n = _check_n(n)
    mode = spec.mode if mode is None else Mode.parse(mode)
    return _steps(spec, n, mode, None)[1]


def moment_trajectory(spec: UrnSpec, n_max: int, mode: Mode | str | None = None,
                      every: int = 1) -> MomentTrajectory:
    n_max = _check_n(n_max)
    mode = spec.mode if mode is None else Mode.parse(mode)
    if every < 1:
        raise InvalidArgument("every must be at least 1")
    _, _, rows = _steps(spec, n_max, mode, every)
    ns = np.array([r[0] for r in rows])
    return MomentTrajectory(ns, np.array([r[1] for r in rows]), np.array([r[2] for r in rows]), mode)


def exact_moments_rational(spec: UrnSpec, n: int, mode: Mode | str | None = None):
    """Mean and covariance at step ``n`` in exact rational arithmetic (``n <= 64``)."""
    n = _check_n(n)
    if n > 64:
        raise InvalidArgument("rational evaluation is limited to n <= 64")
    mode = spec.mode if mode is None else Mode.parse(mode)
    k, s = spec.k, spec.s
    A = [[Fraction(int(v)) for v in row] for row in spec.core]
    mu = [Fraction(v) for v in spec.x0]
    S = [[Fraction(0)] * k for _ in range(k)]

    def matmul(X, Y):
        return [[sum(X[i][l] * Y[l][j] for l in range(k)) for j in range(k)] for i in range(k)]

    At = [list(r) for r in zip(*A)]
    tau = Fraction(spec.tau0)
    for _ in range(n):
        G = [[(1 if i == j else 0) + A[i][j] / tau for j in range(k)] for i in range(k)]
        Gt = [list(r) for r in zip(*G)]
        c = cov_factor(tau, s, mode)
        D = [[S[i][j] + mu[i] * mu[j] - (tau * mu[i] if i == j else 0) for j in range(k)]
             for i in range(k)]
        first = matmul(matmul(Gt, S), G)
        corr = matmul(matmul(At, D), A)
        S = [[first[i][j] - c * corr[i][j] for j in range(k)] for i in range(k)]
        mu = [sum(mu[l] * G[l][j] for l in range(k)) for j in range(k)]
        tau += spec.b
    return np.array(mu, dtype=object), np.array(S, dtype=object)


def qcal_conditional(state, tau, s: int, mode: Mode | str = Mode.WITHOUT_REPLACEMENT) -> np.ndarray:
    """``E[Q^T Q | state]`` for one sample of size ``s``."""
    x = np.asarray(state, dtype=float)
    mode = Mode.parse(mode)
    if abs(x.sum() - tau) > 1e-9 * max(1.0, abs(tau)):
        raise InvalidArgument(f"state sums to {x.sum()}, not tau={tau}")
    if mode is Mode.WITH_REPLACEMENT:
        if tau < 1:
            raise InvalidArgument("need tau >= 1")
        p = x / tau
        return s * (s - 1) * np.outer(p, p) + s * np.diag(p)
    if tau < s:
        raise InvalidArgument(f"cannot draw {s} balls from {tau}")
    if s == 1:
        return np.diag(x / tau)
    denom = tau * (tau - 1)
    return (s * (s - 1) * np.outer(x, x) + s * (tau - s) * np.diag(x)) / denom


def _require_irreducible(dec: SpectralDecomposition):
    if not dec.irreducible or dec.v1 is None:
        raise ModelError("asymptotic moments require an irreducible core")


def qcal_limit(v1: np.ndarray, s: int) -> np.ndarray:
    return s * (s - 1) * np.outer(v1, v1) + s * np.diag(v1)


def b_matrix(dec: SpectralDecomposition, core, s: int) -> np.ndarray:
    _require_irreducible(dec)
    A = np.asarray(core, dtype=float)
    B = A.T @ qcal_limit(dec.v1, s) @ A / (s * s)
    return 0.5 * (B + B.T)


def _real_p1(dec: SpectralDecomposition) -> np.ndarray:
    k = dec.core.shape[0]
    return np.outer(np.ones(k), dec.v1)


def sigma_small_lyapunov(dec: SpectralDecomposition, B, b: float) -> np.ndarray:
    """Solve the Lyapunov equation on the range of ``I - P_1``."""
    A = dec.core
    k = A.shape[0]
    P_hat = np.eye(k) - _real_p1(dec)
    U, sv, _ = np.linalg.svd(P_hat)
    r = int(np.sum(sv > 1e-10 * max(1.0, sv[0]) if sv.size else 0))
    if r == 0:
        return np.zeros((k, k))
    V = U[:, :r]
    W = V.T @ P_hat
    Ar = V.T @ A @ V
    shift = 0.5 * b * np.eye(r)
    Y = sla.solve_sylvester(Ar.T - shift, Ar - shift, -(V.T @ np.asarray(B) @ V))
    out = b * (W.T @ Y @ W)
    return 0.5 * (out + out.T)


def sigma_small_quadrature(dec: SpectralDecomposition, B, b: float,
                           max_pieces: int = 5000) -> np.ndarray:
    """Integrate ``int_0^1 M(u)^T B M(u) du`` with ``M(u) = (I - P_1) u^(-A/b)``.

    ``(I - P_1) u^(-A/b)`` is evaluated as ``exp(-ln(u) (A - b P_1)/b) - P_1``
    so the growing principal mode never enters.  The interval is cut into
    pieces ``[2^-(j+1), 2^-j]`` toward the endpoint singularity at 0.
    """
    A = dec.core
    B = np.asarray(B, dtype=float)
    P1 = _real_p1(dec)
    K = (A - b * P1) / b

    def integrand(u):
        M = sla.expm(-math.log(u) * K) - P1
        return M.T @ B @ M

    total = np.zeros_like(B)
    quiet = 0
    for j in range(max_pieces):
        hi, lo = 2.0 ** -j, 2.0 ** -(j + 1)
        piece, _ = quad_vec(integrand, lo, hi, epsabs=1e-16, epsrel=1e-12)
        total += piece
        if np.max(np.abs(piece)) <= 1e-14 * max(1.0, np.max(np.abs(total))):
            quiet += 1
            if quiet >= 3:
                return 0.5 * (total + total.T)
        else:
            quiet = 0
    raise NumericError(f"quadrature did not converge within {max_pieces} pieces")


def sigma_small(dec: SpectralDecomposition, B, b: float) -> np.ndarray:
    """Limiting ``Cov[X_n]/n`` of a small-index urn, cross-checked two ways."""
    if dec.regime is not Regime.SMALL:
        raise ModelError(f"core index regime is {dec.regime.value}, not small")
    _require_irreducible(dec)
    B = np.asarray(B, dtype=float)
    if not np.any(B):
        return np.zeros_like(B)
    try:
        lyap = sigma_small_lyapunov(dec, B, b)
    except (np.linalg.LinAlgError, sla.LinAlgError):
        lyap = None
    quad = sigma_small_quadrature(dec, B, b)
    if lyap is None or not np.all(np.isfinite(lyap)):
        return quad
    scale = max(np.max(np.abs(quad)), 1e-300)
    rel = np.max(np.abs(lyap - quad)) / scale
    if rel > SIGMA_FAIL_RTOL:
        raise NumericError(f"Lyapunov and quadrature limits disagree (relative {rel:.3g})")
    if rel > SIGMA_AGREE_RTOL:
        warnings.warn(f"Lyapunov and quadrature limits agree only to {rel:.3g}", RuntimeWarning)
    return lyap


def sigma_critical(dec: SpectralDecomposition, B, b: float) -> np.ndarray:
    if dec.regime is not Regime.CRITICAL:
        raise ModelError(f"core index regime is {dec.regime.value}, not critical")
    B = np.asarray(B, dtype=float)
    nu = dec.nu2
    k = B.shape[0]
    acc = np.zeros((k, k), dtype=complex)
    for g in dec.groups_with_real_part(0.5 * b):
        L = np.linalg.matrix_power(g.N, nu) if nu else np.eye(k)
        left = L.conj().T @ g.P.conj().T
        acc += left @ B @ g.P @ L
    acc /= b ** (2 * nu) * (2 * nu + 1) * math.factorial(nu) ** 2
    if np.max(np.abs(acc.imag)) > 1e-10 * max(1.0, np.max(np.abs(acc.real))):
        raise NumericError("critical limit has a non-negligible imaginary part")
    out = acc.real
    return 0.5 * (out + out.T)


def xi(regime: Regime, n: float, nu2: int = 0, index: float | None = None) -> float:
    """Variance scale: ``n``, ``n ln^(2nu+1) n`` or ``n^(2 index) ln^(2nu) n``."""
    if regime is Regime.SMALL:
        return float(n)
    if regime is Regime.CRITICAL:
        return n * math.log(n) ** (2 * nu2 + 1)
    return n ** (2 * index) * math.log(n) ** (2 * nu2)


@dataclass
class AsymptoticSummary:
    regime: Regime
    index: float | None
    nu2: int
    v1: np.ndarray
    Qcal: np.ndarray
    B: np.ndarray
    sigma_inf: np.ndarray | None
    mu_slope: np.ndarray
    xi_description: str
    notes: list[str] = field(default_factory=list)

    def xi(self, n: float) -> float:
        return xi(self.regime, n, self.nu2, self.index)

    def to_dict(self) -> dict:
        return {
            "regime": self.regime.value,
            "index": self.index,
            "nu2": self.nu2,
            "v1": self.v1.tolist(),
            "Qcal": self.Qcal.tolist(),
            "B": self.B.tolist(),
            "sigma_inf": None if self.sigma_inf is None else self.sigma_inf.tolist(),
            "covariance_limit": "available" if self.sigma_inf is not None else "not applicable",
            "xi": self.xi_description,
            "mu_slope": self.mu_slope.tolist(),
            "notes": list(self.notes),
        }


def clt_params(spec: UrnSpec, dec: SpectralDecomposition | None = None) -> AsymptoticSummary:
    spec.require_valid()
    dec = decompose(spec.core) if dec is None else dec
    _require_irreducible(dec)
    b, s = spec.b, spec.s
    Q = qcal_limit(dec.v1, s)
    B = b_matrix(dec, spec.core, s)
    notes = []
    if dec.regime is Regime.SMALL:
        sig = sigma_small(dec, B, b)
        desc = "n"
    elif dec.regime is Regime.CRITICAL:
        sig = sigma_critical(dec, B, b)
        p = 2 * dec.nu2 + 1
        desc = "n*ln(n)" if p == 1 else f"n*ln(n)^{p}"
    else:
        sig = None
        desc = f"n^{2 * dec.index:.12g}" + (f"*ln(n)^{2 * dec.nu2}" if dec.nu2 else "")
        notes.append(
            "large-index urn: no Gaussian covariance limit; the limit may depend on the "
            "initial composition, use the exact covariance recurrence instead")
    if spec.mode is Mode.WITH_REPLACEMENT:
        notes.append("with-replacement sampling shares the mean recurrence; limits use the same B")
    return AsymptoticSummary(dec.regime, dec.index, dec.nu2, dec.v1, Q, B, sig,
                             b * dec.v1, desc, notes)
