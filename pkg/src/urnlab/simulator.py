"""Stochastic simulation of (k, s, b)-urns and Monte Carlo checks of the theory.

Samples are drawn color by color: the count of color ``i`` is a univariate
hypergeometric (or binomial, with replacement) variate conditioned on what
is left of the sample and of the urn, obtained by inverting its CDF with one
uniform.  All inner loops are compiled with numba.
"""

from __future__ import annotations

import math
import os
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any

import numba as nb
import numpy as np
from scipy import stats

from .combinatorics import Composition, composition_rank
from .errors import InvalidArgument, ModelError, TenabilityViolation
from .model import Mode, ReplacementMatrix, UrnSpec
from .moments import AsymptoticSummary, MomentTrajectory, clt_params
from .rng import stream_key, uniforms

# numba falls back to another threading layer on its own; the notice is noise
warnings.filterwarnings("ignore", message="The TBB threading layer", category=nb.NumbaWarning)

__all__ = [
    "UrnState",
    "Trajectory",
    "MonteCarloSummary",
    "Thresholds",
    "draw_sample",
    "sample_many",
    "step",
    "simulate_one",
    "simulate_terminal",
    "monte_carlo",
    "summarize",
    "compare",
    "set_threads",
]


# ---------------------------------------------------------------- kernels

# relative pmf weight below which tails are dropped; stopping at a normal
# double keeps the upward rescan accurate (denormals carry only a few bits)
_TAIL = 1e-30


@nb.njit(cache=True)
def _hypergeom_inv(good, total, m, u):
    """Number of ``good`` items in ``m`` draws without replacement from ``total``."""
    bad = total - good
    lo = max(0, m - bad)
    hi = min(good, m)
    if lo == hi:
        return lo
    mode = ((m + 1) * (good + 1)) // (total + 2)
    mode = min(max(mode, lo), hi)
    # weights relative to the mode, walked out until they drop below _TAIL
    wsum = 1.0
    w = 1.0
    q = mode
    start, wstart = mode, 1.0
    while q > lo:
        # p(q-1)/p(q)
        w *= q * (bad - m + q) / ((good - q + 1.0) * (m - q + 1.0))
        q -= 1
        if w < _TAIL:
            break
        wsum += w
        start, wstart = q, w
    w = 1.0
    q = mode
    while q < hi:
        w *= (good - q) * (m - q) / ((q + 1.0) * (bad - m + q + 1.0))
        q += 1
        if w < _TAIL:
            break
        wsum += w
    target = u * wsum
    q = start
    w = wstart
    acc = w
    while acc <= target and q < hi:
        w *= (good - q) * (m - q) / ((q + 1.0) * (bad - m + q + 1.0))
        q += 1
        acc += w
    return q


@nb.njit(cache=True)
def _binom_inv(m, p, u):
    if p <= 0.0:
        return 0
    if p >= 1.0:
        return m
    r = p / (1.0 - p)
    mode = min(int((m + 1) * p), m)
    wsum = 1.0
    w = 1.0
    q = mode
    start, wstart = mode, 1.0
    while q > 0:
        w *= q / ((m - q + 1.0) * r)
        q -= 1
        if w < _TAIL:
            break
        wsum += w
        start, wstart = q, w
    w = 1.0
    q = mode
    while q < m:
        w *= (m - q) * r / (q + 1.0)
        q += 1
        if w < _TAIL:
            break
        wsum += w
    target = u * wsum
    q = start
    w = wstart
    acc = w
    while acc <= target and q < m:
        w *= (m - q) * r / (q + 1.0)
        q += 1
        acc += w
    return q


@nb.njit(cache=True)
def _sample_into(q, x, tau, s, with_repl, u):
    k = x.shape[0]
    rem_total = tau
    rem_s = s
    for i in range(k - 1):
        if rem_s == 0:
            q[i] = 0
            continue
        if with_repl:
            c = _binom_inv(rem_s, x[i] / rem_total if rem_total > 0 else 0.0, u[i])
        else:
            c = _hypergeom_inv(x[i], rem_total, rem_s, u[i])
        q[i] = c
        rem_s -= c
        rem_total -= x[i]
    q[k - 1] = rem_s


@nb.njit(cache=True)
def _sample_many_kernel(x, tau, s, with_repl, u, out):
    for r in range(out.shape[0]):
        _sample_into(out[r], x, tau, s, with_repl, u[r])


@nb.njit(cache=True)
def _advance(x, q, core, s):
    """Add the replacement row of ``q``; returns False if a count goes negative."""
    k = x.shape[0]
    ok = True
    for j in range(k):
        acc = 0
        for i in range(k):
            acc += q[i] * core[i, j]
        x[j] += acc // s
        if x[j] < 0:
            ok = False
    return ok


@nb.njit(cache=True)
def _path_kernel(core, s, b, x0, n, key0, key1, with_repl, xs, qs):
    k = x0.shape[0]
    u = np.empty(max(k - 1, 1))
    x = x0.copy()
    xs[0] = x
    tau = x0.sum()
    for t in range(1, n + 1):
        if not with_repl and tau < s:
            return t
        uniforms(u, key0, key1, t, k - 1)
        _sample_into(qs[t - 1], x, tau, s, with_repl, u)
        if not _advance(x, qs[t - 1], core, s):
            xs[t] = x
            return t
        xs[t] = x
        tau += b
    return 0


@nb.njit(cache=True, parallel=True)
def _terminal_kernel(core, s, b, x0, n, key0, first_rep, with_repl, out_x, out_q, out_prev, status):
    reps = out_x.shape[0]
    k = x0.shape[0]
    for r in nb.prange(reps):
        key1 = np.uint64(first_rep + r)
        u = np.empty(max(k - 1, 1))
        q = np.zeros(k, dtype=np.int64)
        x = x0.copy()
        prev = x0.copy()
        tau = x0.sum()
        st = 0
        for t in range(1, n + 1):
            if not with_repl and tau < s:
                st = t
                break
            uniforms(u, key0, key1, t, k - 1)
            _sample_into(q, x, tau, s, with_repl, u)
            for j in range(k):
                prev[j] = x[j]
            if not _advance(x, q, core, s):
                st = t
                break
            tau += b
        status[r] = st
        for j in range(k):
            out_x[r, j] = x[j]
            out_q[r, j] = q[j]
            out_prev[r, j] = prev[j]


def set_threads(threads: int | None = None) -> int:
    """Cap numba parallelism; ``None`` reads ``URNLAB_THREADS`` (0 = all)."""
    if threads is None:
        threads = int(os.environ.get("URNLAB_THREADS", "0") or 0)
    avail = nb.config.NUMBA_NUM_THREADS
    threads = avail if threads <= 0 else min(threads, avail)
    nb.set_num_threads(threads)
    return threads


# ---------------------------------------------------------------- single steps

@dataclass(frozen=True)
class UrnState:
    x: tuple[int, ...]
    n: int = 0

    @property
    def tau(self) -> int:
        return sum(self.x)


def _as_generator(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def draw_sample(state: UrnState, s: int, mode, rng) -> Composition:
    mode = Mode.parse(mode)
    x = np.asarray(state.x, dtype=np.int64)
    tau = int(x.sum())
    if mode is Mode.WITHOUT_REPLACEMENT and tau < s:
        raise TenabilityViolation(f"cannot draw {s} balls from an urn holding {tau}")
    if mode is Mode.WITH_REPLACEMENT and tau < 1:
        raise TenabilityViolation("cannot draw from an empty urn")
    u = _as_generator(rng).random(max(len(x) - 1, 1))
    q = np.zeros(len(x), dtype=np.int64)
    _sample_into(q, x, tau, s, mode is Mode.WITH_REPLACEMENT, u)
    parts = tuple(int(v) for v in q)
    return Composition(parts, composition_rank(parts))


def sample_many(x, s: int, mode, size: int, rng) -> np.ndarray:
    """``size`` independent samples from the fixed composition ``x``."""
    mode = Mode.parse(mode)
    x = np.asarray(x, dtype=np.int64)
    tau = int(x.sum())
    if mode is Mode.WITHOUT_REPLACEMENT and tau < s:
        raise TenabilityViolation(f"cannot draw {s} balls from an urn holding {tau}")
    u = _as_generator(rng).random((size, max(len(x) - 1, 1)))
    out = np.zeros((size, len(x)), dtype=np.int64)
    _sample_many_kernel(x, tau, s, mode is Mode.WITH_REPLACEMENT, u, out)
    return out


def step(state: UrnState, M: ReplacementMatrix, draw) -> UrnState:
    parts = tuple(draw.parts) if isinstance(draw, Composition) else tuple(int(v) for v in draw)
    x = np.asarray(state.x, dtype=np.int64) + M.row(parts)
    if np.any(x < 0):
        raise TenabilityViolation(
            f"draw {parts} from {state.x} leaves negative counts {x.tolist()}")
    return UrnState(tuple(int(v) for v in x), state.n + 1)


# ---------------------------------------------------------------- trajectories

@dataclass
class Trajectory:
    x: np.ndarray
    draws: np.ndarray
    s: int
    b: int
    y_num: np.ndarray | None = None
    y_den: np.ndarray | None = None

    @property
    def n(self) -> int:
        return len(self.draws)

    @property
    def states(self) -> list[UrnState]:
        return [UrnState(tuple(int(v) for v in row), i) for i, row in enumerate(self.x)]

    @property
    def compositions(self) -> list[Composition]:
        return [Composition(tuple(int(v) for v in q), composition_rank(q)) for q in self.draws]

    @property
    def y(self) -> np.ndarray | None:
        if self.y_num is None:
            return None
        return self.y_num.astype(float) / self.y_den.astype(float)[:, None]

    def y_exact(self, i: int) -> tuple[Fraction, ...]:
        """Martingale difference of step ``i + 1`` as exact fractions."""
        d = int(self.y_den[i])
        return tuple(Fraction(int(v), d) for v in self.y_num[i])


def _martingale_numerators(spec: UrnSpec, x_prev: np.ndarray, q: np.ndarray):
    # Y = (Q/s - X/tau) A = ((tau Q - s X) A) / (s tau); python ints keep it exact
    tau = x_prev.astype(object).sum(axis=1)
    lhs = tau[:, None] * q.astype(object) - spec.s * x_prev.astype(object)
    num = lhs.dot(spec.core.astype(object))
    den = spec.s * tau
    return num, den


def _key(seed: int, rep: int):
    return stream_key(seed, rep)


def simulate_one(spec: UrnSpec, n: int, seed: int = 0, replication: int = 0,
                 record_y: bool = False) -> Trajectory:
    """One path of length ``n``; the stream is keyed by ``(seed, replication)``."""
    if n < 0:
        raise InvalidArgument("n must be nonnegative")
    k = spec.k
    xs = np.zeros((n + 1, k), dtype=np.int64)
    qs = np.zeros((n, k), dtype=np.int64)
    x0 = np.asarray(spec.x0, dtype=np.int64)
    k0, k1 = _key(seed, replication)
    bad = _path_kernel(spec.core, spec.s, spec.b, x0, n, k0, k1,
                       spec.mode is Mode.WITH_REPLACEMENT, xs, qs)
    if bad:
        raise TenabilityViolation(
            f"path became untenable at step {bad} (state {xs[bad - 1].tolist()})")
    traj = Trajectory(xs, qs, spec.s, spec.b)
    if record_y and n > 0:
        traj.y_num, traj.y_den = _martingale_numerators(spec, xs[:-1], qs)
    return traj


def simulate_terminal(spec: UrnSpec, n: int, reps: int, seed: int = 0, first_rep: int = 0,
                      threads: int | None = None):
    """Terminal states, last draws and penultimate states of ``reps`` paths."""
    set_threads(threads)
    k = spec.k
    out_x = np.zeros((reps, k), dtype=np.int64)
    out_q = np.zeros((reps, k), dtype=np.int64)
    out_prev = np.zeros((reps, k), dtype=np.int64)
    status = np.zeros(reps, dtype=np.int64)
    k0, _ = _key(seed, 0)
    _terminal_kernel(spec.core, spec.s, spec.b, np.asarray(spec.x0, dtype=np.int64), n, k0,
                     first_rep, spec.mode is Mode.WITH_REPLACEMENT, out_x, out_q, out_prev, status)
    if np.any(status):
        r = int(np.nonzero(status)[0][0])
        raise TenabilityViolation(f"replication {first_rep + r} became untenable at step {status[r]}")
    return out_x, out_q, out_prev


# ---------------------------------------------------------------- Monte Carlo

@dataclass
class MonteCarloSummary:
    reps: int
    n: int
    seed: int
    mode: Mode
    mean_hat: np.ndarray
    cov_hat: np.ndarray
    mean_se: np.ndarray
    cov_se: np.ndarray
    std_moments: dict[str, Any] | None = None
    yy_hat: np.ndarray | None = None
    yy_se: np.ndarray | None = None
    terminal: np.ndarray | None = field(default=None, repr=False)

    @property
    def k(self) -> int:
        return len(self.mean_hat)

    def to_dict(self) -> dict[str, Any]:
        d = {
            "reps": self.reps,
            "n": self.n,
            "seed": self.seed,
            "mode": self.mode.value,
            "mean_hat": self.mean_hat.tolist(),
            "mean_se": self.mean_se.tolist(),
            "cov_hat": self.cov_hat.tolist(),
            "cov_se": self.cov_se.tolist(),
            "std_moments": self.std_moments,
        }
        if self.yy_hat is not None:
            d["yy_hat"] = self.yy_hat.tolist()
            d["yy_se"] = self.yy_se.tolist()
        return d


def _exact_mean_cov(X: np.ndarray):
    """Sample mean and covariance from exact integer sums (order independent)."""
    R = X.shape[0]
    Xo = X.astype(object)
    S1 = Xo.sum(axis=0)
    S2 = Xo.T.dot(Xo)
    k = X.shape[1]
    mean = np.array([float(Fraction(int(S1[i]), R)) for i in range(k)])
    cov = np.zeros((k, k))
    for i in range(k):
        for j in range(k):
            num = Fraction(int(S2[i, j])) - Fraction(int(S1[i]) * int(S1[j]), R)
            cov[i, j] = float(num / (R - 1))
    return mean, cov


def _cov_se(X: np.ndarray, mean: np.ndarray) -> np.ndarray:
    R = X.shape[0]
    D = X - mean
    prods = D[:, :, None] * D[:, None, :]
    return prods.std(axis=0, ddof=1) / math.sqrt(R)


def summarize(terminal: np.ndarray, spec: UrnSpec, n: int, seed: int = 0,
              theory: AsymptoticSummary | None = None, y_last: np.ndarray | None = None,
              keep_terminal: bool = True) -> MonteCarloSummary:
    X = np.asarray(terminal, dtype=np.int64)
    R = X.shape[0]
    if R < 2:
        raise InvalidArgument("need at least two replications")
    mean, cov = _exact_mean_cov(X)
    mean_se = np.sqrt(np.maximum(np.diag(cov), 0.0) / R)
    cov_se = _cov_se(X.astype(float), mean)

    std = None
    if theory is not None and n >= 2:
        scale = math.sqrt(theory.xi(n))
        Z = (X - spec.b * theory.v1 * n) / scale
        with np.errstate(all="ignore"):
            skew = stats.skew(Z, axis=0, bias=False)
            kurt = stats.kurtosis(Z, axis=0, fisher=True, bias=False)
        std = {
            "centering": (spec.b * theory.v1 * n).tolist(),
            "scale": scale,
            "xi": theory.xi_description,
            "z_mean": Z.mean(axis=0).tolist(),
            "z_var": Z.var(axis=0, ddof=1).tolist(),
            "skewness": [None if not np.isfinite(v) else float(v) for v in skew],
            "excess_kurtosis": [None if not np.isfinite(v) else float(v) for v in kurt],
        }

    yy_hat = yy_se = None
    if y_last is not None:
        Y = np.asarray(y_last, dtype=float)
        P = Y[:, :, None] * Y[:, None, :]
        yy_hat = P.mean(axis=0)
        yy_se = P.std(axis=0, ddof=1) / math.sqrt(R)

    return MonteCarloSummary(R, n, seed, spec.mode, mean, cov, mean_se, cov_se, std,
                             yy_hat, yy_se, X if keep_terminal else None)


def monte_carlo(spec: UrnSpec, n: int, reps: int, seed: int = 0,
                threads: int | None = None, keep_terminal: bool = True) -> MonteCarloSummary:
    """Replicate ``reps`` independent paths to step ``n`` and summarize them.

    Replication ``r`` draws from the Philox stream keyed by ``(seed, r)``, so
    the summary is the same for any thread count.
    """
    spec.require_valid()
    if reps < 2:
        raise InvalidArgument("reps must be at least 2")
    if n < 0:
        raise InvalidArgument("n must be nonnegative")
    X, Q, prev = simulate_terminal(spec, n, reps, seed, threads=threads)
    theory = None
    if spec.is_irreducible:
        try:
            theory = clt_params(spec)
        except ModelError:
            theory = None
    y_last = None
    if n >= 1:
        num, den = _martingale_numerators(spec, prev, Q)
        y_last = num.astype(float) / den.astype(float)[:, None]
    return summarize(X, spec, n, seed, theory, y_last, keep_terminal)


@dataclass(frozen=True)
class Thresholds:
    mean_z: float = 4.0
    cov_z: float = 5.0
    limit_z: float = 5.0
    critical_rtol: float = 0.15
    skew_max: float = 0.1
    kurt_max: float = 0.2
    yy_z: float = 5.0


def _zscores(est, target, se):
    dev = np.asarray(est, dtype=float) - np.asarray(target, dtype=float)
    se = np.asarray(se, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(se > 0, dev / np.where(se > 0, se, 1.0),
                     np.where(np.abs(dev) <= 1e-9 * (1 + np.abs(target)), 0.0, np.inf))
    return dev, z


def compare(summary: MonteCarloSummary, theory: AsymptoticSummary | None,
            exact, thresholds: Thresholds = Thresholds()) -> dict[str, Any]:
    """Check a Monte Carlo summary against exact moments and limit theory.

    ``exact`` is a :class:`MomentTrajectory` containing step ``summary.n`` or a
    ``(mu_n, sigma_n)`` pair.
    """
    if isinstance(exact, MomentTrajectory):
        mu_n, sig_n = exact.at(summary.n)
    else:
        mu_n, sig_n = exact
    mu_n = np.asarray(mu_n, dtype=float)
    sig_n = np.asarray(sig_n, dtype=float)
    k = summary.k
    if mu_n.shape != (k,) or sig_n.shape != (k, k):
        raise InvalidArgument(
            f"dimension mismatch: summary has k={k}, exact moments have shapes "
            f"{mu_n.shape} and {sig_n.shape}")
    if theory is not None and theory.B.shape != (k, k):
        raise InvalidArgument("dimension mismatch between summary and theory")

    th = thresholds
    report: dict[str, Any] = {"n": summary.n, "reps": summary.reps, "mode": summary.mode.value,
                              "regime": None if theory is None else theory.regime.value}
    dev, z = _zscores(summary.mean_hat, mu_n, summary.mean_se)
    report["mean"] = {
        "max_abs_dev": float(np.max(np.abs(dev))),
        "se": summary.mean_se.tolist(),
        "z": z.tolist(),
        "max_abs_z": float(np.max(np.abs(z))),
        "threshold": th.mean_z,
        "pass": bool(np.max(np.abs(z)) < th.mean_z),
    }
    dev, z = _zscores(summary.cov_hat, sig_n, summary.cov_se)
    report["cov_exact"] = {
        "max_abs_dev": float(np.max(np.abs(dev))),
        "z": z.tolist(),
        "max_abs_z": float(np.max(np.abs(z))),
        "threshold": th.cov_z,
        "pass": bool(np.max(np.abs(z)) < th.cov_z),
    }

    gaussian = theory is not None and theory.sigma_inf is not None and summary.n >= 2
    if gaussian:
        scale = theory.xi(summary.n)
        scaled = summary.cov_hat / scale
        target = theory.sigma_inf
        dev, z = _zscores(scaled, target, summary.cov_se / scale)
        with np.errstate(divide="ignore", invalid="ignore"):
            rel = np.abs(dev) / np.abs(target)
        rel_max = float(np.max(np.where(np.abs(target) > 1e-12, rel, 0.0)))
        entry = {"status": "applicable", "xi": theory.xi_description, "scale": scale,
                 "scaled_cov": scaled.tolist(), "target": target.tolist(),
                 "z": z.tolist(), "max_abs_z": float(np.max(np.abs(z))),
                 "max_rel_dev": rel_max}
        if theory.regime.value == "small":
            entry.update(threshold=th.limit_z, criterion="z", pass_=bool(entry["max_abs_z"] < th.limit_z))
        else:
            entry.update(threshold=th.critical_rtol, criterion="relative",
                         pass_=bool(rel_max < th.critical_rtol))
        entry["pass"] = entry.pop("pass_")
        report["cov_limit"] = entry
    else:
        report["cov_limit"] = {"status": "not applicable", "pass": True}

    sm = summary.std_moments
    if gaussian and sm is not None:
        sk = np.array([np.nan if v is None else v for v in sm["skewness"]])
        ku = np.array([np.nan if v is None else v for v in sm["excess_kurtosis"]])
        ok = bool(np.all(np.abs(sk) < th.skew_max) and np.all(np.abs(ku) < th.kurt_max))
        report["std_moments"] = {"status": "applicable", "skewness": sm["skewness"],
                                 "excess_kurtosis": sm["excess_kurtosis"],
                                 "skew_max": th.skew_max, "kurt_max": th.kurt_max, "pass": ok}
    else:
        report["std_moments"] = {"status": "not applicable", "pass": True}

    if theory is not None and summary.yy_hat is not None:
        target = theory.B - np.outer(theory.mu_slope, theory.mu_slope)
        dev, z = _zscores(summary.yy_hat, target, summary.yy_se)
        report["martingale_yy"] = {"target": target.tolist(), "z": z.tolist(),
                                   "max_abs_z": float(np.max(np.abs(z))),
                                   "threshold": th.yy_z,
                                   "pass": bool(np.max(np.abs(z)) < th.yy_z)}

    report["pass"] = all(v["pass"] for v in report.values() if isinstance(v, dict) and "pass" in v)
    return report
