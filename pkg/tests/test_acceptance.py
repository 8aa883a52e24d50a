"""Acceptance criteria AC1-AC10, one test each, one PASS/FAIL line each.

Run on its own with ``pytest tests/test_acceptance.py -s`` (the lines are
printed even without ``-s``).
"""

import math
import time
from fractions import Fraction

import numpy as np
import pytest

from oracles import exact_mean_fraction, moments_of, terminal_distribution
from urnlab import (Mode, Regime, build_replacement_matrix, clt_params, compare, decompose,
                    exact_cov, exact_mean, f_gamma_ratio, f_product, f_scalar, get_example,
                    matrix_power_x, moment_trajectory, monte_carlo, simulate_one)
from urnlab.cli import main as cli_main

R3 = math.sqrt(3.0)

EX1_TABLE = [
    [3, 3, 3], [4, 2, 3], [2, 2, 5], [5, 1, 3], [3, 1, 5],
    [1, 1, 7], [6, 0, 3], [4, 0, 5], [2, 0, 7], [0, 0, 9],
]
SM_SIGMA = np.array([[5552, -2864, -2688], [-2864, 1808, 1056], [-2688, 1056, 1632]]) / 3025
EX2_SIGMA = np.array([
    [Fraction(9, 112), Fraction(-207, 3136), Fraction(-2043, 87808), Fraction(783, 87808)],
    [Fraction(-207, 3136), Fraction(11349, 87808), Fraction(-88983, 2458624), Fraction(-66501, 2458624)],
    [Fraction(-2043, 87808), Fraction(-88983, 2458624), Fraction(7480413, 68841472), Fraction(-3387177, 68841472)],
    [Fraction(783, 87808), Fraction(-66501, 2458624), Fraction(-3387177, 68841472), Fraction(4635333, 68841472)],
], dtype=object).astype(float)
EX3_P = np.array([
    [2, -1 - 1j * R3, -1 + 1j * R3],
    [-1 + 1j * R3, 2, -1 - 1j * R3],
    [-1 - 1j * R3, -1 + 1j * R3, 2],
]) / 6
EX3_LIMIT = np.array([[4, -2, -2], [-2, 4, -2], [-2, -2, 4]]) / 3


@pytest.fixture
def report(capsys):
    def emit(ac, checks, elapsed):
        ok = all(v for v, _ in checks.values())
        failed = [f"{k}: {d}" for k, (v, d) in checks.items() if not v]
        detail = "; ".join(failed) if failed else ", ".join(checks)
        with capsys.disabled():
            print(f"\n{ac:<5} {'PASS' if ok else 'FAIL'}  [{elapsed:.2f}s] {detail}")
        return ok
    return emit


def _rel(a, b):
    return float(np.max(np.abs(a - b) / np.abs(b)))


def test_ac1_expansion(report):
    t = time.perf_counter()
    M = build_replacement_matrix([[3, 3, 3], [6, 0, 3], [0, 0, 9]], 3)
    elapsed = time.perf_counter() - t
    checks = {
        "rows": (M.rows.tolist() == EX1_TABLE, M.rows.tolist()),
        "labels": (M.labels == ["300", "210", "201", "120", "111", "102", "030", "021", "012", "003"],
                   M.labels),
        "runtime<0.1s": (elapsed < 0.1, f"{elapsed:.3f}s"),
    }
    assert report("AC1", checks, elapsed)


def test_ac2_small_example(report):
    t = time.perf_counter()
    spec = get_example("sm")
    dec = decompose(spec.core)
    th = clt_params(spec, dec)
    mu = exact_mean(spec, 2000) / 2000
    elapsed = time.perf_counter() - t
    eig = sorted(dec.eigenvalues, key=lambda z: -z.real)
    eig_err = float(np.max(np.abs(np.array(eig) - [16, 1 + math.sqrt(5), 1 - math.sqrt(5)])))
    v_err = float(np.max(np.abs(dec.v1 - np.array([13, 19, 23]) / 55)))
    mu_err = float(np.max(np.abs(mu - [3.787, 5.527, 6.692])))
    checks = {
        "eigenvalues": (eig_err <= 1e-9, eig_err),
        "v1": (v_err <= 1e-10, v_err),
        "regime small": (dec.regime is Regime.SMALL, dec.regime.value),
        "mean/2000": (mu_err <= 1e-3, mu.tolist()),
        "Sigma(A)": (_rel(th.sigma_inf, SM_SIGMA) <= 1e-6, _rel(th.sigma_inf, SM_SIGMA)),
        "runtime<5s": (elapsed < 5, elapsed),
    }
    assert report("AC2", checks, elapsed)


def test_ac3_jordan_example(report):
    t = time.perf_counter()
    spec = get_example("ex2")
    dec = decompose(spec.core)
    th = clt_params(spec, dec)
    elapsed = time.perf_counter() - t
    lam = [g.lam for g in dec.groups]
    checks = {
        "eigenvalues": (len(lam) == 2 and abs(lam[0] - 1) < 1e-9 and abs(lam[1] + 3) < 1e-6
                        and dec.groups[1].multiplicity == 3, lam),
        "nu2=2": (dec.nu2 == 2, dec.nu2),
        "v1": (np.max(np.abs(dec.v1 - [1 / 4, 3 / 16, 9 / 64, 27 / 64])) <= 1e-10, dec.v1.tolist()),
        "Sigma(A)": (_rel(th.sigma_inf, EX2_SIGMA) <= 1e-6, _rel(th.sigma_inf, EX2_SIGMA)),
        "runtime<5s": (elapsed < 5, elapsed),
    }
    assert report("AC3", checks, elapsed)


def test_ac4_critical_example(report):
    t = time.perf_counter()
    spec = get_example("ex3")
    dec = decompose(spec.core)
    th = clt_params(spec, dec)
    elapsed = time.perf_counter() - t
    # the displayed matrix satisfies A P = (3 - i*sqrt3) P, so it is that group's projector
    g = next(g for g in dec.groups if abs(g.lam - (3 - 1j * R3)) < 1e-9)
    A = spec.core.astype(float)
    checks = {
        "critical": (dec.regime is Regime.CRITICAL, dec.regime.value),
        "index=1/2": (abs(dec.index - 0.5) < 1e-12, dec.index),
        "nu2=0": (dec.nu2 == 0, dec.nu2),
        "projector": (np.max(np.abs(g.P - EX3_P)) <= 1e-9, np.max(np.abs(g.P - EX3_P))),
        "A P = lam P": (np.max(np.abs(A @ EX3_P - g.lam * EX3_P)) <= 1e-9, None),
        "limit": (np.max(np.abs(th.sigma_inf - EX3_LIMIT)) <= 1e-8,
                  np.max(np.abs(th.sigma_inf - EX3_LIMIT))),
        "runtime<1s": (elapsed < 1, elapsed),
    }
    assert report("AC4", checks, elapsed)


def _ac5_checks(tmp_path, capsys):
    t = time.perf_counter()
    spec = get_example("ex4")
    dec = decompose(spec.core)
    mu = exact_mean(spec, 2000) / 2000
    out = tmp_path / "asym.json"
    code = cli_main(["asymptotics", "--example", "ex4", "--n", "10000", "--out", str(out)])
    import json
    data = json.loads(out.read_text())
    tj = moment_trajectory(spec, 10**4, every=1000)
    elapsed = time.perf_counter() - t
    exact = exact_mean_fraction(spec.core.tolist(), spec.x0, 2000, spec.b)
    mu_q = np.array([float(v) / 2000 for v in exact])
    dev = np.abs(mu - [3.992, 4.062, 3.947])
    checks = {
        "large": (dec.regime is Regime.LARGE and abs(dec.groups[1].lam.real - 7.5) < 1e-9,
                  dec.regime.value),
        "not applicable": (code == 0 and data["covariance_limit"] == "not applicable", code),
        "exact Sigma_n": (len(data["exact"]["cov"]) == 3 and tj.n_max == 10**4
                          and np.all(np.isfinite(tj.sigma)), None),
        "mean matches rational": (np.max(np.abs(mu - mu_q)) < 1e-12, None),
        "runtime<5s": (elapsed < 5, elapsed),
    }
    stated = {f"mean/2000[{i + 1}]": (dev[i] <= 1e-3, f"|{mu[i]:.5f} - {p}| = {dev[i]:.2e} > 1e-3")
             for i, p in enumerate([3.992, 4.062, 3.947])}
    return checks, stated, elapsed


def test_ac5_parts_not_depending_on_stated_mean(tmp_path, capsys):
    checks, stated, _ = _ac5_checks(tmp_path, capsys)
    assert all(v for v, _ in checks.values()), checks
    assert stated["mean/2000[1]"][0] and stated["mean/2000[2]"][0]


@pytest.mark.xfail(strict=True, reason="stated third component 3.947 differs from the exact "
                   "mean 3.94869 by 1.7e-3; the stated vector sums to 12.001, not tau_2000/2000 "
                   "= 12.0035")
def test_ac5_large_example(report, tmp_path, capsys):
    checks, stated, elapsed = _ac5_checks(tmp_path, capsys)
    checks.update(stated)
    assert report("AC5", checks, elapsed)


def test_ac6_oracle_equivalence(report):
    t = time.perf_counter()
    worst = 0.0
    for mode in Mode:
        spec = get_example("ex3", mode)
        for n in range(5):
            dist = terminal_distribution(spec.core.tolist(), spec.s, spec.x0, n,
                                         mode is Mode.WITH_REPLACEMENT)
            mean, cov = moments_of(dist)
            worst = max(worst,
                        float(np.max(np.abs(exact_mean(spec, n) - np.array(mean, dtype=float)))),
                        float(np.max(np.abs(exact_cov(spec, n) - np.array(cov, dtype=float)))))
    elapsed = time.perf_counter() - t
    checks = {"max entry error<=1e-12": (worst <= 1e-12, worst),
              "runtime<30s": (elapsed < 30, elapsed)}
    assert report("AC6", checks, elapsed)


def test_ac7_martingale_invariants(report):
    t = time.perf_counter()
    names = ["ex1", "sm", "ex2", "ex3", "ex4"]
    y_ok = True
    cov_worst = 0.0
    for name in names:
        spec = get_example(name)
        for seed in range(100):
            tr = simulate_one(spec, 1000, seed=seed, record_y=True)
            y_ok &= bool(np.all(tr.y_num.sum(axis=1) == 0))
            y_ok &= sum(tr.y_exact(999)) == 0
        for mode in Mode:
            tj = moment_trajectory(get_example(name, mode), 1000)
            cov_worst = max(cov_worst, float(np.abs(tj.sigma.sum(axis=2)).max()))
    elapsed = time.perf_counter() - t
    checks = {"Y 1^T = 0 exactly": (y_ok, None),
              "Sigma_n 1^T = 0 (1e-9)": (cov_worst <= 1e-9, cov_worst)}
    assert report("AC7", checks, elapsed)


def test_ac8_monte_carlo_small(report):
    t = time.perf_counter()
    spec = get_example("sm")
    n = reps = 10**4
    summary = monte_carlo(spec, n, reps, seed=20240501)
    th = clt_params(spec)
    rep = compare(summary, th, moment_trajectory(spec, n, every=n))
    elapsed = time.perf_counter() - t
    z = np.abs(rep["cov_limit"]["z"]).max()
    skew = np.abs(summary.std_moments["skewness"]).max()
    kurt = np.abs(summary.std_moments["excess_kurtosis"]).max()
    checks = {
        "cov/n within 5 SE": (z < 5, f"max|z| = {z:.2f}"),
        "|skewness|<0.1": (skew < 0.1, skew),
        "|excess kurtosis|<0.2": (kurt < 0.2, kurt),
        "runtime<5min": (elapsed < 300, elapsed),
    }
    ok = report("AC8", checks, elapsed)
    print(f"AC8 detail: max|z|={z:.3f} skew={skew:.4f} kurt={kurt:.4f}")
    assert ok


def test_ac9_with_replacement(report):
    t = time.perf_counter()
    spec = get_example("sm", "with_replacement")
    summary = monte_carlo(spec, 1000, 10**4, seed=777)
    target = exact_cov(spec, 1000)
    z = float(np.abs((summary.cov_hat - target) / summary.cov_se).max())
    mu_w = moment_trajectory(spec, 1000).mu
    mu_wo = moment_trajectory(spec.with_mode("without_replacement"), 1000).mu
    elapsed = time.perf_counter() - t
    checks = {"cov within 5 SE": (z < 5, f"max|z| = {z:.2f}"),
              "same mean": (np.array_equal(mu_w, mu_wo), None)}
    assert report("AC9", checks, elapsed)


def test_ac10_propagator_lemmas(report):
    t = time.perf_counter()
    spec = get_example("sm")
    target = matrix_power_x(spec.core, spec.b, 0.5)
    errs = [float(np.abs(f_product(math.ceil(0.5 * n), n, spec.core, spec.tau0, spec.b)
                         - target).max()) for n in (100, 1000, 10000)]
    gam = max(abs(f_scalar(10, 1000, z, spec.tau0, spec.b) - f_gamma_ratio(10, 1000, z, spec.tau0, spec.b))
              for z in decompose(spec.core).eigenvalues)
    elapsed = time.perf_counter() - t
    checks = {"strictly decreasing": (errs[0] > errs[1] > errs[2], errs),
              "Gamma ratio (1e-10)": (gam <= 1e-10, gam)}
    assert report("AC10", checks, elapsed)
