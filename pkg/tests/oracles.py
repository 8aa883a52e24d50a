"""Brute-force reference implementations used as test oracles.

Everything here is deliberately naive and shares no code with the package:
exact fractions, math.comb pmfs and full enumeration.
"""

from __future__ import annotations

import itertools
import math
from fractions import Fraction


def compositions_bruteforce(k, s):
    """All compositions of s into k parts, in reverse-lex order."""
    rows = [c for c in itertools.product(range(s + 1), repeat=k) if sum(c) == s]
    return sorted(rows, reverse=True)


def pmf_without(x, q):
    tau, s = sum(x), sum(q)
    num = 1
    for xi, qi in zip(x, q):
        num *= math.comb(xi, qi)
    return Fraction(num, math.comb(tau, s))


def pmf_with(x, q):
    tau, s = sum(x), sum(q)
    coef = math.factorial(s)
    for qi in q:
        coef //= math.factorial(qi)
    p = Fraction(coef)
    for xi, qi in zip(x, q):
        p *= Fraction(xi, tau) ** qi
    return p


def _add_row(x, q, core, s):
    k = len(x)
    out = []
    for j in range(k):
        tot = sum(q[i] * core[i][j] for i in range(k))
        assert tot % s == 0
        out.append(x[j] + tot // s)
    return tuple(out)


def terminal_distribution(core, s, x0, n, with_replacement=False):
    """Exact law of X_n by walking the path tree (states merged per level)."""
    k = len(x0)
    comps = compositions_bruteforce(k, s)
    pmf = pmf_with if with_replacement else pmf_without
    dist = {tuple(x0): Fraction(1)}
    for _ in range(n):
        nxt = {}
        for x, p in dist.items():
            for q in comps:
                w = pmf(x, q)
                if w == 0:
                    continue
                y = _add_row(x, q, core, s)
                nxt[y] = nxt.get(y, 0) + p * w
        dist = nxt
    return dist


def moments_of(dist):
    k = len(next(iter(dist)))
    mean = [sum(p * x[i] for x, p in dist.items()) for i in range(k)]
    cov = [[sum(p * (x[i] - mean[i]) * (x[j] - mean[j]) for x, p in dist.items())
            for j in range(k)] for i in range(k)]
    return mean, cov


def exact_mean_fraction(core, x0, n, b):
    k = len(x0)
    mu = [Fraction(v) for v in x0]
    tau = sum(x0)
    for _ in range(n):
        mu = [mu[j] + Fraction(sum(mu[i] * core[i][j] for i in range(k)), tau) for j in range(k)]
        tau += b
    return mu


def strongly_connected(core):
    """Reachability by repeated boolean squaring on positive off-diagonal entries."""
    k = len(core)
    reach = [[i == j or (core[i][j] > 0) for j in range(k)] for i in range(k)]
    for m in range(k):
        for i in range(k):
            for j in range(k):
                reach[i][j] = reach[i][j] or (reach[i][m] and reach[m][j])
    return all(all(r) for r in reach)
