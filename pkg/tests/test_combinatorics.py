import math
from itertools import islice

import pytest
from hypothesis import given, settings, strategies as st

from oracles import compositions_bruteforce
from urnlab import InvalidArgument
from urnlab.combinatorics import (Composition, composition_rank, count_compositions,
                                  enumerate_compositions, falling_factorial, format_label,
                                  iter_compositions, multinomial)


def test_k3_s3_labels_in_reverse_lex_order():
    labels = [c.label for c in enumerate_compositions(3, 3)]
    assert labels == ["300", "210", "201", "120", "111", "102", "030", "021", "012", "003"]


def test_single_draw_gives_basis_vectors():
    parts = [c.parts for c in enumerate_compositions(4, 1)]
    assert parts == [(1, 0, 0, 0), (0, 1, 0, 0), (0, 0, 1, 0), (0, 0, 0, 1)]


def test_k4_s3_has_twenty():
    comps = enumerate_compositions(4, 3)
    assert len(comps) == 20
    assert [c.parts for c in comps] == compositions_bruteforce(4, 3)


@pytest.mark.parametrize("k", range(1, 7))
@pytest.mark.parametrize("s", range(1, 7))
def test_enumeration_matches_bruteforce(k, s):
    comps = enumerate_compositions(k, s)
    assert len(comps) == math.comb(s + k - 1, s) == count_compositions(k, s)
    assert [c.parts for c in comps] == compositions_bruteforce(k, s)
    assert comps[0].parts == (s,) + (0,) * (k - 1)
    assert comps[-1].parts == (0,) * (k - 1) + (s,)
    assert [c.rank for c in comps] == list(range(len(comps)))
    for x, y in zip(comps, comps[1:]):
        r = next(i for i in range(k) if x.parts[i] != y.parts[i])
        assert x.parts[r] > y.parts[r]


def test_iterator_is_lazy():
    first = list(islice(iter_compositions(8, 30), 3))
    assert [c.parts[:2] for c in first] == [(30, 0), (29, 1), (29, 0)]


@pytest.mark.parametrize("k,s", [(0, 3), (3, 0), (-1, 2)])
def test_degenerate_sizes_rejected(k, s):
    with pytest.raises(InvalidArgument):
        enumerate_compositions(k, s)


@given(st.integers(1, 5), st.integers(1, 7), st.data())
def test_rank_round_trip(k, s, data):
    comps = enumerate_compositions(k, s)
    c = data.draw(st.sampled_from(comps))
    assert composition_rank(c.parts) == c.rank


def test_composition_accessors():
    c = Composition((2, 0, 1), 2)
    assert (c.k, c.s, c.label, len(c), c[0], list(c)) == (3, 3, "201", 3, 2, [2, 0, 1])
    assert format_label((10, 2)) == "10,2"


def test_falling_factorial_examples():
    assert falling_factorial(123.5, 0) == 1
    assert falling_factorial(5, 3) == 60
    assert falling_factorial(2, 4) == 0
    assert falling_factorial(-2, 3) == -24
    assert falling_factorial(2.5, 2) == pytest.approx(3.75)


def test_falling_factorial_is_exact_for_big_ints():
    assert falling_factorial(10**20, 3) == 10**20 * (10**20 - 1) * (10**20 - 2)
    with pytest.raises(InvalidArgument):
        falling_factorial(3, -1)


def test_multinomial_examples():
    assert multinomial(3, (3, 0, 0)) == 1
    assert multinomial(3, (1, 1, 1)) == 6
    assert multinomial(2, Composition((1, 1, 0), 3)) == 2
    with pytest.raises(InvalidArgument):
        multinomial(3, (1, 1, 0))


@settings(max_examples=200)
@given(st.lists(st.integers(-6, 12), min_size=1, max_size=4), st.integers(1, 4))
def test_chu_vandermonde(z, s):
    k = len(z)
    rhs = 0
    for c in enumerate_compositions(k, s):
        term = multinomial(s, c)
        for zi, ci in zip(z, c.parts):
            term *= falling_factorial(zi, ci)
        rhs += term
    assert falling_factorial(sum(z), s) == rhs
