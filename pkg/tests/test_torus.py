import math
from itertools import permutations, product

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from swivel.torus import (
    TWO_PI, FlowSpec, TorusState, advance, check_rational_independence, circle_distance,
    dominates, signed_sum_nondegenerate,
)

angles = st.floats(-50, 50, allow_nan=False)
lengths = st.floats(0.1, 10.0, allow_nan=False)


def test_state_reduced_to_circle():
    s = TorusState((-1e-18, 7.0, TWO_PI))
    assert all(0.0 <= a < TWO_PI for a in s.angles)
    assert s.angles[2] == 0.0
    with pytest.raises(ValueError):
        TorusState(())
    with pytest.raises(ValueError):
        TorusState((math.nan,))


def test_advance_examples():
    out = advance(TorusState((0, 0)), FlowSpec((1, 2)), math.pi)
    assert circle_distance(out.angles, (math.pi, 0.0)).max() < 1e-12
    s = TorusState((0.5, 1.0))
    assert advance(s, FlowSpec((3.0, -2.0)), 0.0) == s
    w = (1.0, math.sqrt(2), math.sqrt(3))
    once = advance(TorusState((0, 0, 0)), FlowSpec(w), 10.0)
    steps = TorusState((0, 0, 0))
    for _ in range(10):
        steps = advance(steps, FlowSpec(w), 1.0)
    assert circle_distance(once.angles, steps.angles).max() < 1e-12
    assert circle_distance(once.angles, np.mod(np.array(w) * 10, TWO_PI)).max() < 1e-12
    with pytest.raises(ValueError):
        advance(TorusState((0, 0)), FlowSpec((1,)), 1.0)


@given(st.lists(angles, min_size=1, max_size=5), st.data(), st.floats(-100, 100), st.floats(-100, 100))
def test_flow_property(theta, data, s, t):
    w = data.draw(st.lists(st.floats(-5, 5), min_size=len(theta), max_size=len(theta)))
    f = FlowSpec(w)
    a = advance(advance(TorusState(theta), f, s), f, t)
    b = advance(TorusState(theta), f, s + t)
    assert circle_distance(a.angles, b.angles).max() < 1e-9


def test_signed_sum_examples():
    v = signed_sum_nondegenerate((1, 2, 3), 1e-12)
    assert not v and v.witness == (1, 1, -1)
    assert signed_sum_nondegenerate((3, 4, 5), 1e-12)
    v = signed_sum_nondegenerate((1, 1, 1, 1), 1e-12)
    assert not v
    assert np.dot(v.witness, (1, 1, 1, 1)) == 0
    assert v.witness[0] == 1


def test_signed_sum_alternating_witness_found_exhaustively():
    # greedy balancing fails here, the full scan must find 3 + 3 - 2 - 2 - 2 = 0
    v = signed_sum_nondegenerate((3, 3, 2, 2, 2), 1e-12)
    assert not v
    assert abs(np.dot(v.witness, (3, 3, 2, 2, 2))) < 1e-12


@given(st.lists(lengths, min_size=1, max_size=7), st.randoms())
def test_signed_sum_permutation_invariant(l, rnd):
    perm = list(l)
    rnd.shuffle(perm)
    assert bool(signed_sum_nondegenerate(l)) == bool(signed_sum_nondegenerate(perm))


@given(st.lists(lengths, min_size=1, max_size=7), st.floats(0.01, 100))
def test_signed_sum_scale_invariant(l, c):
    tol = 1e-9 * sum(l)
    a = signed_sum_nondegenerate(l, tol)
    b = signed_sum_nondegenerate([c * x for x in l], c * tol)
    assert bool(a) == bool(b)


@given(st.lists(st.integers(1, 6), min_size=2, max_size=6))
def test_signed_sum_witness_is_a_zero_sum(l):
    v = signed_sum_nondegenerate(l, 1e-9)
    exhaustive = any(abs(sum(e * x for e, x in zip((1,) + signs, l[0:1] + l[1:]))) < 1e-9
                     for signs in product((1, -1), repeat=len(l) - 1))
    assert bool(v) == (not exhaustive)
    if not v:
        assert abs(np.dot(v.witness, l)) < 1e-9


@given(lengths, lengths, lengths)
def test_three_joint_components(a, b, c):
    """Nondegenerate iff a strict triangle or strict domination."""
    l = (a, b, c)
    tol = 1e-12 * sum(l)
    s = sorted(l)
    triangle = s[2] < s[0] + s[1] - tol
    dominant = s[2] > s[0] + s[1] + tol
    if triangle or dominant:
        assert signed_sum_nondegenerate(l, tol)


def test_three_joint_both_branches():
    assert signed_sum_nondegenerate((3, 4, 5), 1e-15)
    assert signed_sum_nondegenerate((10, 1, 2), 1e-15)
    assert dominates((10, 1, 2)) == 0
    assert not signed_sum_nondegenerate((1, 2, 3), 1e-15)


def test_dominates():
    assert dominates((5, 1, 2)) == 0
    assert dominates((1, 5, 2)) == 1
    assert dominates((3, 4, 5)) is None
    assert dominates((1, 1)) is None
    assert dominates((2,)) == 0


def test_rational_independence_examples():
    v = check_rational_independence((1, 2), max_coeff=5)
    assert v.found and v.relation == (2, -1)
    assert not check_rational_independence((1, math.sqrt(2), math.sqrt(3)), max_coeff=50, tol=1e-9).found
    v = check_rational_independence((1, 1 + 1e-12), max_coeff=2, tol=1e-9)
    assert v.relation == (1, -1)


def test_rational_relation_is_valid():
    w = (0.5, 1.25, math.sqrt(2))
    v = check_rational_independence(w, max_coeff=10)
    assert v.found
    assert abs(np.dot(v.relation, w)) < 1e-9
    for perm in permutations(range(3)):
        assert check_rational_independence([w[i] for i in perm], max_coeff=10).found
