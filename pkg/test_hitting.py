"""
Test script for precise hitting probabilities
Restricted solves, the hitting vector and monotone path certificates
"""

import numpy as np
import pytest

from imchit.errors import DomainError
from imchit.hitting import (
    fixed_point_gap,
    fundamental_solve,
    hitting_probabilities,
    monotone_path,
)
from imchit.instances import random_transition_matrix
from imchit.markov import TargetSet, TransitionMatrix, ValueFunction, cannot_reach_set

# n = 2 member of the worst-case family
T_TWO = TransitionMatrix([[0.25, 0.5, 0.25], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
A_ONE = TargetSet.of([1], 3)


def test_solve_when_mass_leaves_carrier():
    T = TransitionMatrix([[0.0, 0.0, 1.0], [0.0, 0.0, 1.0], [0.0, 0.0, 1.0]])
    rhs = ValueFunction.on([0.3, 0.6], [0, 1])
    x = fundamental_solve(T, TargetSet.of([2], 3), set(), rhs)
    np.testing.assert_allclose(x.values, rhs.values)


def test_solve_worst_case_member():
    x = fundamental_solve(T_TWO, A_ONE, {2}, ValueFunction.on([0.5], [0]))
    assert x.carrier == (0,)
    assert x.values[0] == pytest.approx(2.0 / 3.0, abs=1e-12)


def test_solve_matches_neumann_series(rng):
    for _ in range(10):
        T = random_transition_matrix(6, rng, density=0.6)
        A = TargetSet.of([0, 1], 6)
        S = cannot_reach_set(T, A)
        carrier = sorted(A.complement - S)
        if not carrier:
            continue
        block = T.array[np.ix_(carrier, carrier)]
        rhs = rng.random(len(carrier))
        x = fundamental_solve(T, A, S, ValueFunction.on(rhs, carrier))
        total, term = np.zeros_like(rhs), rhs.copy()
        for _ in range(200_000):
            total += term
            term = block @ term
            if np.max(np.abs(term)) < 1e-14:
                break
        np.testing.assert_allclose(x.values, total, atol=1e-10)


def test_solve_rejects_zero_set_missing_unreachable_states():
    with pytest.raises(DomainError):
        fundamental_solve(T_TWO, A_ONE, set(), ValueFunction.on([0.5, 0.0], [0, 2]))
    with pytest.raises(DomainError):
        fundamental_solve(T_TWO, A_ONE, {1, 2}, ValueFunction.on([0.5], [0]))


def test_solve_rejects_wrong_rhs_carrier():
    with pytest.raises(DomainError):
        fundamental_solve(T_TWO, A_ONE, {2}, ValueFunction.on([0.5, 0.1], [0, 2]))


def test_hitting_probabilities_worst_case_member():
    p = hitting_probabilities(T_TWO, A_ONE)
    np.testing.assert_allclose(p.values, [2.0 / 3.0, 1.0, 0.0], atol=1e-12)
    assert p.zero_set() == frozenset({2})
    assert fixed_point_gap(T_TWO, A_ONE, p.values) <= 1e-9


def test_target_is_one_and_absorbing_non_target_is_zero():
    T = TransitionMatrix([[1.0, 0.0, 0.0], [0.3, 0.3, 0.4], [0.0, 0.0, 1.0]])
    p = hitting_probabilities(T, TargetSet.of([0], 3))
    assert p[0] == 1.0
    assert p[2] == 0.0
    assert p[1] == pytest.approx(0.3 / 0.7)


def test_zero_set_is_exactly_cannot_reach(rng):
    for _ in range(50):
        T = random_transition_matrix(8, rng, density=0.25)
        A = TargetSet.of([0], 8)
        p = hitting_probabilities(T, A)
        assert p.zero_set() == cannot_reach_set(T, A)
        assert np.all((p.values >= 0.0) & (p.values <= 1.0))
        assert fixed_point_gap(T, A, p.values) <= 1e-9


def test_monotone_path_single_edge():
    path = monotone_path(T_TWO, A_ONE, 0)
    assert path.states == (0, 1)
    assert path.values == pytest.approx((2.0 / 3.0, 1.0))
    assert path.is_valid(T_TWO, A_ONE)


def test_monotone_path_rejects_trivial_starts():
    with pytest.raises(DomainError):
        monotone_path(T_TWO, A_ONE, 1)
    with pytest.raises(DomainError):
        monotone_path(T_TWO, A_ONE, 2)


def test_monotone_path_crosses_plateaus():
    # state 1 only moves to state 2, which has the same value
    T = TransitionMatrix([
        [1.0, 0.0, 0.0, 0.0],
        [0.0, 0.0, 1.0, 0.0],
        [0.5, 0.0, 0.0, 0.5],
        [0.0, 0.0, 0.0, 1.0],
    ])
    A = TargetSet.of([0], 4)
    p = hitting_probabilities(T, A)
    assert p[1] == pytest.approx(0.5)
    path = monotone_path(T, A, 1)
    assert path.states == (1, 2, 0)
    assert path.is_valid(T, A)


def test_monotone_path_certificates_validate(rng):
    checked = 0
    while checked < 100:
        T = random_transition_matrix(7, rng, density=0.35)
        A = TargetSet.of([0], 7)
        p = hitting_probabilities(T, A)
        candidates = sorted(A.complement - cannot_reach_set(T, A))
        if not candidates:
            continue
        x = candidates[int(rng.integers(len(candidates)))]
        certificate = monotone_path(T, A, x, p)
        assert certificate.is_valid(T, A)
        assert certificate.states[0] == x
        checked += 1
