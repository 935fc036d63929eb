"""
Test script for credal rows and transition operators
Envelopes, extreme-point witnesses, the keep tiebreak and center matrices
"""

import numpy as np
import pytest

from imchit.credal import (
    CredalSet,
    EpsContamRow,
    ExtremeSelection,
    VertexRow,
    center_matrix,
    lower_envelope,
    materialize,
    possible_edge,
    possible_support,
    upper_envelope,
)
from imchit.errors import DomainError
from imchit.instances import fixture, random_vertex_credal_set


def test_constant_function_is_fixed():
    C = random_vertex_credal_set(5, np.random.default_rng(3))
    for envelope in (lower_envelope, upper_envelope):
        values, _ = envelope(C, np.full(5, 0.7))
        np.testing.assert_allclose(values.values, 0.7, atol=1e-12)


def test_eps_contamination_lower_value():
    row = EpsContamRow([0.5, 0.5, 0.0], 0.1, [0, 1, 2])
    value, index = row.lower(np.array([1.0, 0.0, 0.5]))
    assert value == pytest.approx(0.45)
    np.testing.assert_allclose(row.vertices[index], [0.45, 0.55, 0.0])


def test_two_point_vertex_row():
    value, index = VertexRow([[1.0, 0.0], [0.0, 1.0]]).lower(np.array([0.3, 0.8]))
    assert value == pytest.approx(0.3)
    assert index == 0


def test_conjugacy(rng):
    for _ in range(50):
        C = random_vertex_credal_set(6, rng)
        f = rng.normal(size=6)
        upper, _ = upper_envelope(C, f)
        lower, _ = lower_envelope(C, -f)
        np.testing.assert_allclose(upper.values, -lower.values, atol=1e-12)


def test_keep_rule_holds_tied_row():
    C = fixture("tiebreak").credal_set()
    p = np.array([0.0, 1.0, 1.0])
    _, fresh = upper_envelope(C, p)
    assert fresh[1] == 1
    values, kept = upper_envelope(C, p, keep=ExtremeSelection((0, 2, 0)))
    assert kept[1] == 2
    assert values.values[1] == pytest.approx(1.0)


def test_keep_loses_to_strictly_better_vertex():
    C = fixture("tiebreak").credal_set()
    _, selection = upper_envelope(C, np.array([0.0, 0.5, 1.0]), keep=ExtremeSelection((0, 1, 0)))
    assert selection[1] == 2
    _, selection = lower_envelope(C, np.array([0.0, 0.5, 1.0]), keep=ExtremeSelection((0, 1, 0)))
    assert selection[1] == 0


def test_materialize_single_vertex_rows():
    C = CredalSet([VertexRow([[0.2, 0.8]]), VertexRow([[1.0, 0.0]])])
    T = materialize(C, ExtremeSelection((0, 0)))
    np.testing.assert_array_equal(T.array, [[0.2, 0.8], [1.0, 0.0]])
    with pytest.raises(DomainError):
        materialize(C, ExtremeSelection((1, 0)))


def test_materialize_eps_vertex():
    row = EpsContamRow([0.6, 0.4, 0.0], 0.2)
    C = CredalSet([row, VertexRow([[0, 1, 0]]), VertexRow([[0, 0, 1]])])
    T = materialize(C, ExtremeSelection((2, 0, 0)))
    np.testing.assert_allclose(T.array[0], [0.48, 0.32, 0.2])


def test_materialized_witness_reproduces_envelope(rng):
    for _ in range(50):
        C = random_vertex_credal_set(6, rng)
        f = rng.random(6)
        for envelope in (lower_envelope, upper_envelope):
            values, selection = envelope(C, f)
            np.testing.assert_allclose(materialize(C, selection).array @ f, values.values, atol=1e-12)


def test_center_matrix_rows():
    C = CredalSet([VertexRow([[1.0, 0.0], [0.0, 1.0]]), VertexRow([[0.0, 1.0]])])
    np.testing.assert_allclose(center_matrix(C).array, [[0.5, 0.5], [0.0, 1.0]])
    eps = EpsContamRow([1.0, 0.0, 0.0], 0.3, [0, 2])
    np.testing.assert_allclose(eps.center(), [0.85, 0.0, 0.15])


def test_center_support_is_union_of_vertex_supports(rng):
    for _ in range(30):
        C = random_vertex_credal_set(6, rng, density=0.3)
        assert np.array_equal(center_matrix(C).array > 1e-12, possible_support(C))


def test_possible_edge():
    C = CredalSet([EpsContamRow([1.0, 0.0, 0.0], 0.1, [0, 1]), VertexRow([[0, 1, 0], [1, 0, 0]]),
                   VertexRow([[0, 0, 1]])])
    assert possible_edge(C, 0, 1)
    assert not possible_edge(C, 0, 2)
    assert not possible_edge(C, 1, 2)
    center = center_matrix(C)
    for x in range(3):
        for y in range(3):
            assert possible_edge(C, x, y) == (center.array[x, y] > 0)


def test_vertex_rows_are_deduplicated():
    row = VertexRow([[0.5, 0.5], [0.5, 0.5], [1.0, 0.0]])
    assert row.count == 2


def test_row_validation():
    with pytest.raises(DomainError):
        VertexRow([])
    with pytest.raises(DomainError):
        VertexRow([[1.0, 0.0], [0.0, 0.0, 1.0]])
    with pytest.raises(DomainError):
        EpsContamRow([0.5, 0.5, 0.0], 1.5)
    with pytest.raises(DomainError):
        EpsContamRow([0.5, 0.5, 0.0], 0.1, [0, 2])
    with pytest.raises(DomainError):
        CredalSet([VertexRow([[1.0, 0.0]])])


def test_credal_json_forms():
    eps = CredalSet([EpsContamRow([1.0, 0.0], 0.1, [0]), EpsContamRow([0.5, 0.5], 0.1)])
    data = eps.to_dict()
    assert data["kind"] == "eps_contamination"
    assert data["support"] == [[0], [0, 1]]
    mixed = CredalSet([EpsContamRow([1.0, 0.0], 0.1), VertexRow([[0.0, 1.0]])])
    assert mixed.to_dict()["kind"] == "mixed"
    again = CredalSet.from_dict(mixed.to_dict())
    np.testing.assert_array_equal(again.rows[0].vertices, mixed.rows[0].vertices)
    with pytest.raises(DomainError):
        CredalSet.from_dict({"kind": "intervals"})
