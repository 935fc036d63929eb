"""
Test script for instance generation, fixtures and the JSON instance format
"""

from pathlib import Path

import numpy as np
import pytest

from imchit.credal import possible_support
from imchit.errors import DomainError
from imchit.instances import (
    Family,
    FixtureRegistry,
    InstanceSpec,
    fixture,
    gen_random_instance,
    propagation_chain_instance,
    random_support_graph,
    worst_case_instance,
)
from imchit.reachability import upper_reach_report

INSTANCE_DIR = Path(__file__).parent / "instances"


def _inner_support(instance: InstanceSpec) -> np.ndarray:
    return possible_support(instance.credal_set())[1:-1]


def test_lambda_one_is_a_tree():
    instance = gen_random_instance(20, 1.0, "eps_contam", seed=5)
    support = _inner_support(instance)
    assert np.all(support.sum(axis=1) == 1)


def test_lambda_n_is_complete():
    N = 8
    for model in ("eps_contam", "vertex_hull"):
        support = _inner_support(gen_random_instance(N, float(N), model, seed=1))
        assert np.all(support.sum(axis=1) == N - 1)
        assert not np.any(support[np.arange(N - 2), np.arange(1, N - 1)])


def test_target_and_trap_are_absorbing():
    C = gen_random_instance(10, 3.0, "vertex_hull", seed=2).credal_set()
    np.testing.assert_array_equal(C.rows[0].vertices, [np.eye(10)[0]])
    np.testing.assert_array_equal(C.rows[9].vertices, [np.eye(10)[9]])


def test_same_seed_same_instance():
    first = gen_random_instance(15, 4.0, "eps_contam", 0.2, seed=99)
    second = gen_random_instance(15, 4.0, "eps_contam", 0.2, seed=99)
    assert first.to_json() == second.to_json()
    assert first.to_json() != gen_random_instance(15, 4.0, "eps_contam", 0.2, seed=100).to_json()


def test_fresh_seed_is_recorded():
    instance = gen_random_instance(6, 2.0)
    assert instance.seed is not None
    assert instance.to_json() == gen_random_instance(6, 2.0, seed=instance.seed).to_json()


def test_every_inner_state_can_reach_target():
    for seed in range(20):
        instance = gen_random_instance(25, 1.5, "eps_contam", seed=seed)
        report = upper_reach_report(instance.credal_set(), instance.target_set())
        assert report.trivial_zero == frozenset({24})


@pytest.mark.parametrize("lam", [2.0, 5.0, 10.0])
def test_average_degree_tracks_lambda(lam):
    N = 40
    degrees = [random_support_graph(N, lam, np.random.default_rng(seed))[1:-1].sum(axis=1).mean()
               for seed in range(100)]
    assert np.mean(degrees) == pytest.approx(lam, rel=0.05)


def test_generator_rejects_bad_parameters():
    with pytest.raises(DomainError):
        gen_random_instance(2, 1.0)
    with pytest.raises(DomainError):
        gen_random_instance(10, 11.0)
    with pytest.raises(DomainError):
        gen_random_instance(10, 2.0, "eps_contam", epsilon=1.0)
    with pytest.raises(ValueError):
        gen_random_instance(10, 2.0, "interval")


def test_worst_case_vertices():
    C = worst_case_instance(4).credal_set()
    assert C.counts == [4, 1, 1]
    n = np.array([2.0, 4.0, 8.0, 16.0])
    np.testing.assert_allclose(C.rows[0].vertices[:, 1], 1 / n)
    np.testing.assert_allclose(C.rows[0].vertices[:, 2], 1 / n ** 2)
    with pytest.raises(DomainError):
        worst_case_instance(1)


def test_propagation_chain_layout():
    instance = propagation_chain_instance(5, 0.95)
    C = instance.credal_set()
    assert instance.states == 7
    assert C.counts == [1, 2, 2, 2, 2, 1, 1]
    np.testing.assert_allclose(C.rows[3].vertices[1], [0, 0, 0.95, 0, 0, 0.05, 0])
    np.testing.assert_allclose(C.rows[1].vertices[1], [0.95, 0, 0, 0, 0, 0, 0.05])
    with pytest.raises(DomainError):
        propagation_chain_instance(5, 0.5)
    with pytest.raises(DomainError):
        propagation_chain_instance(2, 0.95)


def test_fixture_registry():
    registry = FixtureRegistry()
    assert registry.list_fixtures() == ["example1", "example2", "tiebreak"]
    assert fixture("example1").target == [2]
    assert fixture("tiebreak").generator.family is Family.TIEBREAK
    with pytest.raises(DomainError) as info:
        registry.build("example9")
    assert "tiebreak" in info.value.diagnostics["known"]


@pytest.mark.parametrize("name", ["example1", "example2", "tiebreak"])
def test_bundled_fixture_files_match_registry(name):
    loaded = InstanceSpec.load(INSTANCE_DIR / f"{name}.json")
    assert loaded.credal_set().to_dict() == fixture(name).credal_set().to_dict()
    assert loaded.target == fixture(name).target


def test_worst_case_file_accepts_json5():
    loaded = InstanceSpec.load(INSTANCE_DIR / "worst_case_m3.json")
    expected = worst_case_instance(3).credal_set()
    np.testing.assert_allclose(loaded.credal_set().rows[0].vertices, expected.rows[0].vertices)
    assert loaded.generator.params == {"m": 3}


def test_save_and_load(tmp_path):
    instance = gen_random_instance(7, 2.5, "vertex_hull", seed=11)
    path = instance.save(tmp_path / "instance.json")
    assert InstanceSpec.load(path).to_json() == instance.to_json()
    assert '"lambda": 2.5' in path.read_text()


def test_invalid_documents_raise_domain_errors(tmp_path):
    with pytest.raises(DomainError):
        InstanceSpec.from_json("{states: 3,")
    with pytest.raises(DomainError):
        InstanceSpec.from_json('{"states": 3, "target": [5], "credal": {"kind": "vertex_rows", '
                               '"rows": [[[1, 0, 0]], [[0, 1, 0]], [[0, 0, 1]]]}}')
    with pytest.raises(DomainError):
        InstanceSpec.from_json('{"states": 2, "credal": {"kind": "vertex_rows", '
                               '"rows": [[[0.5, 0.4]], [[0, 1]]]}}')
    with pytest.raises(DomainError):
        InstanceSpec.load(tmp_path / "missing.json")
