"""
Instances module for imc-hit
Serializable problem instances, the random graph generator and the named fixture families
"""

import json
from enum import Enum
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Union

import json5
import numpy as np
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .credal import CredalSet, EpsContamRow, ExtremeSelection, VertexRow
from .errors import DomainError
from .markov import StateSpace, TargetSet, TransitionMatrix


class Family(str, Enum):
    """Generator families"""
    RANDOM = "random"
    WORST_CASE = "worst_case"
    PROPAGATION_CHAIN = "propagation_chain"
    EXAMPLE1 = "example1"
    EXAMPLE2 = "example2"
    TIEBREAK = "tiebreak"


class CredalModel(str, Enum):
    """Credal models attached to random support graphs"""
    EPS_CONTAM = "eps_contam"
    VERTEX_HULL = "vertex_hull"


class GeneratorMeta(BaseModel):
    """How an instance was produced"""

    model_config = ConfigDict(populate_by_name=True)

    family: Family
    lam: Optional[float] = Field(default=None, alias="lambda")
    model: Optional[CredalModel] = None
    epsilon: Optional[float] = None
    seed: Optional[int] = None
    params: Dict[str, Any] = Field(default_factory=dict)


class InstanceSpec(BaseModel):
    """Problem instance in its JSON form"""

    states: int = Field(ge=1)
    labels: Optional[List[str]] = None
    target: List[int] = Field(default_factory=lambda: [0])
    credal: Dict[str, Any]
    seed: Optional[int] = None
    generator: Optional[GeneratorMeta] = None

    @model_validator(mode="after")
    def _check_consistency(self) -> "InstanceSpec":
        StateSpace(self.states, tuple(self.labels) if self.labels else None)
        self.target_set()
        if self.credal_set().size != self.states:
            raise ValueError("credal set size does not match the state count")
        return self

    def credal_set(self) -> CredalSet:
        return CredalSet.from_dict(self.credal)

    def target_set(self) -> TargetSet:
        return TargetSet.of(self.target, self.states)

    def to_json(self) -> str:
        return self.model_dump_json(by_alias=True, exclude_none=True, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "InstanceSpec":
        """
        Parse an instance, accepting JSON5 (comments, trailing commas)

        Args:
            text: Instance document

        Returns:
            Validated InstanceSpec

        Raises:
            DomainError: malformed document or inconsistent instance
        """
        try:
            data = json5.loads(text)
        except ValueError as exc:
            raise DomainError("instance is not valid JSON", reason=str(exc)) from exc
        try:
            return cls.model_validate(data)
        except ValidationError as exc:
            raise DomainError("invalid instance", errors=json.loads(exc.json())) from exc

    @classmethod
    def load(cls, path: Union[str, Path]) -> "InstanceSpec":
        path = Path(path)
        if not path.exists():
            raise DomainError("instance file not found", path=str(path))
        return cls.from_json(path.read_text(encoding="utf-8"))

    def save(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.write_text(self.to_json() + "\n", encoding="utf-8")
        logger.info("instance written to {}", path)
        return path


def _delta(size: int, state: int) -> np.ndarray:
    row = np.zeros(size)
    row[state] = 1.0
    return row


def _fresh_seed() -> int:
    return int(np.random.SeedSequence().entropy % (2 ** 63))


def random_support_graph(N: int, lam: float, rng: np.random.Generator) -> np.ndarray:
    """
    Boolean adjacency of a random instance graph with target 0 and trap N-1

    A random tree hangs every inner state off the target or an already connected state; inner
    states then gain each edge to another state independently with probability (lam-1)/(N-1).
    Target and trap rows stay empty here (they become absorbing).
    """
    adjacency = np.zeros((N, N), dtype=bool)
    connected = [0]
    for state in rng.permutation(np.arange(1, N - 1)):
        parent = connected[int(rng.integers(len(connected)))]
        adjacency[state, parent] = True
        connected.append(int(state))

    extra = rng.random((N, N)) < (lam - 1.0) / (N - 1)
    extra[[0, N - 1], :] = False
    np.fill_diagonal(extra, False)
    return adjacency | extra


def gen_random_instance(
    N: int,
    lam: float,
    model: Union[CredalModel, str] = CredalModel.EPS_CONTAM,
    epsilon: float = 0.1,
    seed: Optional[int] = None,
    full_support: bool = False,
) -> InstanceSpec:
    """
    Random instance on a tree-plus-Erdos-Renyi support graph, target {0}, absorbing trap N-1

    Args:
        N: Number of states (at least 3)
        lam: Average out-degree in [1, N]
        model: eps_contam (Dirichlet base on the edges, contaminated over the edges) or
            vertex_hull (n_x Dirichlet points on the n_x edges of each row)
        epsilon: Contamination level for eps_contam
        seed: Generator seed; a fresh one is drawn and recorded when absent
        full_support: Contaminate over every state instead of the edges

    Returns:
        InstanceSpec, regenerated bit-identically from the same arguments
    """
    model = CredalModel(model)
    if N < 3:
        raise DomainError("random instances need at least 3 states", N=N)
    if not 1.0 <= lam <= N:
        raise DomainError("lambda must lie in [1, N]", lam=lam, N=N)
    if model is CredalModel.EPS_CONTAM and not 0.0 < epsilon < 1.0:
        raise DomainError("epsilon must lie in (0, 1)", epsilon=epsilon)
    seed = _fresh_seed() if seed is None else int(seed)
    rng = np.random.default_rng(seed)
    adjacency = random_support_graph(N, lam, rng)

    rows = []
    for x in range(N):
        if x in (0, N - 1):
            if model is CredalModel.EPS_CONTAM:
                rows.append(EpsContamRow(_delta(N, x), epsilon, [x]))
            else:
                rows.append(VertexRow([_delta(N, x)]))
            continue
        edges = np.flatnonzero(adjacency[x])
        if model is CredalModel.EPS_CONTAM:
            base = np.zeros(N)
            base[edges] = rng.dirichlet(np.ones(edges.size))
            support = range(N) if full_support else edges
            rows.append(EpsContamRow(base, epsilon, support))
        else:
            points = np.zeros((edges.size, N))
            points[:, edges] = rng.dirichlet(np.ones(edges.size), size=edges.size)
            rows.append(VertexRow(points))

    meta = GeneratorMeta(
        family=Family.RANDOM,
        lam=float(lam),
        model=model,
        epsilon=float(epsilon) if model is CredalModel.EPS_CONTAM else None,
        seed=seed,
        params={"full_support": bool(full_support)},
    )
    return InstanceSpec(states=N, target=[0], credal=CredalSet(rows).to_dict(), seed=seed, generator=meta)


def worst_case_instance(m: int) -> InstanceSpec:
    """Three states, target {1}; row 0 has m vertices (1-1/n-1/n^2, 1/n, 1/n^2), n = 2^k"""
    if m < 2:
        raise DomainError("the worst-case family needs m >= 2", m=m)
    vertices = []
    for k in range(1, m + 1):
        n = 2.0 ** k
        vertices.append([1.0 - 1.0 / n - 1.0 / n ** 2, 1.0 / n, 1.0 / n ** 2])
    credal = CredalSet([VertexRow(vertices), VertexRow([_delta(3, 1)]), VertexRow([_delta(3, 2)])])
    meta = GeneratorMeta(family=Family.WORST_CASE, params={"m": m})
    return InstanceSpec(states=3, target=[1], credal=credal.to_dict(), generator=meta)


def worst_case_start(m: int) -> ExtremeSelection:
    """Selection of the n = 2 vertex of the worst-case family"""
    if m < 2:
        raise DomainError("the worst-case family needs m >= 2", m=m)
    return ExtremeSelection((0, 0, 0))


def propagation_chain_instance(N: int, b: float) -> InstanceSpec:
    """
    (N+2)-state chain where upper hitting information moves back one state per iteration

    State 0 is the target, states 1..N-1 carry rows q in {0, b}, state N splits evenly between
    the target and the trap N+1.

    Args:
        N: Chain length (at least 3)
        b: Upper end of the q intervals, (1/2)^(1/N) < b < 1

    Returns:
        InstanceSpec
    """
    if N < 3:
        raise DomainError("the propagation chain needs N >= 3", N=N)
    if not 0.5 ** (1.0 / N) < b < 1.0:
        raise DomainError("b must lie in ((1/2)^(1/N), 1)", b=b, lower=0.5 ** (1.0 / N))
    size = N + 2
    splitter, trap = N, N + 1
    rows = [VertexRow([_delta(size, 0)])]
    for x in range(1, N):
        forward = 0 if x == 1 else x - 1
        fallback = trap if x == 1 else splitter
        vertices = []
        for q in (0.0, b):
            row = np.zeros(size)
            row[forward] += q
            row[fallback] += 1.0 - q
            vertices.append(row)
        rows.append(VertexRow(vertices))
    split = np.zeros(size)
    split[[0, trap]] = 0.5
    rows.append(VertexRow([split]))
    rows.append(VertexRow([_delta(size, trap)]))
    meta = GeneratorMeta(family=Family.PROPAGATION_CHAIN, params={"N": N, "b": b})
    return InstanceSpec(states=size, target=[0], credal=CredalSet(rows).to_dict(), generator=meta)


def _example1() -> InstanceSpec:
    credal = CredalSet([
        VertexRow([[0, 0, 1, 0], [0, 1, 0, 0]]),
        VertexRow([[0, 0, 1, 0]]),
        VertexRow([[0, 0, 0, 1]]),
        VertexRow([[0, 0, 0, 1]]),
    ])
    return InstanceSpec(states=4, target=[2], credal=credal.to_dict(),
                        generator=GeneratorMeta(family=Family.EXAMPLE1))


def _example2() -> InstanceSpec:
    credal = CredalSet([
        VertexRow([[0, 1, 0], [0, 0, 1]]),
        VertexRow([[0, 0, 1]]),
        VertexRow([[1, 0, 0]]),
    ])
    return InstanceSpec(states=3, target=[2], credal=credal.to_dict(),
                        generator=GeneratorMeta(family=Family.EXAMPLE2))


def _tiebreak() -> InstanceSpec:
    credal = CredalSet([
        VertexRow([[1, 0, 0]]),
        VertexRow([[1, 0, 0], [0, 1, 0], [0, 0, 1]]),
        VertexRow([[0, 0, 1]]),
    ])
    return InstanceSpec(states=3, target=[2], credal=credal.to_dict(),
                        generator=GeneratorMeta(family=Family.TIEBREAK))


class FixtureRegistry:
    """Registry of the named example instances"""

    def __init__(self):
        self.fixtures: Dict[str, Callable[[], InstanceSpec]] = {
            Family.EXAMPLE1.value: _example1,
            Family.EXAMPLE2.value: _example2,
            Family.TIEBREAK.value: _tiebreak,
        }

    def list_fixtures(self) -> List[str]:
        return sorted(self.fixtures)

    def build(self, name: str) -> InstanceSpec:
        builder = self.fixtures.get(name)
        if builder is None:
            raise DomainError(f"unknown fixture '{name}'", known=self.list_fixtures())
        return builder()


def fixture(name: str) -> InstanceSpec:
    """Instance for example1, example2 or tiebreak"""
    return FixtureRegistry().build(name)


def random_transition_matrix(N: int, rng: np.random.Generator, density: float = 0.5) -> TransitionMatrix:
    """Sparse random stochastic matrix; every row keeps at least one positive entry"""
    mask = rng.random((N, N)) < density
    mask[np.arange(N), rng.integers(N, size=N)] = True
    weights = np.where(mask, rng.random((N, N)) + 1e-3, 0.0)
    return TransitionMatrix(weights / weights.sum(axis=1, keepdims=True))


def random_vertex_credal_set(N: int, rng: np.random.Generator, max_vertices: int = 3,
                             density: float = 0.5) -> CredalSet:
    """Vertex-row credal set with 1..max_vertices random sparse vertices per row"""
    rows = []
    for _ in range(N):
        count = int(rng.integers(1, max_vertices + 1))
        rows.append(VertexRow(random_transition_matrix(N, rng, density).array[:count]))
    return CredalSet(rows)
