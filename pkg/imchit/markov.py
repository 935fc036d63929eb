"""
Markov core module for imc-hit
State spaces, stochastic matrices, restriction/extension calculus and support-graph reachability
"""

from collections import deque
from dataclasses import dataclass, field
from typing import FrozenSet, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import DomainError

ROW_SUM_TOL = 1e-9
ROW_REJECT_TOL = 1e-6
SUPPORT_EPS = 1e-12


def _readonly(array: np.ndarray) -> np.ndarray:
    array = np.array(array, dtype=float)
    array.setflags(write=False)
    return array


def _as_index_set(states: Iterable[int]) -> Tuple[int, ...]:
    return tuple(sorted({int(s) for s in states}))


@dataclass(frozen=True)
class StateSpace:
    """Ordered finite state space 0..N-1 with optional display labels"""

    size: int
    labels: Optional[Tuple[str, ...]] = None

    def __post_init__(self):
        if self.size < 1:
            raise DomainError("state space must contain at least one state", size=self.size)
        if self.labels is not None:
            labels = tuple(str(label) for label in self.labels)
            if len(labels) != self.size or len(set(labels)) != self.size:
                raise DomainError("labels must be distinct and one per state", labels=list(labels))
            object.__setattr__(self, "labels", labels)

    def states(self) -> range:
        return range(self.size)

    def label(self, state: int) -> str:
        self.check(state)
        return self.labels[state] if self.labels else str(state)

    def check(self, state: int) -> int:
        """Validate a state index and return it as an int"""
        if not 0 <= int(state) < self.size:
            raise DomainError("state index out of range", state=int(state), size=self.size)
        return int(state)


@dataclass(frozen=True)
class TargetSet:
    """Nonempty set A of target states; the complement is always derived"""

    members: FrozenSet[int]
    size: int

    def __post_init__(self):
        members = frozenset(int(m) for m in self.members)
        if not members:
            raise DomainError("target set must be nonempty")
        if min(members) < 0 or max(members) >= self.size:
            raise DomainError("target state out of range", target=sorted(members), size=self.size)
        object.__setattr__(self, "members", members)

    @classmethod
    def of(cls, members: Iterable[int], size: int) -> "TargetSet":
        return cls(frozenset(members), size)

    @property
    def complement(self) -> FrozenSet[int]:
        return frozenset(range(self.size)) - self.members

    def indicator(self) -> np.ndarray:
        return indicator(self.members, self.size)

    def __contains__(self, state: int) -> bool:
        return state in self.members

    def sorted(self) -> List[int]:
        return sorted(self.members)


def indicator(states: Iterable[int], size: int) -> np.ndarray:
    """Indicator vector 1_S of a subset S of 0..size-1"""
    vector = np.zeros(size)
    idx = list(states)
    if idx:
        vector[idx] = 1.0
    return vector


def normalize_weights(weights: Sequence[float]) -> np.ndarray:
    """
    Validate a probability mass function and remove decimal drift

    Args:
        weights: Candidate probabilities

    Returns:
        Nonnegative weights summing to one

    Raises:
        DomainError: negative entries, or a sum further than 1e-6 from one
    """
    array = np.asarray(weights, dtype=float)
    if array.ndim != 1 or array.size == 0 or not np.all(np.isfinite(array)):
        raise DomainError("probability row must be a finite 1-d vector", weights=array)
    if np.any(array < -SUPPORT_EPS):
        raise DomainError("probability row has negative entries", weights=array)
    array = np.clip(array, 0.0, None)
    total = array.sum()
    if abs(total - 1.0) > ROW_REJECT_TOL:
        raise DomainError("probability row does not sum to one", weights=array, total=float(total))
    return array / total


@dataclass(frozen=True, eq=False)
class ProbabilityRow:
    """One row of a transition matrix: a pmf over the state space"""

    weights: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "weights", _readonly(normalize_weights(self.weights)))

    @property
    def support(self) -> np.ndarray:
        return self.weights > SUPPORT_EPS

    def __eq__(self, other) -> bool:
        return isinstance(other, ProbabilityRow) and np.array_equal(self.weights, other.weights)

    def __hash__(self) -> int:
        return hash(self.weights.tobytes())


@dataclass(frozen=True, eq=False)
class TransitionMatrix:
    """Row-stochastic N x N matrix over the index-ordered state space"""

    array: np.ndarray

    def __post_init__(self):
        array = np.asarray(self.array, dtype=float)
        if array.ndim != 2 or array.shape[0] != array.shape[1] or array.shape[0] == 0:
            raise DomainError("transition matrix must be square and nonempty", shape=array.shape)
        rows = np.vstack([normalize_weights(row) for row in array])
        object.__setattr__(self, "array", _readonly(rows))

    @classmethod
    def from_rows(cls, rows: Sequence[Union[ProbabilityRow, Sequence[float]]]) -> "TransitionMatrix":
        return cls(np.vstack([r.weights if isinstance(r, ProbabilityRow) else np.asarray(r, float) for r in rows]))

    @property
    def size(self) -> int:
        return self.array.shape[0]

    def __getitem__(self, key: Tuple[int, int]) -> float:
        x, y = key
        return float(self.array[_check(x, self.size), _check(y, self.size)])

    def row(self, x: int) -> ProbabilityRow:
        return ProbabilityRow(self.array[_check(x, self.size)])

    def support(self) -> np.ndarray:
        """Boolean adjacency of the support graph (entries above 1e-12)"""
        return self.array > SUPPORT_EPS

    def apply(self, f: Union["ValueFunction", np.ndarray]) -> np.ndarray:
        return self.array @ as_vector(f, self.size)

    def __eq__(self, other) -> bool:
        return isinstance(other, TransitionMatrix) and np.array_equal(self.array, other.array)

    def __hash__(self) -> int:
        return hash(self.array.tobytes())


def _check(state: int, size: int) -> int:
    if not 0 <= int(state) < size:
        raise DomainError("state index out of range", state=int(state), size=size)
    return int(state)


@dataclass(frozen=True, eq=False)
class ValueFunction:
    """Real function on an explicit carrier subset of the state space"""

    values: np.ndarray
    carrier: Tuple[int, ...] = field(default=())

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float).ravel()
        carrier = tuple(int(c) for c in self.carrier) if self.carrier else tuple(range(values.size))
        if values.size == 0:
            carrier = tuple(int(c) for c in self.carrier)
        if len(carrier) != values.size:
            raise DomainError("carrier and values differ in length", carrier=list(carrier), length=values.size)
        if list(carrier) != sorted(set(carrier)):
            raise DomainError("carrier must be strictly increasing", carrier=list(carrier))
        object.__setattr__(self, "values", _readonly(values))
        object.__setattr__(self, "carrier", carrier)

    @classmethod
    def on(cls, values: Sequence[float], carrier: Iterable[int]) -> "ValueFunction":
        return cls(np.asarray(values, dtype=float), tuple(carrier))

    def at(self, state: int) -> float:
        try:
            return float(self.values[self.carrier.index(int(state))])
        except ValueError:
            raise DomainError("state outside carrier", state=int(state), carrier=list(self.carrier))

    def _same_carrier(self, other: "ValueFunction") -> None:
        if self.carrier != other.carrier:
            raise DomainError("value functions live on different carriers",
                              left=list(self.carrier), right=list(other.carrier))

    def __add__(self, other: "ValueFunction") -> "ValueFunction":
        self._same_carrier(other)
        return ValueFunction(self.values + other.values, self.carrier)

    def __sub__(self, other: "ValueFunction") -> "ValueFunction":
        self._same_carrier(other)
        return ValueFunction(self.values - other.values, self.carrier)

    def __neg__(self) -> "ValueFunction":
        return ValueFunction(-self.values, self.carrier)

    def scale(self, factor: float) -> "ValueFunction":
        return ValueFunction(factor * self.values, self.carrier)

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values))) if self.values.size else 0.0

    def __len__(self) -> int:
        return self.values.size


def as_vector(f: Union[ValueFunction, Sequence[float], np.ndarray], size: int) -> np.ndarray:
    """Full-length numpy view of a function defined on all of 0..size-1"""
    if isinstance(f, ValueFunction):
        if f.carrier != tuple(range(size)):
            raise DomainError("function must be defined on the whole state space",
                              carrier=list(f.carrier), size=size)
        return f.values
    vector = np.asarray(f, dtype=float)
    if vector.shape != (size,):
        raise DomainError("function has the wrong length", length=vector.size, size=size)
    return vector


def restrict_function(f: ValueFunction, subset: Iterable[int]) -> ValueFunction:
    """
    Restrict f to a nonempty subset S of its carrier

    Args:
        f: Function over a carrier Y
        subset: The set S

    Returns:
        f|_S over carrier S
    """
    target = _as_index_set(subset)
    if not target:
        raise DomainError("cannot restrict to the empty set")
    missing = set(target) - set(f.carrier)
    if missing:
        raise DomainError("restriction set not contained in carrier",
                          missing=sorted(missing), carrier=list(f.carrier))
    position = {state: i for i, state in enumerate(f.carrier)}
    return ValueFunction(f.values[[position[s] for s in target]], target)


def extend_function(g: ValueFunction, superset: Iterable[int]) -> ValueFunction:
    """
    Extend g by zero from its carrier S to a superset Y

    Args:
        g: Function over S
        superset: The set Y containing S

    Returns:
        g^Y, equal to g on S and 0 on Y minus S
    """
    target = _as_index_set(superset)
    missing = set(g.carrier) - set(target)
    if missing:
        raise DomainError("carrier is not contained in the extension set",
                          missing=sorted(missing), superset=list(target))
    position = {state: i for i, state in enumerate(target)}
    values = np.zeros(len(target))
    values[[position[s] for s in g.carrier]] = g.values
    return ValueFunction(values, target)


@dataclass(frozen=True, eq=False)
class RestrictedOperator:
    """Submatrix M|_S acting on functions over S"""

    matrix: np.ndarray
    carrier: Tuple[int, ...]

    def apply(self, g: ValueFunction) -> ValueFunction:
        if g.carrier != self.carrier:
            raise DomainError("operand carrier does not match", carrier=list(g.carrier),
                              expected=list(self.carrier))
        return ValueFunction(self.matrix @ g.values, self.carrier)


def restrict_matrix(T: Union[TransitionMatrix, np.ndarray], subset: Iterable[int]) -> RestrictedOperator:
    """
    Restrict a matrix to the rows and columns of a nonempty subset

    Args:
        T: Transition matrix (or any square array)
        subset: The set S

    Returns:
        RestrictedOperator carrying the |S| x |S| submatrix
    """
    array = T.array if isinstance(T, TransitionMatrix) else np.asarray(T, dtype=float)
    target = _as_index_set(subset)
    if not target:
        raise DomainError("cannot restrict to the empty set")
    for state in target:
        _check(state, array.shape[0])
    idx = np.array(target)
    return RestrictedOperator(_readonly(array[np.ix_(idx, idx)]), target)


def forward_reachable(adjacency: np.ndarray, source: int) -> FrozenSet[int]:
    """States reachable from source along True edges, source included (n = 0)"""
    seen = {int(source)}
    queue = deque([int(source)])
    while queue:
        state = queue.popleft()
        for nxt in np.flatnonzero(adjacency[state]):
            if nxt not in seen:
                seen.add(int(nxt))
                queue.append(int(nxt))
    return frozenset(seen)


def backward_reachable(adjacency: np.ndarray, targets: Iterable[int]) -> FrozenSet[int]:
    """States from which some target is reachable along True edges, targets included"""
    reverse = adjacency.T
    seen = set(int(t) for t in targets)
    queue = deque(sorted(seen))
    while queue:
        state = queue.popleft()
        for prev in np.flatnonzero(reverse[state]):
            if prev not in seen:
                seen.add(int(prev))
                queue.append(int(prev))
    return frozenset(seen)


def reaches(T: TransitionMatrix, x: int, y: int) -> bool:
    """
    Support-graph reachability x -> y (reflexive: reaches(x, x) is True)

    Args:
        T: Transition matrix
        x: Start state
        y: Destination state

    Returns:
        True iff T^n(x, y) > 0 for some n >= 0
    """
    x, y = _check(x, T.size), _check(y, T.size)
    if x == y:
        return True
    return y in forward_reachable(T.support(), x)


def cannot_reach_set(T: TransitionMatrix, A: TargetSet) -> FrozenSet[int]:
    """
    C_T: the states of A^c from which no target state is reachable under T

    Args:
        T: Transition matrix
        A: Target set

    Returns:
        Frozen set of state indices
    """
    if A.size != T.size:
        raise DomainError("target set and matrix disagree on the state count", target_size=A.size, size=T.size)
    return A.complement - backward_reachable(T.support(), A.members)
