"""
Credal module for imc-hit
Credal transition models with separately specified rows and their lower/upper envelopes
"""

from abc import ABC, abstractmethod
from dataclasses import dataclass
from itertools import product
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import DomainError
from .markov import SUPPORT_EPS, TransitionMatrix, ValueFunction, as_vector, normalize_weights

TIE_TOL = 1e-12


class CredalRow(ABC):
    """Finitely generated convex set of distributions for one state"""

    @property
    @abstractmethod
    def size(self) -> int:
        """Number of states the row distributes over"""

    @property
    @abstractmethod
    def vertices(self) -> np.ndarray:
        """Extreme points as an m x N array"""

    @abstractmethod
    def expectations(self, f: np.ndarray) -> np.ndarray:
        """v . f for every extreme point v, in extreme-point order"""

    @abstractmethod
    def center(self) -> np.ndarray:
        """A relative-interior point of the row"""

    @abstractmethod
    def to_dict(self) -> Dict[str, Any]:
        """JSON form of the row"""

    @property
    def count(self) -> int:
        return self.vertices.shape[0]

    def possible(self) -> np.ndarray:
        """States that receive positive mass under some extreme point"""
        return np.any(self.vertices > SUPPORT_EPS, axis=0)

    def lower(self, f: np.ndarray, keep: Optional[int] = None) -> Tuple[float, int]:
        """
        Minimum of v . f over the extreme points

        Args:
            f: Function over the state space
            keep: Extreme point to retain when it attains the minimum within 1e-12

        Returns:
            Tuple of (minimum value, index of the attaining extreme point)
        """
        values = self.expectations(f)
        best = int(np.argmin(values))
        if keep is not None and values[keep] <= values[best] + TIE_TOL:
            best = keep
        return float(values[best]), best

    def upper(self, f: np.ndarray, keep: Optional[int] = None) -> Tuple[float, int]:
        """Maximum counterpart of lower(), with the same keep rule"""
        values = self.expectations(f)
        best = int(np.argmax(values))
        if keep is not None and values[keep] >= values[best] - TIE_TOL:
            best = keep
        return float(values[best]), best


class VertexRow(CredalRow):
    """Convex hull of an explicit list of distributions"""

    def __init__(self, vertices: Sequence[Sequence[float]]):
        if len(vertices) == 0:
            raise DomainError("a vertex row needs at least one vertex")
        unique: Dict[bytes, np.ndarray] = {}
        for vertex in vertices:
            row = normalize_weights(vertex)
            unique.setdefault(row.tobytes(), row)
        if len({v.size for v in unique.values()}) != 1:
            raise DomainError("vertices must share one length")
        stacked = np.vstack(list(unique.values()))
        stacked.setflags(write=False)
        self._vertices = stacked

    @property
    def size(self) -> int:
        return self._vertices.shape[1]

    @property
    def vertices(self) -> np.ndarray:
        return self._vertices

    def expectations(self, f: np.ndarray) -> np.ndarray:
        return self._vertices @ f

    def center(self) -> np.ndarray:
        return self._vertices.mean(axis=0)

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": "vertex", "vertices": self._vertices.tolist()}

    def __repr__(self) -> str:
        return f"VertexRow(m={self.count}, N={self.size})"


class EpsContamRow(CredalRow):
    """{(1 - eps) * base + eps * s : s any distribution on support}"""

    def __init__(self, base: Sequence[float], epsilon: float, support: Optional[Iterable[int]] = None):
        base = normalize_weights(base)
        if not 0.0 < float(epsilon) < 1.0:
            raise DomainError("epsilon must lie in (0, 1)", epsilon=epsilon)
        states = sorted({int(y) for y in support}) if support is not None else list(range(base.size))
        if not states:
            raise DomainError("contamination support must be nonempty")
        if states[0] < 0 or states[-1] >= base.size:
            raise DomainError("contamination support out of range", support=states, size=base.size)
        outside = np.ones(base.size, dtype=bool)
        outside[states] = False
        if np.any(base[outside] > SUPPORT_EPS):
            raise DomainError("base row must be supported within the contamination support",
                              support=states, base=base)
        self.base = base
        self.base.setflags(write=False)
        self.epsilon = float(epsilon)
        self.support = tuple(states)
        vertices = np.tile((1.0 - self.epsilon) * base, (len(states), 1))
        vertices[np.arange(len(states)), states] += self.epsilon
        vertices.setflags(write=False)
        self._vertices = vertices

    @property
    def size(self) -> int:
        return self.base.size

    @property
    def vertices(self) -> np.ndarray:
        return self._vertices

    def expectations(self, f: np.ndarray) -> np.ndarray:
        return (1.0 - self.epsilon) * float(self.base @ f) + self.epsilon * f[list(self.support)]

    def center(self) -> np.ndarray:
        row = (1.0 - self.epsilon) * self.base
        row[list(self.support)] += self.epsilon / len(self.support)
        return row

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": "eps", "epsilon": self.epsilon, "base": self.base.tolist(),
                "support": list(self.support)}

    def __repr__(self) -> str:
        return f"EpsContamRow(eps={self.epsilon}, support={list(self.support)})"


@dataclass(frozen=True)
class ExtremeSelection:
    """Per-state index of the chosen extreme point"""

    choice: Tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "choice", tuple(int(c) for c in self.choice))

    def __getitem__(self, state: int) -> int:
        return self.choice[state]

    def __len__(self) -> int:
        return len(self.choice)

    def changed_rows(self, other: "ExtremeSelection") -> List[int]:
        return [x for x, (a, b) in enumerate(zip(self.choice, other.choice)) if a != b]


class CredalSet:
    """Cartesian product of per-state credal rows (separately specified rows)"""

    def __init__(self, rows: Sequence[CredalRow]):
        rows = tuple(rows)
        if not rows:
            raise DomainError("a credal set needs at least one row")
        for x, row in enumerate(rows):
            if row.size != len(rows):
                raise DomainError("row length does not match the state count", state=x,
                                  row_size=row.size, size=len(rows))
        self.rows = rows

    @property
    def size(self) -> int:
        return len(self.rows)

    @property
    def counts(self) -> List[int]:
        return [row.count for row in self.rows]

    def combination_count(self) -> int:
        total = 1
        for count in self.counts:
            total *= count
        return total

    def validate(self, selection: ExtremeSelection) -> ExtremeSelection:
        if len(selection) != self.size:
            raise DomainError("selection length does not match the state count",
                              length=len(selection), size=self.size)
        for x, (index, row) in enumerate(zip(selection.choice, self.rows)):
            if not 0 <= index < row.count:
                raise DomainError("extreme point index out of range", state=x, index=index, count=row.count)
        return selection

    def to_dict(self) -> Dict[str, Any]:
        if all(isinstance(row, VertexRow) for row in self.rows):
            return {"kind": "vertex_rows", "rows": [row.vertices.tolist() for row in self.rows]}
        if all(isinstance(row, EpsContamRow) for row in self.rows):
            epsilons = {row.epsilon for row in self.rows}
            if len(epsilons) == 1:
                return {
                    "kind": "eps_contamination",
                    "epsilon": epsilons.pop(),
                    "base": [row.base.tolist() for row in self.rows],
                    "support": [list(row.support) for row in self.rows],
                }
        return {"kind": "mixed", "rows": [row.to_dict() for row in self.rows]}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "CredalSet":
        """
        Parse the credal JSON forms

        Args:
            data: {"kind": "vertex_rows" | "eps_contamination" | "mixed", ...}

        Returns:
            CredalSet
        """
        kind = data.get("kind")
        if kind == "vertex_rows":
            return cls([VertexRow(vertices) for vertices in data["rows"]])
        if kind == "eps_contamination":
            base = data["base"]
            supports = data.get("support") or [None] * len(base)
            if len(supports) != len(base):
                raise DomainError("one support list per row is required")
            return cls([EpsContamRow(row, data["epsilon"], support) for row, support in zip(base, supports)])
        if kind == "mixed":
            return cls([_row_from_dict(row) for row in data["rows"]])
        raise DomainError("unknown credal kind", kind=kind)

    def __repr__(self) -> str:
        return f"CredalSet(N={self.size}, counts={self.counts})"


def _row_from_dict(data: Dict[str, Any]) -> CredalRow:
    if data.get("kind") == "vertex":
        return VertexRow(data["vertices"])
    if data.get("kind") == "eps":
        return EpsContamRow(data["base"], data["epsilon"], data.get("support"))
    raise DomainError("unknown credal row kind", kind=data.get("kind"))


FunctionLike = Union[ValueFunction, np.ndarray, Sequence[float]]


def _envelope(C: CredalSet, f: FunctionLike, keep: Optional[ExtremeSelection], upper: bool):
    vector = as_vector(f, C.size)
    if keep is not None:
        C.validate(keep)
    values = np.empty(C.size)
    choice = []
    for x, row in enumerate(C.rows):
        kept = keep[x] if keep is not None else None
        value, index = row.upper(vector, kept) if upper else row.lower(vector, kept)
        values[x] = value
        choice.append(index)
    return ValueFunction(values), ExtremeSelection(tuple(choice))


def lower_envelope(
    C: CredalSet, f: FunctionLike, keep: Optional[ExtremeSelection] = None
) -> Tuple[ValueFunction, ExtremeSelection]:
    """
    Lower transition operator: [T_low f](x) = min over extreme points of row x

    Args:
        C: Credal set
        f: Function over the whole state space
        keep: Optional selection whose rows win ties (within 1e-12)

    Returns:
        Tuple of (envelope values, attaining selection; lowest index on fresh ties)
    """
    return _envelope(C, f, keep, upper=False)


def upper_envelope(
    C: CredalSet, f: FunctionLike, keep: Optional[ExtremeSelection] = None
) -> Tuple[ValueFunction, ExtremeSelection]:
    """
    Upper transition operator with the row-keeping tiebreak

    Args:
        C: Credal set
        f: Function over the whole state space
        keep: Optional selection whose rows win ties (within 1e-12)

    Returns:
        Tuple of (envelope values, attaining selection; lowest index on fresh ties)
    """
    return _envelope(C, f, keep, upper=True)


def materialize(C: CredalSet, selection: ExtremeSelection) -> TransitionMatrix:
    """Transition matrix whose row x is the selection[x]-th extreme point of row x"""
    C.validate(selection)
    return TransitionMatrix(np.vstack([row.vertices[index] for row, index in zip(C.rows, selection.choice)]))


def center_matrix(C: CredalSet) -> TransitionMatrix:
    """Matrix of relative-interior rows; positive wherever some extreme point is positive"""
    return TransitionMatrix(np.vstack([row.center() for row in C.rows]))


def possible_edge(C: CredalSet, x: int, y: int) -> bool:
    """True iff some extreme point of row x gives y positive mass"""
    if not (0 <= x < C.size and 0 <= y < C.size):
        raise DomainError("state index out of range", x=x, y=y, size=C.size)
    return bool(C.rows[x].possible()[y])


def possible_support(C: CredalSet) -> np.ndarray:
    """Boolean adjacency of all possible edges"""
    return np.vstack([row.possible() for row in C.rows])


def vertex_matrix_selections(C: CredalSet) -> Iterable[ExtremeSelection]:
    """Every extreme selection in lexicographic order"""
    for choice in product(*[range(count) for count in C.counts]):
        yield ExtremeSelection(choice)
