"""
Precise hitting module for imc-hit
Hitting probabilities of a single transition matrix via a restricted dense LU solve
"""

import warnings
from collections import deque
from dataclasses import dataclass
from typing import FrozenSet, Iterable, List, Optional, Tuple

import numpy as np
from loguru import logger
from scipy.linalg import LinAlgWarning, lu_factor, lu_solve

from .errors import DomainError, SolverError
from .markov import (
    SUPPORT_EPS,
    TargetSet,
    TransitionMatrix,
    ValueFunction,
    cannot_reach_set,
    restrict_matrix,
)

PIVOT_EPS = 1e-12
RESIDUAL_TOL = 1e-9
PLATEAU_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class HittingVector:
    """Hitting probabilities of the target set, one value per state"""

    values: np.ndarray
    target: TargetSet

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def zero_set(self, tol: float = 1e-12) -> FrozenSet[int]:
        return frozenset(int(x) for x in np.flatnonzero(self.values <= tol))

    def as_function(self) -> ValueFunction:
        return ValueFunction(self.values)

    def __getitem__(self, state: int) -> float:
        return float(self.values[state])

    def tolist(self) -> List[float]:
        return self.values.tolist()


@dataclass(frozen=True)
class PathCertificate:
    """Simple path into the target along positive entries with nondecreasing hitting probabilities"""

    states: Tuple[int, ...]
    values: Tuple[float, ...]

    def is_valid(self, T: TransitionMatrix, A: TargetSet, tol: float = PLATEAU_TOL) -> bool:
        """Check the certificate against its own invariants"""
        if not self.states or len(self.states) != len(self.values):
            return False
        if len(set(self.states)) != len(self.states) or self.states[-1] not in A:
            return False
        for a, b in zip(self.states, self.states[1:]):
            if T.array[a, b] <= SUPPORT_EPS:
                return False
        return all(v2 >= v1 - tol for v1, v2 in zip(self.values, self.values[1:]))


def fixed_point_gap(T: TransitionMatrix, A: TargetSet, p: np.ndarray) -> float:
    """Sup-norm residual of p = 1_A + 1_{A^c} T p"""
    ones = A.indicator()
    return float(np.max(np.abs(p - (ones + (1.0 - ones) * (T.array @ p)))))


def fundamental_solve(
    T: TransitionMatrix,
    A: TargetSet,
    S: Iterable[int],
    rhs: ValueFunction,
) -> ValueFunction:
    """
    Solve (I - T|_K) x = rhs on K = A^c minus S

    Args:
        T: Transition matrix
        A: Target set
        S: Zero set with C_T contained in S contained in A^c
        rhs: Right-hand side over K

    Returns:
        The unique solution over K

    Raises:
        DomainError: S violates the containment chain or rhs lives on the wrong carrier
        SolverError: a pivot below 1e-12 (singular restricted system)
    """
    zero = frozenset(int(s) for s in S)
    if not zero <= A.complement:
        raise DomainError("zero set must lie outside the target", zero=zero, target=A.members)
    unreachable = cannot_reach_set(T, A)
    if not unreachable <= zero:
        raise DomainError("zero set must contain every state that cannot reach the target",
                          missing=unreachable - zero)
    carrier = tuple(sorted(A.complement - zero))
    if rhs.carrier != carrier and not (not carrier and len(rhs) == 0):
        raise DomainError("right-hand side carrier must be A^c minus S",
                          carrier=list(rhs.carrier), expected=list(carrier))
    if not carrier:
        return ValueFunction(np.zeros(0), ())

    system = np.eye(len(carrier)) - restrict_matrix(T, carrier).matrix
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", LinAlgWarning)
        lu, piv = lu_factor(system, check_finite=True)
    pivots = np.abs(np.diag(lu))
    if pivots.min() < PIVOT_EPS:
        raise SolverError("restricted system is numerically singular",
                          smallest_pivot=float(pivots.min()), carrier=list(carrier))
    return ValueFunction(lu_solve((lu, piv), rhs.values), carrier)


def hitting_probabilities(
    T: TransitionMatrix,
    A: TargetSet,
    zero_set: Optional[Iterable[int]] = None,
    residual_tol: float = RESIDUAL_TOL,
) -> HittingVector:
    """
    Minimal nonnegative solution of p = 1_A + 1_{A^c} T p

    Args:
        T: Transition matrix
        A: Target set
        zero_set: Known superset of C_T to pin at zero (defaults to C_T itself)
        residual_tol: Largest accepted fixed-point residual

    Returns:
        HittingVector, exactly 1 on A and exactly 0 on the zero set
    """
    zero = cannot_reach_set(T, A) if zero_set is None else frozenset(zero_set)
    carrier = tuple(sorted(A.complement - zero))
    p = A.indicator()
    if carrier:
        rhs = ValueFunction((T.array[np.ix_(carrier, A.sorted())]).sum(axis=1), carrier)
        solution = fundamental_solve(T, A, zero, rhs)
        p[list(carrier)] = np.clip(solution.values, 0.0, 1.0)

    gap = fixed_point_gap(T, A, p)
    if gap > residual_tol:
        raise SolverError("hitting probabilities fail the fixed-point check",
                          residual=gap, tolerance=residual_tol, zero_set=zero)
    return HittingVector(p, A)


def monotone_path(
    T: TransitionMatrix,
    A: TargetSet,
    x: int,
    p: Optional[HittingVector] = None,
) -> PathCertificate:
    """
    Build a simple path from x into A with nondecreasing hitting probabilities

    Args:
        T: Transition matrix
        A: Target set
        x: Start state outside A and outside C_T
        p: Precomputed hitting probabilities of T (computed when absent)

    Returns:
        PathCertificate
    """
    if not 0 <= x < T.size:
        raise DomainError("state index out of range", state=x, size=T.size)
    if x in A:
        raise DomainError("start state is already a target", state=x)
    if x in cannot_reach_set(T, A):
        raise DomainError("start state cannot reach the target", state=x)
    values = (p if p is not None else hitting_probabilities(T, A)).values
    support = T.support()

    path = [x]
    visited = {x}
    current = x
    while current not in A:
        step = _climb(support, values, A, current, visited)
        if step is None:
            raise SolverError("no monotone continuation found", path=path)
        for state in step:
            path.append(state)
            visited.add(state)
        current = path[-1]
    logger.debug("monotone path from {}: {}", x, path)
    return PathCertificate(tuple(path), tuple(float(values[s]) for s in path))


def _climb(support: np.ndarray, values: np.ndarray, A: TargetSet, start: int, visited: set) -> Optional[List[int]]:
    """Breadth-first search over the plateau of start until a strictly higher neighbour or a target appears"""
    level = values[start]
    parents = {start: None}
    queue = deque([start])
    while queue:
        state = queue.popleft()
        ups = [int(y) for y in np.flatnonzero(support[state])
               if y not in visited and y not in parents
               and (y in A or values[y] > level + PLATEAU_TOL)]
        if ups:
            best = max(ups, key=lambda y: (values[y], -y))
            hops = [best]
            while parents[state] is not None:
                hops.append(state)
                state = parents[state]
            return hops[::-1]
        for y in np.flatnonzero(support[state]):
            y = int(y)
            if y not in visited and y not in parents and abs(values[y] - level) <= PLATEAU_TOL:
                parents[y] = state
                queue.append(y)
    return None
