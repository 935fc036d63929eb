"""
Reachability module for imc-hit
Lower and upper reachability of a target set under a credal set, with witness matrices
"""

from dataclasses import dataclass
from enum import Enum
from itertools import product
from typing import Any, Dict, FrozenSet, Iterable, List, Optional, Tuple

import numpy as np
from loguru import logger

from .config import get_settings
from .credal import (
    CredalSet,
    center_matrix,
    lower_envelope,
    possible_support,
    upper_envelope,
)
from .errors import CapacityError, DomainError
from .markov import SUPPORT_EPS, TargetSet, TransitionMatrix, indicator


class ReachMode(Enum):
    """Which reachability notion a report describes"""
    LOWER = "lower"
    UPPER = "upper"


@dataclass(frozen=True)
class ReachabilityReport:
    """Chain of reachable sets, trivial-zero states and a witness matrix"""

    mode: ReachMode
    target: TargetSet
    chain: Tuple[FrozenSet[int], ...]
    trivial_zero: FrozenSet[int]
    nontrivial: FrozenSet[int]
    witness: TransitionMatrix

    @property
    def fixpoint(self) -> FrozenSet[int]:
        return self.chain[-1]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "mode": self.mode.value,
            "target": self.target.sorted(),
            "chain": [sorted(layer) for layer in self.chain],
            "trivial_zero": sorted(self.trivial_zero),
            "nontrivial": sorted(self.nontrivial),
            "witness": self.witness.array.tolist(),
        }


def _check_target(C: CredalSet, A: TargetSet) -> None:
    if A.size != C.size:
        raise DomainError("target set and credal set disagree on the state count",
                          target_size=A.size, size=C.size)


def _grow_chain(C: CredalSet, A: TargetSet, envelope) -> List[FrozenSet[int]]:
    chain = [frozenset(A.members)]
    while True:
        current = chain[-1]
        values, _ = envelope(C, indicator(current, C.size))
        fresh = {z for z in range(C.size) if z not in current and values.values[z] > SUPPORT_EPS}
        if not fresh:
            return chain
        chain.append(current | fresh)


def lower_reach_report(C: CredalSet, A: TargetSet) -> ReachabilityReport:
    """
    Lower reachability by the fixed-point chain D_{k+1} = D_k + {z : [T_low 1_{D_k}](z) > 0}

    Args:
        C: Credal set
        A: Target set

    Returns:
        Report whose trivial_zero is the set of states that cannot lower reach A, and whose
        witness T satisfies C_T = trivial_zero
    """
    _check_target(C, A)
    chain = _grow_chain(C, A, lower_envelope)
    reached = chain[-1]
    trivial = A.complement - reached

    rows = center_matrix(C).array.copy()
    if trivial:
        _, selection = lower_envelope(C, indicator(reached, C.size))
        for z in trivial:
            rows[z] = C.rows[z].vertices[selection[z]]
    logger.debug("lower reachability: {} layers, {} trivial states", len(chain), len(trivial))
    return ReachabilityReport(
        mode=ReachMode.LOWER,
        target=A,
        chain=tuple(chain),
        trivial_zero=frozenset(trivial),
        nontrivial=frozenset(A.complement - trivial),
        witness=TransitionMatrix(rows),
    )


def upper_reach_report(C: CredalSet, A: TargetSet) -> ReachabilityReport:
    """
    Upper reachability by reverse search on the possible-edge graph

    Args:
        C: Credal set
        A: Target set

    Returns:
        Report whose trivial_zero is the set of states that cannot upper reach A; the witness is
        the center matrix
    """
    _check_target(C, A)
    chain = _grow_chain(C, A, upper_envelope)
    trivial = A.complement - chain[-1]
    return ReachabilityReport(
        mode=ReachMode.UPPER,
        target=A,
        chain=tuple(chain),
        trivial_zero=frozenset(trivial),
        nontrivial=frozenset(A.complement - trivial),
        witness=center_matrix(C),
    )


def _check_subset(C: CredalSet, D: Iterable[int]) -> FrozenSet[int]:
    subset = frozenset(int(d) for d in D)
    if not subset:
        raise DomainError("reachability set must be nonempty")
    if min(subset) < 0 or max(subset) >= C.size:
        raise DomainError("reachability set out of range", subset=subset, size=C.size)
    return subset


def lr3_holds(C: CredalSet, D: Iterable[int], x: int) -> bool:
    """
    Decide whether [T_low^n 1_D](x) > 0 for some n, through support dynamics

    Args:
        C: Credal set
        D: Nonempty destination set
        x: Start state

    Returns:
        True iff x belongs to some S_n, S_0 = D, S_{n+1} = {z : every extreme point of row z hits S_n}
    """
    current = _check_subset(C, D)
    seen = set()
    while current not in seen:
        if x in current:
            return True
        seen.add(current)
        values, _ = lower_envelope(C, indicator(current, C.size))
        current = frozenset(int(z) for z in np.flatnonzero(values.values > SUPPORT_EPS))
    return False


def lr2_minimal_n(
    C: CredalSet,
    D: Iterable[int],
    x: int,
    n_cap: Optional[int] = None,
    combo_limit: Optional[int] = None,
) -> Optional[int]:
    """
    Least n such that every matrix of the credal set has a length-n path from x into D

    Args:
        C: Credal set
        D: Nonempty destination set
        x: Start state
        n_cap: Largest path length examined (default 4 N^2)
        combo_limit: Largest number of support assignments to enumerate

    Returns:
        The least n <= n_cap, or None when no such n exists up to the cap
    """
    target = _check_subset(C, D)
    if x in target:
        return 0
    n_cap = 4 * C.size ** 2 if n_cap is None else int(n_cap)
    if n_cap < 1:
        raise DomainError("n_cap must be at least 1", n_cap=n_cap)
    limit = get_settings().combo_limit if combo_limit is None else combo_limit

    # distinct minimal supports per row; larger supports only add paths
    supports = []
    for row in C.rows:
        unique = {tuple(v > SUPPORT_EPS): None for v in row.vertices}
        supports.append([np.array(s) for s in unique])
    combos = 1
    for options in supports:
        combos *= len(options)
    if combos > limit:
        raise CapacityError("too many support assignments to enumerate", combinations=combos, limit=limit)

    into = indicator(target, C.size).astype(bool)
    common = np.ones(n_cap + 1, dtype=bool)
    common[0] = False
    for assignment in product(*supports):
        adjacency = np.vstack(assignment).astype(float)
        frontier = np.zeros(C.size)
        frontier[x] = 1.0
        hits = np.zeros(n_cap + 1, dtype=bool)
        for n in range(1, n_cap + 1):
            frontier = ((frontier @ adjacency) > 0).astype(float)
            hits[n] = bool(np.any(frontier.astype(bool) & into))
        common &= hits
        if not common.any():
            return None
    candidates = np.flatnonzero(common)
    return int(candidates[0]) if candidates.size else None


def closed_set_check(C: CredalSet, D: Iterable[int]) -> bool:
    """True iff no possible edge leaves D"""
    subset = frozenset(int(d) for d in D)
    adjacency = possible_support(C)
    inside = indicator(subset, C.size).astype(bool)
    return not bool(np.any(adjacency[inside][:, ~inside]))
