"""
Imprecise hitting module for imc-hit
Lower and upper hitting probabilities by alternating extreme-point selection and restricted solves
"""

from dataclasses import dataclass, field
from typing import Any, Callable, Dict, FrozenSet, List, Optional

import numpy as np
from loguru import logger
from pydantic import BaseModel, Field

from .credal import (
    TIE_TOL,
    CredalSet,
    ExtremeSelection,
    lower_envelope,
    materialize,
    upper_envelope,
)
from .errors import DomainError, NonConvergenceError, SandwichViolation, SolverError
from .hitting import RESIDUAL_TOL, HittingVector, hitting_probabilities
from .markov import SUPPORT_EPS, TargetSet, TransitionMatrix, cannot_reach_set
from .reachability import ReachMode, lower_reach_report, upper_reach_report

SANDWICH_TOL = 1e-9


class SolveOptions(BaseModel):
    """Knobs of the iterative solvers"""

    residual_tol: float = Field(default=RESIDUAL_TOL, gt=0)
    max_iterations: Optional[int] = Field(default=None, ge=1)
    record_trace: bool = False

    def iteration_cap(self, size: int) -> int:
        return self.max_iterations if self.max_iterations is not None else 10 * size + 100


@dataclass
class SolveResult:
    """Outcome of one lower or upper solve"""

    mode: ReachMode
    probabilities: HittingVector
    iterations: int
    final_selection: ExtremeSelection
    witness: TransitionMatrix
    residual: float
    trivial_zero: FrozenSet[int]
    trace: Optional[List[HittingVector]] = field(default=None)

    def to_dict(self) -> Dict[str, Any]:
        data = {
            "mode": self.mode.value,
            "probabilities": self.probabilities.tolist(),
            "iterations": self.iterations,
            "selection": list(self.final_selection.choice),
            "witness": self.witness.array.tolist(),
            "residual": self.residual,
            "trivial_zero": sorted(self.trivial_zero),
        }
        if self.trace is not None:
            data["trace"] = [p.tolist() for p in self.trace]
        return data


def _envelope_for(mode: ReachMode) -> Callable:
    return lower_envelope if mode is ReachMode.LOWER else upper_envelope


def fixed_point_residual(C: CredalSet, A: TargetSet, p, mode: ReachMode) -> float:
    """Sup-norm gap of p = 1_A + 1_{A^c} T_low p (lower) or T_up p (upper)"""
    vector = p.values if isinstance(p, HittingVector) else np.asarray(p, dtype=float)
    values, _ = _envelope_for(mode)(C, vector)
    ones = A.indicator()
    return float(np.max(np.abs(vector - (ones + (1.0 - ones) * values.values))))


def _solve(
    C: CredalSet,
    A: TargetSet,
    mode: ReachMode,
    opts: Optional[SolveOptions],
    start: Optional[ExtremeSelection],
) -> SolveResult:
    if A.size != C.size:
        raise DomainError("target set and credal set disagree on the state count",
                          target_size=A.size, size=C.size)
    opts = opts or SolveOptions()
    cap = opts.iteration_cap(C.size)
    envelope = _envelope_for(mode)

    report = lower_reach_report(C, A) if mode is ReachMode.LOWER else upper_reach_report(C, A)
    trivial = report.trivial_zero
    T = report.witness
    # None marks a row still on the witness row rather than an extreme point
    choice: List[Optional[int]] = [None] * C.size
    if start is not None:
        choice = list(C.validate(start).choice)
        T = materialize(C, start)
        if cannot_reach_set(T, A) != trivial:
            raise DomainError("start selection does not keep the trivial-zero set",
                              trivial_zero=trivial, unreachable=cannot_reach_set(T, A))

    trace: Optional[List[HittingVector]] = [] if opts.record_trace else None
    iterations = 0
    while True:
        p = hitting_probabilities(T, A, zero_set=trivial, residual_tol=opts.residual_tol)
        iterations += 1
        if trace is not None:
            if cannot_reach_set(T, A) != trivial:
                raise SolverError("iterate lost the trivial-zero set", iteration=iterations,
                                  unreachable=cannot_reach_set(T, A), trivial_zero=trivial)
            trace.append(p)

        values, fresh = envelope(C, p.values)
        current = T.array @ p.values
        if mode is ReachMode.LOWER:
            attained = current <= values.values + TIE_TOL
        else:
            attained = current >= values.values - TIE_TOL
        updated = [choice[x] if attained[x] else fresh[x] for x in range(C.size)]
        changed = [x for x in range(C.size) if updated[x] != choice[x]]
        logger.debug("{} iteration {}: {} rows changed", mode.value, iterations, len(changed))
        if not changed:
            break
        if iterations >= cap:
            residual = fixed_point_residual(C, A, p, mode)
            if residual > opts.residual_tol:
                raise NonConvergenceError("iteration cap reached before the selection stabilised",
                                          iterations=iterations, residual=residual, trace=trace)
            logger.warning("{} solve hit the iteration cap {} with residual {:.3e}",
                           mode.value, cap, residual)
            break
        choice = updated
        T = TransitionMatrix(np.vstack([
            T.array[x] if index is None else C.rows[x].vertices[index] for x, index in enumerate(choice)
        ]))

    # rows never moved off the witness report an extreme point attaining the same value
    selection = ExtremeSelection(tuple(fresh[x] if index is None else index for x, index in enumerate(choice)))
    residual = fixed_point_residual(C, A, p, mode)
    if residual > opts.residual_tol:
        raise SolverError("solution fails the imprecise fixed-point check",
                          mode=mode.value, residual=residual, tolerance=opts.residual_tol)
    logger.info("{} hitting converged in {} iterations (residual {:.2e})", mode.value, iterations, residual)
    return SolveResult(
        mode=mode,
        probabilities=p,
        iterations=iterations,
        final_selection=selection,
        witness=T,
        residual=residual,
        trivial_zero=trivial,
        trace=trace,
    )


def lower_hitting(
    C: CredalSet,
    A: TargetSet,
    opts: Optional[SolveOptions] = None,
    start: Optional[ExtremeSelection] = None,
) -> SolveResult:
    """
    Lower hitting probabilities

    Starts from the lower reachability witness (or from start, which must leave exactly the
    states that cannot lower reach A unable to reach it), then alternates a restricted solve with
    a lower-envelope selection until the selection repeats.

    Args:
        C: Credal set
        A: Target set
        opts: Solver options
        start: Optional starting extreme selection

    Returns:
        SolveResult in lower mode
    """
    return _solve(C, A, ReachMode.LOWER, opts, start)


def upper_hitting(
    C: CredalSet,
    A: TargetSet,
    opts: Optional[SolveOptions] = None,
    start: Optional[ExtremeSelection] = None,
) -> SolveResult:
    """
    Upper hitting probabilities

    Same loop as lower_hitting, seeded with the center matrix and using the upper envelope; a
    row that already attains the maximum (a center row included) is kept as it is, so it is never
    swapped for a tied but disconnecting extreme point.

    Args:
        C: Credal set
        A: Target set
        opts: Solver options
        start: Optional starting extreme selection

    Returns:
        SolveResult in upper mode
    """
    return _solve(C, A, ReachMode.UPPER, opts, start)


def random_member(C: CredalSet, rng: np.random.Generator) -> TransitionMatrix:
    """Matrix with each row a Dirichlet-weighted mixture of that row's extreme points"""
    rows = []
    for row in C.rows:
        weights = rng.dirichlet(np.ones(row.count)) if row.count > 1 else np.ones(1)
        rows.append(weights @ row.vertices)
    return TransitionMatrix(np.vstack(rows))


def sandwich_check(C: CredalSet, A: TargetSet, samples: int, seed: Optional[int] = None) -> bool:
    """
    Check lower <= p^T <= upper on random members of the credal set

    Args:
        C: Credal set
        A: Target set
        samples: Number of sampled matrices
        seed: Seed for the sampler

    Returns:
        True when every sample lies within the bounds (within 1e-9)

    Raises:
        SandwichViolation: with the offending state and matrix
    """
    if samples < 1:
        raise DomainError("samples must be at least 1", samples=samples)
    lower = lower_hitting(C, A).probabilities.values
    upper = upper_hitting(C, A).probabilities.values
    rng = np.random.default_rng(seed)
    for sample in range(samples):
        T = random_member(C, rng)
        p = hitting_probabilities(T, A).values
        bad = np.flatnonzero((p < lower - SANDWICH_TOL) | (p > upper + SANDWICH_TOL))
        if bad.size:
            state = int(bad[0])
            raise SandwichViolation("sampled matrix escapes the hitting bounds", sample=sample,
                                    state=state, value=float(p[state]), lower=float(lower[state]),
                                    upper=float(upper[state]), matrix=T.array)
    logger.debug("sandwich check passed on {} samples", samples)
    return True


def zero_set(result: SolveResult, tol: float = SUPPORT_EPS) -> FrozenSet[int]:
    """States whose bound is zero"""
    return result.probabilities.zero_set(tol)
