"""
Oracle module for imc-hit
Independent checks: Monte-Carlo hitting estimates and brute-force vertex-matrix bounds
"""

from concurrent.futures import ThreadPoolExecutor
from typing import NamedTuple, Optional, Tuple

import numpy as np
from loguru import logger
from pydantic import BaseModel, Field

from .config import get_settings
from .credal import CredalSet, materialize, vertex_matrix_selections
from .errors import CapacityError, DomainError
from .hitting import HittingVector, hitting_probabilities
from .markov import TargetSet, TransitionMatrix, cannot_reach_set

BLOCK_TRIALS = 4096


class McConfig(BaseModel):
    """Monte-Carlo settings; horizon defaults to 50 N steps"""

    trials: int = Field(default=10_000, ge=1)
    horizon: Optional[int] = Field(default=None, ge=1)
    seed: int = Field(default=0, ge=0)

    def steps(self, size: int) -> int:
        return self.horizon if self.horizon is not None else 50 * size


class McEstimate(NamedTuple):
    estimate: float
    stderr: float
    survival: float


def _run_block(cumulative: np.ndarray, hit_mask: np.ndarray, stop_mask: np.ndarray, start: int,
               trials: int, horizon: int, stream: np.random.SeedSequence) -> Tuple[int, int]:
    rng = np.random.default_rng(stream)
    last = cumulative.shape[1] - 1
    states = np.full(trials, start, dtype=np.intp)
    active = np.ones(trials, dtype=bool)
    hit = np.zeros(trials, dtype=bool)
    for _ in range(horizon):
        moving = np.flatnonzero(active)
        if moving.size == 0:
            break
        u = rng.random(moving.size)
        nxt = np.minimum((cumulative[states[moving]] <= u[:, None]).sum(axis=1), last)
        states[moving] = nxt
        hit[moving] = hit_mask[nxt]
        active[moving] = ~stop_mask[nxt]
    return int(hit.sum()), int(active.sum())


def simulate_hitting(T: TransitionMatrix, A: TargetSet, x: int, cfg: Optional[McConfig] = None) -> McEstimate:
    """
    Estimate p^T(x) by simulating trajectories up to the horizon

    Trajectories stop early once they enter A or a state that cannot reach A. Trials are grouped
    in blocks of 4096, each with its own stream spawned from the seed, and blocks are reduced in
    order, so the result does not depend on the thread count.

    Args:
        T: Transition matrix
        A: Target set
        x: Start state
        cfg: Simulation settings

    Returns:
        McEstimate(estimate, stderr, survival)
    """
    cfg = cfg or McConfig()
    if not 0 <= x < T.size:
        raise DomainError("state index out of range", state=x, size=T.size)
    if x in A:
        return McEstimate(1.0, 0.0, 0.0)
    unreachable = cannot_reach_set(T, A)
    if x in unreachable:
        return McEstimate(0.0, 0.0, 0.0)

    cumulative = np.cumsum(T.array, axis=1)
    cumulative /= cumulative[:, -1:]
    hit_mask = A.indicator().astype(bool)
    stop_mask = hit_mask.copy()
    stop_mask[list(unreachable)] = True
    horizon = cfg.steps(T.size)

    sizes = [min(BLOCK_TRIALS, cfg.trials - offset) for offset in range(0, cfg.trials, BLOCK_TRIALS)]
    streams = np.random.SeedSequence(cfg.seed).spawn(len(sizes))
    with ThreadPoolExecutor(max_workers=get_settings().threads) as pool:
        blocks = list(pool.map(
            lambda job: _run_block(cumulative, hit_mask, stop_mask, x, job[0], horizon, job[1]),
            zip(sizes, streams),
        ))
    hits = sum(b[0] for b in blocks)
    alive = sum(b[1] for b in blocks)

    estimate = hits / cfg.trials
    stderr = float(np.sqrt(estimate * (1.0 - estimate) / cfg.trials))
    survival = alive / cfg.trials
    logger.debug("simulated p({}) = {:.4f} +- {:.4f}, survival {:.4f}", x, estimate, stderr, survival)
    return McEstimate(estimate, stderr, survival)


def brute_force_bounds(
    C: CredalSet, A: TargetSet, combo_limit: Optional[int] = None
) -> Tuple[HittingVector, HittingVector]:
    """
    Componentwise min and max of p^T over every vertex matrix

    Args:
        C: Credal set
        A: Target set
        combo_limit: Largest number of vertex matrices to enumerate

    Returns:
        Tuple of (lower, upper) HittingVector

    Raises:
        CapacityError: the product of per-row vertex counts exceeds combo_limit
    """
    limit = get_settings().combo_limit if combo_limit is None else combo_limit
    total = C.combination_count()
    if total > limit:
        raise CapacityError("too many vertex matrices to enumerate", combinations=total, limit=limit)

    lower = np.full(C.size, np.inf)
    upper = np.full(C.size, -np.inf)
    for selection in vertex_matrix_selections(C):
        p = hitting_probabilities(materialize(C, selection), A).values
        np.minimum(lower, p, out=lower)
        np.maximum(upper, p, out=upper)
    logger.debug("brute force over {} vertex matrices", total)
    return HittingVector(lower, A), HittingVector(upper, A)
