"""
Experiments module for imc-hit
Batch iteration-count studies on random instances, with CSV emission through pandas
"""

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
import yaml
from loguru import logger
from pydantic import BaseModel, Field, ValidationError

from .config import get_settings
from .errors import DomainError, ExperimentError, ImcHitError
from .imprecise import lower_hitting, upper_hitting
from .instances import CredalModel, Family, gen_random_instance

RAW_COLUMNS = [
    "family", "N", "lambda", "model", "epsilon", "seed", "run",
    "iters_lower", "iters_upper", "residual_lower", "residual_upper",
]
SUMMARY_COLUMNS = ["lambda", "mean", "std", "ci95_lo", "ci95_hi"]


@dataclass(frozen=True)
class RunRecord:
    """One solved random instance"""

    family: str
    N: int
    lam: float
    model: str
    epsilon: Optional[float]
    seed: int
    run: int
    iters_lower: int
    iters_upper: int
    residual_lower: float
    residual_upper: float

    def as_row(self) -> Dict[str, Any]:
        row = asdict(self)
        row["lambda"] = row.pop("lam")
        return {column: row[column] for column in RAW_COLUMNS}


@dataclass
class BatchStats:
    """Iteration-count aggregates of one lambda cell"""

    lam: float
    runs: int
    mean_iters_lower: float
    mean_iters_upper: float
    std_lower: float
    std_upper: float
    max_iters: int
    per_run: List[Tuple[int, int, int]] = field(default_factory=list)

    @classmethod
    def from_runs(cls, lam: float, per_run: Sequence[Tuple[int, int, int]]) -> "BatchStats":
        """
        Aggregate (seed, iters_lower, iters_upper) triples

        Args:
            lam: Cell average degree
            per_run: One triple per run, in run order

        Returns:
            BatchStats with population standard deviations
        """
        if not per_run:
            raise DomainError("a batch cell needs at least one run")
        lower = np.array([r[1] for r in per_run], dtype=float)
        upper = np.array([r[2] for r in per_run], dtype=float)
        return cls(
            lam=float(lam),
            runs=len(per_run),
            mean_iters_lower=float(lower.mean()),
            mean_iters_upper=float(upper.mean()),
            std_lower=float(lower.std()),
            std_upper=float(upper.std()),
            max_iters=int(max(lower.max(), upper.max())),
            per_run=[tuple(int(v) for v in r) for r in per_run],
        )

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["lambda"] = data.pop("lam")
        data["per_run"] = [list(r) for r in self.per_run]
        return data


class ExperimentConfig(BaseModel):
    """Batch parameters, loadable from YAML"""

    N: int = Field(default=10, ge=3)
    lambdas: List[float] = Field(default_factory=lambda: [float(k) for k in range(1, 11)])
    model: CredalModel = CredalModel.EPS_CONTAM
    runs: int = Field(default=1000, ge=1)
    epsilon: float = Field(default=0.1, gt=0, lt=1)
    seed: int = Field(default=0, ge=0)
    full_support: bool = False
    out: Optional[str] = None

    @classmethod
    def from_yaml(cls, path: Union[str, Path]) -> "ExperimentConfig":
        path = Path(path)
        if not path.exists():
            raise DomainError("experiment config not found", path=str(path))
        data = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
        if "lambda" in data and "lambdas" not in data:
            data["lambdas"] = data.pop("lambda")
        if isinstance(data.get("lambdas"), str):
            data["lambdas"] = parse_grid(data["lambdas"])
        try:
            return cls.model_validate(data)
        except ValidationError as exc:
            raise DomainError("invalid experiment config", errors=json.loads(exc.json())) from exc


def parse_grid(text: str) -> List[float]:
    """
    Parse a grid such as "1..10", "1..5:0.5" or "1,2,4"

    Args:
        text: Grid description

    Returns:
        Grid values in the given order
    """
    values: List[float] = []
    for part in str(text).split(","):
        part = part.strip()
        if not part:
            continue
        bounds, _, step_text = part.partition(":")
        try:
            ends = [float(v) for v in bounds.split("..")]
            step = float(step_text) if step_text else 1.0
        except ValueError as exc:
            raise DomainError("malformed grid", grid=text) from exc
        if len(ends) == 1 and not step_text:
            values.append(ends[0])
            continue
        if len(ends) != 2 or step <= 0:
            raise DomainError("malformed grid", grid=text)
        values.extend(float(v) for v in np.arange(ends[0], ends[1] + step / 2, step))
    if not values:
        raise DomainError("grid must not be empty", grid=text)
    return values


def run_seed(seed: int, cell: int, run: int) -> int:
    """Seed of one run, split from the batch seed by (cell, run)"""
    stream = np.random.SeedSequence(int(seed), spawn_key=(int(cell), int(run)))
    return int(stream.generate_state(1, dtype=np.uint64)[0])


def _solve_run(N: int, lam: float, model: CredalModel, epsilon: float, seed: int, cell: int, run: int,
               full_support: bool) -> RunRecord:
    instance_seed = run_seed(seed, cell, run)
    instance = gen_random_instance(N, lam, model, epsilon, instance_seed, full_support)
    C, A = instance.credal_set(), instance.target_set()
    try:
        lower = lower_hitting(C, A)
        upper = upper_hitting(C, A)
    except ImcHitError as exc:
        raise ExperimentError("batch run failed", N=N, lam=lam, run=run, seed=instance_seed,
                              cause=exc.to_dict()) from exc
    return RunRecord(
        family=Family.RANDOM.value,
        N=N,
        lam=float(lam),
        model=model.value,
        epsilon=float(epsilon) if model is CredalModel.EPS_CONTAM else None,
        seed=instance_seed,
        run=run,
        iters_lower=lower.iterations,
        iters_upper=upper.iterations,
        residual_lower=lower.residual,
        residual_upper=upper.residual,
    )


def iteration_histogram(records: Union[pd.DataFrame, Sequence[RunRecord]]) -> pd.DataFrame:
    """Counts of runs per (bound, lambda, iterations)"""
    frame = records if isinstance(records, pd.DataFrame) else pd.DataFrame([r.as_row() for r in records])
    parts = []
    for bound in ("lower", "upper"):
        counts = (
            frame.groupby(["lambda", f"iters_{bound}"]).size()
            .reset_index(name="count")
            .rename(columns={f"iters_{bound}": "iterations"})
        )
        counts.insert(0, "bound", bound)
        parts.append(counts)
    return pd.concat(parts, ignore_index=True)


def summary_table(stats: Sequence[BatchStats], bound: str) -> pd.DataFrame:
    """Per-lambda mean, std and the mean +- 1.96 std band of one bound"""
    rows = []
    for cell in stats:
        mean = cell.mean_iters_lower if bound == "lower" else cell.mean_iters_upper
        std = cell.std_lower if bound == "lower" else cell.std_upper
        rows.append({"lambda": cell.lam, "mean": mean, "std": std,
                     "ci95_lo": mean - 1.96 * std, "ci95_hi": mean + 1.96 * std})
    return pd.DataFrame(rows, columns=SUMMARY_COLUMNS)


def write_batch_outputs(out: Union[str, Path], records: Sequence[RunRecord],
                        stats: Sequence[BatchStats]) -> Dict[str, str]:
    """
    Write the raw CSV plus per-bound summaries and the histogram next to it

    Args:
        out: Raw CSV path; siblings get _lower_summary, _upper_summary and _histogram suffixes
        records: Runs in (cell, run) order
        stats: Cell aggregates

    Returns:
        Mapping of output kind to path
    """
    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    raw = pd.DataFrame([r.as_row() for r in records], columns=RAW_COLUMNS)
    paths = {
        "raw": out,
        "lower_summary": out.with_name(f"{out.stem}_lower_summary.csv"),
        "upper_summary": out.with_name(f"{out.stem}_upper_summary.csv"),
        "histogram": out.with_name(f"{out.stem}_histogram.csv"),
    }
    raw.to_csv(paths["raw"], index=False)
    summary_table(stats, "lower").to_csv(paths["lower_summary"], index=False)
    summary_table(stats, "upper").to_csv(paths["upper_summary"], index=False)
    iteration_histogram(raw).to_csv(paths["histogram"], index=False)
    logger.info("batch results written to {}", out)
    return {kind: str(path) for kind, path in paths.items()}


def run_batch(
    N: int,
    lambda_grid: Sequence[float],
    model: Union[CredalModel, str] = CredalModel.EPS_CONTAM,
    runs_per_cell: int = 1,
    epsilon: float = 0.1,
    seed: int = 0,
    out: Optional[Union[str, Path]] = None,
    full_support: bool = False,
    threads: Optional[int] = None,
) -> List[BatchStats]:
    """
    Solve runs_per_cell random instances per lambda and aggregate iteration counts

    Runs execute on a thread pool; each run draws its own seed from (seed, cell, run), and
    records are collected in run order, so output does not depend on scheduling.

    Args:
        N: States per instance
        lambda_grid: Average degrees; values outside [1, N] are skipped with a warning
        model: Credal model
        runs_per_cell: Runs per lambda
        epsilon: Contamination level
        seed: Batch seed
        out: Raw CSV path (no files written when absent)
        full_support: Contaminate over every state
        threads: Worker count (default from IMC_HIT_THREADS)

    Returns:
        One BatchStats per evaluated lambda

    Raises:
        ExperimentError: a run failed; carries cell, run and seed
    """
    model = CredalModel(model)
    if runs_per_cell < 1:
        raise DomainError("runs_per_cell must be at least 1", runs_per_cell=runs_per_cell)
    if not lambda_grid:
        raise DomainError("lambda grid must not be empty")
    workers = threads or get_settings().threads

    stats: List[BatchStats] = []
    records: List[RunRecord] = []
    with ThreadPoolExecutor(max_workers=workers) as pool:
        for cell, lam in enumerate(lambda_grid):
            if not 1.0 <= lam <= N:
                logger.warning("skipping lambda {} outside [1, {}]", lam, N)
                continue
            cell_records = list(pool.map(
                lambda run: _solve_run(N, lam, model, epsilon, seed, cell, run, full_support),
                range(runs_per_cell),
            ))
            records.extend(cell_records)
            cell_stats = BatchStats.from_runs(lam, [(r.seed, r.iters_lower, r.iters_upper) for r in cell_records])
            stats.append(cell_stats)
            logger.info("N={} lambda={}: mean iterations {:.2f} / {:.2f}, max {}", N, lam,
                        cell_stats.mean_iters_lower, cell_stats.mean_iters_upper, cell_stats.max_iters)
    if not stats:
        raise DomainError("no lambda in the grid lies in [1, N]", grid=list(lambda_grid), N=N)
    if out is not None:
        write_batch_outputs(out, records, stats)
    return stats


def lambda_peak_scan(
    N_grid: Sequence[int],
    lambda_grid: Sequence[float],
    model: Union[CredalModel, str] = CredalModel.EPS_CONTAM,
    runs: int = 100,
    seed: int = 0,
    epsilon: float = 0.1,
    bound: str = "upper",
    out: Optional[Union[str, Path]] = None,
) -> pd.DataFrame:
    """
    Per N, the lambda with the largest mean iteration count

    Args:
        N_grid: State counts
        lambda_grid: Average degrees (clipped per N to [1, N])
        model: Credal model
        runs: Runs per cell
        seed: Scan seed; each N gets a seed split from it
        epsilon: Contamination level
        bound: "lower", "upper" or "mean" (average of both)
        out: Optional CSV path

    Returns:
        DataFrame with columns N, lambda_star, peak_mean
    """
    if not N_grid or not lambda_grid:
        raise DomainError("scan grids must not be empty")
    if bound not in {"lower", "upper", "mean"}:
        raise DomainError("bound must be lower, upper or mean", bound=bound)
    rows = []
    for index, N in enumerate(N_grid):
        stats = run_batch(N, [lam for lam in lambda_grid if 1.0 <= lam <= N], model, runs, epsilon,
                          run_seed(seed, index, 0))
        scores = [
            s.mean_iters_lower if bound == "lower"
            else s.mean_iters_upper if bound == "upper"
            else 0.5 * (s.mean_iters_lower + s.mean_iters_upper)
            for s in stats
        ]
        best = int(np.argmax(scores))
        rows.append({"N": int(N), "lambda_star": stats[best].lam, "peak_mean": float(scores[best])})
        logger.info("N={}: peak at lambda={} ({:.2f} iterations)", N, stats[best].lam, scores[best])
    table = pd.DataFrame(rows, columns=["N", "lambda_star", "peak_mean"])
    if out is not None:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        table.to_csv(out, index=False)
    return table
