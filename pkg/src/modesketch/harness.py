"""Experiment sweeps over compression ratios, and their CSV serialization.

Each record is one (experiment, c_s, trial) observation.  Per-trial seeds
are derived from the master seed and the sweep position, so a sweep rerun
with the same flags reproduces identical values; wall times are recorded
in memory but written to CSV only on request, keeping output files
byte-identical across reruns by default.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from .cpfit import compressed_ls_coefficients, ls_coefficients
from .embeddings import derive_seed
from .sketch import make_plan, sketch_full, sketch_modewise, targets_from_ratio
from .tensor import DenseTensor, norm

__all__ = [
    "ExperimentRecord",
    "norm_experiment",
    "ls_experiment",
    "write_records_csv",
    "summarize",
]

# Stream tag separating harness trial seeds from other derived streams.
_TRIAL_STREAM = 4

CSV_HEADER = "experiment,c_s,trial,seed,metric,value,wall_ms"


@dataclass(frozen=True)
class ExperimentRecord:
    """One measured value of one metric at one (c_s, trial) grid point."""

    experiment: str
    c_s: float
    trial: int
    seed: int
    metric: str
    value: float
    wall_ms: float


def _check_ratios(cs_values: Sequence[float]) -> list[float]:
    ratios = [float(c) for c in cs_values]
    if not ratios:
        raise ValueError("need at least one compression ratio")
    for c in ratios:
        if not 0.0 < c <= 1.0:
            raise ValueError(f"compression ratio must lie in (0, 1], got {c}")
    return ratios


def norm_experiment(
    X: DenseTensor,
    cs_values: Sequence[float],
    trials: int,
    variant: str = "gaussian",
    seed: int = 0,
    second_stage: Optional[tuple[Optional[int], str]] = None,
) -> list[ExperimentRecord]:
    """Relative sketched norm ``c_n_X`` over a (c_s, trial) grid.

    Every trial draws a fresh plan from a seed derived from ``(seed,
    c_s index, trial)``.
    """
    ratios = _check_ratios(cs_values)
    if trials < 1:
        raise ValueError("need at least one trial")
    norm_x = norm(X)
    records = []
    for ci, cs in enumerate(ratios):
        targets = targets_from_ratio(X.shape, cs)
        for t in range(trials):
            trial_seed = derive_seed(seed, _TRIAL_STREAM, ci, t)
            t0 = time.perf_counter()
            plan = make_plan(X.shape, targets, variant, second_stage, trial_seed)
            if plan.second_stage is not None:
                value = float(np.linalg.norm(sketch_full(plan, X))) / norm_x
            else:
                value = norm(sketch_modewise(plan, X)) / norm_x
            wall = (time.perf_counter() - t0) * 1e3
            records.append(ExperimentRecord("norm/c_n_X", cs, t, trial_seed,
                                            "c_n_X", value, wall))
    return records


def ls_experiment(
    X: DenseTensor,
    factors: Sequence[np.ndarray],
    cs_values: Sequence[float],
    trials: int,
    variant: str = "gaussian",
    seed: int = 0,
) -> list[ExperimentRecord]:
    """Compressed coefficient recovery over a (c_s, trial) grid.

    The reference coefficients are the exact (unsketched) least-squares
    solution over the given basis; each trial reports the coefficient-norm
    ratio ``c_n_alpha`` and the relative coefficient error.
    """
    ratios = _check_ratios(cs_values)
    if trials < 1:
        raise ValueError("need at least one trial")
    reference = ls_coefficients(X, factors).coefficients
    ref_norm = float(np.linalg.norm(reference))
    if ref_norm == 0.0:
        raise ValueError("exact least-squares solution is zero; ratios undefined")
    records = []
    for ci, cs in enumerate(ratios):
        targets = targets_from_ratio(X.shape, cs)
        for t in range(trials):
            trial_seed = derive_seed(seed, _TRIAL_STREAM, ci, t)
            t0 = time.perf_counter()
            plan = make_plan(X.shape, targets, variant, seed=trial_seed)
            solution = compressed_ls_coefficients(X, factors, plan, reference=reference)
            wall = (time.perf_counter() - t0) * 1e3
            err = float(np.linalg.norm(solution.coefficients - reference)) / ref_norm
            records.append(ExperimentRecord("ls/c_n_alpha", cs, t, trial_seed,
                                            "c_n_alpha", solution.c_n_alpha, wall))
            records.append(ExperimentRecord("ls/alpha_rel_err", cs, t, trial_seed,
                                            "alpha_rel_err", err, wall))
    return records


def write_records_csv(
    path: Union[str, Path],
    invocation: str,
    records: Sequence[ExperimentRecord],
    timing: bool = False,
) -> None:
    """Write records with a header row and a replay comment line.

    Wall times are included only when ``timing`` is set; otherwise the
    column is left empty so identical flags produce identical bytes.
    """
    lines = [f"# {invocation}", CSV_HEADER]
    for r in records:
        wall = repr(float(r.wall_ms)) if timing else ""
        lines.append(f"{r.experiment},{r.c_s!r},{r.trial},{r.seed},"
                     f"{r.metric},{float(r.value)!r},{wall}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def summarize(records: Sequence[ExperimentRecord]) -> list[str]:
    """Mean and standard deviation per (experiment, c_s), pooled over trials."""
    grid: dict[tuple[str, float], list[float]] = {}
    for r in records:
        grid.setdefault((r.experiment, r.c_s), []).append(r.value)
    lines = []
    for (experiment, cs), values in sorted(grid.items()):
        arr = np.asarray(values)
        lines.append(f"{experiment} c_s={cs!r} trials={arr.size} "
                     f"pooled_mean={arr.mean():.6g} pooled_std={arr.std():.6g}")
    return lines
