"""Batch experiments over sets of initial states.

A sweep runs one closed-loop configuration from every point of an
:class:`InitialSet` and collects per-point certificate statistics; the
helpers here also cover the derived experiments (horizon comparison
tables, value-drop maps) and the CSV emitters used by the command-line
front end.  All floating-point output uses ``%.17g`` so that reruns are
byte-comparable.
"""

from __future__ import annotations

import math
import multiprocessing
from dataclasses import dataclass

import numpy as np

from .engine import AlgorithmConfig, run_closed_loop
from .errors import ConfigError, MpcCertError
from .model import SystemModel
from .riccati import FiniteHorizonSolver, LqLadderSolver

_SWEEP_COLUMNS = ("k", "x1", "x2", "alpha_min_1step", "alpha_min_mstep", "alpha_cor3", "warning", "status")
_HORIZON_COLUMNS = ("N", "alpha_prop1_min", "alpha_cor3_min")


@dataclass(frozen=True)
class InitialSet:
    """A named, ordered collection of initial states."""

    name: str
    points: np.ndarray

    def __len__(self) -> int:
        return len(self.points)


def unit_circle(k_max: int) -> InitialSet:
    """The ``k_max`` points ``(cos(2 pi k / k_max), sin(2 pi k / k_max))``.

    ``k`` runs from 1 to ``k_max``, so the last point is ``(1, 0)`` and
    indices reported by sweeps refer to this 1-based ``k``.
    """
    if k_max < 1:
        raise ConfigError(f"k_max must be positive, got {k_max}")
    ks = np.arange(1, k_max + 1)
    angles = 2.0 * math.pi * ks / k_max
    return InitialSet(
        name=f"unit-circle:{k_max}",
        points=np.column_stack([np.cos(angles), np.sin(angles)]),
    )


def parse_initial_set(text: str) -> InitialSet:
    """Parse a command-line set description such as ``unit-circle:128``."""
    kind, sep, arg = text.partition(":")
    if kind == "unit-circle" and sep:
        try:
            k_max = int(arg)
        except ValueError:
            raise ConfigError(f"invalid point count {arg!r} in {text!r}") from None
        return unit_circle(k_max)
    raise ConfigError(f"unknown initial set {text!r}, expected 'unit-circle:<count>'")


@dataclass(frozen=True)
class PointRecord:
    """Per-initial-state outcome of a sweep.

    ``index`` is the 1-based position in the initial set.  The alpha
    fields are minima over the run: one-step prefix degree, committed
    window degree, and the whole-run realized degree.  ``startup_alpha``
    is the one-step degree of the very first plan, which is what the
    threshold test at startup sees.  A failed run keeps its exception
    text in ``error`` and NaN statistics.
    """

    index: int
    x0: tuple[float, ...]
    status: str
    startup_alpha: float
    min_onestep_alpha: float
    min_mstep_alpha: float
    alpha_cor3: float
    warning: bool
    error: str | None = None


@dataclass(frozen=True)
class SweepReport:
    """All point records of one sweep plus the configuration that ran it."""

    set_name: str
    config: AlgorithmConfig
    records: tuple[PointRecord, ...]

    def failure_indices(self) -> tuple[int, ...]:
        """Points at which the run's threshold test failed at startup.

        For the variants without a slack account this is the set where
        the first plan's one-step degree misses ``alpha_bar``; for the
        watchdog variants it is the set where a warning was issued.
        """
        if self.config.variant in ("alg1", "alg2"):
            return tuple(
                r.index
                for r in self.records
                if r.error is None and r.startup_alpha < self.config.alpha_bar
            )
        return tuple(r.index for r in self.records if r.error is None and r.warning)

    def warned_indices(self) -> tuple[int, ...]:
        return tuple(r.index for r in self.records if r.warning)

    def error_indices(self) -> tuple[int, ...]:
        return tuple(r.index for r in self.records if r.error is not None)

    def statuses(self) -> dict[str, int]:
        counts: dict[str, int] = {}
        for r in self.records:
            counts[r.status] = counts.get(r.status, 0) + 1
        return counts

    def alpha_cor3_min(self) -> float:
        values = [r.alpha_cor3 for r in self.records if r.error is None]
        return float(np.nanmin(values)) if values else float("nan")

    def aggregates(self) -> dict:
        clean = [r for r in self.records if r.error is None]
        cor3 = np.array([r.alpha_cor3 for r in clean]) if clean else np.array([np.nan])
        return {
            "points": len(self.records),
            "errors": len(self.records) - len(clean),
            "warnings": sum(r.warning for r in self.records),
            "failures": len(self.failure_indices()),
            "alpha_cor3_min": float(np.nanmin(cor3)),
            "alpha_cor3_max": float(np.nanmax(cor3)),
            "alpha_cor3_mean": float(np.nanmean(cor3)),
            "alpha_1step_min": float(np.nanmin([r.min_onestep_alpha for r in clean]))
            if clean
            else float("nan"),
            "alpha_mstep_min": float(np.nanmin([r.min_mstep_alpha for r in clean]))
            if clean
            else float("nan"),
        }


def _evaluate_point(
    model: SystemModel,
    solver: FiniteHorizonSolver,
    config: AlgorithmConfig,
    index: int,
    x0: np.ndarray,
) -> PointRecord:
    try:
        trace = run_closed_loop(model, solver, x0, config)
    except (MpcCertError, np.linalg.LinAlgError) as exc:
        nan = float("nan")
        return PointRecord(
            index=index,
            x0=tuple(float(v) for v in x0),
            status="error",
            startup_alpha=nan,
            min_onestep_alpha=nan,
            min_mstep_alpha=nan,
            alpha_cor3=nan,
            warning=False,
            error=str(exc),
        )
    return PointRecord(
        index=index,
        x0=tuple(float(v) for v in x0),
        status=trace.status,
        startup_alpha=trace.startup_onestep_alpha,
        min_onestep_alpha=trace.min_onestep_alpha,
        min_mstep_alpha=trace.min_window_alpha,
        alpha_cor3=trace.alpha_cor3,
        warning=trace.warning_count > 0,
    )


_WORKER_STATE: dict = {}


def _init_worker(lq, solver_cls, config) -> None:
    solver = solver_cls(lq, config.horizon)
    _WORKER_STATE["model"] = solver.model
    _WORKER_STATE["solver"] = solver
    _WORKER_STATE["config"] = config


def _run_worker_point(item) -> PointRecord:
    index, x0 = item
    return _evaluate_point(
        _WORKER_STATE["model"],
        _WORKER_STATE["solver"],
        _WORKER_STATE["config"],
        index,
        np.asarray(x0, dtype=float),
    )


def sweep(
    model: SystemModel,
    solver: FiniteHorizonSolver,
    initial_set: InitialSet,
    config: AlgorithmConfig,
    workers: int = 1,
) -> SweepReport:
    """Run the configured closed loop from every point of the set.

    Per-point failures are recorded, not raised.  With ``workers > 1``
    the points are distributed over a process pool; results are sorted
    by index, so the report does not depend on the worker count.
    """
    if workers < 1:
        raise ConfigError(f"workers must be positive, got {workers}")
    items = list(enumerate(np.asarray(initial_set.points, dtype=float), start=1))
    if workers == 1:
        records = [_evaluate_point(model, solver, config, k, x0) for k, x0 in items]
    else:
        ctx = multiprocessing.get_context("fork")
        with ctx.Pool(
            processes=workers,
            initializer=_init_worker,
            initargs=(solver.lq, type(solver), config),
        ) as pool:
            records = pool.map(_run_worker_point, items)
    records.sort(key=lambda r: r.index)
    return SweepReport(set_name=initial_set.name, config=config, records=tuple(records))


def failure_set(report_a: SweepReport, report_b: SweepReport) -> tuple[tuple[int, ...], tuple[int, ...], bool]:
    """Compare the failure sets of two sweeps over the same initial set.

    Returns both index tuples and whether they coincide exactly.
    """
    fa = report_a.failure_indices()
    fb = report_b.failure_indices()
    return fa, fb, fa == fb


def horizon_comparison(
    lq,
    initial_set: InitialSet,
    horizons,
    alpha_bar: float = 0.01,
    workers: int = 1,
) -> list[tuple[int, float, float]]:
    """Certified degrees as the horizon grows.

    For each horizon ``N`` the first column is the worst committed
    window degree over the set under the adaptive variant with a zero
    threshold (the a-priori style bound); the second is the worst
    whole-run realized degree under single-step application with a
    watchdog at ``alpha_bar`` (the a-posteriori style bound).
    """
    horizons = tuple(horizons)
    if not horizons:
        raise ConfigError("need at least one horizon to compare")
    rows = []
    for n in horizons:
        solver = LqLadderSolver(lq, n)
        apriori = sweep(
            solver.model,
            solver,
            initial_set,
            AlgorithmConfig(variant="alg1", horizon=n, alpha_bar=0.0),
            workers=workers,
        )
        posteriori = sweep(
            solver.model,
            solver,
            initial_set,
            AlgorithmConfig(variant="alg3", horizon=n, alpha_bar=alpha_bar, forced_m=1),
            workers=workers,
        )
        col_a = float(np.nanmin([r.min_mstep_alpha for r in apriori.records]))
        col_b = posteriori.alpha_cor3_min()
        rows.append((int(n), col_a, col_b))
    return rows


def value_drop_grid(
    solver: FiniteHorizonSolver,
    horizon: int,
    m: int,
    extent: float = 1.5,
    n: int = 101,
) -> tuple[np.ndarray, np.ndarray]:
    """Map of the value drop after ``m`` applied steps on a square grid.

    Returns ``(axis, drops)`` where ``axis`` has ``n`` points spanning
    ``[-extent, extent]`` and ``drops[i, j]`` is the drop at the state
    ``(axis[i], axis[j])``.  Negative entries mark states where applying
    ``m`` steps of the plan increases the finite-horizon value.
    """
    if not 1 <= m < horizon:
        raise ConfigError(f"m must lie in [1, {horizon - 1}], got {m}")
    axis = np.linspace(-extent, extent, n)
    drops = np.empty((n, n))
    for i, x1 in enumerate(axis):
        for j, x2 in enumerate(axis):
            x = np.array([x1, x2])
            sol = solver.solve(x, horizon)
            drops[i, j] = sol.value - solver.value_of(sol.trajectory[m], horizon)
    return axis, drops


def write_sweep_csv(report: SweepReport, path) -> None:
    """One row per initial state, in index order."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(_SWEEP_COLUMNS) + "\n")
        for r in report.records:
            fh.write(
                f"{r.index:d},{r.x0[0]:.17g},{r.x0[1]:.17g},"
                f"{r.min_onestep_alpha:.17g},{r.min_mstep_alpha:.17g},"
                f"{r.alpha_cor3:.17g},{int(r.warning):d},{r.status}\n"
            )


def write_horizon_csv(rows, path) -> None:
    """One row per horizon from :func:`horizon_comparison`."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(_HORIZON_COLUMNS) + "\n")
        for n, col_a, col_b in rows:
            fh.write(f"{n:d},{col_a:.17g},{col_b:.17g}\n")
