"""Path simulation for jump-diffusion models.

The Euler scheme runs on a fine grid of ``fine_steps`` equal steps over
``[0, t_end]`` and tracks the continuous and jump components of the state
separately, so that ``values == cont_part + jump_part`` holds exactly
(``cont_part`` starts at ``x0``, ``jump_part`` at zero).

Noise is drawn once per path from a counter-based generator in a fixed
order -- jump structure first, then the per-step normals, then the extra
normals used inside jump-carrying steps -- which makes every path a pure
function of ``(model, theta, x0, t_end, fine_steps, seed)``.

Jump drivers:

* compound Poisson events are placed at their exact offsets inside a step
  and the step is integrated piecewise around them;
* alpha-stable and tempered-stable drivers contribute one aggregated
  increment per fine step, applied at the end of the step.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional, TextIO, Union

import numpy as np

from ._kernels import HAVE_NUMBA, euler_builtin, euler_generic
from ._rng import make_rng
from .model import (
    AlphaStable,
    CompoundPoisson,
    ConstantJumps,
    ExponentialJumps,
    GaussianJumps,
    ParametricModel,
    TemperedStable,
    stable_unit_scale,
    validate_theta,
)

__all__ = [
    "SamplePath",
    "Observations",
    "SimulationDivergedError",
    "simulate_path",
    "subsample",
    "discard_initial",
    "euler_drive",
    "sample_compound_poisson_segment",
    "sample_stable_increment",
    "sample_tempered_stable_increment",
    "tempered_floor",
    "write_path_csv",
    "read_path_csv",
    "write_observations_csv",
    "read_observations_csv",
]

#: Variance of the discarded small-jump remainder of a tempered-stable
#: driver is kept below this value per unit time.
TEMPERED_VARIANCE_TOL = 1e-6

#: Per-step aggregated increments smaller than this are not recorded as
#: jump events (they are still applied to the path).
LUMP_RECORD_FLOOR = 1e-8


class SimulationDivergedError(RuntimeError):
    """Raised when the Euler recursion leaves the admissible range."""

    def __init__(self, step_index: int, time: float, model_name: str = ""):
        self.step_index = int(step_index)
        self.time = float(time)
        name = f" for model '{model_name}'" if model_name else ""
        super().__init__(
            f"simulation diverged{name} at step {self.step_index} "
            f"(t = {self.time:.6g}): |X| exceeded 1e12"
        )


@dataclass(frozen=True)
class SamplePath:
    """A simulated fine-grid trajectory with its jump decomposition.

    ``jump_events`` is an ``(m, 2)`` array of ``(time, applied_size)`` rows,
    where ``applied_size`` already includes the ``gamma`` factor.
    """

    times: np.ndarray
    values: np.ndarray
    cont_part: np.ndarray
    jump_part: np.ndarray
    jump_events: np.ndarray
    seed: Optional[int] = None

    @property
    def fine_steps(self) -> int:
        return len(self.times) - 1

    @property
    def t_end(self) -> float:
        return float(self.times[-1])

    @property
    def step_size(self) -> float:
        return self.t_end / self.fine_steps


@dataclass(frozen=True)
class Observations:
    """Discrete observations ``(t_i, X_{t_i})`` on an increasing grid."""

    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        x = np.asarray(self.values, dtype=float)
        if t.ndim != 1 or x.shape != t.shape:
            raise ValueError("times and values must be 1-d arrays of equal length")
        if len(t) < 2:
            raise ValueError("need at least two observation times")
        if not np.all(np.diff(t) > 0):
            raise ValueError("observation times must be strictly increasing")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", x)

    @property
    def n(self) -> int:
        return len(self.times) - 1

    @property
    def t_end(self) -> float:
        return float(self.times[-1])

    @property
    def delta_max(self) -> float:
        return float(np.max(np.diff(self.times)))


# ---------------------------------------------------------------------------
# increment samplers
# ---------------------------------------------------------------------------


def sample_compound_poisson_segment(
    spec: CompoundPoisson, h: float, rng: np.random.Generator
):
    """Draw jump times and sizes of a compound Poisson driver over ``(0, h]``.

    Returns ``(offsets, sizes)`` sorted by offset.  Offsets lie in ``(0, h]``.
    """
    if h <= 0:
        raise ValueError("segment length must be positive")
    count = int(rng.poisson(spec.intensity * h))
    offsets = h * (1.0 - rng.random(count))
    law = spec.jump_law
    if isinstance(law, ExponentialJumps):
        sizes = rng.exponential(1.0 / law.rate, count)
    elif isinstance(law, GaussianJumps):
        sizes = law.mean + law.std * rng.standard_normal(count)
    elif isinstance(law, ConstantJumps):
        sizes = np.full(count, law.value, dtype=float)
    else:  # pragma: no cover - guarded by CompoundPoisson validation
        raise TypeError(f"unsupported jump law {type(law).__name__}")
    if spec.two_sided:
        flip = rng.random(count) < 0.5
        sizes = np.where(flip, -sizes, sizes)
    order = np.argsort(offsets, kind="stable")
    return offsets[order], sizes[order]


def sample_stable_increment(
    alpha: float,
    scale: float,
    h: float,
    rng: np.random.Generator,
    size: Optional[int] = None,
):
    """Increments of a symmetric alpha-stable driver over steps of length ``h``.

    The driver has Levy measure ``scale**alpha / |z|**(1 + alpha) dz``.  A
    standard symmetric stable variate ``S`` (characteristic function
    ``exp(-|t|**alpha)``) is drawn by the Chambers-Mallows-Stuck transform
    and rescaled by ``scale * h**(1/alpha) * c_alpha`` where
    ``c_alpha = (pi / (Gamma(1 + alpha) * sin(pi * alpha / 2)))**(1/alpha)``
    converts the unit characteristic-function scale to the unit
    Levy-density scale.
    """
    if not 0 < alpha < 2:
        raise ValueError("alpha must lie in (0, 2)")
    if h <= 0:
        raise ValueError("step length must be positive")
    m = 1 if size is None else int(size)
    u = rng.uniform(-math.pi / 2, math.pi / 2, m)
    w = rng.standard_exponential(m)
    if abs(alpha - 1.0) < 1e-12:
        core = np.tan(u)
    else:
        inv = 1.0 / alpha
        core = (np.sin(alpha * u) / np.cos(u) ** inv) * (
            np.cos((1.0 - alpha) * u) / w
        ) ** ((1.0 - alpha) * inv)
    out = (scale * h ** (1.0 / alpha) * stable_unit_scale(alpha)) * core
    if size is None:
        return float(out[0])
    return out


def tempered_floor(spec: TemperedStable) -> float:
    """Truncation level ``r0`` below which tempered-stable jumps are dropped.

    ``r0`` solves ``2 * C * r0**(2 - alpha) / (2 - alpha) = tol`` with
    ``tol = 1e-6``, which bounds the variance of the neglected (symmetric,
    hence mean-zero) small-jump remainder by ``tol`` per unit time.
    """
    c = spec.normalizer
    if c == 0.0:
        return math.inf
    return (TEMPERED_VARIANCE_TOL * (2.0 - spec.alpha) / (2.0 * c)) ** (
        1.0 / (2.0 - spec.alpha)
    )


def sample_tempered_stable_increment(
    spec: TemperedStable,
    h: float,
    rng: np.random.Generator,
    size: Optional[int] = None,
):
    """Increments of a symmetric tempered-stable driver over steps of ``h``.

    Jumps with magnitude above :func:`tempered_floor` are generated by
    thinning Pareto proposals from the un-tempered tail with acceptance
    probability ``exp(-tempering * |z|)``; smaller jumps are dropped (their
    contribution is mean zero with variance below ``1e-6`` per unit time).
    """
    if h <= 0:
        raise ValueError("step length must be positive")
    m = 1 if size is None else int(size)
    r0 = tempered_floor(spec)
    if not math.isfinite(r0):
        out = np.zeros(m)
        return float(out[0]) if size is None else out
    alpha, lam, c = spec.alpha, spec.tempering, spec.normalizer
    proposal_rate = 2.0 * c * r0 ** (-alpha) / alpha
    counts = rng.poisson(proposal_rate * h, m)
    total = int(counts.sum())
    u = rng.random(total)
    mags = r0 * u ** (-1.0 / alpha)
    accept = rng.random(total) < np.exp(-lam * mags)
    negate = rng.random(total) < 0.5
    vals = np.where(negate, -mags, mags) * accept
    idx = np.repeat(np.arange(m), counts)
    out = np.bincount(idx, weights=vals, minlength=m)
    if size is None:
        return float(out[0])
    return out


# ---------------------------------------------------------------------------
# Euler driver
# ---------------------------------------------------------------------------

_EMPTY_F = np.empty(0, dtype=np.float64)
_EMPTY_I = np.empty(0, dtype=np.int64)


def euler_drive(
    model: ParametricModel,
    theta: np.ndarray,
    x0: float,
    h: float,
    z_main: np.ndarray,
    *,
    jump_steps: Optional[np.ndarray] = None,
    jump_offsets: Optional[np.ndarray] = None,
    jump_sizes: Optional[np.ndarray] = None,
    z_extra: Optional[np.ndarray] = None,
    step_lumps: Optional[np.ndarray] = None,
):
    """Run the Euler recursion on explicit noise arrays.

    Returns ``(values, cont_part, jump_part, applied_sizes, applied_lumps)``
    where ``applied_sizes`` are the point-jump increments after the
    ``gamma`` factor and ``applied_lumps`` the per-step aggregated
    increments after ``gamma`` (empty when the corresponding driver is
    absent).  Raises :class:`SimulationDivergedError` if the state leaves
    ``(-1e12, 1e12)``.
    """
    theta = np.ascontiguousarray(theta, dtype=np.float64)
    z_main = np.ascontiguousarray(z_main, dtype=np.float64)
    n = len(z_main)
    js = _EMPTY_I if jump_steps is None else np.ascontiguousarray(jump_steps, dtype=np.int64)
    jo = _EMPTY_F if jump_offsets is None else np.ascontiguousarray(jump_offsets, dtype=np.float64)
    jz = _EMPTY_F if jump_sizes is None else np.ascontiguousarray(jump_sizes, dtype=np.float64)
    ze = _EMPTY_F if z_extra is None else np.ascontiguousarray(z_extra, dtype=np.float64)
    lumps = _EMPTY_F if step_lumps is None else np.array(step_lumps, dtype=np.float64)
    if not (len(js) == len(jo) == len(jz)):
        raise ValueError("jump_steps, jump_offsets and jump_sizes must have equal length")
    if len(js) and len(ze) < len(js) + len(np.unique(js)):
        raise ValueError("z_extra is too short for the given jump structure")
    if len(lumps) not in (0, n):
        raise ValueError("step_lumps must have one entry per step")

    x_out = np.empty(n + 1)
    c_out = np.empty(n + 1)
    j_out = np.empty(n + 1)
    use_kernel = model.kernel_id is not None and model.gamma is None and HAVE_NUMBA
    if use_kernel:
        err = euler_builtin(
            model.kernel_id, theta, float(model.sigma_param), float(x0), float(h),
            z_main, ze, js, jo, jz, lumps, x_out, c_out, j_out,
        )
        applied_sizes = jz.copy()
        applied_lumps = lumps
    else:
        applied_sizes = np.empty(len(js))
        err = euler_generic(
            model.drift.value, model.diffusion.value, model.gamma_value,
            theta, float(x0), float(h),
            z_main, ze, js, jo, jz, lumps, x_out, c_out, j_out, applied_sizes,
        )
        applied_lumps = lumps
    if err:
        raise SimulationDivergedError(err, err * h, model.name)
    return x_out, c_out, j_out, applied_sizes, applied_lumps


# ---------------------------------------------------------------------------
# path simulation
# ---------------------------------------------------------------------------


def simulate_path(
    model: ParametricModel,
    theta,
    x0: float,
    t_end: float,
    fine_steps: int,
    seed: Optional[int] = None,
    rng: Optional[np.random.Generator] = None,
) -> SamplePath:
    """Simulate one trajectory of the model on a fine equidistant grid."""
    theta = validate_theta(model, theta)
    if t_end <= 0:
        raise ValueError("t_end must be positive")
    fine_steps = int(fine_steps)
    if fine_steps < 1:
        raise ValueError("fine_steps must be a positive integer")
    if rng is None:
        rng = make_rng(0 if seed is None else seed)
    h = t_end / fine_steps
    levy = model.levy

    jump_steps = jump_offsets = jump_sizes = None
    z_extra = None
    step_lumps = None
    event_times = _EMPTY_F
    if levy is None:
        pass  # pure diffusion: no jump structure
    elif isinstance(levy, CompoundPoisson):
        global_times, sizes = sample_compound_poisson_segment(levy, t_end, rng)
        steps = np.minimum(
            np.maximum(np.ceil(global_times / h).astype(np.int64) - 1, 0),
            fine_steps - 1,
        )
        jump_steps = steps
        jump_offsets = np.minimum(np.maximum(global_times - steps * h, 0.0), h)
        jump_sizes = sizes
        event_times = steps * h + jump_offsets
    elif isinstance(levy, AlphaStable):
        step_lumps = sample_stable_increment(levy.alpha, levy.scale, h, rng, size=fine_steps)
    elif isinstance(levy, TemperedStable):
        step_lumps = sample_tempered_stable_increment(levy, h, rng, size=fine_steps)
    else:
        raise TypeError(f"unsupported Levy driver {type(levy).__name__}")

    z_main = rng.standard_normal(fine_steps)
    if jump_steps is not None and len(jump_steps):
        n_segments = len(jump_steps) + len(np.unique(jump_steps))
        z_extra = rng.standard_normal(n_segments)

    values, cont, jump, applied_sizes, applied_lumps = euler_drive(
        model, theta, x0, h, z_main,
        jump_steps=jump_steps, jump_offsets=jump_offsets, jump_sizes=jump_sizes,
        z_extra=z_extra, step_lumps=step_lumps,
    )

    if jump_steps is not None:
        events = np.column_stack((event_times, applied_sizes)) if len(jump_steps) else np.empty((0, 2))
    elif step_lumps is not None:
        mask = np.abs(applied_lumps) > LUMP_RECORD_FLOOR
        ks = np.nonzero(mask)[0]
        events = np.column_stack(((ks + 1) * h, applied_lumps[ks])) if len(ks) else np.empty((0, 2))
    else:
        events = np.empty((0, 2))

    times = np.arange(fine_steps + 1) * h
    return SamplePath(
        times=times, values=values, cont_part=cont, jump_part=jump,
        jump_events=events, seed=seed,
    )


def subsample(path: SamplePath, n: int) -> Observations:
    """Keep ``n + 1`` equally spaced points of a fine path.

    When ``n`` does not divide the number of fine steps the nearest grid
    points are used instead (with a warning); ``n`` may not exceed the fine
    step count.
    """
    n = int(n)
    if n < 1:
        raise ValueError("n must be a positive integer")
    if n > path.fine_steps:
        raise ValueError(
            f"n = {n} exceeds the fine step count {path.fine_steps}"
        )
    if path.fine_steps % n != 0:
        warnings.warn(
            f"n = {n} does not divide fine_steps = {path.fine_steps}; "
            "falling back to the nearest grid points",
            UserWarning,
            stacklevel=2,
        )
        idx = np.rint(np.arange(n + 1) * (path.fine_steps / n)).astype(np.int64)
        return Observations(times=path.times[idx].copy(), values=path.values[idx].copy())
    stride = path.fine_steps // n
    return Observations(times=path.times[::stride].copy(), values=path.values[::stride].copy())


def discard_initial(path: SamplePath, t_burn: float) -> SamplePath:
    """Drop the initial ``[0, t_burn]`` portion of a path and rebase time to 0.

    ``t_burn`` must coincide with a fine-grid point.  The decomposition is
    rebased so that the truncated path again satisfies
    ``values == cont_part + jump_part`` with ``cont_part[0]`` equal to the
    new starting value.
    """
    if t_burn == 0:
        return path
    h = path.step_size
    k0 = int(round(t_burn / h))
    if not 0 < k0 < path.fine_steps:
        raise ValueError("t_burn must lie strictly inside the simulated span")
    if abs(k0 * h - t_burn) > 1e-9 * max(1.0, abs(t_burn)):
        raise ValueError("t_burn must coincide with a fine-grid time")
    t0 = path.times[k0]
    keep = path.jump_events[:, 0] > t0 if len(path.jump_events) else np.empty(0, dtype=bool)
    events = path.jump_events[keep].copy() if len(path.jump_events) else np.empty((0, 2))
    if len(events):
        events[:, 0] -= t0
    jump0 = path.jump_part[k0]
    return SamplePath(
        times=path.times[k0:] - t0,
        values=path.values[k0:].copy(),
        cont_part=path.cont_part[k0:] - path.cont_part[k0] + path.values[k0],
        jump_part=path.jump_part[k0:] - jump0,
        jump_events=events,
        seed=path.seed,
    )


# ---------------------------------------------------------------------------
# CSV input/output
# ---------------------------------------------------------------------------


def _as_writable(f: Union[str, TextIO]):
    if isinstance(f, (str, bytes)):
        return open(f, "w", newline=""), True
    return f, False


def write_path_csv(path: SamplePath, f: Union[str, TextIO]) -> None:
    """Write a fine path as CSV with columns ``t,x,xc,xj``."""
    handle, owned = _as_writable(f)
    try:
        arr = np.column_stack((path.times, path.values, path.cont_part, path.jump_part))
        np.savetxt(handle, arr, delimiter=",", header="t,x,xc,xj", comments="", fmt="%.17g")
    finally:
        if owned:
            handle.close()


def write_observations_csv(obs: Observations, f: Union[str, TextIO]) -> None:
    """Write observations as CSV with columns ``t,x``."""
    handle, owned = _as_writable(f)
    try:
        arr = np.column_stack((obs.times, obs.values))
        np.savetxt(handle, arr, delimiter=",", header="t,x", comments="", fmt="%.17g")
    finally:
        if owned:
            handle.close()


def _load_numeric_csv(f: Union[str, TextIO]) -> np.ndarray:
    if isinstance(f, (str, bytes)):
        with open(f, "r") as handle:
            text = handle.read()
    else:
        text = f.read()
    rows = []
    width = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        cells = [c.strip() for c in line.split(",")]
        if lineno == 1:
            try:
                float(cells[0])
            except ValueError:
                continue  # header line
        try:
            row = [float(c) for c in cells]
        except ValueError as exc:
            raise ValueError(f"CSV line {lineno}: non-numeric cell ({exc})") from None
        if width is None:
            width = len(row)
        elif len(row) != width:
            raise ValueError(
                f"CSV line {lineno}: expected {width} columns, found {len(row)}"
            )
        rows.append(row)
    if not rows:
        raise ValueError("empty CSV input")
    data = np.asarray(rows, dtype=float)
    if data.shape[1] < 2:
        raise ValueError("CSV must have at least two columns (t, x)")
    return data


def read_observations_csv(f: Union[str, TextIO]) -> Observations:
    """Read observations from CSV (first two columns are ``t`` and ``x``)."""
    data = _load_numeric_csv(f)
    return Observations(times=data[:, 0], values=data[:, 1])


def read_path_csv(f: Union[str, TextIO]) -> SamplePath:
    """Read a fine path written by :func:`write_path_csv`.

    Jump events are not stored in the CSV, so the reconstructed path carries
    an empty event table; the decomposition columns are required.
    """
    data = _load_numeric_csv(f)
    if data.shape[1] < 4:
        raise ValueError("path CSV must have columns t,x,xc,xj")
    return SamplePath(
        times=data[:, 0], values=data[:, 1], cont_part=data[:, 2],
        jump_part=data[:, 3], jump_events=np.empty((0, 2)), seed=None,
    )
