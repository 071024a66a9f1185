"""Threshold-based jump filtering of discrete observations.

An increment ``D_i = X_{t_i} - X_{t_{i-1}}`` is attributed to the continuous
part of the path when ``|D_i| <= v_n`` and discarded as jump-contaminated
otherwise.  The cutoff is tied to the observation step ``Delta_n`` through

    ``v_n = Delta_n ** (1/2 - epsilon)``,   ``epsilon in (0, 1/2)``,

with ``epsilon = 1/6`` (cutoff ``Delta_n ** (1/3)``) as the default.  The
boundary case ``|D_i| = v_n`` is kept.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np

from .simulate import Observations, SamplePath

__all__ = [
    "FilterConfig",
    "FilterResult",
    "JumpFilterDiagnostics",
    "cutoff_value",
    "apply_filter",
    "filtered_integral",
    "riemann_sum",
    "filter_diagnostics",
]

DEFAULT_EPSILON = 1.0 / 6.0


@dataclass(frozen=True)
class FilterConfig:
    """Cutoff specification; at most one of the three fields may be set.

    * ``epsilon``: cutoff ``Delta ** (1/2 - epsilon)`` with
      ``epsilon in (0, 1/2)``;
    * ``power``: cutoff ``Delta ** power`` with ``power in (0, 1/2)``;
    * ``cutoff``: explicit positive threshold (``math.inf`` disables
      filtering).

    With no field set the default ``epsilon = 1/6`` applies.
    """

    epsilon: Optional[float] = None
    power: Optional[float] = None
    cutoff: Optional[float] = None

    def __post_init__(self):
        given = sum(v is not None for v in (self.epsilon, self.power, self.cutoff))
        if given > 1:
            raise ValueError("set at most one of epsilon, power, cutoff")
        if self.epsilon is not None and not 0 < self.epsilon < 0.5:
            raise ValueError("epsilon must lie in (0, 1/2)")
        if self.power is not None and not 0 < self.power < 0.5:
            raise ValueError("power must lie in (0, 1/2)")
        if self.cutoff is not None and not self.cutoff > 0:
            raise ValueError("cutoff must be positive (math.inf allowed)")

    @property
    def effective_power(self) -> Optional[float]:
        """Exponent of ``Delta`` in the cutoff, or ``None`` for explicit cutoffs."""
        if self.cutoff is not None:
            return None
        if self.power is not None:
            return self.power
        eps = DEFAULT_EPSILON if self.epsilon is None else self.epsilon
        return 0.5 - eps


def cutoff_value(config: FilterConfig, delta: float) -> float:
    """Resolve the numeric cutoff ``v_n`` for observation step ``delta``."""
    if config.cutoff is not None:
        return float(config.cutoff)
    if not delta > 0:
        raise ValueError("delta must be positive")
    if delta >= 1:
        warnings.warn(
            f"observation step delta = {delta:.6g} is not in (0, 1); the "
            "power-law cutoff is only meaningful for small steps",
            UserWarning,
            stacklevel=2,
        )
    return float(delta ** config.effective_power)


@dataclass(frozen=True)
class FilterResult:
    """Outcome of thresholding the increments of one observation record."""

    cutoff: float
    mask: np.ndarray  # mask[i] True <=> increment i+1 kept (|D_i| <= cutoff)

    @property
    def n(self) -> int:
        return len(self.mask)

    @property
    def kept_count(self) -> int:
        return int(np.count_nonzero(self.mask))

    @property
    def rejected_count(self) -> int:
        return self.n - self.kept_count


def apply_filter(
    obs: Observations, config: Optional[FilterConfig] = None
) -> FilterResult:
    """Threshold the increments of ``obs``; boundary hits are kept."""
    if config is None:
        config = FilterConfig()
    cutoff = cutoff_value(config, obs.delta_max)
    dx = np.diff(obs.values)
    mask = np.abs(dx) <= cutoff
    return FilterResult(cutoff=cutoff, mask=mask)


def filtered_integral(
    obs: Observations,
    fn: Callable[[np.ndarray], np.ndarray],
    filt: Union[FilterResult, FilterConfig, None] = None,
) -> float:
    """Compute ``sum_i fn(X_{t_{i-1}}) * D_i * 1{|D_i| <= v_n}``.

    ``fn`` is evaluated at the left endpoint of each interval and must accept
    an array argument.
    """
    if not isinstance(filt, FilterResult):
        filt = apply_filter(obs, filt)
    dx = np.diff(obs.values)
    weights = _checked_eval(fn, obs.values[:-1])
    return float(np.sum(weights * dx * filt.mask))


def _checked_eval(fn, x: np.ndarray) -> np.ndarray:
    out = np.asarray(fn(x), dtype=float)
    if out.shape != x.shape:
        raise ValueError("integrand returned an array of the wrong shape")
    bad = ~np.isfinite(out)
    if np.any(bad):
        i = int(np.argmax(bad))
        raise ValueError(
            f"integrand evaluated to a non-finite value at interval {i} (state {x[i]!r})"
        )
    return out


def riemann_sum(
    obs: Observations,
    fn: Callable[[np.ndarray], np.ndarray],
    endpoint: str = "left",
) -> float:
    """Compute ``sum_i fn(X) * Delta_i t`` with left or right endpoints."""
    if endpoint == "left":
        x = obs.values[:-1]
    elif endpoint == "right":
        x = obs.values[1:]
    else:
        raise ValueError("endpoint must be 'left' or 'right'")
    dt = np.diff(obs.times)
    return float(np.sum(_checked_eval(fn, x) * dt))


@dataclass(frozen=True)
class JumpFilterDiagnostics:
    """Ground-truth comparison of a filter mask against recorded jump events."""

    n_intervals: int
    jump_intervals: int
    rejected: int
    true_detections: int
    false_rejections: int
    missed_jumps: int

    @property
    def detection_rate(self) -> float:
        if self.jump_intervals == 0:
            return math.nan
        return self.true_detections / self.jump_intervals

    @property
    def false_rejection_rate(self) -> float:
        clean = self.n_intervals - self.jump_intervals
        if clean == 0:
            return math.nan
        return self.false_rejections / clean

    def __str__(self) -> str:
        return (
            f"intervals: {self.n_intervals} ({self.jump_intervals} with jumps), "
            f"rejected: {self.rejected}, detected: {self.true_detections}, "
            f"false rejections: {self.false_rejections}, "
            f"missed: {self.missed_jumps}"
        )


def filter_diagnostics(
    obs: Observations,
    filt: FilterResult,
    path: SamplePath,
) -> JumpFilterDiagnostics:
    """Classify each observation interval against the true jump record.

    ``obs`` must cover the same time span as ``path`` (the usual case is
    that it was produced by :func:`levydrift.simulate.subsample`).
    """
    if len(filt.mask) != obs.n:
        raise ValueError("filter mask length does not match the observations")
    if abs(obs.times[0] - path.times[0]) > 1e-9 or abs(obs.t_end - path.t_end) > 1e-9 * max(
        1.0, abs(path.t_end)
    ):
        raise ValueError("observations do not span the same interval as the path")
    events = path.jump_events
    if len(events):
        tau = events[:, 0]
        if tau.min() <= obs.times[0] or tau.max() > obs.t_end + 1e-12:
            raise ValueError("jump events fall outside the observation window")
        # event at tau lands in interval i with t_{i-1} < tau <= t_i
        idx = np.searchsorted(obs.times, tau - 1e-12 * max(1.0, obs.t_end), side="left")
        idx = np.clip(idx, 1, obs.n)
        has_jump = np.bincount(idx - 1, minlength=obs.n) > 0
    else:
        has_jump = np.zeros(obs.n, dtype=bool)
    rejected = ~filt.mask
    true_det = int(np.count_nonzero(rejected & has_jump))
    false_rej = int(np.count_nonzero(rejected & ~has_jump))
    missed = int(np.count_nonzero(filt.mask & has_jump))
    return JumpFilterDiagnostics(
        n_intervals=obs.n,
        jump_intervals=int(np.count_nonzero(has_jump)),
        rejected=int(np.count_nonzero(rejected)),
        true_detections=true_det,
        false_rejections=false_rej,
        missed_jumps=missed,
    )
