"""Drift estimation by maximising the filtered quasi-likelihood.

For the built-in model families the maximiser is available in closed form
because the drift is linear in the parameter; the normal equations of the
likelihood (see :mod:`levydrift.likelihood`) reduce to a small linear
system in terms of jump-filtered increment sums

    ``S_q = sum_i w_q(X_{t_{i-1}}) * D_i * 1{|D_i| <= v_n}``

(coefficients always at the left interval endpoint, as required for the
Ito-integral term) and time integrals ``I_n(X, p) = sum_i X.^p * dt_i``
where ``X.`` is the state at the endpoint selected by ``endpoint``:
``'right'`` (``X_{t_i}``, the default convention for ``I_n``) or ``'left'``
(``X_{t_{i-1}}``).  Each closed form is the exact maximiser of the
likelihood with the same endpoint convention.  For models without a closed
form a damped Newton iteration with a Nelder-Mead fallback maximises the
likelihood directly.

Closed forms (``L`` denotes left states ``X_{t_{i-1}}``, ``X`` the selected
``I_n`` endpoint states):

* Ornstein-Uhlenbeck drift ``b = theta_2 - theta_1 * x`` with constant
  diffusion: with ``T = sum dt``, ``S0 = sum D 1``, ``S1 = sum L D 1``,

      ``theta_1 = (I_1 S0 - T S1) / (T I_2 - I_1^2)``,
      ``theta_2 = (S0 + theta_1 I_1) / T``.

* Square-root diffusion drift ``b = theta_1 - theta_2 * x``,
  ``sigma(x) = sigma * sqrt(x)``: with ``A = sum D 1 / L``, ``B = sum D 1``,

      ``theta_2 = (T A - I_{-1} B) / (I_{-1} I_1 - T^2)``,
      ``theta_1 = (theta_2 T + A) / I_{-1}``.

* Bounded drift ``b = -theta * x / sqrt(1 + x^2)`` with constant diffusion:
  with ``g(x) = -x / sqrt(1 + x^2)``,

      ``theta = sum g(L) D 1 / sum g(X)^2 dt``.

Increments whose diffusion coefficient vanishes at an evaluation state are
excluded from every sum (including ``T``), matching the likelihood.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np
import scipy.optimize

from .jumpfilter import FilterConfig, FilterResult, apply_filter
from .likelihood import (
    LikelihoodContext,
    filtered_hessian,
    filtered_loglik,
    filtered_score,
)
from .model import ParametricModel
from .simulate import Observations

__all__ = [
    "DegenerateDataError",
    "EstimateReport",
    "functional_In",
    "fmle_ou",
    "fmle_cir",
    "fmle_hyperbolic",
    "fmle_generic",
    "estimate",
]


class DegenerateDataError(RuntimeError):
    """Raised when the normal equations of a closed form are singular."""


@dataclass
class EstimateReport:
    """Result of one drift estimation."""

    theta: np.ndarray
    method: str
    converged: bool
    iterations: int = 0
    loglik: float = math.nan
    score_norm: float = math.nan
    kept_count: int = 0
    rejected_count: int = 0
    cutoff: float = math.nan
    skipped: int = 0
    endpoint: str = "right"
    model: str = ""
    message: str = ""

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "theta": [float(v) for v in np.atleast_1d(self.theta)],
            "method": self.method,
            "converged": bool(self.converged),
            "iterations": int(self.iterations),
            "loglik": float(self.loglik),
            "score_norm": float(self.score_norm),
            "kept_count": int(self.kept_count),
            "rejected_count": int(self.rejected_count),
            "cutoff": float(self.cutoff),
            "skipped_increments": int(self.skipped),
            "endpoint": self.endpoint,
            "message": self.message,
        }


def functional_In(obs: Observations, p: float, endpoint: str = "right") -> float:
    """Time integral ``I_n(X, p) = sum_i X^p * dt_i`` of the observations."""
    if endpoint == "right":
        x = obs.values[1:]
    elif endpoint == "left":
        x = obs.values[:-1]
    else:
        raise ValueError("endpoint must be 'left' or 'right'")
    if p < 0 and np.any(x <= 0):
        i = int(np.argmax(x <= 0)) + (1 if endpoint == "right" else 0)
        raise DegenerateDataError(
            f"I_n(X, {p}) undefined: observation {i} is non-positive ({obs.values[i]!r})"
        )
    dt = np.diff(obs.times)
    return float(np.sum(x**p * dt))


def _resolve_filter(obs, filt) -> FilterResult:
    if isinstance(filt, FilterResult):
        if len(filt.mask) != obs.n:
            raise ValueError("filter mask length does not match the observations")
        return filt
    return apply_filter(obs, filt)


def _endpoint_states(obs, endpoint):
    if endpoint == "right":
        return obs.values[1:]
    if endpoint == "left":
        return obs.values[:-1]
    raise ValueError("endpoint must be 'left' or 'right'")


def _finalize(report: EstimateReport, model: Optional[ParametricModel], obs, filt, endpoint):
    """Fill the likelihood value and score norm when a model is available."""
    if model is None:
        return report
    theta = np.asarray(report.theta, dtype=float)
    lo = np.asarray(model.bounds[:, 0], dtype=float)
    hi = np.asarray(model.bounds[:, 1], dtype=float)
    if not (np.all(np.isfinite(theta)) and np.all(theta >= lo) and np.all(theta <= hi)):
        # The closed-form solution of a near-singular system can land far
        # outside the admissible box; report it unconverged instead of
        # failing the likelihood evaluation.
        report.converged = False
        report.model = model.name
        report.message = "closed-form estimate falls outside the parameter bounds"
        warnings.warn(report.message, UserWarning, stacklevel=3)
        return report
    ctx = LikelihoodContext(model, obs, filt, endpoint=endpoint)
    report.loglik = filtered_loglik(ctx, report.theta)
    report.score_norm = float(np.max(np.abs(filtered_score(ctx, report.theta))))
    report.skipped = ctx.skipped
    report.model = model.name
    return report


def fmle_ou(
    obs: Observations,
    filt: Union[FilterResult, FilterConfig, None] = None,
    *,
    endpoint: str = "right",
    model: Optional[ParametricModel] = None,
) -> EstimateReport:
    """Closed-form filtered MLE for drift ``theta_2 - theta_1 * x`` with
    constant diffusion coefficient."""
    filt = _resolve_filter(obs, filt)
    x_l = obs.values[:-1]
    x_e = _endpoint_states(obs, endpoint)
    dxm = np.diff(obs.values) * filt.mask
    dt = np.diff(obs.times)
    t_tot = float(np.sum(dt))
    s0 = float(np.sum(dxm))
    s1 = float(np.sum(x_l * dxm))
    i1 = float(np.sum(x_e * dt))
    i2 = float(np.sum(x_e * x_e * dt))
    det = t_tot * i2 - i1 * i1
    if not det > 1e-12 * max(abs(t_tot * i2), i1 * i1, 1.0):
        raise DegenerateDataError(
            "normal equations are singular: the observed path is (numerically) constant"
        )
    th1 = (i1 * s0 - t_tot * s1) / det
    th2 = (s0 + th1 * i1) / t_tot
    report = EstimateReport(
        theta=np.array([th1, th2]),
        method="closed-form-ou",
        converged=True,
        iterations=0,
        kept_count=filt.kept_count,
        rejected_count=filt.rejected_count,
        cutoff=filt.cutoff,
        endpoint=endpoint,
    )
    return _finalize(report, model, obs, filt, endpoint)


def fmle_cir(
    obs: Observations,
    filt: Union[FilterResult, FilterConfig, None] = None,
    *,
    endpoint: str = "right",
    model: Optional[ParametricModel] = None,
) -> EstimateReport:
    """Closed-form filtered MLE for drift ``theta_1 - theta_2 * x`` with
    square-root diffusion ``sigma(x) = sigma * sqrt(x)``.

    Increments with a non-positive state at the evaluation endpoint are
    excluded from all sums (the diffusion coefficient degenerates there).
    """
    filt = _resolve_filter(obs, filt)
    x_l = obs.values[:-1]
    x_e = _endpoint_states(obs, endpoint)
    valid = (x_l > 0) & (x_e > 0)
    if not np.any(valid):
        raise DegenerateDataError("no usable increments: path is non-positive throughout")
    dxm = np.diff(obs.values) * filt.mask * valid
    dt = np.diff(obs.times) * valid
    t_tot = float(np.sum(dt))
    x_l_safe = np.where(valid, x_l, 1.0)
    x_e_safe = np.where(valid, x_e, 1.0)
    a_sum = float(np.sum(dxm / x_l_safe))
    b_sum = float(np.sum(dxm))
    i_m1 = float(np.sum(dt / x_e_safe))
    i_1 = float(np.sum(x_e_safe * dt))
    det = i_m1 * i_1 - t_tot * t_tot
    if not det > 1e-12 * max(abs(i_m1 * i_1), t_tot * t_tot, 1.0):
        raise DegenerateDataError(
            "normal equations are singular: the observed path is (numerically) constant"
        )
    th2 = (t_tot * a_sum - i_m1 * b_sum) / det
    th1 = (th2 * t_tot + a_sum) / i_m1
    report = EstimateReport(
        theta=np.array([th1, th2]),
        method="closed-form-cir",
        converged=True,
        iterations=0,
        kept_count=filt.kept_count,
        rejected_count=filt.rejected_count,
        cutoff=filt.cutoff,
        endpoint=endpoint,
    )
    return _finalize(report, model, obs, filt, endpoint)


def fmle_hyperbolic(
    obs: Observations,
    filt: Union[FilterResult, FilterConfig, None] = None,
    *,
    endpoint: str = "right",
    model: Optional[ParametricModel] = None,
) -> EstimateReport:
    """Closed-form filtered MLE for drift ``-theta * x / sqrt(1 + x^2)`` with
    constant diffusion coefficient."""
    filt = _resolve_filter(obs, filt)
    x_l = obs.values[:-1]
    x_e = _endpoint_states(obs, endpoint)
    dxm = np.diff(obs.values) * filt.mask
    dt = np.diff(obs.times)
    g_l = -x_l / np.sqrt(1.0 + x_l * x_l)
    g_e = -x_e / np.sqrt(1.0 + x_e * x_e)
    num = float(np.sum(g_l * dxm))
    den = float(np.sum(g_e * g_e * dt))
    if not den > 1e-12 * max(1.0, float(np.sum(dt))):
        raise DegenerateDataError(
            "normal equations are singular: the observed path is (numerically) zero"
        )
    report = EstimateReport(
        theta=np.array([num / den]),
        method="closed-form-hyperbolic",
        converged=True,
        iterations=0,
        kept_count=filt.kept_count,
        rejected_count=filt.rejected_count,
        cutoff=filt.cutoff,
        endpoint=endpoint,
    )
    return _finalize(report, model, obs, filt, endpoint)


# ---------------------------------------------------------------------------
# generic optimizer
# ---------------------------------------------------------------------------

MAX_NEWTON_ITER = 200
MAX_HALVINGS = 30
NM_MAX_ITER = 2000


def _penalized_negloglik(ctx, lo, hi):
    span = np.where(np.isfinite(hi - lo), hi - lo, 1.0)

    def fun(theta):
        excess = np.maximum(theta - hi, 0.0) + np.maximum(lo - theta, 0.0)
        if np.any(excess > 0):
            return 1e50 * (1.0 + float(np.sum(excess / span)))
        val = filtered_loglik(ctx, theta)
        if not math.isfinite(val):
            return 1e50
        return -val

    return fun


def fmle_generic(
    model: ParametricModel,
    obs: Observations,
    filt: Union[FilterResult, FilterConfig, None] = None,
    *,
    endpoint: str = "left",
    theta0=None,
    gtol: float = 1e-9,
) -> EstimateReport:
    """Maximise the filtered log-likelihood for an arbitrary drift family.

    A damped Newton iteration (step halving, at most 30 halvings per step,
    200 iterations) is tried first; if it stalls, a bounded Nelder-Mead
    search refines the best iterate.  Iterates are projected onto the
    model's parameter box after every step.
    """
    filt = _resolve_filter(obs, filt)
    ctx = LikelihoodContext(model, obs, filt, endpoint=endpoint)
    lo = np.asarray(model.bounds[:, 0], dtype=float)
    hi = np.asarray(model.bounds[:, 1], dtype=float)

    if theta0 is None:
        theta = np.zeros(model.param_dim)
    else:
        theta = np.asarray(theta0, dtype=float).copy()
    theta = np.clip(theta, lo, hi)

    f = filtered_loglik(ctx, theta)
    if not math.isfinite(f):
        raise DegenerateDataError("log-likelihood is not finite at the starting point")
    iterations = 0
    converged = False
    method = "newton"
    for _ in range(MAX_NEWTON_ITER):
        iterations += 1
        g = filtered_score(ctx, theta)
        if np.max(np.abs(g)) <= gtol * (1.0 + abs(f)):
            converged = True
            break
        h = filtered_hessian(ctx, theta)
        step = None
        try:
            cand = np.linalg.solve(h, -g)
            if np.all(np.isfinite(cand)) and float(g @ cand) > 0:
                step = cand
        except np.linalg.LinAlgError:
            step = None
        if step is None:  # fall back to a normalised gradient step
            gn = float(np.max(np.abs(g)))
            step = g / gn if gn > 0 else g
        lam = 1.0
        improved = False
        for _ in range(MAX_HALVINGS):
            cand = np.clip(theta + lam * step, lo, hi)
            fc = filtered_loglik(ctx, cand)
            if math.isfinite(fc) and fc > f:
                theta, f = cand, fc
                improved = True
                break
            lam *= 0.5
        if not improved:
            break

    if not converged:
        method = "newton+nelder-mead"
        res = scipy.optimize.minimize(
            _penalized_negloglik(ctx, lo, hi),
            theta,
            method="Nelder-Mead",
            options={
                "maxiter": NM_MAX_ITER,
                "maxfev": 2 * NM_MAX_ITER,
                "xatol": 1e-10,
                "fatol": 1e-12,
            },
        )
        iterations += int(res.nit)
        cand = np.clip(np.asarray(res.x, dtype=float), lo, hi)
        fc = filtered_loglik(ctx, cand)
        if math.isfinite(fc) and fc >= f:
            theta, f = cand, fc
        g = filtered_score(ctx, theta)
        converged = bool(np.max(np.abs(g)) <= 1e-5 * (1.0 + abs(f)))

    message = ""
    if not converged:
        message = (
            "optimizer stopped before reaching the gradient tolerance; "
            "returning the best iterate found"
        )
        warnings.warn(message, UserWarning, stacklevel=2)
    g = filtered_score(ctx, theta)
    return EstimateReport(
        theta=theta,
        method=method,
        converged=converged,
        iterations=iterations,
        loglik=f,
        score_norm=float(np.max(np.abs(g))),
        kept_count=filt.kept_count,
        rejected_count=filt.rejected_count,
        cutoff=filt.cutoff,
        skipped=ctx.skipped,
        endpoint=endpoint,
        model=model.name,
        message=message,
    )


_CLOSED_FORMS = {
    "ou": fmle_ou,
    "cir": fmle_cir,
    "hyperbolic": fmle_hyperbolic,
}


def estimate(
    model: ParametricModel,
    obs: Observations,
    filt: Union[FilterResult, FilterConfig, None] = None,
    *,
    method: str = "auto",
    endpoint: Optional[str] = None,
    theta0=None,
) -> EstimateReport:
    """Estimate the drift parameter, dispatching to a closed form when one
    exists for the model family (``method='auto'``).

    ``method`` may be ``'auto'``, ``'closed'`` or ``'generic'``.  The default
    endpoint convention is ``'right'`` for closed forms and ``'left'`` for
    the generic optimiser.
    """
    kind = model.meta.get("kind") if model.meta else None
    if method == "auto":
        method = "closed" if kind in _CLOSED_FORMS else "generic"
    if method == "closed":
        if kind not in _CLOSED_FORMS:
            raise ValueError(f"no closed form available for model kind {kind!r}")
        ep = "right" if endpoint is None else endpoint
        return _CLOSED_FORMS[kind](obs, filt, endpoint=ep, model=model)
    if method == "generic":
        ep = "left" if endpoint is None else endpoint
        return fmle_generic(model, obs, filt, endpoint=ep, theta0=theta0)
    raise ValueError("method must be 'auto', 'closed' or 'generic'")
