"""Model specifications for scalar jump diffusions.

A model describes the dynamics

    dX_t = b(theta, X_t) dt + sigma(X_t) dW_t + gamma(X_t-) dL_t

through a parametric drift ``b``, a diffusion coefficient ``sigma``, a jump
coefficient ``gamma`` (identically one for all built-in models) and the Levy
measure of the pure-jump driver ``L``.  Parameter vectors are plain 1-d
``float`` arrays of length ``ParametricModel.param_dim``; every drift
satisfies the normalization ``b(0, x) == 0``.

Built-in models (see :data:`MODEL_BUILDERS`):

``ou``
    ``b(theta, x) = theta[1] - theta[0] * x`` with constant ``sigma``.
``cir``
    ``b(theta, x) = theta[0] - theta[1] * x`` with ``sigma(x) = sigma * sqrt(max(x, 0))``.
``hyperbolic``
    ``b(theta, x) = -theta[0] * x / sqrt(1 + x**2)`` with constant ``sigma``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np
from scipy import integrate

__all__ = [
    "ExponentialJumps",
    "GaussianJumps",
    "ConstantJumps",
    "CompoundPoisson",
    "AlphaStable",
    "TemperedStable",
    "DriftSpec",
    "DiffusionSpec",
    "ParametricModel",
    "ModelCheckReport",
    "ou_model",
    "cir_model",
    "hyperbolic_model",
    "MODEL_BUILDERS",
    "get_model",
    "check_model",
    "validate_theta",
    "model_to_json",
    "model_from_json",
    "levy_to_dict",
    "levy_from_dict",
    "stable_unit_scale",
]

DEFAULT_BOUND = 50.0

# Integer ids used by the compiled simulation kernels.
KERNEL_OU = 0
KERNEL_CIR = 1
KERNEL_HYPERBOLIC = 2


# ---------------------------------------------------------------------------
# jump size laws
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ExponentialJumps:
    """Exponential jump sizes with the given rate (mean ``1 / rate``)."""

    rate: float

    def __post_init__(self):
        if not self.rate > 0:
            raise ValueError(f"exponential jump rate must be > 0, got {self.rate}")

    def mean_abs(self) -> float:
        return 1.0 / self.rate

    def abs_cdf(self, a: float) -> float:
        """P(|Z| <= a)."""
        return -math.expm1(-self.rate * max(a, 0.0))

    def abs_partial_mean(self, a: float) -> float:
        """E[|Z| ; |Z| <= a]."""
        if a <= 0:
            return 0.0
        r = self.rate
        return (1.0 - math.exp(-r * a) * (1.0 + r * a)) / r

    def bounded_density(self) -> bool:
        return True


@dataclass(frozen=True)
class GaussianJumps:
    """Gaussian jump sizes."""

    mean: float
    std: float

    def __post_init__(self):
        if not self.std >= 0:
            raise ValueError(f"gaussian jump std must be >= 0, got {self.std}")

    def mean_abs(self) -> float:
        if self.std == 0:
            return abs(self.mean)
        m, s = self.mean, self.std
        return s * math.sqrt(2.0 / math.pi) * math.exp(-0.5 * (m / s) ** 2) + m * math.erf(
            m / (s * math.sqrt(2.0))
        )

    def abs_cdf(self, a: float) -> float:
        if a <= 0:
            return 0.0
        if self.std == 0:
            return 1.0 if abs(self.mean) <= a else 0.0
        m, s = self.mean, self.std
        sq2 = math.sqrt(2.0)
        return 0.5 * (math.erf((a - m) / (s * sq2)) - math.erf((-a - m) / (s * sq2)))

    def abs_partial_mean(self, a: float) -> float:
        if a <= 0:
            return 0.0
        if self.std == 0:
            return abs(self.mean) if abs(self.mean) <= a else 0.0
        m, s = self.mean, self.std

        def phi(z):
            return math.exp(-0.5 * z * z) / math.sqrt(2.0 * math.pi)

        def Phi(z):
            return 0.5 * (1.0 + math.erf(z / math.sqrt(2.0)))

        def seg(lo, hi):  # E[Z ; lo <= Z <= hi]
            al, ah = (lo - m) / s, (hi - m) / s
            return m * (Phi(ah) - Phi(al)) - s * (phi(ah) - phi(al))

        return seg(0.0, a) - seg(-a, 0.0)

    def bounded_density(self) -> bool:
        return self.std > 0


@dataclass(frozen=True)
class ConstantJumps:
    """Deterministic jump size."""

    value: float

    def mean_abs(self) -> float:
        return abs(self.value)

    def abs_cdf(self, a: float) -> float:
        return 1.0 if abs(self.value) <= a else 0.0

    def abs_partial_mean(self, a: float) -> float:
        return abs(self.value) if abs(self.value) <= a else 0.0

    def bounded_density(self) -> bool:
        return False


JumpLaw = Union[ExponentialJumps, GaussianJumps, ConstantJumps]


# ---------------------------------------------------------------------------
# Levy measure specifications
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CompoundPoisson:
    """Finite-activity driver: Poisson arrivals with iid jump sizes.

    With ``two_sided=True`` every jump is negated with probability 1/2.
    """

    intensity: float
    jump_law: JumpLaw
    two_sided: bool = False

    def __post_init__(self):
        if not self.intensity >= 0:
            raise ValueError(f"jump intensity must be >= 0, got {self.intensity}")

    # Moments of the Levy measure nu(dz) = intensity * law(dz).  Random
    # sign flips leave |Z| invariant, so the formulas below hold in both
    # the one-sided and the symmetrized case.
    def mean_abs(self) -> float:
        """Integral of |z| nu(dz) over the real line."""
        return self.intensity * self.jump_law.mean_abs()

    def abs_moment_below(self, a: float) -> float:
        """Integral of |z| nu(dz) over {|z| <= a}."""
        return self.intensity * self.jump_law.abs_partial_mean(a)

    def tail_mass(self, a: float) -> float:
        """nu(|z| > a)."""
        return self.intensity * (1.0 - self.jump_law.abs_cdf(a))

    def small_ball_mass(self, a: float) -> float:
        """nu(|z| <= a)."""
        return self.intensity * self.jump_law.abs_cdf(a)


def stable_unit_scale(alpha: float) -> float:
    """Normalizer ``c_alpha`` relating the stable scale to the Levy density.

    A symmetric alpha-stable law with scale ``c_alpha`` (characteristic
    function ``exp(-c_alpha**alpha * |u|**alpha)``) has Levy measure exactly
    ``dz / |z|**(1 + alpha)``.  Uses the nonsingular representation
    ``c_alpha**alpha = pi / (Gamma(1 + alpha) * sin(pi * alpha / 2))``.
    """
    if not 0.0 < alpha < 2.0:
        raise ValueError(f"alpha must be in (0, 2), got {alpha}")
    return (math.pi / (math.gamma(1.0 + alpha) * math.sin(math.pi * alpha / 2.0))) ** (
        1.0 / alpha
    )


@dataclass(frozen=True)
class AlphaStable:
    """Symmetric alpha-stable driver.

    Increments over a step ``h`` have scale ``h**(1/alpha) * scale * c_alpha``
    where ``c_alpha`` is :func:`stable_unit_scale`; equivalently the Levy
    measure is ``scale**alpha * dz / |z|**(1 + alpha)``.
    """

    alpha: float
    scale: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.alpha < 2.0:
            raise ValueError(f"alpha must be in (0, 2), got {self.alpha}")
        if not self.scale > 0:
            raise ValueError(f"scale must be > 0, got {self.scale}")

    @property
    def density_factor(self) -> float:
        """Multiplier ``C`` in the Levy density ``C |z|**-(1+alpha)``."""
        return self.scale**self.alpha

    def mean_abs(self) -> float:
        return math.inf

    def abs_moment_below(self, a: float) -> float:
        if a <= 0:
            return 0.0
        if self.alpha >= 1.0:
            return math.inf
        return 2.0 * self.density_factor * a ** (1.0 - self.alpha) / (1.0 - self.alpha)

    def tail_mass(self, a: float) -> float:
        if a <= 0:
            return math.inf
        return 2.0 * self.density_factor * a ** (-self.alpha) / self.alpha

    def small_ball_mass(self, a: float) -> float:
        return math.inf


@dataclass(frozen=True)
class TemperedStable:
    """Two-sided tempered stable driver.

    Levy density ``normalizer * |z|**-(1+alpha) * exp(-tempering * |z|)``
    with ``alpha`` in (0, 1), so the jump part has finite variation.
    """

    alpha: float
    tempering: float
    normalizer: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"tempered stable alpha must be in (0, 1), got {self.alpha}")
        if not self.tempering > 0:
            raise ValueError(f"tempering must be > 0, got {self.tempering}")
        if not self.normalizer >= 0:
            raise ValueError(f"normalizer must be >= 0, got {self.normalizer}")

    def density(self, z: float) -> float:
        az = abs(z)
        if az == 0:
            return math.inf
        return self.normalizer * az ** (-1.0 - self.alpha) * math.exp(-self.tempering * az)

    def mean_abs(self) -> float:
        a, lam, c = self.alpha, self.tempering, self.normalizer
        return 2.0 * c * math.gamma(1.0 - a) * lam ** (a - 1.0)

    def abs_moment_below(self, a: float) -> float:
        if a <= 0 or self.normalizer == 0:
            return 0.0
        val, _ = integrate.quad(
            lambda z: 2.0 * self.normalizer * z**-self.alpha * math.exp(-self.tempering * z),
            0.0,
            a,
        )
        return val

    def tail_mass(self, a: float) -> float:
        if a <= 0:
            return math.inf
        if self.normalizer == 0:
            return 0.0
        val, _ = integrate.quad(
            lambda z: 2.0 * self.normalizer * z ** (-1.0 - self.alpha) * math.exp(-self.tempering * z),
            a,
            math.inf,
        )
        return val

    def small_ball_mass(self, a: float) -> float:
        return math.inf if self.normalizer > 0 else 0.0


LevyMeasureSpec = Union[CompoundPoisson, AlphaStable, TemperedStable]


# ---------------------------------------------------------------------------
# drift / diffusion specifications
# ---------------------------------------------------------------------------


def _fd_steps(theta: np.ndarray) -> np.ndarray:
    return 1e-6 * (1.0 + np.abs(theta))


@dataclass
class DriftSpec:
    """Parametric drift ``b(theta, x)`` with optional closed-form derivatives.

    ``fn(theta, x)`` must broadcast over ``x``.  ``grad`` returns an array of
    shape ``(param_dim,) + shape(x)``; when missing, central finite
    differences with steps ``1e-6 * (1 + |theta_i|)`` are used.
    """

    param_dim: int
    fn: Callable[[np.ndarray, np.ndarray], np.ndarray]
    grad: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = None
    hess: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = None
    name: str = "drift"

    @property
    def has_closed_gradient(self) -> bool:
        return self.grad is not None

    def value(self, theta: np.ndarray, x) -> np.ndarray:
        return self.fn(np.asarray(theta, dtype=float), x)

    def gradient(self, theta: np.ndarray, x) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        if self.grad is not None:
            return self.grad(theta, x)
        steps = _fd_steps(theta)
        rows = []
        for j in range(self.param_dim):
            tp, tm = theta.copy(), theta.copy()
            tp[j] += steps[j]
            tm[j] -= steps[j]
            rows.append((self.fn(tp, x) - self.fn(tm, x)) / (2.0 * steps[j]))
        return np.stack([np.asarray(r, dtype=float) for r in rows])

    def hessian(self, theta: np.ndarray, x) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        if self.hess is not None:
            return self.hess(theta, x)
        steps = _fd_steps(theta)
        rows = []
        for j in range(self.param_dim):
            tp, tm = theta.copy(), theta.copy()
            tp[j] += steps[j]
            tm[j] -= steps[j]
            rows.append((self.gradient(tp, x) - self.gradient(tm, x)) / (2.0 * steps[j]))
        h = np.stack(rows)
        return 0.5 * (h + np.swapaxes(h, 0, 1))


@dataclass
class DiffusionSpec:
    """Diffusion coefficient ``sigma(x)`` (state-dependent, nonnegative)."""

    fn: Callable[[np.ndarray], np.ndarray]
    name: str = "sigma"

    def value(self, x) -> np.ndarray:
        return self.fn(x)

    def sigma_sq(self, x) -> np.ndarray:
        s = np.asarray(self.fn(x), dtype=float)
        return s * s


@dataclass
class ParametricModel:
    """Bundle of drift, diffusion, jump coefficient and driving Levy measure."""

    name: str
    drift: DriftSpec
    diffusion: DiffusionSpec
    levy: Optional[LevyMeasureSpec] = None
    gamma: Optional[Callable[[np.ndarray], np.ndarray]] = None  # None => identically 1
    bounds: Optional[np.ndarray] = None
    kernel_id: Optional[int] = None  # compiled-kernel dispatch for built-ins
    sigma_param: Optional[float] = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        d = self.drift.param_dim
        if self.bounds is None:
            self.bounds = np.array([[-DEFAULT_BOUND, DEFAULT_BOUND]] * d, dtype=float)
        else:
            self.bounds = np.asarray(self.bounds, dtype=float).reshape(d, 2)
            if np.any(self.bounds[:, 0] >= self.bounds[:, 1]):
                raise ValueError("each bounds row must satisfy lo < hi")

    @property
    def param_dim(self) -> int:
        return self.drift.param_dim

    def gamma_value(self, x) -> np.ndarray:
        if self.gamma is None:
            return np.ones_like(np.asarray(x, dtype=float))
        return np.asarray(self.gamma(x), dtype=float)


def validate_theta(model: ParametricModel, theta, clip: bool = False) -> np.ndarray:
    """Coerce ``theta`` to a parameter vector of the model, checking bounds."""
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    if theta.shape != (model.param_dim,):
        raise ValueError(
            f"theta must have shape ({model.param_dim},) for model "
            f"'{model.name}', got {theta.shape}"
        )
    if not np.all(np.isfinite(theta)):
        raise ValueError("theta must be finite")
    lo, hi = model.bounds[:, 0], model.bounds[:, 1]
    if clip:
        return np.clip(theta, lo, hi)
    if np.any(theta < lo) or np.any(theta > hi):
        raise ValueError(f"theta {theta.tolist()} outside bounds {model.bounds.tolist()}")
    return theta


# ---------------------------------------------------------------------------
# built-in models
# ---------------------------------------------------------------------------


def _const_sigma_spec(sigma: float) -> DiffusionSpec:
    if not sigma > 0:
        raise ValueError(f"sigma must be > 0, got {sigma}")

    def fn(x):
        return np.full_like(np.asarray(x, dtype=float), sigma)

    return DiffusionSpec(fn=fn, name=f"const({sigma})")


def ou_model(
    sigma: float = 1.0,
    levy: Optional[LevyMeasureSpec] = None,
    bounds=None,
) -> ParametricModel:
    """Linear mean-reverting model ``b(theta, x) = theta[1] - theta[0] * x``."""

    def fn(theta, x):
        x = np.asarray(x, dtype=float)
        return theta[1] - theta[0] * x

    def grad(theta, x):
        x = np.asarray(x, dtype=float)
        return np.stack([-x, np.ones_like(x)])

    def hess(theta, x):
        x = np.asarray(x, dtype=float)
        return np.zeros((2, 2) + x.shape)

    drift = DriftSpec(param_dim=2, fn=fn, grad=grad, hess=hess, name="ou")
    return ParametricModel(
        name="ou",
        drift=drift,
        diffusion=_const_sigma_spec(sigma),
        levy=levy,
        bounds=bounds,
        kernel_id=KERNEL_OU,
        sigma_param=float(sigma),
        meta={"kind": "ou", "sigma": float(sigma)},
    )


def cir_model(
    sigma: float = 0.25,
    levy: Optional[LevyMeasureSpec] = None,
    bounds=None,
) -> ParametricModel:
    """Square-root model ``b(theta, x) = theta[0] - theta[1] * x``.

    Diffusion ``sigma * sqrt(max(x, 0))`` (full truncation below zero).
    """
    if not sigma > 0:
        raise ValueError(f"sigma must be > 0, got {sigma}")

    def fn(theta, x):
        x = np.asarray(x, dtype=float)
        return theta[0] - theta[1] * x

    def grad(theta, x):
        x = np.asarray(x, dtype=float)
        return np.stack([np.ones_like(x), -x])

    def hess(theta, x):
        x = np.asarray(x, dtype=float)
        return np.zeros((2, 2) + x.shape)

    def sig(x):
        x = np.asarray(x, dtype=float)
        return sigma * np.sqrt(np.maximum(x, 0.0))

    drift = DriftSpec(param_dim=2, fn=fn, grad=grad, hess=hess, name="cir")
    return ParametricModel(
        name="cir",
        drift=drift,
        diffusion=DiffusionSpec(fn=sig, name=f"sqrt({sigma})"),
        levy=levy,
        bounds=bounds,
        kernel_id=KERNEL_CIR,
        sigma_param=float(sigma),
        meta={"kind": "cir", "sigma": float(sigma)},
    )


def hyperbolic_model(
    sigma: float = 1.0,
    levy: Optional[LevyMeasureSpec] = None,
    bounds=None,
) -> ParametricModel:
    """Bounded-drift model ``b(theta, x) = -theta[0] * x / sqrt(1 + x**2)``."""

    def fn(theta, x):
        x = np.asarray(x, dtype=float)
        return -theta[0] * x / np.sqrt(1.0 + x * x)

    def grad(theta, x):
        x = np.asarray(x, dtype=float)
        return np.stack([-x / np.sqrt(1.0 + x * x)])

    def hess(theta, x):
        x = np.asarray(x, dtype=float)
        return np.zeros((1, 1) + x.shape)

    drift = DriftSpec(param_dim=1, fn=fn, grad=grad, hess=hess, name="hyperbolic")
    return ParametricModel(
        name="hyperbolic",
        drift=drift,
        diffusion=_const_sigma_spec(sigma),
        levy=levy,
        bounds=bounds,
        kernel_id=KERNEL_HYPERBOLIC,
        sigma_param=float(sigma),
        meta={"kind": "hyperbolic", "sigma": float(sigma)},
    )


MODEL_BUILDERS = {
    "ou": ou_model,
    "cir": cir_model,
    "hyperbolic": hyperbolic_model,
}


def get_model(name: str, **kwargs) -> ParametricModel:
    """Instantiate a built-in model by name.

    Raises
    ------
    ValueError
        If ``name`` is not a known built-in model.
    """
    try:
        builder = MODEL_BUILDERS[name]
    except KeyError:
        raise ValueError(
            f"unknown model '{name}'; available: {sorted(MODEL_BUILDERS)}"
        ) from None
    return builder(**kwargs)


# ---------------------------------------------------------------------------
# JSON serialization
# ---------------------------------------------------------------------------


def levy_to_dict(levy: Optional[LevyMeasureSpec]) -> Optional[dict]:
    if levy is None:
        return None
    if isinstance(levy, CompoundPoisson):
        law = levy.jump_law
        if isinstance(law, ExponentialJumps):
            law_d = {"type": "exponential", "rate": law.rate}
        elif isinstance(law, GaussianJumps):
            law_d = {"type": "gaussian", "mean": law.mean, "std": law.std}
        elif isinstance(law, ConstantJumps):
            law_d = {"type": "constant", "value": law.value}
        else:  # pragma: no cover - union is closed
            raise TypeError(f"unserializable jump law {law!r}")
        return {
            "type": "compound_poisson",
            "intensity": levy.intensity,
            "jump_law": law_d,
            "two_sided": levy.two_sided,
        }
    if isinstance(levy, AlphaStable):
        return {"type": "alpha_stable", "alpha": levy.alpha, "scale": levy.scale}
    if isinstance(levy, TemperedStable):
        return {
            "type": "tempered_stable",
            "alpha": levy.alpha,
            "tempering": levy.tempering,
            "normalizer": levy.normalizer,
        }
    raise TypeError(f"unserializable Levy spec {levy!r}")


def levy_from_dict(d: Optional[dict]) -> Optional[LevyMeasureSpec]:
    if d is None:
        return None
    kind = d.get("type")
    if kind == "compound_poisson":
        law_d = d["jump_law"]
        law_kind = law_d.get("type")
        if law_kind == "exponential":
            law: JumpLaw = ExponentialJumps(rate=float(law_d["rate"]))
        elif law_kind == "gaussian":
            law = GaussianJumps(mean=float(law_d["mean"]), std=float(law_d["std"]))
        elif law_kind == "constant":
            law = ConstantJumps(value=float(law_d["value"]))
        else:
            raise ValueError(f"unknown jump law type {law_kind!r}")
        return CompoundPoisson(
            intensity=float(d["intensity"]),
            jump_law=law,
            two_sided=bool(d.get("two_sided", False)),
        )
    if kind == "alpha_stable":
        return AlphaStable(alpha=float(d["alpha"]), scale=float(d.get("scale", 1.0)))
    if kind == "tempered_stable":
        return TemperedStable(
            alpha=float(d["alpha"]),
            tempering=float(d["tempering"]),
            normalizer=float(d.get("normalizer", 1.0)),
        )
    raise ValueError(f"unknown Levy spec type {kind!r}")


def model_to_json(model: ParametricModel) -> str:
    """Serialize a built-in model to JSON (custom callables cannot round-trip)."""
    if "kind" not in model.meta:
        raise ValueError(
            "only models created by the built-in builders can be serialized"
        )
    doc = {
        "name": model.meta["kind"],
        "sigma": model.meta["sigma"],
        "levy": levy_to_dict(model.levy),
        "bounds": np.asarray(model.bounds).tolist(),
    }
    return json.dumps(doc, indent=2, sort_keys=True)


def model_from_json(text: str) -> ParametricModel:
    doc = json.loads(text)
    name = doc.get("name")
    if name not in MODEL_BUILDERS:
        raise ValueError(f"unknown model '{name}'; available: {sorted(MODEL_BUILDERS)}")
    return get_model(
        name,
        sigma=float(doc.get("sigma", 1.0)),
        levy=levy_from_dict(doc.get("levy")),
        bounds=doc.get("bounds"),
    )


# ---------------------------------------------------------------------------
# model checking
# ---------------------------------------------------------------------------


@dataclass
class ModelCheckReport:
    ok: bool
    max_grad_error: float
    max_hessian_asymmetry: float
    sigma_min: float
    gamma_min: float
    notes: list

    def __str__(self):
        lines = [
            f"ok: {self.ok}",
            f"max gradient error: {self.max_grad_error:.3e}",
            f"max Hessian asymmetry: {self.max_hessian_asymmetry:.3e}",
            f"min sigma over probes: {self.sigma_min:.3e}",
            f"min gamma over probes: {self.gamma_min:.3e}",
        ]
        lines += [f"note: {n}" for n in self.notes]
        return "\n".join(lines)


def check_model(
    model: ParametricModel,
    probes: int = 25,
    seed: int = 0,
    x_scale: float = 2.0,
) -> ModelCheckReport:
    """Probe a model for implementation errors.

    Checks closed-form gradients against central finite differences at
    random probe points, scans ``sigma`` for degeneracy, and verifies the
    Hessian is symmetric.  Deterministic given ``seed``.
    """
    from ._rng import derive_seed, make_rng

    rng = make_rng(derive_seed(seed, 0))
    notes = []
    d = model.param_dim
    lo = np.maximum(model.bounds[:, 0], -5.0)
    hi = np.minimum(model.bounds[:, 1], 5.0)

    max_grad_err = 0.0
    max_asym = 0.0
    for _ in range(probes):
        theta = rng.uniform(lo, hi)
        x = float(rng.normal(0.0, x_scale))
        if model.name == "cir":
            x = abs(x) + 1e-3  # probe the natural state space
        g = np.asarray(model.drift.gradient(theta, x), dtype=float).reshape(d)
        steps = _fd_steps(theta)
        fd = np.empty(d)
        for j in range(d):
            tp, tm = theta.copy(), theta.copy()
            tp[j] += steps[j]
            tm[j] -= steps[j]
            fd[j] = (model.drift.value(tp, x) - model.drift.value(tm, x)) / (2 * steps[j])
        err = np.max(np.abs(g - fd)) / (1.0 + np.max(np.abs(g)))
        max_grad_err = max(max_grad_err, float(err))
        h = np.asarray(model.drift.hessian(theta, x), dtype=float).reshape(d, d)
        max_asym = max(max_asym, float(np.max(np.abs(h - h.T))))

    xs = rng.normal(0.0, x_scale, size=200)
    if model.name == "cir":
        xs = np.abs(xs)
    # always probe the origin, the canonical degeneracy point
    xs[0] = 0.0
    sig = np.asarray(model.diffusion.value(xs), dtype=float)
    sigma_min = float(np.min(sig))
    gam = model.gamma_value(xs)
    gamma_min = float(np.min(np.abs(gam)))

    ok = True
    if max_grad_err > 1e-5:
        ok = False
        notes.append(f"gradient mismatch vs finite differences ({max_grad_err:.2e})")
    if max_asym > 1e-8:
        ok = False
        notes.append(f"Hessian asymmetry {max_asym:.2e}")
    if sigma_min <= 1e-8:
        notes.append(
            "sigma vanishes on the probe set (state-space boundary); "
            "increments at such states carry no likelihood information"
        )
    if gamma_min < 1.0:
        notes.append(
            f"min |gamma| = {gamma_min:.3g} < 1; jump-filter thresholds assume "
            "gamma bounded away from zero"
        )
    return ModelCheckReport(
        ok=ok,
        max_grad_error=max_grad_err,
        max_hessian_asymmetry=max_asym,
        sigma_min=sigma_min,
        gamma_min=gamma_min,
        notes=notes,
    )
