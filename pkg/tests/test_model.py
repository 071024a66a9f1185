"""Model declarations: builtin drifts, jump-law moments, serialization, checks."""

import math

import numpy as np
import pytest
from scipy import integrate, stats

from helpers import cp_exp, fd_gradient
from levydrift.model import (
    AlphaStable,
    CompoundPoisson,
    ConstantJumps,
    DEFAULT_BOUND,
    DiffusionSpec,
    DriftSpec,
    ExponentialJumps,
    GaussianJumps,
    ParametricModel,
    TemperedStable,
    check_model,
    cir_model,
    get_model,
    hyperbolic_model,
    levy_from_dict,
    levy_to_dict,
    model_from_json,
    model_to_json,
    ou_model,
    stable_unit_scale,
    validate_theta,
)

# ---------------------------------------------------------------------------
# builtin drifts: hand-checked values
# ---------------------------------------------------------------------------


def test_ou_drift_values():
    m = ou_model(sigma=1.0)
    th = np.array([2.0, 0.0])
    assert m.drift.fn(th, 1.0) == -2.0  # theta2 - theta1*x
    assert np.array_equal(m.drift.grad(th, 3.0), [-3.0, 1.0])
    assert m.param_dim == 2


def test_ou_constant_diffusion():
    m = ou_model(sigma=0.5)
    assert m.diffusion.fn(7.0) == 0.5
    assert m.diffusion.sigma_sq(7.0) == 0.25


def test_cir_drift_and_diffusion():
    m = cir_model(sigma=0.25)
    assert m.drift.fn(np.array([0.1, 2.0]), 1.0) == pytest.approx(-1.9)
    assert m.diffusion.fn(4.0) == pytest.approx(0.5)  # 0.25 * sqrt(4)
    # full truncation at the boundary
    assert m.diffusion.fn(-1.0) == 0.0
    vals = m.diffusion.sigma_sq(np.array([-0.1, 0.0, 0.5]))
    assert np.allclose(vals, [0.0, 0.0, 0.25**2 * 0.5], atol=1e-15)
    assert vals[0] == 0.0 and vals[1] == 0.0


def test_cir_diffusion_increasing_on_positive_axis():
    m = cir_model(sigma=0.3)
    xs = np.linspace(0.01, 5.0, 50)
    vals = m.diffusion.sigma_sq(xs)
    assert np.all(np.diff(vals) > 0)


def test_hyperbolic_drift_values():
    m = hyperbolic_model(sigma=1.0)
    th = np.array([2.0])
    assert m.drift.fn(th, 0.0) == 0.0
    assert m.drift.fn(th, 1.0) == pytest.approx(-math.sqrt(2.0))
    assert m.drift.grad(th, 1.0) == pytest.approx([-1.0 / math.sqrt(2.0)])
    assert m.param_dim == 1


@pytest.mark.parametrize("builder", [ou_model, cir_model, hyperbolic_model])
def test_builders_reject_nonpositive_sigma(builder):
    with pytest.raises(ValueError, match="sigma must be > 0"):
        builder(sigma=0.0)


def test_builtin_gamma_is_one():
    xs = np.array([-2.0, 0.0, 3.5])
    for builder in (ou_model, cir_model, hyperbolic_model):
        m = builder(sigma=1.0)
        assert m.gamma is None
        assert np.array_equal(m.gamma_value(xs), np.ones(3))


def test_default_bounds():
    m = ou_model(sigma=1.0)
    assert np.array_equal(m.bounds, [[-DEFAULT_BOUND, DEFAULT_BOUND]] * 2)


# ---------------------------------------------------------------------------
# gradients and Hessians vs finite differences
# ---------------------------------------------------------------------------


@pytest.mark.parametrize(
    "model,theta",
    [
        (ou_model(sigma=1.0), np.array([1.3, -0.7])),
        (cir_model(sigma=0.25), np.array([0.4, 2.2])),
        (hyperbolic_model(sigma=0.85), np.array([1.7])),
    ],
    ids=["ou", "cir", "hyperbolic"],
)
def test_drift_gradient_matches_finite_differences(model, theta):
    rng = np.random.default_rng(11)
    for x in rng.normal(0.5, 2.0, size=25):
        g = model.drift.grad(theta, x)
        g_fd = fd_gradient(lambda th: model.drift.fn(th, x), theta)
        assert np.allclose(g, g_fd, rtol=1e-5, atol=1e-8)
        h = model.drift.hess(theta, x)
        assert np.array_equal(h, h.T)


def test_builtin_hessians_vanish():
    # all three builtin drifts are linear in theta
    for m, th in (
        (ou_model(sigma=1.0), np.array([1.0, 2.0])),
        (cir_model(sigma=0.25), np.array([1.0, 2.0])),
        (hyperbolic_model(sigma=1.0), np.array([2.0])),
    ):
        assert np.all(m.drift.hess(th, 0.7) == 0.0)


# ---------------------------------------------------------------------------
# jump-law moments against quadrature / closed forms
# ---------------------------------------------------------------------------


def test_exponential_jump_moments():
    law = ExponentialJumps(1.5)
    assert law.mean_abs() == pytest.approx(1.0 / 1.5)
    assert law.abs_cdf(1.0) == pytest.approx(1.0 - math.exp(-1.5))
    # E[|Z| ; |Z| <= 1] by quadrature
    ref, _ = integrate.quad(lambda z: z * 1.5 * math.exp(-1.5 * z), 0.0, 1.0)
    assert law.abs_partial_mean(1.0) == pytest.approx(ref, rel=1e-10)
    assert law.bounded_density()


def test_gaussian_jump_moments():
    law = GaussianJumps(0.5, 2.0)
    ref, _ = integrate.quad(lambda z: abs(z) * stats.norm.pdf(z, 0.5, 2.0), -40.0, 40.0)
    assert law.mean_abs() == pytest.approx(ref, rel=1e-9)
    ref_cdf, _ = integrate.quad(lambda z: stats.norm.pdf(z, 0.5, 2.0), -1.0, 1.0)
    assert law.abs_cdf(1.0) == pytest.approx(ref_cdf, rel=1e-9)
    assert law.bounded_density()


def test_constant_jump_moments():
    law = ConstantJumps(2.5)
    assert law.mean_abs() == 2.5
    assert law.abs_cdf(2.0) == 0.0
    assert law.abs_cdf(3.0) == 1.0
    assert not law.bounded_density()


def test_compound_poisson_aggregates_intensity():
    cp = CompoundPoisson(6.0, ExponentialJumps(1.5))
    assert cp.mean_abs() == pytest.approx(6.0 / 1.5)
    assert cp.tail_mass(0.0) == pytest.approx(6.0)


def test_tempered_stable_levy_moments_vs_quadrature():
    spec = TemperedStable(0.2, 1.0, 1.0)
    # two-sided density C |z|^{-1-a} e^{-l|z|}
    ref, _ = integrate.quad(lambda z: z * z**(-1.2) * math.exp(-z), 0.0, np.inf)
    assert spec.mean_abs() == pytest.approx(2.0 * ref, rel=1e-8)
    assert spec.mean_abs() == pytest.approx(2.0 * math.gamma(0.8), rel=1e-10)
    ref_below, _ = integrate.quad(lambda z: z * z**(-1.2) * math.exp(-z), 0.0, 0.1)
    assert spec.abs_moment_below(0.1) == pytest.approx(2.0 * ref_below, rel=1e-6)
    assert spec.density(0.5) == pytest.approx(0.5**(-1.2) * math.exp(-0.5), rel=1e-12)


def test_tempered_stable_requires_alpha_below_one():
    with pytest.raises(ValueError):
        TemperedStable(1.2, 1.0, 1.0)


def test_alpha_stable_small_jump_moments():
    spec = AlphaStable(0.5, 1.0)
    # nu(dz) = dz/|z|^{1+a} scaled: first absolute moment below r is finite for a<1
    ref, _ = integrate.quad(lambda z: z * spec.density_factor * z**(-1.5), 0.0, 0.3)
    assert spec.abs_moment_below(0.3) == pytest.approx(2.0 * ref, rel=1e-8)
    # infinite-variation index: first moment of small jumps diverges
    assert math.isinf(AlphaStable(1.5, 1.0).abs_moment_below(0.3))


def test_stable_unit_scale_reference_values():
    assert stable_unit_scale(1.0) == pytest.approx(math.pi, rel=1e-9)
    for alpha, ref in ((0.5, 25.132741), (0.7, 6.938313), (1.5, 2.235386), (1.99, 10.163509)):
        assert stable_unit_scale(alpha) == pytest.approx(ref, rel=1e-5)


# ---------------------------------------------------------------------------
# validation and lookup
# ---------------------------------------------------------------------------


def test_validate_theta_accepts_interior_point():
    m = ou_model(sigma=1.0)
    validate_theta(m, np.array([2.0, 0.0]))  # no raise


def test_validate_theta_rejects_out_of_bounds():
    m = ou_model(sigma=1.0)
    with pytest.raises(ValueError, match="outside bounds"):
        validate_theta(m, [60.0, 0.0])
    with pytest.raises(ValueError, match=r"shape \(2,\)"):
        validate_theta(m, [1.0])


def test_get_model_dispatch_and_error():
    m = get_model("ou", sigma=0.7)
    assert m.name == "ou"
    assert m.diffusion.fn(0.0) == 0.7
    with pytest.raises(ValueError, match="unknown model 'nosuch'"):
        get_model("nosuch")


# ---------------------------------------------------------------------------
# serialization round trips
# ---------------------------------------------------------------------------


@pytest.mark.parametrize(
    "levy",
    [
        CompoundPoisson(6.0, ExponentialJumps(1.5)),
        CompoundPoisson(2.0, GaussianJumps(0.0, 1.0), two_sided=True),
        CompoundPoisson(1.0, ConstantJumps(2.5)),
        AlphaStable(0.5, 0.3),
        TemperedStable(0.2, 1.0, 0.25),
        None,
    ],
)
def test_levy_dict_round_trip(levy):
    assert levy_from_dict(levy_to_dict(levy)) == levy


def test_levy_dict_schema():
    d = levy_to_dict(CompoundPoisson(6.0, ExponentialJumps(1.5)))
    assert d == {
        "type": "compound_poisson",
        "intensity": 6.0,
        "jump_law": {"type": "exponential", "rate": 1.5},
        "two_sided": False,
    }


def test_model_json_round_trip():
    m = cir_model(sigma=0.25, levy=cp_exp(1.0, 0.6))
    m2 = model_from_json(model_to_json(m))
    assert m2.name == "cir"
    assert m2.sigma_param == 0.25
    assert m2.levy == m.levy
    assert np.array_equal(m2.bounds, m.bounds)
    th = np.array([0.1, 2.0])
    for x in (0.3, 1.0, 4.0):
        assert m2.drift.fn(th, x) == m.drift.fn(th, x)
        assert m2.diffusion.fn(x) == m.diffusion.fn(x)


# ---------------------------------------------------------------------------
# check_model diagnostics
# ---------------------------------------------------------------------------


def test_check_model_passes_builtins():
    rep = check_model(ou_model(sigma=1.0), 100, 7)
    assert rep.ok
    assert rep.max_grad_error < 1e-6
    assert rep.max_hessian_asymmetry == 0.0
    rep_h = check_model(hyperbolic_model(sigma=1.0), 1000, 1)
    assert rep_h.ok


def test_check_model_flags_cir_boundary():
    rep = check_model(cir_model(sigma=0.25))
    assert rep.ok
    assert rep.sigma_min == 0.0
    assert any("sigma vanishes" in note for note in rep.notes)


def test_check_model_flags_degenerate_user_diffusion():
    # sigma(x) = x violates the uniform non-degeneracy bound near 0
    base = ou_model(sigma=1.0)
    degen = ParametricModel(
        name="user",
        drift=base.drift,
        diffusion=DiffusionSpec(fn=lambda x: np.abs(x), name="abs(x)"),
        levy=None,
        gamma=None,
        bounds=base.bounds,
        kernel_id=None,
        sigma_param=None,
        meta={},
    )
    rep = check_model(degen, 200, 3)
    assert rep.sigma_min == 0.0
    assert any("sigma vanishes" in note for note in rep.notes)
