"""Path simulation: Euler scheme, jump sampling, decomposition, CSV round trips."""

import io
import math

import numpy as np
import pytest
from scipy import integrate

import levydrift.simulate as sim
from helpers import cp_exp, std_ou
from levydrift._rng import derive_seed, make_rng
from levydrift.model import (
    AlphaStable,
    CompoundPoisson,
    ConstantJumps,
    DiffusionSpec,
    DriftSpec,
    ExponentialJumps,
    ParametricModel,
    TemperedStable,
    cir_model,
    ou_model,
    stable_unit_scale,
)
from levydrift.simulate import (
    Observations,
    SamplePath,
    SimulationDivergedError,
    discard_initial,
    euler_drive,
    read_observations_csv,
    read_path_csv,
    sample_compound_poisson_segment,
    sample_stable_increment,
    sample_tempered_stable_increment,
    simulate_path,
    subsample,
    tempered_floor,
    write_observations_csv,
    write_path_csv,
)

THETA = np.array([2.0, 0.0])


# ---------------------------------------------------------------------------
# decomposition and determinism
# ---------------------------------------------------------------------------


def test_decomposition_identity_holds_to_rounding():
    m = std_ou()
    p = simulate_path(m, THETA, 1.0, 10.0, 5000, seed=derive_seed(1, 0))
    assert p.cont_part[0] == p.values[0]
    assert p.jump_part[0] == 0.0
    gap = np.abs(p.values - (p.cont_part + p.jump_part))
    assert gap.max() < 1e-12


def test_same_seed_gives_bitwise_identical_paths():
    m = std_ou()
    p1 = simulate_path(m, THETA, 1.0, 5.0, 2000, seed=123)
    p2 = simulate_path(m, THETA, 1.0, 5.0, 2000, seed=123)
    assert np.array_equal(p1.values, p2.values)
    assert np.array_equal(p1.cont_part, p2.cont_part)
    assert np.array_equal(p1.jump_events, p2.jump_events)


def test_different_seeds_give_different_paths():
    m = std_ou()
    p1 = simulate_path(m, THETA, 1.0, 5.0, 2000, seed=123)
    p2 = simulate_path(m, THETA, 1.0, 5.0, 2000, seed=124)
    assert not np.array_equal(p1.values, p2.values)


def test_numba_and_pure_python_kernels_agree_bitwise(monkeypatch):
    if not sim.HAVE_NUMBA:
        pytest.skip("compiled kernel unavailable")
    m = cir_model(sigma=0.25, levy=cp_exp(1.0, 0.6))
    th = np.array([0.1, 2.0])
    fast = simulate_path(m, th, 0.5, 5.0, 2000, seed=99)
    monkeypatch.setattr(sim, "HAVE_NUMBA", False)
    slow = simulate_path(m, th, 0.5, 5.0, 2000, seed=99)
    assert np.array_equal(fast.values, slow.values)
    assert np.array_equal(fast.cont_part, slow.cont_part)
    assert np.array_equal(fast.jump_events, slow.jump_events)


def test_static_model_gives_constant_path():
    flat = ParametricModel(
        name="flat",
        drift=DriftSpec(
            param_dim=1,
            fn=lambda th, x: 0.0,
            grad=lambda th, x: np.zeros(1),
            hess=lambda th, x: np.zeros((1, 1)),
            name="zero",
        ),
        diffusion=DiffusionSpec(fn=lambda x: 0.0 * x, name="zero"),
        levy=None,
        gamma=None,
        bounds=np.array([[-1.0, 1.0]]),
        kernel_id=None,
        sigma_param=None,
        meta={},
    )
    p = simulate_path(flat, np.array([0.0]), 3.0, 2.0, 50, seed=5)
    assert np.all(p.values == 3.0)
    assert np.all(p.jump_part == 0.0)


def test_no_levy_means_no_jumps():
    m = ou_model(sigma=0.85)
    p = simulate_path(m, THETA, 1.0, 5.0, 2000, seed=7)
    assert np.all(p.jump_part == 0.0)
    assert p.jump_events.shape == (0, 2)


def test_divergence_guard_reports_step():
    # theta1 < 0 makes the drift explosive
    m = ou_model(sigma=0.001)
    with pytest.raises(SimulationDivergedError, match=r"diverged for model 'ou' at step 567 \(t = 5\.67\)"):
        simulate_path(m, np.array([-5.0, 0.0]), 1.0, 10.0, 1000, seed=1)


# ---------------------------------------------------------------------------
# euler_drive: single-step arithmetic and refinement consistency
# ---------------------------------------------------------------------------


def test_euler_drive_single_step_hand_check():
    m = ou_model(sigma=1.0)
    values, cont, jump, sizes, lumps = euler_drive(m, THETA, 1.0, 0.01, np.array([0.5]))
    # X1 = x0 + b*h + sigma*sqrt(h)*z = 1 - 0.02 + 0.05
    assert values[1] == pytest.approx(1.03, abs=1e-15)
    assert jump[1] == 0.0


def test_euler_drive_rejects_misaligned_jump_arrays():
    m = ou_model(sigma=1.0)
    z = np.zeros(4)
    with pytest.raises(ValueError):
        euler_drive(m, THETA, 1.0, 0.1, z,
                    jump_steps=np.array([1]), jump_offsets=np.array([0.05, 0.07]),
                    jump_sizes=np.array([1.0]))
    with pytest.raises(ValueError):
        euler_drive(m, THETA, 1.0, 0.1, z, step_lumps=np.zeros(3))


def test_euler_refinement_errors_shrink_at_strong_order_half():
    # same Brownian path aggregated across dyadic levels; CIR diffusion
    m = cir_model(sigma=0.5)
    theta = np.array([0.6, 2.0])
    kmax = 14
    levels = [8, 10, 12, 14]
    errs = {k: [] for k in levels[:-1]}
    for pidx in range(200):
        rng = make_rng(derive_seed(2468, pidx))
        z_fine = rng.standard_normal(2**kmax)
        finals = {}
        for k in levels:
            mfac = 2 ** (kmax - k)
            z = z_fine.reshape(2**k, mfac).sum(axis=1) / np.sqrt(mfac)
            vals, *_ = euler_drive(m, theta, 0.3, 1.0 / 2**k, z)
            finals[k] = vals[-1]
        for k in levels[:-1]:
            errs[k].append(abs(finals[k] - finals[k + 2]))
    means = [float(np.mean(errs[k])) for k in levels[:-1]]
    assert means[0] > means[1] > means[2]
    # strong order 1/2: one refinement by 4 should halve the error, roughly
    for a, b in zip(means, means[1:]):
        assert 1.0 < a / b < 4.0


# ---------------------------------------------------------------------------
# compound-Poisson segment sampler
# ---------------------------------------------------------------------------


def test_cp_segment_zero_intensity_is_empty():
    rng = make_rng(1)
    off, sz = sample_compound_poisson_segment(CompoundPoisson(0.0, ExponentialJumps(1.0)), 1.0, rng)
    assert off.size == 0 and sz.size == 0


def test_cp_segment_offsets_sorted_within_step():
    spec = CompoundPoisson(50.0, ExponentialJumps(1.0))
    rng = make_rng(2)
    off, sz = sample_compound_poisson_segment(spec, 0.25, rng)
    assert off.size == sz.size > 0
    assert np.all((off > 0) & (off <= 0.25))
    assert np.all(np.diff(off) >= 0)
    assert np.all(sz > 0)


def test_cp_segment_two_sided_changes_signs():
    spec = CompoundPoisson(200.0, ExponentialJumps(1.0), two_sided=True)
    rng = make_rng(3)
    _, sz = sample_compound_poisson_segment(spec, 1.0, rng)
    assert np.any(sz > 0) and np.any(sz < 0)


def test_cp_segment_count_and_size_moments():
    spec = CompoundPoisson(6.0, ExponentialJumps(1.0))
    rng = make_rng(derive_seed(777, 0))
    n_seg = 100_000
    counts = np.empty(n_seg)
    sizes = []
    for i in range(n_seg):
        off, sz = sample_compound_poisson_segment(spec, 1.0, rng)
        counts[i] = off.size
        if off.size:
            sizes.append(sz)
    sizes = np.concatenate(sizes)
    # 3 sigma MC bands around Poisson(6) count mean and Exp(1) size mean
    assert abs(counts.mean() - 6.0) < 3.0 * math.sqrt(6.0 / n_seg)
    assert abs(sizes.mean() - 1.0) < 3.0 / math.sqrt(sizes.size)


# ---------------------------------------------------------------------------
# alpha-stable increment sampler
# ---------------------------------------------------------------------------


def test_stable_rejects_bad_alpha():
    rng = make_rng(1)
    for alpha in (0.0, 2.0, -0.5, 2.5):
        with pytest.raises(ValueError):
            sample_stable_increment(alpha, 1.0, 1.0, rng)


def test_stable_cauchy_median_is_centered():
    rng = make_rng(derive_seed(888, 0))
    draws = sample_stable_increment(1.0, 1.0, 1.0, rng, size=100_000)
    assert abs(float(np.median(draws))) < 0.02


def test_stable_tails_heavier_for_small_alpha():
    def kurt(x):
        c = x - x.mean()
        return float(np.mean(c**4) / np.mean(c**2) ** 2)

    rng = make_rng(derive_seed(999, 1))
    light = sample_stable_increment(1.99, 1.0, 1.0, rng, size=100_000)
    heavy = sample_stable_increment(0.5, 1.0, 1.0, rng, size=100_000)
    assert kurt(heavy) > 50.0 * kurt(light)


def test_stable_empirical_characteristic_function():
    # CF of the increment over h=1 is exp(-(unit_scale*scale)^alpha |t|^alpha)
    worst = 0.0
    for alpha, scale in ((0.5, 0.04), (1.0, 0.25), (1.5, 0.45)):
        rng = make_rng(derive_seed(31337, int(alpha * 10)))
        draws = sample_stable_increment(alpha, scale, 1.0, rng, size=1_000_000)
        c = (stable_unit_scale(alpha) * scale) ** alpha
        for freq in (0.5, 1.0, 2.0):
            ecf = float(np.mean(np.cos(freq * draws)))
            cf = math.exp(-c * freq**alpha)
            worst = max(worst, abs(ecf - cf) / cf)
    assert worst < 0.05


def test_stable_scaling_in_h():
    # increments over time h scale like h^{1/alpha}
    alpha = 0.8
    r1 = make_rng(derive_seed(42, 0))
    r2 = make_rng(derive_seed(42, 0))
    d1 = sample_stable_increment(alpha, 1.0, 1.0, r1, size=50_000)
    d2 = sample_stable_increment(alpha, 1.0, 0.25, r2, size=50_000)
    q1 = np.quantile(np.abs(d1), 0.5)
    q2 = np.quantile(np.abs(d2), 0.5)
    assert q1 / q2 == pytest.approx(0.25 ** (-1.0 / alpha), rel=0.05)


# ---------------------------------------------------------------------------
# tempered-stable increment sampler
# ---------------------------------------------------------------------------


def test_tempered_zero_normalizer_is_degenerate():
    rng = make_rng(4)
    draws = sample_tempered_stable_increment(TemperedStable(0.5, 1.0, 0.0), 0.01, rng, size=1000)
    assert np.all(draws == 0.0)


def test_tempered_floor_is_a_small_positive_cut():
    r0 = tempered_floor(TemperedStable(0.2, 1.0, 1.0))
    assert 0.0 < r0 < 0.1


def test_tempered_mean_abs_matches_levy_quadrature():
    # E|increment| ~ h * int |z| nu(dz) for small h (single-jump dominance)
    alpha, lam, c = 0.2, 1.0, 1.0
    h = 0.004
    ref, _ = integrate.quad(lambda z: z ** (-alpha) * math.exp(-lam * z), 0.0, np.inf)
    oracle = 2.0 * c * ref * h
    rng = make_rng(derive_seed(20240801, 4))
    draws = sample_tempered_stable_increment(TemperedStable(alpha, lam, c), h, rng, size=1_000_000)
    emp = float(np.mean(np.abs(draws)))
    assert abs(emp - oracle) / oracle < 0.02


def test_tempered_stronger_tempering_shrinks_increments():
    for sd in (0, 1):
        r1 = make_rng(derive_seed(76, sd))
        r2 = make_rng(derive_seed(76, 100 + sd))
        light = sample_tempered_stable_increment(TemperedStable(0.5, 1.0, 1.0), 0.01, r1, size=100_000)
        heavy = sample_tempered_stable_increment(TemperedStable(0.5, 100.0, 1.0), 0.01, r2, size=100_000)
        assert np.mean(np.abs(heavy)) < np.mean(np.abs(light)) / 5.0


# ---------------------------------------------------------------------------
# subsampling and burn-in
# ---------------------------------------------------------------------------


def test_subsample_full_resolution_is_identity():
    m = std_ou()
    p = simulate_path(m, THETA, 1.0, 2.0, 100, seed=11)
    obs = subsample(p, 100)
    assert np.array_equal(obs.times, p.times)
    assert np.array_equal(obs.values, p.values)


def test_subsample_delta_and_idempotence():
    m = std_ou()
    p = simulate_path(m, THETA, 1.0, 10.0, 100_000, seed=12)
    obs = subsample(p, 2000)
    assert obs.n == 2000
    assert obs.delta_max == pytest.approx(0.005)
    assert obs.times[0] == 0.0 and obs.times[-1] == pytest.approx(10.0)


def test_subsample_non_divisor_warns_and_uses_nearest_points():
    m = std_ou()
    p = simulate_path(m, THETA, 1.0, 1.0, 100, seed=13)
    with pytest.warns(UserWarning, match="does not divide"):
        obs = subsample(p, 7)
    assert obs.n == 7
    assert obs.times[0] == 0.0 and obs.times[-1] == p.times[-1]
    assert np.all(np.isin(obs.values, p.values))


def test_subsample_rejects_bad_n():
    m = std_ou()
    p = simulate_path(m, THETA, 1.0, 1.0, 100, seed=13)
    with pytest.raises(ValueError, match="exceeds the fine step count"):
        subsample(p, 101)
    with pytest.raises(ValueError, match="positive"):
        subsample(p, 0)


def test_discard_initial_rebases_time_and_decomposition():
    m = std_ou()
    p = simulate_path(m, THETA, 1.0, 10.0, 10_000, seed=14)
    q = discard_initial(p, 1.0)
    assert q.times[0] == 0.0
    assert q.times[-1] == pytest.approx(9.0)
    assert np.array_equal(q.values, p.values[1000:])
    assert np.abs(q.values - (q.cont_part + q.jump_part)).max() < 1e-12
    if len(q.jump_events):
        assert np.all(q.jump_events[:, 0] > 0.0)
        assert np.all(q.jump_events[:, 0] <= q.times[-1] + 1e-12)


def test_discard_initial_zero_burn_is_identity():
    m = std_ou()
    p = simulate_path(m, THETA, 1.0, 1.0, 100, seed=15)
    assert discard_initial(p, 0.0) is p


def test_discard_initial_rejects_off_grid_burn():
    m = std_ou()
    p = simulate_path(m, THETA, 1.0, 1.0, 100, seed=15)
    with pytest.raises(ValueError, match="fine-grid"):
        discard_initial(p, 0.0305)
    with pytest.raises(ValueError, match="inside the simulated span"):
        discard_initial(p, 1.0)


# ---------------------------------------------------------------------------
# statistical sanity of the scheme
# ---------------------------------------------------------------------------


def test_long_run_mean_matches_independent_long_simulation():
    # jump-compensated stationary mean of the OU model, sigma=1
    m = ou_model(sigma=1.0, levy=cp_exp(1.0, 1.0))
    long_path = simulate_path(m, THETA, 0.5, 2000.0, 2_000_000, seed=derive_seed(71, 999))
    oracle = float(np.mean(long_path.values[100_000:]))  # drop t < 100
    avgs = []
    for k in range(40):
        p = simulate_path(m, THETA, 0.5, 10.0, 100_000, seed=derive_seed(71, k))
        avgs.append(float(np.mean(p.values[50_000:])))
    avgs = np.array(avgs)
    se = avgs.std(ddof=1) / math.sqrt(avgs.size)
    assert abs(avgs.mean() - oracle) < 3.0 * se


def test_increment_magnitude_scales_sublinearly():
    m = ou_model(sigma=1.0, levy=cp_exp(1.0, 1.0))
    p = simulate_path(m, THETA, 0.5, 20.0, 20_000, seed=derive_seed(72, 0))
    x = p.values
    res = {}
    for delta, lag in ((0.1, 100), (0.01, 10), (0.001, 1)):
        diffs = np.abs(x[lag:] - x[:-lag])
        idx = np.linspace(0, diffs.size - 1, 10_000).astype(int)
        res[delta] = float(np.mean(diffs[idx]))
    assert res[0.1] > res[0.01] > res[0.001]
    # a linear scaling would give ratio 10 per decade
    assert res[0.1] / res[0.01] < 10.0
    assert res[0.01] / res[0.001] < 10.0


# ---------------------------------------------------------------------------
# CSV round trips
# ---------------------------------------------------------------------------


def test_path_csv_round_trip_is_exact(tmp_path):
    m = std_ou()
    p = simulate_path(m, THETA, 1.0, 2.0, 500, seed=21)
    f = tmp_path / "path.csv"
    write_path_csv(p, str(f))
    q = read_path_csv(str(f))
    assert np.array_equal(p.times, q.times)
    assert np.array_equal(p.values, q.values)
    assert np.array_equal(p.cont_part, q.cont_part)
    assert np.array_equal(p.jump_part, q.jump_part)


def test_observations_csv_round_trip_is_exact(tmp_path):
    m = std_ou()
    obs = subsample(simulate_path(m, THETA, 1.0, 2.0, 500, seed=22), 100)
    f = tmp_path / "obs.csv"
    write_observations_csv(obs, str(f))
    o2 = read_observations_csv(str(f))
    assert np.array_equal(obs.times, o2.times)
    assert np.array_equal(obs.values, o2.values)


def test_read_observations_names_offending_line():
    bad = io.StringIO("t,x\n0.0,1.0\n0.5,oops\n1.0,2.0\n")
    with pytest.raises(ValueError, match="line 3"):
        read_observations_csv(bad)
