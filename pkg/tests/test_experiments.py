import numpy as np
import pytest

from majoranaft.experiments import (
    CHUNK_SHOTS,
    FitResult,
    NoCrossing,
    RunConfig,
    channel_rate,
    combined_rate,
    estimate_logical_rate,
    expected_residual_pauli_rates,
    fit_scaling,
    locate_crossing,
    normal_qubit_baseline,
    per_round_rate,
    residual_pauli_rates,
    resource_cost,
    time_cost,
)


def test_run_config_validation():
    with pytest.raises(ValueError):
        RunConfig(5, 4, 10, 0.0, 0.001)
    with pytest.raises(ValueError):
        RunConfig(5, 5, 0, 0.0, 0.001)
    with pytest.raises(ValueError):
        RunConfig(5, 5, 10, 0.0, 0.001, mode="greedy")
    with pytest.raises(ValueError):
        RunConfig(5, 5, 10, 0.0, 0.001, n_d=2)


def test_amplification_scales_every_component():
    base = RunConfig(5, 5, 1, 1e-4, 1e-3)
    amp = RunConfig(5, 5, 1, 1e-4, 1e-3, amplification=20.0)
    (n0, v0), (n1, v1) = base.noise_model(), amp.noise_model()
    assert n1.p_create == pytest.approx(20 * n0.p_create)
    assert n1.p_measure == pytest.approx(20 * n0.p_measure)
    # entry 0 is the error-free branch and absorbs the remainder
    np.testing.assert_allclose(v1.as_array()[1:], 20 * v0.as_array()[1:])
    assert v1.as_array().sum() == pytest.approx(1.0)


def test_noiseless_rate_is_zero():
    r = estimate_logical_rate(RunConfig(3, 3, 200, 0.0, 0.0, seed=1))
    assert r.failures == 0 and r.p_l == 0.0


def test_results_independent_of_workers():
    cfg = RunConfig(3, 3, 2 * CHUNK_SHOTS + 17, 0.004, 0.004, seed=5)
    a = estimate_logical_rate(cfg, workers=1)
    b = estimate_logical_rate(cfg, workers=2)
    assert a.row() == b.row()
    c = estimate_logical_rate(RunConfig(3, 3, 2 * CHUNK_SHOTS + 17, 0.004, 0.004, seed=6))
    assert c.row() != a.row()


def test_rate_normalisation():
    assert per_round_rate(0.0, 5) == 0.0
    assert per_round_rate(1 - 0.9 ** 5, 5) == pytest.approx(0.1)
    q = 0.01
    p_fail = (1 - (1 - 2 * q) ** 7) / 2
    assert channel_rate(p_fail, 7) == pytest.approx(q)
    assert channel_rate(0.5, 7) == pytest.approx(0.5)
    both, se = combined_rate(p_fail, p_fail, 1000, 7)
    assert both == pytest.approx(2 * q - q * q)
    assert se > 0


def test_rate_ordering_in_d():
    """Above threshold larger lattices fail more; below it they fail less."""
    hi = [estimate_logical_rate(RunConfig(d, d, 2000, 0.003, 0.003, seed=d)) for d in (5, 7)]
    assert hi[1].p_l > hi[0].p_l
    lo = [estimate_logical_rate(RunConfig(d, d, 4000, 0.00075, 0.00075, seed=d)) for d in (5, 7)]
    assert lo[1].p_l < lo[0].p_l


def test_residual_rates_enumeration():
    r = expected_residual_pauli_rates(5, 1e-3)
    assert r.raw_x == pytest.approx(4.0) and r.raw_z == pytest.approx(4.0)
    assert r.corrected_x == pytest.approx(8 / 3) and r.corrected_z == pytest.approx(8 / 3)


def test_residual_rates_sampled():
    r = residual_pauli_rates(5, 1e-3, 6000, seed=3)
    for v in (r.raw_x, r.raw_z):
        assert v == pytest.approx(4.0, rel=0.2)
    for v in (r.corrected_x, r.corrected_z):
        assert v == pytest.approx(8 / 3, rel=0.2)


def test_crossing_of_synthetic_curves():
    pb = np.linspace(0.01, 0.03, 7)
    pth = 0.02
    table = {d: (pb, 0.1 * (pb / pth) ** ((d + 1) / 2), 0.01 * 0.1 * (pb / pth) ** ((d + 1) / 2)) for d in (5, 7, 9)}
    est, pairs = locate_crossing(table)
    assert est == pytest.approx(pth, rel=1e-3)
    assert len(pairs) == 3
    with pytest.raises(NoCrossing):
        locate_crossing({5: (pb, pb, pb * 0.01), 7: (pb, 0.5 * pb, pb * 0.01)})


def synthetic(kappa, nu, eta, beta0, noise, rng):
    rows = []
    for d in (5, 7, 9, 11):
        for r in (2.0, 3.0, 4.0, 5.0):
            ln = (-kappa + beta0 * np.log(r)) * d - nu * np.log(d) - eta
            p = np.exp(ln)
            rows.append((d, r, p * (1 + noise * rng.standard_normal()), noise * p))
    return rows


def test_fit_recovers_parameters(rng):
    fit = fit_scaling(synthetic(2.0, 0.5, 3.0, 1.2, 0.01, rng))
    assert abs(fit.kappa - 2.0) < 3 * fit.sigma_kappa
    assert abs(fit.nu - 0.5) < 3 * fit.sigma_nu
    assert abs(fit.eta - 3.0) < 3 * fit.sigma_eta
    assert abs(fit.beta0 - 1.2) < 3 * fit.sigma_beta0
    assert fit.kappa == -fit.alpha0 and fit.nu == -fit.alpha1 and fit.eta == -fit.alpha2


def test_fit_residuals_show_no_trend_in_d(rng):
    data = synthetic(2.0, 0.5, 3.0, 1.2, 0.01, rng)
    fit = fit_scaling(data)
    d = np.array([row[0] for row in data])
    r = np.array([row[1] for row in data])
    y = np.log([row[2] for row in data])
    pred = (fit.alpha0 + fit.beta0 * np.log(r)) * d + fit.alpha1 * np.log(d) + fit.alpha2
    resid = y - pred
    slope = np.polyfit(d, resid, 1)[0]
    assert abs(slope) < 3 * 0.01 / np.std(d) / np.sqrt(len(d))


def test_fit_rejects_degenerate_data():
    rows = [(d, 2.0, 1e-3, 1e-5) for d in (5, 7, 9)] + [(d, 3.0, 1e-3, 1e-5) for d in (5, 7, 9)]
    with pytest.raises(ValueError):
        fit_scaling(rows)


def test_resource_cost():
    fit = FitResult(5.7353, 0.6551, 3.3585, 0, 0, 0, -5.7353, -0.6551, -3.3585, 0)
    assert resource_cost(fit, 5e-15) == (5, 50)
    assert resource_cost(fit, 1.0) == (3, 18)
    ds = [resource_cost(fit, t)[0] for t in (1e-3, 1e-6, 1e-9, 1e-12, 1e-15, 1e-18)]
    assert ds == sorted(ds)
    with pytest.raises(ValueError):
        resource_cost(FitResult(-1, 0, 0, 0, 0, 0, 1, 0, 0, 0), 1e-3)


def test_shifted_fit_is_pessimistic():
    fit = FitResult(1.4594, 0.8656, 3.0506, 0.05, 0.1, 0.2, -1.4594, -0.8656, -3.0506, 0.9)
    assert np.all(fit.shifted().p_l([5, 7, 9]) > fit.p_l([5, 7, 9]))


def test_normal_qubit_baseline():
    assert normal_qubit_baseline(3e-4) == (3, 25)
    assert normal_qubit_baseline(5e-15) == (25, 49 ** 2)
    assert normal_qubit_baseline(3e-14)[0] == 23
    ds = [normal_qubit_baseline(t)[0] for t in (1e-3, 1e-6, 1e-9, 1e-12)]
    assert ds == sorted(ds)
    with pytest.raises(ValueError):
        normal_qubit_baseline(0.03)


def test_time_cost():
    assert time_cost("sparse", 0).steps_per_round == 6
    assert time_cost("dense", 0).steps_per_round == 4
    t = time_cost("sparse", 1, "none", 1e-3)
    assert t.steps_per_round == 24 and t.failure_rate == pytest.approx(4e-3)
    t = time_cost("sparse", 1, "repeat_once", 1e-3)
    assert t.steps_per_round == 48 and t.failure_rate == pytest.approx(1.6e-5)
    with pytest.raises(ValueError):
        time_cost("sparse", 1, "retry_forever")
