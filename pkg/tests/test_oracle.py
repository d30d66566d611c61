import numpy as np
import pytest

from hmmimo.estimation import mmse_variance
from hmmimo.oracle import (oracle_instance, simulate_dl_fu_terms, simulate_dl_nu_terms, simulate_ul_fu_terms,
                           simulate_ul_nu_terms, validate)
from hmmimo.sinr import full_power_control, ul_fu_terms

SIGMA = 1.58113883008419e-13
P = 0.2


@pytest.fixture(scope="module")
def instance():
    return oracle_instance(seed=2024)


@pytest.fixture(scope="module")
def report(instance):
    return validate(instance, trials=100_000, seed=7)


def test_every_check_passes(report):
    failed = [(r.path, r.user, r.quantity, round(r.rel_error, 4)) for r in report if not r.passed]
    assert not failed
    paths = {r.path for r in report}
    assert paths == {"ul_nu", "ul_fu", "dl_nu", "dl_fu"}


def test_reference_instance_has_four_users_each_path(report):
    for path in ("ul_nu", "ul_fu", "dl_nu", "dl_fu"):
        users = {r.user for r in report if r.path == path and r.quantity == "sinr"}
        assert users == {0, 1, 2, 3}


def test_single_user_has_no_interference_term():
    beta = np.array([1e-10])
    res = simulate_ul_nu_terms(beta, 8, P, SIGMA, trials=20_000, rng=1)
    assert res.terms[0].i2 == 0.0
    eta = full_power_control(np.broadcast_to(mmse_variance(beta, P, SIGMA), (8, 1)))
    res = simulate_dl_nu_terms(beta, eta, P, P, SIGMA, trials=20_000, rng=2)
    assert res.terms[0].i2 == 0.0


def test_near_perfect_estimation_kills_error_term():
    beta = np.array([[1e-6]])  # pilot SNR ~ 1e6
    res = simulate_ul_fu_terms(beta, P, SIGMA, trials=20_000, rng=3)
    t = res.terms[0]
    assert t.i1 / t.s0 < 1e-5


def test_noise_term_tracks_noise_power(instance):
    beta = instance.beta_ap
    lo, hi = SIGMA / 100, SIGMA
    emp_lo = simulate_ul_fu_terms(beta, P, lo, trials=100_000, rng=5).terms
    emp_hi = simulate_ul_fu_terms(beta, P, hi, trials=100_000, rng=5).terms
    for k in range(beta.shape[1]):
        closed = (ul_fu_terms(k, mmse_variance(beta, P, lo), beta, P, lo).i3
                  / ul_fu_terms(k, mmse_variance(beta, P, hi), beta, P, hi).i3)
        assert emp_lo[k].i3 / emp_hi[k].i3 == pytest.approx(closed, rel=0.05)


@pytest.mark.parametrize("path", ["ul_nu", "ul_fu", "dl_nu", "dl_fu"])
def test_decomposition_is_complete_and_uncorrelated(instance, path):
    cfg = instance.config
    alpha0 = mmse_variance(instance.beta_cbs, P, SIGMA)
    if path == "ul_nu":
        res = simulate_ul_nu_terms(instance.beta_cbs, cfg.cbs_antennas, P, SIGMA, trials=100_000, rng=11)
    elif path == "ul_fu":
        res = simulate_ul_fu_terms(instance.beta_ap, P, SIGMA, trials=100_000, rng=12)
    elif path == "dl_nu":
        eta = full_power_control(np.broadcast_to(alpha0, (cfg.cbs_antennas, len(alpha0))))
        res = simulate_dl_nu_terms(instance.beta_cbs, eta, P, P, SIGMA, trials=100_000, rng=13)
    else:
        beta_f = instance.beta_ap[np.argmax(instance.beta_ap, axis=0)]
        beta_f = np.unique(beta_f, axis=0)
        eta = full_power_control(mmse_variance(beta_f, P, SIGMA))
        res = simulate_dl_fu_terms(beta_f, eta, P, P, SIGMA, trials=100_000, rng=14)
    for k, t in enumerate(res.terms):
        # whatever is left after the desired term is exactly the listed terms, with no cross-power
        interference = t.i1 + t.i2 + t.i3 + t.i4 + (res.s0_second_moment[k] - t.s0)
        assert res.residual_power[k] + (res.s0_second_moment[k] - t.s0) == pytest.approx(interference, rel=0.03)
    for pair, z in res.correlation_z.items():
        assert np.all(z < 4.0), (pair, z)


def test_power_accounting(instance):
    cfg = instance.config
    alpha0 = mmse_variance(instance.beta_cbs, P, SIGMA)
    eta = full_power_control(np.broadcast_to(alpha0, (cfg.cbs_antennas, len(alpha0))))
    res = simulate_dl_nu_terms(instance.beta_cbs, eta, P, P, SIGMA, trials=50_000, rng=21)
    assert np.all(res.extras["tx_power"] <= 1.03)
    assert np.allclose(res.extras["tx_power"], 1.0, rtol=0.03)


def test_results_do_not_depend_on_worker_count(instance):
    kw = dict(trials=4_000, rng=99, chunk=1_000)
    a = simulate_ul_fu_terms(instance.beta_ap, P, SIGMA, workers=1, **kw)
    b = simulate_ul_fu_terms(instance.beta_ap, P, SIGMA, workers=2, **kw)
    assert [t.as_dict() for t in a.terms] == [t.as_dict() for t in b.terms]
    assert np.array_equal(a.residual_power, b.residual_power)


def test_same_seed_same_numbers(instance):
    a = simulate_ul_nu_terms(instance.beta_cbs, 8, P, SIGMA, trials=5_000, rng=4)
    b = simulate_ul_nu_terms(instance.beta_cbs, 8, P, SIGMA, trials=5_000, rng=4)
    assert np.array_equal(a.sinr, b.sinr)
