import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from hmmimo.channel import LargeScaleFading, large_scale
from hmmimo.config import ConfigError, NetworkConfig
from hmmimo.deployment import UserPartition, sample_topology
from hmmimo.estimation import mmse_variance
from hmmimo.sinr import (NumericalIntegrityError, PowerControl, SinrReport, check_power_budget,
                         dl_fu_terms, dl_nu_terms, dl_sinr_fu, dl_sinr_nu, dl_sinr_statistical,
                         full_power_control, resource_split, scheme_sinrs, spectral_efficiency,
                         sum_capacity, ul_fu_terms, ul_nu_terms, ul_sinr_fu, ul_sinr_nu)

SIGMA = 1.58113883008419e-13
P = 0.2
gains = st.floats(min_value=1e-14, max_value=1e-8)


def _random_instance(rng, n_ant=6, n_users=5):
    beta = 10 ** rng.uniform(-14, -8, (n_ant, n_users))
    return mmse_variance(beta, P, SIGMA), beta


# --- power control ---------------------------------------------------------

def test_full_power_single_and_pair():
    assert full_power_control(np.array([[0.5]]))[0, 0] == 2.0
    eta = full_power_control(np.array([[0.25, 0.25]]))
    assert np.allclose(eta, 2.0)


@settings(max_examples=50, deadline=None)
@given(arrays(np.float64, (4, 16), elements=gains), st.floats(1e-3, 1e3))
def test_full_power_saturates_budget(alpha, scale):
    eta = full_power_control(alpha)
    load = (eta * alpha).sum(axis=1)
    assert np.allclose(load, 1.0, rtol=1e-12, atol=0)
    # eta * alpha is invariant to a common scale of alpha
    assert np.allclose(full_power_control(alpha * scale) * alpha * scale, eta * alpha, rtol=1e-12)
    check_power_budget(eta, alpha)


def test_idle_antenna_gets_zero_and_budget_violation_raises():
    alpha = np.array([[1.0, 2.0], [3.0, 4.0]])
    served = np.array([[True, False], [False, False]])
    assert full_power_control(alpha, served).tolist() == [[1.0, 0.0], [0.0, 0.0]]
    with pytest.raises(ConfigError):
        check_power_budget(np.full((2, 2), 1.0), alpha)


# --- uplink ----------------------------------------------------------------

def test_ul_nu_reference_example():
    beta = np.ones(16)
    assert ul_sinr_nu(1.0, beta, 64, 1.0, 1.0) == pytest.approx(64 / (16 - 1 + 1))


def test_ul_nu_single_user_perfect_csi_grows_linearly():
    vals = [ul_sinr_nu(1.0, np.array([1.0]), n, 1.0, 1e-30) for n in (8, 16, 32)]
    assert vals[1] == pytest.approx(2 * vals[0]) and vals[2] == pytest.approx(4 * vals[0])


@settings(max_examples=50, deadline=None)
@given(arrays(np.float64, 6, elements=gains), st.integers(1, 200))
def test_ul_nu_monotone_in_array_size(beta, n):
    alpha = mmse_variance(beta, P, SIGMA)
    assert np.all(ul_sinr_nu(alpha, beta, n + 1, P, SIGMA) > ul_sinr_nu(alpha, beta, n, P, SIGMA))


def test_ul_fu_single_link():
    alpha, beta = np.array([[0.4]]), np.array([[1.0]])
    assert ul_sinr_fu(alpha, beta, 1.0, 0.5)[0] == pytest.approx(0.4 / (1.0 + 0.5))


def test_ul_fu_user_without_combining_ap_is_zero():
    alpha, beta = _random_instance(np.random.default_rng(0), 3, 2)
    mask = np.array([[True, False]] * 3)
    assert ul_sinr_fu(alpha, beta, P, SIGMA, mask)[1] == 0.0


def test_ul_fu_interference_doubles_with_beta():
    alpha, beta = _random_instance(np.random.default_rng(1), 4, 3)
    t1 = ul_fu_terms(0, alpha, beta, P, SIGMA)
    beta2 = beta.copy()
    beta2[:, 1:] *= 2
    t2 = ul_fu_terms(0, alpha, beta2, P, SIGMA)
    assert t2.i2 == pytest.approx(2 * t1.i2, rel=1e-12)


def test_term_identities_on_random_instances():
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(1000):
        alpha, beta = _random_instance(rng)
        n_b = int(rng.integers(1, 65))
        k = int(rng.integers(0, beta.shape[1]))
        # UL far users: estimation error, IUI and gain uncertainty add to p*sum(alpha_k * total load)
        t = ul_fu_terms(k, alpha, beta, P, SIGMA)
        lhs = t.i1 + t.i2 + t.i4
        rhs = P * np.sum(alpha[:, k] * beta.sum(axis=1))
        worst = max(worst, abs(lhs - rhs) / rhs)
        worst = max(worst, abs(t.sinr - ul_sinr_fu(alpha, beta, P, SIGMA)[k]) / t.sinr)
        # UL near users
        t = ul_nu_terms(k, alpha[0], beta[0], n_b, P, SIGMA)
        worst = max(worst, abs(t.sinr - ul_sinr_nu(alpha[0, k], beta[0], n_b, P, SIGMA)) / t.sinr)
        # DL near users
        eta = full_power_control(np.broadcast_to(alpha[0], (n_b, beta.shape[1])))
        t = dl_nu_terms(k, alpha[0], beta[0], eta, P, SIGMA)
        worst = max(worst, abs(t.sinr - dl_sinr_nu(alpha[0], beta[0], eta, P, SIGMA)[k]) / t.sinr)
        # DL far users
        eta = full_power_control(alpha)
        t = dl_fu_terms(k, alpha, beta, eta, P, SIGMA)
        worst = max(worst, abs(t.sinr - dl_sinr_fu(alpha, beta, eta, P, SIGMA)[k]) / t.sinr)
    assert worst < 1e-12


# --- downlink --------------------------------------------------------------

def test_dl_nu_single_user():
    a, b, n_b = 0.3, 1.0, 16
    eta = np.full((n_b, 1), 1 / a)
    assert dl_sinr_nu([a], [b], eta, 1.0, 0.5)[0] == pytest.approx(n_b**2 * a / (n_b * b + 0.5))


def test_dl_fu_single_link_and_coherent_limit():
    a, b = 0.4, 1.0
    assert dl_sinr_fu(np.array([[a]]), np.array([[b]]), np.array([[1 / a]]), 1.0, 0.5)[0] == pytest.approx(
        a / (b - a + 0.5))
    big = dl_sinr_fu(np.array([[1.0 - 1e-9]]), np.array([[1.0]]), np.array([[1.0]]), 1.0, 1e-9)[0]
    assert big > 1e6


def test_dl_fu_guard_raises_on_impossible_input():
    with pytest.raises(NumericalIntegrityError):
        dl_sinr_fu(np.array([[2.0]]), np.array([[1.0]]), np.array([[1.0]]), 1.0, 0.1)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_relabeling_users_permutes_sinrs(seed):
    rng = np.random.default_rng(seed)
    alpha, beta = _random_instance(rng, 5, 4)
    perm = rng.permutation(4)
    eta = full_power_control(alpha)
    pairs = [
        (ul_sinr_fu(alpha, beta, P, SIGMA), ul_sinr_fu(alpha[:, perm], beta[:, perm], P, SIGMA)),
        (ul_sinr_nu(alpha[0], beta[0], 8, P, SIGMA), ul_sinr_nu(alpha[0, perm], beta[0, perm], 8, P, SIGMA)),
        (dl_sinr_fu(alpha, beta, eta, P, SIGMA), dl_sinr_fu(alpha[:, perm], beta[:, perm], eta[:, perm], P, SIGMA)),
        (dl_sinr_statistical(alpha, beta, eta, P, SIGMA),
         dl_sinr_statistical(alpha[:, perm], beta[:, perm], eta[:, perm], P, SIGMA)),
    ]
    for ref, permuted in pairs:
        assert np.allclose(ref[perm], permuted, rtol=1e-12)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_extra_user_never_helps(seed):
    rng = np.random.default_rng(seed)
    alpha, beta = _random_instance(rng, 5, 5)
    a4, b4 = alpha[:, :4], beta[:, :4]
    checks = [
        (ul_sinr_fu(a4, b4, P, SIGMA), ul_sinr_fu(alpha, beta, P, SIGMA)[:4]),
        (ul_sinr_nu(a4[0], b4[0], 8, P, SIGMA), ul_sinr_nu(alpha[0, :4], beta[0], 8, P, SIGMA)),
        (dl_sinr_statistical(a4, b4, full_power_control(a4), P, SIGMA),
         dl_sinr_statistical(alpha, beta, full_power_control(alpha), P, SIGMA)[:4]),
        (dl_sinr_fu(a4, b4, full_power_control(a4), P, SIGMA),
         dl_sinr_fu(alpha, beta, full_power_control(alpha), P, SIGMA)[:4]),
    ]
    for before, after in checks:
        assert np.all(after <= before * (1 + 1e-12))


# --- schemes ---------------------------------------------------------------

def _epoch_lsf(cfg, seed, n_aps):
    rng = np.random.default_rng(seed)
    topo = sample_topology(cfg, rng, n_aps=n_aps)
    return topo, large_scale(topo, cfg, rng, n_cbs=cfg.cbs_antennas)


@pytest.mark.parametrize("seed", range(5))
def test_full_clusters_reduce_to_cell_free(seed):
    cfg = NetworkConfig(total_antennas=24, users=6, cbs_antennas=8)
    _, lsf = _epoch_lsf(cfg, seed, 24)
    cf = scheme_sinrs("CFmMIMO", lsf, cfg)
    uc = scheme_sinrs("UCmMIMO", lsf, cfg.replace(ucm_cluster_size=24))
    assert np.allclose(uc.ul_sinr, cf.ul_sinr, rtol=1e-12)
    assert np.allclose(uc.dl_sinr, cf.dl_sinr, rtol=1e-12)


@pytest.mark.parametrize("seed", range(5))
def test_all_near_hybrid_reduces_to_collocated(seed):
    cfg = NetworkConfig(total_antennas=32, users=6, cbs_antennas=32)
    _, lsf = _epoch_lsf(cfg, seed, 0)
    part = UserPartition(np.arange(6), np.array([], dtype=int), np.array([], dtype=int))
    hm = scheme_sinrs("HmMIMO", lsf, cfg, part)
    mm = scheme_sinrs("mMIMO", lsf, cfg)
    assert np.allclose(hm.ul_sinr, mm.ul_sinr, rtol=1e-12)
    assert np.allclose(hm.dl_sinr, mm.dl_sinr, rtol=1e-12)
    assert hm.ul_capacity == pytest.approx(mm.ul_capacity, rel=1e-12)


@pytest.mark.parametrize("scheme", ["HmMIMO", "mMIMO", "CFmMIMO", "UCmMIMO"])
def test_reports_are_finite_and_consistent(scheme):
    cfg = NetworkConfig(total_antennas=32, users=8, cbs_antennas=8)
    rng = np.random.default_rng(4)
    topo = sample_topology(cfg, rng, n_aps=32)
    lsf = large_scale(topo, cfg, rng, n_cbs=8)
    part = None
    if scheme == "HmMIMO":
        lsf = lsf.with_aps(24)
        part = UserPartition(np.array([0, 1]), np.arange(2, 8), np.array([0, 3]))
    elif scheme == "mMIMO":
        lsf = LargeScaleFading(lsf.beta_cbs, lsf.beta_ap[:0], 32)
    rep = scheme_sinrs(scheme, lsf, cfg, part)
    for arr in (rep.ul_sinr, rep.dl_sinr):
        assert np.all(np.isfinite(arr)) and np.all(arr >= 0)
    assert np.allclose(rep.ul_se, np.log2(1 + rep.ul_sinr))
    assert np.allclose(rep.dl_se, np.log2(1 + rep.dl_sinr))


def test_explicit_power_control_is_checked():
    cfg = NetworkConfig(total_antennas=8, users=2, cbs_antennas=2)
    lsf = LargeScaleFading(np.array([1e-9, 1e-10]), np.full((8, 2), 1e-10), 2)
    with pytest.raises(ConfigError):
        scheme_sinrs("CFmMIMO", lsf, cfg, power=PowerControl(np.full((8, 2), 1e30), np.zeros((2, 0))))


def test_hybrid_requires_partition():
    lsf = LargeScaleFading(np.ones(2), np.ones((3, 2)), 2)
    with pytest.raises(ConfigError):
        scheme_sinrs("HmMIMO", lsf, NetworkConfig())
    with pytest.raises(ConfigError):
        scheme_sinrs("LTE", lsf, NetworkConfig())


def test_pilot_overhead_scales_se():
    cfg = NetworkConfig(total_antennas=16, users=4, cbs_antennas=4)
    _, lsf = _epoch_lsf(cfg, 0, 16)
    plain = scheme_sinrs("CFmMIMO", lsf, cfg)
    taxed = scheme_sinrs("CFmMIMO", lsf, cfg.replace(pilot_overhead=True))
    assert np.allclose(taxed.ul_se, plain.ul_se * (192 - 4) / 192)


# --- capacity --------------------------------------------------------------

def _report(se_near, se_far):
    se = np.array(se_near + se_far, dtype=float)
    mask = np.array([True] * len(se_near) + [False] * len(se_far))
    return SinrReport("HmMIMO", se, se, se, se, mask, 0.0, 0.0)


def test_capacity_without_far_users():
    cfg = NetworkConfig()
    split = resource_split(cfg, 3, 0)
    assert split == (1.0, 0.0)
    assert sum_capacity(_report([1.0, 2.0, 3.0], []), split) == (6.0, 6.0)


def test_equal_split_symmetric_pair():
    split = resource_split(NetworkConfig(dl_split="equal"), 1, 1)
    assert sum_capacity(_report([3.0], [5.0]), split)[1] == pytest.approx(4.0)


def test_proportional_split():
    assert resource_split(NetworkConfig(), 1, 3) == (0.25, 0.75)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(0, 20), min_size=1, max_size=5), st.lists(st.floats(0, 20), min_size=1, max_size=5),
       st.floats(0, 1), st.floats(0, 1), st.floats(0.1, 10))
def test_capacity_is_linear(near, far, w_n, w_f, c):
    rep = _report(near, far)
    scaled = _report([c * x for x in near], [c * x for x in far])
    ul, dl = sum_capacity(rep, (w_n, w_f))
    ul2, dl2 = sum_capacity(scaled, (w_n, w_f))
    assert ul2 == pytest.approx(c * ul, rel=1e-9, abs=1e-12)
    assert dl2 == pytest.approx(c * dl, rel=1e-9, abs=1e-12)


def test_fractions_outside_unit_interval_rejected():
    with pytest.raises(ConfigError):
        sum_capacity(_report([1.0], [1.0]), (1.2, 0.0))


def test_spectral_efficiency_log2():
    assert spectral_efficiency(3.0) == 2.0
