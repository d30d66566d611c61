"""Signal-level Monte Carlo check of the closed-form SINRs.

Each ``simulate_*`` function draws block-fading channels, runs pilot-based
MMSE estimation, transmits unit-power Gaussian symbols and splits the
resulting soft estimate (UL) or received sample (DL) into its terms using
the known realizations. Term powers are averaged over the channel and
pilot-noise draws after conditioning on them, so the symbols and receiver
noise enter through their known unit and ``sigma^2`` variances; the
symbol-level terms still drive the residual and cross-correlation checks.

The desired term is reported as the power of its coherent component,
``|E[S0 * conj(s)]|**2``, i.e. the signal delivered through the average
gain. On paths where the gain itself fluctuates (matched filtering at the
CBS, coherent DL detection) ``s0_second_moment`` keeps the raw
``E|S0|**2`` as well.

Trials are processed in chunks, each with its own child seed; results do
not depend on the number of workers.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .channel import complex_normal, large_scale, noise_power
from .config import NetworkConfig
from .deployment import sample_topology, select_activated_aps
from .estimation import mmse_estimate_realization, mmse_variance
from .sinr import (TermVariances, dl_fu_terms, dl_nu_terms, dl_sinr_fu, dl_sinr_nu,
                   full_power_control, ul_fu_terms, ul_nu_terms, ul_sinr_fu, ul_sinr_nu)

TERM_NAMES = ("s0", "i1", "i2", "i3", "i4")
DEFAULT_CHUNK = 10_000


@dataclass
class OracleResult:
    terms: list[TermVariances]  # one per evaluated user
    s0_second_moment: np.ndarray
    residual_power: np.ndarray  # E|soft - S0|^2
    correlation_z: dict[tuple[str, str], np.ndarray]  # |mean(a conj b)| / standard error
    trials: int
    extras: dict[str, np.ndarray] = field(default_factory=dict)

    @property
    def sinr(self) -> np.ndarray:
        return np.array([t.sinr for t in self.terms])


def _seed_sequence(rng) -> np.random.SeedSequence:
    if isinstance(rng, np.random.SeedSequence):
        return rng
    if isinstance(rng, np.random.Generator):
        return np.random.SeedSequence(int(rng.integers(2**63)))
    return np.random.SeedSequence(rng)


def _accumulate(sums: dict, parts: dict[str, np.ndarray], symbol: np.ndarray, soft: np.ndarray,
                cond: dict[str, np.ndarray]) -> None:
    """Add one chunk to the running sums.

    ``cond`` holds each term's power conditioned on the channel draw, i.e.
    averaged analytically over the unit-power symbols and the receiver
    noise. Term powers use it; projections, residuals and correlations use
    the symbol-level ``parts``.
    """
    def add(key, value):
        sums[key] = sums.get(key, 0) + value

    for name in parts:
        add("pow_" + name, np.sum(cond[name], axis=0))
    add("proj", np.sum(parts["s0"] * np.conj(symbol), axis=0))
    add("resid", np.sum(np.abs(soft - parts["s0"]) ** 2, axis=0))
    for a, b in combinations(parts, 2):
        prod = parts[a] * np.conj(parts[b])
        add(f"x_{a}_{b}", np.sum(prod, axis=0))
        add(f"xx_{a}_{b}", np.sum(np.abs(prod) ** 2, axis=0))


def _run(kernel, args: tuple, trials: int, rng, workers: int, chunk: int) -> dict:
    sizes = [chunk] * (trials // chunk) + ([trials % chunk] if trials % chunk else [])
    children = _seed_sequence(rng).spawn(len(sizes))
    jobs = [(args, n, child) for n, child in zip(sizes, children)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            partials = list(pool.map(kernel, jobs))
    else:
        partials = [kernel(job) for job in jobs]
    total: dict = {}
    for part in partials:  # fixed order keeps the reduction deterministic
        for key, value in part.items():
            total[key] = total.get(key, 0) + value
    return total


def _finish(sums: dict, trials: int, names: tuple[str, ...]) -> OracleResult:
    n = float(trials)
    power = {name: sums["pow_" + name] / n for name in names}
    s0 = np.abs(sums["proj"] / n) ** 2
    n_users = len(s0)
    terms = [
        TermVariances(s0=float(s0[k]), **{name: float(power[name][k]) for name in names if name != "s0"})
        for k in range(n_users)
    ]
    corr = {}
    for a, b in combinations(names, 2):
        mean = sums[f"x_{a}_{b}"] / n
        var = np.maximum(sums[f"xx_{a}_{b}"] / n - np.abs(mean) ** 2, 0.0)
        se = np.sqrt(var / n)
        corr[(a, b)] = np.divide(np.abs(mean), se, out=np.zeros(n_users), where=se > 0)
    extras = {key[2:]: value / n for key, value in sums.items() if key.startswith("e_")}
    return OracleResult(terms, power["s0"], sums["resid"] / n, corr, trials, extras)


# ---------------------------------------------------------------------------
# uplink
# ---------------------------------------------------------------------------

def _ul_nu_kernel(job):
    (beta, n_cbs, p_u, sigma), n, seed = job
    rng = np.random.default_rng(seed)
    k_users = len(beta)
    g = np.sqrt(beta) * complex_normal(rng, (n, n_cbs, k_users))
    g_hat, xi = mmse_estimate_realization(g, beta, p_u, sigma, rng)
    s = complex_normal(rng, (n, k_users))
    z = complex_normal(rng, (n, n_cbs), sigma)

    rx = np.sqrt(p_u) * np.einsum("tnk,tk->tn", g, s) + z
    soft = np.einsum("tnk,tn->tk", g_hat.conj(), rx)
    gain = np.sum(np.abs(g_hat) ** 2, axis=1)
    others = 1.0 - np.eye(k_users)
    cross = np.einsum("tnk,tnj->tkj", g_hat.conj(), g) * others  # ghat_k^H g_j, j != k
    parts = {
        "s0": np.sqrt(p_u) * gain * s,
        "i1": np.sqrt(p_u) * np.einsum("tnk,tnk->tk", g_hat.conj(), xi) * s,
        "i2": np.sqrt(p_u) * np.einsum("tkj,tj->tk", cross, s),
        "i3": np.einsum("tnk,tn->tk", g_hat.conj(), z),
    }
    cond = {
        "s0": p_u * gain**2,
        "i1": p_u * np.abs(np.einsum("tnk,tnk->tk", g_hat.conj(), xi)) ** 2,
        "i2": p_u * np.sum(np.abs(cross) ** 2, axis=2),
        "i3": sigma * gain,
    }
    sums: dict = {}
    _accumulate(sums, parts, s, soft, cond)
    sums["e_gain"] = gain.sum(axis=0)
    return sums


def simulate_ul_nu_terms(beta_cbs: np.ndarray, n_cbs: int, p_u: float, sigma_z_sq: float,
                         trials: int = 100_000, rng=0, workers: int = 1,
                         chunk: int = DEFAULT_CHUNK) -> OracleResult:
    """Matched filtering at the CBS array; every user is evaluated."""
    beta = np.asarray(beta_cbs, dtype=float)
    sums = _run(_ul_nu_kernel, (beta, n_cbs, p_u, sigma_z_sq), trials, rng, workers, chunk)
    return _finish(sums, trials, ("s0", "i1", "i2", "i3"))


def _ul_fu_kernel(job):
    (beta, alpha, combining, p_u, sigma), n, seed = job
    rng = np.random.default_rng(seed)
    n_aps, k_users = beta.shape
    g = np.sqrt(beta) * complex_normal(rng, (n, n_aps, k_users))
    g_hat, xi = mmse_estimate_realization(g, beta, p_u, sigma, rng)
    g_hat = g_hat * combining  # APs outside a user's set do not forward
    s = complex_normal(rng, (n, k_users))
    z = complex_normal(rng, (n, n_aps), sigma)

    rx = np.sqrt(p_u) * np.einsum("tmk,tk->tm", g, s) + z
    soft = np.einsum("tmk,tm->tk", g_hat.conj(), rx)
    cross = np.einsum("tmk,tmj->tkj", g_hat.conj(), g) * (1.0 - np.eye(k_users))
    a = (alpha * combining).sum(axis=0)
    gain = np.sum(np.abs(g_hat) ** 2, axis=1)
    parts = {
        "s0": np.sqrt(p_u) * a * s,
        "i1": np.sqrt(p_u) * np.einsum("tmk,tmk->tk", g_hat.conj(), xi) * s,
        "i2": np.sqrt(p_u) * np.einsum("tkj,tj->tk", cross, s),
        "i3": np.einsum("tmk,tm->tk", g_hat.conj(), z),
        "i4": np.sqrt(p_u) * (gain - a) * s,
    }
    cond = {
        "s0": np.broadcast_to(p_u * a**2, gain.shape),
        "i1": p_u * np.abs(np.einsum("tmk,tmk->tk", g_hat.conj(), xi)) ** 2,
        "i2": p_u * np.sum(np.abs(cross) ** 2, axis=2),
        "i3": sigma * gain,
        "i4": p_u * (gain - a) ** 2,
    }
    sums: dict = {}
    _accumulate(sums, parts, s, soft, cond)
    return sums


def simulate_ul_fu_terms(beta_ap: np.ndarray, p_u: float, sigma_z_sq: float,
                         trials: int = 100_000, rng=0, combining: np.ndarray | None = None,
                         workers: int = 1, chunk: int = DEFAULT_CHUNK) -> OracleResult:
    """AP-side matched filtering combined at the CBS with statistical CSI."""
    beta = np.asarray(beta_ap, dtype=float)
    alpha = mmse_variance(beta, p_u, sigma_z_sq)
    mask = np.ones(beta.shape) if combining is None else np.asarray(combining, dtype=float)
    sums = _run(_ul_fu_kernel, (beta, alpha, mask, p_u, sigma_z_sq), trials, rng, workers, chunk)
    return _finish(sums, trials, TERM_NAMES)


# ---------------------------------------------------------------------------
# downlink
# ---------------------------------------------------------------------------

def _dl_nu_kernel(job):
    (beta, eta, p_u, p_d, sigma), n, seed = job
    rng = np.random.default_rng(seed)
    n_cbs, k_users = eta.shape
    alpha = mmse_variance(beta, p_u, sigma)
    g = np.sqrt(beta) * complex_normal(rng, (n, n_cbs, k_users))
    g_hat, xi = mmse_estimate_realization(g, beta, p_u, sigma, rng)
    d = complex_normal(rng, (n, k_users))
    z = complex_normal(rng, (n, k_users), sigma)

    root = np.sqrt(eta)
    x = np.einsum("mk,tmk,tk->tm", root, g_hat.conj(), d)  # per-antenna transmit signal
    y = np.sqrt(p_d) * np.einsum("tmk,tm->tk", g, x) + z
    eff = np.einsum("mk,tmk->tk", root, np.abs(g_hat) ** 2)  # sum_m sqrt(eta) |ghat|^2
    mean_gain = root.sum(axis=0) * alpha
    # g_hat_k^T sqrt(eta_j) conj(g_hat_j) for j != k
    beam_gain = np.einsum("tmk,mj,tmj->tkj", g_hat, root, g_hat.conj()) * (1.0 - np.eye(k_users))
    parts = {
        "s0": np.sqrt(p_d) * mean_gain * d,
        "i1": np.sqrt(p_d) * np.einsum("tmk,tm->tk", xi, x),
        "i2": np.sqrt(p_d) * np.einsum("tkj,tj->tk", beam_gain, d),
        "i3": z,
        "i4": np.sqrt(p_d) * (eff - mean_gain) * d,
    }
    err_gain = np.einsum("tmk,mj,tmj->tkj", xi, root, g_hat.conj())  # xi_k^T sqrt(eta_j) conj(ghat_j)
    cond = {
        "s0": np.broadcast_to(p_d * mean_gain**2, eff.shape),
        "i1": p_d * np.sum(np.abs(err_gain) ** 2, axis=2),
        "i2": p_d * np.sum(np.abs(beam_gain) ** 2, axis=2),
        "i3": np.full(eff.shape, sigma),
        "i4": p_d * (eff - mean_gain) ** 2,
    }
    sums: dict = {}
    _accumulate(sums, parts, d, y, cond)
    sums["e_tx_power"] = np.sum(np.abs(x) ** 2, axis=0)
    return sums


def simulate_dl_nu_terms(beta_cbs: np.ndarray, eta_cbs: np.ndarray, p_u: float, p_d: float,
                         sigma_z_sq: float, trials: int = 100_000, rng=0, workers: int = 1,
                         chunk: int = DEFAULT_CHUNK) -> OracleResult:
    """CBS conjugate beamforming to the served users; users know only statistics.

    ``beta_cbs`` and the columns of ``eta_cbs`` (N_b, n) cover the served
    users. ``extras['tx_power']`` is the mean per-antenna transmit power.
    """
    beta = np.asarray(beta_cbs, dtype=float)
    sums = _run(_dl_nu_kernel, (beta, np.asarray(eta_cbs, dtype=float), p_u, p_d, sigma_z_sq),
                trials, rng, workers, chunk)
    return _finish(sums, trials, TERM_NAMES)


def _dl_fu_kernel(job):
    (beta, eta, p_u, p_d, sigma), n, seed = job
    rng = np.random.default_rng(seed)
    n_aps, k_users = beta.shape
    g = np.sqrt(beta) * complex_normal(rng, (n, n_aps, k_users))
    g_hat, xi = mmse_estimate_realization(g, beta, p_u, sigma, rng)
    # DL pilots: each user estimates its channels to the activated APs
    g_dl, _ = mmse_estimate_realization(g, beta, p_d, sigma, rng)
    d = complex_normal(rng, (n, k_users))
    z = complex_normal(rng, (n, k_users), sigma)

    per_user = np.sqrt(eta) * g_hat.conj() * d[:, None, :]  # sqrt(eta_mj) conj(ghat_mj) d_j
    x = per_user.sum(axis=2)
    y = np.sqrt(p_d) * np.einsum("tmk,tm->tk", g, x) + z
    root = np.sqrt(eta)
    # g_k^T sqrt(eta_j) conj(g_hat_j) for j != k
    leak = np.einsum("tmk,mj,tmj->tkj", g, root, g_hat.conj()) * (1.0 - np.eye(k_users))
    gain = np.einsum("mk,tmk->tk", root, np.abs(g_hat) ** 2)
    parts = {
        "s0": np.sqrt(p_d) * gain * d,
        "i1": np.sqrt(p_d) * np.einsum("mk,tmk->tk", root, xi * g_hat.conj()) * d,
        "i2": np.sqrt(p_d) * np.einsum("tkj,tj->tk", leak, d),
        "i3": z,
    }
    cond = {
        "s0": p_d * gain**2,
        "i1": p_d * np.abs(np.einsum("mk,tmk->tk", root, xi * g_hat.conj())) ** 2,
        "i2": p_d * np.sum(np.abs(leak) ** 2, axis=2),
        "i3": np.full(d.shape, sigma),
    }
    sums: dict = {}
    _accumulate(sums, parts, d, y, cond)
    sums["e_tx_power"] = np.sum(np.abs(x) ** 2, axis=0)
    sums["e_dl_estimate_power"] = np.sum(np.abs(g_dl) ** 2, axis=0)
    return sums


def simulate_dl_fu_terms(beta_f: np.ndarray, eta_ap: np.ndarray, p_u: float, p_d: float,
                         sigma_z_sq: float, trials: int = 100_000, rng=0, workers: int = 1,
                         chunk: int = DEFAULT_CHUNK) -> OracleResult:
    """Activated APs beamform to far users, who detect coherently.

    ``beta_f`` and ``eta_ap`` are (|activated APs|, |far users|).
    ``extras['dl_estimate_power']`` is the empirical variance of the users'
    DL-pilot estimates, to compare with ``psi``.
    """
    beta = np.asarray(beta_f, dtype=float)
    sums = _run(_dl_fu_kernel, (beta, np.asarray(eta_ap, dtype=float), p_u, p_d, sigma_z_sq),
                trials, rng, workers, chunk)
    return _finish(sums, trials, ("s0", "i1", "i2", "i3"))


# ---------------------------------------------------------------------------
# validation suite
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CheckRow:
    path: str
    user: int
    quantity: str
    empirical: float
    closed_form: float
    tolerance: float

    @property
    def rel_error(self) -> float:
        if self.closed_form == 0:
            return abs(self.empirical)
        return abs(self.empirical - self.closed_form) / abs(self.closed_form)

    @property
    def passed(self) -> bool:
        return self.rel_error < self.tolerance


@dataclass(frozen=True)
class OracleInstance:
    config: NetworkConfig
    sigma_z_sq: float
    beta_cbs: np.ndarray  # (K,)
    beta_ap: np.ndarray  # (M - N_b, K)


def oracle_instance(config: NetworkConfig | None = None, seed: int = 2024) -> OracleInstance:
    """Reduced-scale large-scale realization (M=16, N_b=8, K=4 by default)."""
    if config is None:
        config = NetworkConfig(total_antennas=16, users=4, cbs_antennas=8, epochs=1)
    rng = np.random.default_rng(seed)
    topo = sample_topology(config, rng)
    lsf = large_scale(topo, config, rng)
    return OracleInstance(config, noise_power(config), lsf.beta_cbs, lsf.beta_ap)


def validate(instance: OracleInstance | None = None, trials: int = 100_000, seed: int = 7,
             workers: int = 1, term_tol: float = 0.03, sinr_tol: float = 0.05) -> list[CheckRow]:
    """Run all four paths and compare each term and assembled SINR to its closed form.

    Every user is evaluated on every path: the CBS serves all of them for
    the near-user paths, and for the far-user DL each user activates its
    strongest AP.
    """
    inst = instance or oracle_instance()
    cfg, sigma = inst.config, inst.sigma_z_sq
    p_u, p_d = cfg.p_u, cfg.p_d
    n_cbs = cfg.cbs_antennas
    seeds = np.random.SeedSequence(seed).spawn(4)
    rows: list[CheckRow] = []

    def compare(path, result, closed_terms, closed_sinr, names):
        for k, (emp, ref) in enumerate(zip(result.terms, closed_terms)):
            for name in names:
                rows.append(CheckRow(path, k, name, getattr(emp, name), getattr(ref, name), term_tol))
            rows.append(CheckRow(path, k, "sinr", emp.sinr, float(closed_sinr[k]), sinr_tol))

    # UL, CBS
    alpha0 = mmse_variance(inst.beta_cbs, p_u, sigma)
    res = simulate_ul_nu_terms(inst.beta_cbs, n_cbs, p_u, sigma, trials, seeds[0], workers)
    k_all = range(len(alpha0))
    compare("ul_nu", res, [ul_nu_terms(k, alpha0, inst.beta_cbs, n_cbs, p_u, sigma) for k in k_all],
            ul_sinr_nu(alpha0, inst.beta_cbs, n_cbs, p_u, sigma), ("s0", "i1", "i2", "i3"))

    # UL, APs
    alpha = mmse_variance(inst.beta_ap, p_u, sigma)
    res = simulate_ul_fu_terms(inst.beta_ap, p_u, sigma, trials, seeds[1], workers=workers)
    compare("ul_fu", res, [ul_fu_terms(k, alpha, inst.beta_ap, p_u, sigma) for k in k_all],
            ul_sinr_fu(alpha, inst.beta_ap, p_u, sigma), TERM_NAMES)

    # DL, CBS
    eta_cbs = full_power_control(np.broadcast_to(alpha0, (n_cbs, len(alpha0))))
    res = simulate_dl_nu_terms(inst.beta_cbs, eta_cbs, p_u, p_d, sigma, trials, seeds[2], workers)
    compare("dl_nu", res, [dl_nu_terms(k, alpha0, inst.beta_cbs, eta_cbs, p_d, sigma) for k in k_all],
            dl_sinr_nu(alpha0, inst.beta_cbs, eta_cbs, p_d, sigma), TERM_NAMES)
    for m, power in enumerate(res.extras["tx_power"]):
        rows.append(CheckRow("dl_nu", -1, f"tx_power[{m}]", float(power), 1.0, term_tol))

    # DL, activated APs
    users = np.arange(len(alpha0))
    active = select_activated_aps(inst.beta_ap, users)
    beta_f = inst.beta_ap[active]
    alpha_f = alpha[active]
    eta_ap = full_power_control(alpha_f)
    res = simulate_dl_fu_terms(beta_f, eta_ap, p_u, p_d, sigma, trials, seeds[3], workers)
    compare("dl_fu", res, [dl_fu_terms(k, alpha_f, beta_f, eta_ap, p_d, sigma) for k in k_all],
            dl_sinr_fu(alpha_f, beta_f, eta_ap, p_d, sigma), ("s0", "i1", "i2", "i3"))
    psi = mmse_variance(beta_f, p_d, sigma)
    for m, k in np.ndindex(psi.shape):
        rows.append(CheckRow("dl_fu", k, f"psi[{active[m]}]", float(res.extras["dl_estimate_power"][m, k]),
                             float(psi[m, k]), term_tol))
    return rows
