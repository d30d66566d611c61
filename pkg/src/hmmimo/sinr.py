"""Closed-form effective SINRs, spectral efficiencies and sum capacities.

Four deployments share the same handful of formulas:

* ``HmMIMO``: a CBS array serves near users, distributed APs serve far
  users. Far users get DL pilots from their strongest AP and detect
  coherently.
* ``mMIMO``: one collocated array with all ``M`` antennas serves everyone.
* ``CFmMIMO``: ``M`` single-antenna APs serve everyone, statistical CSI in DL.
* ``UCmMIMO``: like ``CFmMIMO`` but each user is served by its strongest
  ``ucm_cluster_size`` APs.

All SINRs are linear; spectral efficiencies are in bits/s/Hz.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import LargeScaleFading, noise_power
from .config import ConfigError, NetworkConfig
from .deployment import UserPartition, select_ucm_clusters
from .estimation import EstimationStats, estimation_stats

SCHEMES = ("HmMIMO", "mMIMO", "CFmMIMO", "UCmMIMO")


class NumericalIntegrityError(ArithmeticError):
    """A closed-form denominator that must be positive was not."""


@dataclass(frozen=True)
class TermVariances:
    """Second moments of the soft-estimate decomposition.

    ``s0`` is the desired signal; ``i1`` estimation error, ``i2`` inter-user
    interference, ``i3`` noise and ``i4`` channel uncertainty (zero on
    coherent paths).
    """

    s0: float
    i1: float
    i2: float
    i3: float
    i4: float = 0.0

    @property
    def interference(self) -> float:
        return self.i1 + self.i2 + self.i3 + self.i4

    @property
    def sinr(self) -> float:
        return self.s0 / self.interference

    def as_dict(self) -> dict[str, float]:
        return {"s0": self.s0, "i1": self.i1, "i2": self.i2, "i3": self.i3, "i4": self.i4}


@dataclass(frozen=True)
class PowerControl:
    """DL power-control coefficients.

    ``eta_ap`` rows follow the transmitting AP set, ``eta_cbs`` rows the
    CBS antennas; columns follow the served users of each side.
    """

    eta_ap: np.ndarray
    eta_cbs: np.ndarray


@dataclass(frozen=True)
class SinrReport:
    scheme: str
    ul_sinr: np.ndarray
    dl_sinr: np.ndarray
    ul_se: np.ndarray
    dl_se: np.ndarray
    near_mask: np.ndarray  # users in the CBS-served DL group
    ul_capacity: float
    dl_capacity: float


def spectral_efficiency(sinr):
    return np.log2(1.0 + np.asarray(sinr, dtype=float))


# ---------------------------------------------------------------------------
# power control
# ---------------------------------------------------------------------------

def full_power_control(alpha: np.ndarray, served: np.ndarray | None = None) -> np.ndarray:
    """Full-power conjugate beamforming coefficients.

    Every antenna splits its power evenly in the estimate-weighted sense:
    ``eta_m = 1 / sum_{k served by m} alpha_mk``, so that
    ``sum_k eta_mk * alpha_mk = 1``. ``served`` is an optional boolean mask
    shaped like ``alpha``; without it every column is served. Antennas
    serving nobody get zero.
    """
    alpha = np.asarray(alpha, dtype=float)
    if served is None:
        served = np.ones(alpha.shape, dtype=bool)
    load = np.where(served, alpha, 0.0).sum(axis=1)
    eta_m = np.divide(1.0, load, out=np.zeros_like(load), where=load > 0)
    return np.where(served, eta_m[:, None], 0.0)


def check_power_budget(eta: np.ndarray, alpha: np.ndarray, rtol: float = 1e-9) -> None:
    """Per-antenna transmit power ``sum_k eta_mk * alpha_mk`` must not exceed 1."""
    load = (np.asarray(eta) * np.asarray(alpha)).sum(axis=1)
    if np.any(np.asarray(eta) < 0) or np.any(load > 1.0 + rtol):
        raise ConfigError("power control violates the per-antenna budget")


# ---------------------------------------------------------------------------
# uplink
# ---------------------------------------------------------------------------

def ul_sinr_nu(alpha0, beta0_all, n_cbs: int, p_u: float, sigma_z_sq: float):
    """Matched-filter UL SINR at the CBS array.

    ``alpha0`` holds the evaluated users' estimate variances; the
    interference sum runs over every user in ``beta0_all``.
    """
    alpha0 = np.asarray(alpha0, dtype=float)
    denom = np.sum(beta0_all) - alpha0 + sigma_z_sq / p_u
    return n_cbs * alpha0 / denom


def ul_sinr_fu(alpha: np.ndarray, beta: np.ndarray, p_u: float, sigma_z_sq: float,
               combining: np.ndarray | None = None) -> np.ndarray:
    """UL SINR of AP-side matched filtering with statistical CSI at the CBS.

    ``alpha`` and ``beta`` are (n_aps, K). ``combining`` optionally limits
    which APs contribute to each user's soft estimate. Returns one value
    per user; a user with no combining AP gets 0.
    """
    alpha = np.asarray(alpha, dtype=float)
    if combining is not None:
        alpha = np.where(combining, alpha, 0.0)
    gain = alpha.sum(axis=0)
    received = np.asarray(beta, dtype=float).sum(axis=1)  # total power at each AP
    denom = (alpha * received[:, None]).sum(axis=0) + (sigma_z_sq / p_u) * gain
    return np.divide(gain**2, denom, out=np.zeros_like(gain), where=denom > 0)


# ---------------------------------------------------------------------------
# downlink
# ---------------------------------------------------------------------------

def dl_sinr_statistical(alpha: np.ndarray, beta: np.ndarray, eta: np.ndarray,
                        p_d: float, sigma_z_sq: float) -> np.ndarray:
    """DL SINR when users know only the mean of their effective gain.

    Arrays are (n_antennas, n_users); ``eta`` is zero where an antenna does
    not serve a user.
    """
    alpha = np.asarray(alpha, dtype=float)
    eta = np.asarray(eta, dtype=float)
    num = (np.sqrt(eta) * alpha).sum(axis=0) ** 2
    load = (eta * alpha).sum(axis=1)
    denom = (np.asarray(beta, dtype=float) * load[:, None]).sum(axis=0) + sigma_z_sq / p_d
    return num / denom


def dl_sinr_nu(alpha0, beta0, eta_cbs: np.ndarray, p_d: float, sigma_z_sq: float) -> np.ndarray:
    """DL SINR of CBS-served users under conjugate beamforming.

    ``alpha0`` and ``beta0`` cover the served users only; ``eta_cbs`` is
    (N_b, n_served).
    """
    eta_cbs = np.asarray(eta_cbs, dtype=float)
    n_cbs = eta_cbs.shape[0]
    alpha = np.broadcast_to(np.asarray(alpha0, dtype=float), (n_cbs, len(alpha0)))
    beta = np.broadcast_to(np.asarray(beta0, dtype=float), (n_cbs, len(beta0)))
    return dl_sinr_statistical(alpha, beta, eta_cbs, p_d, sigma_z_sq)


def dl_sinr_fu(alpha_f: np.ndarray, beta_f: np.ndarray, eta_ap: np.ndarray,
               p_d: float, sigma_z_sq: float) -> np.ndarray:
    """DL SINR of far users detecting coherently with DL pilots.

    Arrays are (|activated APs|, |far users|). The coherent receiver removes
    the self-interference ``sum_m eta_mk * alpha_mk**2``.
    """
    alpha_f = np.asarray(alpha_f, dtype=float)
    eta_ap = np.asarray(eta_ap, dtype=float)
    num = (np.sqrt(eta_ap) * alpha_f).sum(axis=0) ** 2
    load = (eta_ap * alpha_f).sum(axis=1)
    denom = ((np.asarray(beta_f, dtype=float) * load[:, None]).sum(axis=0)
             - (eta_ap * alpha_f**2).sum(axis=0) + sigma_z_sq / p_d)
    if np.any(denom <= 0):
        raise NumericalIntegrityError(f"non-positive far-user DL denominator: {denom.min()!r}")
    return num / denom


# ---------------------------------------------------------------------------
# proof terms
# ---------------------------------------------------------------------------

def ul_nu_terms(k: int, alpha0: np.ndarray, beta0: np.ndarray, n_cbs: int,
                p_u: float, sigma_z_sq: float) -> TermVariances:
    a, b = alpha0[k], beta0[k]
    others = np.sum(beta0) - b
    return TermVariances(
        s0=p_u * (n_cbs * a) ** 2,
        i1=p_u * n_cbs * a * (b - a),
        i2=p_u * n_cbs * a * others,
        i3=sigma_z_sq * n_cbs * a,
    )


def ul_fu_terms(k: int, alpha: np.ndarray, beta: np.ndarray, p_u: float, sigma_z_sq: float) -> TermVariances:
    a, b = alpha[:, k], beta[:, k]
    others = beta.sum(axis=1) - b
    return TermVariances(
        s0=p_u * a.sum() ** 2,
        i1=p_u * np.sum(a * (b - a)),
        i2=p_u * np.sum(a * others),
        i3=sigma_z_sq * a.sum(),
        i4=p_u * np.sum(a**2),
    )


def dl_nu_terms(k: int, alpha0: np.ndarray, beta0: np.ndarray, eta_cbs: np.ndarray,
                p_d: float, sigma_z_sq: float) -> TermVariances:
    """Terms of ``y_k`` split as mean gain, estimation error, IUI, noise, gain uncertainty.

    Indices refer to the served-user columns of ``eta_cbs`` (N_b, n_served).
    """
    a, b = alpha0[k], beta0[k]
    per_ant = eta_cbs @ alpha0  # sum_k' eta_mk' alpha_k'
    own = eta_cbs[:, k] * a
    return TermVariances(
        s0=p_d * (np.sqrt(eta_cbs[:, k]).sum() * a) ** 2,
        i1=p_d * (b - a) * per_ant.sum(),
        i2=p_d * a * (per_ant - own).sum(),
        i3=sigma_z_sq,
        i4=p_d * a * own.sum(),
    )


def dl_fu_terms(k: int, alpha_f: np.ndarray, beta_f: np.ndarray, eta_ap: np.ndarray,
                p_d: float, sigma_z_sq: float) -> TermVariances:
    """Coherent far-user terms: mean desired gain, estimation error, IUI, noise."""
    a, b, e = alpha_f[:, k], beta_f[:, k], eta_ap[:, k]
    load_others = (eta_ap * alpha_f).sum(axis=1) - e * a
    return TermVariances(
        s0=p_d * np.sum(np.sqrt(e) * a) ** 2,
        i1=p_d * np.sum(e * a * (b - a)),
        i2=p_d * np.sum(b * load_others),
        i3=sigma_z_sq,
    )


# ---------------------------------------------------------------------------
# schemes
# ---------------------------------------------------------------------------

def resource_split(config: NetworkConfig, n_near: int, n_far: int) -> tuple[float, float]:
    """DL resource fractions ``(w_near, w_far)``; an empty group cedes everything."""
    if n_near == 0 or n_far == 0:
        return (1.0 if n_near else 0.0, 1.0 if n_far else 0.0)
    if config.dl_split == "equal":
        return 0.5, 0.5
    total = n_near + n_far
    return n_near / total, n_far / total


def sum_capacity(report: SinrReport, split: tuple[float, float]) -> tuple[float, float]:
    """UL and DL sum capacity in bits/s/Hz.

    All users share the UL resource; the DL is weighted by the near/far
    resource fractions in ``split``.
    """
    w_near, w_far = split
    if not (0.0 <= w_near <= 1.0 and 0.0 <= w_far <= 1.0):
        raise ConfigError(f"resource fractions must lie in [0, 1], got {split}")
    near = report.near_mask
    ul = float(report.ul_se.sum())
    dl = float(w_near * report.dl_se[near].sum() + w_far * report.dl_se[~near].sum())
    return ul, dl


def _overhead(config: NetworkConfig, pilots: int) -> float:
    if not config.pilot_overhead:
        return 1.0
    rus = config.frame_symbols * config.rb_subcarriers
    return (rus - pilots) / rus


def scheme_kind(scheme: str) -> str:
    kind = scheme.split("-", 1)[0]
    if kind not in SCHEMES:
        raise ConfigError(f"unknown scheme '{scheme}' (expected one of {SCHEMES}, optionally 'HmMIMO-1/4')")
    return kind


def scheme_sinrs(scheme: str, lsf: LargeScaleFading, config: NetworkConfig,
                 partition: UserPartition | None = None, est: EstimationStats | None = None,
                 power: PowerControl | None = None, sigma_z_sq: float | None = None) -> SinrReport:
    """Per-user UL/DL SINR and SE of one scheme on one large-scale realization.

    ``lsf`` must already describe the scheme's deployment: for ``mMIMO``
    ``lsf.n_cbs`` is the full array size, for ``CFmMIMO``/``UCmMIMO`` the
    AP matrix holds all ``M`` APs. ``HmMIMO`` needs ``partition``.
    """
    kind = scheme_kind(scheme)
    sigma = noise_power(config) if sigma_z_sq is None else sigma_z_sq
    n_users = lsf.n_users
    p_u, p_d = config.p_u, config.p_d

    if kind == "HmMIMO":
        if partition is None:
            raise ConfigError("HmMIMO needs a user partition")
        near, far, active = partition.near_users, partition.far_users, partition.activated_aps
        if len(near) + len(far) != n_users:
            raise ConfigError("partition does not cover every user")
        if len(far) and lsf.beta_ap.shape[0] == 0:
            raise ConfigError("HmMIMO has far users but no APs")
    elif kind == "mMIMO":
        near, far, active = np.arange(n_users), np.array([], dtype=int), np.array([], dtype=int)
    else:
        near, far, active = np.array([], dtype=int), np.arange(n_users), np.arange(lsf.beta_ap.shape[0])

    if est is None:
        est = estimation_stats(lsf, p_u, p_d, sigma, active if kind == "HmMIMO" else (), far if kind == "HmMIMO" else ())
    if est.alpha_ap.shape != lsf.beta_ap.shape or est.alpha_cbs.shape != lsf.beta_cbs.shape:
        raise ConfigError("estimation statistics do not match the large-scale fading dimensions")

    ul = np.zeros(n_users)
    dl = np.zeros(n_users)
    dl_pilots = 0

    if kind in ("HmMIMO", "mMIMO"):
        if len(near):
            ul[near] = ul_sinr_nu(est.alpha_cbs[near], lsf.beta_cbs, lsf.n_cbs, p_u, sigma)
            eta_cbs = (power.eta_cbs if power is not None
                       else full_power_control(np.broadcast_to(est.alpha_cbs[near], (lsf.n_cbs, len(near)))))
            check_power_budget(eta_cbs, np.broadcast_to(est.alpha_cbs[near], eta_cbs.shape))
            dl[near] = dl_sinr_nu(est.alpha_cbs[near], lsf.beta_cbs[near], eta_cbs, p_d, sigma)
        if len(far):
            ul[far] = ul_sinr_fu(est.alpha_ap, lsf.beta_ap, p_u, sigma)[far]
            alpha_f = est.alpha_ap[np.ix_(active, far)]
            eta_ap = power.eta_ap if power is not None else full_power_control(alpha_f)
            check_power_budget(eta_ap, alpha_f)
            dl[far] = dl_sinr_fu(alpha_f, lsf.beta_ap[np.ix_(active, far)], eta_ap, p_d, sigma)
            dl_pilots = n_users  # K DL-pilot RUs per RB, like the UL
    else:
        serving = None
        if kind == "UCmMIMO":
            serving = select_ucm_clusters(lsf.beta_ap, config.ucm_cluster_size)
        ul = ul_sinr_fu(est.alpha_ap, lsf.beta_ap, p_u, sigma, combining=serving)
        eta = power.eta_ap if power is not None else full_power_control(est.alpha_ap, serving)
        check_power_budget(eta, est.alpha_ap)
        dl = dl_sinr_statistical(est.alpha_ap, lsf.beta_ap, eta, p_d, sigma)

    ul_se = spectral_efficiency(ul) * _overhead(config, n_users)
    dl_se = spectral_efficiency(dl)
    if dl_pilots:
        dl_se[far] *= _overhead(config, dl_pilots)

    near_mask = np.zeros(n_users, dtype=bool)
    near_mask[near] = True
    split = resource_split(config, len(near), len(far)) if kind == "HmMIMO" else (1.0, 1.0)
    report = SinrReport(kind, ul, dl, ul_se, dl_se, near_mask, 0.0, 0.0)
    ul_cap, dl_cap = sum_capacity(report, split)
    return SinrReport(kind, ul, dl, ul_se, dl_se, near_mask, ul_cap, dl_cap)
