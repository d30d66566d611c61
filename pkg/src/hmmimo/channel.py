"""Large-scale fading, thermal noise and per-RB small-scale fading."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import NetworkConfig
from .deployment import Topology


@dataclass(frozen=True)
class LargeScaleFading:
    """Linear power gains.

    ``beta_cbs[k]`` is shared by all ``n_cbs`` collocated CBS antennas;
    ``beta_ap`` has one row per single-antenna AP.
    """

    beta_cbs: np.ndarray  # (K,)
    beta_ap: np.ndarray  # (n_aps, K)
    n_cbs: int

    @property
    def n_users(self) -> int:
        return len(self.beta_cbs)

    def with_aps(self, n_aps: int, n_cbs: int | None = None) -> "LargeScaleFading":
        return LargeScaleFading(self.beta_cbs, self.beta_ap[:n_aps], self.n_cbs if n_cbs is None else n_cbs)


@dataclass(frozen=True)
class SmallScaleRealization:
    h_cbs: np.ndarray  # (N_b, K) complex
    h_ap: np.ndarray  # (n_aps, K) complex


def cost_hata_constant(config: NetworkConfig) -> float:
    """Distance-independent part of the COST-Hata loss, in dB."""
    f_mhz = config.carrier_frequency * 1e3
    log_f = np.log10(f_mhz)
    return (46.3 + 33.9 * log_f - 13.82 * np.log10(config.ap_height)
            - (1.1 * log_f - 0.7) * config.ue_height + (1.56 * log_f - 0.8))


def path_loss_db(distance, config: NetworkConfig):
    """Three-slope COST-Hata path gain in dB (negative numbers).

    ``distance`` is in meters and may be an array. Slopes are 0, 20 and
    35 dB/decade below ``d0``, between the breakpoints and beyond ``d1``.
    Distances at or below ``d0`` (including 0) share the flat branch.
    """
    d_km = np.maximum(np.asarray(distance, dtype=float), config.d0) / 1e3
    d0_km, d1_km = config.d0 / 1e3, config.d1 / 1e3
    base = -cost_hata_constant(config)
    far = base - 35.0 * np.log10(d_km)
    mid = base - 15.0 * np.log10(d1_km) - 20.0 * np.log10(d_km)
    out = np.where(d_km > d1_km, far, mid)
    return out if out.ndim else float(out)


def large_scale(topology: Topology, config: NetworkConfig, rng: np.random.Generator,
                n_cbs: int | None = None) -> LargeScaleFading:
    """Path loss plus independent log-normal shadowing per (site, user).

    The CBS is one site: a single shadowing draw per user. Draw order is
    CBS first, then the AP matrix row by row.
    """
    sd = config.shadowing_stddev
    n_users = len(topology.user_positions)
    cbs_db = path_loss_db(topology.user_cbs_distances(), config) + sd * rng.standard_normal(n_users)
    ap_db = path_loss_db(topology.ap_user_distances(), config) + sd * rng.standard_normal((topology.n_aps, n_users))
    return LargeScaleFading(
        beta_cbs=10.0 ** (cbs_db / 10.0),
        beta_ap=10.0 ** (ap_db / 10.0),
        n_cbs=config.cbs_antennas if n_cbs is None else n_cbs,
    )


def noise_power(config: NetworkConfig) -> float:
    """Receiver noise power in watts."""
    dbm = config.noise_density + config.noise_figure + 10.0 * np.log10(config.bandwidth)
    return float(10.0 ** ((dbm - 30.0) / 10.0))


def complex_normal(rng: np.random.Generator, size, variance=1.0) -> np.ndarray:
    """Circularly-symmetric complex Gaussian samples with the given variance."""
    scale = np.sqrt(np.asarray(variance, dtype=float) / 2.0)
    return scale * (rng.standard_normal(size) + 1j * rng.standard_normal(size))


def sample_small_scale(n_cbs: int, n_aps: int, n_users: int, rng: np.random.Generator) -> SmallScaleRealization:
    """One block-fading draw; the same coefficients serve UL and DL (reciprocity)."""
    return SmallScaleRealization(
        h_cbs=complex_normal(rng, (n_cbs, n_users)),
        h_ap=complex_normal(rng, (n_aps, n_users)),
    )
