"""MMSE channel estimation from orthogonal pilots."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import LargeScaleFading, complex_normal


@dataclass(frozen=True)
class EstimationStats:
    alpha_cbs: np.ndarray  # (K,) UL estimate variance toward the CBS array
    alpha_ap: np.ndarray  # (n_aps, K)
    psi_ap: np.ndarray  # (|activated APs|, |far users|) DL-pilot estimate variance at far users


def mmse_variance(beta, power, sigma_z_sq):
    """Variance of the MMSE estimate, ``p*beta**2 / (p*beta + sigma^2)``."""
    beta = np.asarray(beta, dtype=float)
    out = power * beta**2 / (power * beta + sigma_z_sq)
    return out if out.ndim else float(out)


def mmse_estimate_realization(g_true, beta, power, sigma_z_sq, rng: np.random.Generator):
    """Simulate one pilot observation and return ``(g_hat, error)``.

    The pilot symbol is 1, so the received pilot is ``sqrt(p)*g + z``.
    Works elementwise on arrays; ``beta`` broadcasts against ``g_true``.
    """
    g_true = np.asarray(g_true)
    beta = np.asarray(beta, dtype=float)
    received = np.sqrt(power) * g_true + complex_normal(rng, g_true.shape, sigma_z_sq)
    g_hat = (np.sqrt(power) * beta / (power * beta + sigma_z_sq)) * received
    return g_hat, g_true - g_hat


def estimation_stats(lsf: LargeScaleFading, p_u: float, p_d: float, sigma_z_sq: float,
                     activated_aps=(), far_users=()) -> EstimationStats:
    activated_aps = np.asarray(activated_aps, dtype=int)
    far_users = np.asarray(far_users, dtype=int)
    psi = mmse_variance(lsf.beta_ap[np.ix_(activated_aps, far_users)], p_d, sigma_z_sq)
    return EstimationStats(
        alpha_cbs=np.asarray(mmse_variance(lsf.beta_cbs, p_u, sigma_z_sq)),
        alpha_ap=np.asarray(mmse_variance(lsf.beta_ap, p_u, sigma_z_sq)),
        psi_ap=np.asarray(psi),
    )
