"""Heterogeneous cell-free massive MIMO: closed-form SINRs, a signal-level oracle and a Monte Carlo campaign runner."""

from .channel import LargeScaleFading, large_scale, noise_power, path_loss_db, sample_small_scale
from .config import ConfigError, NetworkConfig, load_config
from .deployment import (Topology, UserPartition, classify_users, sample_topology,
                         select_activated_aps, select_ucm_clusters)
from .estimation import EstimationStats, estimation_stats, mmse_estimate_realization, mmse_variance
from .harness import CdfSummary, collect_samples, percentile, run_campaign
from .sinr import (PowerControl, SinrReport, TermVariances, dl_sinr_fu, dl_sinr_nu,
                   full_power_control, scheme_sinrs, sum_capacity, ul_sinr_fu, ul_sinr_nu)

__version__ = "0.1.0"
