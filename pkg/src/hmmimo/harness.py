"""Epoch loop, sample collection and percentile summaries."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .channel import LargeScaleFading, large_scale, noise_power
from .config import ConfigError, NetworkConfig
from .deployment import classify_users, sample_topology, select_activated_aps, UserPartition
from .sinr import scheme_kind, scheme_sinrs

DEFAULT_SCHEMES = ("HmMIMO-1/2", "HmMIMO-1/4", "mMIMO", "CFmMIMO", "UCmMIMO")
METRICS = ("ul_se", "dl_se", "ul_capacity", "dl_capacity")


@dataclass(frozen=True)
class CdfSummary:
    scheme: str
    metric: str
    samples: np.ndarray  # sorted ascending
    p05: float
    p50: float
    p95: float


@dataclass
class CampaignSamples:
    """Raw per-epoch samples: ``data[scheme][metric]``.

    SE arrays are (epochs, K); capacity arrays are (epochs,).
    """

    config: NetworkConfig
    schemes: tuple[str, ...]
    data: dict[str, dict[str, np.ndarray]]

    @property
    def epochs(self) -> int:
        return len(next(iter(self.data.values()))["ul_capacity"])


def percentile(samples, q: float) -> float:
    """Nearest-rank percentile: the value at 1-based rank ``ceil(q*n)``, clamped to [1, n]."""
    values = np.sort(np.asarray(samples, dtype=float).ravel())
    n = values.size
    if n == 0:
        raise ValueError("percentile of an empty sample set")
    if not 0.0 <= q <= 1.0:
        raise ValueError(f"q must lie in [0, 1], got {q}")
    rank = min(max(math.ceil(q * n - 1e-9), 1), n)
    return float(values[rank - 1])


def summarize(scheme: str, metric: str, samples) -> CdfSummary:
    values = np.sort(np.asarray(samples, dtype=float).ravel())
    return CdfSummary(scheme, metric, values, percentile(values, 0.05),
                      percentile(values, 0.50), percentile(values, 0.95))


def cbs_antennas_for(scheme: str, config: NetworkConfig) -> int:
    """CBS array size of a scheme label.

    ``HmMIMO`` uses ``config.cbs_antennas``; ``HmMIMO-1/4`` puts a quarter
    of ``M`` at the CBS; ``mMIMO`` puts all of them there.
    """
    kind = scheme_kind(scheme)
    m = config.total_antennas
    if kind == "mMIMO":
        return m
    if kind != "HmMIMO":
        return 0
    if scheme == "HmMIMO":
        return config.cbs_antennas
    try:
        share = Fraction(scheme.split("-", 1)[1])
    except (ValueError, ZeroDivisionError):
        raise ConfigError(f"cannot parse the CBS share in scheme '{scheme}'") from None
    n_cbs = share * m
    if n_cbs.denominator != 1 or not 0 < n_cbs <= m:
        raise ConfigError(f"scheme '{scheme}' does not give a whole CBS array of at most M={m} antennas")
    return int(n_cbs)


def epoch_rng(seed: int, epoch: int) -> np.random.Generator:
    """Independent stream per epoch, so epochs can run in any order."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(epoch,)))


def run_epoch(config: NetworkConfig, schemes, epoch: int, sigma_z_sq: float | None = None) -> dict:
    """One topology draw evaluated under every scheme.

    A pool of ``M`` AP positions and shadowing draws is sampled once;
    schemes with fewer APs use a prefix of it, so all schemes see the same
    users and, where they overlap, the same APs.
    """
    sigma = noise_power(config) if sigma_z_sq is None else sigma_z_sq
    rng = epoch_rng(config.rng_seed, epoch)
    m = config.total_antennas
    topo = sample_topology(config, rng, n_aps=m)
    pool = large_scale(topo, config, rng, n_cbs=m)

    out = {}
    for scheme in schemes:
        kind = scheme_kind(scheme)
        n_cbs = cbs_antennas_for(scheme, config)
        if kind == "HmMIMO":
            lsf = pool.with_aps(m - n_cbs, n_cbs)
            near, far = classify_users(topo, config, lsf.beta_cbs)
            if n_cbs == m:  # no APs left, so the CBS serves everyone
                near, far = np.arange(config.users), np.array([], dtype=int)
            part = UserPartition(near, far, select_activated_aps(lsf.beta_ap, far))
            report = scheme_sinrs(scheme, lsf, config, part, sigma_z_sq=sigma)
        elif kind == "mMIMO":
            lsf = LargeScaleFading(pool.beta_cbs, pool.beta_ap[:0], m)
            report = scheme_sinrs(scheme, lsf, config, sigma_z_sq=sigma)
        else:
            report = scheme_sinrs(scheme, pool.with_aps(m, 0), config, sigma_z_sq=sigma)
        out[scheme] = report
    return out


def _run_block(job):
    config, schemes, epochs = job
    ul = {s: [] for s in schemes}
    dl = {s: [] for s in schemes}
    cap = {s: [] for s in schemes}
    for e in epochs:
        for scheme, rep in run_epoch(config, schemes, e).items():
            ul[scheme].append(rep.ul_se)
            dl[scheme].append(rep.dl_se)
            cap[scheme].append((rep.ul_capacity, rep.dl_capacity))
    return {s: (np.array(ul[s]), np.array(dl[s]), np.array(cap[s]).reshape(-1, 2)) for s in schemes}


def collect_samples(config: NetworkConfig, schemes=DEFAULT_SCHEMES, workers: int = 1,
                    block: int = 500) -> CampaignSamples:
    """Run ``config.epochs`` epochs and keep every per-user and per-epoch sample.

    Epoch ``e`` always uses stream ``(seed, e)``, and blocks are merged in
    epoch order, so the result does not depend on ``workers``.
    """
    schemes = tuple(schemes)
    for s in schemes:
        cbs_antennas_for(s, config)  # fail fast on bad labels
    if len(set(schemes)) != len(schemes):
        raise ConfigError("duplicate scheme labels")
    ranges = [range(i, min(i + block, config.epochs)) for i in range(0, config.epochs, block)]
    jobs = [(config, schemes, r) for r in ranges]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_run_block, jobs))
    else:
        parts = [_run_block(job) for job in jobs]

    data = {}
    for s in schemes:
        caps = np.concatenate([p[s][2] for p in parts])
        data[s] = {
            "ul_se": np.concatenate([p[s][0] for p in parts]),
            "dl_se": np.concatenate([p[s][1] for p in parts]),
            "ul_capacity": caps[:, 0],
            "dl_capacity": caps[:, 1],
        }
    return CampaignSamples(config, schemes, data)


def summaries(samples: CampaignSamples) -> list[CdfSummary]:
    return [summarize(s, metric, samples.data[s][metric]) for s in samples.schemes for metric in METRICS]


def run_campaign(config: NetworkConfig, schemes=DEFAULT_SCHEMES, workers: int = 1) -> list[CdfSummary]:
    """Per-scheme CDFs of per-user SE (pooled over users and epochs) and sum capacity."""
    return summaries(collect_samples(config, schemes, workers))
