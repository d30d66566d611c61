"""
Per-user SE and sum-capacity CDFs
=================================

Runs the five deployments over many random epochs and draws the CDFs of
per-user spectral efficiency (uplink and downlink) and of sum capacity.
The 5th percentile is the rate a user can count on; the 95th shows the
peak.

Pass an epoch count on the command line; 2000 takes a few seconds,
10000 reproduces the reference percentiles.
"""

import sys

import numpy as np

from hmmimo import NetworkConfig, collect_samples
from hmmimo.harness import DEFAULT_SCHEMES, summaries

epochs = int(sys.argv[1]) if len(sys.argv) > 1 else 2000
cfg = NetworkConfig(epochs=epochs)
samples = collect_samples(cfg, DEFAULT_SCHEMES)

##############################################################################
# Percentiles
# -----------

print(f"{epochs} epochs\n")
print(f"{'scheme':12} {'metric':12} {'p05':>8} {'p50':>8} {'p95':>8}")
for cdf in summaries(samples):
    scale = cfg.bandwidth / 1e6 if cdf.metric.endswith("capacity") else 1.0
    unit = "Mbit/s" if scale != 1.0 else "bit/s/Hz"
    print(f"{cdf.scheme:12} {cdf.metric:12} {cdf.p05 * scale:8.3f} {cdf.p50 * scale:8.3f} "
          f"{cdf.p95 * scale:8.3f}  {unit}")

##############################################################################
# CDF figure
# ----------

try:
    import matplotlib.pyplot as plt
except ImportError:
    sys.exit(0)

titles = {"ul_se": "UL per-user SE [bit/s/Hz]", "dl_se": "DL per-user SE [bit/s/Hz]",
          "ul_capacity": "UL sum capacity [Mbit/s]", "dl_capacity": "DL sum capacity [Mbit/s]"}
fig, axes = plt.subplots(2, 2, figsize=(10, 7))
for ax, metric in zip(axes.ravel(), titles):
    for scheme in samples.schemes:
        x = np.sort(samples.data[scheme][metric].ravel())
        if metric.endswith("capacity"):
            x = x * cfg.bandwidth / 1e6
        ax.plot(x, np.arange(1, x.size + 1) / x.size, label=scheme)
    ax.set_xlabel(titles[metric])
    ax.set_ylabel("CDF")
    ax.grid(alpha=0.3)
axes[0, 0].legend(fontsize=8)
fig.tight_layout()
fig.savefig("campaign_cdfs.png", dpi=120)
print("\nsaved campaign_cdfs.png")
