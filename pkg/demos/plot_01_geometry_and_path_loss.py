"""
Geometry, path loss and the near/far split
==========================================

A walk through one random deployment: where the users and APs land, how
strong their links are, and which users end up served by the CBS array
versus the distributed APs.
"""

import numpy as np

from hmmimo import NetworkConfig, classify_users, large_scale, path_loss_db, sample_topology, select_activated_aps

cfg = NetworkConfig()
print(f"M = {cfg.total_antennas} antennas, N_b = {cfg.cbs_antennas} at the CBS, "
      f"{cfg.n_aps} single-antenna APs, K = {cfg.users} users")

##############################################################################
# Path loss
# ---------
# Flat up to 10 m, 20 dB/decade up to 50 m, then 35 dB/decade.

for d in (5, 10, 30, 50, 100, 200, 500, 1000):
    print(f"{d:5d} m  {path_loss_db(d, cfg):8.2f} dB")

##############################################################################
# One epoch
# ---------
# Positions are drawn with the radius uniform in [0, R], so the density
# grows toward the disk center.

rng = np.random.default_rng(1)
topo = sample_topology(cfg, rng)
lsf = large_scale(topo, cfg, rng)

near, far = classify_users(topo, cfg)
active = select_activated_aps(lsf.beta_ap, far)
dist = topo.user_cbs_distances()
print(f"\nnear users: {near.tolist()}")
print(f"far users:  {far.tolist()}")
print(f"activated APs ({len(active)} for {len(far)} far users): {active.tolist()}")

print("\nuser  dist[m]  beta_CBS[dB]  best AP beta[dB]")
for k in range(cfg.users):
    print(f"{k:4d} {dist[k]:8.1f} {10 * np.log10(lsf.beta_cbs[k]):12.1f} "
          f"{10 * np.log10(lsf.beta_ap[:, k].max()):16.1f}")

##############################################################################
# Picture
# -------

try:
    import matplotlib.pyplot as plt
except ImportError:
    plt = None

if plt is not None:
    fig, ax = plt.subplots(figsize=(6, 6))
    ax.add_patch(plt.Circle((0, 0), cfg.coverage_radius, fill=False, color="0.6"))
    ax.add_patch(plt.Circle((0, 0), cfg.nu_distance_threshold, fill=False, ls="--", color="0.3"))
    ax.scatter(*topo.ap_positions.T, s=6, c="0.7", label="APs")
    ax.scatter(*topo.ap_positions[active].T, s=30, c="tab:orange", label="activated APs")
    ax.scatter(*topo.user_positions[near].T, marker="^", c="tab:blue", label="near users")
    ax.scatter(*topo.user_positions[far].T, marker="v", c="tab:red", label="far users")
    ax.scatter([0], [0], marker="s", c="k", label="CBS")
    ax.set_aspect("equal")
    ax.legend(loc="upper right", fontsize=8)
    fig.savefig("deployment.png", dpi=120)
    print("\nsaved deployment.png")
