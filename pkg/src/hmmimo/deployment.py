"""Random topologies, near/far user classification and AP selection."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import NetworkConfig


@dataclass(frozen=True)
class Topology:
    """Positions in meters. The CBS sits at the origin (disk center)."""

    cbs_position: np.ndarray
    ap_positions: np.ndarray  # (n_aps, 2)
    user_positions: np.ndarray  # (K, 2)

    @property
    def n_aps(self) -> int:
        return len(self.ap_positions)

    def with_aps(self, n_aps: int) -> "Topology":
        """Keep only the first ``n_aps`` APs (positions are i.i.d., so any prefix is too)."""
        if n_aps > self.n_aps:
            raise ValueError(f"topology holds {self.n_aps} APs, {n_aps} requested")
        return Topology(self.cbs_position, self.ap_positions[:n_aps], self.user_positions)

    def user_cbs_distances(self) -> np.ndarray:
        return np.linalg.norm(self.user_positions - self.cbs_position, axis=1)

    def ap_user_distances(self) -> np.ndarray:
        diff = self.ap_positions[:, None, :] - self.user_positions[None, :, :]
        return np.linalg.norm(diff, axis=2)


@dataclass(frozen=True)
class UserPartition:
    near_users: np.ndarray  # sorted user indices
    far_users: np.ndarray
    activated_aps: np.ndarray  # sorted AP indices

    @property
    def near_mask(self) -> np.ndarray:
        mask = np.zeros(len(self.near_users) + len(self.far_users), dtype=bool)
        mask[self.near_users] = True
        return mask


def sample_disk(n: int, radius: float, rng: np.random.Generator, placement: str = "radial") -> np.ndarray:
    """Draw ``n`` points in a disk centered at the origin.

    ``placement="radial"`` draws the radius uniformly in [0, R] (points
    concentrate toward the center); ``"area"`` uses R*sqrt(u) for an
    area-uniform density.
    """
    u = rng.random(n)
    r = radius * (u if placement == "radial" else np.sqrt(u))
    theta = 2.0 * np.pi * rng.random(n)
    return np.column_stack((r * np.cos(theta), r * np.sin(theta)))


def sample_topology(config: NetworkConfig, rng: np.random.Generator, n_aps: int | None = None) -> Topology:
    """Sample AP and user positions for one epoch.

    ``n_aps`` defaults to ``M - N_b``. The campaign draws a pool of ``M``
    APs once per epoch and hands prefixes of it to each scheme.
    """
    if n_aps is None:
        n_aps = config.n_aps
    aps = sample_disk(n_aps, config.coverage_radius, rng, config.placement)
    users = sample_disk(config.users, config.coverage_radius, rng, config.placement)
    return Topology(np.zeros(2), aps, users)


def classify_users(topology: Topology, config: NetworkConfig,
                   beta_cbs: np.ndarray | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Split users into (near, far) index arrays.

    The distance rule is boundary inclusive. With ``nu_criterion="beta"``
    a user is near when its CBS large-scale fading is at least
    ``nu_beta_threshold_db``.
    """
    if config.nu_criterion == "beta":
        if beta_cbs is None:
            raise ValueError("beta criterion needs the CBS large-scale fading")
        near = 10.0 * np.log10(beta_cbs) >= config.nu_beta_threshold_db
    else:
        near = topology.user_cbs_distances() <= config.nu_distance_threshold
    return np.flatnonzero(near), np.flatnonzero(~near)


def select_activated_aps(beta_ap: np.ndarray, far_users) -> np.ndarray:
    """Strongest AP of every far user, duplicates removed.

    ``np.argmax`` returns the first maximum, so ties go to the lowest index.
    """
    far_users = np.asarray(far_users, dtype=int)
    if far_users.size == 0:
        return np.array([], dtype=int)
    if beta_ap.shape[0] == 0:
        raise ValueError("far users present but no APs deployed")
    return np.unique(np.argmax(beta_ap[:, far_users], axis=0))


def select_ucm_clusters(beta_ap: np.ndarray, cluster_size: int) -> np.ndarray:
    """Boolean (n_aps, K) mask with the ``cluster_size`` strongest APs per user."""
    n_aps, n_users = beta_ap.shape
    if cluster_size < 1:
        raise ValueError("cluster_size must be >= 1")
    if cluster_size > n_aps:
        raise ValueError(f"cluster_size {cluster_size} exceeds the {n_aps} available APs")
    # stable sort on -beta keeps the lower index first among equal values
    order = np.argsort(-beta_ap, axis=0, kind="stable")[:cluster_size]
    mask = np.zeros((n_aps, n_users), dtype=bool)
    mask[order, np.arange(n_users)] = True
    return mask


def partition_users(topology: Topology, config: NetworkConfig, beta_ap: np.ndarray,
                    beta_cbs: np.ndarray | None = None) -> UserPartition:
    near, far = classify_users(topology, config, beta_cbs)
    return UserPartition(near, far, select_activated_aps(beta_ap, far))
