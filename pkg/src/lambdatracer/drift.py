"""Seeded latent-drift simulator for synthetic loss datasets.

Each sample starts from a latent ``z0 ~ N(0, I)``. Editing step ``i`` adds
``edit_strength * tanh(A_i @ z + b_i)``, with ``A_i`` and ``b_i`` drawn
afresh for every (sample, step), so displacement accumulates across edits.
A sample's loss after ``k`` edits is a proxy for reconstruction error:
``1e-3 + ||z_k - z0||**2 / dim + |noise|``.

Every random draw comes from a stream keyed by ``(seed, purpose, sample,
step)``. Changing the number of samples or iterations does not perturb the
draws of the samples that remain.
"""

from dataclasses import asdict, dataclass

import numpy as np

from .exceptions import ConfigError, DataError
from .loss_model import GroupConfig, LossDataset, LossSample

BASE_LOSS = 1e-3

_ORIGIN, _EDIT, _NOISE = 0, 1, 2


@dataclass(frozen=True)
class DriftConfig:
    latent_dim: int = 16
    n_samples_per_category: int = 400
    max_iterations: int = 5
    edit_strength: float = 0.15
    noise_sigma: float = 0.02
    seed: int = 0

    def __post_init__(self):
        if self.latent_dim < 1:
            raise ConfigError("latent_dim must be >= 1")
        if self.n_samples_per_category < 1:
            raise ConfigError("n_samples_per_category must be >= 1")
        if self.max_iterations < 0:
            raise ConfigError("max_iterations must be >= 0")
        if self.edit_strength < 0 or not np.isfinite(self.edit_strength):
            raise ConfigError("edit_strength must be finite and >= 0")
        if self.noise_sigma < 0 or not np.isfinite(self.noise_sigma):
            raise ConfigError("noise_sigma must be finite and >= 0")
        if self.seed < 0:
            raise ConfigError("seed must be a nonnegative integer")

    def to_dict(self):
        return asdict(self)

    @property
    def categories(self):
        return ("gen",) + tuple(f"edit-{k}" for k in range(1, self.max_iterations + 1))


def stream(cfg, purpose, sample_index, step=0):
    return np.random.default_rng(np.random.SeedSequence([cfg.seed, purpose, sample_index, step]))


def edit_step(z, cfg, sample_index, step):
    """One nonlinear edit, ``edit_strength * tanh(A z + b)``."""
    d = cfg.latent_dim
    rng = stream(cfg, _EDIT, sample_index, step)
    A = rng.standard_normal((d, d)) / np.sqrt(d)
    b = rng.standard_normal(d)
    return cfg.edit_strength * np.tanh(A @ z + b)


def simulate_trajectory(cfg, sample_index):
    """Latents ``[z0, z1, ..., z_max_iterations]`` for one sample."""
    z = stream(cfg, _ORIGIN, sample_index).standard_normal(cfg.latent_dim)
    traj = [z]
    for i in range(1, cfg.max_iterations + 1):
        z = z + edit_step(z, cfg, sample_index, i)
        traj.append(z)
    return traj


def loss_of(z, z_origin, cfg, rng):
    z = np.asarray(z, dtype=np.float64)
    z_origin = np.asarray(z_origin, dtype=np.float64)
    if z.shape != z_origin.shape:
        raise DataError(f"latent shapes differ: {z.shape} vs {z_origin.shape}")
    drift = float(np.sum((z - z_origin) ** 2)) / z.size
    noise = abs(rng.normal(0.0, cfg.noise_sigma)) if cfg.noise_sigma > 0 else 0.0
    return BASE_LOSS + drift + noise


def generate_dataset(cfg):
    """Categories ``gen``, ``edit-1`` ... ``edit-k``, ordered by category then sample."""
    n = cfg.n_samples_per_category
    names = cfg.categories
    rows = {name: [] for name in names}
    for idx in range(n):
        traj = simulate_trajectory(cfg, idx)
        for k, name in enumerate(names):
            loss = loss_of(traj[k], traj[0], cfg, stream(cfg, _NOISE, idx, k))
            rows[name].append(LossSample(f"s{idx:05d}", name, loss, cfg.seed))
    return LossDataset(tuple(s for name in names for s in rows[name]))


def default_group(cfg, name="drift"):
    if cfg.max_iterations < 1:
        raise ConfigError("a binary group needs at least one edit iteration")
    return GroupConfig(name, frozenset({"gen"}), frozenset(cfg.categories[1:]))
