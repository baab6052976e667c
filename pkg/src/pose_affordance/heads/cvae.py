"""Conditional VAE encoder, decoder and their losses."""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from ..autodiff import Linear, Module, Tensor, ops
from ..core.error_handling import ContractError

if TYPE_CHECKING:
    from ..core.config_models import HeadSettings

# Keeps the plain L2 norm differentiable at zero error.
L2_EPS = 1e-12


@dataclass
class LatentStats:
    """Posterior mean and log standard deviation, ``(B×)latent``."""

    mu: Tensor
    logsigma: Tensor


class CVAEEncoder(Module):
    """``x → FC-ReLU → FC-ReLU``, concatenated with the condition, then μ and logσ."""

    def __init__(
        self,
        data_dim: int,
        config: HeadSettings,
        rng: np.random.Generator,
        *,
        zero_init_stats: bool = False,
    ) -> None:
        """Create the data branch and the two statistics layers."""
        self.data_dim = data_dim
        self.logsigma_clamp = config.logsigma_clamp
        self.embed1 = Linear(data_dim, config.hidden_dim, rng)
        self.embed2 = Linear(config.hidden_dim, config.hidden_dim, rng)
        joint = config.hidden_dim + config.shared_dim
        self.mu = Linear(joint, config.latent_dim, rng, zero_init=zero_init_stats)
        self.logsigma = Linear(joint, config.latent_dim, rng, zero_init=zero_init_stats)

    def forward(self, x: Tensor, cond: Tensor) -> LatentStats:
        """Encode a data vector under its shared condition.

        Raises
        ------
        ContractError
            If ``x`` does not have the head's data dimension.

        """
        if x.shape[-1] != self.data_dim:
            raise ContractError(f"encoder expects {self.data_dim}-dim data, got {x.shape[-1]}", shape=x.shape)
        h = ops.relu(self.embed2(ops.relu(self.embed1(x))))
        joint = ops.concat([h, cond], axis=-1)
        logsigma = ops.clamp(self.logsigma(joint), -self.logsigma_clamp, self.logsigma_clamp)
        return LatentStats(self.mu(joint), logsigma)


class CVAEDecoder(Module):
    """Latent and condition branches merged into a linear output layer."""

    def __init__(
        self,
        data_dim: int,
        config: HeadSettings,
        rng: np.random.Generator,
        *,
        zero_init_output: bool = False,
    ) -> None:
        """Create latent, condition and output layers."""
        self.latent_dim = config.latent_dim
        self.latent1 = Linear(config.latent_dim, config.hidden_dim, rng)
        self.latent2 = Linear(config.hidden_dim, config.hidden_dim, rng)
        self.condition = Linear(config.shared_dim, config.hidden_dim, rng)
        self.merge = Linear(2 * config.hidden_dim, config.hidden_dim, rng)
        self.output = Linear(config.hidden_dim, data_dim, rng, zero_init=zero_init_output)

    def forward(self, z: Tensor, cond: Tensor) -> Tensor:
        """Decode ``z`` under ``cond`` into a data vector in model space.

        Raises
        ------
        ContractError
            If ``z`` does not have the latent dimension.

        """
        if z.shape[-1] != self.latent_dim:
            raise ContractError(f"decoder expects {self.latent_dim}-dim latent, got {z.shape[-1]}", shape=z.shape)
        hz = ops.relu(self.latent2(ops.relu(self.latent1(z))))
        hc = ops.relu(self.condition(cond))
        merged = ops.relu(self.merge(ops.concat([hz, hc], axis=-1)))
        return self.output(merged)


def reparameterize(stats: LatentStats, noise: np.ndarray) -> Tensor:
    """``z = μ + exp(logσ) ⊙ ε``; ``ε`` is a constant."""
    eps = Tensor(noise)
    if eps.shape != stats.mu.shape:
        raise ContractError(f"noise shape {eps.shape} does not match latent {stats.mu.shape}")
    return ops.add(stats.mu, ops.mul(ops.exp(stats.logsigma), eps))


def kld_loss(stats: LatentStats) -> Tensor:
    """KL divergence to the standard normal, summed over latent dims, averaged over the batch."""
    per_dim = ops.sub(
        ops.add(ops.mul(stats.logsigma, 2.0), 1.0),
        ops.add(ops.square(stats.mu), ops.exp(ops.mul(stats.logsigma, 2.0))),
    )
    per_sample = ops.mul(ops.sum(per_dim, axis=-1), -0.5)
    return ops.mean(per_sample)


def reconstruction_loss(pred: Tensor, target: Tensor, *, squared: bool = True) -> Tensor:
    """Squared L2 (or plain L2) error per sample, averaged over the batch."""
    if pred.shape != target.shape:
        raise ContractError(f"reconstruction shape {pred.shape} does not match target {target.shape}")
    per_sample = ops.sum(ops.square(ops.sub(pred, target)), axis=-1)
    if not squared:
        per_sample = ops.sqrt(ops.add(per_sample, L2_EPS))
    return ops.mean(per_sample)


class CVAE(Module):
    """Encoder and decoder for one data vector."""

    def __init__(
        self,
        data_dim: int,
        config: HeadSettings,
        rng: np.random.Generator,
    ) -> None:
        """Create encoder and decoder."""
        self.data_dim = data_dim
        self.latent_dim = config.latent_dim
        self.encoder = CVAEEncoder(data_dim, config, rng)
        self.decoder = CVAEDecoder(data_dim, config, rng)

    def forward(self, x: Tensor, cond: Tensor, noise: np.ndarray) -> tuple[Tensor, LatentStats]:
        """Reconstruction and posterior statistics."""
        stats = self.encoder(x, cond)
        return self.decoder(reparameterize(stats, noise), cond), stats

    def sample(self, cond: Tensor, rng: np.random.Generator) -> Tensor:
        """Decode prior draws ``η ~ N(0, 1)``, one per condition row."""
        rows = cond.shape[0] if cond.ndim == 2 else 1
        eta = rng.standard_normal((rows, self.latent_dim))
        if cond.ndim == 1:
            eta = eta[0]
        return self.decoder(Tensor(eta), cond)
