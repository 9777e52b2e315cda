"""Dense VAE: mirrored encoder, p -> 256 -> 512 -> image decoder."""

from __future__ import annotations

import torch
from torch import nn


class VariationalAutoencoder(nn.Module):
    """Dense encoder/decoder pair with a diagonal Gaussian latent."""

    def __init__(self, latent_dim: int, image_dim: int = 784):
        super().__init__()
        if latent_dim < 1 or image_dim < 1:
            raise ValueError(f"bad dimensions: latent {latent_dim}, image {image_dim}")
        self.latent_dim = latent_dim
        self.image_dim = image_dim
        self.encoder = nn.Sequential(
            nn.Linear(image_dim, 512),
            nn.ReLU(),
            nn.Linear(512, 256),
            nn.ReLU(),
        )
        self.mu_head = nn.Linear(256, latent_dim)
        self.logvar_head = nn.Linear(256, latent_dim)
        self.decoder = nn.Sequential(
            nn.Linear(latent_dim, 256),
            nn.ReLU(),
            nn.Linear(256, 512),
            nn.ReLU(),
            nn.Linear(512, image_dim),
            nn.Sigmoid(),
        )

    def encode(self, x: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        h = self.encoder(x)
        return self.mu_head(h), self.logvar_head(h)

    def forward(self, x: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
        mu, logvar = self.encode(x)
        noise = torch.randn_like(mu)
        z = mu + noise * torch.exp(0.5 * logvar)
        return self.decoder(z), mu, logvar


def elbo_loss(
    recon: torch.Tensor, x: torch.Tensor, mu: torch.Tensor, logvar: torch.Tensor
) -> torch.Tensor:
    """Negative ELBO per image: Bernoulli cross-entropy plus KL to N(0, I)."""
    bce = nn.functional.binary_cross_entropy(recon, x, reduction="sum")
    kl = -0.5 * torch.sum(1.0 + logvar - mu.pow(2) - logvar.exp())
    return (bce + kl) / x.shape[0]
