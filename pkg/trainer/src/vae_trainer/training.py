"""Seeded VAE training over an IDX image file."""

from __future__ import annotations

import dataclasses

import numpy as np
import torch

from .idx import load_images
from .model import VariationalAutoencoder, elbo_loss


@dataclasses.dataclass(frozen=True)
class TrainConfig:
    dataset_path: str
    latent_dim: int = 20
    epochs: int = 50
    batch_size: int = 128
    weight_decay: float = 1e-5
    learning_rate: float = 1e-3
    seed: int = 0

    def __post_init__(self) -> None:
        if self.latent_dim < 1:
            raise ValueError(f"latent_dim must be >= 1, got {self.latent_dim}")
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.weight_decay < 0.0 or self.learning_rate <= 0.0:
            raise ValueError("weight_decay must be >= 0 and learning_rate > 0")


@dataclasses.dataclass
class TrainResult:
    model: VariationalAutoencoder
    elbo_per_epoch: list[float]
    image_rows: int
    image_cols: int


def train_vae(cfg: TrainConfig) -> TrainResult:
    """Train on the configured dataset; returns the model and per-epoch ELBO.

    The l2 penalty enters as optimizer weight decay. All randomness (weight
    init, shuffling, reparameterization noise) comes from the config seed.
    """
    images = load_images(cfg.dataset_path)
    count, rows, cols = images.shape
    data = torch.from_numpy(images.reshape(count, rows * cols))

    torch.manual_seed(cfg.seed)
    model = VariationalAutoencoder(cfg.latent_dim, rows * cols)
    optimizer = torch.optim.Adam(
        model.parameters(), lr=cfg.learning_rate, weight_decay=cfg.weight_decay
    )
    shuffler = torch.Generator().manual_seed(cfg.seed)

    elbos: list[float] = []
    for _ in range(cfg.epochs):
        perm = torch.randperm(count, generator=shuffler)
        total = 0.0
        for start in range(0, count, cfg.batch_size):
            batch = data[perm[start : start + cfg.batch_size]]
            optimizer.zero_grad()
            recon, mu, logvar = model(batch)
            loss = elbo_loss(recon, batch, mu, logvar)
            loss.backward()
            optimizer.step()
            total += float(loss.detach()) * batch.shape[0]
        elbos.append(-total / count)
    model.eval()
    return TrainResult(model=model, elbo_per_epoch=elbos, image_rows=rows, image_cols=cols)


def write_training_log(path: str, elbos: list[float]) -> None:
    """Per-epoch ELBO as a two-column CSV."""
    with open(path, "w") as fh:
        fh.write("epoch,elbo\n")
        for epoch, value in enumerate(elbos, start=1):
            fh.write(f"{epoch},{value:.6f}\n")


def sample_latents(count: int, latent_dim: int, seed: int) -> np.ndarray:
    """Standard normal latents drawn from a dedicated torch generator."""
    g = torch.Generator().manual_seed(seed)
    return torch.randn(count, latent_dim, generator=g).numpy().astype(np.float32)
