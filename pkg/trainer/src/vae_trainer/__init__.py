"""Dense VAE training with decoder export in the shared DGPR weight format."""

from .export import (
    ACTIVATION_CODES,
    decoder_layers,
    export_decoder,
    export_samples,
    forward,
    read_weights,
    write_forward_fixture,
    write_pgm,
    write_weights,
)
from .idx import IdxError, load_images
from .model import VariationalAutoencoder, elbo_loss
from .training import TrainConfig, TrainResult, sample_latents, train_vae, write_training_log

__version__ = "0.1.0"

__all__ = [
    "ACTIVATION_CODES",
    "IdxError",
    "TrainConfig",
    "TrainResult",
    "VariationalAutoencoder",
    "decoder_layers",
    "elbo_loss",
    "export_decoder",
    "export_samples",
    "forward",
    "load_images",
    "read_weights",
    "sample_latents",
    "train_vae",
    "write_forward_fixture",
    "write_pgm",
    "write_weights",
    "__version__",
]
