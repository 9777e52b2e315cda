"""Command line front end: train a VAE and export its decoder, or dump samples."""

from __future__ import annotations

import argparse
import sys

from .export import export_decoder, export_samples, write_forward_fixture
from .training import TrainConfig, train_vae, write_training_log


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vae-trainer",
        description="Train a dense VAE on IDX images and export the decoder weights.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    train = sub.add_parser("train", help="train and export the decoder")
    train.add_argument("--dataset", required=True, help="IDX image file (gzip ok)")
    train.add_argument("--out", required=True, help="decoder weight file to write")
    train.add_argument("--log", default=None, help="per-epoch ELBO CSV")
    train.add_argument("--fixture", default=None, help="save latent/output pairs as .npz")
    train.add_argument("--fixture-count", type=int, default=10)
    train.add_argument("--latent-dim", type=int, default=20)
    train.add_argument("--epochs", type=int, default=50)
    train.add_argument("--batch-size", type=int, default=128)
    train.add_argument("--weight-decay", type=float, default=1e-5)
    train.add_argument("--lr", type=float, default=1e-3)
    train.add_argument("--seed", type=int, default=0)

    sample = sub.add_parser("sample", help="decode random latents from a weight file")
    sample.add_argument("--weights", required=True)
    sample.add_argument("--out-dir", required=True)
    sample.add_argument("--count", type=int, default=30)
    sample.add_argument("--seed", type=int, default=0)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "train":
            cfg = TrainConfig(
                dataset_path=args.dataset,
                latent_dim=args.latent_dim,
                epochs=args.epochs,
                batch_size=args.batch_size,
                weight_decay=args.weight_decay,
                learning_rate=args.lr,
                seed=args.seed,
            )
            result = train_vae(cfg)
            export_decoder(result.model, args.out)
            if args.log:
                write_training_log(args.log, result.elbo_per_epoch)
            if args.fixture:
                write_forward_fixture(result.model, args.fixture, args.fixture_count, args.seed)
            print(
                f"trained {cfg.epochs} epochs, final ELBO {result.elbo_per_epoch[-1]:.3f}, "
                f"decoder written to {args.out}"
            )
        else:
            paths = export_samples(args.weights, args.out_dir, args.count, args.seed)
            print(f"wrote {len(paths)} samples to {args.out_dir}")
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
