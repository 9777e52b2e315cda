import struct

import numpy as np
import pytest

from vae_trainer import TrainConfig, export_decoder, read_weights, train_vae, write_training_log


def write_toy_dataset(path, count=10, side=6, seed=0):
    g = np.random.Generator(np.random.PCG64(seed))
    # blurry blobs: low-rank structure gives the VAE something learnable
    rows = np.arange(side)
    imgs = np.empty((count, side, side))
    for i in range(count):
        cy, cx = g.uniform(1.0, side - 1.0, 2)
        imgs[i] = np.exp(
            -((rows[:, None] - cy) ** 2 + (rows[None, :] - cx) ** 2) / 4.0
        )
    quantized = np.rint(imgs * 255.0).astype(np.uint8)
    with open(path, "wb") as fh:
        fh.write(struct.pack(">IIII", 0x00000803, count, side, side) + quantized.tobytes())


class TestConfig:
    def test_defaults(self):
        cfg = TrainConfig(dataset_path="x.idx")
        assert (cfg.latent_dim, cfg.epochs, cfg.batch_size) == (20, 50, 128)
        assert cfg.weight_decay == 1e-5

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"latent_dim": 0},
            {"epochs": 0},
            {"batch_size": 0},
            {"weight_decay": -1.0},
            {"learning_rate": 0.0},
        ],
    )
    def test_rejects_bad_values(self, kwargs):
        with pytest.raises(ValueError):
            TrainConfig(dataset_path="x.idx", **kwargs)


class TestTraining:
    def test_single_epoch_toy_run_exports(self, tmp_path):
        # smallest possible configuration: one latent, one epoch, ten images
        data = str(tmp_path / "toy.idx")
        write_toy_dataset(data)
        cfg = TrainConfig(dataset_path=data, latent_dim=1, epochs=1, batch_size=4)
        result = train_vae(cfg)
        assert len(result.elbo_per_epoch) == 1
        assert np.isfinite(result.elbo_per_epoch[0])
        out = str(tmp_path / "dec.dgpr")
        export_decoder(result.model, out)
        layers = read_weights(out)
        dims = [(w.shape[1], w.shape[0]) for w, _, _ in layers]
        assert dims == [(1, 256), (256, 512), (512, 36)]
        assert [a for _, _, a in layers] == ["relu", "relu", "sigmoid"]

    def test_elbo_improves_over_training(self, tmp_path):
        data = str(tmp_path / "blobs.idx")
        write_toy_dataset(data, count=64, side=8, seed=3)
        cfg = TrainConfig(dataset_path=data, latent_dim=2, epochs=10, batch_size=16)
        result = train_vae(cfg)
        assert result.elbo_per_epoch[-1] > result.elbo_per_epoch[0]

    def test_seeded_and_repeatable(self, tmp_path):
        data = str(tmp_path / "rep.idx")
        write_toy_dataset(data, count=16, seed=5)
        outs = []
        for run in range(2):
            cfg = TrainConfig(dataset_path=data, latent_dim=2, epochs=2, batch_size=8, seed=11)
            result = train_vae(cfg)
            path = str(tmp_path / f"d{run}.dgpr")
            export_decoder(result.model, path)
            with open(path, "rb") as fh:
                outs.append(fh.read())
        assert outs[0] == outs[1]

    def test_seed_changes_weights(self, tmp_path):
        data = str(tmp_path / "seeds.idx")
        write_toy_dataset(data, count=16, seed=6)
        weights = []
        for seed in (0, 1):
            cfg = TrainConfig(dataset_path=data, latent_dim=2, epochs=1, batch_size=8, seed=seed)
            result = train_vae(cfg)
            path = str(tmp_path / f"s{seed}.dgpr")
            export_decoder(result.model, path)
            with open(path, "rb") as fh:
                weights.append(fh.read())
        assert weights[0] != weights[1]

    def test_training_log_format(self, tmp_path):
        path = str(tmp_path / "log.csv")
        write_training_log(path, [-120.5, -95.25, -80.0])
        with open(path) as fh:
            lines = fh.read().strip().split("\n")
        assert lines[0] == "epoch,elbo"
        assert lines[1].startswith("1,-120.5")
        assert len(lines) == 4
