"""Experiment harness: build sensing instances, run solvers over a grid of
sampling rates (and optionally standoff distances), score reconstructions,
and emit CSV rows.

Everything random is derived from the experiment seed through fixed split
keys, so a run's CSV is a pure function of its resolved config apart from the
timing columns. Cells are independent and can run in a process pool.
"""

from __future__ import annotations

import concurrent.futures
import dataclasses
import functools
import math
import os
import time

import numpy as np

from . import metrics
from .data import ImageDataset, PhantomSpec, load_mnist, synthesize_shepp_logan
from .generative import DrgdConfig, GeneratorNet, deepinit, drgd, load_generator, synthetic_generator
from .numerics import Array, SeededRng
from .sensing import (
    DiffractionSpec,
    SensingOperator,
    build_diffraction_matrix,
    effective_rows,
    gaussian_operator,
    generate_masks,
    intensity_forward,
)
from .solvers import (
    ClassicalConfig,
    RK_DEFAULT_ITERS,
    TWF_DEFAULT_ITERS,
    WF_DEFAULT_ITERS,
    randomized_kaczmarz,
    spectral_init,
    truncated_wirtinger_flow,
    wirtinger_flow,
)

ALGORITHMS = ("wf", "twf", "rk", "drgd", "deepinit")
DATASETS = ("mnist", "shepp-logan")
SENSING_MODELS = ("gaussian", "diffraction")

DEFAULT_SAMPLING_RATES = (0.125, 0.25, 0.5, 1.0, 2.0, 4.0)
DEFAULT_STANDOFFS = (0.00125, 0.0025, 0.005, 0.01, 0.02, 0.04, 0.08)
DEFAULT_SCENE_DETECTOR_M = 0.175

# split keys carving independent streams out of the experiment seed
_TAG_DATA = 1
_TAG_SHUFFLE = 2
_TAG_CELL = 3
_SUB_OPERATOR = 0
_SUB_SOLVER = 1
_SUB_KACZMARZ = 2
_SUB_RANDOM_INIT = 3

CSV_COLUMNS = (
    "dataset",
    "algorithm",
    "sensing",
    "sampling_rate",
    "standoff_m",
    "image_index",
    "seed",
    "m",
    "n",
    "aligned_rel_error",
    "psnr_db",
    "ssim",
    "wall_time_s",
    "init_time_s",
)


def round_half_away(value: float) -> int:
    """Round a non-negative float with halves going up (2.5 -> 3)."""
    if value < 0.0:
        raise ValueError(f"expected a non-negative value, got {value}")
    return int(math.floor(value + 0.5))


@dataclasses.dataclass(frozen=True)
class ExperimentConfig:
    """Resolved settings for one experiment grid."""

    dataset: str = "shepp-logan"
    algorithm: str = "deepinit"
    sensing: str = "gaussian"
    sampling_rates: tuple[float, ...] = DEFAULT_SAMPLING_RATES
    standoff_m: float = 0.01
    standoffs: tuple[float, ...] = DEFAULT_STANDOFFS
    scene_detector_m: float = DEFAULT_SCENE_DETECTOR_M
    num_images: int = 5
    seed: int = 0
    generator_weights: str | None = None
    mnist_images: str | None = None
    mnist_labels: str | None = None
    shepp_pool: int = 200
    k_max: int | None = None
    i_max: int | None = None
    eta: float | None = None
    reg_weight: float | None = None
    step_size: float | None = None
    twf_lb: float | None = None
    twf_ub: float | None = None
    rk_init: str = "spectral"
    out_csv: str = "results.csv"
    dump_dir: str | None = None
    workers: int = 1

    def __post_init__(self) -> None:
        if self.dataset not in DATASETS:
            raise ValueError(f"unknown dataset {self.dataset!r} (choices: {DATASETS})")
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algorithm!r} (choices: {ALGORITHMS})")
        if self.sensing not in SENSING_MODELS:
            raise ValueError(f"unknown sensing model {self.sensing!r} (choices: {SENSING_MODELS})")
        if len(self.sampling_rates) < 1 or any(r <= 0.0 for r in self.sampling_rates):
            raise ValueError("sampling_rates must be positive")
        if len(self.standoffs) < 1 or any(d <= 0.0 for d in self.standoffs):
            raise ValueError("standoffs must be positive")
        if self.num_images < 1:
            raise ValueError("num_images must be >= 1")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        if self.rk_init not in ("spectral", "random_unit"):
            raise ValueError(f"unknown rk_init {self.rk_init!r}")
        if self.seed < 0:
            raise ValueError("seed must be >= 0")


@dataclasses.dataclass(frozen=True)
class ResultRow:
    dataset: str
    algorithm: str
    sensing: str
    sampling_rate: float
    standoff_m: float | None
    image_index: int
    seed: int
    m: int
    n: int
    aligned_rel_error: float
    psnr_db: float
    ssim: float
    wall_time_s: float
    init_time_s: float

    def to_csv_fields(self) -> list[str]:
        return [
            self.dataset,
            self.algorithm,
            self.sensing,
            _fmt(self.sampling_rate),
            "" if self.standoff_m is None else _fmt(self.standoff_m),
            str(self.image_index),
            str(self.seed),
            str(self.m),
            str(self.n),
            _fmt(self.aligned_rel_error),
            _fmt(self.psnr_db),
            _fmt(self.ssim),
            _fmt(self.wall_time_s),
            _fmt(self.init_time_s),
        ]


def _fmt(value: float) -> str:
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return f"{value:.12g}"


def load_test_images(cfg: ExperimentConfig) -> ImageDataset:
    """The image pool the harness draws from, before seeded selection."""
    if cfg.dataset == "mnist":
        if not cfg.mnist_images or not cfg.mnist_labels:
            raise ValueError(
                "dataset 'mnist' needs --mnist-images and --mnist-labels IDX paths"
            )
        return load_mnist(cfg.mnist_images, cfg.mnist_labels)
    pool = max(cfg.shepp_pool, cfg.num_images)
    spec = PhantomSpec(rng=SeededRng(cfg.seed).split(_TAG_DATA))
    return synthesize_shepp_logan(spec, pool)


def select_images(cfg: ExperimentConfig, dataset: ImageDataset) -> tuple[Array, Array]:
    """Seeded shuffle of the pool; returns (indices, images)."""
    if dataset.count < cfg.num_images:
        raise ValueError(f"pool has {dataset.count} images, need {cfg.num_images}")
    g = SeededRng(cfg.seed).split(_TAG_SHUFFLE).generator()
    perm = g.permutation(dataset.count)[: cfg.num_images]
    return perm, dataset.images[perm]


@functools.lru_cache(maxsize=16)
def _cached_kernel(spec: DiffractionSpec) -> Array:
    kernel = build_diffraction_matrix(spec)
    kernel.setflags(write=False)
    return kernel


def build_cell_operator(
    cfg: ExperimentConfig,
    cell_rng: SeededRng,
    m: int,
    n: int,
    width: int,
    standoff: float | None,
) -> SensingOperator:
    if cfg.sensing == "gaussian":
        return gaussian_operator(cell_rng.split(_SUB_OPERATOR), m, n)
    side = width
    if side * side != n:
        raise ValueError(f"diffraction sensing needs square images, got n = {n}, width = {width}")
    d_ms = _cached_kernel(DiffractionSpec(distance_m=standoff, grid_side=side))
    d_sd = _cached_kernel(DiffractionSpec(distance_m=cfg.scene_detector_m, grid_side=side))
    masks = generate_masks(cell_rng.split(_SUB_OPERATOR), m, n)
    return effective_rows(masks, d_ms, d_sd)


def resolve_generator(cfg: ExperimentConfig, width: int, height: int) -> GeneratorNet:
    if cfg.generator_weights is None:
        raise ValueError(
            f"algorithm {cfg.algorithm!r} needs --weights (a weight file path, or 'synthetic')"
        )
    if cfg.generator_weights == "synthetic":
        return synthetic_generator(width, height)
    net = load_generator(cfg.generator_weights)
    if net.output_dim != width * height:
        raise ValueError(
            f"generator outputs {net.output_dim} pixels but images are {width}x{height}"
        )
    return net


def _classical_cfg(cfg: ExperimentConfig, k_max_default: int, rng: SeededRng, init) -> ClassicalConfig:
    kwargs = dict(k_max=cfg.k_max if cfg.k_max is not None else k_max_default, rng=rng, init=init)
    if cfg.step_size is not None:
        kwargs["step_size"] = cfg.step_size
    if cfg.twf_lb is not None:
        kwargs["twf_lb"] = cfg.twf_lb
    if cfg.twf_ub is not None:
        kwargs["twf_ub"] = cfg.twf_ub
    return ClassicalConfig(**kwargs)


def _drgd_cfg(cfg: ExperimentConfig, rng: SeededRng) -> DrgdConfig:
    kwargs = dict(rng=rng)
    if cfg.i_max is not None:
        kwargs["i_max"] = cfg.i_max
    if cfg.eta is not None:
        kwargs["step_size"] = cfg.eta
    if cfg.reg_weight is not None:
        kwargs["reg_weight"] = cfg.reg_weight
    return DrgdConfig(**kwargs)


def _solve_cell(
    cfg: ExperimentConfig,
    operator: SensingOperator,
    y: Array,
    width: int,
    height: int,
    cell_rng: SeededRng,
) -> tuple[Array, float, float]:
    """Run the configured algorithm; returns (reconstruction, wall, init_time)."""
    if cfg.algorithm == "wf":
        t0 = time.perf_counter()
        x0 = spectral_init(operator, y)
        init_time = time.perf_counter() - t0
        report = wirtinger_flow(
            operator, y, _classical_cfg(cfg, WF_DEFAULT_ITERS, cell_rng.split(_SUB_SOLVER), x0)
        )
        return report.reconstruction, init_time + report.wall_time_s, init_time
    if cfg.algorithm == "twf":
        t0 = time.perf_counter()
        x0 = spectral_init(operator, y)
        init_time = time.perf_counter() - t0
        report = truncated_wirtinger_flow(
            operator, y, _classical_cfg(cfg, TWF_DEFAULT_ITERS, cell_rng.split(_SUB_SOLVER), x0)
        )
        return report.reconstruction, init_time + report.wall_time_s, init_time
    if cfg.algorithm == "rk":
        t0 = time.perf_counter()
        if cfg.rk_init == "spectral":
            x0 = spectral_init(operator, y)
        else:
            g = cell_rng.split(_SUB_RANDOM_INIT).generator()
            v = g.standard_normal(operator.n)
            x0 = v / np.linalg.norm(v)
        init_time = time.perf_counter() - t0
        k_max = cfg.k_max if cfg.k_max is not None else RK_DEFAULT_ITERS
        report = randomized_kaczmarz(
            operator, y, x0, k_max=k_max, rng=cell_rng.split(_SUB_KACZMARZ)
        )
        return report.reconstruction, init_time + report.wall_time_s, init_time
    net = resolve_generator(cfg, width, height)
    dcfg = _drgd_cfg(cfg, cell_rng.split(_SUB_SOLVER))
    if cfg.algorithm == "drgd":
        _, report = drgd(operator, y, net, dcfg, width, height)
        return report.reconstruction, report.wall_time_s, report.wall_time_s
    k_max = cfg.k_max if cfg.k_max is not None else RK_DEFAULT_ITERS
    report = deepinit(
        operator, y, net, dcfg, width, height, k_max=k_max, rng=cell_rng.split(_SUB_KACZMARZ)
    )
    return (
        report.reconstruction,
        report.wall_time_s,
        report.phases["initializer"].wall_time_s,
    )


def _run_cell(task: tuple) -> ResultRow:
    (cfg, standoff_index, standoff, rate_index, rate, image_index, image, width, height) = task
    n = image.shape[0]
    m = round_half_away(rate * n)
    if m < 1:
        raise ValueError(f"sampling rate {rate} gives zero measurements for n = {n}")
    cell_rng = SeededRng(cfg.seed).split(_TAG_CELL, standoff_index, rate_index, image_index)
    operator = build_cell_operator(cfg, cell_rng, m, n, width, standoff)
    y = intensity_forward(operator, image)
    recon, wall, init_time = _solve_cell(cfg, operator, y, width, height, cell_rng)
    quality = metrics.score(recon, image, width, height)
    if cfg.dump_dir:
        dump_reconstruction(cfg, recon, width, height, standoff, rate, image_index)
    return ResultRow(
        dataset=cfg.dataset,
        algorithm=cfg.algorithm,
        sensing=cfg.sensing,
        sampling_rate=rate,
        standoff_m=standoff,
        image_index=int(image_index),
        seed=cfg.seed,
        m=m,
        n=n,
        aligned_rel_error=quality.aligned_rel_error,
        psnr_db=quality.psnr_db,
        ssim=quality.ssim,
        wall_time_s=wall,
        init_time_s=init_time,
    )


def write_pgm(path: str, image: Array, width: int, height: int) -> None:
    """Dump an image in [0, 1] as binary 8-bit PGM."""
    img = np.asarray(image, dtype=np.float64)
    if img.shape != (width * height,):
        raise ValueError(f"image of length {img.shape} does not match {width}x{height}")
    pixels = np.rint(np.clip(img, 0.0, 1.0) * 255.0).astype(np.uint8)
    with open(path, "wb") as fh:
        fh.write(f"P5\n{width} {height}\n255\n".encode("ascii"))
        fh.write(pixels.tobytes())


def dump_reconstruction(
    cfg: ExperimentConfig,
    recon: Array,
    width: int,
    height: int,
    standoff: float | None,
    rate: float,
    image_index: int,
) -> None:
    os.makedirs(cfg.dump_dir, exist_ok=True)
    tag = f"{cfg.algorithm}_rate{rate:g}"
    if standoff is not None:
        tag += f"_standoff{standoff:g}"
    path = os.path.join(cfg.dump_dir, f"{tag}_img{image_index}.pgm")
    write_pgm(path, np.clip(recon, 0.0, 1.0), width, height)


def _run_grid(cfg: ExperimentConfig, standoffs: list[float | None]) -> list[ResultRow]:
    dataset = load_test_images(cfg)
    indices, images = select_images(cfg, dataset)
    tasks = []
    for si, standoff in enumerate(standoffs):
        for ri, rate in enumerate(cfg.sampling_rates):
            for ii, pool_index in enumerate(indices):
                tasks.append(
                    (
                        cfg,
                        si,
                        standoff,
                        ri,
                        rate,
                        int(pool_index),
                        images[ii],
                        dataset.width,
                        dataset.height,
                    )
                )
    if cfg.workers > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            rows = list(pool.map(_run_cell, tasks))
    else:
        rows = [_run_cell(t) for t in tasks]
    rows.sort(
        key=lambda r: (
            r.algorithm,
            -1.0 if r.standoff_m is None else r.standoff_m,
            r.sampling_rate,
            r.image_index,
        )
    )
    return rows


def write_csv(path: str, rows: list[ResultRow]) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(",".join(CSV_COLUMNS) + "\n")
        for row in rows:
            fh.write(",".join(row.to_csv_fields()) + "\n")


def write_config_sidecar(cfg: ExperimentConfig, path: str) -> None:
    """Log the fully resolved config next to the CSV as sorted key=value lines."""
    fields = dataclasses.asdict(cfg)
    lines = []
    for key in sorted(fields):
        value = fields[key]
        if isinstance(value, tuple):
            value = ",".join(_fmt(v) for v in value)
        lines.append(f"{key}={value}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def run_experiment(cfg: ExperimentConfig) -> list[ResultRow]:
    """Run the rate grid at a fixed geometry and write CSV + config sidecar."""
    standoff = cfg.standoff_m if cfg.sensing == "diffraction" else None
    rows = _run_grid(cfg, [standoff])
    write_csv(cfg.out_csv, rows)
    write_config_sidecar(cfg, cfg.out_csv + ".config")
    return rows


def run_standoff_sweep(cfg: ExperimentConfig) -> list[ResultRow]:
    """Sweep the modulator-scene standoff over cfg.standoffs (diffraction only).

    The scene-detector kernel stays fixed; the modulator-scene kernel is
    rebuilt per distance.
    """
    if cfg.sensing != "diffraction":
        cfg = dataclasses.replace(cfg, sensing="diffraction")
    rows = _run_grid(cfg, list(cfg.standoffs))
    write_csv(cfg.out_csv, rows)
    write_config_sidecar(cfg, cfg.out_csv + ".config")
    return rows


def compare_initializations(cfg: ExperimentConfig) -> list[ResultRow]:
    """Spectral vs deep-generative initialization under one Kaczmarz budget.

    Each cell produces two rows (algorithm 'rk+spectral' and 'rk+deepinit')
    sharing the operator, measurements, and Kaczmarz row stream, so the only
    difference is the starting point. Initialization timings are medians of
    three repetitions.
    """
    dataset = load_test_images(cfg)
    indices, images = select_images(cfg, dataset)
    width, height = dataset.width, dataset.height
    net = resolve_generator(cfg, width, height)
    standoff = cfg.standoff_m if cfg.sensing == "diffraction" else None
    k_max = cfg.k_max if cfg.k_max is not None else RK_DEFAULT_ITERS
    rows: list[ResultRow] = []
    for ri, rate in enumerate(cfg.sampling_rates):
        for ii, pool_index in enumerate(indices):
            image = images[ii]
            n = image.shape[0]
            m = round_half_away(rate * n)
            cell_rng = SeededRng(cfg.seed).split(_TAG_CELL, 0, ri, int(pool_index))
            operator = build_cell_operator(cfg, cell_rng, m, n, width, standoff)
            y = intensity_forward(operator, image)
            starts = {}
            times = []
            for _ in range(3):
                t0 = time.perf_counter()
                x_spec = spectral_init(operator, y)
                times.append(time.perf_counter() - t0)
            starts["rk+spectral"] = (x_spec, float(np.median(times)))
            dcfg = _drgd_cfg(cfg, cell_rng.split(_SUB_SOLVER))
            times = []
            for _ in range(3):
                t0 = time.perf_counter()
                _, init_report = drgd(operator, y, net, dcfg, width, height)
                times.append(time.perf_counter() - t0)
            starts["rk+deepinit"] = (init_report.reconstruction, float(np.median(times)))
            for label, (x0, init_time) in starts.items():
                report = randomized_kaczmarz(
                    operator, y, x0, k_max=k_max, rng=cell_rng.split(_SUB_KACZMARZ)
                )
                quality = metrics.score(report.reconstruction, image, width, height)
                rows.append(
                    ResultRow(
                        dataset=cfg.dataset,
                        algorithm=label,
                        sensing=cfg.sensing,
                        sampling_rate=rate,
                        standoff_m=standoff,
                        image_index=int(pool_index),
                        seed=cfg.seed,
                        m=m,
                        n=n,
                        aligned_rel_error=quality.aligned_rel_error,
                        psnr_db=quality.psnr_db,
                        ssim=quality.ssim,
                        wall_time_s=init_time + report.wall_time_s,
                        init_time_s=init_time,
                    )
                )
    rows.sort(key=lambda r: (r.algorithm, r.sampling_rate, r.image_index))
    write_csv(cfg.out_csv, rows)
    write_config_sidecar(cfg, cfg.out_csv + ".config")
    return rows
