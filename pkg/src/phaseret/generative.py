"""Dense generator networks, total-variation regularization, and the deep
generative initializer.

Canonical network weights are float32 (so files round-trip bitwise), while all
forward and backward arithmetic runs in float64 copies cached at construction.
The initializer (DRGD) descends the regularized intensity loss over the
latent space of a generator; DeepInit composes it with randomized Kaczmarz.
"""

from __future__ import annotations

import dataclasses
import logging
import struct
import time

import numpy as np
from scipy.special import expit

from .numerics import Array, SeededRng, as_vector, ensure_finite
from .sensing import SensingOperator
from .solvers import (
    RK_DEFAULT_ITERS,
    SolverReport,
    _check_measurements,
    intensity_gradient,
    intensity_loss,
    randomized_kaczmarz,
)

logger = logging.getLogger(__name__)

ACTIVATIONS = ("linear", "relu", "sigmoid", "tanh")
_ACTIVATION_CODES = {"linear": 0, "relu": 1, "sigmoid": 2, "tanh": 3}
_CODE_ACTIVATIONS = {v: k for k, v in _ACTIVATION_CODES.items()}

_DGPR_MAGIC = b"DGPR"
_DGPR_VERSION = 1


def _apply_activation(name: str, s: Array) -> Array:
    if name == "linear":
        return s
    if name == "relu":
        return np.maximum(s, 0.0)
    if name == "sigmoid":
        return expit(s)
    return np.tanh(s)


def _activation_derivative(name: str, s: Array, a: Array) -> Array:
    """Derivative at pre-activation s with activation value a.

    ReLU uses the subgradient choice 0 at the kink.
    """
    if name == "linear":
        return np.ones_like(s)
    if name == "relu":
        return (s > 0.0).astype(np.float64)
    if name == "sigmoid":
        return a * (1.0 - a)
    return 1.0 - a * a


@dataclasses.dataclass(eq=False)
class DenseLayer:
    """One affine map plus pointwise activation. Weights are (out, in) float32."""

    weights: Array
    bias: Array
    activation: str

    def __post_init__(self) -> None:
        w = np.asarray(self.weights, dtype=np.float32)
        b = np.asarray(self.bias, dtype=np.float32)
        if w.ndim != 2 or w.shape[0] < 1 or w.shape[1] < 1:
            raise ValueError(f"layer weights must be 2-D and non-empty, got shape {w.shape}")
        if b.shape != (w.shape[0],):
            raise ValueError(f"bias shape {b.shape} does not match {w.shape[0]} output units")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")
        ensure_finite(w, "layer weights")
        ensure_finite(b, "layer bias")
        self.weights = w
        self.bias = b

    @property
    def in_dim(self) -> int:
        return self.weights.shape[1]

    @property
    def out_dim(self) -> int:
        return self.weights.shape[0]


@dataclasses.dataclass(eq=False)
class GeneratorNet:
    """A chain of dense layers mapping latent codes to flattened images."""

    layers: tuple[DenseLayer, ...]
    _w64: tuple[Array, ...] = dataclasses.field(init=False, repr=False)
    _b64: tuple[Array, ...] = dataclasses.field(init=False, repr=False)

    def __post_init__(self) -> None:
        if isinstance(self.layers, list):
            self.layers = tuple(self.layers)
        if len(self.layers) < 1:
            raise ValueError("a generator needs at least one layer")
        for prev, nxt in zip(self.layers, self.layers[1:]):
            if prev.out_dim != nxt.in_dim:
                raise ValueError(
                    f"layer dimension mismatch: {prev.out_dim} outputs feed {nxt.in_dim} inputs"
                )
        self._w64 = tuple(layer.weights.astype(np.float64) for layer in self.layers)
        self._b64 = tuple(layer.bias.astype(np.float64) for layer in self.layers)

    @property
    def latent_dim(self) -> int:
        return self.layers[0].in_dim

    @property
    def output_dim(self) -> int:
        return self.layers[-1].out_dim


def generator_forward(net: GeneratorNet, z: Array) -> Array:
    zv = as_vector(z, "latent", dtype=np.float64)
    if zv.shape[0] != net.latent_dim:
        raise ValueError(f"latent has length {zv.shape[0]}, generator expects {net.latent_dim}")
    h = zv
    for layer, w, b in zip(net.layers, net._w64, net._b64):
        h = _apply_activation(layer.activation, w @ h + b)
    return h


def _forward_trace(net: GeneratorNet, z: Array) -> tuple[list[Array], list[Array]]:
    pre, act = [], []
    h = z
    for layer, w, b in zip(net.layers, net._w64, net._b64):
        s = w @ h + b
        h = _apply_activation(layer.activation, s)
        pre.append(s)
        act.append(h)
    return pre, act


def generator_vjp(net: GeneratorNet, z: Array, cotangent: Array) -> Array:
    """Pull a cotangent on the output back to the latent space: J_G(z)^T c."""
    zv = as_vector(z, "latent", dtype=np.float64)
    cv = as_vector(cotangent, "cotangent", dtype=np.float64)
    if zv.shape[0] != net.latent_dim:
        raise ValueError(f"latent has length {zv.shape[0]}, generator expects {net.latent_dim}")
    if cv.shape[0] != net.output_dim:
        raise ValueError(f"cotangent has length {cv.shape[0]}, output dim is {net.output_dim}")
    pre, act = _forward_trace(net, zv)
    g = cv
    for idx in range(len(net.layers) - 1, -1, -1):
        layer = net.layers[idx]
        g = g * _activation_derivative(layer.activation, pre[idx], act[idx])
        g = net._w64[idx].T @ g
    return g


def tv_norm(x: Array, width: int, height: int) -> float:
    """Anisotropic total variation: sum of |horizontal| + |vertical| differences."""
    img = _as_image(x, width, height)
    return float(np.abs(np.diff(img, axis=1)).sum() + np.abs(np.diff(img, axis=0)).sum())


def tv_subgradient(x: Array, width: int, height: int) -> Array:
    """A subgradient of tv_norm, with sign(0) = 0 at flat differences."""
    img = _as_image(x, width, height)
    g = np.zeros_like(img)
    sh = np.sign(np.diff(img, axis=1))
    g[:, 1:] += sh
    g[:, :-1] -= sh
    sv = np.sign(np.diff(img, axis=0))
    g[1:, :] += sv
    g[:-1, :] -= sv
    return g.ravel()


def _as_image(x: Array, width: int, height: int) -> Array:
    v = as_vector(x, "image", dtype=np.float64)
    if width < 1 or height < 1 or v.shape[0] != width * height:
        raise ValueError(f"image of length {v.shape[0]} does not match {width}x{height}")
    return v.reshape(height, width)


@dataclasses.dataclass(frozen=True)
class DrgdConfig:
    """Settings for descent over the generator's latent space.

    ``optimizer`` is "adam" (default) or "plain". The plain subgradient step
    halves its step size and restarts from the same z0 when the objective
    goes non-finite, up to ``max_step_halvings`` times.
    """

    i_max: int = 200
    step_size: float = 0.1
    reg_weight: float = 0.1
    rng: SeededRng = SeededRng(0)
    optimizer: str = "adam"
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    max_step_halvings: int = 10

    def __post_init__(self) -> None:
        if self.i_max < 0:
            raise ValueError(f"i_max must be >= 0, got {self.i_max}")
        if not (self.step_size > 0.0):
            raise ValueError(f"step_size must be positive, got {self.step_size}")
        if self.reg_weight < 0.0:
            raise ValueError(f"reg_weight must be >= 0, got {self.reg_weight}")
        if self.optimizer not in ("adam", "plain"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")
        if self.max_step_halvings < 0:
            raise ValueError("max_step_halvings must be >= 0")


def drgd_objective(
    operator: SensingOperator,
    y: Array,
    net: GeneratorNet,
    z: Array,
    reg_weight: float,
    width: int,
    height: int,
) -> float:
    """Intensity loss of G(z) plus reg_weight times its total variation."""
    x = generator_forward(net, z)
    value = intensity_loss(operator, y, x)
    if reg_weight > 0.0:
        value += reg_weight * tv_norm(x, width, height)
    return value


def drgd_objective_gradient(
    operator: SensingOperator,
    y: Array,
    net: GeneratorNet,
    z: Array,
    reg_weight: float,
    width: int,
    height: int,
) -> Array:
    """Latent gradient: J_G(z)^T (intensity gradient + reg_weight * TV subgradient)."""
    x = generator_forward(net, z)
    g_x = intensity_gradient(operator, y, x)
    if reg_weight > 0.0:
        g_x = g_x + reg_weight * tv_subgradient(x, width, height)
    return generator_vjp(net, z, g_x)


def drgd(
    operator: SensingOperator,
    y: Array,
    net: GeneratorNet,
    cfg: DrgdConfig,
    width: int,
    height: int,
) -> tuple[Array, SolverReport]:
    """Descend the TV-regularized intensity loss over the latent space.

    z0 is standard normal from cfg.rng; with i_max = 0 it is returned
    unchanged. Returns (z, report) with the report's reconstruction G(z) and
    the full objective logged every iteration.
    """
    t0 = time.perf_counter()
    if net.output_dim != operator.n or net.output_dim != width * height:
        raise ValueError(
            f"generator output dim {net.output_dim} must match operator n = {operator.n} "
            f"and image size {width}x{height}"
        )
    yv = _check_measurements(operator, y)
    g = cfg.rng.generator()
    z0 = g.standard_normal(net.latent_dim)

    eta = cfg.step_size
    for attempt in range(cfg.max_step_halvings + 1):
        z, losses, ok = _drgd_attempt(operator, yv, net, cfg, z0, eta, width, height)
        if ok:
            break
        if attempt < cfg.max_step_halvings:
            eta /= 2.0
            logger.warning(
                "latent descent diverged; halving step size to %.3g and restarting", eta
            )
    else:
        raise RuntimeError(
            f"latent descent diverged at every step size down to {eta:.3g} "
            f"({cfg.max_step_halvings} halvings)"
        )

    report = SolverReport(
        reconstruction=generator_forward(net, z),
        loss_trace=np.array(losses),
        logged_iterations=np.arange(len(losses)),
        iterations_run=cfg.i_max,
        wall_time_s=time.perf_counter() - t0,
        extras={"step_size_used": eta, "z0": z0},
    )
    return z, report


def _drgd_attempt(
    operator: SensingOperator,
    y: Array,
    net: GeneratorNet,
    cfg: DrgdConfig,
    z0: Array,
    eta: float,
    width: int,
    height: int,
) -> tuple[Array, list[float], bool]:
    z = z0.copy()
    m1 = np.zeros_like(z)
    m2 = np.zeros_like(z)
    losses: list[float] = []
    # overflow here is the divergence signal, not an error worth warning about
    with np.errstate(over="ignore", invalid="ignore"):
        for i in range(cfg.i_max):
            loss = drgd_objective(operator, y, net, z, cfg.reg_weight, width, height)
            if not np.isfinite(loss):
                return z, losses, False
            losses.append(loss)
            g_z = drgd_objective_gradient(operator, y, net, z, cfg.reg_weight, width, height)
            if cfg.optimizer == "plain":
                z = z - eta * g_z
            else:
                t = i + 1
                m1 = cfg.adam_beta1 * m1 + (1.0 - cfg.adam_beta1) * g_z
                m2 = cfg.adam_beta2 * m2 + (1.0 - cfg.adam_beta2) * g_z * g_z
                m1_hat = m1 / (1.0 - cfg.adam_beta1**t)
                m2_hat = m2 / (1.0 - cfg.adam_beta2**t)
                z = z - eta * m1_hat / (np.sqrt(m2_hat) + cfg.adam_eps)
            if not np.all(np.isfinite(z)):
                return z0.copy(), losses, False
        final = drgd_objective(operator, y, net, z, cfg.reg_weight, width, height)
    if not np.isfinite(final):
        return z, losses, False
    losses.append(final)
    return z, losses, True


def deepinit(
    operator: SensingOperator,
    y: Array,
    net: GeneratorNet,
    cfg: DrgdConfig,
    width: int,
    height: int,
    k_max: int = RK_DEFAULT_ITERS,
    rng: SeededRng | None = None,
) -> SolverReport:
    """Latent descent for initialization, then randomized Kaczmarz refinement.

    The Kaczmarz phase starts exactly at G(z*); with k_max = 0 the output is
    G(z*) itself. Per-phase reports are kept under report.phases.
    """
    if rng is None:
        rng = cfg.rng.split(0x4B)
    z, init_report = drgd(operator, y, net, cfg, width, height)
    x0 = init_report.reconstruction
    rk_report = randomized_kaczmarz(operator, y, x0, k_max=k_max, rng=rng)
    return SolverReport(
        reconstruction=rk_report.reconstruction,
        loss_trace=rk_report.loss_trace,
        logged_iterations=rk_report.logged_iterations,
        iterations_run=init_report.iterations_run + rk_report.iterations_run,
        wall_time_s=init_report.wall_time_s + rk_report.wall_time_s,
        extras={"latent": z},
        phases={"initializer": init_report, "kaczmarz": rk_report},
    )


_BASIS_FREQUENCIES = ((0, 0), (0, 1), (1, 0), (1, 1), (0, 2), (2, 0), (1, 2), (2, 1))


def synthetic_generator(width: int = 28, height: int = 28, latent_dim: int = 8) -> GeneratorNet:
    """Fixed test generator: latent codes mix smooth cosine basis images.

    One dense layer whose columns are separable cosine images, zero bias,
    sigmoid output. Deterministic; useful for tests and for exercising the
    initializer without trained weights.
    """
    if not (1 <= latent_dim <= len(_BASIS_FREQUENCIES)):
        raise ValueError(f"latent_dim must lie in [1, {len(_BASIS_FREQUENCIES)}], got {latent_dim}")
    rows = (np.arange(height) + 0.5) / height
    cols = (np.arange(width) + 0.5) / width
    basis = []
    for fy, fx in _BASIS_FREQUENCIES[:latent_dim]:
        img = np.outer(np.cos(np.pi * fy * rows), np.cos(np.pi * fx * cols))
        basis.append(img.ravel())
    weights = np.stack(basis, axis=1).astype(np.float32)
    bias = np.zeros(width * height, dtype=np.float32)
    return GeneratorNet(layers=(DenseLayer(weights, bias, "sigmoid"),))


def save_generator(net: GeneratorNet, path: str) -> None:
    """Write generator weights to the fixed binary layout (see load_generator)."""
    with open(path, "wb") as fh:
        fh.write(struct.pack("<4sII", _DGPR_MAGIC, _DGPR_VERSION, len(net.layers)))
        for layer in net.layers:
            fh.write(
                struct.pack(
                    "<IIB", layer.in_dim, layer.out_dim, _ACTIVATION_CODES[layer.activation]
                )
            )
            fh.write(np.ascontiguousarray(layer.weights, dtype="<f4").tobytes())
            fh.write(np.ascontiguousarray(layer.bias, dtype="<f4").tobytes())


def load_generator(path: str) -> GeneratorNet:
    """Read generator weights written by save_generator.

    Layout: magic "DGPR", u32 version, u32 layer count; per layer u32 in_dim,
    u32 out_dim, u8 activation code, float32 LE weights row-major (out, in),
    float32 LE bias. Trailing bytes are an error.
    """
    with open(path, "rb") as fh:
        raw = fh.read()
    offset = 0

    def take(count: int, what: str) -> bytes:
        nonlocal offset
        if offset + count > len(raw):
            raise ValueError(
                f"weight file truncated while reading {what}: "
                f"need {offset + count} bytes, file has {len(raw)}"
            )
        chunk = raw[offset : offset + count]
        offset += count
        return chunk

    magic, version, layer_count = struct.unpack("<4sII", take(12, "header"))
    if magic != _DGPR_MAGIC:
        raise ValueError(f"not a generator weight file (magic {magic!r})")
    if version != _DGPR_VERSION:
        raise ValueError(f"unsupported weight file version {version}")
    if layer_count < 1:
        raise ValueError("weight file declares zero layers")
    layers = []
    for idx in range(layer_count):
        in_dim, out_dim, act_code = struct.unpack("<IIB", take(9, f"layer {idx} header"))
        if act_code not in _CODE_ACTIVATIONS:
            raise ValueError(f"layer {idx} has unknown activation code {act_code}")
        w = np.frombuffer(take(4 * in_dim * out_dim, f"layer {idx} weights"), dtype="<f4")
        b = np.frombuffer(take(4 * out_dim, f"layer {idx} bias"), dtype="<f4")
        layers.append(DenseLayer(w.reshape(out_dim, in_dim).copy(), b.copy(), _CODE_ACTIVATIONS[act_code]))
    if offset != len(raw):
        raise ValueError(f"weight file has {len(raw) - offset} trailing bytes")
    return GeneratorNet(layers=tuple(layers))
