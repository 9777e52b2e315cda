"""Phase retrieval from intensity-only measurements.

Classical solvers (spectral initialization, Wirtinger Flow and its truncated
variant, randomized Kaczmarz), a deep generative initializer that descends a
TV-regularized intensity loss over a generator's latent space, Gaussian and
simulated terahertz single-pixel diffraction sensing models, and a CSV-emitting
experiment harness.
"""

from .numerics import SeededRng
from .sensing import (
    DiffractionSpec,
    MaskSet,
    SensingOperator,
    build_diffraction_matrix,
    effective_rows,
    gaussian_operator,
    generate_masks,
    intensity_forward,
    load_operator,
    physical_forward,
    save_operator,
)
from .solvers import (
    ClassicalConfig,
    SolverReport,
    intensity_gradient,
    intensity_loss,
    randomized_kaczmarz,
    spectral_init,
    truncated_wirtinger_flow,
    wirtinger_flow,
)
from .generative import (
    DenseLayer,
    DrgdConfig,
    GeneratorNet,
    deepinit,
    drgd,
    generator_forward,
    generator_vjp,
    load_generator,
    save_generator,
    synthetic_generator,
    tv_norm,
    tv_subgradient,
)
from .data import (
    Ellipse,
    ImageDataset,
    IdxFormatError,
    PhantomSpec,
    load_mnist,
    synthesize_shepp_logan,
)
from .metrics import QualityScore, psnr, score, sign_align, ssim
from .experiments import (
    ExperimentConfig,
    ResultRow,
    compare_initializations,
    run_experiment,
    run_standoff_sweep,
)

__version__ = "0.1.0"

__all__ = [
    "SeededRng",
    "DiffractionSpec",
    "MaskSet",
    "SensingOperator",
    "build_diffraction_matrix",
    "effective_rows",
    "gaussian_operator",
    "generate_masks",
    "intensity_forward",
    "load_operator",
    "physical_forward",
    "save_operator",
    "ClassicalConfig",
    "SolverReport",
    "intensity_gradient",
    "intensity_loss",
    "randomized_kaczmarz",
    "spectral_init",
    "truncated_wirtinger_flow",
    "wirtinger_flow",
    "DenseLayer",
    "DrgdConfig",
    "GeneratorNet",
    "deepinit",
    "drgd",
    "generator_forward",
    "generator_vjp",
    "load_generator",
    "save_generator",
    "synthetic_generator",
    "tv_norm",
    "tv_subgradient",
    "Ellipse",
    "ImageDataset",
    "IdxFormatError",
    "PhantomSpec",
    "load_mnist",
    "synthesize_shepp_logan",
    "QualityScore",
    "psnr",
    "score",
    "sign_align",
    "ssim",
    "ExperimentConfig",
    "ResultRow",
    "compare_initializations",
    "run_experiment",
    "run_standoff_sweep",
    "__version__",
]
