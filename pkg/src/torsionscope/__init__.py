"""Persistence with integer awareness: torsion detection for point clouds.

Core pipeline: generate or load a point cloud, build its Vietoris-Rips
filtration, reduce over a choice of coefficients, and compare pairings
across coefficient fields to find integer torsion.  On top of that sit
diagram metrics, an autoencoder harness with topology-aware losses, and
reproducible experiment presets.
"""

from ._kernels import BACKEND
from .phfield import (
    Barcode,
    Coefficients,
    PersistenceDiagram,
    PersistencePair,
    load_diagram,
    reduce,
    save_diagram,
)
from .pointcloud import (
    PointCloud,
    generate_loop_band,
    generate_projective_plane,
    generate_random_cloud,
    load_cloud,
    perturb_gaussian,
    save_cloud,
)
from .diagmetrics import (
    BarLengthSet,
    bottleneck,
    persistence_entropy,
    wasserstein1,
)
from .experiments import (
    audit_cloud,
    fragility_study,
    highdim_screen,
    hyperparam_search,
    prime_sensitivity_study,
    reconstruction_experiment,
    run_preset,
)
from .nn import AutoencoderModel, TrainConfig, build_autoencoder, forward, train
from .rips import Filtration, Simplex, SimplexCapExceeded, build_rips
from .topoloss import combined_loss, rtd_loss, rtd_loss_grad, topo_loss, topo_loss_grad
from .torsion import (
    IntegralHomologySummary,
    TorsionReport,
    integral_homology,
    relative_integral_homology,
    scan_relative_torsion,
    smith_normal_form,
    torsion_check,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "BarLengthSet",
    "Barcode",
    "AutoencoderModel",
    "Coefficients",
    "Filtration",
    "IntegralHomologySummary",
    "PersistenceDiagram",
    "PersistencePair",
    "PointCloud",
    "Simplex",
    "SimplexCapExceeded",
    "TorsionReport",
    "TrainConfig",
    "__version__",
    "audit_cloud",
    "bottleneck",
    "build_autoencoder",
    "build_rips",
    "combined_loss",
    "forward",
    "fragility_study",
    "generate_loop_band",
    "generate_projective_plane",
    "generate_random_cloud",
    "highdim_screen",
    "hyperparam_search",
    "integral_homology",
    "load_cloud",
    "load_diagram",
    "persistence_entropy",
    "perturb_gaussian",
    "prime_sensitivity_study",
    "reconstruction_experiment",
    "reduce",
    "relative_integral_homology",
    "rtd_loss",
    "rtd_loss_grad",
    "run_preset",
    "save_cloud",
    "save_diagram",
    "scan_relative_torsion",
    "smith_normal_form",
    "topo_loss",
    "topo_loss_grad",
    "torsion_check",
    "train",
    "wasserstein1",
]
