"""Isoperimetry of the giant cluster in supercritical bond percolation on Z^2."""
from .geometry import Circuit, polygonal_approx, vol, weighted_interior_count
from .isosolver import PhiResult, SolverConfig, brute_force_phi, phi
from .lab import ExperimentSpec, plant_annulus_experiment, plant_barrier_experiment, rate_fit, tail_experiment
from .metric import chemical_distance, estimate_time_constant
from .percolation import GridSpec, label_clusters, sample_configuration
from .wulff import NormModel, iso_constant, wulff_shape

__version__ = "0.1.0"

__all__ = [
    "Circuit", "polygonal_approx", "vol", "weighted_interior_count", "PhiResult", "SolverConfig",
    "brute_force_phi", "phi", "ExperimentSpec", "plant_annulus_experiment", "plant_barrier_experiment",
    "rate_fit", "tail_experiment", "chemical_distance", "estimate_time_constant", "GridSpec",
    "label_clusters", "sample_configuration", "NormModel", "iso_constant", "wulff_shape",
]
