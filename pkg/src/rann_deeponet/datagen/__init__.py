"""Input-function sampling, reference solvers and benchmark datasets."""
from .dataset import BOUNDARY, INITIAL, INTERIOR, OUTSIDE, Dataset, build_dataset
from .grf import sample_grf_periodic_riesz, sample_grf_rbf
from .solvers import solve_burgers, solve_darcy, solve_diffusion_reaction

__all__ = [
    "BOUNDARY", "INITIAL", "INTERIOR", "OUTSIDE", "Dataset", "build_dataset",
    "sample_grf_periodic_riesz", "sample_grf_rbf", "solve_burgers", "solve_darcy",
    "solve_diffusion_reaction",
]
