"""Meta-learned Bayesian optimisation with deep kernel networks for
closed-loop performance tuning."""

from . import bo, dkn, gp, kernels, nn_encoder, numerics, plant
from .bo import AcquisitionConfig, BoHistory, GpFitConfig, run_dkn_bo, run_gp_bo
from .datasets import TaskDataset
from .dkn import DknParameters, LabelScaler, MetaTrainConfig, meta_train, predict
from .gp import GpPosterior
from .kernels import KernelHyperparams

__version__ = "0.1.0"
