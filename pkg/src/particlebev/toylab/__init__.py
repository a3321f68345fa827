"""Label-ambiguity toy study: a minimal autodiff engine, the two-conv /
two-linear toy network, and the convergence experiment around reference
sampling."""

from .autodiff import Tensor
from .experiment import ToyConfig, ToyResult, run_ambiguity_experiment, write_loss_curves
from .network import Adam, init_params, toy_forward, toy_loss

__all__ = [
    "Tensor", "Adam", "init_params", "toy_forward", "toy_loss",
    "ToyConfig", "ToyResult", "run_ambiguity_experiment", "write_loss_curves",
]
