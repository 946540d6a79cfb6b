"""Decision-diagram cut generation and lifting for binary SOC constraints."""
from .bdd import Bdd, enumerate_paths, reduce, width_one
from .compile import BuildConfig, build_bdd
from .kernels import BACKEND
from .model import Instance, SocConstraint, evaluate

__all__ = [
    "BACKEND", "Bdd", "BuildConfig", "Instance", "SocConstraint",
    "build_bdd", "enumerate_paths", "evaluate", "reduce", "width_one",
]
__version__ = "0.1.0"
