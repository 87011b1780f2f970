"""Lovász hinge, its structured-abstain target loss, and calibrated links."""

from ._kernels import backend, warmup
from .lovasz import (
    barycentric,
    clip,
    expected_hinge,
    hinge,
    hinge_subgradient,
    lovasz_extension,
    lovasz_subgradient,
    sign_star,
)
from .setfn import SetFunction, make, mean_value, modular, zero_one

__version__ = "0.1.0"
