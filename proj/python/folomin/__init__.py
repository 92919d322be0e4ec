"""Folded-loss rotation for latent-variable models.

Thin bindings over the C++ core: joint fitting, rotation, vintage baselines,
plug-in inference and the simulation harness.
"""

from ._core import (
    DataError,
    NumericalError,
    UsageError,
    align,
    bh_adjust,
    bonferroni,
    criterion_folomin,
    criterion_varimax,
    erm_fit,
    fit,
    folded_loss,
    infer,
    promax,
    rotate,
    simulate,
    varimax,
)

__all__ = [
    "DataError",
    "NumericalError",
    "UsageError",
    "align",
    "bh_adjust",
    "bonferroni",
    "criterion_folomin",
    "criterion_varimax",
    "erm_fit",
    "fit",
    "folded_loss",
    "infer",
    "promax",
    "rotate",
    "simulate",
    "varimax",
]

__version__ = "0.1.0"
