"""Squeezed-state quantisation and position-dependent-mass dynamics.

The package builds overcomplete families of squeezed states (one-mode,
separable two-mode, and beam-splitter-mixed two-mode), quantises classical
phase-space functions against them, and evaluates the resulting lower
symbols (semiclassical portraits) in closed form.  On top of that sits a
position-dependent-mass oscillator model whose quantum corrections come from
erfc-smoothed wall portraits, with classical and semiclassical integrators
and a small CLI (portrait / simulate / verify / quantise).

Submodules share no names, so import them directly:

    from sqzq import onemode, sepstates, nonsepstates, quantmap, pdm
"""

from . import errors, numerics, onemode, sepstates, nonsepstates, quantmap, pdm, cli

__version__ = "0.1.0"

__all__ = [
    "cli",
    "errors",
    "nonsepstates",
    "numerics",
    "onemode",
    "pdm",
    "quantmap",
    "sepstates",
    "__version__",
]
