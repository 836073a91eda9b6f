"""Spectral solvers and verification experiments for time-periodic flows.

Submodules: :mod:`torus` (periodic functions in time), :mod:`rbound`
(R-bound estimation and transference checks), :mod:`modesplit` (cutoff
splitting of time modes), :mod:`stokes` (periodic-box Stokes and
Navier-Stokes), :mod:`freespace` (whole-space kernels and decay),
:mod:`moving` (transformed equations on a moving domain) and :mod:`cli`.
"""
__version__ = "0.1.0"

from .accel import BACKEND  # noqa: E402
from .torus import TorusFunction, analyze, from_coeffs, norm, NormSpec, NormKind  # noqa: E402

__all__ = ["__version__", "BACKEND", "TorusFunction", "analyze", "from_coeffs", "norm", "NormSpec", "NormKind"]
