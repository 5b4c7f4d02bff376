"""spinforge: simulation and analysis toolkit for a microwave-controlled
electron-nuclear spin register.

Subpackages
-----------
qmat         dense complex linear algebra, axis-angle rotation algebra
hyperfine    conditional-precession Hamiltonian and decoupling-block algebra
sequences    pulse sequences, Ramsey/echo signals, FFT spectra
channels     CPTP channel models: state transfer, optical readout pipelines
locate       dipolar forward model and chi-square position fitting
environment  dark-spin branches, quantum-jump traces, concentration posterior
cli          batch command-line front end
"""

from . import channels, environment, hyperfine, locate, qmat, sequences
from .qmat import (
    ArgumentError,
    AxisAngle,
    DensityMatrix,
    DimensionError,
    DomainError,
)

__version__ = "0.1.0"

__all__ = [
    "ArgumentError",
    "AxisAngle",
    "DensityMatrix",
    "DimensionError",
    "DomainError",
    "channels",
    "environment",
    "hyperfine",
    "locate",
    "qmat",
    "sequences",
    "__version__",
]
