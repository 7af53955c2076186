"""Decay to equilibrium for linear kinetic models, checked numerically.

Modules
-------
spectral          Fourier representation on the torus, free transport, multipliers
abstract          finite-dimensional damped/free pairs and the dissipation lemmas
goldstein_taylor  two-speed relaxation model and its observability identity
transport         relaxation and weak-damping transport models
boltzmann         discrete-velocity linearized Boltzmann operator (d = 2)
analysis          decay-rate fits, window selection, Ammari sequences
"""

from . import abstract, analysis, boltzmann, goldstein_taylor, spectral, transport

__version__ = "0.1.0"

__all__ = ["abstract", "analysis", "boltzmann", "goldstein_taylor", "spectral", "transport"]
