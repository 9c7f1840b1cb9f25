"""
AIII quench-dynamics simulator.

Reproduces the dynamical detection of the 3D AIII-class winding number:
Hamiltonian construction, quench evolution, time-averaged spin textures,
band-inversion surface location and winding-number integration.
"""

__version__ = "0.1.0"
