"""
Computation services: operator algebra, model, quench dynamics, topology,
NMR compilation, sweeps and output writers.
"""
