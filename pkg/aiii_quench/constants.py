"""
Numeric tolerances and physical defaults shared across the package.

Tests reference these names directly; change a value here and every check
that depends on it follows.
"""

import math

# Operator checks
HERMITIAN_TOL = 1e-12
UNITARY_TOL = 1e-10
TRACE_TOL = 1e-12
PSD_TOL = 1e-10
EXPECTATION_IMAG_TOL = 1e-12
NORM_TOL = 1e-12

# Closed-form propagator switches to the series limit below this |E t|
SINC_SWITCH = 1e-8

# Model defaults (rad/s)
XI_SO_DEFAULT = 400.0
XI0_DEFAULT = 4.0 * XI_SO_DEFAULT
BOUNDARY_EPS_REL = 1e-6

# Quench protocol defaults (seconds)
TAU_DEFAULT = 2.5e-4
TIMES_DEFAULT = tuple(round(0.5e-3 * i, 10) for i in range(1, 11))
NOISE_SAMPLES_DEFAULT = 100
DENSE_POINTS_DEFAULT = 1000
DENSE_HORIZON = 50.0
TROTTER_INTEGER_TOL = 1e-9

# BIS mesh and shells
BIS_REFINE_TOL_REL = 1e-6
DEGENERATE_GRADIENT_REL = 1e-9
SHELL_DELTA_REL = 0.1
SHELL_MAX_PATH = math.pi / 2
SHELL_SCAN_STEPS = 64
G_FLOOR = 1e-3
FLAGGED_FRACTION_MAX = 0.01

# Orientation "inside out" = +grad h0 gives +1 for Case II; the
# reported invariant there is -1.
WINDING_SIGN = -1.0

# NMR defaults
J_COUPLING_HZ = 215.0
TAU_HARD_DEFAULT = 5e-6
PPS_EPS_DEFAULT = 1e-5
GAMMA_RATIO = 4.0
MAX_DELAY_S = 50e-3

# Output formatting
SIG_DIGITS = 12
