"""Frozen numerical constants.

The penetration constants and the tube-length window were calibrated once by
``python -m ctlab.calibrate`` and are not recomputed at runtime.
"""

# Margulis parameter used when building thin parts
MARGULIS_EPS = 0.3

# chordal tolerances
TOL_CT = 1e-6
DEDUP_TOL = 1e-6
CT_TAIL = 10

# word depth caps
MAX_DEPTH = 14
FIXED_POINT_DEPTH = 12
ORBIT_DEPTH = 14

# remainder bound for parabolic blocks
BLOCK_REMAINDER = 2

# calibrated: 2 x (largest observed N/4 - dist).  The horoball sweep peaks at
# 0.03212 (O on the horosphere, symmetric pair).  No tube configuration
# exceeded -0.014, so tubes reuse the horoball value.
HOROBALL_PENETRATION_C = 0.0643
TUBE_PENETRATION_C = 0.0643

# window for tube surface length / exp(d/2) with R >= 0.5, h <= 2, d >= 0.5;
# observed range [0.3907, pi/2), the upper end approached as R grows
TUBE_RATIO_LOW = 0.385
TUBE_RATIO_HIGH = 1.575

# largest observed hyperbolic quasi-geodesic ratio of tracked word paths (4.78)
STANDARD_PATH_L_MAX = 5.0

# ceiling for u_N on the cyclic preset; observed value is arccosh(3/2) = 0.9624
CYCLIC_UEP_BOUND = 1.0
