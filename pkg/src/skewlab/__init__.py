"""Numerical laboratory for skew products over hyperbolic toral automorphisms.

The package provides torus arithmetic and linear base dynamics (`torus`),
a zoo of conservative fiber maps and skew-product assembly (`maps`), cone
and critical-band geometry (`cones`), numerical verification of the
expansion/coupling hypotheses (`hypotheses`), Lyapunov spectrum estimation
for several cocycle drivers (`lyapunov`), the admissible-curve / adapted
field machinery (`curves`), and a configuration-driven experiment runner
(`cli`, `presets`).
"""

from skewlab.torus import (
    TorusVector,
    ToralAutomorphism,
    Splitting,
    NotHyperbolic,
    reduce_mod_torus,
    hyperbolic_splitting,
    is_u_conformal,
    apply_iterated,
    TWO_PI,
)

__all__ = [
    "TorusVector",
    "ToralAutomorphism",
    "Splitting",
    "NotHyperbolic",
    "reduce_mod_torus",
    "hyperbolic_splitting",
    "is_u_conformal",
    "apply_iterated",
    "TWO_PI",
]

__version__ = "0.1.0"
