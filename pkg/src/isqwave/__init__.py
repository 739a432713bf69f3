"""Numerics for the wave equation with an inverse-square potential.

Per-mode fundamental-solution kernels with their diffractive jump, an
independent finite-difference cross-check, discrete Hankel transforms,
bicharacteristic flow tracing, and the energy-inequality audits, all behind
one CLI (`isqwave`).
"""

__version__ = "0.1.0"
