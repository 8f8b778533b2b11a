"""
phasequant - semiclassical exact quantization toolkit.

Computes bound-state spectra and "classical" wavefunctions from
phase-integral quantization conditions, and checks the relativistic
Cornell spectrum against contour quadrature and a Numerov eigensolver.
"""

__version__ = "1.0.0"
