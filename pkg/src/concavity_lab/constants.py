"""Shared constants for the concavity lab."""

VERSION = "0.1.0"

# Planar toolkit throughout.
DIMENSION = 2

DEFAULT_DEGREE = 32
DEFAULT_BOUNDARY_NODES = 256
DEFAULT_RADIAL_NODES = 128
DEFAULT_SCAN_POINTS = 41
DEFAULT_TOLERANCE = 1e-7

MAX_DEGREE = 128
MAX_BOUNDARY_NODES = 8192
MAX_RADIAL_NODES = 4096
MIN_QUADRATURE_NODES = 16
MIN_SCAN_POINTS = 5

# Bodies in the corpus live inside radius 4.
VALIDATION_RADIUS = 5.0
DEFAULT_ELLIPSE_DEGREE = 64
PROJECTION_TOLERANCE = 1e-10

PSD_RELATIVE_FLOOR = 1e-9
EVENNESS_TOLERANCE = 1e-8

DEFAULT_ORACLE_SAMPLES = 200
DEFAULT_ORACLE_DEGREE = 6
DEFAULT_ORACLE_STEP = 0.05
ORACLE_AGREEMENT = 5e-3
ORACLE_GUARD = 1e-8
ORACLE_RESCALE_RETRIES = 10
PRNG_ALGORITHM = "numpy PCG64 (SeedSequence([seed, index]))"

HYPOTHESES_VIOLATED = "hypotheses violated"

__all__ = [
    "DEFAULT_BOUNDARY_NODES",
    "DEFAULT_DEGREE",
    "DEFAULT_ELLIPSE_DEGREE",
    "DEFAULT_ORACLE_DEGREE",
    "DEFAULT_ORACLE_SAMPLES",
    "DEFAULT_ORACLE_STEP",
    "DEFAULT_RADIAL_NODES",
    "DEFAULT_SCAN_POINTS",
    "DEFAULT_TOLERANCE",
    "DIMENSION",
    "EVENNESS_TOLERANCE",
    "HYPOTHESES_VIOLATED",
    "MAX_BOUNDARY_NODES",
    "MAX_DEGREE",
    "MAX_RADIAL_NODES",
    "MIN_QUADRATURE_NODES",
    "MIN_SCAN_POINTS",
    "ORACLE_AGREEMENT",
    "ORACLE_GUARD",
    "ORACLE_RESCALE_RETRIES",
    "PRNG_ALGORITHM",
    "PROJECTION_TOLERANCE",
    "PSD_RELATIVE_FLOOR",
    "VALIDATION_RADIUS",
    "VERSION",
]
