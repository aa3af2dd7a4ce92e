"""Tube formulas for self-similar fractal tilings.

The inner tube volume of a self-similar tiling is computed two ways: as a sum
of residues of a geometric zeta function over its complex dimensions, and by
summing the tube volumes of all scaled copies of the generator directly.
"""

__version__ = "0.1.0"

from .errors import (AccuracyError, CoincidenceError, ConfigError, DomainError, GeometryError,
                     HypothesisViolation, PoleProximityError, ResourceError, SearchError,
                     TilingConsistencyError, TubeFormulaError, UnsupportedConfigurationError)
from .geometry import (GeneratorProfile, Polygon, hexagram_builtin, inner_tube_volume_raster,
                       profile_volume, scaled_profile_volume, steiner_coefficients,
                       unit_square_builtin)
from .system import SelfSimilarSystem, Similitude, enumerate_ratios, hexagram_tiling_system
from .spectrum import ScalingZeta, complex_dimensions, lattice_detect, similarity_dimension
from .tube import GeometricZeta, TubeEvaluation, residue_complex, residue_contour, \
    residue_integer, tube_formula
from .oracle import SweepReport, direct_tile_sum, raster_tiling_volume, sweep_compare
