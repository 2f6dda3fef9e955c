"""Yoccoz puzzles, marked grids, annulus moduli, area decay and first-return maps
for quadratic polynomials z^2 + c."""
__version__ = "0.1.0"

from .dynamics import (ParameterPoint, airplane_parameter, alpha_ray_cycle, critical_orbit,
                       fixed_points, green_potential, iterate, trace_external_ray)
from .errors import *  # noqa: F401,F403
from .mask import PixelGrid, RegionMask
from .measure import (AreaReport, area_of_level, area_report, decay_check,
                      julia_area_upper_bound)
from .moduli import (AnnularRegion, ModulusMatrix, WeightedTree, covering_check,
                     divergence_partial_sums, isoperimetric_check, lemma1_propagate, nu,
                     solve_modulus, weighted_tree)
from .puzzle import OnBoundary, Outside, PuzzleComplex, PuzzlePiece, build_puzzle
from .renorm import (GeneralizedPLM, build_first_return_plm, cantor_diagnostics, plm_orbit_check,
                     returns_to_critical_piece)
from .tableau import MarkedGrid, RecurrenceVerdict, check_rules, marked_grid, recurrence_verdict, tau
