"""Multifractal spectra of Birkhoff averages on subshifts of finite type."""
from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version("artifact")
except PackageNotFoundError:  # pragma: no cover - running from a source tree
    __version__ = "0.1.0"

from .errors import (BoundaryAlpha, ConfigError, DegenerateRow, NonIrreducible, NotFullDimensional,
                     NotHomogeneous, NotInLPhi, NotNormalized, NotPrimitive, OrderMismatch,
                     RangeEscapesLPhi, ResolutionTooFine, ThermoError)
from .sft import SFT, admissible_words, build_sft, full_shift, golden_mean
from .potential import (KStepPotential, MatrixCocyclePotential, PotentialBundle, birkhoff_range,
                        holder_approx, sup_weight, var_norm, var_norm_star)
from .pressure import PressureBracket, pressure_bracket, pressure_combined, pressure_exact
from .metric import BallFamily, WeakGibbsMetric, ball_family, metric_dimension
from .measures import (MarkovMeasure, conditional_variational, entropy, equilibrium_state,
                       lphi_affine_dim, moran_sample, potential_average, random_markov_measure)
from .spectrum import (SpectrumCurve, SpectrumSystem, l_phi, lambda_estimate, ld_count,
                       legendre_spectrum, localized_dimension, spectrum_curve, tau, tau_metric_estimate)
from .geometry import (SelfSimilarIFS, birkhoff_spectrum_point, coding_potential,
                       fixed_point_average_dimension, gibbs_local_dimension_spectrum)
