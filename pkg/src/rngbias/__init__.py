"""Effect sizes, funnel plots, Markov bit sources and R/S analysis for RNG meta-analysis."""
from . import core, dataio, funnel, hurst, markov, svg
from .core import Condition, StudyRecord, effect_size, pi_from_z, standard_error, z_score
from .funnel import EnvelopeSpec, coverage, fit_variance_factor
from .hurst import hurst as hurst_exponent
from .markov import MarkovParams, generate, theory

__version__ = "0.1.0"
