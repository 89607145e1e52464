"""Uniqueness of characteristic functions from their values outside a cube.

Lattice certificates decide the unique regime; in the non-unique regime a
band-limited perturbation of the density gives a second characteristic
function with the same values outside ``[-sigma, sigma]^n``.
"""

from .densities import DensitySpec, char_fn, eval_density, normalize
from .lattice import Certificate, ball_certificate, find_certificate, verify_certificate
from .perturbation import (
    GridSettings,
    PerturbationParams,
    build_counterexample,
    choose_amplitude,
    closed_moments,
    xi_base,
    xi_eval,
)
from .oracles import (
    ProbeSettings,
    SampleSet1D,
    Tolerances,
    VerificationReport,
    delta_n,
    uniqueness_probe,
    verify_counterexample,
    wks_reconstruct,
)
from .spectral import band_limit_check, forward_ft, poisson_check

__version__ = "0.1.0"
