"""Full-diversity low-density lattice codes for block-fading channels.

Exact constructions and verification of the diversity properties, the
outage limit for infinite lattice constellations under block fading, and
both maximum-likelihood (sphere) and iterative (quantized-pdf belief
propagation) decoding with outage gating.
"""

from .algebra import AlgebraicScalar, ExactMatrix, is_rational_ratio, rational, sqrt_int
from .channel import (ChannelSpec, FadingRealization, apply_channel,
                      faded_threshold, is_outage, pol_monte_carlo, pol_oracle,
                      poltyrev_threshold, sample_fading)
from .construction import (BinaryImage, GeneratingSequence, IntegerCheckMatrix,
                           binary_image, build_fd_bp, build_fd_bp_L4,
                           build_fd_ml, build_fd_ml_latin, build_fd_ml_random,
                           build_latin_square_ldlc, read_icm, write_icm)
from .diversity import (DegreeDistribution, DpeTrace, VerifyReport, dpe_run,
                        ec_condition, kappa, shortened_set, verify_fd_ml)
from .iterative import (GaussianPeak, IterConfig, IterativeDecoder,
                        QuantizedPdf, check_message, decode_iterative,
                        init_variable_pdfs, peak_amplitude_oracle,
                        variable_update)
from .sim import SimRecord, SlopeFit, SweepConfig, fit_slope, run_sweep, runtime_report
from .sphere import DecodeOutcome, FadedLattice, gated_decode, sphere_decode

__version__ = "0.1.0"
