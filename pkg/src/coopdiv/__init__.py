"""Cooperative-diversity relay simulator and space-time code toolbox."""

from .channel import (DRAF, NDAAF, NDRAF, NDSDAF, NONCOOP, FadingDistribution,
                      FadingRealization, NoiseDraw, RULE_DELTA, RULE_OUTAGE,
                      cooperation_active, draf_equivalent_channel,
                      draf_mutual_information, draf_whiten,
                      effective_noise_variance, lambda_statistic,
                      outage_indicator, rayleigh, sample_fading, sample_noise,
                      two_product_gains)
from .codes import (Codebook, Constellation, GammaMatrix, LatticeGenerator,
                    code_metrics, default_gamma, diagonal_restricted_code,
                    export_descriptor, full_cda_code, gamma_matrix,
                    horizontally_restricted_code, horizontally_stacked_code,
                    integral_restriction_code, m_layered_code,
                    make_constellation, perfect_lattice_generator,
                    power_normalizer, reshape_columns, truncate_rows,
                    uncoded_code, vectorize_columns, vectorized_code)
from .curves import (DmgCurve, dmg_curve, optimal_curve, r_coop,
                     rate_drop_curve, snr_coop, two_product_curve)
from .decoding import DecodeBudgetError, DecodeProblem, ml_decode, \
    weighted_metric
from .montecarlo import (InsufficientErrorsError, TrialBatch, diversity_slope,
                         error_vs_outage_ratio, monte_carlo,
                         outage_monte_carlo, wilson_interval)
from .strategies import (FrameTranscript, SchemeConfig, build_codebooks,
                         ndsdaf_relay_decision, network_rate_accounting,
                         run_draf_frame, run_frame, run_ndraf_frame,
                         run_ndsdaf_frame)

__version__ = "0.1.0"
