"""Spatially coupled codes.

Protograph SC-LDPC ensembles with density evolution and windowed decoding,
spatially coupled turbo-like codes (GSC-PCC, SC-SCC, HSC-BCC), staircase and
zipper codes with windowed hard-decision decoding, and finite-length scaling
instrumentation for the BEC.
"""

from .bch import BCHCode, BCHSpec, DecodeFailure, bch_decode, bch_encode
from .chain import (ChainSpecError, ChainTranscript, CoupledChainSpec, EmptyChain, MemoryTooLarge,
                    ZeroTransmitted, measured_rate, validate_chain_spec)
from .channels import (LLR_MAX, ChannelSpec, PuncturePattern, apply_puncture, bec, biawgn, bsc,
                       frame_rng, make_puncture, puncture_fraction, to_llr, transmit)
from .density_evolution import (ProtographDE, bp_threshold, degree_one_proxy, scalar_regular_threshold,
                                windowed_threshold)
from .ldpc import TannerGraph, WindowConfig, bp_decode, peel_decode, window_decode
from .protograph import (CoupledBaseMatrix, ProtographBaseMatrix, QCMatrix, SubBlockLocalitySpec,
                         build_coupled_base, dumps_qc, edge_spread, girth, lift, loads_qc,
                         subblock_construct, uncoupled_base)
from .scaling import (NoSteadyState, ScalingInputs, collect_traces, estimate_window_failure, pf_compose,
                      steady_state_stats)
from .trellis import ConvCodeSpec, bcjr_decode, cc_encode
from .turbo import (RepetitionSpec, SCTCCode, gscpcc_build, gscpcc_encode, hscbcc_build, hscbcc_encode,
                    scscc_build, scscc_encode, sctc_window_decode)
from .zipper import (StaircaseSpec, ZipperSpec, ihdd_window_decode, staircase_as_zipper, staircase_encode,
                     zipper_encode, zipper_validate)

__version__ = "0.1.0"
