"""Two-photon scattering off a cavity with a moving mirror."""
from .core import (OMEGA_M, ConvergenceError, Fock, InvalidParameterError, MirrorInit,
                   OptoscatterError, PhotonPacket, Pure, SystemParams, Thermal, Truncation,
                   TruncationError, initial_amplitude_c, mirror_from_dict, n_ph_for_tail,
                   packet_norm)
from .franck_condon import fc_overlap, fc_table, overlap_combo, overlap_matrices
from .longtime import AmplitudeContext, assemble_c_inf, build_context, long_time_norm
from .oracle import OracleGrid, build_initial, convergence_sweep, integrate
from .spectrum import GridSpec, joint_spectrum, spectrum_stats
from .transient import g2_of_probs, g2_scan, probabilities, two_photon_probability

__version__ = "0.1.0"
