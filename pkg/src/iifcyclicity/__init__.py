"""Inverse integrating factors, return maps and cyclicity of limit cycles and homoclinic loops."""
from .algebra import BiPoly
from .curvilinear import CurvilinearFrame, numeric_multiplicity, verify_transition_identity
from .errors import IIFError
from .flow import return_map, trace_homoclinic, transition_map
from .iif import InverseIntegratingFactor, symbolic_multiplicity, verify_iif
from .jobs import load_job, run_job
from .saddle import classify_saddle, local_iif_factorization, resonant_normal_form, saddle_quantities
from .system import PlanarSystem
from .verdict import (
    homoclinic_cyclicity,
    limit_cycle_verdict,
    perturbation_witness,
    roussarie_asymptotics,
)

__version__ = "0.1.0"
