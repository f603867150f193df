"""Simulator for distributed interactive proofs of LR-sortings on path-Hamiltonian graphs."""
from .instances import (GroundTruth, InstanceFormatError, InvalidParameter, LrInstance, brute_force_decide,
                        generate_no_instance, generate_yes_instance)
from .runtime import ConfigError, Protocol, ProverStrategy, Transcript, VerdictReport, estimate_acceptance, run

__version__ = "0.1.0"

__all__ = [
    "ConfigError", "GroundTruth", "InstanceFormatError", "InvalidParameter", "LrInstance", "Protocol",
    "ProverStrategy", "Transcript", "VerdictReport", "brute_force_decide", "estimate_acceptance",
    "generate_no_instance", "generate_yes_instance", "run",
]
