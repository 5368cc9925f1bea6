"""Reproducible composite-system experiments with ledger-audited runs."""

from .apr_box import APRBoxSpec, SuperoscillationDesign, run_apr_box, synthesize_superoscillation
from .free_packet import GaussianPacketSpec, run_free_packet
from .mach_zehnder import MachZehnderSpec, run_mach_zehnder
from .stern_gerlach import SternGerlachSpec, run_stern_gerlach

__all__ = [
    "APRBoxSpec",
    "GaussianPacketSpec",
    "MachZehnderSpec",
    "SternGerlachSpec",
    "SuperoscillationDesign",
    "run_apr_box",
    "run_free_packet",
    "run_mach_zehnder",
    "run_stern_gerlach",
    "synthesize_superoscillation",
]
