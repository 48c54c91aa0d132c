"""Cognitive cellular M2M sensing toolkit.

Desk-scale simulation of spectrum sensing for machine-type traffic on
unlicensed carriers: narrowband detectors with empirical threshold
calibration, hard-decision cooperative fusion, compressive sub-Nyquist
wideband scanning, the Smart-eNodeB handshake protocol, and the DRX
duty-cycle battery model.
"""

from . import config, detectors, fusion, harness, protosim, sigmodel, widecs

__version__ = "0.1.0"

__all__ = [
    "config",
    "detectors",
    "fusion",
    "harness",
    "protosim",
    "sigmodel",
    "widecs",
    "__version__",
]
