from .bands import Band, BandReport, bandwidth
from .ntff import (
    FarFieldPattern,
    SurfaceDFT,
    db_to_efficiency,
    efficiency_to_db,
    ntff,
    radiation_efficiency,
)
from .spectra import SParamSpectrum, dft, parseval_check, s11_spectrum

__all__ = [
    "Band",
    "BandReport",
    "FarFieldPattern",
    "SParamSpectrum",
    "SurfaceDFT",
    "bandwidth",
    "db_to_efficiency",
    "dft",
    "efficiency_to_db",
    "ntff",
    "parseval_check",
    "radiation_efficiency",
    "s11_spectrum",
]
