from ._spectral import BracketingResult
from ._spectral import Convention
from ._spectral import InertiaResult
from ._spectral import Spectral
from ._spectral import SpectralReport

spectral = Spectral()

__all__ = ['spectral', 'BracketingResult', 'Convention', 'InertiaResult', 'Spectral', 'SpectralReport']
