"""epsim: deterministic simulator and analysis toolkit for passive
non-contact electric-potential sensing of physiological signals."""

__version__ = "0.1.0"

from .waveform import WaveformBuffer

__all__ = ["WaveformBuffer", "__version__"]
