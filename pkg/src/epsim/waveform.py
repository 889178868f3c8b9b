"""Uniformly sampled waveform container and its CSV interchange format."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError


@dataclass
class WaveformBuffer:
    """A uniformly sampled real-valued signal.

    Parameters
    ----------
    samples : array-like
        Sample values.  Must be finite unless ``allow_gaps`` is set, in
        which case NaN marks an explicit missing-sample gap.
    fs : float
        Sample rate in Hz.
    t0 : float
        Time of the first sample in seconds.
    label : str
        Channel tag, e.g. ``"ecg"``.
    """

    samples: np.ndarray
    fs: float
    t0: float = 0.0
    label: str = ""
    allow_gaps: bool = field(default=False, repr=False)

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.samples.ndim != 1 or self.samples.size < 1:
            raise DomainError("samples must be a non-empty 1-D sequence")
        if self.fs <= 0:
            raise DomainError(f"sample rate must be positive, got {self.fs}")
        if self.allow_gaps:
            if np.any(np.isinf(self.samples)):
                raise DomainError("samples must not contain infinities")
        elif not np.all(np.isfinite(self.samples)):
            raise DomainError("samples must all be finite")

    def __len__(self) -> int:
        return self.samples.size

    @property
    def duration(self) -> float:
        return self.samples.size / self.fs

    def times(self) -> np.ndarray:
        return self.t0 + np.arange(self.samples.size) / self.fs

    def with_samples(self, samples, label: str | None = None) -> "WaveformBuffer":
        """Copy of this buffer with new samples on the same time base."""
        return WaveformBuffer(samples, self.fs, self.t0,
                              self.label if label is None else label,
                              allow_gaps=self.allow_gaps)

    def to_csv(self, path) -> None:
        """Write ``time_s,value`` rows preceded by a header carrying fs and label."""
        t = self.times()
        with open(path, "w", newline="") as fh:
            fh.write(f"# fs_hz={self.fs!r} t0_s={self.t0!r} label={self.label}\n")
            fh.write("time_s,value\n")
            for ti, vi in zip(t.tolist(), self.samples.tolist()):
                fh.write(f"{ti!r},{vi!r}\n")

    @classmethod
    def from_csv(cls, path) -> "WaveformBuffer":
        with open(path) as fh:
            header = fh.readline().strip()
            if not header.startswith("# fs_hz="):
                raise DomainError(f"{path}: missing waveform header line")
            body = header[2:]
            fs_part, t0_part, label_part = body.split(" ", 2)
            fs = float(fs_part.split("=", 1)[1])
            t0 = float(t0_part.split("=", 1)[1])
            label = label_part.split("=", 1)[1]
            fh.readline()  # column header
            values = [float(line.split(",", 1)[1]) for line in fh if line.strip()]
        return cls(np.array(values), fs, t0, label, allow_gaps=True)


def require_same_grid(*waves: WaveformBuffer) -> tuple[float, int]:
    """Return (fs, n) shared by all buffers, or raise.

    Raises
    ------
    ContractError
        If sample rates or lengths differ.
    """
    from .errors import ContractError

    present = [w for w in waves if w is not None]
    if not present:
        raise ContractError("at least one waveform is required")
    fs, n = present[0].fs, len(present[0])
    for w in present[1:]:
        if w.fs != fs or len(w) != n:
            raise ContractError(
                f"waveforms disagree on sampling grid: ({w.fs} Hz, {len(w)}) "
                f"vs ({fs} Hz, {n})")
    return fs, n
