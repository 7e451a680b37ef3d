"""Spectrum monitoring over the monitor device's stream.

Welch-averaged PSD frames scaled so that sum(psd) * bin_spacing equals the
mean signal power. Frames stream at a bounded rate with drop-under-
backpressure semantics; the wire carries linear power (dB conversion is a
display concern).
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

import numpy as np
from scipy.signal import welch

from .core import IqBuffer
from .errors import IllegalState, InsufficientData
from .orchestrator import SessionEngine, StreamTap

WINDOW_KINDS = ("hann", "hamming", "blackman", "boxcar")


@dataclass(frozen=True)
class SpectrumFrame:
    """One PSD estimate: power/Hz per bin over [-fs/2, fs/2)."""

    psd_bins: np.ndarray
    bin_spacing: float
    center_offset: float
    timestamp: int  # stream sample index of the analyzed block's start
    window_id: int

    def __post_init__(self) -> None:
        arr = np.asarray(self.psd_bins, dtype=np.float64)
        arr.setflags(write=False)
        object.__setattr__(self, "psd_bins", arr)

    @property
    def freqs(self) -> np.ndarray:
        n = len(self.psd_bins)
        return (np.arange(n) - n // 2) * self.bin_spacing + self.center_offset

    def total_power(self) -> float:
        return float(np.sum(self.psd_bins) * self.bin_spacing)

    def occupied_bandwidth(self, fraction: float = 0.99) -> float:
        """Width of the band holding ``fraction`` of power, tails trimmed equally."""
        total = np.sum(self.psd_bins)
        if total <= 0:
            return 0.0
        csum = np.cumsum(self.psd_bins) / total
        tail = (1.0 - fraction) / 2.0
        lo = int(np.searchsorted(csum, tail))
        hi = int(np.searchsorted(csum, 1.0 - tail))
        return (hi - lo) * self.bin_spacing

    def to_dict(self) -> dict:
        return {
            "bin_spacing": self.bin_spacing,
            "center_offset": self.center_offset,
            "timestamp": self.timestamp,
            "window_id": self.window_id,
            "psd_bins": self.psd_bins.tolist(),
        }


def compute_psd(
    buffer: IqBuffer,
    fft_size: int = 1024,
    overlap_fraction: float = 0.5,
    window_kind: str = "hann",
    *,
    timestamp: int | None = None,
    window_id: int = 0,
) -> SpectrumFrame:
    """Welch-averaged periodogram of one buffer.

    Scaled so sum(psd)*bin_spacing = mean power (window-corrected); bins are
    fft-shifted to ascending frequency.
    """
    if len(buffer) < fft_size:
        raise InsufficientData(f"need >= {fft_size} samples, got {len(buffer)}")
    if not 0.0 <= overlap_fraction <= 0.9:
        raise InsufficientData("overlap_fraction must be within [0, 0.9]")
    if window_kind not in WINDOW_KINDS:
        raise InsufficientData(f"window_kind must be one of {WINDOW_KINDS}")
    fs = buffer.sample_rate
    _, pxx = welch(
        buffer.samples,
        fs=fs,
        window=window_kind,
        nperseg=fft_size,
        noverlap=int(fft_size * overlap_fraction),
        detrend=False,
        return_onesided=False,
        scaling="density",
    )
    psd = np.fft.fftshift(pxx).real
    psd = np.maximum(psd, 0.0)
    return SpectrumFrame(
        psd_bins=psd,
        bin_spacing=fs / fft_size,
        center_offset=0.0,
        timestamp=buffer.start_timestamp if timestamp is None else timestamp,
        window_id=window_id,
    )


class SpectrumSubscription:
    """Per-subscriber bounded frame queue; lossy, never reordered."""

    def __init__(self, maxlen: int):
        self._q: deque[SpectrumFrame] = deque(maxlen=maxlen)
        self.dropped = 0

    def _push(self, frame: SpectrumFrame) -> None:
        if len(self._q) == self._q.maxlen:
            self.dropped += 1
        self._q.append(frame)

    def poll(self) -> list[SpectrumFrame]:
        out = list(self._q)
        self._q.clear()
        return out


class SpectrumMonitor:
    """Streams SpectrumFrames from the engine's monitor tap.

    The monitor sees the transmitted stream plus a simulated front-end noise
    floor, so silent windows render as noise rather than exact zeros. Frames
    are produced at most ``rate`` per second of stream time; all subscribers
    see the same frame ids.
    """

    def __init__(
        self,
        engine: SessionEngine,
        rate: float = 10.0,
        *,
        fft_size: int = 1024,
        overlap_fraction: float = 0.5,
        window_kind: str = "hann",
        noise_floor_psd: float = 1e-10,
        tap_maxlen: int = 256,
    ):
        if engine.monitor_device is None:
            raise IllegalState("no monitor role assigned")
        if rate < 0:
            raise IllegalState("rate must be >= 0")
        self.engine = engine
        self.rate = rate
        self.fft_size = fft_size
        self.overlap_fraction = overlap_fraction
        self.window_kind = window_kind
        self.noise_floor_psd = noise_floor_psd
        self._tap: StreamTap = engine.subscribe(maxlen=tap_maxlen)
        self._acc: list[np.ndarray] = []
        self._acc_len = 0
        self._acc_start = 0
        self._next_frame_ts = 0
        self._window_id = 0
        self._subs: list[SpectrumSubscription] = []

    def subscribe(self, maxlen: int = 32) -> SpectrumSubscription:
        sub = SpectrumSubscription(maxlen)
        self._subs.append(sub)
        return sub

    @property
    def frame_stride(self) -> int | None:
        if self.rate == 0:
            return None
        return max(self.fft_size, int(round(self.engine.sample_rate / self.rate)))

    def pump(self) -> list[SpectrumFrame]:
        """Drain the tap and emit any due frames (also fans out to subscribers)."""
        frames: list[SpectrumFrame] = []
        for buf in self._tap.poll():
            if self._acc_len == 0:
                self._acc_start = buf.start_timestamp
            self._acc.append(buf.samples)
            self._acc_len += len(buf.samples)
            stride = self.frame_stride
            if stride is None:
                # rate 0: no frames, subscription stays open; cap memory
                if self._acc_len > self.fft_size:
                    self._acc = []
                    self._acc_len = 0
                continue
            if self._acc_len >= stride and buf.start_timestamp + len(buf) >= self._next_frame_ts:
                samples = np.concatenate(self._acc)[-stride:]
                start_ts = self._acc_start + (self._acc_len - stride)
                frame = self._make_frame(samples, start_ts)
                frames.append(frame)
                for sub in self._subs:
                    sub._push(frame)
                self._acc = []
                self._acc_len = 0
                self._next_frame_ts = start_ts + stride
        return frames

    def _make_frame(self, samples: np.ndarray, start_ts: int) -> SpectrumFrame:
        if self.noise_floor_psd > 0:
            rng = np.random.default_rng(self._window_id)
            sigma = math.sqrt(self.noise_floor_psd * self.engine.sample_rate / 2.0)
            samples = samples + sigma * (
                rng.standard_normal(len(samples)) + 1j * rng.standard_normal(len(samples))
            )
        frame = compute_psd(
            IqBuffer(samples, self.engine.sample_rate, start_ts),
            self.fft_size,
            self.overlap_fraction,
            self.window_kind,
            window_id=self._window_id,
        )
        self._window_id += 1
        return frame
