"""Audio ingestion and time-frequency primitives.

WAV decoding, linear resampling, Hann framing, power spectrograms, mel
filter banks and MFCCs.  Everything here is a pure function of its inputs;
defaults (25 ms frames, 10 ms hop, n_fft=1024 at 22,050 Hz) are package
conventions, declared once in :data:`DEFAULTS`.
"""

import struct
import wave
from dataclasses import dataclass

import numpy as np
from scipy.fft import dct

from .errors import ConfigError, FormatError, ShapeError, TooShortError, UnsupportedError

CANONICAL_RATE_HZ = 22050

DEFAULTS = {
    "frame_ms": 25.0,
    "hop_ms": 10.0,
    "n_fft": 1024,
    "n_mel": 26,
    "n_coeff": 13,
}

LOG_FLOOR = 1e-10  # avoids -inf on silent mel bands


@dataclass(frozen=True)
class AudioClip:
    """Mono waveform with its sample rate; samples are float64 in [-1, 1]."""

    samples: np.ndarray
    sample_rate_hz: int

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1 or samples.size == 0:
            raise ShapeError("AudioClip requires a non-empty 1-d sample array")
        if not np.all(np.isfinite(samples)):
            raise ValueError("AudioClip samples must be finite")
        if self.sample_rate_hz <= 0:
            raise ConfigError("sample_rate_hz must be positive")
        object.__setattr__(self, "samples", samples)

    @property
    def duration_s(self):
        return len(self.samples) / self.sample_rate_hz


@dataclass(frozen=True)
class Frames:
    """Windowed analysis frames plus the geometry needed downstream."""

    data: np.ndarray  # (T, frame_len), Hann-windowed unless built raw
    frame_len_samples: int
    hop_samples: int
    sample_rate_hz: int

    @property
    def n_frames(self):
        return self.data.shape[0]


@dataclass(frozen=True)
class Spectrogram:
    """Power spectrogram, shape (T, d_freq) with d_freq = n_fft // 2 + 1."""

    frames: np.ndarray
    frame_len_samples: int
    hop_samples: int
    sample_rate_hz: int

    def __post_init__(self):
        frames = np.asarray(self.frames, dtype=np.float64)
        if frames.ndim != 2 or frames.shape[0] < 1:
            raise ShapeError("Spectrogram requires a (T, d_freq) matrix with T >= 1")
        if not np.all(np.isfinite(frames)) or np.any(frames < 0):
            raise ValueError("Spectrogram entries must be finite and non-negative")
        object.__setattr__(self, "frames", frames)

    @property
    def d_freq(self):
        return self.frames.shape[1]

    @property
    def n_fft(self):
        return 2 * (self.d_freq - 1)

    def bin_frequencies_hz(self):
        return np.arange(self.d_freq) * self.sample_rate_hz / self.n_fft


@dataclass(frozen=True)
class MelFilterBank:
    """Triangular mel filters as columns of a (d_freq, n_mel) weight matrix.

    Each column is peak-normalized to a maximum weight of 1 so that a
    projection initialized from the bank starts with a uniform attention
    ceiling.
    """

    weights: np.ndarray
    mel_low_hz: float
    mel_high_hz: float

    @property
    def d_freq(self):
        return self.weights.shape[0]

    @property
    def n_mel(self):
        return self.weights.shape[1]


def hz_to_mel(f_hz):
    """HTK mel scale: 2595 * log10(1 + f / 700)."""
    return 2595.0 * np.log10(1.0 + np.asarray(f_hz, dtype=np.float64) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


# ---------------------------------------------------------------------------
# WAV I/O
# ---------------------------------------------------------------------------
#
# Reading walks the RIFF chunks by hand instead of going through the stdlib
# wave module: we must distinguish "malformed container" (FormatError) from
# "valid container, unsupported encoding" (UnsupportedError), and wave.Error
# conflates the two.


def load_wav(path):
    """Decode a RIFF/WAVE PCM-16 file into a mono AudioClip.

    Samples are scaled to [-1, 1] by dividing by 32768; stereo channels are
    averaged.  Raises FormatError for malformed containers and
    UnsupportedError for non-PCM16 encodings or channel counts > 2.
    """
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < 12 or blob[0:4] != b"RIFF" or blob[8:12] != b"WAVE":
        raise FormatError(f"{path}: not a RIFF/WAVE file")

    fmt = None
    data = None
    offset = 12
    while offset + 8 <= len(blob):
        chunk_id = blob[offset : offset + 4]
        (chunk_size,) = struct.unpack_from("<I", blob, offset + 4)
        body_start = offset + 8
        if body_start + chunk_size > len(blob):
            raise FormatError(f"{path}: truncated '{chunk_id!r}' chunk")
        body = blob[body_start : body_start + chunk_size]
        if chunk_id == b"fmt ":
            if chunk_size < 16:
                raise FormatError(f"{path}: fmt chunk too small")
            fmt = struct.unpack_from("<HHIIHH", body, 0)
        elif chunk_id == b"data":
            data = body
        offset = body_start + chunk_size + (chunk_size & 1)  # chunks are word-aligned

    if fmt is None or data is None:
        raise FormatError(f"{path}: missing fmt or data chunk")

    audio_format, n_channels, sample_rate, _byte_rate, _block_align, bits = fmt
    if audio_format != 1 or bits != 16:
        raise UnsupportedError(
            f"{path}: only PCM 16-bit supported (format={audio_format}, bits={bits})"
        )
    if n_channels not in (1, 2):
        raise UnsupportedError(f"{path}: {n_channels} channels not supported")
    if sample_rate <= 0:
        raise FormatError(f"{path}: invalid sample rate {sample_rate}")

    usable = len(data) - len(data) % (2 * n_channels)
    if usable == 0:
        raise FormatError(f"{path}: empty data chunk")
    pcm = np.frombuffer(data[:usable], dtype="<i2").astype(np.float64)
    if n_channels == 2:
        pcm = pcm.reshape(-1, 2).mean(axis=1)
    return AudioClip(samples=pcm / 32768.0, sample_rate_hz=sample_rate)


def write_wav(path, clip):
    """Write an AudioClip as mono PCM-16; inverse of the load_wav scaling."""
    pcm = np.clip(np.round(clip.samples * 32768.0), -32768, 32767).astype("<i2")
    with wave.open(str(path), "wb") as wav:
        wav.setnchannels(1)
        wav.setsampwidth(2)
        wav.setframerate(clip.sample_rate_hz)
        wav.writeframes(pcm.tobytes())


# ---------------------------------------------------------------------------
# Resampling and framing
# ---------------------------------------------------------------------------


def resample_linear(clip, target_hz):
    """Linear-interpolation resample; output length = round(N * target/source)."""
    if target_hz <= 0:
        raise ConfigError("target_hz must be positive")
    if target_hz == clip.sample_rate_hz:
        return clip
    n_out = int(round(len(clip.samples) * target_hz / clip.sample_rate_hz))
    n_out = max(n_out, 1)
    positions = np.arange(n_out) * (clip.sample_rate_hz / target_hz)
    resampled = np.interp(positions, np.arange(len(clip.samples)), clip.samples)
    return AudioClip(samples=resampled, sample_rate_hz=int(target_hz))


def _frame_geometry(n_samples, sample_rate_hz, frame_ms, hop_ms):
    if not (frame_ms >= hop_ms > 0):
        raise ConfigError("need frame_ms >= hop_ms > 0")
    frame_len = int(frame_ms * sample_rate_hz / 1000.0)
    hop = int(hop_ms * sample_rate_hz / 1000.0)
    if frame_len < 1 or hop < 1:
        raise ConfigError("frame/hop shorter than one sample")
    if n_samples < frame_len:
        raise TooShortError(
            f"clip of {n_samples} samples shorter than one {frame_len}-sample frame"
        )
    n_frames = (n_samples - frame_len) // hop + 1
    return frame_len, hop, n_frames


def _slice_frames(samples, frame_len, hop, n_frames):
    idx = np.arange(frame_len)[None, :] + hop * np.arange(n_frames)[:, None]
    return samples[idx]


def frame_signal(clip, frame_ms=DEFAULTS["frame_ms"], hop_ms=DEFAULTS["hop_ms"]):
    """Split a clip into Hann-windowed frames.

    Frame count is T = floor((N - L) / H) + 1 with L = floor(frame_ms*sr/1000)
    and H = floor(hop_ms*sr/1000); trailing samples that do not fill a frame
    are dropped.
    """
    frame_len, hop, n_frames = _frame_geometry(
        len(clip.samples), clip.sample_rate_hz, frame_ms, hop_ms
    )
    frames = _slice_frames(clip.samples, frame_len, hop, n_frames) * np.hanning(frame_len)
    return Frames(
        data=frames,
        frame_len_samples=frame_len,
        hop_samples=hop,
        sample_rate_hz=clip.sample_rate_hz,
    )


def frame_signal_raw(clip, frame_ms=DEFAULTS["frame_ms"], hop_ms=DEFAULTS["hop_ms"]):
    """Same framing as frame_signal but without a window (for pitch analysis)."""
    frame_len, hop, n_frames = _frame_geometry(
        len(clip.samples), clip.sample_rate_hz, frame_ms, hop_ms
    )
    return Frames(
        data=_slice_frames(clip.samples, frame_len, hop, n_frames),
        frame_len_samples=frame_len,
        hop_samples=hop,
        sample_rate_hz=clip.sample_rate_hz,
    )


# ---------------------------------------------------------------------------
# Spectrogram / mel / MFCC
# ---------------------------------------------------------------------------


def stft_power(frames, n_fft=DEFAULTS["n_fft"]):
    """Power spectrogram: |rFFT|^2 of each zero-padded frame, bins 0..n_fft/2."""
    if n_fft < frames.frame_len_samples:
        raise ConfigError(
            f"n_fft={n_fft} smaller than frame length {frames.frame_len_samples}"
        )
    spectrum = np.fft.rfft(frames.data, n=n_fft, axis=1)
    return Spectrogram(
        frames=np.abs(spectrum) ** 2,
        frame_len_samples=frames.frame_len_samples,
        hop_samples=frames.hop_samples,
        sample_rate_hz=frames.sample_rate_hz,
    )


def mel_filterbank(
    d_freq,
    n_mel=DEFAULTS["n_mel"],
    sample_rate_hz=CANONICAL_RATE_HZ,
    f_low_hz=0.0,
    f_high_hz=None,
):
    """Triangular mel filter bank with peaks equally spaced on the mel scale.

    Returns a (d_freq, n_mel) matrix whose columns are peak-normalized
    triangles (max weight exactly 1).
    """
    if f_high_hz is None:
        f_high_hz = sample_rate_hz / 2.0
    if not (0 <= f_low_hz < f_high_hz <= sample_rate_hz / 2.0):
        raise ConfigError(
            f"invalid mel range [{f_low_hz}, {f_high_hz}] at sr={sample_rate_hz}"
        )
    if n_mel < 2:
        raise ConfigError("need n_mel >= 2")
    n_fft = 2 * (d_freq - 1)
    bin_hz = np.arange(d_freq) * sample_rate_hz / n_fft
    edges_hz = mel_to_hz(np.linspace(hz_to_mel(f_low_hz), hz_to_mel(f_high_hz), n_mel + 2))

    weights = np.zeros((d_freq, n_mel))
    for j in range(n_mel):
        left, center, right = edges_hz[j], edges_hz[j + 1], edges_hz[j + 2]
        rising = (bin_hz - left) / (center - left)
        falling = (right - bin_hz) / (right - center)
        tri = np.maximum(0.0, np.minimum(rising, falling))
        peak = tri.max()
        if peak <= 0:
            # filter narrower than one bin: put unit weight on the nearest bin
            tri[int(np.argmin(np.abs(bin_hz - center)))] = 1.0
            peak = 1.0
        weights[:, j] = tri / peak
    return MelFilterBank(weights=weights, mel_low_hz=f_low_hz, mel_high_hz=f_high_hz)


def mfcc(spec, bank, n_coeff=DEFAULTS["n_coeff"]):
    """Mel-frequency cepstral coefficients 1..n_coeff (coefficient 0 dropped).

    log(mel energy, floored at 1e-10) followed by an orthonormal DCT-II.
    Dropping coefficient 0 makes the output invariant to constant log-energy
    offsets (i.e. to global power scaling).
    """
    if spec.d_freq != bank.d_freq:
        raise ShapeError(f"spectrogram d_freq {spec.d_freq} != bank d_freq {bank.d_freq}")
    if not (1 <= n_coeff < bank.n_mel):
        raise ConfigError("need 1 <= n_coeff < n_mel")
    mel_energy = spec.frames @ bank.weights
    log_mel = np.log(np.maximum(mel_energy, LOG_FLOOR))
    coeffs = dct(log_mel, type=2, norm="ortho", axis=1)
    return coeffs[:, 1 : n_coeff + 1]
