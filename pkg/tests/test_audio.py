import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import noise_clip, sine_clip
from voicepair import audio
from voicepair.errors import ConfigError, FormatError, ShapeError, TooShortError


class TestWavIO:
    def test_roundtrip_within_quantization(self, tmp_path):
        clip = sine_clip(440.0, duration_s=0.1)
        path = tmp_path / "a.wav"
        audio.write_wav(path, clip)
        back = audio.load_wav(path)
        assert back.sample_rate_hz == clip.sample_rate_hz
        assert len(back.samples) == len(clip.samples)
        # PCM16 quantizes to steps of 1/32768
        assert np.max(np.abs(back.samples - clip.samples)) <= 1.0 / 32768

    def test_rejects_non_riff(self, tmp_path):
        path = tmp_path / "junk.wav"
        path.write_bytes(b"not a wave file at all, just bytes")
        with pytest.raises(FormatError):
            audio.load_wav(path)

    def test_rejects_truncated(self, tmp_path):
        clip = sine_clip(440.0, duration_s=0.05)
        path = tmp_path / "a.wav"
        audio.write_wav(path, clip)
        data = path.read_bytes()
        (tmp_path / "cut.wav").write_bytes(data[:20])
        with pytest.raises(FormatError):
            audio.load_wav(tmp_path / "cut.wav")


class TestResample:
    def test_same_rate_is_identity(self):
        clip = sine_clip(100.0, duration_s=0.05)
        out = audio.resample_linear(clip, clip.sample_rate_hz)
        assert np.array_equal(out.samples, clip.samples)

    def test_linear_ramp_exact(self):
        # a linear ramp is reproduced exactly by linear interpolation:
        # downsampling x[n] = n by 2 must give y[k] = 2k
        clip = audio.AudioClip(samples=np.arange(100, dtype=float),
                               sample_rate_hz=1000)
        out = audio.resample_linear(clip, 500)
        assert out.sample_rate_hz == 500
        assert np.allclose(out.samples, 2.0 * np.arange(len(out.samples)),
                           atol=1e-12)

    def test_output_length(self):
        clip = audio.AudioClip(samples=np.zeros(44100), sample_rate_hz=44100)
        out = audio.resample_linear(clip, 22050)
        assert len(out.samples) == 22050

    def test_rejects_bad_rate(self):
        clip = sine_clip(100.0, duration_s=0.01)
        with pytest.raises(ConfigError):
            audio.resample_linear(clip, 0)


class TestFraming:
    def test_frame_count_closed_form(self):
        # 1 s at 22050 Hz, 25 ms / 10 ms: L = 551, H = 220,
        # T = (22050 - 551) // 220 + 1 = 98
        clip = noise_clip(duration_s=1.0)
        frames = audio.frame_signal(clip)
        assert frames.frame_len_samples == 551
        assert frames.hop_samples == 220
        assert frames.n_frames == 98

    def test_too_short_raises(self):
        clip = audio.AudioClip(samples=np.zeros(100), sample_rate_hz=22050)
        with pytest.raises(TooShortError):
            audio.frame_signal(clip)

    def test_hann_window_applied(self):
        clip = audio.AudioClip(samples=np.ones(22050), sample_rate_hz=22050)
        frames = audio.frame_signal(clip)
        assert np.allclose(frames.data[0], np.hanning(551), atol=0)

    def test_raw_frames_slice_samples(self):
        clip = noise_clip(duration_s=0.2)
        frames = audio.frame_signal_raw(clip)
        hop = frames.hop_samples
        L = frames.frame_len_samples
        for t in (0, frames.n_frames - 1):
            assert np.array_equal(frames.data[t],
                                  clip.samples[t * hop:t * hop + L])

    def test_rejects_hop_longer_than_frame(self):
        clip = noise_clip(duration_s=0.2)
        with pytest.raises(ConfigError):
            audio.frame_signal(clip, frame_ms=10.0, hop_ms=25.0)

    @given(n_extra=st.integers(min_value=0, max_value=3000))
    @settings(max_examples=25, deadline=None)
    def test_frame_count_formula_property(self, n_extra):
        n = 551 + n_extra
        clip = audio.AudioClip(samples=np.zeros(n), sample_rate_hz=22050)
        frames = audio.frame_signal_raw(clip)
        assert frames.n_frames == (n - 551) // 220 + 1
        # last frame stays inside the clip
        assert (frames.n_frames - 1) * 220 + 551 <= n


class TestSpectrogram:
    def test_parseval_identity(self):
        # for a real frame zero-padded to n_fft, the unnormalized DFT obeys
        # sum_k |X_k|^2 = n_fft * sum_n x_n^2; folding the one-sided bins:
        # 2 * rowsum - row[0] - row[n_fft/2] = n_fft * sum(x^2)
        clip = noise_clip(duration_s=0.3, seed=3)
        frames = audio.frame_signal(clip)
        spec = audio.stft_power(frames, n_fft=1024)
        lhs = 2.0 * spec.frames.sum(axis=1) - spec.frames[:, 0] - spec.frames[:, -1]
        rhs = 1024.0 * (frames.data ** 2).sum(axis=1)
        assert np.allclose(lhs, rhs, rtol=1e-9)

    def test_bin_frequencies(self):
        clip = noise_clip(duration_s=0.1)
        spec = audio.stft_power(audio.frame_signal(clip), n_fft=1024)
        hz = spec.bin_frequencies_hz()
        assert hz[0] == 0.0
        assert hz[-1] == pytest.approx(22050 / 2)
        assert hz[1] == pytest.approx(22050 / 1024)

    def test_rejects_nfft_below_frame(self):
        clip = noise_clip(duration_s=0.1)
        frames = audio.frame_signal(clip)
        with pytest.raises(ConfigError):
            audio.stft_power(frames, n_fft=512)

    def test_pure_tone_peak_bin(self):
        f = 2153.3203125  # exactly bin 100 at sr 22050, n_fft 1024
        clip = sine_clip(f, duration_s=0.2)
        spec = audio.stft_power(audio.frame_signal(clip), n_fft=1024)
        assert np.argmax(spec.frames.mean(axis=0)) == 100


class TestMel:
    def test_mel_of_700hz(self):
        # the HTK mel break point: mel(700) = 2595 * log10(2)
        assert audio.hz_to_mel(700.0) == pytest.approx(2595.0 * np.log10(2.0),
                                                       abs=1e-9)

    @given(f=st.floats(min_value=0.0, max_value=11025.0))
    @settings(max_examples=50, deadline=None)
    def test_mel_inverse_property(self, f):
        assert audio.mel_to_hz(audio.hz_to_mel(f)) == pytest.approx(f, abs=1e-6)

    def test_mel_monotone(self):
        f = np.linspace(0, 11025, 500)
        assert np.all(np.diff(audio.hz_to_mel(f)) > 0)

    def test_filterbank_shape_and_peaks(self):
        bank = audio.mel_filterbank(513, n_mel=26)
        assert bank.weights.shape == (513, 26)
        assert np.all(bank.weights >= 0)
        # peak normalization: every triangle tops out at exactly 1
        assert np.array_equal(bank.weights.max(axis=0), np.ones(26))

    def test_filterbank_support_contiguous(self):
        bank = audio.mel_filterbank(513, n_mel=26)
        for j in range(26):
            nz = np.flatnonzero(bank.weights[:, j])
            assert np.array_equal(nz, np.arange(nz[0], nz[-1] + 1))

    def test_filterbank_rejects_bad_range(self):
        with pytest.raises(ConfigError):
            audio.mel_filterbank(513, f_low_hz=500.0, f_high_hz=100.0)
        with pytest.raises(ConfigError):
            audio.mel_filterbank(513, n_mel=1)


class TestMfcc:
    def test_shape(self):
        clip = noise_clip(duration_s=0.2)
        spec = audio.stft_power(audio.frame_signal(clip), n_fft=1024)
        bank = audio.mel_filterbank(spec.d_freq)
        out = audio.mfcc(spec, bank)
        assert out.shape == (spec.frames.shape[0], 13)

    def test_power_scaling_invariance(self):
        # coefficient 0 is dropped, so a global power scale (a constant
        # log-mel offset) must not move the kept coefficients
        clip = noise_clip(duration_s=0.2, amp=0.3, seed=5)
        spec = audio.stft_power(audio.frame_signal(clip), n_fft=1024)
        bank = audio.mel_filterbank(spec.d_freq)
        scaled = audio.Spectrogram(frames=spec.frames * 7.5,
                                   frame_len_samples=spec.frame_len_samples,
                                   hop_samples=spec.hop_samples,
                                   sample_rate_hz=spec.sample_rate_hz)
        assert np.allclose(audio.mfcc(spec, bank), audio.mfcc(scaled, bank),
                           atol=1e-8)

    def test_rejects_bad_ncoeff(self):
        clip = noise_clip(duration_s=0.1)
        spec = audio.stft_power(audio.frame_signal(clip), n_fft=1024)
        bank = audio.mel_filterbank(spec.d_freq, n_mel=26)
        with pytest.raises(ConfigError):
            audio.mfcc(spec, bank, n_coeff=26)

    def test_rejects_mismatched_bank(self):
        clip = noise_clip(duration_s=0.1)
        spec = audio.stft_power(audio.frame_signal(clip), n_fft=1024)
        bank = audio.mel_filterbank(257)
        with pytest.raises(ShapeError):
            audio.mfcc(spec, bank)
