"""Feature frontend: framing arithmetic, MFCC pipeline, embedding files."""

import wave

import numpy as np
import pytest

from minivox.errors import (
    ConfigError,
    DimensionError,
    EmbeddingDimensionError,
    EmbeddingHeaderError,
    EmbeddingRowError,
)
from minivox.features import (
    AudioBuffer,
    MfccConfig,
    frame_signal,
    load_embedding_stream,
    mel_filterbank,
    mel_from_hz,
    mfcc,
    mfcc_sequence,
    read_wav,
    write_embedding_stream,
    write_wav,
)

from conftest import reference_mfcc

CFG = MfccConfig()


def buf(samples):
    return AudioBuffer(samples=np.asarray(samples, dtype=np.float64))


class TestFraming:
    def test_exactly_one_window(self):
        frames = frame_signal(buf(np.zeros(400)), CFG)
        assert frames.shape == (1, 400)

    def test_three_windows_at_hop_160(self):
        x = np.arange(720) / 720.0
        frames = frame_signal(buf(x), CFG)
        assert frames.shape == (3, 400)
        for k, start in enumerate([0, 160, 320]):
            assert np.array_equal(frames[k], x[start:start + 400])

    def test_window_does_not_fit(self):
        assert frame_signal(buf(np.zeros(399)), CFG).shape == (0, 400)

    def test_empty_audio_is_empty_not_error(self):
        assert frame_signal(buf(np.zeros(0)), CFG).shape == (0, 400)

    def test_frame_count_formula(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            n = int(rng.integers(0, 5000))
            frames = frame_signal(buf(np.zeros(n)), CFG)
            expected = (n - 400) // 160 + 1 if n >= 400 else 0
            assert len(frames) == expected

    def test_shift_covariance(self):
        rng = np.random.default_rng(1)
        x = rng.uniform(-1, 1, size=2000)
        base = frame_signal(buf(x), CFG)
        shifted = frame_signal(buf(np.concatenate([rng.uniform(-1, 1, size=160), x])), CFG)
        assert len(shifted) == len(base) + 1
        assert np.array_equal(shifted[1:], base)

    def test_invalid_config_rejected(self):
        with pytest.raises(ConfigError):
            MfccConfig(hop_ms=30, frame_len_ms=25)
        with pytest.raises(ConfigError):
            MfccConfig(n_coeffs=30, n_mels=26)
        with pytest.raises(ConfigError):
            MfccConfig(sample_rate=8000)


class TestMfcc:
    def test_zero_frame_has_zero_ac_terms(self):
        cfg = MfccConfig(include_log_energy=False)
        coeffs = mfcc(np.zeros(400), cfg)
        # constant log-floor vector: DC term is sqrt(n_mels)*log(1e-10), AC terms vanish
        assert coeffs[0] == pytest.approx(np.sqrt(cfg.n_mels) * np.log(1e-10))
        assert np.allclose(coeffs[1:], 0.0, atol=1e-9)

    def test_zero_frame_log_energy_floor(self):
        coeffs = mfcc(np.zeros(400), CFG)
        assert coeffs[0] == pytest.approx(np.log(1e-10))
        assert np.allclose(coeffs[1:], 0.0, atol=1e-9)

    def test_sine_matches_reference(self):
        t = np.arange(400) / 16000.0
        frame = 0.7 * np.sin(2 * np.pi * 1000.0 * t)
        got = mfcc(frame, CFG)
        want = reference_mfcc(frame, CFG)
        assert np.max(np.abs(got - want)) < 1e-6

    def test_random_frames_match_reference(self):
        rng = np.random.default_rng(42)
        for _ in range(20):
            frame = rng.uniform(-1, 1, size=400)
            assert np.max(np.abs(mfcc(frame, CFG) - reference_mfcc(frame, CFG))) < 1e-6

    def test_mel_of_1khz(self):
        assert mel_from_hz(1000.0) == pytest.approx(999.99, abs=0.02)

    def test_wrong_frame_length_rejected(self):
        with pytest.raises(DimensionError):
            mfcc(np.zeros(399), CFG)

    def test_deterministic(self):
        rng = np.random.default_rng(3)
        frame = rng.uniform(-1, 1, size=400)
        a = mfcc(frame, CFG)
        b = mfcc(frame.copy(), MfccConfig())
        assert np.array_equal(a, b)

    def test_filterbank_partition(self):
        bank = mel_filterbank(CFG)
        freqs = np.arange(201) * 16000 / 400
        interior = (freqs > 0.0) & (freqs < 8000.0)
        totals = bank.sum(axis=0)[interior]
        assert np.all(totals > 0.0)
        assert np.all(totals <= 1.0 + 1e-9)

    def test_sequence_with_deltas_triples_dim(self):
        cfg = MfccConfig(add_deltas=True)
        rng = np.random.default_rng(4)
        feats = mfcc_sequence(buf(rng.uniform(-1, 1, size=2000)), cfg)
        assert feats.shape == (11, 60)
        assert np.all(np.isfinite(feats))

    def test_sequence_matches_per_frame(self):
        rng = np.random.default_rng(5)
        audio = buf(rng.uniform(-1, 1, size=1200))
        feats = mfcc_sequence(audio, CFG)
        frames = frame_signal(audio, CFG)
        for k in range(len(frames)):
            assert np.array_equal(feats[k], mfcc(frames[k], CFG))


class TestWavIo:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(6)
        samples = rng.uniform(-0.9, 0.9, size=1600)
        path = tmp_path / "x.wav"
        write_wav(path, samples)
        audio = read_wav(path)
        assert audio.sample_rate == 16000
        assert np.max(np.abs(audio.samples - samples)) < 1.0 / 32768.0

    def test_stereo_rejected(self, tmp_path):
        path = tmp_path / "stereo.wav"
        with wave.open(str(path), "wb") as fh:
            fh.setnchannels(2)
            fh.setsampwidth(2)
            fh.setframerate(16000)
            fh.writeframes(b"\x00\x00" * 200)
        with pytest.raises(ConfigError, match="mono"):
            read_wav(path)

    def test_wrong_rate_rejected(self, tmp_path):
        path = tmp_path / "slow.wav"
        with wave.open(str(path), "wb") as fh:
            fh.setnchannels(1)
            fh.setsampwidth(2)
            fh.setframerate(8000)
            fh.writeframes(b"\x00\x00" * 100)
        with pytest.raises(ConfigError, match="8000"):
            read_wav(path)


class TestEmbeddingFiles:
    def test_read_back(self, tmp_path):
        path = tmp_path / "e.txt"
        path.write_text("dim=4\n1 2 3 4\n5 6 7 8\n0.5 -0.25 0 1e-3\n")
        vectors = load_embedding_stream(path)
        assert vectors.shape == (3, 4)
        assert vectors[2][1] == -0.25

    def test_dimension_mismatch_names_row(self, tmp_path):
        path = tmp_path / "e.txt"
        path.write_text("dim=4\n1 2 3 4\n1 2 3 4 5\n")
        with pytest.raises(EmbeddingDimensionError, match=":3"):
            load_embedding_stream(path)

    def test_empty_payload(self, tmp_path):
        path = tmp_path / "e.txt"
        path.write_text("dim=4\n")
        assert load_embedding_stream(path).shape == (0, 4)

    def test_bad_header(self, tmp_path):
        path = tmp_path / "e.txt"
        path.write_text("4\n1 2 3 4\n")
        with pytest.raises(EmbeddingHeaderError):
            load_embedding_stream(path)

    def test_bad_value(self, tmp_path):
        path = tmp_path / "e.txt"
        path.write_text("dim=2\n1 x\n")
        with pytest.raises(EmbeddingRowError):
            load_embedding_stream(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(OSError):
            load_embedding_stream(tmp_path / "absent.txt")

    def test_write_round_trips_exactly(self, tmp_path):
        rng = np.random.default_rng(7)
        vectors = rng.standard_normal((5, 6))
        path = tmp_path / "e.txt"
        write_embedding_stream(path, vectors)
        assert np.array_equal(load_embedding_stream(path), vectors)
