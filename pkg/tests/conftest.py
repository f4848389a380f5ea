"""Shared test fixtures: brute-force reference pipelines and synthetic pools.

The reference MFCC here is intentionally slow and independent of the
production path: direct-summation DFT, loop-built filterbank, dense DCT
matrix. Production output is checked against it, never the other way round.
"""

import csv
import json
from pathlib import Path

import numpy as np
import pytest

from minivox.features import MfccConfig, write_wav, write_embedding_stream


def reference_mfcc(frame: np.ndarray, cfg: MfccConfig) -> np.ndarray:
    """O(N^2) MFCC reference: direct DFT summation and a dense DCT matrix."""
    frame = np.asarray(frame, dtype=np.float64)
    n_samples = len(frame)
    emphasized = np.concatenate(([frame[0]], frame[1:] - cfg.preemphasis * frame[:-1]))
    idx = np.arange(n_samples)
    window = 0.54 - 0.46 * np.cos(2.0 * np.pi * idx / (n_samples - 1))
    y = emphasized * window

    n_bins = n_samples // 2 + 1
    mags = np.zeros(n_bins)
    for k in range(n_bins):
        angle = 2.0 * np.pi * k * idx / n_samples
        re = float(np.sum(y * np.cos(angle)))
        im = float(-np.sum(y * np.sin(angle)))
        mags[k] = np.hypot(re, im)

    def mel(f):
        return 2595.0 * np.log10(1.0 + f / 700.0)

    def inv_mel(m):
        return 700.0 * (10.0 ** (m / 2595.0) - 1.0)

    edges = inv_mel(np.linspace(0.0, mel(cfg.sample_rate / 2.0), cfg.n_mels + 2))
    freqs = idx[:n_bins] * cfg.sample_rate / n_samples
    bank = np.zeros((cfg.n_mels, n_bins))
    for m in range(cfg.n_mels):
        lo, mid, hi = edges[m], edges[m + 1], edges[m + 2]
        for k in range(n_bins):
            f = freqs[k]
            if lo <= f <= mid:
                bank[m, k] = (f - lo) / (mid - lo)
            elif mid < f <= hi:
                bank[m, k] = (hi - f) / (hi - mid)

    log_mel = np.log(np.maximum(bank @ mags, 1e-10))
    m_count = cfg.n_mels
    dct_matrix = np.zeros((m_count, m_count))
    for k in range(m_count):
        for n in range(m_count):
            dct_matrix[k, n] = np.cos(np.pi * k * (2 * n + 1) / (2 * m_count))
    dct_matrix *= np.sqrt(2.0 / m_count)
    dct_matrix[0] *= np.sqrt(0.5)
    coeffs = (dct_matrix @ log_mel)[: cfg.n_coeffs]
    if cfg.include_log_energy:
        coeffs[0] = np.log(max(float(frame @ frame), 1e-10))
    return coeffs


def speaker_tone(speaker_idx: int, n_samples: int, seed: int) -> np.ndarray:
    """Distinct voiced-ish waveform per synthetic speaker."""
    rng = np.random.default_rng(seed)
    t = np.arange(n_samples) / 16000.0
    freq = 220.0 + 90.0 * speaker_idx
    wave = 0.45 * np.sin(2 * np.pi * freq * t) + 0.2 * np.sin(2 * np.pi * 2.1 * freq * t)
    return wave + 0.02 * rng.standard_normal(n_samples)


def build_wav_pool(root: Path, n_speakers: int, utts_per_speaker: int = 2,
                   utt_samples: int = 4000, seed: int = 7) -> Path:
    """Synthetic 16 kHz wav pool; returns the manifest path."""
    root.mkdir(parents=True, exist_ok=True)
    manifest = root / "pool.csv"
    with open(manifest, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["source", "speaker_id"])
        for s in range(n_speakers):
            for u in range(utts_per_speaker):
                name = f"spk{s:02d}_utt{u}.wav"
                write_wav(root / name, speaker_tone(s, utt_samples, seed + 31 * s + u))
                writer.writerow([name, f"spk{s:02d}"])
    return manifest


def build_embedding_pool(root: Path, n_speakers: int, utts_per_speaker: int = 2,
                         rows_per_utt: int = 25, dim: int = 8, seed: int = 11) -> Path:
    """Synthetic embedding pool: one Gaussian cluster per speaker."""
    root.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    centers = rng.normal(0.0, 1.0, size=(n_speakers, dim)) * 6.0
    manifest = root / "pool.csv"
    with open(manifest, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["source", "speaker_id"])
        for s in range(n_speakers):
            for u in range(utts_per_speaker):
                name = f"spk{s:02d}_utt{u}.txt"
                rows = centers[s] + rng.normal(0.0, 0.8, size=(rows_per_utt, dim))
                write_embedding_stream(root / name, rows)
                writer.writerow([name, f"spk{s:02d}"])
    (root / "pool.csv.meta.json").write_text(json.dumps({"feature_kind": "precomputed"}))
    return manifest


@pytest.fixture
def wav_pool_manifest(tmp_path):
    return build_wav_pool(tmp_path / "wavpool", n_speakers=3)


@pytest.fixture
def embedding_pool_manifest(tmp_path):
    return build_embedding_pool(tmp_path / "embpool", n_speakers=3)
