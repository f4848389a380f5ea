"""Audio frontend: framing, MFCC extraction, and embedding-file ingestion.

Every decision step consumes one context vector per 10 ms hop. Context
vectors come either from MFCCs computed here or from precomputed embedding
files (one float row per frame).
"""

import wave
from dataclasses import dataclass, field

import numpy as np
from scipy.fft import dct

from .errors import (
    ConfigError,
    DimensionError,
    EmbeddingDimensionError,
    EmbeddingHeaderError,
    EmbeddingRowError,
)

SAMPLE_RATE = 16000
LOG_FLOOR = 1e-10


@dataclass(frozen=True)
class AudioBuffer:
    """Mono audio held as float64 amplitudes in [-1, 1]."""

    samples: np.ndarray
    sample_rate: int = SAMPLE_RATE

    def __post_init__(self):
        if self.sample_rate <= 0:
            raise ConfigError(f"sample_rate must be positive, got {self.sample_rate}")
        if not np.all(np.isfinite(self.samples)):
            raise ConfigError("audio samples must be finite")


@dataclass(frozen=True)
class MfccConfig:
    """MFCC pipeline parameters. Defaults give 20 coefficients per 10 ms hop."""

    frame_len_ms: int = 25
    hop_ms: int = 10
    n_mels: int = 26
    n_coeffs: int = 20
    preemphasis: float = 0.97
    include_log_energy: bool = True
    add_deltas: bool = False
    sample_rate: int = field(default=SAMPLE_RATE)

    def __post_init__(self):
        if not (0 < self.hop_ms <= self.frame_len_ms):
            raise ConfigError(
                f"need 0 < hop_ms <= frame_len_ms, got hop={self.hop_ms} frame={self.frame_len_ms}"
            )
        if not (1 <= self.n_coeffs <= self.n_mels):
            raise ConfigError(
                f"need 1 <= n_coeffs <= n_mels, got n_coeffs={self.n_coeffs} n_mels={self.n_mels}"
            )
        if self.sample_rate != SAMPLE_RATE:
            raise ConfigError(f"only {SAMPLE_RATE} Hz input is supported, got {self.sample_rate}")

    @property
    def frame_len(self) -> int:
        return self.frame_len_ms * self.sample_rate // 1000

    @property
    def hop(self) -> int:
        return self.hop_ms * self.sample_rate // 1000

    @property
    def dim(self) -> int:
        """Feature dimension produced per frame (3x when deltas are stacked)."""
        return self.n_coeffs * (3 if self.add_deltas else 1)


def frame_signal(audio: AudioBuffer, cfg: MfccConfig) -> np.ndarray:
    """Slice audio into overlapping frames on the hop grid.

    Frame k covers samples [k*hop, k*hop + frame_len). A trailing window
    that does not fit completely is dropped; empty audio yields zero frames.

    Returns an array of shape (n_frames, frame_len).
    """
    if audio.sample_rate != cfg.sample_rate:
        raise ConfigError(
            f"audio is {audio.sample_rate} Hz but config expects {cfg.sample_rate} Hz"
        )
    x = np.asarray(audio.samples, dtype=np.float64)
    n = len(x)
    if n < cfg.frame_len:
        return np.empty((0, cfg.frame_len))
    count = (n - cfg.frame_len) // cfg.hop + 1
    offsets = np.arange(count) * cfg.hop
    return np.stack([x[o : o + cfg.frame_len] for o in offsets])


def mel_from_hz(hz):
    """Mel scale: 2595 * log10(1 + f/700)."""
    return 2595.0 * np.log10(1.0 + np.asarray(hz, dtype=np.float64) / 700.0)


def hz_from_mel(mel):
    return 700.0 * (10.0 ** (np.asarray(mel, dtype=np.float64) / 2595.0) - 1.0)


def mel_filterbank(cfg: MfccConfig) -> np.ndarray:
    """Triangular mel filterbank over the one-sided DFT bins.

    Filter edges are evenly spaced on the mel scale between 0 Hz and the
    Nyquist frequency; each triangle is evaluated at the bin center
    frequencies, so adjacent filters sum to exactly 1 between the first and
    last peak. Shape (n_mels, frame_len // 2 + 1).
    """
    n_bins = cfg.frame_len // 2 + 1
    edges = hz_from_mel(np.linspace(0.0, mel_from_hz(cfg.sample_rate / 2.0), cfg.n_mels + 2))
    freqs = np.arange(n_bins) * cfg.sample_rate / cfg.frame_len
    bank = np.zeros((cfg.n_mels, n_bins))
    for m in range(cfg.n_mels):
        lo, mid, hi = edges[m], edges[m + 1], edges[m + 2]
        rising = (freqs - lo) / (mid - lo)
        falling = (hi - freqs) / (hi - mid)
        bank[m] = np.clip(np.minimum(rising, falling), 0.0, None)
    return bank


def mfcc(frame: np.ndarray, cfg: MfccConfig, _bank: np.ndarray | None = None) -> np.ndarray:
    """MFCC of one frame.

    Pipeline: pre-emphasis -> Hamming window -> magnitude spectrum ->
    triangular mel filterbank -> log (floored at 1e-10) -> DCT-II (ortho) ->
    first n_coeffs coefficients. With include_log_energy, coefficient 0 is
    replaced by the log energy of the raw frame.
    """
    frame = np.asarray(frame, dtype=np.float64)
    if frame.shape != (cfg.frame_len,):
        raise DimensionError(f"expected frame of {cfg.frame_len} samples, got {frame.shape}")
    emphasized = np.concatenate(([frame[0]], frame[1:] - cfg.preemphasis * frame[:-1]))
    windowed = emphasized * np.hamming(cfg.frame_len)
    spectrum = np.abs(np.fft.rfft(windowed))
    mel_energy = mel_filterbank(cfg) @ spectrum if _bank is None else _bank @ spectrum
    log_mel = np.log(np.maximum(mel_energy, LOG_FLOOR))
    coeffs = dct(log_mel, type=2, norm="ortho")[: cfg.n_coeffs]
    if cfg.include_log_energy:
        coeffs[0] = np.log(max(float(np.dot(frame, frame)), LOG_FLOOR))
    return coeffs


def _deltas(feats: np.ndarray, width: int = 2) -> np.ndarray:
    """Regression deltas over +-width frames with edge replication."""
    n = len(feats)
    denom = 2.0 * sum(k * k for k in range(1, width + 1))
    out = np.zeros_like(feats)
    for k in range(1, width + 1):
        ahead = feats[np.minimum(np.arange(n) + k, n - 1)]
        behind = feats[np.maximum(np.arange(n) - k, 0)]
        out += k * (ahead - behind)
    return out / denom


def mfcc_sequence(audio: AudioBuffer, cfg: MfccConfig) -> np.ndarray:
    """Frame the audio and compute MFCCs for every frame.

    Returns shape (n_frames, cfg.dim); deltas are stacked column-wise when
    cfg.add_deltas is set.
    """
    frames = frame_signal(audio, cfg)
    if len(frames) == 0:
        return np.empty((0, cfg.dim))
    bank = mel_filterbank(cfg)
    feats = np.stack([mfcc(f, cfg, _bank=bank) for f in frames])
    if cfg.add_deltas:
        d1 = _deltas(feats)
        feats = np.hstack([feats, d1, _deltas(d1)])
    return feats


def read_wav(path) -> AudioBuffer:
    """Read a RIFF/PCM16/mono/16 kHz file into an AudioBuffer."""
    with wave.open(str(path), "rb") as wav:
        if wav.getnchannels() != 1:
            raise ConfigError(f"{path}: only mono WAV is supported, got {wav.getnchannels()} channels")
        if wav.getsampwidth() != 2:
            raise ConfigError(f"{path}: only 16-bit PCM is supported, got {8 * wav.getsampwidth()}-bit")
        if wav.getframerate() != SAMPLE_RATE:
            raise ConfigError(f"{path}: only {SAMPLE_RATE} Hz is supported, got {wav.getframerate()} Hz")
        raw = wav.readframes(wav.getnframes())
    samples = np.frombuffer(raw, dtype="<i2").astype(np.float64) / 32768.0
    return AudioBuffer(samples=samples, sample_rate=SAMPLE_RATE)


def write_wav(path, samples: np.ndarray, sample_rate: int = SAMPLE_RATE) -> None:
    """Write float samples in [-1, 1] as PCM16 mono."""
    pcm = np.clip(np.asarray(samples) * 32768.0, -32768, 32767).astype("<i2")
    with wave.open(str(path), "wb") as wav:
        wav.setnchannels(1)
        wav.setsampwidth(2)
        wav.setframerate(sample_rate)
        wav.writeframes(pcm.tobytes())


def load_embedding_stream(path) -> np.ndarray:
    """Read a text embedding file: line 1 is `dim=<d>`, then d floats per line.

    Returns shape (n_frames, d); an empty payload after the header gives
    shape (0, d).
    """
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline()
        if not header.startswith("dim="):
            raise EmbeddingHeaderError(f"{path}: first line must be 'dim=<d>', got {header!r}")
        try:
            dim = int(header[len("dim="):].strip())
        except ValueError:
            raise EmbeddingHeaderError(f"{path}: bad dimension in header {header!r}") from None
        if dim < 1:
            raise EmbeddingHeaderError(f"{path}: dimension must be >= 1, got {dim}")
        rows = []
        for lineno, line in enumerate(fh, start=2):
            if not line.strip():
                continue
            tokens = line.split()
            if len(tokens) != dim:
                raise EmbeddingDimensionError(
                    f"{path}:{lineno}: expected {dim} values, got {len(tokens)}"
                )
            try:
                rows.append([float(t) for t in tokens])
            except ValueError:
                raise EmbeddingRowError(f"{path}:{lineno}: non-numeric value in row") from None
    if not rows:
        return np.empty((0, dim))
    return np.asarray(rows, dtype=np.float64)


def write_embedding_stream(path, vectors: np.ndarray) -> None:
    """Write vectors in the embedding file format (floats round-trip exactly)."""
    vectors = np.atleast_2d(np.asarray(vectors, dtype=np.float64))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"dim={vectors.shape[1]}\n")
        for row in vectors:
            fh.write(" ".join(repr(float(v)) for v in row) + "\n")
