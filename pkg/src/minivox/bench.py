"""MiniVox stream generation and the online simulation loop.

A stream is built from a pool of single-speaker utterances: draw a subset of
speakers, then repeatedly pick a random speaker and one of their utterances
and append it, until the desired frame count is reached. Feedback reveals
are an independent Bernoulli mask over frames.

Audio pools are assembled at sample level (utterances are concatenated and
the whole signal is framed, so windows may straddle utterance boundaries,
labeled by the frame's start sample). Precomputed-embedding pools are
assembled row by row.
"""

import csv
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .engine import NEW, NO_SPEAKER, EngineConfig, Session, user
from .engine import CORRECT, NO_FEEDBACK, wrong
from .errors import ConfigError
from .features import (
    AudioBuffer,
    MfccConfig,
    load_embedding_stream,
    mfcc_sequence,
    read_wav,
    write_embedding_stream,
)

# Reserved truth label for frames where nobody speaks; matches the engine's
# NoSpeaker action string so traces live in one label space.
NO_SPEAKER_LABEL = str(NO_SPEAKER)
RESERVED_SPEAKER_IDS = {NO_SPEAKER_LABEL, str(NEW)}

FEATURE_KINDS = ("mfcc", "precomputed")

# Paper-scale defaults: audio streams run ~60k frames, embedding streams ~12k.
DEFAULT_FRAMES = {"mfcc": 60000, "precomputed": 12000}


def substream(seed: int, name: str) -> np.random.Generator:
    """Named, order-independent child generator of a 64-bit seed."""
    key = int.from_bytes(hashlib.sha256(name.encode("utf-8")).digest()[:8], "big")
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(key,)))


@dataclass(frozen=True)
class StreamSpec:
    """Requested stream shape; the realized length is the last whole-utterance
    boundary at or below target_frames."""

    n_speakers: int
    target_frames: int
    reveal_p: float
    seed: int
    silence_gap_frames: int = 0

    def __post_init__(self):
        if self.n_speakers < 1:
            raise ConfigError(f"n_speakers must be >= 1, got {self.n_speakers}")
        if self.target_frames < 1:
            raise ConfigError(f"target_frames must be >= 1, got {self.target_frames}")
        if not (0.0 <= self.reveal_p <= 1.0):
            raise ConfigError(f"reveal_p must lie in [0, 1], got {self.reveal_p}")
        if self.silence_gap_frames < 0:
            raise ConfigError(f"silence_gap_frames must be >= 0, got {self.silence_gap_frames}")


@dataclass
class FeaturePool:
    """Loaded utterance pool: per-speaker payload arrays ready for assembly.

    For `mfcc` pools the payloads are raw sample arrays; for `precomputed`
    pools they are (n_frames, dim) feature matrices.
    """

    feature_kind: str
    utterances: dict[str, list[np.ndarray]]
    dim: int
    mfcc_config: MfccConfig | None = None

    @property
    def speaker_ids(self) -> list[str]:
        return sorted(self.utterances)


def load_pool(manifest_path, feature_kind: str | None = None,
              mfcc_config: MfccConfig | None = None) -> FeaturePool:
    """Read a `source,speaker_id` CSV manifest and load every utterance.

    Sources resolve relative to the manifest's directory. The feature kind
    comes from the argument, else a `<manifest>.meta.json` sidecar, else the
    first source's extension.
    """
    manifest_path = Path(manifest_path)
    with open(manifest_path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or [f.strip() for f in reader.fieldnames[:2]] != ["source", "speaker_id"]:
            raise ConfigError(f"{manifest_path}: manifest header must be 'source,speaker_id'")
        entries = [(row["source"].strip(), row["speaker_id"].strip()) for row in reader]
    if not entries:
        raise ConfigError(f"{manifest_path}: manifest has no entries")
    for source, speaker in entries:
        if not speaker:
            raise ConfigError(f"{manifest_path}: empty speaker_id for source {source!r}")
        if speaker in RESERVED_SPEAKER_IDS:
            raise ConfigError(f"{manifest_path}: speaker_id {speaker!r} is reserved")

    if feature_kind is None:
        sidecar = Path(str(manifest_path) + ".meta.json")
        if sidecar.exists():
            feature_kind = json.loads(sidecar.read_text(encoding="utf-8")).get("feature_kind")
        if feature_kind is None:
            feature_kind = "mfcc" if entries[0][0].lower().endswith(".wav") else "precomputed"
    if feature_kind not in FEATURE_KINDS:
        raise ConfigError(f"unknown feature kind {feature_kind!r}; expected one of {FEATURE_KINDS}")

    base = manifest_path.parent
    utterances: dict[str, list[np.ndarray]] = {}
    dim = None
    cfg = mfcc_config or MfccConfig()
    for source, speaker in entries:
        path = base / source
        if feature_kind == "mfcc":
            payload = read_wav(path).samples
            if len(payload) == 0:
                raise ConfigError(f"{path}: empty utterance")
            dim = cfg.dim
        else:
            payload = load_embedding_stream(path)
            if len(payload) == 0:
                raise ConfigError(f"{path}: empty utterance")
            if dim is None:
                dim = payload.shape[1]
            elif payload.shape[1] != dim:
                raise ConfigError(
                    f"{path}: embedding dim {payload.shape[1]} differs from pool dim {dim}"
                )
        utterances.setdefault(speaker, []).append(payload)
    return FeaturePool(
        feature_kind=feature_kind,
        utterances=utterances,
        dim=dim,
        mfcc_config=cfg if feature_kind == "mfcc" else None,
    )


@dataclass
class GeneratedStream:
    """A labeled multi-speaker stream plus its feedback reveal mask."""

    contexts: np.ndarray                       # (frames, dim)
    truth: list[str]                           # speaker_id or NO_SPEAKER_LABEL
    reveal_mask: np.ndarray                    # (frames,) bool
    segments: list[tuple[str, int, int]]       # (speaker_id, start_frame, end_frame)
    speakers: list[str]                        # drawn order; fixes oracle arm binding
    feature_kind: str
    spec: StreamSpec
    samples: np.ndarray | None = None          # concatenated audio (mfcc streams)
    mfcc_config: MfccConfig | None = None

    def __len__(self):
        return len(self.contexts)

    @property
    def dim(self) -> int:
        return self.contexts.shape[1]


def _frames_in_samples(n_samples: int, cfg: MfccConfig) -> int:
    if n_samples < cfg.frame_len:
        return 0
    return (n_samples - cfg.frame_len) // cfg.hop + 1


def generate_stream(pool: FeaturePool, spec: StreamSpec) -> GeneratedStream:
    """Assemble one stream from the pool according to the spec.

    Pure function of (pool, spec): speaker choice, utterance choice, and the
    reveal mask each use a named substream of spec.seed, so the mask is
    unaffected by content parameters.
    """
    available = pool.speaker_ids
    if spec.n_speakers > len(available):
        raise ConfigError(
            f"pool has {len(available)} distinct speakers, need {spec.n_speakers}"
        )
    rng_participants = substream(spec.seed, "speaker-selection")
    rng_speaker = substream(spec.seed, "speaker-choice")
    rng_utt = substream(spec.seed, "utterance-choice")
    rng_reveal = substream(spec.seed, "reveal-mask")

    drawn = [available[i]
             for i in rng_participants.choice(len(available), size=spec.n_speakers, replace=False)]

    is_audio = pool.feature_kind == "mfcc"
    cfg = pool.mfcc_config
    gap_len = spec.silence_gap_frames * (cfg.hop if is_audio else 1)

    def total_frames(units: int) -> int:
        return _frames_in_samples(units, cfg) if is_audio else units

    # Draw (speaker, utterance) pairs until the frame budget is met; each
    # draw appends the utterance plus the configured silence gap.
    picks: list[tuple[str, np.ndarray]] = []
    length = 0
    while total_frames(length) < spec.target_frames:
        speaker = drawn[int(rng_speaker.integers(0, len(drawn)))]
        utts = pool.utterances[speaker]
        utt = utts[int(rng_utt.integers(0, len(utts)))]
        picks.append((speaker, utt))
        length += len(utt) + gap_len
    if total_frames(length) > spec.target_frames:
        speaker, utt = picks.pop()
        length -= len(utt) + gap_len
    if total_frames(length) == 0:
        raise ConfigError(
            "no whole utterance fits within target_frames; increase target_frames"
        )

    # Materialize pieces with native-unit boundaries (samples or rows).
    pieces: list[tuple[str, int, int]] = []
    chunks: list[np.ndarray] = []
    pos = 0
    gap_chunk = np.zeros(gap_len) if is_audio else np.zeros((gap_len, pool.dim))
    for speaker, utt in picks:
        pieces.append((speaker, pos, pos + len(utt)))
        chunks.append(utt)
        pos += len(utt)
        if gap_len:
            pieces.append((NO_SPEAKER_LABEL, pos, pos + gap_len))
            chunks.append(gap_chunk)
            pos += gap_len

    if is_audio:
        samples = np.concatenate(chunks)
        contexts = mfcc_sequence(AudioBuffer(samples), cfg)
        n_frames = len(contexts)

        def piece_to_frames(start: int, end: int) -> tuple[int, int]:
            # frame k belongs to the piece covering its start sample k*hop
            lo = -(-start // cfg.hop)
            hi = -(-end // cfg.hop)
            return min(lo, n_frames), min(hi, n_frames)
    else:
        samples = None
        contexts = np.vstack(chunks)
        n_frames = len(contexts)

        def piece_to_frames(start: int, end: int) -> tuple[int, int]:
            return start, end

    truth = [NO_SPEAKER_LABEL] * n_frames
    segments: list[tuple[str, int, int]] = []
    for speaker, start, end in pieces:
        lo, hi = piece_to_frames(start, end)
        if lo >= hi:
            continue
        for k in range(lo, hi):
            truth[k] = speaker
        if speaker != NO_SPEAKER_LABEL:
            segments.append((speaker, lo, hi))

    # Mask length depends only on (seed, target_frames): content changes
    # leave the drawn Bernoulli sequence untouched.
    mask = rng_reveal.random(spec.target_frames) < spec.reveal_p
    return GeneratedStream(
        contexts=contexts,
        truth=truth,
        reveal_mask=mask[:n_frames],
        segments=segments,
        speakers=drawn,
        feature_kind=pool.feature_kind,
        spec=spec,
        samples=samples,
        mfcc_config=cfg,
    )


def synthetic_gaussian_stream(n_speakers: int, dim: int, n_frames: int, reveal_p: float,
                              seed: int, center_scale: float = 5.0, sigma: float = 1.0) -> GeneratedStream:
    """Synthetic stream with one isotropic Gaussian per speaker.

    Centers sit at center_scale * e_i, so they are >= center_scale * sqrt(2)
    apart; labels are i.i.d. uniform per frame. Useful for agent sanity
    checks that need a stream with no audio pool.
    """
    if n_speakers > dim:
        raise ConfigError(f"need dim >= n_speakers, got dim={dim} n_speakers={n_speakers}")
    spec = StreamSpec(n_speakers=n_speakers, target_frames=n_frames, reveal_p=reveal_p, seed=seed)
    speakers = [f"spk{i + 1}" for i in range(n_speakers)]
    centers = np.eye(dim)[:n_speakers] * center_scale
    labels = substream(seed, "truth-labels").integers(0, n_speakers, size=n_frames)
    noise = substream(seed, "contexts").normal(0.0, sigma, size=(n_frames, dim))
    contexts = centers[labels] + noise
    mask = substream(seed, "reveal-mask").random(n_frames) < reveal_p
    truth = [speakers[i] for i in labels]
    segments = []
    start = 0
    for k in range(1, n_frames + 1):
        if k == n_frames or truth[k] != truth[start]:
            segments.append((truth[start], start, k))
            start = k
    return GeneratedStream(
        contexts=contexts,
        truth=truth,
        reveal_mask=mask,
        segments=segments,
        speakers=speakers,
        feature_kind="precomputed",
        spec=spec,
    )


class TruthMapper:
    """Tracks which arm each ground-truth speaker is bound to.

    Unbound speakers map to the New action: declaring "new speaker" is the
    correct decision until that speaker is registered.
    """

    def __init__(self, oracle_speakers: list[str] | None = None):
        self.binding = {NO_SPEAKER_LABEL: NO_SPEAKER}
        if oracle_speakers:
            for i, speaker in enumerate(oracle_speakers):
                self.binding[speaker] = user(i + 1)

    def action_for(self, truth_label: str):
        return self.binding.get(truth_label, NEW)

    def bind(self, truth_label: str, arm_label) -> None:
        self.binding[truth_label] = arm_label


@dataclass
class Trace:
    """Per-step decision log of one simulated run."""

    chosen: list[str] = field(default_factory=list)
    truth: list[str] = field(default_factory=list)
    truth_action: list[str] = field(default_factory=list)
    revealed: list[bool] = field(default_factory=list)
    reward: list[int] = field(default_factory=list)
    registrations: list[tuple[int, str, str]] = field(default_factory=list)  # (frame, label, source)

    def __len__(self):
        return len(self.chosen)

    def final_reward(self) -> int:
        return int(sum(self.reward))

    def to_csv(self, path) -> None:
        reg_at = {frame: (label, source) for frame, label, source in self.registrations}
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["frame", "chosen", "truth", "truth_action", "revealed", "reward",
                             "registered", "reg_source"])
            for t in range(len(self)):
                label, source = reg_at.get(t, ("", ""))
                writer.writerow([t, self.chosen[t], self.truth[t], self.truth_action[t],
                                 int(self.revealed[t]), self.reward[t], label, source])


def engine_config_for(stream: GeneratedStream, agent: str, mode: str = "bandit_benchmark",
                      oracle: bool = False, ucb_c: float = 1.0) -> EngineConfig:
    """EngineConfig matching a stream's dimension and speaker count."""
    return EngineConfig(
        agent=agent,
        dim=stream.dim,
        mode=mode,
        oracle_speakers=len(stream.speakers) if oracle else None,
        ucb_c=ucb_c,
    )


def simulate(stream: GeneratedStream, agent) -> Trace:
    """Run one agent over one stream, frame by frame.

    `agent` is an EngineConfig or any session-like object exposing
    .config/.step/.apply_feedback. The engine only ever sees contexts and
    Feedback values; ground truth stays on this side of the interface.
    """
    if len(stream) == 0:
        raise ConfigError("cannot simulate an empty stream")
    session = Session(agent) if isinstance(agent, EngineConfig) else agent
    config = session.config
    if config.dim != stream.dim:
        raise ConfigError(f"agent dim {config.dim} != stream dim {stream.dim}")
    if config.oracle_speakers is not None:
        if config.oracle_speakers != len(stream.speakers):
            raise ConfigError(
                f"oracle expects {config.oracle_speakers} speakers, stream has {len(stream.speakers)}"
            )
        mapper = TruthMapper(stream.speakers)
    else:
        mapper = TruthMapper()

    interactive = config.mode == "interactive"
    trace = Trace()
    for t in range(len(stream)):
        x = stream.contexts[t]
        truth = stream.truth[t]
        a_star = mapper.action_for(truth)
        chosen, _ = session.step(x)
        revealed = bool(stream.reveal_mask[t])

        if not revealed:
            fb = NO_FEEDBACK
        elif chosen == a_star:
            # Interactive users stay silent on correct non-New choices.
            fb = CORRECT if (not interactive or chosen == NEW) else NO_FEEDBACK
        else:
            fb = wrong(a_star)

        registration = session.apply_feedback(chosen, x, fb)
        if registration is not None:
            mapper.bind(truth, registration.label)
            trace.registrations.append(
                (t, str(registration.label),
                 str(registration.source) if registration.source is not None else "fresh")
            )

        trace.chosen.append(str(chosen))
        trace.truth.append(truth)
        trace.truth_action.append(str(a_star))
        trace.revealed.append(revealed)
        trace.reward.append(1 if chosen == a_star else 0)
    return trace


# -- stream export / import -------------------------------------------------

def export_stream(stream: GeneratedStream, out_dir) -> None:
    """Write a stream as a directory: contexts, truth.csv, reveal.csv,
    segments.csv, plus meta.json for round-tripping."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_embedding_stream(out / "contexts", stream.contexts)
    with open(out / "truth.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["frame", "label"])
        for t, label in enumerate(stream.truth):
            writer.writerow([t, label])
    with open(out / "reveal.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["frame", "revealed"])
        for t, bit in enumerate(stream.reveal_mask):
            writer.writerow([t, int(bit)])
    with open(out / "segments.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["speaker_id", "start_frame", "end_frame"])
        for speaker, start, end in stream.segments:
            writer.writerow([speaker, start, end])
    meta = {
        "feature_kind": stream.feature_kind,
        "speakers": stream.speakers,
        "spec": {
            "n_speakers": stream.spec.n_speakers,
            "target_frames": stream.spec.target_frames,
            "reveal_p": stream.spec.reveal_p,
            "seed": stream.spec.seed,
            "silence_gap_frames": stream.spec.silence_gap_frames,
        },
    }
    (out / "meta.json").write_text(json.dumps(meta, indent=2), encoding="utf-8")


def load_stream(stream_dir) -> GeneratedStream:
    """Read back a directory written by export_stream (audio is not kept)."""
    src = Path(stream_dir)
    contexts = load_embedding_stream(src / "contexts")
    with open(src / "truth.csv", newline="", encoding="utf-8") as fh:
        truth = [row["label"] for row in csv.DictReader(fh)]
    with open(src / "reveal.csv", newline="", encoding="utf-8") as fh:
        mask = np.array([bool(int(row["revealed"])) for row in csv.DictReader(fh)])
    with open(src / "segments.csv", newline="", encoding="utf-8") as fh:
        segments = [(row["speaker_id"], int(row["start_frame"]), int(row["end_frame"]))
                    for row in csv.DictReader(fh)]
    meta = json.loads((src / "meta.json").read_text(encoding="utf-8"))
    return GeneratedStream(
        contexts=contexts,
        truth=truth,
        reveal_mask=mask,
        segments=segments,
        speakers=list(meta["speakers"]),
        feature_kind=meta["feature_kind"],
        spec=StreamSpec(**meta["spec"]),
    )
