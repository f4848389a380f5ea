"""Fully online speaker diarization with episodically rewarded contextual
bandits, plus the MiniVox stream benchmark and evaluation harness."""

from .bandit import ArmState, select_arm
from .bench import (
    FeaturePool,
    GeneratedStream,
    NO_SPEAKER_LABEL,
    StreamSpec,
    Trace,
    engine_config_for,
    export_stream,
    generate_stream,
    load_pool,
    load_stream,
    simulate,
    substream,
    synthetic_gaussian_stream,
)
from .engine import (
    AGENTS,
    CORRECT,
    NEW,
    NO_FEEDBACK,
    NO_SPEAKER,
    ActionLabel,
    EngineConfig,
    Feedback,
    Registration,
    Session,
    parse_label,
    user,
    wrong,
)
from .errors import (
    ConfigError,
    DimensionError,
    EmbeddingDimensionError,
    EmbeddingFormatError,
    EmbeddingHeaderError,
    EmbeddingRowError,
    MinivoxError,
    ProtocolError,
    SnapshotError,
)
from .features import (
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
from .grid import GridConfig, run_grid, run_single
from .metrics import DerResult, cumulative_reward, der, trace_der
from .selfsup import OnlineGMM, OnlineKMeans, OnlineKNN, make_pseudo_labeler

__version__ = "0.1.0"
