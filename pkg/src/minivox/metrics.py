"""Frame-level diarization error rate and cumulative reward."""

from dataclasses import dataclass

import numpy as np

from .engine import NO_SPEAKER

NO_SPEECH = str(NO_SPEAKER)


@dataclass(frozen=True)
class DerResult:
    """Frame-level DER with its three error components (all counts in frames).

    Percentages are 100 * count / frames; errors = confusion + missed +
    false_alarm, so percent always equals 100 - frame accuracy * 100.
    """

    frames: int
    confusion: int
    missed: int
    false_alarm: int

    @property
    def errors(self) -> int:
        return self.confusion + self.missed + self.false_alarm

    @property
    def percent(self) -> float:
        return 100.0 * self.errors / self.frames

    @property
    def confusion_percent(self) -> float:
        return 100.0 * self.confusion / self.frames

    @property
    def missed_percent(self) -> float:
        return 100.0 * self.missed / self.frames

    @property
    def false_alarm_percent(self) -> float:
        return 100.0 * self.false_alarm / self.frames


def der(hyp, ref, no_speech: str = NO_SPEECH) -> DerResult:
    """Frame-level DER between two equal-length label sequences.

    Mismatches split into speaker confusion (both speech, different
    speaker), missed speech (ref speech, hyp no-speaker), and false alarm
    (ref no-speaker, hyp speech).
    """
    if len(hyp) != len(ref):
        raise ValueError(f"label sequences differ in length: {len(hyp)} vs {len(ref)}")
    if len(ref) == 0:
        raise ValueError("cannot score empty label sequences")
    confusion = missed = false_alarm = 0
    for h, r in zip(hyp, ref):
        if h == r:
            continue
        if r == no_speech:
            false_alarm += 1
        elif h == no_speech:
            missed += 1
        else:
            confusion += 1
    return DerResult(frames=len(ref), confusion=confusion, missed=missed, false_alarm=false_alarm)


def trace_der(trace) -> DerResult:
    """DER of a simulated trace: chosen actions vs the correct actions."""
    return der(trace.chosen, trace.truth_action)


def cumulative_reward(trace_or_rewards) -> np.ndarray:
    """Prefix sums of the per-step reward; monotone nondecreasing integers."""
    rewards = getattr(trace_or_rewards, "reward", trace_or_rewards)
    if len(rewards) == 0:
        raise ValueError("cannot accumulate an empty trace")
    return np.cumsum(np.asarray(rewards, dtype=np.int64))
