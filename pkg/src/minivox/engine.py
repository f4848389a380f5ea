"""Online diarization session: action space, feedback routing, arm growth.

The action space holds a "New" arm (a new, unregistered speaker is talking),
a "NoSpeaker" arm, and one "User n" arm per registered speaker. Sessions
start with just {New, NoSpeaker} and grow arms as feedback confirms new
speakers; when the speaker count is known up front (oracle mode) the arm set
is fixed to {NoSpeaker, User 1..N} and never changes.

Feedback routing depends on the agent:

* linucb     -- ignores steps without feedback entirely (baseline)
* berlinucb  -- absorbs unlabeled contexts into the covariance only
* b-kmeans / b-knn / b-gmm -- score a clustering pseudo-label and update the
  reward vector of the chosen arm when the pseudo-label agrees with it
"""

import json
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .bandit import ArmState
from .errors import ConfigError, DimensionError, ProtocolError, SnapshotError
from .selfsup import make_pseudo_labeler, pseudo_labeler_from_dict

SNAPSHOT_VERSION = 1

AGENTS = ("linucb", "berlinucb", "b-kmeans", "b-knn", "b-gmm")
MODES = ("interactive", "bandit_benchmark")


@dataclass(frozen=True, order=True)
class ActionLabel:
    """One selectable action: New, NoSpeaker, or User n (1-based)."""

    kind: str
    index: int = 0

    def __str__(self):
        if self.kind == "new":
            return "New"
        if self.kind == "no_speaker":
            return "NoSpeaker"
        return f"User {self.index}"


NEW = ActionLabel("new")
NO_SPEAKER = ActionLabel("no_speaker")


def user(n: int) -> ActionLabel:
    if n < 1:
        raise ValueError(f"user index must be >= 1, got {n}")
    return ActionLabel("user", n)


def parse_label(text: str) -> ActionLabel:
    if text == "New":
        return NEW
    if text == "NoSpeaker":
        return NO_SPEAKER
    if text.startswith("User "):
        return user(int(text[len("User "):]))
    raise ValueError(f"not an action label: {text!r}")


@dataclass(frozen=True)
class Feedback:
    """Episodic supervision: silence, approval, or a correction.

    `wrong(NEW)` means "the true speaker has no arm yet" and triggers arm
    registration; `wrong(user(k))` names an existing arm as the truth.
    """

    kind: str  # "none" | "correct" | "wrong"
    correct: ActionLabel | None = None


NO_FEEDBACK = Feedback("none")
CORRECT = Feedback("correct")


def wrong(correct: ActionLabel) -> Feedback:
    return Feedback("wrong", correct)


class Registration(NamedTuple):
    """Record of one arm-growth event, surfaced to traces and services."""

    label: ActionLabel
    source: ActionLabel | None  # None = fresh identity statistics


@dataclass(frozen=True)
class EngineConfig:
    agent: str
    dim: int
    mode: str = "bandit_benchmark"
    oracle_speakers: int | None = None  # None = cold start without oracle
    ucb_c: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "agent", self.agent.lower())
        if self.agent not in AGENTS:
            raise ConfigError(f"unknown agent {self.agent!r}; expected one of {AGENTS}")
        if self.mode not in MODES:
            raise ConfigError(f"unknown mode {self.mode!r}; expected one of {MODES}")
        if self.dim < 1:
            raise ConfigError(f"dim must be >= 1, got {self.dim}")
        if self.oracle_speakers is not None and self.oracle_speakers < 1:
            raise ConfigError(f"oracle speaker count must be >= 1, got {self.oracle_speakers}")
        if self.ucb_c < 0:
            raise ConfigError(f"exploration coefficient must be >= 0, got {self.ucb_c}")

    @property
    def uses_selfsup(self) -> bool:
        return self.agent.startswith("b-")

    def to_dict(self) -> dict:
        return {
            "agent": self.agent,
            "dim": self.dim,
            "mode": self.mode,
            "oracle_speakers": self.oracle_speakers,
            "ucb_c": self.ucb_c,
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "EngineConfig":
        return cls(
            agent=payload["agent"],
            dim=int(payload["dim"]),
            mode=payload["mode"],
            oracle_speakers=(None if payload["oracle_speakers"] is None else int(payload["oracle_speakers"])),
            ucb_c=float(payload["ucb_c"]),
        )


class Session:
    """One diarization session; owned by a single logical caller."""

    def __init__(self, config: EngineConfig):
        self.config = config
        self.arms: dict[ActionLabel, ArmState] = {}
        if config.oracle_speakers is None:
            self.arms[NEW] = ArmState(config.dim)
            self.arms[NO_SPEAKER] = ArmState(config.dim)
            self.n_users = 0
        else:
            self.arms[NO_SPEAKER] = ArmState(config.dim)
            for n in range(1, config.oracle_speakers + 1):
                self.arms[user(n)] = ArmState(config.dim)
            self.n_users = config.oracle_speakers
        self.labeler = make_pseudo_labeler(config.agent[2:]) if config.uses_selfsup else None
        self.step_count = 0
        self.pending: tuple[np.ndarray, ActionLabel] | None = None

    def arm_labels(self) -> list[ActionLabel]:
        """Registry order: New, NoSpeaker, User 1..N (tie-break order)."""
        return list(self.arms)

    def _check_context(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.config.dim,):
            raise DimensionError(f"context has shape {x.shape}, session expects ({self.config.dim},)")
        if not np.all(np.isfinite(x)):
            raise DimensionError("context contains non-finite values")
        return x

    def step(self, x) -> tuple[ActionLabel, np.ndarray]:
        """Score every arm for this context and pick the best one.

        Returns the chosen label and the per-arm scores in registry order;
        the pair (x, chosen) is retained as the pending decision.
        """
        x = self._check_context(x)
        labels = self.arm_labels()
        scores = np.array([self.arms[l].score(x, self.config.ucb_c) for l in labels])
        chosen = labels[int(np.argmax(scores))]
        self.pending = (x, chosen)
        self.step_count += 1
        return chosen, scores

    def apply_feedback(self, chosen: ActionLabel, x, fb: Feedback) -> Registration | None:
        """Route one feedback event for the decision (x, chosen).

        Returns the Registration when the event grew the arm set, else None.
        """
        x = self._check_context(x)
        if chosen not in self.arms:
            raise ProtocolError(f"chosen arm {chosen} is not registered")

        if fb.kind == "none":
            self._apply_unlabeled(chosen, x)
            return None

        if fb.kind == "correct":
            if chosen == NEW:
                self.arms[NEW].update_rewarded(x, 1.0)
                return self._register(source=None)
            if self.config.mode == "bandit_benchmark":
                # Benchmark reveals carry the true label, so a correct choice
                # is a genuine r=1 observation and a labeled example.
                self.arms[chosen].update_rewarded(x, 1.0)
                self._observe_labeled(x, chosen)
            else:
                # Interactive approval of a non-New arm is silence (Table of
                # feedback routes); route it like a missing feedback.
                self._apply_unlabeled(chosen, x)
            return None

        if fb.kind != "wrong":
            raise ProtocolError(f"unknown feedback kind {fb.kind!r}")
        correct = fb.correct
        if correct is None:
            raise ProtocolError("wrong-choice feedback must name the correct label")
        if correct == chosen:
            raise ProtocolError("wrong-choice feedback cannot name the chosen arm")
        if correct == NEW:
            if self.config.oracle_speakers is not None:
                raise ProtocolError("cannot register new speakers in oracle mode")
        elif correct not in self.arms:
            raise ProtocolError(f"feedback names unknown arm {correct}")

        self.arms[chosen].update_rewarded(x, 0.0)
        if correct == NEW:
            # Parameter transfer: a mistaken User arm seeds the new speaker.
            source = chosen if chosen.kind == "user" else None
            return self._register(source=source)
        self._observe_labeled(x, correct)
        return None

    def _apply_unlabeled(self, chosen: ActionLabel, x: np.ndarray) -> None:
        if self.config.agent == "linucb":
            return
        if self.config.agent == "berlinucb":
            self.arms[chosen].update_unlabeled(x)
            return
        predicted = self.labeler.predict(x)
        self.arms[chosen].update_selfsup(x, 1 if predicted == chosen else 0)

    def _observe_labeled(self, x: np.ndarray, label: ActionLabel) -> None:
        if self.labeler is not None:
            self.labeler.observe(x, label)

    def _register(self, source: ActionLabel | None) -> Registration:
        if self.config.oracle_speakers is not None:
            raise ProtocolError("arm set is fixed in oracle mode")
        self.n_users += 1
        label = user(self.n_users)
        self.arms[label] = self.arms[source].copy() if source is not None else ArmState(self.config.dim)
        return Registration(label, source)

    def register_new_arm(self, source: ActionLabel | None = None) -> Registration:
        """Grow the registry by one User arm, copying stats from `source` if given."""
        if source is not None and source not in self.arms:
            raise ProtocolError(f"transfer source {source} is not registered")
        return self._register(source)

    # -- persistence ------------------------------------------------------

    def snapshot(self) -> bytes:
        """Serialize the full session; floats round-trip bit-exactly via repr."""
        payload = {
            "version": SNAPSHOT_VERSION,
            "config": self.config.to_dict(),
            "step_count": self.step_count,
            "n_users": self.n_users,
            "arms": [{"label": str(l), "state": a.to_dict()} for l, a in self.arms.items()],
            "labeler": self.labeler.to_dict(encode=str) if self.labeler is not None else None,
            "pending": (
                None
                if self.pending is None
                else {"x": self.pending[0].tolist(), "chosen": str(self.pending[1])}
            ),
        }
        return json.dumps(payload).encode("utf-8")

    @classmethod
    def restore(cls, data: bytes) -> "Session":
        try:
            payload = json.loads(data.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise SnapshotError(f"corrupt session snapshot: {exc}") from exc
        if not isinstance(payload, dict) or "version" not in payload:
            raise SnapshotError("corrupt session snapshot: missing version")
        if payload["version"] != SNAPSHOT_VERSION:
            raise SnapshotError(
                f"snapshot version {payload['version']} not supported (expected {SNAPSHOT_VERSION})"
            )
        try:
            session = cls(EngineConfig.from_dict(payload["config"]))
            session.arms = {
                parse_label(entry["label"]): ArmState.from_dict(entry["state"])
                for entry in payload["arms"]
            }
            session.step_count = int(payload["step_count"])
            session.n_users = int(payload["n_users"])
            if payload["labeler"] is not None:
                session.labeler = pseudo_labeler_from_dict(payload["labeler"], decode=parse_label)
            if payload["pending"] is not None:
                session.pending = (
                    np.asarray(payload["pending"]["x"], dtype=np.float64),
                    parse_label(payload["pending"]["chosen"]),
                )
        except (KeyError, ValueError, TypeError) as exc:
            raise SnapshotError(f"corrupt session snapshot: {exc}") from exc
        return session
