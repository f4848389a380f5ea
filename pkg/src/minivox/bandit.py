"""Per-arm ridge-regression state and the three episodic update rules.

Each arm keeps the sufficient statistics (A, b) of a d-dimensional ridge
regression plus a maintained inverse of A. Three updates exist:

* rewarded:   A += x x^T and b += r x           (feedback revealed)
* selfsup:    b += r' x only, A untouched       (pseudo-reward from clustering)
* unlabeled:  A += x x^T only, b untouched      (no feedback, no pseudo-label)
"""

import numpy as np

from .errors import DimensionError

# Full re-inversion cadence; Sherman-Morrison drift stays well under 1e-8
# Frobenius within this many rank-1 steps at d <= 64.
REFRESH_EVERY = 1000


class ArmState:
    """Sufficient statistics of one arm; A starts at identity, b at zero."""

    def __init__(self, dim: int):
        if dim < 1:
            raise DimensionError(f"arm dimension must be >= 1, got {dim}")
        self.dim = dim
        self.A = np.eye(dim)
        self.A_inv = np.eye(dim)
        self.b = np.zeros(dim)
        self._rank1_updates = 0
        self._theta = None

    @property
    def theta(self) -> np.ndarray:
        """Ridge estimate A^-1 b, cached between updates."""
        if self._theta is None:
            self._theta = self.A_inv @ self.b
        return self._theta

    def _check(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.dim,):
            raise DimensionError(f"context has shape {x.shape}, arm expects ({self.dim},)")
        return x

    def score(self, x: np.ndarray, c: float) -> float:
        """UCB score theta.x + c * sqrt(x^T A^-1 x).

        The radicand is analytically nonnegative (A is SPD); it is clamped
        at 0 to guard against rounding.
        """
        x = self._check(x)
        radicand = max(float(x @ (self.A_inv @ x)), 0.0)
        return float(self.theta @ x) + c * np.sqrt(radicand)

    def _add_covariance(self, x: np.ndarray) -> None:
        self.A += np.outer(x, x)
        self._rank1_updates += 1
        if self._rank1_updates % REFRESH_EVERY == 0:
            inv = np.linalg.inv(self.A)
            self.A_inv = (inv + inv.T) / 2.0
        else:
            u = self.A_inv @ x
            self.A_inv -= np.outer(u, u) / (1.0 + float(x @ u))

    def update_rewarded(self, x: np.ndarray, reward: float) -> None:
        """Feedback step: A += x x^T, b += reward * x."""
        x = self._check(x)
        if not (0.0 <= reward <= 1.0):
            raise ValueError(f"reward must lie in [0, 1], got {reward}")
        self._add_covariance(x)
        if reward != 0.0:
            self.b += reward * x
        self._theta = None

    def update_selfsup(self, x: np.ndarray, pseudo_reward: int) -> None:
        """Pseudo-labeled step: b += r' x with A strictly untouched.

        A zero pseudo-reward leaves the arm bit-identical.
        """
        x = self._check(x)
        if pseudo_reward not in (0, 1):
            raise ValueError(f"pseudo-reward must be 0 or 1, got {pseudo_reward}")
        if pseudo_reward == 0:
            return
        self.b += x
        self._theta = None

    def update_unlabeled(self, x: np.ndarray) -> None:
        """Unlabeled step: A += x x^T with b strictly untouched."""
        x = self._check(x)
        self._add_covariance(x)
        self._theta = None

    def copy(self) -> "ArmState":
        """Deep copy; used for parameter transfer to a newly registered arm."""
        clone = ArmState(self.dim)
        clone.A = self.A.copy()
        clone.A_inv = self.A_inv.copy()
        clone.b = self.b.copy()
        clone._rank1_updates = self._rank1_updates
        return clone

    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "A": self.A.tolist(),
            "A_inv": self.A_inv.tolist(),
            "b": self.b.tolist(),
            "rank1_updates": self._rank1_updates,
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "ArmState":
        arm = cls(int(payload["dim"]))
        arm.A = np.asarray(payload["A"], dtype=np.float64)
        arm.A_inv = np.asarray(payload["A_inv"], dtype=np.float64)
        arm.b = np.asarray(payload["b"], dtype=np.float64)
        arm._rank1_updates = int(payload["rank1_updates"])
        return arm


def select_arm(arms: list[ArmState], x: np.ndarray, c: float) -> int:
    """Index of the highest-scoring arm; ties go to the lowest index."""
    if not arms:
        raise ValueError("select_arm requires at least one arm")
    scores = [arm.score(x, c) for arm in arms]
    return int(np.argmax(scores))
