"""Online clustering pseudo-labelers: k-means, KNN (K=5), diagonal GMM.

All three share one interface: `observe(x, label)` learns from a labeled
context, `predict(x)` returns the pseudo-label for an unlabeled context or
None when nothing has been observed yet. Clusters are anchored to labels,
one per arm, so predictions always name an existing arm.

Predict runs on every unlabeled frame, so each model keeps a stacked-array
cache of its statistics, invalidated on observe.
"""

from collections import deque

import numpy as np

VARIANTS = ("kmeans", "knn", "gmm")

GMM_VAR_FLOOR = 1e-6
KNN_K = 5
KNN_MAX_HISTORY = 5000


class OnlineKMeans:
    """One running-mean centroid per label; predicts the nearest centroid.

    Distance ties go to the earlier-inserted label.
    """

    variant = "kmeans"

    def __init__(self):
        self.centroids: dict = {}
        self.counts: dict = {}
        self._stack = None

    @property
    def labels_seen(self):
        return list(self.centroids)

    def observe(self, x: np.ndarray, label) -> None:
        x = np.asarray(x, dtype=np.float64)
        if label not in self.centroids:
            self.centroids[label] = x.copy()
            self.counts[label] = 1
        else:
            self.counts[label] += 1
            mu = self.centroids[label]
            mu += (x - mu) / self.counts[label]
        self._stack = None

    def predict(self, x: np.ndarray):
        if not self.centroids:
            return None
        if self._stack is None:
            self._stack = np.stack(list(self.centroids.values()))
        diff = self._stack - np.asarray(x, dtype=np.float64)
        dists = np.einsum("ij,ij->i", diff, diff)
        return list(self.centroids)[int(np.argmin(dists))]

    def to_dict(self, encode=str) -> dict:
        return {
            "variant": self.variant,
            "labels": [
                {"label": encode(l), "centroid": self.centroids[l].tolist(), "count": self.counts[l]}
                for l in self.centroids
            ],
        }

    @classmethod
    def from_dict(cls, payload: dict, decode=str) -> "OnlineKMeans":
        model = cls()
        for entry in payload["labels"]:
            label = decode(entry["label"])
            model.centroids[label] = np.asarray(entry["centroid"], dtype=np.float64)
            model.counts[label] = int(entry["count"])
        return model


class OnlineKNN:
    """Bounded FIFO of labeled contexts; predicts by majority of the K nearest.

    Vote ties go to the closest neighbor carrying a tied label; distance
    ties resolve by insertion order.
    """

    variant = "knn"

    def __init__(self, k: int = KNN_K, max_history: int = KNN_MAX_HISTORY):
        self.k = k
        self.history: deque = deque(maxlen=max_history)
        self._labels: dict = {}  # insertion-ordered set
        self._stack = None

    @property
    def labels_seen(self):
        return list(self._labels)

    def observe(self, x: np.ndarray, label) -> None:
        self.history.append((np.asarray(x, dtype=np.float64).copy(), label))
        self._labels.setdefault(label, None)
        self._stack = None

    def predict(self, x: np.ndarray):
        if not self.history:
            return None
        if self._stack is None:
            self._stack = np.stack([entry[0] for entry in self.history])
        diff = self._stack - np.asarray(x, dtype=np.float64)
        dists = np.einsum("ij,ij->i", diff, diff)
        ranked = np.lexsort((np.arange(len(dists)), dists))[: self.k]
        votes: dict = {}
        for i in ranked:
            label = self.history[int(i)][1]
            votes[label] = votes.get(label, 0) + 1
        top = max(votes.values())
        winners = {label for label, n in votes.items() if n == top}
        for i in ranked:
            if self.history[int(i)][1] in winners:
                return self.history[int(i)][1]
        return None  # unreachable: winners drawn from ranked labels

    def to_dict(self, encode=str) -> dict:
        return {
            "variant": self.variant,
            "k": self.k,
            "max_history": self.history.maxlen,
            "history": [{"x": x.tolist(), "label": encode(l)} for x, l in self.history],
            "label_order": [encode(l) for l in self._labels],
        }

    @classmethod
    def from_dict(cls, payload: dict, decode=str) -> "OnlineKNN":
        model = cls(k=int(payload["k"]), max_history=int(payload["max_history"]))
        for label in payload["label_order"]:
            model._labels.setdefault(decode(label), None)
        for entry in payload["history"]:
            model.history.append((np.asarray(entry["x"], dtype=np.float64), decode(entry["label"])))
        return model


class OnlineGMM:
    """Per-label diagonal Gaussian tracked with Welford's running moments.

    Population variance M2/n, floored at 1e-6, enters the log-likelihood;
    prediction is the maximum-likelihood label, ties to the earlier label.
    """

    variant = "gmm"

    def __init__(self, var_floor: float = GMM_VAR_FLOOR):
        self.var_floor = var_floor
        self.means: dict = {}
        self.m2: dict = {}
        self.counts: dict = {}
        self._stacks = None

    @property
    def labels_seen(self):
        return list(self.means)

    def observe(self, x: np.ndarray, label) -> None:
        x = np.asarray(x, dtype=np.float64)
        if label not in self.means:
            self.means[label] = x.copy()
            self.m2[label] = np.zeros_like(x)
            self.counts[label] = 1
        else:
            self.counts[label] += 1
            delta = x - self.means[label]
            self.means[label] += delta / self.counts[label]
            self.m2[label] += delta * (x - self.means[label])
        self._stacks = None

    def variance(self, label) -> np.ndarray:
        return np.maximum(self.m2[label] / self.counts[label], self.var_floor)

    def predict(self, x: np.ndarray):
        if not self.means:
            return None
        if self._stacks is None:
            means = np.stack(list(self.means.values()))
            variances = np.stack([self.variance(l) for l in self.means])
            self._stacks = (means, variances, np.log(2.0 * np.pi * variances).sum(axis=1))
        means, variances, log_norm = self._stacks
        diff = np.asarray(x, dtype=np.float64) - means
        log_lik = -0.5 * (log_norm + np.einsum("ij,ij->i", diff * diff, 1.0 / variances))
        return list(self.means)[int(np.argmax(log_lik))]

    def to_dict(self, encode=str) -> dict:
        return {
            "variant": self.variant,
            "var_floor": self.var_floor,
            "labels": [
                {
                    "label": encode(l),
                    "mean": self.means[l].tolist(),
                    "m2": self.m2[l].tolist(),
                    "count": self.counts[l],
                }
                for l in self.means
            ],
        }

    @classmethod
    def from_dict(cls, payload: dict, decode=str) -> "OnlineGMM":
        model = cls(var_floor=float(payload["var_floor"]))
        for entry in payload["labels"]:
            label = decode(entry["label"])
            model.means[label] = np.asarray(entry["mean"], dtype=np.float64)
            model.m2[label] = np.asarray(entry["m2"], dtype=np.float64)
            model.counts[label] = int(entry["count"])
        return model


_CLASSES = {"kmeans": OnlineKMeans, "knn": OnlineKNN, "gmm": OnlineGMM}


def make_pseudo_labeler(variant: str):
    """Instantiate a pseudo-labeler by variant name."""
    if variant not in _CLASSES:
        raise ValueError(f"unknown self-supervision variant {variant!r}; expected one of {VARIANTS}")
    return _CLASSES[variant]()


def pseudo_labeler_from_dict(payload: dict, decode=str):
    return _CLASSES[payload["variant"]].from_dict(payload, decode=decode)
