"""Victim classifiers behind a uniform black-box scoring interface.

The desk-scale victim is a bag-of-pieces multinomial logistic regression;
full-scale victims sit behind the remote HTTP protocol and are reached with
the same `score` / `batch_score` surface.
"""
from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import requests

from .errors import DegenerateDataset, MalformedResponse, VictimUnavailable
from .tokenizer import Vocabulary, encode


@dataclass
class ClassDistribution:
    probs: list[float]
    predicted: int

    @classmethod
    def from_probs(cls, probs) -> "ClassDistribution":
        arr = np.asarray(probs, dtype=float)
        if arr.ndim != 1 or arr.size == 0:
            raise MalformedResponse("probability vector must be 1-D and non-empty")
        if np.any(arr < -1e-9):
            raise MalformedResponse("negative probability")
        s = float(arr.sum())
        if abs(s - 1.0) > 1e-3:
            raise MalformedResponse(f"probabilities sum to {s}, not 1")
        arr = np.clip(arr, 0.0, None) / arr.sum()
        return cls(probs=arr.tolist(), predicted=int(np.argmax(arr)))


@dataclass(frozen=True)
class LabeledExample:
    text: str
    label: int


def load_dataset(path) -> list[LabeledExample]:
    """JSON Lines, one {"text": ..., "label": ...} object per line."""
    import json

    examples = []
    with open(path, "r", encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            examples.append(LabeledExample(text=str(obj["text"]), label=int(obj["label"])))
    return examples


class Victim:
    """Scoring interface every attackable classifier implements."""

    def score(self, text: str) -> ClassDistribution:
        return self.batch_score([text])[0]

    def batch_score(self, texts: Sequence[str]) -> list[ClassDistribution]:
        raise NotImplementedError


class CountingVictim(Victim):
    """Wrapper counting how many texts were actually scored."""

    def __init__(self, inner: Victim):
        self.inner = inner
        self.calls = 0

    def batch_score(self, texts):
        self.calls += len(texts)
        return self.inner.batch_score(texts)


def _softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


class ToyVictim(Victim):
    """Bag-of-pieces multinomial logistic regression."""

    def __init__(self, weights: np.ndarray, bias: np.ndarray, vocab: Vocabulary):
        self.weights = np.asarray(weights, dtype=float)
        self.bias = np.asarray(bias, dtype=float)
        self.vocab = vocab
        if not np.all(np.isfinite(self.weights)):
            raise ValueError("non-finite weights")

    def features(self, text: str) -> np.ndarray:
        counts = np.zeros(len(self.vocab))
        for pid in encode(text, self.vocab).piece_ids:
            counts[pid] += 1.0
        return counts

    def batch_score(self, texts):
        out = []
        for t in texts:
            logits = self.weights @ self.features(t) + self.bias
            out.append(ClassDistribution.from_probs(_softmax(logits)))
        return out

    def save(self, path) -> None:
        np.savez(path, weights=self.weights, bias=self.bias)

    @classmethod
    def load(cls, path, vocab: Vocabulary) -> "ToyVictim":
        data = np.load(path)
        return cls(data["weights"], data["bias"], vocab)


def piece_count_matrix(texts: Sequence[str], vocab: Vocabulary) -> np.ndarray:
    X = np.zeros((len(texts), len(vocab)))
    for r, t in enumerate(texts):
        for pid in encode(t, vocab).piece_ids:
            X[r, pid] += 1.0
    return X


def loss_and_gradient(weights, bias, X, y, l2):
    """Mean cross-entropy + L2 penalty and its gradients; shared with tests."""
    n = X.shape[0]
    probs = _softmax(X @ weights.T + bias)
    onehot = np.zeros_like(probs)
    onehot[np.arange(n), y] = 1.0
    loss = -np.mean(np.log(probs[np.arange(n), y] + 1e-300)) + 0.5 * l2 * np.sum(weights**2)
    diff = (probs - onehot) / n
    grad_w = diff.T @ X + l2 * weights
    grad_b = diff.sum(axis=0)
    return loss, grad_w, grad_b


def train_toy_victim(train: Sequence[LabeledExample], vocab: Vocabulary,
                     epochs: int = 200, learning_rate: float = 0.5,
                     l2: float = 1e-4) -> ToyVictim:
    labels = sorted({ex.label for ex in train})
    if len(labels) < 2:
        raise DegenerateDataset("need at least 2 classes")
    n_classes = max(labels) + 1
    X = piece_count_matrix([ex.text for ex in train], vocab)
    y = np.array([ex.label for ex in train])
    W = np.zeros((n_classes, X.shape[1]))
    b = np.zeros(n_classes)
    for _ in range(epochs):
        _, gw, gb = loss_and_gradient(W, b, X, y, l2)
        W -= learning_rate * gw
        b -= learning_rate * gb
    return ToyVictim(W, b, vocab)


class RemoteVictim(Victim):
    """HTTP client for the /score wire protocol."""

    def __init__(self, endpoint: str, timeout: float = 10.0, retries: int = 2,
                 backoff: float = 0.25):
        self.endpoint = endpoint.rstrip("/")
        self.timeout = timeout
        self.retries = retries
        self.backoff = backoff
        self._session = requests.Session()

    def batch_score(self, texts):
        texts = list(texts)
        if not texts:
            return []
        payload = {"texts": texts}
        last = None
        for attempt in range(self.retries + 1):
            try:
                resp = self._session.post(
                    f"{self.endpoint}/score", json=payload, timeout=self.timeout
                )
                resp.raise_for_status()
                body = resp.json()
                break
            except (requests.RequestException, ValueError) as exc:
                last = exc
                if attempt < self.retries:
                    time.sleep(self.backoff * 2**attempt)
        else:
            raise VictimUnavailable(f"remote victim at {self.endpoint}: {last}")
        rows = body.get("probabilities")
        if not isinstance(rows, list) or len(rows) != len(texts):
            raise MalformedResponse("probabilities missing or misaligned with request")
        return [ClassDistribution.from_probs(row) for row in rows]
