"""User mobility profiles: LDA over per-user documents of visited venue subcategories.

Inference is collapsed Gibbs sampling. Every document owns a random stream
derived from ``(seed, document id)`` and documents are swept in sorted id
order, so results do not depend on the order documents are passed in.
"""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd
from numba import njit
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .validation import check_checkin_frame, check_positive_int, select_slice

logger = logging.getLogger(__name__)

_BLOCK = 64


@dataclass(frozen=True)
class UserDocument:
    user_id: str
    tokens: tuple[str, ...]


@dataclass
class TopicModel:
    n_topics: int
    alpha: float
    beta: float
    vocabulary: tuple[str, ...]
    doc_ids: tuple[str, ...]
    topic_word_counts: np.ndarray
    doc_topic_counts: np.ndarray
    assignments: list[np.ndarray] = field(repr=False)
    iterations: int = 0
    seed: int = 0

    def topic_word_distribution(self) -> np.ndarray:
        """K x V matrix of (count + beta) / (topic total + V * beta)."""
        v = len(self.vocabulary)
        nkw = self.topic_word_counts.astype(float)
        return (nkw + self.beta) / (nkw.sum(axis=1, keepdims=True) + v * self.beta)

    def doc_topic_distribution(self) -> np.ndarray:
        ndk = self.doc_topic_counts.astype(float)
        return (ndk + self.alpha) / (ndk.sum(axis=1, keepdims=True) + self.n_topics * self.alpha)

    def check_invariants(self, documents=None) -> None:
        """Raise AssertionError unless the count tables agree with the assignments."""
        k, v = self.n_topics, len(self.vocabulary)
        index = {w: i for i, w in enumerate(self.vocabulary)}
        nkw = np.zeros((k, v), dtype=np.int64)
        ndk = np.zeros((len(self.doc_ids), k), dtype=np.int64)
        docs = {d.user_id: d for d in documents} if documents is not None else None
        for d, (doc_id, z) in enumerate(zip(self.doc_ids, self.assignments)):
            ndk[d] = np.bincount(z, minlength=k)
            if docs is not None:
                tokens = docs[doc_id].tokens
                assert len(tokens) == len(z), f"document {doc_id}: {len(z)} assignments for {len(tokens)} tokens"
                for w, t in zip(tokens, z):
                    nkw[t, index[w]] += 1
        assert np.array_equal(ndk, self.doc_topic_counts), "doc-topic counts disagree with assignments"
        assert np.array_equal(ndk.sum(axis=1), [len(z) for z in self.assignments]), "doc lengths"
        if docs is not None:
            assert np.array_equal(nkw, self.topic_word_counts), "topic-word counts disagree with assignments"
        assert np.array_equal(self.topic_word_counts.sum(axis=1), self.doc_topic_counts.sum(axis=0)), (
            "per-topic totals differ between the two count tables"
        )

    def to_dict(self) -> dict:
        return {
            "n_topics": self.n_topics,
            "alpha": self.alpha,
            "beta": self.beta,
            "iterations": self.iterations,
            "seed": self.seed,
            "vocabulary": list(self.vocabulary),
            "doc_ids": list(self.doc_ids),
            "topic_word_counts": self.topic_word_counts.tolist(),
            "doc_topic_counts": self.doc_topic_counts.tolist(),
            "assignments": [z.tolist() for z in self.assignments],
        }

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), ensure_ascii=False, indent=1) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path) -> "TopicModel":
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls(
            n_topics=data["n_topics"],
            alpha=data["alpha"],
            beta=data["beta"],
            vocabulary=tuple(data["vocabulary"]),
            doc_ids=tuple(data["doc_ids"]),
            topic_word_counts=np.asarray(data["topic_word_counts"], dtype=np.int64).reshape(data["n_topics"], -1),
            doc_topic_counts=np.asarray(data["doc_topic_counts"], dtype=np.int64).reshape(-1, data["n_topics"]),
            assignments=[np.asarray(z, dtype=np.int64) for z in data["assignments"]],
            iterations=data["iterations"],
            seed=data["seed"],
        )


@dataclass(frozen=True)
class ProfileReport:
    topics: tuple[tuple[tuple[str, float], ...], ...]

    def to_frame(self) -> pd.DataFrame:
        rows = [
            (k, rank, word, p)
            for k, ranked in enumerate(self.topics)
            for rank, (word, p) in enumerate(ranked, start=1)
        ]
        return pd.DataFrame(rows, columns=["topic_index", "rank", "subcategory", "probability"])


def build_corpus(checkins: pd.DataFrame, city=None, label=None) -> tuple[list[UserDocument], list[str]]:
    """One document per user: the raw subcategory of every check-in, in time order."""
    check_checkin_frame(checkins, ["user_id", "subcategory", "epoch", "city"])
    frame = select_slice(checkins, city, label)
    cols = ["user_id", "epoch", "checkin_id"] if "checkin_id" in frame.columns else ["user_id", "epoch"]
    frame = frame.sort_values(cols, kind="mergesort")
    docs = [
        UserDocument(str(user), tuple(str(s) for s in g["subcategory"]))
        for user, g in frame.groupby("user_id", sort=True)
    ]
    vocabulary = sorted({t for d in docs for t in d.tokens})
    return docs, vocabulary


def _doc_rng(seed: int, doc_id: str, stream: int = 0) -> np.random.Generator:
    digest = hashlib.blake2b(doc_id.encode("utf-8"), digest_size=8).digest()
    return np.random.default_rng([int(seed), int.from_bytes(digest, "little"), stream])


@njit(cache=True)
def _gibbs_sweeps(words, docs, z, ndk, nkw, nk, alpha, beta, uniforms, update_words):
    n_sweeps, n_tokens = uniforms.shape
    k_topics = nk.shape[0]
    vbeta = nkw.shape[1] * beta
    cum = np.empty(k_topics)
    for s in range(n_sweeps):
        for i in range(n_tokens):
            w = words[i]
            d = docs[i]
            k = z[i]
            ndk[d, k] -= 1
            if update_words:
                nkw[k, w] -= 1
                nk[k] -= 1
            total = 0.0
            for t in range(k_topics):
                total += (ndk[d, t] + alpha) * (nkw[t, w] + beta) / (nk[t] + vbeta)
                cum[t] = total
            u = uniforms[s, i] * total
            k = 0
            while k < k_topics - 1 and cum[k] <= u:
                k += 1
            z[i] = k
            ndk[d, k] += 1
            if update_words:
                nkw[k, w] += 1
                nk[k] += 1


def _flatten(documents, index):
    words = np.fromiter((index[t] for d in documents for t in d.tokens), dtype=np.int64)
    docs = np.repeat(np.arange(len(documents), dtype=np.int64), [len(d.tokens) for d in documents])
    return words, docs


def _run_sampler(lengths, rngs, words, docs, z, ndk, nkw, nk, alpha, beta, iterations, update_words, callback=None):
    offsets = np.concatenate([[0], np.cumsum(lengths)]).astype(np.int64)
    n_tokens = int(offsets[-1])
    block = 1 if callback is not None else _BLOCK
    done = 0
    while done < iterations:
        b = min(block, iterations - done)
        uniforms = np.empty((b, n_tokens))
        for d, rng in enumerate(rngs):
            lo, hi = offsets[d], offsets[d + 1]
            if hi > lo:
                uniforms[:, lo:hi] = rng.random((b, hi - lo))
        _gibbs_sweeps(words, docs, z, ndk, nkw, nk, alpha, beta, uniforms, update_words)
        done += b
        if callback is not None:
            callback(done)


def _check_documents(documents) -> list[UserDocument]:
    docs = []
    for i, d in enumerate(documents):
        if isinstance(d, UserDocument):
            docs.append(d)
        else:
            docs.append(UserDocument(str(i), tuple(str(t) for t in d)))
    ids = [d.user_id for d in docs]
    if len(set(ids)) != len(ids):
        raise ValueError("document ids must be unique")
    return sorted(docs, key=lambda d: d.user_id)


def fit_lda(
    documents,
    n_topics: int = 3,
    alpha: float | None = None,
    beta: float = 0.01,
    iterations: int = 1000,
    seed: int = 0,
    vocabulary=None,
    callback=None,
) -> TopicModel:
    """Fit LDA by collapsed Gibbs sampling for a fixed number of sweeps.

    ``alpha`` defaults to 50 / n_topics. ``callback(model)`` is invoked with
    the live model after every sweep (mainly for invariant checks).
    """
    check_positive_int(n_topics, "n_topics")
    check_positive_int(iterations, "iterations")
    if alpha is None:
        alpha = 50.0 / n_topics
    if alpha <= 0 or beta <= 0:
        raise ValueError("alpha and beta must be positive")
    docs = _check_documents(documents)
    if vocabulary is None:
        vocabulary = sorted({t for d in docs for t in d.tokens})
    vocabulary = tuple(vocabulary)
    if not vocabulary:
        raise ValueError("cannot fit LDA on an empty vocabulary")
    index = {w: i for i, w in enumerate(vocabulary)}
    missing = {t for d in docs for t in d.tokens} - set(index)
    if missing:
        raise ValueError(f"tokens outside the vocabulary: {sorted(missing)[:5]}")
    n_tokens = sum(len(d.tokens) for d in docs)
    if n_topics > n_tokens:
        logger.warning("n_topics=%d exceeds the corpus size of %d tokens", n_topics, n_tokens)

    k = int(n_topics)
    rngs = [_doc_rng(seed, d.user_id) for d in docs]
    z_parts = [rng.integers(0, k, size=len(d.tokens)).astype(np.int64) for rng, d in zip(rngs, docs)]
    z = np.concatenate(z_parts) if z_parts else np.empty(0, dtype=np.int64)
    words, doc_of = _flatten(docs, index)
    ndk = np.zeros((len(docs), k), dtype=np.int64)
    nkw = np.zeros((k, len(vocabulary)), dtype=np.int64)
    np.add.at(ndk, (doc_of, z), 1)
    np.add.at(nkw, (z, words), 1)
    nk = nkw.sum(axis=1)

    lengths = [len(d.tokens) for d in docs]
    bounds = np.cumsum([0] + lengths)

    def snapshot(done):
        return TopicModel(
            n_topics=k,
            alpha=float(alpha),
            beta=float(beta),
            vocabulary=vocabulary,
            doc_ids=tuple(d.user_id for d in docs),
            topic_word_counts=nkw.copy(),
            doc_topic_counts=ndk.copy(),
            assignments=[z[bounds[i] : bounds[i + 1]].copy() for i in range(len(docs))],
            iterations=done,
            seed=int(seed),
        )

    hook = None if callback is None else (lambda done: callback(snapshot(done)))
    _run_sampler(lengths, rngs, words, doc_of, z, ndk, nkw, nk, float(alpha), float(beta), iterations, True, hook)
    return snapshot(iterations)


def fold_in(model: TopicModel, documents, iterations: int = 100, seed: int = 0) -> np.ndarray:
    """Topic proportions for new documents with the topic-word counts held fixed.

    Rows follow the input order; unknown tokens are ignored.
    """
    docs_in = [
        d if isinstance(d, UserDocument) else UserDocument(str(i), tuple(str(t) for t in d))
        for i, d in enumerate(documents)
    ]
    index = {w: i for i, w in enumerate(model.vocabulary)}
    docs = [UserDocument(d.user_id, tuple(t for t in d.tokens if t in index)) for d in docs_in]
    k = model.n_topics
    rngs = [_doc_rng(seed, d.user_id, stream=1) for d in docs]
    z_parts = [rng.integers(0, k, size=len(d.tokens)).astype(np.int64) for rng, d in zip(rngs, docs)]
    z = np.concatenate(z_parts) if z_parts else np.empty(0, dtype=np.int64)
    words, doc_of = _flatten(docs, index)
    ndk = np.zeros((len(docs), k), dtype=np.int64)
    np.add.at(ndk, (doc_of, z), 1)
    nkw = model.topic_word_counts.astype(np.int64).copy()
    nk = nkw.sum(axis=1)
    lengths = [len(d.tokens) for d in docs]
    _run_sampler(lengths, rngs, words, doc_of, z, ndk, nkw, nk, model.alpha, model.beta, iterations, False)
    ndk = ndk.astype(float)
    return (ndk + model.alpha) / (ndk.sum(axis=1, keepdims=True) + k * model.alpha)


def top_subcategories(model: TopicModel, m: int = 4) -> ProfileReport:
    """Per topic, the ``m`` most probable subcategories (ties by label)."""
    check_positive_int(m, "m")
    phi = model.topic_word_distribution()
    topics = []
    for row in phi:
        ranked = sorted(zip(model.vocabulary, row.tolist()), key=lambda wp: (-wp[1], wp[0]))
        topics.append(tuple(ranked[:m]))
    return ProfileReport(tuple(topics))


class CheckinLDA(BaseEstimator, TransformerMixin):
    """LDA estimator over user documents.

    ``fit`` accepts a list of :class:`UserDocument`, a list of token lists,
    or a labelled check-in table (one document per user). ``transform``
    returns per-document topic proportions.
    """

    def __init__(self, n_topics=3, alpha=None, beta=0.01, n_iter=1000, random_state=0, transform_iter=100):
        self.n_topics = n_topics
        self.alpha = alpha
        self.beta = beta
        self.n_iter = n_iter
        self.random_state = random_state
        self.transform_iter = transform_iter

    @staticmethod
    def _documents(X):
        if isinstance(X, pd.DataFrame):
            return build_corpus(X)[0]
        return list(X)

    def fit(self, X, y=None):
        seed = 0 if self.random_state is None else int(self.random_state)
        self.model_ = fit_lda(self._documents(X), self.n_topics, self.alpha, self.beta, self.n_iter, seed)
        self.vocabulary_ = self.model_.vocabulary
        self.components_ = self.model_.topic_word_distribution()
        return self

    def transform(self, X) -> np.ndarray:
        check_is_fitted(self, "model_")
        seed = 0 if self.random_state is None else int(self.random_state)
        return fold_in(self.model_, self._documents(X), self.transform_iter, seed)

    def top_subcategories(self, m: int = 4) -> ProfileReport:
        check_is_fitted(self, "model_")
        return top_subcategories(self.model_, m)
