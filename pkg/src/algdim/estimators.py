"""scikit-learn style wrappers around the dimension estimators.

The estimators take the natural input of each method (a sequence for the
complexity and learner estimators, a trie for the cover-based ones), validate
it, and expose results as trailing-underscore attributes.  ``get_params`` /
``set_params`` / ``clone`` come from :class:`sklearn.base.BaseEstimator`.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Optional

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .coding import ArithmeticCodec
from .core import PrefixTrie, as_fraction
from .dimension import box_dimension_estimate, compression_dim_estimate, hausdorff_estimate
from .learners import Learner, detection_report
from .sequences import SequenceSource, from_bits

__all__ = [
    "BoxDimensionEstimator",
    "CompressionDimensionEstimator",
    "HausdorffDimensionEstimator",
    "LearnerDimensionEstimator",
    "YesNoTransformer",
    "check_bit_matrix",
    "check_sequence",
    "check_trie",
]


def check_sequence(X, horizon: Optional[int] = None) -> tuple[SequenceSource, int]:
    """Coerce ``X`` to a :class:`SequenceSource` and resolve the horizon.

    Accepts a source, a bit string, or a 1-d array-like of 0/1.  Infinite sources
    need an explicit ``horizon``.
    """
    if not isinstance(X, SequenceSource):
        if isinstance(X, str):
            X = from_bits(X)
        else:
            arr = np.asarray(X)
            if arr.ndim != 1:
                raise ValueError(f"expected a single sequence (1-d), got shape {arr.shape}")
            if arr.size and not np.isin(arr, (0, 1)).all():
                raise ValueError("sequence entries must be 0 or 1")
            X = from_bits(arr.astype(np.uint8))
    if horizon is None:
        if X.length is None:
            raise ValueError("horizon is required for an infinite sequence")
        horizon = X.length
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    if X.length is not None and horizon > X.length:
        raise ValueError(f"horizon {horizon} exceeds sequence length {X.length}")
    return X, int(horizon)


def check_trie(G) -> PrefixTrie:
    """Accept a :class:`PrefixTrie` or an iterable of equal-length bit strings."""
    if isinstance(G, PrefixTrie):
        trie = G
    else:
        strings = list(G)
        if not strings:
            raise ValueError("empty slice")
        lengths = {len(w) for w in strings}
        if len(lengths) != 1:
            raise ValueError("slice strings must share one length; use PrefixTrie.from_cylinders")
        trie = PrefixTrie(strings, lengths.pop())
    if not trie:
        raise ValueError("empty trie")
    return trie


def check_bit_matrix(X) -> np.ndarray:
    """2-d uint8 array of 0/1 with one sequence per row."""
    arr = np.asarray(X)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2:
        raise ValueError(f"expected a 2-d array of bits, got shape {arr.shape}")
    if arr.size and not np.isin(arr, (0, 1)).all():
        raise ValueError("entries must be 0 or 1")
    return arr.astype(np.uint8)


class CompressionDimensionEstimator(BaseEstimator):
    """Coder-based proxy for ``dim`` (``mode='liminf'``) or ``Dim`` (``'limsup'``).

    Parameters
    ----------
    order : int
        Context order of the KT model; 0 is the memoryless coder.
    horizon : int or None
        Number of bits to use; defaults to the full length of finite input.
    mode : {'liminf', 'limsup'}
    tail_fraction : float
        Fraction of the horizon (at its end) over which extremes are taken.
    """

    def __init__(self, order: int = 0, horizon: Optional[int] = None, mode: str = "liminf",
                 tail_fraction: float = 0.5, verify: bool = True):
        self.order = order
        self.horizon = horizon
        self.mode = mode
        self.tail_fraction = tail_fraction
        self.verify = verify

    def fit(self, X, y=None):
        X, horizon = check_sequence(X, self.horizon)
        self.result_ = compression_dim_estimate(X, ArithmeticCodec(self.order), horizon,
                                                self.mode, self.tail_fraction, self.verify)
        self.estimate_ = self.result_.estimate
        self.liminf_ = self.result_.liminf
        self.limsup_ = self.result_.limsup
        return self


class LearnerDimensionEstimator(BaseEstimator):
    """Dimension estimate read off a learner's yes-density along a sequence.

    ``s_weak_ = 1 - tail max`` and ``s_strong_ = 1 - tail min`` of the path average.
    """

    def __init__(self, learner: Optional[Learner] = None, horizon: Optional[int] = None,
                 tail_fraction: float = 0.5):
        self.learner = learner
        self.horizon = horizon
        self.tail_fraction = tail_fraction

    def fit(self, X, y=None):
        if self.learner is None:
            raise ValueError("learner must be set")
        X, horizon = check_sequence(X, self.horizon)
        self.trace_ = detection_report(self.learner, X, horizon, "s_learn", self.tail_fraction)
        self.s_weak_ = self.trace_.s_weak
        self.s_strong_ = self.trace_.s_strong
        return self


class HausdorffDimensionEstimator(BaseEstimator):
    """Root of ``H^s_k(gamma) = 1`` bracketed to width ``tol``."""

    def __init__(self, k: int = 6, tol="1/1024"):
        self.k = k
        self.tol = tol

    def fit(self, G, y=None):
        trie = check_trie(G)
        lo, hi = hausdorff_estimate(trie, self.k, as_fraction(self.tol))
        self.interval_ = (lo, hi)
        self.dimension_ = float((lo + hi) / 2)
        return self


class BoxDimensionEstimator(BaseEstimator):
    """Upper box-counting surrogate: max of ``log2 |gamma|n| / n`` over ``n >= n_min``."""

    def __init__(self, n_min: int = 1):
        self.n_min = n_min

    def fit(self, G, y=None):
        summary = box_dimension_estimate(check_trie(G), self.n_min)
        self.values_ = summary.values
        self.dimension_ = summary.estimate
        return self


class YesNoTransformer(TransformerMixin, BaseEstimator):
    """Map each row of bits to the learner's answers on its prefixes.

    Column ``j`` of the output is the answer at the prefix of length ``j + 1``;
    the answer at the empty prefix is the same for every row and is available
    as ``root_answer_`` after fitting.
    """

    def __init__(self, learner: Optional[Learner] = None):
        self.learner = learner

    def fit(self, X=None, y=None):
        if self.learner is None:
            raise ValueError("learner must be set")
        _, yes = self.learner.start()
        self.root_answer_ = bool(yes)
        return self

    def transform(self, X):
        check_is_fitted(self, "root_answer_")
        arr = check_bit_matrix(X)
        out = np.zeros(arr.shape, dtype=np.uint8)
        for i, row in enumerate(arr):
            state, _ = self.learner.start()
            for j, b in enumerate(row.tolist()):
                state, yes = self.learner.step(state, b)
                out[i, j] = yes
        return out
