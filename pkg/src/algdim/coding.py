"""Adaptive binary arithmetic coding with Krichevsky-Trofimov (add-1/2) estimates.

The coder is the classic integer range coder with underflow ("pending bit")
handling.  Probabilities are ``P(0) = (2 n0 + 1) / (2 n + 2)`` per context, i.e.
the KT estimator scaled to integers.  Because the encoder is online, the length
of the code for every prefix ``X|n`` (including termination) is available as a
snapshot while encoding ``X`` once.
"""

from __future__ import annotations

import math
from typing import Iterable, Optional

import numpy as np

__all__ = ["ArithmeticCodec", "CoderRoundTripError", "ContextKT", "KTModel", "kt_codelength"]

STATE_BITS = 64
FULL = 1 << STATE_BITS
HALF = FULL >> 1
QUARTER = HALF >> 1
MASK = FULL - 1


class CoderRoundTripError(RuntimeError):
    pass


class ContextKT:
    """KT estimator conditioned on the previous ``order`` bits.

    ``order=0`` is the memoryless estimator.  Before ``order`` bits are seen the
    context is the (shorter) available history.
    """

    def __init__(self, order: int = 0):
        if order < 0:
            raise ValueError("order must be >= 0")
        self.order = order
        self.name = "kt" if order == 0 else f"kt-order{order}"
        self.reset()

    def reset(self) -> None:
        self._counts: dict = {}
        self._ctx = 0
        self._seen = 0

    def _key(self):
        return (min(self._seen, self.order), self._ctx)

    def freqs(self) -> tuple[int, int]:
        """``(f0, total)`` for the next symbol."""
        c = self._counts.get(self._key())
        if c is None:
            return 1, 2
        return 2 * c[0] + 1, 2 * (c[0] + c[1]) + 2

    def update(self, bit: int) -> None:
        key = self._key()
        c = self._counts.get(key)
        if c is None:
            c = self._counts[key] = [0, 0]
        c[bit] += 1
        if self.order:
            self._ctx = ((self._ctx << 1) | bit) & ((1 << self.order) - 1)
            self._seen += 1


KTModel = ContextKT


def kt_codelength(bits: Iterable[int], order: int = 0) -> float:
    """Ideal code length ``-log2 P(bits)`` under the (context) KT estimator."""
    model = ContextKT(order)
    total = 0.0
    for b in bits:
        f0, t = model.freqs()
        total -= math.log2((f0 if b == 0 else t - f0) / t)
        model.update(int(b))
    return total


class ArithmeticCodec:
    """Encoder/decoder pair driven by a :class:`ContextKT` model."""

    def __init__(self, order: int = 0):
        self.order = order
        self.name = ContextKT(order).name

    def encode(self, bits, checkpoints: bool = False):
        """Encode ``bits``; return the code as a uint8 array.

        With ``checkpoints=True`` also return ``lengths`` where ``lengths[n]`` is
        the exact length of the terminated code for the first ``n`` bits.
        """
        model = ContextKT(self.order)
        out: list[int] = []
        low, high, pending = 0, MASK, 0
        lengths = [2] if checkpoints else None
        for b in bits:
            b = int(b)
            f0, total = model.freqs()
            model.update(b)
            rng = high - low + 1
            split = low + rng * f0 // total
            if b:
                low = split
            else:
                high = split - 1
            while True:
                if high < HALF:
                    out.append(0)
                    if pending:
                        out.extend([1] * pending)
                        pending = 0
                elif low >= HALF:
                    out.append(1)
                    if pending:
                        out.extend([0] * pending)
                        pending = 0
                    low -= HALF
                    high -= HALF
                elif low >= QUARTER and high < HALF + QUARTER:
                    pending += 1
                    low -= QUARTER
                    high -= QUARTER
                else:
                    break
                low <<= 1
                high = (high << 1) | 1
            if checkpoints:
                lengths.append(len(out) + pending + 2)
        pending += 1
        if low < QUARTER:
            out.append(0)
            out.extend([1] * pending)
        else:
            out.append(1)
            out.extend([0] * pending)
        code = np.array(out, dtype=np.uint8)
        if checkpoints:
            return code, np.array(lengths, dtype=np.int64)
        return code

    def decode(self, code, n: int) -> np.ndarray:
        """Decode ``n`` bits from ``code``."""
        code = [int(c) for c in code]
        model = ContextKT(self.order)
        pos = 0

        def nextbit():
            nonlocal pos
            b = code[pos] if pos < len(code) else 0
            pos += 1
            return b

        value = 0
        for _ in range(STATE_BITS):
            value = (value << 1) | nextbit()
        low, high = 0, MASK
        out = np.empty(n, dtype=np.uint8)
        for i in range(n):
            f0, total = model.freqs()
            rng = high - low + 1
            split = low + rng * f0 // total
            if value >= split:
                b = 1
                low = split
            else:
                b = 0
                high = split - 1
            model.update(b)
            out[i] = b
            while True:
                if high < HALF:
                    pass
                elif low >= HALF:
                    low -= HALF
                    high -= HALF
                    value -= HALF
                elif low >= QUARTER and high < HALF + QUARTER:
                    low -= QUARTER
                    high -= QUARTER
                    value -= QUARTER
                else:
                    break
                low <<= 1
                high = (high << 1) | 1
                value = (value << 1) | nextbit()
        return out

    def codelength(self, bits) -> int:
        return len(self.encode(bits))

    def roundtrip(self, bits, code: Optional[np.ndarray] = None) -> np.ndarray:
        """Encode (unless ``code`` is given), decode, and raise on any mismatch."""
        bits = np.asarray(bits, dtype=np.uint8)
        if code is None:
            code = self.encode(bits)
        back = self.decode(code, len(bits))
        if not np.array_equal(back, bits):
            bad = int(np.argmax(back != bits))
            raise CoderRoundTripError(f"{self.name}: decoded bit {bad} differs")
        return code
