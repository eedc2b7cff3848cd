"""Deterministic binary sequence sources and sequence files.

Every source supports random access through a vectorized index function, so
``X.bits(n)`` for ``n`` in the hundreds of thousands is a single numpy pass.

Pseudorandom bits come from counter-mode SplitMix64: the ``i``-th 64-bit word
is ``mix(seed + (i + 1) * 0x9E3779B97F4A7C15 mod 2**64)`` with the standard
SplitMix64 finalizer (shifts 30, 27, 31; multipliers 0xBF58476D1CE4E5B9 and
0x94D049BB133111EB).  Bit ``i`` of ``bernoulli_seq(a/b, ...)`` is 1 iff
``word_i * b < a * 2**64``, which is evaluated as ``word_i < ceil(a * 2**64 / b)``.
"""

from __future__ import annotations

from fractions import Fraction
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from .core import as_fraction, check_bits

__all__ = [
    "SequenceFormatError",
    "SequenceSource",
    "bernoulli_seq",
    "dilute",
    "from_bits",
    "periodic",
    "read_sequence",
    "splitmix64",
    "write_sequence",
]

GOLDEN = 0x9E3779B97F4A7C15
MIX1 = 0xBF58476D1CE4E5B9
MIX2 = 0x94D049BB133111EB
MASK64 = (1 << 64) - 1

PACKED_MAGIC = b"ALGDIM-PACKED"


def splitmix64(seed: int, index: np.ndarray) -> np.ndarray:
    """Counter-mode SplitMix64 words for the given indices (uint64 array)."""
    idx = np.asarray(index, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = np.uint64(seed & MASK64) + (idx + np.uint64(1)) * np.uint64(GOLDEN)
        z = (z ^ (z >> np.uint64(30))) * np.uint64(MIX1)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(MIX2)
        z = z ^ (z >> np.uint64(31))
    return z


class SequenceSource:
    """A binary sequence with random access and a provenance descriptor.

    ``index_fn`` maps an int64 index array to a uint8 bit array.  ``length`` is
    ``None`` for infinite sequences.
    """

    def __init__(self, index_fn: Callable[[np.ndarray], np.ndarray], provenance: dict,
                 length: Optional[int] = None):
        self._fn = index_fn
        self.provenance = dict(provenance)
        self.length = length

    def __repr__(self) -> str:
        desc = ",".join(f"{k}={v}" for k, v in self.provenance.items())
        return f"SequenceSource({desc})"

    def _check(self, n: int) -> None:
        if n < 0:
            raise ValueError("negative length")
        if self.length is not None and n > self.length:
            raise ValueError(f"sequence has only {self.length} bits, {n} requested")

    def __getitem__(self, i: int) -> int:
        if i < 0:
            raise IndexError("negative index")
        if self.length is not None and i >= self.length:
            raise IndexError(i)
        return int(self._fn(np.array([i], dtype=np.int64))[0])

    def bits_at(self, index) -> np.ndarray:
        return self._fn(np.asarray(index, dtype=np.int64)).astype(np.uint8)

    def bits(self, n: int) -> np.ndarray:
        """First ``n`` bits as a uint8 array."""
        self._check(n)
        return self.bits_at(np.arange(n, dtype=np.int64))

    def prefix(self, n: int) -> str:
        """``X|n`` as a bit string."""
        return self.bits(n).tobytes().translate(_TO_ASCII).decode("ascii")

    def __len__(self) -> int:
        if self.length is None:
            raise TypeError("infinite sequence has no len()")
        return self.length


_TO_ASCII = bytes.maketrans(b"\x00\x01", b"01")


def from_bits(bits, provenance: Optional[dict] = None) -> SequenceSource:
    """Finite source over an explicit bit string or 0/1 array."""
    if isinstance(bits, str):
        check_bits(bits)
        arr = np.frombuffer(bits.encode("ascii"), dtype=np.uint8) - ord("0")
    else:
        arr = np.asarray(bits, dtype=np.uint8)
        if arr.ndim != 1 or (arr > 1).any():
            raise ValueError("bits must be a 1-d array of 0/1")
    arr = arr.copy()
    arr.setflags(write=False)
    return SequenceSource(lambda idx: arr[idx], provenance or {"generator": "explicit"}, len(arr))


def bernoulli_seq(p, seed: int, length: Optional[int] = None) -> SequenceSource:
    """Reproducible Bernoulli(p) bits (``P(bit = 1) = p``)."""
    p = as_fraction(p)
    if not 0 <= p <= 1:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    a, b = p.numerator, p.denominator
    threshold = -(-(a << 64) // b)
    prov = {"generator": "bernoulli", "p": str(p), "seed": int(seed)}
    if length is not None:
        prov["len"] = int(length)

    if threshold > MASK64:
        fn = lambda idx: np.ones(np.shape(idx), dtype=np.uint8)  # noqa: E731
    elif threshold == 0:
        fn = lambda idx: np.zeros(np.shape(idx), dtype=np.uint8)  # noqa: E731
    else:
        t = np.uint64(threshold)
        fn = lambda idx: (splitmix64(seed, idx) < t).astype(np.uint8)  # noqa: E731
    return SequenceSource(fn, prov, length)


def periodic(pattern: str) -> SequenceSource:
    """``pattern`` repeated forever."""
    check_bits(pattern)
    if not pattern:
        raise ValueError("pattern must be nonempty")
    arr = np.frombuffer(pattern.encode("ascii"), dtype=np.uint8) - ord("0")
    period = len(arr)
    return SequenceSource(lambda idx: arr[np.asarray(idx) % period],
                          {"generator": "periodic", "pattern": pattern})


def dilute(X: SequenceSource, k: int) -> SequenceSource:
    """Insert ``k - 1`` zeros after every bit of ``X``.

    Output position ``m`` carries ``X[m // k]`` when ``m % k == 0`` and 0 otherwise.
    """
    if k < 1:
        raise ValueError("dilution factor must be >= 1")
    if k == 1:
        return X

    def fn(idx):
        idx = np.asarray(idx, dtype=np.int64)
        out = np.zeros(idx.shape, dtype=np.uint8)
        hit = idx % k == 0
        if hit.any():
            out[hit] = X.bits_at(idx[hit] // k)
        return out

    length = None if X.length is None else X.length * k
    return SequenceSource(fn, {"generator": "dilute", "k": k, "source": X.provenance}, length)


class SequenceFormatError(ValueError):
    def __init__(self, path, line: int, column: int, char: str):
        super().__init__(f"{path}:{line}:{column}: invalid character {char!r} in sequence file")
        self.path, self.line, self.column = path, line, column


def write_sequence(path, X, n: int, packed: bool = False, line_width: int = 80) -> None:
    """Write the first ``n`` bits of ``X`` as ASCII (wrapped lines) or packed binary.

    The packed form is a header line ``ALGDIM-PACKED <n>`` followed by
    ``ceil(n / 8)`` bytes, most significant bit first, zero padded.
    """
    bits = X.bits(n) if isinstance(X, SequenceSource) else from_bits(X).bits(n)
    path = Path(path)
    if packed:
        path.write_bytes(PACKED_MAGIC + b" %d\n" % n + np.packbits(bits).tobytes())
        return
    text = bits.tobytes().translate(_TO_ASCII).decode("ascii")
    lines = [text[i:i + line_width] for i in range(0, len(text), line_width)] if line_width else [text]
    path.write_text("\n".join(lines) + "\n", encoding="ascii")


def read_sequence(path) -> SequenceSource:
    """Read a sequence file written by :func:`write_sequence` (either variant)."""
    path = Path(path)
    raw = path.read_bytes()
    if raw.startswith(PACKED_MAGIC):
        header, _, body = raw.partition(b"\n")
        try:
            n = int(header[len(PACKED_MAGIC):].strip())
        except ValueError:
            raise SequenceFormatError(path, 1, len(PACKED_MAGIC) + 1, header[len(PACKED_MAGIC):].decode("latin-1")[:1])
        if len(body) < (n + 7) // 8:
            raise ValueError(f"{path}: packed body holds fewer than {n} bits")
        bits = np.unpackbits(np.frombuffer(body, dtype=np.uint8))[:n]
        return from_bits(bits, {"generator": "file", "path": str(path)})
    line, col = 1, 0
    chunks = []
    for ch in raw.decode("latin-1"):
        col += 1
        if ch == "\n":
            line, col = line + 1, 0
        elif ch in "\r\t ":
            continue
        elif ch in "01":
            chunks.append(ch)
        else:
            raise SequenceFormatError(path, line, col, ch)
    return from_bits("".join(chunks), {"generator": "file", "path": str(path)})
