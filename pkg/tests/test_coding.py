import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from algdim.coding import ArithmeticCodec, CoderRoundTripError, ContextKT, kt_codelength


@given(st.lists(st.integers(0, 1), max_size=400), st.integers(0, 3))
@settings(max_examples=80, deadline=None)
def test_round_trip(bits, order):
    codec = ArithmeticCodec(order)
    code = codec.roundtrip(bits)
    assert len(code) <= kt_codelength(bits, order) + 3


@given(st.lists(st.integers(0, 1), min_size=1, max_size=200))
@settings(max_examples=40, deadline=None)
def test_checkpoint_lengths_match_prefix_encodes(bits):
    codec = ArithmeticCodec()
    _, lengths = codec.encode(bits, checkpoints=True)
    for n in range(len(bits) + 1):
        assert lengths[n] == len(codec.encode(bits[:n]))


def test_kt_frequencies():
    m = ContextKT()
    assert m.freqs() == (1, 2)
    m.update(0)
    m.update(0)
    assert m.freqs() == (5, 6)


def test_zeros_compress_logarithmically():
    assert len(ArithmeticCodec().encode(np.zeros(200_000, dtype=np.uint8))) <= 16


def test_round_trip_failure_raises():
    codec = ArithmeticCodec()
    code = codec.encode([1, 0, 1, 1, 0, 0, 1])
    with pytest.raises(CoderRoundTripError):
        codec.roundtrip([1, 0, 1, 1, 0, 0, 0], code)
