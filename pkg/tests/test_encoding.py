"""Integer, varint and partition codecs: worked examples and round-trips."""

import random

from batchcast.bits import BitReader, BitWriter, Bits, DecodeError
from batchcast.encoding import (compress_ids, expand_ids, int_decode,
                                int_encode, int_repr, partition_decode,
                                partition_encode, partition_encoded_len,
                                partition_size, varint_decode, varint_encode,
                                var_repr)
import pytest


def test_int_repr_examples():
    # floor(5 / 2^i) mod 2 for i = 0, 1, 2
    assert int_repr(3, 5) == (1, 0, 1)
    assert int_repr(1, 0) == (0,)
    assert int_repr(4, 5) == (1, 0, 1, 0)


def test_int_encode_prepends_representation():
    assert int_encode(3, Bits((0,)), 5) == (1, 0, 1, 0)
    assert int_decode(3, Bits((1, 0, 1, 0))) == (Bits((0,)), 5)
    assert int_encode(1, Bits(), 0) == (0,)


def test_int_encode_rejects_out_of_range():
    with pytest.raises(ValueError):
        int_encode(3, Bits(), 8)
    with pytest.raises(DecodeError):
        int_decode(5, Bits((1, 0)))


def test_varint_examples():
    assert var_repr(1) == (0, 1)
    assert var_repr(2) == (1, 0, 0, 1)
    assert varint_decode(Bits((0, 1, 1, 1))) == (Bits((1, 1)), 1)


def test_varint_length_formula():
    for n in (1, 2, 3, 7, 8, 1023, 1024, 10**9):
        assert len(var_repr(n)) == 2 * (n).bit_length()


def test_varint_rejects_unparseable():
    with pytest.raises(ValueError):
        varint_encode(Bits(), 0)
    with pytest.raises(DecodeError):
        varint_decode(Bits((1, 1, 1, 0)))  # every even position continues


def test_roundtrips_randomized():
    rng = random.Random(0xC0DEC)
    for _ in range(2000):
        width = rng.randint(1, 40)
        n = rng.randrange(2 ** width)
        tail = Bits(rng.randrange(2) for _ in range(rng.randint(0, 12)))
        assert int_decode(width, int_encode(width, tail, n)) == (tail, n)
        m = rng.randint(1, 2 ** 40)
        assert varint_decode(varint_encode(tail, m)) == (tail, m)


def random_partition(rng, domains, max_index, nonempty=True):
    mu = {}
    for d in domains:
        if rng.random() < 0.7:
            k = rng.randint(0 if not nonempty else 1, 6)
            if k:
                mu[d] = set(rng.sample(range(max_index + 1),
                                       min(k, max_index + 1)))
    if nonempty and not any(mu.values()):
        mu[domains[0]] = {rng.randint(0, max_index)}
    return {d: v for d, v in mu.items() if v}


def test_partition_roundtrip_randomized():
    rng = random.Random(0xBEEF)
    for _ in range(500):
        domains = list(range(rng.randint(1, 6)))
        mu = random_partition(rng, domains, rng.randint(0, 4000))
        assert partition_decode(partition_encode(mu, domains), domains) == mu


def test_partition_exact_length_example():
    # |X| = 4, |mu| = 8, max mu = 1023: 80 + 16 + 8 + 6 = 110 bits
    domains = [0, 1, 2, 3]
    mu = {0: {5, 1023}, 1: {0, 7}, 2: {3, 9}, 3: {2, 500}}
    encoded = partition_encode(mu, domains)
    assert len(encoded) == 110
    assert partition_encoded_len(8, 1023, 4) == 110


def test_partition_length_matches_closed_formula():
    rng = random.Random(7)
    for _ in range(300):
        domains = list(range(rng.randint(1, 5)))
        mu = random_partition(rng, domains, rng.randint(1, 900))
        if max(max(v) for v in mu.values()) == 0:
            continue  # width clamp case, below
        expected = partition_encoded_len(
            partition_size(mu), max(max(v) for v in mu.values()), len(domains))
        assert len(partition_encode(mu, domains)) == expected


def test_partition_minimal_case_roundtrips():
    # a single index 0 forces the width clamp (max mu = 0)
    domains = [0]
    mu = {0: {0}}
    assert partition_decode(partition_encode(mu, domains), domains) == mu


def test_partition_amortized_bits_per_element():
    # 4096 indices below 1024 over 4 domains: about 10 bits per element
    rng = random.Random(99)
    domains = [0, 1, 2, 3]
    per_domain = 1024
    mu = {d: set(range(per_domain)) for d in domains}
    encoded = partition_encode(mu, domains)
    assert len(encoded) / partition_size(mu) <= 10 + 0.1
    assert partition_decode(encoded, domains) == mu


def test_partition_rejects_empty():
    with pytest.raises(ValueError):
        partition_encode({}, [0, 1])


def test_partition_decode_rejects_malformed():
    with pytest.raises(DecodeError):
        partition_decode(Bits((1, 1)), [0])


def test_compress_expand_examples():
    ids = [(0, 0), (0, 2), (1, 1)]
    assert compress_ids(ids) == {0: {0, 2}, 1: {1}}
    assert expand_ids({1: {1}, 0: {0, 2}}) == ids
    assert expand_ids(compress_ids(ids)) == ids


def test_compress_roundtrip_through_partition():
    # absent domains occupy zero-length slots in the shared enumeration
    domains = [0, 1, 2, 3]
    ids = [(0, 4), (2, 1), (2, 9)]
    mu = compress_ids(ids)
    decoded = partition_decode(partition_encode(mu, domains), domains)
    assert expand_ids(decoded) == ids


def test_compress_expand_randomized():
    rng = random.Random(5)
    for _ in range(200):
        ids = sorted({(rng.randint(0, 3), rng.randint(0, 999))
                      for _ in range(rng.randint(1, 50))})
        assert expand_ids(compress_ids(ids)) == ids


def test_writer_reader_agree_with_bits_api():
    w = BitWriter()
    w.write_uint(3, 5)
    w.write_bytes(b"\xff\x01")
    w.write_bit(1)
    r = BitReader(w.to_bytes(), len(w))
    assert r.read_uint(3) == 5
    assert r.read_bytes(2) == b"\xff\x01"
    assert r.read_bit() == 1
    assert r.remaining == 0
    with pytest.raises(DecodeError):
        r.read_bit()
