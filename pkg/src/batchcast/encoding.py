"""Bit-exact integer, varint and partition codecs, plus id compression.

All codecs are little-endian in bit order and round-trip exactly:

* intrepr(b, n): n in exactly b bits (bit i = floor(n / 2^i) mod 2).
* varrepr(n), n >= 1: 2*ceil(log2(n+1)) bits; even positions carry a
  continuation flag (1 = more, 0 = last pair), odd positions carry the data
  bits of intrepr(ceil(log2(n+1)), n).
* vnat(n), n >= 0: varrepr(n + 1).  Protocol-level counts may be zero and
  varints start at 1, so counts are shifted by one on the wire.
* partition(mu) over a fixed, shared domain enumeration (x_1..x_|X|):
  varrepr(d) ++ varrepr(w) ++ |mu(x_|X|)| .. |mu(x_1)| as d-bit ints
  ++ z_|mu| .. z_1 as w-bit ints, where the z_i enumerate each mu(x) in
  ascending order, concatenated in domain order; d = ceil(log2(|mu|+1)),
  w = ceil(log2(max mu + 1)).  When max mu = 0 the width is clamped to 1 so
  the varint stays in its domain (w >= 1); for max mu >= 1 the encoded length
  is exactly |mu|*w + |X|*d + 2*ceil(log2(w+1)) + 2*ceil(log2(d+1)).
"""

from __future__ import annotations

from .bits import BitReader, BitWriter, Bits, DecodeError


def _width(n: int) -> int:
    """ceil(log2(n + 1)): bits needed to represent 0..n."""
    return n.bit_length()


# ---------------------------------------------------------------------------
# integer encoding

def int_repr(width: int, n: int) -> Bits:
    w = BitWriter()
    w.write_uint(width, n)
    return w.to_bits()


def int_read(width: int, s: Bits) -> int:
    if len(s) < width:
        raise DecodeError("string shorter than integer width")
    return BitReader.from_bits(s).read_uint(width)


def int_encode(width: int, s: Bits, n: int) -> Bits:
    return int_repr(width, n) + s


def int_decode(width: int, t: Bits) -> tuple[Bits, int]:
    if len(t) < width:
        raise DecodeError("string shorter than integer width")
    return t[width:], int_read(width, t)


# ---------------------------------------------------------------------------
# varint encoding

def write_varint(w: BitWriter, n: int):
    if n < 1:
        raise ValueError("varint domain is n >= 1")
    data_len = _width(n)
    for i in range(data_len):
        w.write_bit(1 if i < data_len - 1 else 0)
        w.write_bit((n >> i) & 1)


def read_varint(r: BitReader) -> int:
    n = 0
    i = 0
    while True:
        cont = r.read_bit()
        n |= r.read_bit() << i
        i += 1
        if cont == 0:
            return n


def var_repr(n: int) -> Bits:
    w = BitWriter()
    write_varint(w, n)
    return w.to_bits()


def varint_encode(s: Bits, n: int) -> Bits:
    return var_repr(n) + s


def varint_decode(t: Bits) -> tuple[Bits, int]:
    r = BitReader.from_bits(t)
    n = read_varint(r)
    return r.read_rest(), n


def write_vnat(w: BitWriter, n: int):
    """Nonnegative count, shifted into the varint domain."""
    write_varint(w, n + 1)


def read_vnat(r: BitReader) -> int:
    n = read_varint(r)
    if n < 1:
        raise DecodeError("bad vnat")
    return n - 1


# ---------------------------------------------------------------------------
# partition encoding

def partition_size(mu: dict) -> int:
    return sum(len(v) for v in mu.values())


def partition_max(mu: dict) -> int:
    return max(max(v) for v in mu.values() if v)


def write_partition(w: BitWriter, mu: dict, domains: list):
    """Encode an integer partition over the shared domain enumeration.

    mu maps a subset of `domains` to finite sets of nonnegative integers;
    domains absent from mu encode as empty sets.  Requires |mu| >= 1.
    """
    total = partition_size(mu)
    if total < 1:
        raise ValueError("partition must contain at least one integer")
    d = _width(total)
    width = max(_width(partition_max(mu)), 1)
    write_varint(w, d)
    write_varint(w, width)
    counts = [len(mu.get(x, ())) for x in domains]
    for y in reversed(counts):
        w.write_uint(d, y)
    zs: list[int] = []
    for x in domains:
        zs.extend(sorted(mu.get(x, ())))
    for z in reversed(zs):
        w.write_uint(width, z)


def read_partition(r: BitReader, domains: list) -> dict:
    d = read_varint(r)
    width = read_varint(r)
    counts = [r.read_uint(d) for _ in domains]
    counts.reverse()
    total = sum(counts)
    if total < 1:
        raise DecodeError("empty partition")
    zs = [r.read_uint(width) for _ in range(total)]
    zs.reverse()
    mu: dict = {}
    pos = 0
    for x, y in zip(domains, counts):
        if y:
            group = zs[pos:pos + y]
            if len(set(group)) != y:
                raise DecodeError("repeated index in partition group")
            mu[x] = set(group)
            pos += y
    if partition_size(mu) != total:
        raise DecodeError("inconsistent partition counts")
    return mu


def partition_encode(mu: dict, domains: list) -> Bits:
    w = BitWriter()
    write_partition(w, mu, domains)
    return w.to_bits()


def partition_decode(t: Bits, domains: list) -> dict:
    return read_partition(BitReader.from_bits(t), domains)


def partition_encoded_len(size: int, max_index: int, n_domains: int) -> int:
    """Closed form of the encoded length, for max_index >= 1."""
    w = _width(max_index)
    d = _width(size)
    return size * w + n_domains * d + 2 * _width(w) + 2 * _width(d)


# ---------------------------------------------------------------------------
# id compression

def compress_ids(ids) -> dict:
    """Sorted duplicate-free (domain, index) sequence -> {domain: {index}}."""
    out: dict = {}
    for domain, index in ids:
        out.setdefault(domain, set()).add(index)
    return out


def expand_ids(compressed: dict) -> list:
    ids = [(domain, index)
           for domain, indices in compressed.items()
           for index in indices]
    ids.sort()
    return ids
