"""Circular (Morgan-style) fingerprints and Tanimoto similarity."""

import hashlib
import struct
from dataclasses import dataclass

import numpy as np

from .. import _kernels


class WidthMismatch(ValueError):
    pass


def _hash(values):
    data = struct.pack(f"<{len(values)}q", *values)
    return int.from_bytes(hashlib.blake2b(data, digest_size=8).digest(), "little")


def _element_code(symbol):
    return int.from_bytes(symbol.encode().ljust(2, b"\0"), "little")


@dataclass(frozen=True)
class Fingerprint:
    """Bit vector of width ``nbits`` stored as a Python int."""

    bits: int
    nbits: int = 2048
    radius: int = 2

    def __post_init__(self):
        if self.nbits < 1 or self.nbits & (self.nbits - 1):
            raise ValueError(f"bit width must be a power of two, got {self.nbits}")
        if self.bits < 0 or self.bits >> self.nbits:
            raise ValueError("bits outside the fingerprint width")

    @classmethod
    def from_on_bits(cls, on_bits, nbits=2048, radius=2):
        value = 0
        for b in on_bits:
            value |= 1 << b
        return cls(value, nbits, radius)

    def on_bits(self):
        return [i for i in range(self.nbits) if self.bits >> i & 1]

    def count(self):
        return self.bits.bit_count()

    def to_words(self):
        n_words = max(1, (self.nbits + 63) // 64)
        return np.frombuffer(self.bits.to_bytes(8 * n_words, "little"), dtype="<u8")


def fingerprint(mol, radius=2, nbits=2048):
    """Morgan fingerprint: iterated neighbourhood hashing of atom invariants."""
    adj = mol.neighbors()
    ids = [
        _hash(
            (
                _element_code(a.element),
                len(adj[i]),
                a.formal_charge,
                int(a.aromatic),
                a.explicit_h,
            )
        )
        for i, a in enumerate(mol.atoms)
    ]
    bits = 0
    for ident in ids:
        bits |= 1 << (ident % nbits)
    for level in range(1, radius + 1):
        new_ids = []
        for i in range(len(ids)):
            env = sorted((o.value, ids[j]) for j, o in adj[i])
            flat = [level, ids[i] & 0x7FFFFFFFFFFFFFFF]
            for order, nid in env:
                flat.extend((order, nid & 0x7FFFFFFFFFFFFFFF))
            new_ids.append(_hash(flat))
        ids = new_ids
        for ident in ids:
            bits |= 1 << (ident % nbits)
    return Fingerprint(bits, nbits, radius)


def tanimoto(a, b):
    """|a AND b| / |a OR b|; 1.0 when both are empty."""
    if a.nbits != b.nbits:
        raise WidthMismatch(f"fingerprint widths differ: {a.nbits} vs {b.nbits}")
    union = (a.bits | b.bits).bit_count()
    if union == 0:
        return 1.0
    return (a.bits & b.bits).bit_count() / union


def pack(fps):
    """Stack fingerprints into a (n, words) uint64 matrix."""
    if not fps:
        return np.zeros((0, 1), dtype=np.uint64)
    widths = {fp.nbits for fp in fps}
    if len(widths) != 1:
        raise WidthMismatch(f"mixed fingerprint widths {sorted(widths)}")
    return np.ascontiguousarray(np.stack([fp.to_words() for fp in fps]).astype(np.uint64))


def tanimoto_matrix(xs, ys):
    """Pairwise Tanimoto similarities, shape (len(xs), len(ys))."""
    A, B = pack(xs), pack(ys)
    if xs and ys and A.shape[1] != B.shape[1]:
        raise WidthMismatch("fingerprint widths differ")
    return _kernels.tanimoto_matrix(A, B)
