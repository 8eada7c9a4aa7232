"""Keyed pseudorandom function shared by both communicating parties.

Everything pseudorandom in this package (per-step masks, payload padding,
in-pool draws, toy-model logits) is derived from one primitive so that a
run is reproducible across builds and machines.  The primitive name is
exported and echoed into every report header.
"""

from __future__ import annotations

import hashlib
import struct

# Pinned primitive. Changing this breaks sender/receiver agreement.
PRF_NAME = "blake2b-keyed"

_U64 = struct.Struct(">Q")


def _digest(key: bytes, data: bytes) -> bytes:
    return hashlib.blake2b(data, key=key[:64], digest_size=16).digest()


def prf_u64(key: bytes, label: bytes, *indices: int) -> int:
    """64-bit PRF value for (label, indices)."""
    data = label + b"".join(_U64.pack(i & 0xFFFFFFFFFFFFFFFF) for i in indices)
    return int.from_bytes(_digest(key, data)[:8], "big")


def prf_bits(key: bytes, label: bytes, index: int, nbits: int) -> int:
    """Top nbits of the PRF output, as an integer in [0, 2**nbits)."""
    if not 0 <= nbits <= 64:
        raise ValueError("nbits must be in [0, 64]")
    if nbits == 0:
        return 0
    return prf_u64(key, label, index) >> (64 - nbits)


def prf_unit(key: bytes, label: bytes, *indices: int) -> float:
    """PRF value mapped into the open interval (0, 1)."""
    return (prf_u64(key, label, *indices) + 0.5) / 2.0**64


def derive_key(key: bytes, label: bytes) -> bytes:
    """Independent subkey for a named purpose (e.g. the in-pool draw)."""
    return _digest(key, b"derive:" + label)


def pack_ids(ids) -> bytes:
    """Canonical serialization of a token-id sequence for PRF input."""
    return b"".join(_U64.pack(i) for i in ids)
