"""Bit-string helpers.

Payloads, fragments and protocol messages are passed around as Python
strings of '0'/'1' characters.  Keeping bits as text makes every value
printable and diffable; all hot arithmetic converts to int first.
"""

from __future__ import annotations


def check_bits(bits: str) -> str:
    if any(c not in "01" for c in bits):
        raise ValueError("bit string may contain only '0' and '1'")
    return bits


def bits_from_int(value: int, width: int) -> str:
    """Big-endian, fixed width. width == 0 encodes to the empty string."""
    if width < 0:
        raise ValueError("negative width")
    if value < 0 or value >> width:
        raise ValueError(f"value {value} does not fit in {width} bits")
    return format(value, f"0{width}b") if width else ""


def int_from_bits(bits: str) -> int:
    return int(bits, 2) if bits else 0


def xor_bits(a: str, b: str) -> str:
    if len(a) != len(b):
        raise ValueError("xor of unequal-length bit strings")
    if not a:
        return ""
    return bits_from_int(int_from_bits(a) ^ int_from_bits(b), len(a))


def random_bits(rng, n: int) -> str:
    return bits_from_int(rng.getrandbits(n), n) if n else ""


def bits_from_bytes(data: bytes) -> str:
    """MSB-first bit view of a byte string."""
    return "".join(format(b, "08b") for b in data)


def bytes_from_bits(bits: str) -> bytes:
    """Inverse of bits_from_bytes; pads the last byte with zero bits."""
    check_bits(bits)
    padded = bits + "0" * (-len(bits) % 8)
    return bytes(int(padded[i : i + 8], 2) for i in range(0, len(padded), 8))


def hamming(a: str, b: str) -> int:
    """Number of differing positions over the common prefix, plus the
    length difference (missing bits count as errors)."""
    n = min(len(a), len(b))
    return sum(a[i] != b[i] for i in range(n)) + abs(len(a) - len(b))


def load_payload(path, fmt: str = "bits") -> str:
    """Read a payload file.  fmt 'bits' expects ASCII '0'/'1' characters
    (whitespace ignored); fmt 'raw' reads binary, MSB-first."""
    with open(path, "rb") as fh:
        data = fh.read()
    if fmt == "raw":
        return bits_from_bytes(data)
    if fmt == "bits":
        text = data.decode("ascii")
        return check_bits("".join(text.split()))
    raise ValueError(f"unknown payload format {fmt!r}")


def save_payload(path, bits: str, fmt: str = "bits") -> None:
    check_bits(bits)
    with open(path, "wb") as fh:
        if fmt == "raw":
            fh.write(bytes_from_bits(bits))
        elif fmt == "bits":
            fh.write(bits.encode("ascii") + b"\n")
        else:
            raise ValueError(f"unknown payload format {fmt!r}")


def parse_hex_key(text: str) -> bytes:
    """Shared secret: exactly 32 hex characters (128 bits)."""
    text = text.strip().lower()
    if len(text) != 32:
        raise ValueError("key must be 32 hex characters")
    return bytes.fromhex(text)
