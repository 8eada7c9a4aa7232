"""Grouped correction messages: construction, bit-exact wire coding,
and receiver-side application.

A group concatenates the receiver-view token records of several samples
into one stream.  Every position where the fragment the receiver will
extract differs from the intended payload window becomes one correction
item (position, replacement bits).  The message is an 8-bit item count
followed by the items; positions are delta-coded with shrinking field
widths that both sides derive from the remaining range alone, and
replacements carry no length field because the receiver already knows
each position's extracted fragment length.
"""

from __future__ import annotations

from dataclasses import dataclass

from .bits import bits_from_int, check_bits, int_from_bits
from .errors import CorrectionOverflowError, ProtocolError

COUNT_BITS = 8
MAX_ITEMS = (1 << COUNT_BITS) - 1


@dataclass(frozen=True)
class GroupLedger:
    """Per-token records over the group-level stream, with the token
    index where each sample ends recorded as a boundary."""

    tokens: tuple               # token ids, group order
    receiver_fragments: tuple   # bit strings, one per token
    intended_fragments: tuple   # equal lengths per position
    sample_boundaries: tuple    # ascending end indices, one per sample

    def __post_init__(self):
        n = len(self.tokens)
        if not (len(self.receiver_fragments) == len(self.intended_fragments) == n):
            raise ValueError("ledger column lengths differ")
        for got, want in zip(self.receiver_fragments, self.intended_fragments):
            if len(got) != len(want):
                raise ValueError("fragment length mismatch at one position")
        if list(self.sample_boundaries) != sorted(self.sample_boundaries):
            raise ValueError("sample boundaries not ascending")
        if self.sample_boundaries and self.sample_boundaries[-1] != n:
            raise ValueError("boundaries must end at the stream length")


@dataclass(frozen=True)
class CorrectionItem:
    position: int               # token index in the group-level stream
    replacement: str            # bits; length = receiver fragment length there

    def __post_init__(self):
        check_bits(self.replacement)
        if self.position < 0:
            raise ValueError("negative position")


def diff_group(ledger: GroupLedger) -> list[CorrectionItem]:
    """One item per position whose extracted fragment differs from the
    intended one.  Extractions that happen to equal the intended bits
    are benign and produce nothing."""
    items = [
        CorrectionItem(position=i, replacement=want)
        for i, (got, want) in enumerate(
            zip(ledger.receiver_fragments, ledger.intended_fragments)
        )
        if got != want
    ]
    if len(items) > MAX_ITEMS:
        raise CorrectionOverflowError(
            f"{len(items)} corrections exceed the {MAX_ITEMS}-item group limit"
        )
    return items


def _width(n: int) -> int:
    """Bits needed to address a range of n positions; a forced position
    (n == 1) costs zero bits."""
    if n <= 0:
        raise ProtocolError("empty position range")
    return (n - 1).bit_length()


def encode_message(items, group_len: int) -> str:
    """count(8) then per item: position field, replacement bits.  The
    first position is absolute in ceil(log2 L) bits; later items encode
    (position - previous - 1) in ceil(log2(L - previous - 1)) bits."""
    if len(items) > MAX_ITEMS:
        raise CorrectionOverflowError(f"{len(items)} items exceed the count field")
    out = [bits_from_int(len(items), COUNT_BITS)]
    prev = None
    for item in items:
        if item.position >= group_len:
            raise ProtocolError(f"position {item.position} outside group of {group_len}")
        if prev is None:
            out.append(bits_from_int(item.position, _width(group_len)))
        else:
            if item.position <= prev:
                raise ProtocolError("item positions must be strictly ascending")
            out.append(bits_from_int(item.position - prev - 1, _width(group_len - prev - 1)))
        out.append(item.replacement)
        prev = item.position
    return "".join(out)


def parse_message(bitstream: str, fragment_lengths, group_len: int) -> list[CorrectionItem]:
    """Exact inverse of encode_message.  fragment_lengths holds the
    receiver's recorded fragment length for every group position; bits
    beyond the last item (stego padding) are ignored."""
    check_bits(bitstream)
    if len(fragment_lengths) != group_len:
        raise ProtocolError("fragment length table does not cover the group")
    cursor = 0

    def take(n: int) -> str:
        nonlocal cursor
        if cursor + n > len(bitstream):
            raise ProtocolError("message truncated mid-item")
        piece = bitstream[cursor : cursor + n]
        cursor += n
        return piece

    count = int_from_bits(take(COUNT_BITS))
    items = []
    prev = None
    for _ in range(count):
        if prev is None:
            position = int_from_bits(take(_width(group_len)))
        else:
            position = prev + 1 + int_from_bits(take(_width(group_len - prev - 1)))
        if position >= group_len:
            raise ProtocolError(f"decoded position {position} outside group of {group_len}")
        items.append(CorrectionItem(position=position, replacement=take(fragment_lengths[position])))
        prev = position
    return items


def apply_corrections(items, receiver_fragments, sample_boundaries) -> list[str]:
    """Substitute replacement fragments, re-concatenate the group stream,
    and split it back into per-sample payloads at the boundaries."""
    fragments = list(receiver_fragments)
    for item in items:
        if item.position >= len(fragments):
            raise ProtocolError(f"correction position {item.position} outside the group")
        if len(item.replacement) != len(fragments[item.position]):
            raise ProtocolError(
                f"replacement length {len(item.replacement)} does not match the "
                f"extracted fragment at position {item.position}"
            )
        fragments[item.position] = item.replacement
    payloads = []
    start = 0
    for end in sample_boundaries:
        payloads.append("".join(fragments[start:end]))
        start = end
    return payloads
