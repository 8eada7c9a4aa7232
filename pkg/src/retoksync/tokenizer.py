"""Byte-level BPE tokenizer with pre-segmentation.

This is the ambiguity surface of the whole system: the same byte string
can be produced by different token sequences, and re-encoding the surface
text is what the sender monitors.  Everything here is deterministic.

Conventions:
  * ids 0..255 are the single-byte fallback vocabulary, always present;
  * merged tokens are appended densely above 255 in learning order;
  * merges apply within pre-segmentation segments only, lowest rank
    first, leftmost occurrence first, one replacement at a time, until
    no rule applies;
  * segment boundaries sit before every maximal whitespace run (the run
    attaches to the following segment) and on both sides of every ASCII
    punctuation byte.  Boundary placement depends only on the adjacent
    byte pair, so appending text never moves an existing boundary.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import TrainingError, VocabularyError

WHITESPACE = frozenset(b"\t\n\x0b\x0c\r ")
PUNCTUATION = frozenset(rb"""!"#$%&'()*+,-./:;<=>?@[\]^_`{|}~""")


def _is_boundary(prev: int, cur: int) -> bool:
    """Segment boundary between two adjacent bytes."""
    if cur in PUNCTUATION or prev in PUNCTUATION:
        return True
    return cur in WHITESPACE and prev not in WHITESPACE


@dataclass(frozen=True)
class Segment:
    data: bytes
    start_offset: int


def pre_segment(text) -> list[Segment]:
    """Partition text (str or bytes) into segments. Concatenating the
    segment bytes reproduces the input exactly; no segment is empty."""
    data = text.encode("utf-8") if isinstance(text, str) else bytes(text)
    if not data:
        return []
    segments = []
    start = 0
    for i in range(1, len(data)):
        if _is_boundary(data[i - 1], data[i]):
            segments.append(Segment(data[start:i], start))
            start = i
    segments.append(Segment(data[start:], start))
    return segments


def is_decodable(buffer: bytes) -> bool:
    """True iff the byte buffer is complete, valid UTF-8."""
    try:
        buffer.decode("utf-8")
        return True
    except UnicodeDecodeError:
        return False


@dataclass
class TokenizerProfile:
    """Immutable after construction; safe for concurrent read-only use."""

    token_bytes: list[bytes]                      # index = token id
    merges: list[tuple[int, int, int]]            # (left, right, merged) in rank order
    anchor_ids: frozenset[int] = field(default_factory=frozenset)
    _ranks: dict[tuple[int, int], tuple[int, int]] = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if len(self.token_bytes) < 256 or any(
            self.token_bytes[i] != bytes([i]) for i in range(256)
        ):
            raise VocabularyError("single-byte fallback vocabulary missing")
        seen = {}
        for tid, bs in enumerate(self.token_bytes):
            if bs in seen:
                raise VocabularyError(f"duplicate byte sequence for ids {seen[bs]} and {tid}")
            seen[bs] = tid
        ranks = {}
        for rank, (left, right, merged) in enumerate(self.merges):
            for tid in (left, right, merged):
                if not 0 <= tid < len(self.token_bytes):
                    raise VocabularyError(f"merge rank {rank} references unknown id {tid}")
            if self.token_bytes[merged] != self.token_bytes[left] + self.token_bytes[right]:
                raise VocabularyError(f"merge rank {rank} output bytes inconsistent")
            ranks.setdefault((left, right), (rank, merged))  # lowest rank wins
        self._ranks = ranks
        if not self.anchor_ids:
            self.anchor_ids = derive_anchor_ids(self.token_bytes)

    @property
    def vocab_size(self) -> int:
        return len(self.token_bytes)

    def bytes_of(self, token_id: int) -> bytes:
        if not 0 <= token_id < len(self.token_bytes):
            raise VocabularyError(f"unknown token id {token_id}")
        return self.token_bytes[token_id]

    def encode_segment(self, data: bytes) -> list[int]:
        """BPE over one segment: byte ids, then merge lowest rank first,
        leftmost first, one replacement at a time, to fixpoint."""
        ids = list(data)
        while len(ids) >= 2:
            best = None
            for i in range(len(ids) - 1):
                hit = self._ranks.get((ids[i], ids[i + 1]))
                if hit is not None and (best is None or hit[0] < best[0]):
                    best = (hit[0], i, hit[1])
            if best is None:
                break
            _, i, merged = best
            ids[i : i + 2] = [merged]
        return ids

    def encode(self, text) -> list[int]:
        """Tok: text (str or bytes) to token ids. Total: byte fallback
        guarantees every input encodes."""
        out = []
        for seg in pre_segment(text):
            out.extend(self.encode_segment(seg.data))
        return out

    def decode_bytes(self, ids) -> bytes:
        return b"".join(self.bytes_of(t) for t in ids)

    def decode(self, ids):
        """Detok: token ids to text. Returns str when the bytes are valid
        UTF-8, otherwise the raw bytes (caller checks decodability)."""
        raw = self.decode_bytes(ids)
        return raw.decode("utf-8") if is_decodable(raw) else raw

    def is_incomplete(self, token_id: int) -> bool:
        """True iff the token's bytes are not standalone-decodable text."""
        return not is_decodable(self.bytes_of(token_id))

    def is_anchor(self, token_id: int) -> bool:
        self.bytes_of(token_id)
        return token_id in self.anchor_ids


def derive_anchor_ids(token_bytes) -> frozenset[int]:
    """Tokens consisting solely of whitespace. After such a token the next
    segment boundary is not fixed yet (the run may extend or capture the
    following word), so detection must be deferred."""
    return frozenset(
        tid
        for tid, bs in enumerate(token_bytes)
        if bs and all(b in WHITESPACE for b in bs)
    )


def train_bpe(corpus: str, target_vocab_size: int) -> TokenizerProfile:
    """Learn merges by pair frequency until the vocabulary reaches the
    target size or no adjacent pair remains.  Deterministic: ties break
    toward the lexicographically smallest (left, right) id pair.  When a
    candidate merge reproduces an existing byte sequence the rule maps to
    the existing id instead of minting a duplicate."""
    if not corpus:
        raise TrainingError("empty training corpus")
    if target_vocab_size < 256:
        raise TrainingError("target vocabulary smaller than the byte fallback")

    token_bytes = [bytes([i]) for i in range(256)]
    bytes_to_id = {bs: tid for tid, bs in enumerate(token_bytes)}
    merges: list[tuple[int, int, int]] = []
    sequences = [list(seg.data) for seg in pre_segment(corpus)]

    while len(token_bytes) < target_vocab_size:
        counts: dict[tuple[int, int], int] = {}
        for seq in sequences:
            for pair in zip(seq, seq[1:]):
                counts[pair] = counts.get(pair, 0) + 1
        if not counts:
            break
        best = max(counts, key=lambda p: (counts[p], (-p[0], -p[1])))
        merged_bytes = token_bytes[best[0]] + token_bytes[best[1]]
        merged_id = bytes_to_id.get(merged_bytes)
        if merged_id is None:
            merged_id = len(token_bytes)
            token_bytes.append(merged_bytes)
            bytes_to_id[merged_bytes] = merged_id
        merges.append((best[0], best[1], merged_id))
        sequences = [_replace_pair(seq, best, merged_id) for seq in sequences]

    return TokenizerProfile(token_bytes=token_bytes, merges=merges)


def _replace_pair(seq, pair, merged_id):
    out = []
    i = 0
    while i < len(seq):
        if i + 1 < len(seq) and seq[i] == pair[0] and seq[i + 1] == pair[1]:
            out.append(merged_id)
            i += 2
        else:
            out.append(seq[i])
            i += 1
    return out


def build_profile(merge_specs: list[tuple[bytes, bytes]]) -> TokenizerProfile:
    """Hand-build a profile from byte-pair specs in rank order, e.g.
    [(b"a", b"n"), (b"an", b"y")]. Convenience for crafted test worlds."""
    token_bytes = [bytes([i]) for i in range(256)]
    bytes_to_id = {bs: tid for tid, bs in enumerate(token_bytes)}
    merges = []
    for left_bytes, right_bytes in merge_specs:
        try:
            left, right = bytes_to_id[left_bytes], bytes_to_id[right_bytes]
        except KeyError as exc:
            raise VocabularyError(f"merge part {exc.args[0]!r} not in vocabulary yet")
        merged_bytes = left_bytes + right_bytes
        merged = bytes_to_id.get(merged_bytes)
        if merged is None:
            merged = len(token_bytes)
            token_bytes.append(merged_bytes)
            bytes_to_id[merged_bytes] = merged
        merges.append((left, right, merged))
    return TokenizerProfile(token_bytes=token_bytes, merges=merges)


def save_profile(profile: TokenizerProfile, vocab_path, merges_path) -> None:
    """Two text files: `id<TAB>hex` per token, `left right merged` per
    merge in rank order. Round-trips bit-exactly."""
    with open(vocab_path, "w", encoding="utf-8") as fh:
        for tid, bs in enumerate(profile.token_bytes):
            fh.write(f"{tid}\t{bs.hex()}\n")
    with open(merges_path, "w", encoding="utf-8") as fh:
        for left, right, merged in profile.merges:
            fh.write(f"{left} {right} {merged}\n")


def load_profile(vocab_path, merges_path) -> TokenizerProfile:
    entries = []
    with open(vocab_path, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            tid_text, hex_text = line.split("\t")
            entries.append((int(tid_text), bytes.fromhex(hex_text)))
    entries.sort()
    if [tid for tid, _ in entries] != list(range(len(entries))):
        raise VocabularyError("vocabulary ids are not dense")
    token_bytes = [bs for _, bs in entries]
    merges = []
    with open(merges_path, encoding="utf-8") as fh:
        for line in fh:
            parts = line.split()
            if not parts:
                continue
            if len(parts) != 3:
                raise VocabularyError(f"malformed merge line {line!r}")
            merges.append((int(parts[0]), int(parts[1]), int(parts[2])))
    return TokenizerProfile(token_bytes=token_bytes, merges=merges)


class ViewTracker:
    """Incrementally maintains Tok(Detok(x)) while tokens append to x.

    Boundary placement is local to adjacent byte pairs, so closed
    segments never re-open; only the trailing open segment is re-encoded
    per append.  This keeps per-step re-tokenization O(last word) instead
    of O(whole text).
    """

    def __init__(self, profile: TokenizerProfile, prefix_ids=()):
        self._profile = profile
        self._stable: list[int] = []
        self._tail = bytearray()
        self._tail_tokens: list[int] = []
        self._length = 0
        for tid in prefix_ids:
            self.append(tid)

    def append(self, token_id: int) -> None:
        profile = self._profile
        for byte in profile.bytes_of(token_id):
            if self._tail and _is_boundary(self._tail[-1], byte):
                self._stable.extend(profile.encode_segment(bytes(self._tail)))
                self._tail.clear()
            self._tail.append(byte)
        self._tail_tokens = profile.encode_segment(bytes(self._tail)) if self._tail else []
        self._length = len(self._stable) + len(self._tail_tokens)

    def view(self) -> list[int]:
        return self._stable + self._tail_tokens

    def __len__(self) -> int:
        return self._length
