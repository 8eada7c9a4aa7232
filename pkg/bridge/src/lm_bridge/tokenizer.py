"""Bridge-side byte-level BPE tokenizer.

Implements the same observable behavior the consuming toolkit expects
from exported profiles: ids 0..255 are single bytes, merges are learned
by pair frequency and applied lowest rank first, leftmost first, within
pre-segmentation segments (boundary before each whitespace run, which
attaches to the following segment; punctuation bytes isolated).  The
export format is one `id<TAB>hex` line per token and one
`left right merged` line per merge, in rank order.
"""

from __future__ import annotations

WHITESPACE = frozenset(b"\t\n\x0b\x0c\r ")
PUNCTUATION = frozenset(rb"""!"#$%&'()*+,-./:;<=>?@[\]^_`{|}~""")


def _boundary(prev: int, cur: int) -> bool:
    if cur in PUNCTUATION or prev in PUNCTUATION:
        return True
    return cur in WHITESPACE and prev not in WHITESPACE


def segments(data: bytes):
    if not data:
        return
    start = 0
    for i in range(1, len(data)):
        if _boundary(data[i - 1], data[i]):
            yield data[start:i]
            start = i
    yield data[start:]


class BridgeTokenizer:
    def __init__(self, token_bytes, merges):
        self.token_bytes = list(token_bytes)
        self.merges = list(merges)
        self._ranks = {}
        for rank, (left, right, merged) in enumerate(self.merges):
            self._ranks.setdefault((left, right), (rank, merged))

    @property
    def vocab_size(self) -> int:
        return len(self.token_bytes)

    def encode(self, text) -> list[int]:
        data = text.encode("utf-8") if isinstance(text, str) else bytes(text)
        out = []
        for seg in segments(data):
            ids = list(seg)
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
            out.extend(ids)
        return out

    def decode_bytes(self, ids) -> bytes:
        return b"".join(self.token_bytes[t] for t in ids)

    def export(self, vocab_path, merges_path) -> None:
        with open(vocab_path, "w", encoding="utf-8") as fh:
            for tid, bs in enumerate(self.token_bytes):
                fh.write(f"{tid}\t{bs.hex()}\n")
        with open(merges_path, "w", encoding="utf-8") as fh:
            for left, right, merged in self.merges:
                fh.write(f"{left} {right} {merged}\n")


def train(corpus: str, target_vocab_size: int) -> BridgeTokenizer:
    token_bytes = [bytes([i]) for i in range(256)]
    by_bytes = {bs: tid for tid, bs in enumerate(token_bytes)}
    merges = []
    seqs = [list(seg) for seg in segments(corpus.encode("utf-8"))]
    while len(token_bytes) < target_vocab_size:
        counts = {}
        for seq in seqs:
            for pair in zip(seq, seq[1:]):
                counts[pair] = counts.get(pair, 0) + 1
        if not counts:
            break
        best = max(counts, key=lambda p: (counts[p], (-p[0], -p[1])))
        merged_bytes = token_bytes[best[0]] + token_bytes[best[1]]
        merged = by_bytes.get(merged_bytes)
        if merged is None:
            merged = len(token_bytes)
            token_bytes.append(merged_bytes)
            by_bytes[merged_bytes] = merged
        merges.append((best[0], best[1], merged))
        new_seqs = []
        for seq in seqs:
            out, i = [], 0
            while i < len(seq):
                if i + 1 < len(seq) and (seq[i], seq[i + 1]) == best:
                    out.append(merged)
                    i += 2
                else:
                    out.append(seq[i])
                    i += 1
            new_seqs.append(out)
        seqs = new_seqs
    return BridgeTokenizer(token_bytes, merges)
