"""Model backends.

`toy:<seed>` is fully self-contained: a tokenizer trained on an embedded
corpus and a keyed-hash logit model, so the bridge is usable and
testable without any model weights.  `hf:<name>` loads a causal LM via
transformers when that stack is installed; it is best-effort and export
support depends on the model shipping a byte-level BPE tokenizer.
"""

from __future__ import annotations

import hashlib
import math
import struct

from .tokenizer import BridgeTokenizer, train

_CORPUS = (
    "the quick brown fox jumps over the lazy dog. "
    "pack my box with five dozen liquor jugs. "
    "how vexingly quick daft zebras jump! "
    "she sells sea shells by the sea shore, and the shells she sells "
    "are surely sea shells. any thing can become anything else over "
    "time, and nothing at all stays the same. "
) * 3


class ToyBackend:
    """Deterministic hash-logit model over its own trained vocabulary."""

    def __init__(self, seed: int = 0, vocab_size: int = 420, temperature: float = 1.2):
        self.tokenizer: BridgeTokenizer = train(_CORPUS, vocab_size)
        self._key = seed.to_bytes(8, "big")
        self._tau = temperature
        # candidate set: tokens that actually occur when encoding the corpus
        seen = sorted(set(self.tokenizer.encode(_CORPUS)))
        self._support = seen

    def _logit(self, context, token_id: int) -> float:
        data = struct.pack(f">{len(context)}q", *context) if context else b""
        digest = hashlib.blake2b(
            data + struct.pack(">q", token_id), key=self._key, digest_size=8
        ).digest()
        return (int.from_bytes(digest, "big") + 0.5) / 2.0**64

    def distribution(self, context, top_k: int):
        weights = [
            (tid, math.exp(self._logit(context, tid) / self._tau)) for tid in self._support
        ]
        weights.sort(key=lambda e: (-e[1], e[0]))
        kept = weights[: max(2, top_k)]
        total = sum(w for _, w in kept)
        return [tid for tid, _ in kept], [w / total for _, w in kept]


class HfBackend:
    """Causal-LM backend over transformers; import deferred so the toy
    backend works without the ML stack installed."""

    def __init__(self, model_name: str, device: str = "cpu"):
        try:
            import torch
            from transformers import AutoModelForCausalLM, AutoTokenizer
        except ImportError as exc:
            raise RuntimeError(f"transformers backend unavailable: {exc}")
        self._torch = torch
        self._tok = AutoTokenizer.from_pretrained(model_name)
        self._model = AutoModelForCausalLM.from_pretrained(model_name).to(device).eval()
        self._device = device

    def distribution(self, context, top_k: int):
        torch = self._torch
        with torch.no_grad():
            ids = torch.tensor([context or [self._tok.bos_token_id or 0]], device=self._device)
            logits = self._model(ids).logits[0, -1]
            probs = torch.softmax(logits.double(), dim=-1)
            k = max(2, min(top_k, probs.shape[-1]))
            values, indices = torch.topk(probs, k)
        pairs = sorted(zip(indices.tolist(), values.tolist()), key=lambda e: (-e[1], e[0]))
        total = sum(p for _, p in pairs)
        return [tid for tid, _ in pairs], [p / total for _, p in pairs]

    @property
    def tokenizer(self) -> BridgeTokenizer:
        """Best-effort export: recovers each token's surface bytes via the
        model tokenizer's own string conversion.  Merge rules of real
        tokenizers are not reconstructed here, so exported profiles
        tokenize greedily by longest byte match only; callers must
        validate the cross-check rate before relying on them."""
        vocab = self._tok.get_vocab()
        token_bytes = [b""] * (max(vocab.values()) + 1)
        try:
            for surface, tid in vocab.items():
                token_bytes[tid] = self._tok.convert_tokens_to_string([surface]).encode("utf-8")
        except Exception as exc:
            raise RuntimeError(f"tokenizer of this model cannot be exported: {exc}")
        return BridgeTokenizer(token_bytes, [])


def load_backend(spec: str):
    kind, _, arg = spec.partition(":")
    if kind == "toy":
        return ToyBackend(seed=int(arg) if arg else 0)
    if kind == "hf":
        if not arg:
            raise ValueError("hf backend needs a model name, e.g. hf:gpt2")
        return HfBackend(arg)
    raise ValueError(f"unknown model spec {spec!r} (use toy:<seed> or hf:<name>)")
