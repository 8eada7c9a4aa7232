"""Next-token distribution providers and the fixed-point alphabet.

Sender and receiver must derive bit-identical candidate sets from the
same context, so every provider is a pure function of (config, context)
and all downstream arithmetic happens on integer masses that sum to an
exact power of two.
"""

from __future__ import annotations

import json
import math
import socket
from dataclasses import dataclass

from . import prf
from .errors import ConfigError, PrecisionError, ProviderError


@dataclass(frozen=True)
class Distribution:
    """Probability entries as (token_id, prob) pairs; probabilities sum
    to 1 within 1e-9 and ids are unique."""

    entries: tuple

    def __post_init__(self):
        ids = [tid for tid, _ in self.entries]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate token ids in distribution")
        total = sum(p for _, p in self.entries)
        if self.entries and abs(total - 1.0) > 1e-9:
            raise ValueError(f"probabilities sum to {total}, not 1")

    def prob_of(self, token_id: int) -> float:
        for tid, p in self.entries:
            if tid == token_id:
                return p
        return 0.0


def canonical_order(pairs):
    """Descending weight, ties by ascending id: the ordering both sides
    use to lay out intervals without negotiation."""
    return sorted(pairs, key=lambda e: (-e[1], e[0]))


def top_k_truncate(d: Distribution, k: int) -> Distribution:
    if k < 2:
        raise ConfigError("top-k must be at least 2")
    kept = canonical_order(d.entries)[:k]
    total = sum(p for _, p in kept)
    return Distribution(tuple((tid, p / total) for tid, p in kept))


@dataclass(frozen=True)
class QuantizedDistribution:
    """Integer masses in canonical order summing exactly to 2**precision.
    Every entry has mass >= 1 so every candidate stays selectable."""

    entries: tuple          # ((token_id, mass), ...) canonical order
    precision: int

    @property
    def scale(self) -> int:
        return 1 << self.precision

    def __post_init__(self):
        if any(m < 1 for _, m in self.entries):
            raise ValueError("quantized masses must be >= 1")
        if sum(m for _, m in self.entries) != self.scale:
            raise ValueError("quantized masses must sum to the scale")
        if list(self.entries) != canonical_order(self.entries):
            raise ValueError("entries not in canonical order")

    def intervals(self):
        """Cumulative [lo, hi) intervals over [0, 2**precision)."""
        out = []
        lo = 0
        for tid, mass in self.entries:
            out.append((tid, lo, lo + mass))
            lo += mass
        return out

    def index_of(self, token_id: int):
        for i, (tid, _) in enumerate(self.entries):
            if tid == token_id:
                return i
        return None


def quantize(d: Distribution, precision: int) -> QuantizedDistribution:
    """floor(p * 2^P) clamped to >= 1, then largest-remainder correction
    (ties by ascending id) so the masses sum exactly to 2^P."""
    if not 1 <= precision <= 62:
        raise PrecisionError(f"precision {precision} out of range")
    scale = 1 << precision
    if len(d.entries) > scale:
        raise PrecisionError(f"{len(d.entries)} entries exceed 2^{precision} slots")
    exact = [(tid, p * scale) for tid, p in d.entries]
    masses = {tid: max(1, math.floor(x)) for tid, x in exact}
    remainder = {tid: x - math.floor(x) for tid, x in exact}
    diff = scale - sum(masses.values())
    if diff > 0:
        for tid, _ in sorted(exact, key=lambda e: (-remainder[e[0]], e[0]))[:diff]:
            masses[tid] += 1
    elif diff < 0:
        for tid, _ in sorted(exact, key=lambda e: (remainder[e[0]], e[0])):
            if diff == 0:
                break
            if masses[tid] > 1:
                masses[tid] -= 1
                diff += 1
        if diff:
            raise PrecisionError("cannot satisfy unit-mass floor at this precision")
    entries = tuple(canonical_order(list(masses.items())))
    return QuantizedDistribution(entries=entries, precision=precision)


def entropy_bits(q: QuantizedDistribution) -> float:
    scale = q.scale
    return -sum((m / scale) * math.log2(m / scale) for _, m in q.entries)


@dataclass(frozen=True)
class ProviderConfig:
    kind: str                       # prf-toy | ngram | remote
    seed: int = 0
    k: int = 8
    precision: int = 30
    temperature: float = 1.2
    vocab_ids: tuple = ()           # prf-toy: the vocabulary slice
    order: int = 1                  # ngram
    train_text: str = ""            # ngram
    endpoint: str = ""              # remote, "host:port"
    prf_name: str = prf.PRF_NAME

    def __post_init__(self):
        if self.k < 2:
            raise ConfigError("k must be >= 2")
        if not 8 <= self.precision <= 52:
            raise ConfigError("precision must be in [8, 52]")
        if self.prf_name != prf.PRF_NAME:
            raise ConfigError(f"this build provides PRF {prf.PRF_NAME!r}, config pins {self.prf_name!r}")


class PrfToyProvider:
    """Deterministic toy model: per-token logits are keyed-hash values of
    (seed, context, token id) in (0, 1), softmaxed at a temperature.
    Reproducible across processes and builds; nontrivial entropy."""

    kind = "prf-toy"

    def __init__(self, config: ProviderConfig):
        if not config.vocab_ids:
            raise ConfigError("prf-toy provider needs a vocabulary slice")
        self._cfg = config
        self._key = config.seed.to_bytes(8, "big", signed=False)
        self._cache: dict[tuple, Distribution] = {}

    def next_distribution(self, context) -> Distribution:
        ctx = tuple(context)
        hit = self._cache.get(ctx)
        if hit is not None:
            return hit
        data = prf.pack_ids(ctx)
        tau = self._cfg.temperature
        weights = []
        for tid in self._cfg.vocab_ids:
            u = prf.prf_unit(self._key, b"logit:" + data, tid)
            weights.append((tid, math.exp(u / tau)))
        total = sum(w for _, w in weights)
        dist = Distribution(tuple((tid, w / total) for tid, w in weights))
        if len(self._cache) < 1 << 16:
            self._cache[ctx] = dist
        return dist


class NgramProvider:
    """Token-level n-gram counts with add-epsilon smoothing over the
    observed continuation set of each context.  Contexts never seen in
    training back off to the global unigram distribution."""

    kind = "ngram"

    def __init__(self, config: ProviderConfig, token_ids):
        if len(token_ids) <= config.order:
            raise ConfigError("training sequence shorter than the n-gram order")
        self._order = config.order
        self._eps = 0.01
        self._table: dict[tuple, dict[int, int]] = {}
        self._unigram: dict[int, int] = {}
        for i, tid in enumerate(token_ids):
            self._unigram[tid] = self._unigram.get(tid, 0) + 1
            if i >= config.order:
                key = tuple(token_ids[i - config.order : i])
                self._table.setdefault(key, {}).setdefault(tid, 0)
                self._table[key][tid] += 1

    def next_distribution(self, context) -> Distribution:
        key = tuple(context[-self._order :]) if self._order else ()
        counts = self._table.get(key, self._unigram)
        total = sum(counts.values()) + self._eps * len(counts)
        entries = tuple((tid, (c + self._eps) / total) for tid, c in sorted(counts.items()))
        return Distribution(entries)


class RemoteProvider:
    """Client for the newline-delimited JSON protocol:
    request  {"context": [int...], "top_k": int}
    response {"ids": [int...], "probs": [float...]} descending prob,
    ties ascending id, probs summing to 1 within 1e-6.
    No caching: every call round-trips."""

    kind = "remote"

    def __init__(self, config: ProviderConfig, reader=None, writer=None):
        self._cfg = config
        if reader is not None and writer is not None:
            self._reader, self._writer = reader, writer
        else:
            host, _, port = config.endpoint.rpartition(":")
            if not host or not port.isdigit():
                raise ConfigError(f"remote endpoint {config.endpoint!r} is not host:port")
            try:
                sock = socket.create_connection((host, int(port)), timeout=30)
            except OSError as exc:
                raise ProviderError(f"cannot connect to {config.endpoint}: {exc}", retryable=True)
            self._reader = sock.makefile("r", encoding="utf-8")
            self._writer = sock.makefile("w", encoding="utf-8")

    def next_distribution(self, context) -> Distribution:
        request = json.dumps({"context": list(context), "top_k": self._cfg.k})
        try:
            self._writer.write(request + "\n")
            self._writer.flush()
            line = self._reader.readline()
        except OSError as exc:
            raise ProviderError(f"transport failure: {exc}", retryable=True)
        if not line:
            raise ProviderError("connection closed by server", retryable=True)
        try:
            payload = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ProviderError(f"malformed response: {exc}", retryable=False)
        if isinstance(payload, dict) and payload.get("error"):
            raise ProviderError(f"server error: {payload['error']}", retryable=False)
        try:
            ids, probs = payload["ids"], payload["probs"]
        except (KeyError, TypeError) as exc:
            raise ProviderError(f"malformed response: {exc}", retryable=False)
        if len(ids) != len(probs) or not ids:
            raise ProviderError("response ids/probs length mismatch", retryable=False)
        if abs(sum(probs) - 1.0) > 1e-6:
            raise ProviderError("response probabilities do not sum to 1", retryable=False)
        pairs = list(zip(ids, probs))
        if pairs != canonical_order(pairs):
            raise ProviderError("response not in canonical order", retryable=False)
        total = sum(probs)
        return Distribution(tuple((tid, p / total) for tid, p in pairs))


def make_provider(config: ProviderConfig, profile=None):
    if config.kind == "prf-toy":
        return PrfToyProvider(config)
    if config.kind == "ngram":
        if profile is None:
            raise ConfigError("ngram provider needs a tokenizer profile to encode its training text")
        if not config.train_text:
            raise ConfigError("ngram provider needs training text")
        return NgramProvider(config, profile.encode(config.train_text))
    if config.kind == "remote":
        return RemoteProvider(config)
    raise ConfigError(f"unknown provider kind {config.kind!r}")


def candidate_fn(provider, k: int, precision: int):
    """The per-position alphabet both parties compute: quantized top-k of
    the provider distribution for a given prefix."""

    def candidates(prefix) -> QuantizedDistribution:
        return quantize(top_k_truncate(provider.next_distribution(prefix), k), precision)

    return candidates
