"""Run-level metrics and the visible-text transcript oracle.

All logarithms are base 2; divergences and capacities are reported in
bits.  The transcript oracle compares the distribution over visible
texts produced by the embedding pipeline against the natural generation
channel, where emitted tokens are folded through decode-then-re-encode
exactly as an outside observer would see them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .bits import random_bits
from .codec import select
from .core import EmbedResult, RunParams, ambiguity_trace, embed
from .providers import Distribution


@dataclass
class MetricsReport:
    ave_ppl: float = 0.0
    ave_kld: float = 0.0
    max_kld: float = 0.0
    capacity: float = 0.0           # bits per generated token
    utilization: float = 0.0
    total_time: float = 0.0         # seconds
    rto_percent: float = 0.0
    accuracy: float = 1.0
    sample_ambiguity_rate: float = 0.0
    token_trigger_rate: float = 0.0
    bit_error_ratio: float = 0.0
    token_error_ratio: float = 0.0

    def __post_init__(self):
        rates = (
            self.accuracy,
            self.sample_ambiguity_rate,
            self.token_trigger_rate,
            self.bit_error_ratio,
            self.token_error_ratio,
        )
        if any(not 0.0 <= r <= 1.0 for r in rates):
            raise ValueError("rates must lie in [0, 1]")
        if self.max_kld < self.ave_kld - 1e-12 or self.ave_kld < -1e-12:
            raise ValueError("KLD aggregates inconsistent")


def kld_bits(p: Distribution, q: Distribution) -> float:
    """sum p_i log2(p_i / q_i); requires supp(p) within supp(q)."""
    q_probs = {tid: prob for tid, prob in q.entries}
    total = 0.0
    for tid, prob in p.entries:
        if prob == 0.0:
            continue
        if q_probs.get(tid, 0.0) == 0.0:
            raise ValueError(f"support violation: token {tid} has zero reference mass")
        total += prob * math.log2(prob / q_probs[tid])
    return total


def ppl(step_probs) -> float:
    """2 ** (-mean log2 prob) over the emitted tokens' untruncated model
    probabilities.  A zero probability yields the infinity sentinel."""
    probs = list(step_probs)
    if not probs:
        raise ValueError("perplexity of an empty run")
    if any(p <= 0.0 for p in probs):
        return math.inf
    return 2.0 ** (-sum(math.log2(p) for p in probs) / len(probs))


def capacity_and_utilization(run: EmbedResult) -> tuple[float, float]:
    """(embedded payload bits per generated token, embedded bits over the
    summed per-step embedding entropy)."""
    tokens = run.generated_tokens
    if tokens == 0:
        raise ValueError("capacity of a zero-token run is undefined")
    bits = run.embedded_bits
    entropy = sum(s.entropy_bits for s in run.step_stats)
    return bits / tokens, (bits / entropy if entropy > 0 else 0.0)


def rto(t_method: float, t_baseline: float) -> float:
    """Relative time overhead in percent."""
    if t_baseline <= 0:
        raise ValueError("baseline time must be positive")
    return (t_method - t_baseline) / t_baseline * 100.0


def ambiguity_statistics(runs) -> tuple[float, float]:
    """(fraction of runs with any event, events per generated token)."""
    traces = [ambiguity_trace(r) if isinstance(r, EmbedResult) else tuple(r) for r in runs]
    if not traces:
        raise ValueError("no runs")
    samples = len(traces)
    tokens = sum(t[2] for t in traces)
    return (
        sum(1 for t in traces if t[0]) / samples,
        (sum(t[1] for t in traces) / tokens) if tokens else 0.0,
    )


def error_ratios(group_reports) -> tuple[float, float, float]:
    """(bit errors / embedded bits, erroneous tokens / generated tokens,
    correction payload bits / embedded bits) over a set of group rows."""
    bit_errors = sum(g.residual_bit_errors for g in group_reports)
    embedded = sum(g.embedded_bits for g in group_reports)
    error_tokens = sum(g.error_tokens for g in group_reports)
    generated = sum(g.generated_tokens for g in group_reports)
    correction = sum(g.correction_bits for g in group_reports)
    return (
        bit_errors / embedded if embedded else 0.0,
        error_tokens / generated if generated else 0.0,
        correction / embedded if embedded else 0.0,
    )


def tv_distance(p: dict, q: dict) -> float:
    keys = set(p) | set(q)
    return 0.5 * sum(abs(p.get(k, 0.0) - q.get(k, 0.0)) for k in keys)


def _text_key(value) -> bytes:
    return value.encode("utf-8") if isinstance(value, str) else bytes(value)


def natural_channel_exact(params: RunParams, context, steps: int) -> dict[bytes, float]:
    """Exact distribution over visible texts after the given number of
    generation steps: each step samples from the candidate masses for
    the re-encoded current text and appends the token's bytes."""
    profile = params.profile
    start = profile.decode_bytes(list(context))
    states = {start: 1.0}
    for _ in range(steps):
        nxt: dict[bytes, float] = {}
        for text, prob in states.items():
            q = params.candidates(profile.encode(text))
            for tid, mass in q.entries:
                key = text + profile.bytes_of(tid)
                nxt[key] = nxt.get(key, 0.0) + prob * (mass / q.scale)
        states = nxt
    return states


def embedded_channel_exhaustive(params: RunParams, context, steps: int) -> dict[bytes, float]:
    """Distribution over visible texts of the embedding pipeline with the
    per-step masked value enumerated uniformly over [0, 2^P): exercises
    the real interval selection and the real re-encode conditioning.
    Valid when the pipeline never rewinds (reset-free profiles)."""
    profile = params.profile
    scale = 1 << params.precision
    start = profile.decode_bytes(list(context))
    states = {start: 1.0}
    for _ in range(steps):
        nxt: dict[bytes, float] = {}
        for text, prob in states.items():
            q = params.candidates(profile.encode(text))
            counts: dict[int, int] = {}
            for r in range(scale):
                tid, _, _ = select(q, r)
                counts[tid] = counts.get(tid, 0) + 1
            for tid, c in counts.items():
                key = text + profile.bytes_of(tid)
                nxt[key] = nxt.get(key, 0.0) + prob * (c / scale)
        states = nxt
    return states


def embedded_channel_sampled(
    params: RunParams, context, steps: int, trials: int, rng
) -> dict[bytes, float]:
    """Monte-Carlo transcript distribution of the full sender loop with a
    fresh uniform payload and a fresh key per trial.  The key is the
    masking randomness: a fixed key leaves each step's unconsumed word
    bits correlated with the previous token choice, which only the
    keystream's freshness washes out."""
    counts: dict[bytes, int] = {}
    bits_needed = steps * params.precision
    for _ in range(trials):
        trial_params = replace(params, key=rng.randbytes(16))
        payload = random_bits(rng, bits_needed)
        run = embed(payload, context, trial_params, true_tokens=steps)
        key = _text_key(run.stego_text)
        counts[key] = counts.get(key, 0) + 1
    return {k: c / trials for k, c in counts.items()}


def transcript_oracle(
    params: RunParams,
    context,
    steps: int,
    trials: int = 0,
    rng=None,
    exhaustive: bool = False,
) -> tuple[dict[bytes, float], dict[bytes, float]]:
    """(natural channel, embedding channel) distributions over visible
    texts after the given number of generation steps.  The natural side
    is enumerated exactly; the embedding side is exhaustive over masked
    values when requested, otherwise Monte-Carlo over fresh payloads."""
    natural = natural_channel_exact(params, context, steps)
    if exhaustive:
        embedded = embedded_channel_exhaustive(params, context, steps)
    else:
        if trials < 1 or rng is None:
            raise ValueError("Monte-Carlo mode needs trials and an rng")
        embedded = embedded_channel_sampled(params, context, steps, trials, rng)
    return natural, embedded
