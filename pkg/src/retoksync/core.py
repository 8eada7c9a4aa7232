"""Sender loop with online re-tokenization monitoring, plus the
receiver-side extraction pipeline.

The sender keeps two sequences: the true token sequence x and the view
sequence, which is what the receiver would obtain by re-encoding the
visible text.  Generation is always conditioned on the view, so both
parties draw from the same conditional distribution at every position.
After each emitted token the sender re-tokenizes the text; when the
result diverges from plain appending, it decodes the new view from the
initial state and overwrites its message pointer and mask state with
the result.  That confines damage to the fragments of the affected
positions instead of desynchronizing everything after them.

Two deferral rules suppress false alarms: a whitespace-run token leaves
the next segment boundary unsettled, and an incomplete (non-decodable)
token leaves the current character unfinished.  In both cases the new
token is appended provisionally and the comparison is postponed until
the window closes.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

from . import codec
from .bits import check_bits
from .errors import ConfigError, SynchronizationError
from .providers import (
    Distribution,
    entropy_bits,
    quantize,
    top_k_truncate,
)
from .tokenizer import TokenizerProfile, ViewTracker, is_decodable

# A real UTF-8 character needs at most 4 bytes; a buffer that grows past
# this without becoming decodable will never resolve, so force the check.
BUFFER_CAP = 8


@dataclass(frozen=True)
class RunParams:
    """Everything sender and receiver must agree on, plus sender-side
    switches that do not affect the transcript."""

    profile: TokenizerProfile
    provider: object
    key: bytes
    k: int
    precision: int
    skip_x: bool = True
    buffering: bool = True
    anchor_deferral: bool = True
    detection: bool = True          # off = baseline for overhead runs
    incremental_reset: bool = True
    debug_checks: bool = False
    meter: bool = True

    def __post_init__(self):
        if len(self.key) != 16:
            raise ConfigError("key must be 16 bytes")

    def candidates(self, prefix):
        return quantize(
            top_k_truncate(self.provider.next_distribution(prefix), self.k),
            self.precision,
        )


@dataclass(frozen=True)
class AmbiguityEvent:
    step: int                   # generation index (true tokens emitted so far)
    pred: tuple                 # predicted suffix from the divergence point
    retok: tuple                # re-tokenized suffix from the divergence point
    j_before: int
    j_after: int

    def __post_init__(self):
        if tuple(self.pred) == tuple(self.retok):
            raise ValueError("event without divergence")


@dataclass(frozen=True)
class LedgerEntry:
    """Per receiver-view position: what the receiver will extract there
    and what the payload says it should be."""

    token: int
    receiver_fragment: str
    intended_fragment: str


@dataclass
class StepStat:
    model_prob: float           # untruncated probability of the emitted token
    kld_bits: float             # codec sampling dist vs truncated model dist
    entropy_bits: float         # available embedding entropy this step


@dataclass
class EmbedResult:
    stego_text: object          # str, or bytes when the tail is mid-character
    true_sequence: list
    receiver_view: list
    context_len: int            # true tokens of shared context
    view_context_len: int       # view tokens of shared context
    events: list
    outcomes: list              # codec.StepOutcome per view position
    pointer: int                # total bits consumed (payload + synthetic pad)
    payload_len: int
    elapsed: float
    retok_calls: int = 0
    step_stats: list = field(default_factory=list)
    _payload: str = field(default="", repr=False)

    @property
    def generated_tokens(self) -> int:
        return len(self.true_sequence) - self.context_len

    @property
    def view_tokens(self) -> int:
        return len(self.receiver_view) - self.view_context_len

    @property
    def embedded_bits(self) -> int:
        return min(self.pointer, self.payload_len)

    @property
    def sender_ledger(self) -> list:
        """Intended fragments are the payload windows at each position's
        stream offset; bits past the payload end mirror the receiver
        fragment (synthetic pad carries no message)."""
        out = []
        offset = 0
        for o in self.outcomes:
            intended = "".join(
                self._payload[offset + b] if offset + b < self.payload_len else o.fragment[b]
                for b in range(o.fragment_len)
            )
            out.append(
                LedgerEntry(token=o.token, receiver_fragment=o.fragment, intended_fragment=intended)
            )
            offset += o.fragment_len
        return out


def detect_ambiguity(pred, retok) -> bool:
    """True iff the sequences differ in length or at any position."""
    return list(pred) != list(retok)


def corrective_reset(retok, key, candidates, precision, skip_x, context=()):
    """Decode the receiver-view sequence from the initial state; the
    caller overwrites (pointer, mask state) with the result."""
    result = codec.dec(retok, key, candidates, precision, skip_x, context=context)
    return result.pointer, result.state


def _divergence(pred, retok):
    n = min(len(pred), len(retok))
    for i in range(n):
        if pred[i] != retok[i]:
            return i
    return n


def embed(
    payload: str,
    context,
    params: RunParams,
    view_tokens: int | None = None,
    true_tokens: int | None = None,
) -> EmbedResult:
    """Run the sender until the view holds view_tokens generated tokens
    (or exactly true_tokens have been emitted).  A deferral window still
    open at the end is flushed through one final detection pass."""
    check_bits(payload)
    if (view_tokens is None) == (true_tokens is None):
        raise ConfigError("specify exactly one of view_tokens / true_tokens")
    profile, provider, key, precision = params.profile, params.provider, params.key, params.precision

    x = list(context)
    tracker = ViewTracker(profile, context)
    ctx_view = tracker.view()
    n_ctx = len(ctx_view)
    x_view = list(ctx_view)
    buffer: list[int] = []
    outcomes: list[codec.StepOutcome] = []
    events: list[AmbiguityEvent] = []
    step_stats: list[StepStat] = []
    j = 0
    pending = False             # a deferral postponed the last comparison
    retok_calls = 0
    emitted = 0
    budget = (true_tokens if true_tokens is not None else 4 * view_tokens) + 64

    def run_detection(step_index):
        nonlocal j, x_view, outcomes, pending, retok_calls
        retok = tracker.view()
        retok_calls += 1
        pending = False
        if retok[:n_ctx] != ctx_view:
            raise SynchronizationError("generation merged across the shared context")
        pred = x_view
        if not detect_ambiguity(pred, retok):
            x_view = list(retok)
            return
        d = _divergence(pred, retok)
        j_before = j
        tail = retok[n_ctx:]
        if params.incremental_reset:
            c = 0
            limit = min(len(outcomes), len(tail))
            while c < limit and outcomes[c].token == tail[c]:
                c += 1
            resume = codec.ExtractionResult(
                fragments=outcomes[:c],
                bits="".join(o.fragment for o in outcomes[:c]),
                state=codec.MaskState(key, c),
            )
            result = codec.dec(
                tail, key, params.candidates, precision, params.skip_x,
                context=ctx_view, resume=resume,
            )
        else:
            result = codec.dec(
                tail, key, params.candidates, precision, params.skip_x, context=ctx_view
            )
        j = result.pointer
        outcomes = result.fragments
        events.append(
            AmbiguityEvent(
                step=step_index if step_index is not None else emitted,
                pred=tuple(pred[d:]),
                retok=tuple(retok[d:]),
                j_before=j_before,
                j_after=j,
            )
        )
        x_view = list(retok)

    start = time.monotonic()
    while True:
        if true_tokens is not None:
            if emitted >= true_tokens:
                break
        elif not pending and len(x_view) - n_ctx >= view_tokens:
            break
        if emitted >= budget:
            raise SynchronizationError("generation budget exhausted inside a deferral window")

        u = len(x_view) - n_ctx
        dist = provider.next_distribution(x_view)
        truncated = top_k_truncate(dist, params.k)
        q = quantize(truncated, precision)
        outcome, j = codec.enc_step(
            q, payload, j,
            codec.mask_block(key, u, precision),
            codec.pad_block(key, u, precision),
        )
        token = outcome.token
        x.append(token)
        tracker.append(token)
        emitted += 1
        if params.meter:
            step_stats.append(
                StepStat(
                    model_prob=dist.prob_of(token),
                    kld_bits=_step_kld(q, truncated),
                    entropy_bits=entropy_bits(q),
                )
            )

        if not params.detection:
            x_view.append(token)
            outcomes.append(outcome)
            continue

        if params.anchor_deferral and profile.is_anchor(token):
            x_view.append(token)
            outcomes.append(outcome)
            pending = True
            continue

        if params.buffering and (buffer or profile.is_incomplete(token)):
            buffer.append(token)
            raw = b"".join(profile.bytes_of(t) for t in buffer)
            if not is_decodable(raw) and len(buffer) <= BUFFER_CAP:
                x_view.append(token)
                outcomes.append(outcome)
                pending = True
                continue
            buffer.clear()

        x_view.append(token)
        outcomes.append(outcome)
        run_detection(emitted)

        if params.debug_checks:
            assert x_view == tracker.view(), "view invariant violated"
            fresh = codec.dec(
                x_view[n_ctx:], key, params.candidates, precision, params.skip_x,
                context=ctx_view,
            )
            assert j == fresh.pointer, "pointer desynchronized from receiver"
            assert [o.fragment for o in outcomes] == [o.fragment for o in fresh.fragments]

    if params.detection and pending:
        run_detection(None)
    elapsed = time.monotonic() - start

    return EmbedResult(
        stego_text=profile.decode(x),
        true_sequence=x,
        receiver_view=x_view,
        context_len=len(list(context)),
        view_context_len=n_ctx,
        events=events,
        outcomes=outcomes,
        pointer=j,
        payload_len=len(payload),
        elapsed=elapsed,
        retok_calls=retok_calls,
        step_stats=step_stats,
        _payload=payload,
    )


def _step_kld(q, truncated: Distribution) -> float:
    """KLD in bits between the codec's effective sampling distribution
    (quantized masses) and the truncated model distribution."""
    probs = {tid: p for tid, p in truncated.entries}
    total = 0.0
    for tid, mass in q.entries:
        p = mass / q.scale
        total += p * math.log2(p / probs[tid])
    return total


def extract_detailed(stego_text, context, params: RunParams) -> codec.ExtractionResult:
    """Receiver side: re-encode the visible text, strip the shared
    context view, decode from the initial state."""
    profile = params.profile
    view = profile.encode(stego_text)
    ctx_view = profile.encode(profile.decode_bytes(list(context)))
    if view[: len(ctx_view)] != ctx_view:
        raise SynchronizationError("stego text does not extend the shared context")
    return codec.dec(
        view[len(ctx_view):],
        params.key,
        params.candidates,
        params.precision,
        params.skip_x,
        context=ctx_view,
    )


def extract(stego_text, context, params: RunParams) -> str:
    return extract_detailed(stego_text, context, params).bits


def ambiguity_trace(result: EmbedResult) -> tuple[bool, int, int]:
    """(any events, event count, generated token count) for one run."""
    return (bool(result.events), len(result.events), result.generated_tokens)
