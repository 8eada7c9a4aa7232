"""Distribution-preserving interval codec with XOR masking.

Each step lays the candidate masses out as cumulative integer intervals
over [0, 2^P).  The encoder forms a P-bit word from the next payload
bits (padded past the payload end from a keyed pad stream), XORs it with
the per-step mask block, and emits the token whose interval contains the
result.  The bits every value in that interval shares - the common
binary prefix of lo and hi-1 - are exactly the payload bits revealed by
the token choice, so the decoder recovers them from the interval alone.

All interval arithmetic is exact integer arithmetic; no float ever
touches the masked value.  With the payload uniform, the masked value is
uniform on [0, 2^P), so the marginal token distribution equals the
quantized masses exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import prf
from .bits import bits_from_int, random_bits
from .errors import OutOfSupportError
from .providers import QuantizedDistribution

MASK_LABEL = b"mask"
PAD_LABEL = b"pad"


def mask_block(key: bytes, step: int, precision: int) -> int:
    """Deterministic P-bit mask for one receiver-view position."""
    return prf.prf_bits(key, MASK_LABEL, step, precision)


def pad_block(key: bytes, step: int, precision: int) -> int:
    """Keyed pad filling word bits past the payload end, keeping the
    masked value uniform after the message is exhausted."""
    return prf.prf_bits(key, PAD_LABEL, step, precision)


@dataclass(frozen=True)
class MaskState:
    """Mask/pad state: fully determined by the key and the receiver-view
    step index, which is what makes corrective reset cheap."""

    key: bytes
    step: int = 0

    def advanced(self, steps: int = 1) -> "MaskState":
        return MaskState(self.key, self.step + steps)


@dataclass(frozen=True)
class StepOutcome:
    token: int
    fragment_len: int
    fragment: str           # the payload bits this position carries
    skipped: bool = False

    def __post_init__(self):
        if self.skipped and self.fragment_len:
            raise ValueError("skipped step cannot carry bits")
        if len(self.fragment) != self.fragment_len:
            raise ValueError("fragment length mismatch")


@dataclass
class ExtractionResult:
    fragments: list[StepOutcome] = field(default_factory=list)
    bits: str = ""
    state: MaskState | None = None

    @property
    def pointer(self) -> int:
        return len(self.bits)


def common_prefix_len(lo: int, hi: int, precision: int) -> int:
    """Length of the binary prefix shared by every value in [lo, hi)."""
    x = lo ^ (hi - 1)
    return precision - x.bit_length()


def interval_of(q: QuantizedDistribution, token: int):
    lo = 0
    for tid, mass in q.entries:
        if tid == token:
            return lo, lo + mass
        lo += mass
    return None


def select(q: QuantizedDistribution, r: int):
    """Token whose interval contains r, with its interval."""
    lo = 0
    for tid, mass in q.entries:
        if r < lo + mass:
            return tid, lo, lo + mass
        lo += mass
    raise ValueError(f"masked value {r} outside [0, {q.scale})")


def payload_word(payload: str, j: int, precision: int, pad: int = 0) -> int:
    """P-bit big-endian word starting at payload position j; positions at
    or past the payload end take bits from the pad block."""
    word = 0
    for b in range(precision):
        pos = j + b
        if pos < len(payload):
            bit = payload[pos] == "1"
        else:
            bit = (pad >> (precision - 1 - b)) & 1
        word = (word << 1) | bit
    return word


def enc_step(
    q: QuantizedDistribution,
    payload: str,
    j: int,
    mask: int,
    pad: int = 0,
) -> tuple[StepOutcome, int]:
    """One embedding step: select by masked word, consume the revealed
    prefix.  Returns the outcome and the advanced pointer.  Fragment bits
    past the payload end are synthetic pad bits; the caller knows the
    payload length and flags them."""
    precision = q.precision
    word = payload_word(payload, j, precision, pad)
    token, lo, hi = select(q, word ^ mask)
    n = common_prefix_len(lo, hi, precision)
    fragment = bits_from_int(word >> (precision - n), n) if n else ""
    return StepOutcome(token=token, fragment_len=n, fragment=fragment), j + n


def dec_step(q: QuantizedDistribution, token: int, mask: int) -> StepOutcome:
    """Inverse of enc_step for the emitted token: the interval's shared
    prefix XOR the mask prefix is the carried payload window."""
    precision = q.precision
    interval = interval_of(q, token)
    if interval is None:
        raise OutOfSupportError(f"token {token} not in the candidate set")
    lo, hi = interval
    n = common_prefix_len(lo, hi, precision)
    if n == 0:
        return StepOutcome(token=token, fragment_len=0, fragment="")
    fragment = bits_from_int((lo >> (precision - n)) ^ (mask >> (precision - n)), n)
    return StepOutcome(token=token, fragment_len=n, fragment=fragment)


def dec(
    tokens,
    key: bytes,
    candidates,
    precision: int,
    skip_x: bool = True,
    context=(),
    resume: ExtractionResult | None = None,
) -> ExtractionResult:
    """Decode a receiver-view token sequence from the initial state.

    candidates(prefix) returns the QuantizedDistribution both parties
    derive for that prefix.  With skip_x, tokens outside the candidate
    set contribute nothing and advance only the position; without it
    they are a hard decode error.  The mask index is the position itself,
    so a resume from a clean prefix (resume covers tokens[:len(resume
    .fragments)]) is bit-identical to a full restart.
    """
    if resume is None:
        fragments: list[StepOutcome] = []
        bits: list[str] = []
        start = 0
    else:
        fragments = list(resume.fragments)
        bits = [o.fragment for o in fragments]
        start = len(fragments)
    prefix = list(context) + list(tokens[:start])
    for u in range(start, len(tokens)):
        token = tokens[u]
        q = candidates(prefix)
        if q.index_of(token) is None:
            if not skip_x:
                raise OutOfSupportError(
                    f"token {token} at position {u} outside the candidate set"
                )
            outcome = StepOutcome(token=token, fragment_len=0, fragment="", skipped=True)
        else:
            outcome = dec_step(q, token, mask_block(key, u, precision))
        fragments.append(outcome)
        bits.append(outcome.fragment)
        prefix.append(token)
    return ExtractionResult(
        fragments=fragments,
        bits="".join(bits),
        state=MaskState(key, len(tokens)),
    )


def marginal_check(q: QuantizedDistribution, trials: int, rng) -> dict[int, float]:
    """Empirical token frequencies of enc_step under uniform payload bits."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    counts: dict[int, int] = {tid: 0 for tid, _ in q.entries}
    for _ in range(trials):
        outcome, _ = enc_step(q, random_bits(rng, q.precision), 0, 0)
        counts[outcome.token] += 1
    return {tid: c / trials for tid, c in counts.items()}


def exact_marginal(q: QuantizedDistribution) -> dict[int, float]:
    """Brute-force marginal over every masked value; feasible for small
    precision.  Equals {id: mass/2^P} if the interval layout is correct."""
    counts: dict[int, int] = {tid: 0 for tid, _ in q.entries}
    for r in range(q.scale):
        tid, _, _ = select(q, r)
        counts[tid] += 1
    return {tid: c / q.scale for tid, c in counts.items()}
