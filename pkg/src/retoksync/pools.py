"""Auxiliary channel: ambiguity-aware token pools as the embedding unit.

Candidates whose surfaces are byte-prefixes of one another are grouped
into pools (transitive closure, union-find).  The payload selects a
pool through the interval codec; the member inside the pool is drawn
from a keyed stream both parties can reproduce.  Because members of
different pools are never prefix-related, the receiver can attribute
the upcoming text to exactly one pool, and because the in-pool draw is
reproducible it knows precisely which member the sender emitted and how
many bytes it consumed.  Extraction therefore walks the surface text
directly and is exact regardless of how the text re-tokenizes; the
price is that only pool-level entropy carries payload.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import codec, prf
from .bits import check_bits
from .errors import SynchronizationError
from .providers import QuantizedDistribution, canonical_order
from .tokenizer import TokenizerProfile

POOL_KEY_LABEL = b"pool"


@dataclass(frozen=True)
class Pool:
    members: tuple              # (token_id, mass) canonical order
    mass: int

    @property
    def member_ids(self) -> tuple:
        return tuple(tid for tid, _ in self.members)


@dataclass(frozen=True)
class PoolPartition:
    pools: tuple                # canonical order: descending mass, min member id
    source: QuantizedDistribution

    def pool_distribution(self) -> QuantizedDistribution:
        """Pool-level alphabet: pool index plays the role of token id."""
        entries = tuple((idx, pool.mass) for idx, pool in enumerate(self.pools))
        return QuantizedDistribution(entries=entries, precision=self.source.precision)

    def pool_of_token(self, token_id: int):
        for idx, pool in enumerate(self.pools):
            if token_id in pool.member_ids:
                return idx
        return None


class _UnionFind:
    def __init__(self, items):
        self.parent = {x: x for x in items}

    def find(self, x):
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[rb] = ra


def build_pools(q: QuantizedDistribution, profile: TokenizerProfile) -> PoolPartition:
    """Merge candidates u, v whenever one surface is a byte-prefix of the
    other; pools are the resulting classes."""
    ids = [tid for tid, _ in q.entries]
    masses = dict(q.entries)
    uf = _UnionFind(ids)
    for i, u in enumerate(ids):
        bu = profile.bytes_of(u)
        for v in ids[i + 1 :]:
            bv = profile.bytes_of(v)
            if bu.startswith(bv) or bv.startswith(bu):
                uf.union(u, v)
    groups: dict[int, list[int]] = {}
    for tid in ids:
        groups.setdefault(uf.find(tid), []).append(tid)
    pools = [
        Pool(
            members=tuple(canonical_order([(tid, masses[tid]) for tid in members])),
            mass=sum(masses[tid] for tid in members),
        )
        for members in groups.values()
    ]
    pools.sort(key=lambda p: (-p.mass, min(p.member_ids)))
    return PoolPartition(pools=tuple(pools), source=q)


def member_at(pool: Pool, r: int) -> int:
    """Member owning position r of the pool's cumulative mass layout."""
    acc = 0
    for tid, mass in pool.members:
        acc += mass
        if r < acc:
            return tid
    raise ValueError(f"draw {r} outside pool mass {pool.mass}")


def _draw_member(pool: Pool, pool_key: bytes, step: int) -> int:
    """Reproducible in-pool draw, weighted by member masses."""
    return member_at(pool, prf.prf_u64(pool_key, b"draw", step) % pool.mass)


@dataclass
class AuxEmbedResult:
    stego_text: object
    tokens: int
    entropy_bits: float         # summed pool-level entropy
    pointer: int


def embed_aux_detailed(payload: str, context, params, max_tokens: int = 4096) -> AuxEmbedResult:
    """Generate auxiliary stego text until the whole payload is embedded.
    params is a core.RunParams; its detection switches are irrelevant
    here because this channel needs no corrective machinery."""
    from .providers import entropy_bits as _entropy

    check_bits(payload)
    profile, key = params.profile, params.key
    precision = params.precision
    pool_key = prf.derive_key(key, POOL_KEY_LABEL)
    x = list(context)
    j = 0
    steps = 0
    entropy = 0.0
    while j < len(payload):
        if steps >= max_tokens:
            raise SynchronizationError(
                f"auxiliary payload of {len(payload)} bits does not fit in {max_tokens} tokens"
            )
        partition = build_pools(params.candidates(x), profile)
        pool_dist = partition.pool_distribution()
        outcome, j = codec.enc_step(
            pool_dist,
            payload,
            j,
            codec.mask_block(key, steps, precision),
            codec.pad_block(key, steps, precision),
        )
        entropy += _entropy(pool_dist)
        pool = partition.pools[outcome.token]
        x.append(_draw_member(pool, pool_key, steps))
        steps += 1
    return AuxEmbedResult(
        stego_text=profile.decode(x), tokens=steps, entropy_bits=entropy, pointer=j
    )


def embed_aux(payload: str, context, params, max_tokens: int = 4096):
    return embed_aux_detailed(payload, context, params, max_tokens).stego_text


def extract_aux_detailed(stego_text, context, params) -> codec.ExtractionResult:
    """Walk the surface text: identify the pool the upcoming bytes belong
    to (unique, since cross-pool surfaces are never prefix-related),
    reproduce the in-pool draw to learn the emitted member and advance
    by its byte length, and decode the pool choice."""
    profile, key, precision = params.profile, params.key, params.precision
    pool_key = prf.derive_key(key, POOL_KEY_LABEL)
    text = stego_text.encode("utf-8") if isinstance(stego_text, str) else bytes(stego_text)
    context = list(context)
    prefix_bytes = profile.decode_bytes(context)
    if not text.startswith(prefix_bytes):
        raise SynchronizationError("auxiliary text does not extend the shared context")
    pos = len(prefix_bytes)
    x = list(context)
    fragments = []
    bits = []
    step = 0
    while pos < len(text):
        partition = build_pools(params.candidates(x), profile)
        pool_index = None
        for idx, pool in enumerate(partition.pools):
            if any(text.startswith(profile.bytes_of(tid), pos) for tid in pool.member_ids):
                pool_index = idx
                break
        if pool_index is None:
            raise SynchronizationError(f"auxiliary text at byte {pos} matches no candidate pool")
        member = _draw_member(partition.pools[pool_index], pool_key, step)
        member_bytes = profile.bytes_of(member)
        if not text.startswith(member_bytes, pos):
            raise SynchronizationError(
                f"reproduced in-pool draw disagrees with the text at byte {pos}"
            )
        outcome = codec.dec_step(
            partition.pool_distribution(), pool_index, codec.mask_block(key, step, precision)
        )
        fragments.append(outcome)
        bits.append(outcome.fragment)
        x.append(member)
        pos += len(member_bytes)
        step += 1
    return codec.ExtractionResult(
        fragments=fragments, bits="".join(bits), state=codec.MaskState(key, step)
    )


def extract_aux(stego_text, context, params) -> str:
    return extract_aux_detailed(stego_text, context, params).bits
