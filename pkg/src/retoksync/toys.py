"""Self-contained toy worlds: hand-built tokenizer profiles paired with
deterministic toy providers.  These make every phenomenon the package
handles constructible on demand - merge ambiguity, out-of-support
tokens, incomplete bytes, anchor runs, prefix pools - at a scale where
brute-force verification is possible.
"""

from __future__ import annotations

from dataclasses import dataclass

from .providers import PrfToyProvider, ProviderConfig
from .tokenizer import TokenizerProfile, build_profile


@dataclass(frozen=True)
class ToyWorld:
    profile: TokenizerProfile
    provider_config: ProviderConfig

    def provider(self) -> PrfToyProvider:
        return PrfToyProvider(self.provider_config)


def _ids(profile: TokenizerProfile, surfaces) -> tuple:
    lookup = {bs: tid for tid, bs in enumerate(profile.token_bytes)}
    return tuple(lookup[s.encode()] for s in surfaces)


def clean_world(seed: int = 1, k: int = 8, precision: int = 30, slice_size: int = 8) -> ToyWorld:
    """No merges at all: re-tokenization can never disagree, so every run
    is ambiguity-free.  Baseline for exactness and overhead checks."""
    profile = build_profile([])
    letters = "abcdefghijklmnop"[:slice_size]
    cfg = ProviderConfig(
        kind="prf-toy", seed=seed, k=min(k, slice_size), precision=precision,
        vocab_ids=_ids(profile, letters),
    )
    return ToyWorld(profile, cfg)


def oracle_world(seed: int = 2, precision: int = 8) -> ToyWorld:
    """Tiny and merge-heavy: four candidates and two merge rules, one of
    which lands outside the candidate set, so adjacent picks trigger an
    event roughly every tenth step.  Small enough to enumerate visible
    texts exhaustively."""
    profile = build_profile([(b"a", b"b"), (b"b", b"a")])
    cfg = ProviderConfig(
        kind="prf-toy", seed=seed, k=4, precision=precision,
        vocab_ids=_ids(profile, ["a", "b", "ab", "c"]),
    )
    return ToyWorld(profile, cfg)


def rich_world(seed: int = 3, precision: int = 30) -> ToyWorld:
    """Six candidates with two in-support merge targets.  Merged tokens
    stay inside the candidate set, so events yield decodable fragments
    that may silently carry wrong bits - the case corrections exist for."""
    profile = build_profile([(b"a", b"b"), (b"c", b"d")])
    cfg = ProviderConfig(
        kind="prf-toy", seed=seed, k=6, precision=precision,
        vocab_ids=_ids(profile, ["a", "b", "c", "d", "ab", "cd"]),
    )
    return ToyWorld(profile, cfg)


def session_world(seed: int = 4, precision: int = 30) -> ToyWorld:
    """Wider alphabet for communication runs: more entropy per token and
    a lower trigger rate, so correction traffic stays a small fraction
    of the payload."""
    profile = build_profile([(b"a", b"b"), (b"c", b"d")])
    cfg = ProviderConfig(
        kind="prf-toy", seed=seed, k=12, precision=precision,
        vocab_ids=_ids(profile, ["a", "b", "c", "d", "e", "f", "g", "h", "i", "j", "ab", "cd"]),
    )
    return ToyWorld(profile, cfg)


def skipx_world(seed: int = 5, precision: int = 30) -> ToyWorld:
    """Adds merges whose outputs are never candidates: 'b' before 'a'
    re-tokenizes to a token outside every candidate set, producing
    X-tokens that only Skip-X decoding can get past."""
    profile = build_profile([(b"b", b"a"), (b"d", b"c")])
    cfg = ProviderConfig(
        kind="prf-toy", seed=seed, k=6, precision=precision,
        vocab_ids=_ids(profile, ["a", "b", "c", "d", "e", "f"]),
    )
    return ToyWorld(profile, cfg)


def pool_world(seed: int = 6, precision: int = 30) -> ToyWorld:
    """Prefix-laden candidate set for the pooled auxiliary channel:
    {a, ab, abc} and {b, bc} collapse into pools, leaving clearly less
    pool-level entropy than token-level entropy."""
    profile = build_profile([(b"a", b"b"), (b"ab", b"c"), (b"b", b"c")])
    cfg = ProviderConfig(
        kind="prf-toy", seed=seed, k=8, precision=precision,
        vocab_ids=_ids(profile, ["a", "ab", "abc", "b", "bc", "c", "d", "e"]),
    )
    return ToyWorld(profile, cfg)


def anything_world(seed: int = 7, precision: int = 30) -> ToyWorld:
    """The showcase merge chain: emitting 'any' then 'thing' re-tokenizes
    to the single token 'anything'."""
    profile = build_profile(
        [
            (b"a", b"n"), (b"t", b"h"), (b"i", b"n"),
            (b"an", b"y"), (b"in", b"g"), (b"th", b"ing"),
            (b"any", b"thing"),
        ]
    )
    cfg = ProviderConfig(
        kind="prf-toy", seed=seed, k=6, precision=precision,
        vocab_ids=_ids(profile, ["any", "thing", "anything", "s", "e", " "]),
    )
    return ToyWorld(profile, cfg)


def incomplete_world(seed: int = 8, precision: int = 30) -> ToyWorld:
    """Candidate set containing raw continuation bytes of a multi-byte
    character, so runs regularly emit tokens that are not standalone
    text and must be buffered."""
    # "中" is 0xE4 0xB8 0xAD; include each byte and the first pair.
    profile = build_profile([(bytes([0xE4]), bytes([0xB8]))])
    lookup = {bs: tid for tid, bs in enumerate(profile.token_bytes)}
    ids = (
        lookup[b"a"], lookup[b"b"], lookup[b"c"],
        0xE4, 0xB8, 0xAD,
        lookup[bytes([0xE4, 0xB8])],
    )
    cfg = ProviderConfig(
        kind="prf-toy", seed=seed, k=7, precision=precision, vocab_ids=ids,
    )
    return ToyWorld(profile, cfg)


def anchor_world(seed: int = 9, precision: int = 30) -> ToyWorld:
    """Whitespace tokens in the candidate set plus merges that glue a
    space run to the following word, exercising boundary deferral."""
    profile = build_profile([(b" ", b" "), (b" ", b"a"), (b"a", b"b")])
    cfg = ProviderConfig(
        kind="prf-toy", seed=seed, k=6, precision=precision,
        vocab_ids=_ids(profile, ["a", "b", "c", " ", "  ", " a"]),
    )
    return ToyWorld(profile, cfg)
