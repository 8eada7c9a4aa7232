"""Acceptance suite: one test per release criterion, each printing a
pass line with the measured figures (run with -s to see them inline).
All runs use the built-in toy worlds and in-repo profiles; tolerances
are fixed here, not tuned per machine."""

import random
import time

import pytest

from retoksync import codec, toys
from retoksync.bits import random_bits
from retoksync.core import RunParams, embed, extract_detailed
from retoksync.correction import (
    CorrectionItem,
    apply_corrections,
    diff_group,
    encode_message,
    parse_message,
)
from retoksync.metrics import (
    ambiguity_statistics,
    kld_bits,
    ppl,
    rto,
    transcript_oracle,
    tv_distance,
)
from retoksync.pools import embed_aux_detailed, extract_aux
from retoksync.providers import Distribution, QuantizedDistribution
from retoksync.session import SessionConfig, simulate

KEY = bytes(range(16))
AUX_KEY = bytes(range(16, 32))


def params_for(world, key=KEY, **kw):
    defaults = dict(
        profile=world.profile,
        provider=world.provider(),
        key=key,
        k=world.provider_config.k,
        precision=world.provider_config.precision,
    )
    defaults.update(kw)
    return RunParams(**defaults)


def report(criterion, detail):
    print(f"\n[PASS] criterion {criterion}: {detail}")


def random_quantized(rng, precision, max_entries=10):
    n = rng.randrange(1, max_entries + 1)
    scale = 1 << precision
    cuts = sorted(rng.sample(range(1, scale), n - 1)) if n > 1 else []
    masses = [b - a for a, b in zip([0] + cuts, cuts + [scale])]
    ids = rng.sample(range(200), n)
    entries = sorted(zip(ids, masses), key=lambda e: (-e[1], e[0]))
    return QuantizedDistribution(tuple(entries), precision)


def random_corrupted_ledger(rng):
    from retoksync.correction import GroupLedger

    tokens = rng.randrange(4, 60)
    samples = rng.randrange(1, 5)
    lens = [rng.randrange(0, 5) for _ in range(tokens)]
    intended = [random_bits(rng, n) for n in lens]
    received = list(intended)
    candidates = [i for i, n in enumerate(lens) if n > 0]
    rng.shuffle(candidates)
    for pos in candidates[: rng.randrange(0, 6)]:
        received[pos] = "".join("1" if c == "0" else "0" for c in received[pos])
    cut = sorted(rng.sample(range(1, tokens), min(samples - 1, tokens - 1))) if samples > 1 else []
    return GroupLedger(
        tokens=tuple(range(tokens)),
        receiver_fragments=tuple(received),
        intended_fragments=tuple(intended),
        sample_boundaries=tuple(cut + [tokens]),
    )


def test_criterion_01_codec_marginal_exactness():
    started = time.monotonic()
    rng = random.Random(101)
    cases = [QuantizedDistribution(((0, 8), (1, 4), (2, 4)), 4)]
    for precision in (4, 6, 8, 10, 12):
        cases.extend(random_quantized(rng, precision) for _ in range(4))
    for q in cases:
        word = random_bits(rng, q.precision)
        counts = {tid: 0 for tid, _ in q.entries}
        for mask in range(q.scale):
            outcome, _ = codec.enc_step(q, word, 0, mask)
            counts[outcome.token] += 1
        for tid, mass in q.entries:
            assert counts[tid] == mass, f"token {tid}: {counts[tid]} != {mass}"
    elapsed = time.monotonic() - started
    assert elapsed < 10.0
    report(1, f"{len(cases)} alphabets exact over all masks in {elapsed:.2f}s")


def test_criterion_02_zero_kld_at_p30():
    started = time.monotonic()
    world = toys.rich_world()
    params = params_for(world)
    rng = random.Random(102)
    worst = 0.0
    for _ in range(100):
        run = embed(random_bits(rng, 64), (), params, view_tokens=25)
        for stat in run.step_stats:
            worst = max(worst, abs(stat.kld_bits))
    elapsed = time.monotonic() - started
    assert worst <= 1e-6, f"per-step KLD {worst}"
    assert f"{worst:.2f}" == "0.00"
    assert elapsed < 30.0
    report(2, f"max per-step KLD {worst:.2e} bits over 100 runs in {elapsed:.1f}s")


def test_criterion_03_transcript_equivalence():
    started = time.monotonic()
    # ambiguity-rich branch: Monte-Carlo against the exact natural channel
    world = toys.oracle_world()
    params = params_for(world)
    rng = random.Random(103)
    probe = [embed(random_bits(rng, 64), (), params, true_tokens=25) for _ in range(300)]
    trigger_rate = sum(len(r.events) for r in probe) / sum(r.generated_tokens for r in probe)
    assert trigger_rate >= 0.05, f"trigger rate {trigger_rate:.3f} below the rich threshold"
    natural, embedded = transcript_oracle(params, (), 3, trials=100_000, rng=rng)
    tv = tv_distance(natural, embedded)
    assert tv <= 0.02, f"TV distance {tv:.4f}"
    # zero-ambiguity branch: exhaustive enumeration, exact equality
    clean = toys.clean_world(slice_size=4, precision=8)
    clean_params = params_for(clean, k=4, precision=8)
    nat, emb = transcript_oracle(clean_params, (), 3, exhaustive=True)
    assert set(nat) == set(emb)
    for text in nat:
        assert nat[text] == pytest.approx(emb[text], abs=1e-12)
    elapsed = time.monotonic() - started
    assert elapsed < 300.0
    report(
        3,
        f"trigger rate {trigger_rate:.3f}, TV {tv:.4f} at 1e5 trials; "
        f"exhaustive equality over {len(nat)} texts in {elapsed:.0f}s",
    )


def test_criterion_04_ambiguity_free_exactness():
    world = toys.clean_world()
    params = params_for(world)
    rng = random.Random(104)
    total = correct = 0
    for _ in range(1000):
        payload = random_bits(rng, 64)
        run = embed(payload, (), params, view_tokens=20)
        assert run.events == []
        got = extract_detailed(run.stego_text, (), params).bits
        n = min(len(got), len(payload))
        total += n
        correct += sum(a == b for a, b in zip(got[:n], payload[:n]))
    accuracy = correct / total
    assert accuracy == 1.0
    report(4, f"bit accuracy {accuracy} over 1000 clean round trips ({total} bits)")


def test_criterion_05_error_locality_without_skip():
    world = toys.session_world()
    params = params_for(world, skip_x=False)
    rng = random.Random(105)
    ambiguous = 0
    attempts = 0
    wrong_bits = 0
    embedded_bits = 0
    while ambiguous < 1000:
        attempts += 1
        assert attempts < 20_000, "world no longer produces ambiguous runs"
        payload = random_bits(rng, 256)
        run = embed(payload, (), params, view_tokens=50)
        embedded_bits += run.embedded_bits
        if not run.events:
            continue
        ambiguous += 1
        got = extract_detailed(run.stego_text, (), params).bits
        allowed = set()
        off = 0
        for entry in run.sender_ledger:
            span = len(entry.receiver_fragment)
            if entry.receiver_fragment != entry.intended_fragment:
                allowed.update(range(off, off + span))
            off += span
        n = min(len(got), len(payload))
        for b in range(n):
            if got[b] != payload[b]:
                assert b in allowed, f"mismatch outside event fragments at bit {b}"
                wrong_bits += 1
    ratio = wrong_bits / embedded_bits
    assert ratio < 0.01, f"bit error ratio {ratio:.4f}"
    report(
        5,
        f"1000 ambiguous runs, all mismatches event-local, "
        f"bit error ratio {ratio:.4%} over {attempts} runs",
    )


def test_criterion_06_skip_x_exactness():
    world = toys.skipx_world()
    params = params_for(world)
    rng = random.Random(106)
    skip_runs = 0
    skipped_positions = 0
    attempts = 0
    while skip_runs < 50:
        attempts += 1
        assert attempts < 5000, "world no longer produces out-of-support merges"
        payload = random_bits(rng, 96)
        run = embed(payload, (), params, view_tokens=25)
        receiver = extract_detailed(run.stego_text, (), params)
        skipped = [o for o in receiver.fragments if o.skipped]
        if not skipped:
            continue
        skip_runs += 1
        for o in skipped:
            assert o.fragment_len == 0 and o.fragment == ""
        got = receiver.bits
        n = min(len(got), len(payload))
        assert got[:n] == payload[:n], "skip-x extraction must be exact"
        skipped_positions += len(skipped)
    report(
        6,
        f"{skip_runs} runs with {skipped_positions} out-of-support tokens, "
        f"all skipped with zero bits, accuracy 1.0",
    )


def test_criterion_07_correction_protocol():
    started = time.monotonic()
    rng = random.Random(107)
    for _ in range(10_000):
        group_len = rng.randrange(1, 120)
        lens = [rng.randrange(0, 6) for _ in range(group_len)]
        count = rng.randrange(0, min(group_len, 16) + 1)
        positions = sorted(rng.sample(range(group_len), count))
        items = [CorrectionItem(p, random_bits(rng, lens[p])) for p in positions]
        bits = encode_message(items, group_len)
        assert parse_message(bits + random_bits(rng, rng.randrange(0, 8)), lens, group_len) == items
    for _ in range(1000):
        ledger = random_corrupted_ledger(rng)
        items = diff_group(ledger)
        bits = encode_message(items, len(ledger.tokens))
        parsed = parse_message(bits, [len(f) for f in ledger.receiver_fragments], len(ledger.tokens))
        recovered = apply_corrections(parsed, ledger.receiver_fragments, ledger.sample_boundaries)
        start = 0
        for end, payload in zip(ledger.sample_boundaries, recovered):
            assert payload == "".join(ledger.intended_fragments[start:end])
            start = end
    elapsed = time.monotonic() - started
    assert elapsed < 60.0
    report(7, f"1e4 wire round trips and 1e3 corrupted groups restored in {elapsed:.1f}s")


def test_criterion_08_two_channel_end_to_end():
    primary = params_for(toys.session_world())
    aux = params_for(toys.pool_world(), key=AUX_KEY)
    ratios = {}
    for n in (5, 10, 20):
        config = SessionConfig(
            params=primary,
            aux_params=aux,
            group_size=n,
            sample_count=50 * n,
            sample_length=30,
            seed=108,
        )
        rep = simulate(config)
        assert len(rep.groups) == 50
        failures = [g for g in rep.groups if not g.success]
        assert not failures, f"n={n}: {failures[0].failure}"
        assert rep.success_rate == 1.0
        ratio = rep.error_ratios[2]
        assert 0.0 < ratio < 0.10
        ratios[n] = ratio
        assert sum(g.residual_bit_errors for g in rep.groups) > 0, "stream not ambiguity-rich"
    report(
        8,
        "50/50 groups recovered at n=5,10,20; correction-to-embedding "
        + ", ".join(f"n={n}: {r:.3%}" for n, r in ratios.items()),
    )


def test_criterion_09_aux_exactness_and_capacity_order():
    world = toys.pool_world()
    params = params_for(world)
    rng = random.Random(109)
    for _ in range(1000):
        payload = random_bits(rng, rng.randrange(1, 48))
        aux = embed_aux_detailed(payload, (), params)
        got = extract_aux(aux.stego_text, (), params)
        assert got[: len(payload)] == payload
        assert got == got[: aux.pointer]
    base_bits = base_tokens = aux_bits = aux_tokens = 0
    for _ in range(40):
        payload = random_bits(rng, 96)
        run = embed(payload, (), params, view_tokens=25)
        base_bits += run.pointer
        base_tokens += run.generated_tokens
        aux = embed_aux_detailed(payload, (), params)
        aux_bits += aux.pointer
        aux_tokens += aux.tokens
    aux_capacity = aux_bits / aux_tokens
    base_capacity = base_bits / base_tokens
    assert aux_capacity <= base_capacity
    report(
        9,
        f"1000 aux round trips exact; capacity {aux_capacity:.2f} (aux) "
        f"<= {base_capacity:.2f} (base) bits/token",
    )


def test_criterion_10_metric_formulas():
    assert rto(5.27, 5.18) == pytest.approx(1.74, abs=0.01)
    assert ppl([0.25] * 4) == 4.0
    p = Distribution(((0, 0.5), (1, 0.5)))
    q = Distribution(((0, 0.25), (1, 0.75)))
    assert kld_bits(p, q) == pytest.approx(0.2075, abs=1e-4)
    report(10, "rto(5.27,5.18)=1.74%, ppl(uniform-4)=4, kld=0.2075 bits")


def test_criterion_11_ambiguity_statistics_consistency():
    world = toys.session_world()
    params = params_for(world)
    rng = random.Random(111)
    lengths = (25, 50, 100)
    event_steps = []
    for _ in range(200):
        payload = random_bits(rng, 8 * 100 + 64)
        run = embed(payload, (), params, true_tokens=100)
        event_steps.append([e.step for e in run.events])
    rates = []
    for length in lengths:
        triples = [
            (any(s <= length for s in steps), sum(1 for s in steps if s <= length), length)
            for steps in event_steps
        ]
        sample_rate, token_rate = ambiguity_statistics(triples)
        triggers = sum(t[1] for t in triples)
        ambiguous = sum(1 for t in triples if t[0])
        assert triggers >= ambiguous
        rates.append((length, sample_rate, token_rate))
    assert rates[0][1] <= rates[1][1] <= rates[2][1]
    report(
        11,
        "sample ambiguity rate "
        + " <= ".join(f"{r:.3f}@T={ln}" for ln, r, _ in rates)
        + f"; token trigger rate {rates[-1][2]:.4f}",
    )


def test_criterion_12_overhead_bound():
    world = toys.clean_world()
    method = params_for(world, incremental_reset=True)
    baseline = params_for(world, detection=False)
    rng = random.Random(112)
    payloads = [random_bits(rng, 8 * 100 + 64) for _ in range(100)]
    t_method = t_baseline = 0.0
    for payload in payloads:
        t_method += embed(payload, (), method, view_tokens=100).elapsed
    for payload in payloads:
        t_baseline += embed(payload, (), baseline, view_tokens=100).elapsed
    overhead = rto(t_method, t_baseline)
    assert overhead <= 25.0, f"RTO {overhead:.1f}%"
    report(12, f"RTO {overhead:.2f}% over 100 clean runs of 100 tokens")
