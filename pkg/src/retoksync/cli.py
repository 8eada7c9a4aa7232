"""Command-line entry point.

Subcommands: tokenizer-train, embed, extract, session-run, eval,
ambiguity-stats.  Every report embeds the resolved configuration and a
version stamp; reruns with the same config and seed are byte-identical
apart from lines carrying wall-clock times.

Exit codes: 0 ok, 2 configuration or usage, 3 synchronization,
4 decode, 5 correction protocol, 1 other failures.
"""

from __future__ import annotations

import argparse
import random
import sys
from concurrent.futures import ProcessPoolExecutor

from . import __version__, prf
from .bits import load_payload, random_bits, save_payload
from .config import RunConfig
from .core import embed, extract_detailed
from .errors import (
    ConfigError,
    CorrectionOverflowError,
    OutOfSupportError,
    ProtocolError,
    RetokSyncError,
    SynchronizationError,
)
from .metrics import ambiguity_statistics, capacity_and_utilization, ppl, rto
from .session import SessionConfig, simulate
from .tokenizer import save_profile, train_bpe

EXIT_OK = 0
EXIT_OTHER = 1
EXIT_CONFIG = 2
EXIT_SYNC = 3
EXIT_DECODE = 4
EXIT_PROTOCOL = 5

MANIFEST_KEYS = [
    "provider.kind", "provider.seed", "provider.k", "provider.precision",
    "provider.temperature", "provider.slice", "provider.order",
    "run.skip_x", "run.context",
]


def _header(config: RunConfig) -> list[str]:
    return [f"# retoksync {__version__}"] + [f"# {line}" for line in config.echo()]


def _write_report(path, header, rows, summary):
    with open(path, "w", encoding="utf-8") as fh:
        for line in header:
            fh.write(line + "\n")
        if rows:
            columns = list(rows[0])
            fh.write("\t".join(columns) + "\n")
            for row in rows:
                fh.write("\t".join(str(row[c]) for c in columns) + "\n")
        fh.write("# summary\n")
        for key, value in summary.items():
            fh.write(f"{key}\t{value}\n")


def _key_fingerprint(key: bytes) -> str:
    return format(prf.prf_u64(key, b"fingerprint", 0), "016x")


def _load_config(args) -> RunConfig:
    return RunConfig.load(args.config, overrides=args.set or ())


def cmd_tokenizer_train(args) -> int:
    with open(args.corpus, encoding="utf-8") as fh:
        corpus = fh.read()
    profile = train_bpe(corpus, args.vocab_size)
    save_profile(profile, args.vocab_out, args.merges_out)
    print(f"trained {profile.vocab_size} tokens, {len(profile.merges)} merges")
    return EXIT_OK


def cmd_embed(args) -> int:
    config = _load_config(args)
    profile = config.profile()
    params = config.params(profile)
    context = config.context_ids(profile)
    payload = load_payload(args.payload, config.require("run", "payload_format"))
    run = embed(payload, context, params, view_tokens=config.get_int("run", "t"))
    data = run.stego_text.encode("utf-8") if isinstance(run.stego_text, str) else run.stego_text
    with open(args.out, "wb") as fh:
        fh.write(data)
    manifest = [f"# retoksync {__version__}", f"# key_fingerprint {_key_fingerprint(params.key)}"]
    manifest += [f"{line}" for line in config.echo()]
    with open(str(args.out) + ".manifest", "w", encoding="utf-8") as fh:
        fh.write("\n".join(manifest) + "\n")
    if args.events:
        with open(args.events, "w", encoding="utf-8") as fh:
            fh.write("step\tpred_suffix\tretok_suffix\tj_before\tj_after\n")
            for e in run.events:
                fh.write(
                    f"{e.step}\t{list(e.pred)}\t{list(e.retok)}\t{e.j_before}\t{e.j_after}\n"
                )
    print(
        f"embedded {run.embedded_bits}/{len(payload)} payload bits in "
        f"{run.generated_tokens} tokens, {len(run.events)} ambiguity events"
    )
    return EXIT_OK


def cmd_extract(args) -> int:
    config = _load_config(args)
    profile = config.profile()
    params = config.params(profile)
    if args.manifest:
        _check_manifest(args.manifest, config, params.key)
    context = config.context_ids(profile)
    with open(args.stego, "rb") as fh:
        stego = fh.read()
    result = extract_detailed(stego, context, params)
    save_payload(args.out, result.bits, config.require("run", "payload_format"))
    print(f"extracted {result.pointer} bits from {len(result.fragments)} tokens")
    return EXIT_OK


def _check_manifest(path, config: RunConfig, key: bytes) -> None:
    recorded = {}
    fingerprint = None
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line.startswith("# key_fingerprint "):
                fingerprint = line.split()[-1]
            elif line and not line.startswith("#") and " = " in line:
                name, _, value = line.partition(" = ")
                recorded[name.strip()] = value.strip()
    mine = {}
    for line in config.echo():
        name, _, value = line.partition(" = ")
        mine[name.strip()] = value.strip()
    for name in MANIFEST_KEYS:
        if name in recorded and recorded.get(name) != mine.get(name):
            raise SynchronizationError(
                f"config mismatch with sender manifest: {name} = "
                f"{mine.get(name)!r}, sender used {recorded[name]!r}"
            )
    if fingerprint is not None and fingerprint != _key_fingerprint(key):
        raise SynchronizationError("key fingerprint differs from the sender manifest")


def _eval_one(values, index):
    """One eval run: method and detection-disabled baseline on the same
    payload; returns a report row.  Top-level so worker processes can
    import it."""
    config = RunConfig(values=values)
    profile = config.profile()
    params = config.params(profile)
    baseline_params = config.params(profile, detection=False)
    context = config.context_ids(profile)
    t = config.get_int("run", "t")
    rng = random.Random(config.get_int("eval", "seed") * 1_000_003 + index)
    payload = random_bits(rng, 8 * t + 64)
    run = embed(payload, context, params, view_tokens=t)
    base = embed(payload, context, baseline_params, view_tokens=t)
    got = extract_detailed(run.stego_text, context, params)
    n = min(len(got.bits), len(payload))
    correct = sum(a == b for a, b in zip(got.bits[:n], payload[:n]))
    capacity, utilization = capacity_and_utilization(run)
    klds = [s.kld_bits for s in run.step_stats]
    return {
        "run": index,
        "tokens": run.generated_tokens,
        "embedded_bits": run.embedded_bits,
        "capacity": f"{capacity:.4f}",
        "utilization": f"{utilization:.4f}",
        "ave_kld": f"{sum(klds) / len(klds):.3e}",
        "max_kld": f"{max(klds):.3e}",
        "ppl": f"{ppl([s.model_prob for s in run.step_stats]):.4f}",
        "events": len(run.events),
        "accuracy": f"{correct / n if n else 1.0:.6f}",
        "time_method_s": f"{run.elapsed:.6f}",
        "time_baseline_s": f"{base.elapsed:.6f}",
    }


def cmd_eval(args) -> int:
    config = _load_config(args)
    runs = args.runs if args.runs is not None else config.get_int("eval", "runs")
    indices = range(runs)
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            rows = list(pool.map(_eval_one, [config.values] * runs, indices))
    else:
        rows = [_eval_one(config.values, i) for i in indices]
    # timing stays out of the data rows so reruns compare byte-identical
    t_method = sum(float(r.pop("time_method_s")) for r in rows)
    t_baseline = sum(float(r.pop("time_baseline_s")) for r in rows)
    traces = [(r["events"] > 0, r["events"], r["tokens"]) for r in rows]
    sample_rate, token_rate = ambiguity_statistics(traces)
    summary = {
        "runs": runs,
        "ave_ppl": f"{sum(float(r['ppl']) for r in rows) / runs:.4f}",
        "ave_kld": f"{sum(float(r['ave_kld']) for r in rows) / runs:.3e}",
        "max_kld": f"{max(float(r['max_kld']) for r in rows):.3e}",
        "capacity": f"{sum(float(r['capacity']) for r in rows) / runs:.4f}",
        "utilization": f"{sum(float(r['utilization']) for r in rows) / runs:.4f}",
        "accuracy": f"{sum(float(r['accuracy']) for r in rows) / runs:.6f}",
        "sample_ambiguity_rate": f"{sample_rate:.4f}",
        "token_trigger_rate": f"{token_rate:.6f}",
        "time_total_s": f"{t_method:.6f}",
        "time_rto_percent": f"{rto(t_method, t_baseline):.2f}",
    }
    _write_report(args.report, _header(config), rows, summary)
    print(f"eval report written to {args.report}")
    return EXIT_OK


def cmd_session_run(args) -> int:
    config = _load_config(args)
    profile = config.profile()
    params = config.params(profile)
    aux_key = prf.derive_key(params.key, b"aux")
    aux_params = config.params(profile, k=config.get_int("session", "aux_k"), key=aux_key)
    session = SessionConfig(
        params=params,
        aux_params=aux_params,
        group_size=config.get_int("session", "group_size"),
        sample_count=config.get_int("session", "sample_count"),
        sample_length=config.get_int("session", "sample_length"),
        seed=config.get_int("session", "seed"),
        contexts=config.context_ids(profile),
        aux_context=config.context_ids(profile, "session", "aux_context"),
    )
    report = simulate(session)
    rows = [
        {
            "group": g.index,
            "success": int(g.success),
            "residual_bit_errors": g.residual_bit_errors,
            "error_tokens": g.error_tokens,
            "items": g.items,
            "correction_bits": g.correction_bits,
            "embedded_bits": g.embedded_bits,
            "generated_tokens": g.generated_tokens,
            "aux_tokens": g.aux_tokens,
            "failure": g.failure or "-",
        }
        for g in report.groups
    ]
    bit_ratio, token_ratio, corr_ratio = report.error_ratios
    summary = {
        "groups": len(report.groups),
        "truncated_samples": report.truncated_samples,
        "success_rate": f"{report.success_rate:.4f}",
        "avg_error_bits": f"{report.avg_error:.4f}",
        "avg_correction_bits": f"{report.avg_correction_bits:.4f}",
        "max_correction_bits": report.max_correction_bits,
        "primary_utilization": f"{report.primary_utilization:.4f}",
        "aux_utilization": f"{report.aux_utilization:.4f}",
        "bit_error_ratio": f"{bit_ratio:.6f}",
        "token_error_ratio": f"{token_ratio:.6f}",
        "correction_to_embedding_ratio": f"{corr_ratio:.6f}",
        "time_embed_s": f"{sum(g.embed_seconds for g in report.groups):.6f}",
        "time_extract_s": f"{sum(g.extract_seconds for g in report.groups):.6f}",
    }
    _write_report(args.report, _header(config), rows, summary)
    print(f"session report written to {args.report}")
    return EXIT_OK


def cmd_ambiguity_stats(args) -> int:
    config = _load_config(args)
    profile = config.profile()
    lengths = sorted(int(x) for x in args.lengths.split(","))
    ks = [int(x) for x in args.ks.split(",")] if args.ks else [config.get_int("provider", "k")]
    context = config.context_ids(profile)
    rows = []
    for k in ks:
        params = config.params(profile, k=k)
        horizon = max(lengths)
        event_steps = []
        tokens_per_sample = []
        rng = random.Random(config.get_int("eval", "seed"))
        for _ in range(args.samples):
            payload = random_bits(rng, 8 * horizon + 64)
            run = embed(payload, context, params, true_tokens=horizon)
            event_steps.append([e.step for e in run.events])
            tokens_per_sample.append(run.generated_tokens)
        for length in lengths:
            ambiguous = sum(1 for steps in event_steps if any(s <= length for s in steps))
            triggers = sum(sum(1 for s in steps if s <= length) for steps in event_steps)
            rows.append(
                {
                    "k": k,
                    "length": length,
                    "samples": args.samples,
                    "ambiguous_samples": ambiguous,
                    "sample_rate": f"{ambiguous / args.samples:.4f}",
                    "trigger_tokens": triggers,
                    "token_rate": f"{triggers / (args.samples * length):.6f}",
                }
            )
    summary = {"lengths": args.lengths, "ks": ",".join(str(k) for k in ks)}
    _write_report(args.report, _header(config), rows, summary)
    print(f"ambiguity report written to {args.report}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="retoksync",
        description="tokenization-resynchronizing text steganography toolkit",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=False, help="flat key=value config file")
        p.add_argument(
            "--set", action="append", metavar="SECTION.KEY=VALUE",
            help="override a config value (repeatable)",
        )

    p = sub.add_parser("tokenizer-train", help="learn a BPE profile from a corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--vocab-size", type=int, required=True)
    p.add_argument("--vocab-out", required=True)
    p.add_argument("--merges-out", required=True)
    p.set_defaults(func=cmd_tokenizer_train)

    p = sub.add_parser("embed", help="embed a payload into stego text")
    common(p)
    p.add_argument("--payload", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--events", help="write the ambiguity event trace here")
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("extract", help="extract the payload from stego text")
    common(p)
    p.add_argument("--stego", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--manifest", help="sender manifest to cross-check the config against")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("session-run", help="two-channel grouped-correction simulation")
    common(p)
    p.add_argument("--report", required=True)
    p.set_defaults(func=cmd_session_run)

    p = sub.add_parser("eval", help="metrics over repeated runs, with RTO baseline")
    common(p)
    p.add_argument("--report", required=True)
    p.add_argument("--runs", type=int)
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("ambiguity-stats", help="ambiguity frequency sweep")
    common(p)
    p.add_argument("--report", required=True)
    p.add_argument("--lengths", default="25,50,100")
    p.add_argument("--ks", help="comma-separated top-k values")
    p.add_argument("--samples", type=int, default=200)
    p.set_defaults(func=cmd_ambiguity_stats)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SynchronizationError as exc:
        print(f"synchronization error: {exc}", file=sys.stderr)
        return EXIT_SYNC
    except OutOfSupportError as exc:
        print(f"decode error: {exc}", file=sys.stderr)
        return EXIT_DECODE
    except (ProtocolError, CorrectionOverflowError) as exc:
        print(f"protocol error: {exc}", file=sys.stderr)
        return EXIT_PROTOCOL
    except RetokSyncError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_OTHER
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_OTHER


if __name__ == "__main__":
    sys.exit(main())
