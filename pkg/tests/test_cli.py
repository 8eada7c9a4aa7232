import pytest

from retoksync import toys
from retoksync.cli import (
    EXIT_CONFIG,
    EXIT_DECODE,
    EXIT_OK,
    EXIT_SYNC,
    main,
)
from retoksync.config import RunConfig
from retoksync.tokenizer import load_profile, save_profile

CORPUS = "the cat sat on the mat. anything at all, any thing goes.\n" * 6

SLICE = "a,b,c,d,e,f,g,h,i,j,ab,cd"


@pytest.fixture
def world_files(tmp_path):
    """Profile files plus a config for the session toy world."""
    world = toys.session_world()
    vocab, merges = tmp_path / "vocab.txt", tmp_path / "merges.txt"
    save_profile(world.profile, vocab, merges)
    config = tmp_path / "run.cfg"
    config.write_text(
        f"""
[tokenizer]
vocab = {vocab}
merges = {merges}

[provider]
kind = prf-toy
seed = 4
k = 12
precision = 30
slice = {SLICE}

[run]
key = 000102030405060708090a0b0c0d0e0f
t = 30

[session]
group_size = 5
sample_count = 10
sample_length = 25
aux_k = 8

[eval]
runs = 5
""",
        encoding="utf-8",
    )
    return tmp_path, config


class TestTokenizerTrain:
    def test_round_trip_and_determinism(self, tmp_path):
        corpus = tmp_path / "corpus.txt"
        corpus.write_text(CORPUS, encoding="utf-8")
        outs = []
        for tag in ("one", "two"):
            v, m = tmp_path / f"v_{tag}.txt", tmp_path / f"m_{tag}.txt"
            code = main(
                [
                    "tokenizer-train", "--corpus", str(corpus), "--vocab-size", "300",
                    "--vocab-out", str(v), "--merges-out", str(m),
                ]
            )
            assert code == EXIT_OK
            outs.append((v.read_bytes(), m.read_bytes()))
        assert outs[0] == outs[1]
        profile = load_profile(tmp_path / "v_one.txt", tmp_path / "m_one.txt")
        assert profile.vocab_size <= 300

    def test_byte_only_vocab_no_merges(self, tmp_path):
        corpus = tmp_path / "corpus.txt"
        corpus.write_text("abc", encoding="utf-8")
        v, m = tmp_path / "v.txt", tmp_path / "m.txt"
        assert main(
            ["tokenizer-train", "--corpus", str(corpus), "--vocab-size", "256",
             "--vocab-out", str(v), "--merges-out", str(m)]
        ) == EXIT_OK
        assert m.read_text() == ""


class TestEmbedExtract:
    def test_file_round_trip(self, world_files):
        tmp, config = world_files
        payload = tmp / "payload.bits"
        payload.write_text("1011001110001111010101" * 3 + "\n")
        stego = tmp / "stego.txt"
        out = tmp / "recovered.bits"
        assert main(["embed", "--config", str(config), "--payload", str(payload),
                     "--out", str(stego), "--events", str(tmp / "events.tsv")]) == EXIT_OK
        assert (tmp / "events.tsv").exists()
        assert (tmp / "stego.txt.manifest").exists()
        assert main(["extract", "--config", str(config), "--stego", str(stego),
                     "--out", str(out), "--manifest", str(stego) + ".manifest"]) == EXIT_OK
        sent = "".join(payload.read_text().split())
        got = "".join(out.read_text().split())
        n = min(len(sent), len(got))
        assert got[:n] == sent[:n]

    def test_rerun_byte_identical(self, world_files):
        tmp, config = world_files
        payload = tmp / "payload.bits"
        payload.write_text("10110011\n")
        blobs = []
        for tag in ("a", "b"):
            stego = tmp / f"stego_{tag}.txt"
            assert main(["embed", "--config", str(config), "--payload", str(payload),
                         "--out", str(stego)]) == EXIT_OK
            blobs.append(stego.read_bytes())
        assert blobs[0] == blobs[1]

    def test_mismatched_k_sync_error(self, world_files):
        tmp, config = world_files
        payload = tmp / "payload.bits"
        payload.write_text("10110011\n")
        stego = tmp / "stego.txt"
        assert main(["embed", "--config", str(config), "--payload", str(payload),
                     "--out", str(stego)]) == EXIT_OK
        code = main(["extract", "--config", str(config), "--set", "provider.k=6",
                     "--stego", str(stego), "--out", str(tmp / "r.bits"),
                     "--manifest", str(stego) + ".manifest"])
        assert code == EXIT_SYNC

    def test_wrong_key_yields_noise(self, world_files):
        tmp, config = world_files
        payload = tmp / "payload.bits"
        bits = "10110011" * 10
        payload.write_text(bits + "\n")
        stego = tmp / "stego.txt"
        assert main(["embed", "--config", str(config), "--payload", str(payload),
                     "--out", str(stego)]) == EXIT_OK
        out = tmp / "r.bits"
        assert main(["extract", "--config", str(config),
                     "--set", "run.key=ffffffffffffffffffffffffffffffff",
                     "--stego", str(stego), "--out", str(out)]) == EXIT_OK
        got = "".join(out.read_text().split())
        n = min(len(bits), len(got))
        mismatch = sum(a != b for a, b in zip(got[:n], bits[:n])) / n
        # reported, not asserted hard: noise should hover near one half
        assert 0.2 < mismatch < 0.8

    def test_missing_config_value(self, world_files, tmp_path):
        tmp, config = world_files
        code = main(["embed", "--config", str(config), "--set", "run.key=",
                     "--payload", str(tmp / "nope.bits"), "--out", str(tmp / "x")])
        assert code == EXIT_CONFIG

    def test_tampered_stego_decode_error_without_skip(self, world_files):
        # with skipping disabled, an out-of-support token is a decode error
        tmp, config = world_files
        payload = tmp / "payload.bits"
        payload.write_text("10110011" * 8 + "\n")
        stego = tmp / "stego.txt"
        assert main(["embed", "--config", str(config), "--set", "run.skip_x=false",
                     "--payload", str(payload), "--out", str(stego)]) == EXIT_OK
        stego.write_bytes(stego.read_bytes() + b"zz")  # 'z' is never a candidate
        code = main(["extract", "--config", str(config), "--set", "run.skip_x=false",
                     "--stego", str(stego), "--out", str(tmp / "r.bits")])
        assert code == EXIT_DECODE

    def test_ngram_provider_config(self, world_files):
        tmp, config = world_files
        train = tmp / "train.txt"
        train.write_text("abab abab abab", encoding="utf-8")
        payload = tmp / "payload.bits"
        payload.write_text("1011\n")
        stego = tmp / "stego_ngram.txt"
        code = main(["embed", "--config", str(config),
                     "--set", "provider.kind=ngram", "--set", f"provider.train={train}",
                     "--set", "provider.k=3", "--set", "run.t=8",
                     "--payload", str(payload), "--out", str(stego)])
        assert code == EXIT_OK
        out = tmp / "r_ngram.bits"
        assert main(["extract", "--config", str(config),
                     "--set", "provider.kind=ngram", "--set", f"provider.train={train}",
                     "--set", "provider.k=3", "--set", "run.t=8",
                     "--stego", str(stego), "--out", str(out)]) == EXIT_OK
        got = "".join(out.read_text().split())
        assert got[: min(4, len(got))] == "1011"[: min(4, len(got))]


class TestSessionAndEval:
    def test_session_report(self, world_files):
        tmp, config = world_files
        report = tmp / "session.tsv"
        assert main(["session-run", "--config", str(config), "--report", str(report)]) == EXIT_OK
        text = report.read_text()
        assert "success_rate\t1.0000" in text
        assert "# retoksync" in text

    def test_eval_report_and_determinism(self, world_files):
        tmp, config = world_files
        reports = []
        for tag in ("a", "b"):
            path = tmp / f"eval_{tag}.tsv"
            assert main(["eval", "--config", str(config), "--report", str(path),
                         "--runs", "4"]) == EXIT_OK
            lines = [
                ln for ln in path.read_text().splitlines() if "time" not in ln
            ]
            reports.append(lines)
        assert reports[0] == reports[1]
        assert any("rto" in ln for ln in (tmp / "eval_a.tsv").read_text().splitlines())

    def test_eval_jobs_match_serial(self, world_files):
        tmp, config = world_files
        serial, parallel = tmp / "serial.tsv", tmp / "parallel.tsv"
        assert main(["eval", "--config", str(config), "--report", str(serial),
                     "--runs", "4"]) == EXIT_OK
        assert main(["eval", "--config", str(config), "--report", str(parallel),
                     "--runs", "4", "--jobs", "2"]) == EXIT_OK
        strip = lambda p: [ln for ln in p.read_text().splitlines() if "time" not in ln]
        assert strip(serial) == strip(parallel)

    def test_ambiguity_sweep_monotone(self, world_files):
        tmp, config = world_files
        report = tmp / "ambiguity.tsv"
        assert main(["ambiguity-stats", "--config", str(config), "--report", str(report),
                     "--lengths", "10,20,40", "--samples", "40"]) == EXIT_OK
        rows = [
            ln.split("\t")
            for ln in report.read_text().splitlines()
            if ln and ln[0].isdigit()
        ]
        rates = [float(r[4]) for r in rows]
        assert rates == sorted(rates)


class TestEnvOverride:
    def test_env_beats_file_flag_beats_env(self, world_files, monkeypatch):
        tmp, config = world_files
        monkeypatch.setenv("RETOKSYNC_PROVIDER_K", "6")
        cfg = RunConfig.load(config)
        assert cfg.get_int("provider", "k") == 6
        cfg = RunConfig.load(config, overrides=["provider.k=10"])
        assert cfg.get_int("provider", "k") == 10


class TestSliceSurfaces:
    def test_spaces_after_commas_tolerated(self, world_files):
        tmp, config = world_files
        spaced = ", ".join(SLICE.split(","))
        cfg = RunConfig.load(config, overrides=[f"provider.slice={spaced}"])
        profile = cfg.profile()
        assert len(cfg.provider_config(profile).vocab_ids) == len(SLICE.split(","))

    def test_quoting_preserves_leading_space_tokens(self, tmp_path):
        # trained vocabularies carry leading-space tokens like ' cat'
        from retoksync.tokenizer import train_bpe

        profile = train_bpe("the cat sat. the cat sat. the cat ate.", 280)
        assert b" cat" in profile.token_bytes
        save_profile(profile, tmp_path / "v.txt", tmp_path / "m.txt")
        cfg = RunConfig.load(
            overrides=[
                f"tokenizer.vocab={tmp_path / 'v.txt'}",
                f"tokenizer.merges={tmp_path / 'm.txt'}",
                "provider.slice=' cat', ' the', a, '.'",
            ]
        )
        ids = cfg.provider_config(cfg.profile()).vocab_ids
        surfaces = [profile.token_bytes[t] for t in ids]
        assert surfaces == [b" cat", b" the", b"a", b"."]
