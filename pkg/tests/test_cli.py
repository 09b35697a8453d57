import json

import numpy as np
import pytest
from filelock import FileLock

from phondur.cli import main
from phondur.corpus import load_cache
from phondur.stats import expected_durations, speech_rates

TEXTGRID = '''File type = "ooTextFile"
Object class = "TextGrid"

xmin = 0
xmax = 0.4
tiers? <exists>
size = 1
item []:
    item [1]:
        class = "IntervalTier"
        name = "phones"
        xmin = 0
        xmax = 0.4
        intervals: size = 2
        intervals [1]:
            xmin = 0.0
            xmax = 0.15
            text = "AH0"
        intervals [2]:
            xmin = 0.15
            xmax = 0.4
            text = "K"
'''


def run(*argv):
    return main([str(a) for a in argv])


@pytest.fixture()
def synth_dir(tmp_path):
    out = tmp_path / "synth"
    assert run("synth", "--out-dir", out, "--n-speakers", 6, "--utts-per-speaker", 8,
               "--phones-per-utt", 20, "--signature-strength", 0.4, "--seed", 5) == 0
    return out


def test_synth_then_ingest_round_trip(synth_dir, tmp_path, capsys):
    ingest_dir = tmp_path / "ingest"
    code = run("ingest", "--ctm", synth_dir / "synth.ctm", "--utt2spk", synth_dir / "synth.utt2spk",
               "--out-dir", ingest_dir, "--seed", 5)
    assert code == 0
    assert "48 utterances / 6 speakers" in capsys.readouterr().out
    corpus = load_cache(ingest_dir / "corpus.npz")
    synth_corpus = load_cache(synth_dir / "synth-corpus.npz")
    assert [u.id for u in corpus.utterances] == [u.id for u in synth_corpus.utterances]
    for a, b in zip(corpus.utterances, synth_corpus.utterances):
        np.testing.assert_allclose(a.durations, b.durations, atol=1e-6)
    # effective config persisted as the provenance record
    assert (ingest_dir / "ingest.config").read_text().startswith("config_version=1\n")


def test_ingest_textgrid_directory(tmp_path):
    tg_dir = tmp_path / "grids"
    tg_dir.mkdir()
    (tg_dir / "utt-a.TextGrid").write_text(TEXTGRID)
    (tg_dir / "utt-b.TextGrid").write_text(TEXTGRID)
    (tmp_path / "utt2spk").write_text("utt-a spk1\nutt-b spk2\n")
    out = tmp_path / "out"
    assert run("ingest", "--textgrid-dir", tg_dir, "--tier", "phones",
               "--utt2spk", tmp_path / "utt2spk", "--out-dir", out) == 0
    corpus = load_cache(out / "corpus.npz")
    assert [u.id for u in corpus.utterances] == ["utt-a", "utt-b"]
    assert corpus.utterances[0].durations == pytest.approx([0.15, 0.25])


def test_stats_outputs(synth_dir, tmp_path):
    out = tmp_path / "stats"
    assert run("stats", "--corpus", synth_dir / "synth-corpus.npz", "--out-dir", out,
               "--min-instances", 2) == 0
    expected_tsv = (out / "expected_durations.tsv").read_text().splitlines()
    assert expected_tsv[0].startswith("# phondur-stats")
    assert "config_hash=" in expected_tsv[1]
    data_rows = [l for l in expected_tsv if not l.startswith("#")]
    corpus = load_cache(synth_dir / "synth-corpus.npz")
    assert len(data_rows) == corpus.n_classes
    profiles = [l for l in (out / "speaker_profiles.tsv").read_text().splitlines()
                if not l.startswith("#")]
    assert len(profiles) == corpus.n_classes * len(corpus.speakers)
    assert (out / "expected_durations.npz").is_file()


def test_trials_files(synth_dir, tmp_path):
    out = tmp_path / "trials"
    assert run("trials", "--corpus", synth_dir / "synth-corpus.npz", "--out-dir", out,
               "--m-values", "1,2", "--k-per-speaker", "3", "--seed", 5) == 0
    from phondur.trials import read_trials

    for m, n_expected_same in ((1, 6 * 28), (2, 6 * 6)):  # C(8,2) and C(4,2) per speaker
        lines = (out / f"trials-m{m}.tsv").read_text().splitlines()
        trials = read_trials(lines)
        same = [t for t in trials if t.label == "same"]
        diff = [t for t in trials if t.label == "different"]
        assert len(same) == n_expected_same
        assert len(diff) == 6 * 3


def test_grid_outputs_and_determinism(synth_dir, tmp_path):
    out = tmp_path / "grid"
    argv = ("grid", "--corpus", synth_dir / "synth-corpus.npz", "--out-dir", out,
            "--metrics", "ratio,rate", "--m-values", "1,2", "--min-instance-values", "1,3",
            "--k-per-speaker", "3", "--seed", 5)
    assert run(*argv) == 0
    tsv_1 = (out / "grid-ratio.tsv").read_bytes()
    json_1 = (out / "grid-ratio.json").read_bytes()
    rate_tsv = (out / "grid-rate.tsv").read_text().splitlines()
    assert rate_tsv[-3] == "m\t-"  # rate metric has no instance-threshold axis
    assert len(rate_tsv[-2].split("\t")) == 2

    assert run(*argv) == 0  # identical config -> byte-identical outputs
    assert (out / "grid-ratio.tsv").read_bytes() == tsv_1
    assert (out / "grid-ratio.json").read_bytes() == json_1

    doc = json.loads(json_1)
    assert doc["meta"]["metric"] == "ratio"
    assert {c["min_instances"] for c in doc["cells"]} == {1, 3}
    assert all(0.0 <= c["eer"] <= 1.0 for c in doc["cells"])


def test_grid_with_rate_normalization(tmp_path):
    synth_out = tmp_path / "s"
    assert run("synth", "--out-dir", synth_out, "--n-speakers", 10, "--utts-per-speaker", 24,
               "--phones-per-utt", 30, "--signature-strength", 0.0, "--rate-spread", "0.4",
               "--log-std", "0.2", "--seed", 3) == 0
    out_plain = tmp_path / "plain"
    out_norm = tmp_path / "norm"
    base = ("--corpus", synth_out / "synth-corpus.npz", "--metrics", "ratio",
            "--m-values", "6", "--min-instance-values", "1", "--k-per-speaker", "9", "--seed", 3)
    assert run("grid", *base, "--out-dir", out_plain) == 0
    assert run("grid", *base, "--out-dir", out_norm, "--rate-normalize") == 0
    eer_plain = json.loads((out_plain / "grid-ratio.json").read_text())["cells"][0]["eer"]
    eer_norm = json.loads((out_norm / "grid-ratio.json").read_text())["cells"][0]["eer"]
    assert eer_plain < 0.2 and eer_norm > 0.3  # rate was the only speaker signal


def test_synth_outputs_are_byte_identical_across_runs(tmp_path):
    out = tmp_path / "s"
    argv = ("synth", "--out-dir", out, "--n-speakers", 4, "--utts-per-speaker", 5,
            "--phones-per-utt", 15, "--signature-strength", 0.4, "--seed", 21)
    assert run(*argv) == 0
    first = {name: (out / name).read_bytes()
             for name in ("synth.ctm", "synth.utt2spk", "synth-corpus.npz")}
    assert run(*argv) == 0
    for name, blob in first.items():
        assert (out / name).read_bytes() == blob


def test_rate_norm_command(tmp_path):
    synth_out = tmp_path / "s"
    assert run("synth", "--out-dir", synth_out, "--n-speakers", 5, "--utts-per-speaker", 6,
               "--phones-per-utt", 25, "--signature-strength", 0.3, "--rate-spread", "0.3",
               "--seed", 11) == 0
    out = tmp_path / "rn"
    assert run("rate-norm", "--corpus", synth_out / "synth-corpus.npz", "--out-dir", out,
               "--seed", 11) == 0
    original = load_cache(synth_out / "synth-corpus.npz")
    normalized = load_cache(out / "rate-normalized-corpus.npz")
    expected = expected_durations(original)
    rates = speech_rates(normalized, expected)
    np.testing.assert_allclose(rates, expected.overall_rate_mean, rtol=1e-9)


def test_synth_anonymize_modes(tmp_path):
    plain = tmp_path / "plain"
    anon = tmp_path / "anon"
    common = ("--n-speakers", 4, "--utts-per-speaker", 5, "--phones-per-utt", 15,
              "--signature-strength", 0.5, "--seed", 7)
    assert run("synth", "--out-dir", plain, *common) == 0
    assert run("synth", "--out-dir", anon, *common, "--anonymize", "replace-durations",
               "--residual-strength", "0.0") == 0
    a = load_cache(plain / "synth-corpus.npz")
    b = load_cache(anon / "synth-corpus.npz")
    assert not np.allclose(
        np.concatenate([u.durations for u in a.utterances]),
        np.concatenate([u.durations for u in b.utterances]),
    )


def test_config_file_and_flag_override(synth_dir, tmp_path):
    cfg = tmp_path / "run.config"
    cfg.write_text(
        "config_version=1\n"
        f"corpus={synth_dir / 'synth-corpus.npz'}\n"
        "metrics=ratio\nm_values=1\nmin_instance_values=1\nk_per_speaker=3\nseed=5\n"
        f"out_dir={tmp_path / 'g1'}\n"
    )
    assert run("grid", "--config", cfg) == 0
    assert (tmp_path / "g1" / "grid-ratio.tsv").is_file()
    # flag overrides the file value
    assert run("grid", "--config", cfg, "--out-dir", tmp_path / "g2", "--m-values", "2") == 0
    tsv = (tmp_path / "g2" / "grid-ratio.tsv").read_text().splitlines()
    assert tsv[-1].startswith("2\t")


def test_config_file_via_environment(synth_dir, tmp_path, monkeypatch):
    cfg = tmp_path / "env.config"
    cfg.write_text(f"corpus={synth_dir / 'synth-corpus.npz'}\nout_dir={tmp_path / 'envout'}\n")
    monkeypatch.setenv("PHONDUR_CONFIG", str(cfg))
    assert run("stats") == 0
    assert (tmp_path / "envout" / "expected_durations.tsv").is_file()


def test_usage_and_config_errors_exit_1(tmp_path, capsys):
    assert run("grid", "--corpus", tmp_path / "missing.npz", "--out-dir", tmp_path) == 1
    assert "not found" in capsys.readouterr().err
    assert run("ingest", "--utt2spk", tmp_path / "nope", "--out-dir", tmp_path) == 1
    with pytest.raises(SystemExit) as exc:
        run("grid", "--no-such-flag")
    assert exc.value.code == 1
    with pytest.raises(SystemExit) as exc:
        run("definitely-not-a-command")
    assert exc.value.code == 1


def test_data_errors_exit_2(tmp_path, capsys):
    bad = tmp_path / "bad.ctm"
    bad.write_text("utt1 1 0.0 -0.5 AH\n")
    (tmp_path / "utt2spk").write_text("utt1 s1\n")
    code = run("ingest", "--ctm", bad, "--utt2spk", tmp_path / "utt2spk",
               "--out-dir", tmp_path / "out")
    assert code == 2
    assert "duration" in capsys.readouterr().err


def test_unknown_config_key_exits_1(synth_dir, tmp_path):
    cfg = tmp_path / "bad.config"
    cfg.write_text("no_such_key=1\n")
    assert run("stats", "--config", cfg, "--corpus", synth_dir / "synth-corpus.npz",
               "--out-dir", tmp_path) == 1


def test_concurrent_runs_on_same_out_dir_are_rejected(synth_dir, tmp_path):
    out = tmp_path / "busy"
    out.mkdir()
    lock = FileLock(out / ".phondur.lock")
    with lock.acquire(timeout=0):
        code = run("stats", "--corpus", synth_dir / "synth-corpus.npz", "--out-dir", out)
    assert code == 1
    # lock released: the same command succeeds now
    assert run("stats", "--corpus", synth_dir / "synth-corpus.npz", "--out-dir", out) == 0
