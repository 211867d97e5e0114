import json
import subprocess
import sys
from pathlib import Path

import pytest

from phraseforge.aligner import load_phrase_table
from phraseforge.cli import main
from phraseforge.config import KEYS
from phraseforge.stats import load_statistics

from data.make_golden import GOLDEN, OUTPUTS, run_all

DATA = Path(__file__).parent / "data"


@pytest.fixture(scope="module")
def work(tmp_path_factory):
    root = tmp_path_factory.mktemp("run")
    run_all(root)
    return root


def cli(root, *argv, overrides=()):
    args = [argv[0], "--config", str(root / "config.ini"), "--jobs", "1"]
    for o in overrides:
        args += ["--set", o]
    return main(args + list(argv[1:]))


@pytest.mark.parametrize("name", OUTPUTS)
def test_fixture_reproduces_golden(work, name):
    assert (work / name).read_bytes() == (GOLDEN / name).read_bytes()


def test_byte_identical_across_runs_and_jobs(work, tmp_path):
    for jobs in (1, 3):
        other = tmp_path / f"j{jobs}"
        run_all(other, jobs=jobs)
        for name in OUTPUTS:
            assert (other / name).read_bytes() == (work / name).read_bytes(), (jobs, name)


def test_entropy_command(work, capsys):
    assert cli(work, "entropy", "--phrase", "sr5") == 0
    out = dict(line.split("\t") for line in capsys.readouterr().out.splitlines())
    stats = load_statistics(work / "stats/source.stats")
    assert out["phrase"] == "sr5"
    assert int(out["freq"]) == stats.frequency(("sr5",))
    assert float(out["H_l"]) == stats.entropy_left(("sr5",))
    assert float(out["H_r"]) == stats.entropy_right(("sr5",))
    assert cli(work, "entropy", "--phrase", "tr5", "--side", "target") == 0


def test_entropy_unknown_phrase(work, capsys):
    assert cli(work, "entropy", "--phrase", "nope nope") == 1
    err = capsys.readouterr().err.strip()
    assert err.startswith("phraseforge: error[") and "\n" not in err


def _sweep(work, tmp_path, bound, name):
    out = tmp_path / name
    assert cli(work, "sweep", "--bound", bound, "--output", str(out)) == 0
    lines = out.read_text().splitlines()
    assert lines[0].split("\t") == ["max_len", "bound", "occurrences", "pair_types",
                                    "source_types", "target_types", "bleu"]
    return [line.split("\t") for line in lines[1:]]


def test_sweep_rows_equal_single_runs(work, tmp_path):
    rows = _sweep(work, tmp_path, "0..2:0.5", "all")
    assert [float(r[1]) for r in rows] == [0.0, 0.5, 1.0, 1.5, 2.0]
    for row in rows:
        (single,) = _sweep(work, tmp_path, row[1], f"one-{row[1]}")
        assert single == row
        # the same counts through the mine command on the validation corpus
        summary = tmp_path / f"summary-{row[1]}.json"
        assert cli(work, "mine", overrides=[
            "corpus.train_source=valid.src", "corpus.train_target=valid.tgt",
            "aligner.alignment=", f"selector.entropy_lower_bound={row[1]}",
            f"output.summary={summary}", f"output.selection_report={tmp_path / 'rep'}"]) == 0
        inv = json.loads(summary.read_text())["inventory"]
        assert row[2:6] == [str(inv[k]) for k in ("occurrences", "pair_types",
                                                  "source_types", "target_types")]
        assert 0.0 <= float(row[6]) <= 100.0


def test_sweep_identical_bounds_and_huge_bound(work, tmp_path):
    rows = _sweep(work, tmp_path, "1,1,1000", "s")
    assert rows[0] == rows[1]
    assert rows[2][2:6] == ["0", "0", "0", "0"]


def test_sweep_max_lens(work, tmp_path):
    out = tmp_path / "lens"
    assert cli(work, "sweep", "--bound", "1", "--max-len", "1,3", "--output", str(out)) == 0
    assert [r.split("\t")[0] for r in out.read_text().splitlines()[1:]] == ["1", "3"]


def test_eval_commands(work, tmp_path, capsys):
    fx = DATA / "fixture"
    assert cli(work, "eval", "bleu", "--cand", str(fx / "valid.tgt"), "--ref", str(fx / "valid.tgt")) == 0
    assert capsys.readouterr().out == "BLEU\t100.0000\n"

    assert cli(work, "eval", "untranslated", "--src", str(fx / "decode.in"),
               "--out", str(work / "decode.out"), "--lexicon", str(fx / "lexicon.tsv")) == 0
    out = dict(line.split("\t") for line in capsys.readouterr().out.splitlines())
    assert int(out["untranslated"]) == 20 and out["sentences"] == "10"

    (tmp_path / "pw").write_text("".join(f"{i}\tW\n" for i in range(29))
                                 + "".join(f"x{i}\tT\n" for i in range(171)))
    assert cli(work, "eval", "pairwise", "--judgements", str(tmp_path / "pw")) == 0
    assert capsys.readouterr().out.splitlines()[-1] == "score\t14.5"

    (tmp_path / "adq").write_text("a\t1\nb\t5\n")
    assert cli(work, "eval", "adequacy", "--judgements", str(tmp_path / "adq"),
               "--output", str(tmp_path / "adq.out")) == 0
    assert (tmp_path / "adq.out").read_text() == "n\t2\nadequacy\t3.0\n"


def test_golden_decode_unk_literals():
    # four sentences lose a two-word compound (2 literals + 2 source types each),
    # two lose a single term (1 + 1); every other source word is translated
    out = (GOLDEN / "decode.out").read_text().split()
    assert out.count("<unk>") == 4 * 2 + 2 * 1


def test_config_errors_exit_2(work, capsys):
    code = cli(work, "stats", overrides=["corpus.bogus=1", "stats.max_len=zero"])
    assert code == 2
    err = capsys.readouterr().err.strip()
    assert err.startswith("phraseforge: error[config]:")
    assert "corpus.bogus" in err and "stats.max_len" in err and "\n" not in err


def test_missing_required_paths(tmp_path, capsys):
    (tmp_path / "c.ini").write_text("[stats]\nmax_len = 7\n")
    assert main(["mine", "--config", str(tmp_path / "c.ini")]) == 2
    assert "aligner.phrase_table: required" in capsys.readouterr().err


def test_decode_needs_translators(work, tmp_path, capsys):
    assert cli(work, "decode", "--input", str(work / "decode.in"), "--output",
               str(tmp_path / "o"), overrides=["pipeline.smt=", "pipeline.nmt="]) == 2
    err = capsys.readouterr().err
    assert "pipeline.smt" in err and "pipeline.nmt" in err


def test_failed_run_leaves_no_partial_output(work, tmp_path):
    (tmp_path / "bad.src").write_text("a b\n")
    (tmp_path / "bad.tgt").write_text("x\ny\n")
    code = cli(work, "stats", overrides=[f"corpus.train_source={tmp_path / 'bad.src'}",
                                         f"corpus.train_target={tmp_path / 'bad.tgt'}",
                                         f"stats.source_stats={tmp_path / 's.stats'}"])
    assert code == 1
    assert not (tmp_path / "s.stats").exists()


def test_help_lists_every_key():
    proc = subprocess.run([sys.executable, "-m", "phraseforge", "--help"],
                          capture_output=True, text=True, check=True)
    for section, keys in KEYS.items():
        for name in keys:
            assert f"{section}.{name} = " in proc.stdout
    sub = subprocess.run([sys.executable, "-m", "phraseforge", "mine", "--help"],
                         capture_output=True, text=True, check=True)
    assert "selector.entropy_lower_bound = 5.0" in sub.stdout


def test_console_script_entry_point(work):
    proc = subprocess.run([sys.executable, "-m", "phraseforge", "entropy", "--config",
                           str(work / "config.ini"), "--phrase", "sr5"],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.startswith("phrase\tsr5\n")


def test_fixture_phrase_table_loads():
    assert len(load_phrase_table(DATA / "fixture" / "phrase_table.txt")) > 0
