import csv

import pytest

from blockfw import globalopt
from blockfw.cli import build_parser, main, read_manifest
from blockfw.problems import load_instance


def rows(path):
    return list(csv.DictReader(open(path)))


class TestGen:
    def test_generate(self, tmp_path):
        out = tmp_path / "a.mstqp"
        assert main(["gen", "--l", "10", "--m", "4", "--seed", "1", "--out", str(out)]) == 0
        assert load_instance(out).n == 40

    def test_deterministic(self, tmp_path):
        for name in ("a", "b"):
            main(["gen", "--l", "6", "--m", "3", "--seed", "5", "--out", str(tmp_path / name)])
        assert (tmp_path / "a").read_bytes() == (tmp_path / "b").read_bytes()

    def test_l_too_small(self, tmp_path, capsys):
        assert main(["gen", "--l", "2", "--m", "3", "--out", str(tmp_path / "a")]) != 0
        assert "s=" in capsys.readouterr().err and not (tmp_path / "a").exists()


class TestSolve:
    def test_help_lists_mapping(self, capsys):
        with pytest.raises(SystemExit):
            main(["solve", "--help"])
        text = capsys.readouterr().out
        assert "bcfw" in text and "strategy=RANDOM" in text and "method=FW" in text and "no SSC" in text
        assert "default: 1e-06" in text

    def test_budget_and_determinism(self, tmp_path):
        inst = tmp_path / "i.mstqp"
        main(["gen", "--l", "8", "--m", "5", "--seed", "2", "--out", str(inst)])
        for name in ("a.csv", "b.csv"):
            code = main(["solve", "--instance", str(inst), "--algorithm", "bcafw-ssc", "--budget-grads", "100",
                         "--seed", "3", "--out", str(tmp_path / name)])
            assert code == 0
        assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
        assert int(rows(tmp_path / "a.csv")[-1]["grad_evals"]) <= 100

    def test_sidecars(self, tmp_path):
        code = main(["solve", "--l", "5", "--m", "3", "--out", str(tmp_path / "t.csv"), "--check-descent",
                     "--trace-out", str(tmp_path / "tr.csv"), "--diag-out", str(tmp_path / "d.csv")])
        assert code == 0
        assert rows(tmp_path / "tr.csv")[0]["kind"] in {"FW", "AWAY"}
        assert "k_id" in rows(tmp_path / "d.csv")[0]

    def test_unknown_algorithm(self, tmp_path):
        with pytest.raises(SystemExit) as exc:
            main(["solve", "--l", "5", "--m", "3", "--algorithm", "xx", "--out", str(tmp_path / "t.csv")])
        assert exc.value.code == 2

    def test_missing_instance_spec(self, tmp_path):
        assert main(["solve", "--out", str(tmp_path / "t.csv")]) == 2

    def test_bad_instance_file(self, tmp_path, capsys):
        bad = tmp_path / "bad"
        bad.write_text("nope\n")
        assert main(["solve", "--instance", str(bad), "--out", str(tmp_path / "t.csv")]) == 2
        assert "line 1" in capsys.readouterr().err


class TestCampaigns:
    def test_defaults(self):
        parser = build_parser()
        ms = parser.parse_args(["multistart", "--out", "x"])
        assert (ms.objective_seeds, ms.start_seeds, ms.l, ms.m) == (5, 4, 20, 20)
        mbh = parser.parse_args(["mbh", "--out", "x"])
        assert (mbh.gamma, mbh.i_max, mbh.lo_budget) == (0.25, 9, None)

    def test_multistart_replay(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        code = main(["multistart", "--l", "5", "--m", "3", "--objective-seeds", "2", "--start-seeds", "2",
                     "--budget-grads", "30", "--master-seed", "4", "--out", str(a)])
        assert code == 0
        man = read_manifest(a / "manifest.txt")
        assert man["complete"] == "True" and man["objective_seeds"] == "4000,4001"
        assert main(["multistart", "--replay", str(a / "manifest.txt"), "--out", str(b)]) == 0
        assert (a / "aggregate.csv").read_bytes() == (b / "aggregate.csv").read_bytes()
        assert (a / "manifest.txt").read_bytes() == (b / "manifest.txt").read_bytes()

    def test_single_seed_zero_std(self, tmp_path):
        main(["multistart", "--l", "5", "--m", "2", "--objective-seeds", "1", "--start-seeds", "1",
              "--budget-grads", "10", "--algorithms", "pafw-ssc", "--out", str(tmp_path)])
        assert all(float(r["std_gap"]) == 0 and float(r["std_l0"]) == 0 for r in rows(tmp_path / "aggregate.csv"))

    def test_parallel_jobs_match_serial(self, tmp_path):
        args = ["multistart", "--l", "5", "--m", "3", "--objective-seeds", "1", "--start-seeds", "2",
                "--budget-grads", "20"]
        main(args + ["--out", str(tmp_path / "s")])
        main(args + ["--jobs", "2", "--out", str(tmp_path / "p")])
        assert (tmp_path / "s/aggregate.csv").read_bytes() == (tmp_path / "p/aggregate.csv").read_bytes()

    def test_partial_failure(self, tmp_path, monkeypatch):
        original = globalopt._multistart_task

        def flaky(task):
            if task[3] == 1:
                raise FloatingPointError("boom")
            return original(task)

        monkeypatch.setattr(globalopt, "_multistart_task", flaky)
        code = main(["multistart", "--l", "5", "--m", "2", "--objective-seeds", "1", "--start-seeds", "2",
                     "--budget-grads", "10", "--algorithms", "pafw-ssc", "--out", str(tmp_path)])
        assert code == 1
        man = read_manifest(tmp_path / "manifest.txt")
        assert man["complete"] == "False"
        assert man["run.0.1.pafw-ssc"].startswith("failed")
        assert man["run.0.0.pafw-ssc"] == "ok"

    def test_mbh_and_report(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        code = main(["mbh", "--l", "5", "--m", "3", "--runs", "2", "--i-max", "3", "--algorithms", "pafw-ssc",
                     "--out", str(a)])
        assert code == 0
        man = read_manifest(a / "manifest.txt")
        assert man["lo_budget"] == "30" and man["gamma"] == "0.25"
        assert all(man[f"lo_calls.0.{r}.pafw-ssc"] == "4" for r in range(2))
        assert main(["mbh", "--replay", str(a / "manifest.txt"), "--out", str(b)]) == 0
        assert (a / "aggregate.csv").read_bytes() == (b / "aggregate.csv").read_bytes()
        inc = rows(a / "incumbents.csv")
        assert all(int(r["lo_grad_evals"]) <= 30 for r in inc)
        rep = tmp_path / "long.csv"
        assert main(["report", "--inputs", str(a / "aggregate.csv"), "--out", str(rep)]) == 0
        assert len(rows(rep)) == 2 * 4

    def test_replay_wrong_kind(self, tmp_path):
        main(["mbh", "--l", "5", "--m", "2", "--runs", "1", "--i-max", "0", "--algorithms", "pafw-ssc",
              "--out", str(tmp_path / "a")])
        assert main(["multistart", "--replay", str(tmp_path / "a/manifest.txt"), "--out", str(tmp_path / "b")]) == 2
