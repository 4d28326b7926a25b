import pytest

from repeatfree.cli import EXIT_ERROR, EXIT_FOUND, EXIT_OK, EXIT_UNKNOWN, RunConfig, build_parser, main
from repeatfree.colouring import EdgeColouring
from repeatfree.constructors import additive_colouring, extended_additive_colouring, rainbow_colouring
from repeatfree.verifier import RepeatStatus, RepeatVerdict


@pytest.fixture()
def k4_file(tmp_path):
    path = tmp_path / "k4.rfc"
    extended_additive_colouring(4).write(path)
    return path


class TestConstruct:
    def test_additive_to_file(self, tmp_path, capsys):
        """Test construct writes the file and prints a summary."""
        path = tmp_path / "a.rfc"
        assert main(["construct", "--family", "additive", "--n", "11", "-o", str(path)]) == EXIT_OK
        col = EdgeColouring.read(path)
        assert col.C == 11
        assert col.meta["family"] == "additive"
        assert col.meta["run.family"] == "additive"
        assert capsys.readouterr().out == "colours=11 proper=true max_class_degree=1\n"

    def test_to_stdout(self, capsys):
        """Test the colouring goes to stdout and the summary to stderr without -o."""
        assert main(["construct", "--family", "quadratic", "--n", "25"]) == EXIT_OK
        captured = capsys.readouterr()
        col = EdgeColouring.from_text(captured.out)
        assert col.C <= 5**3 + int(col.meta["degenerate"])
        assert "proper=true" in captured.err

    def test_alg_cycle_reproducible(self, tmp_path):
        """Test two runs with the same seed write identical files."""
        first, second = tmp_path / "one.rfc", tmp_path / "two.rfc"
        for path in (first, second):
            args = ["construct", "--family", "alg-cycle", "--n", "101", "--d", "4", "--seed", "7", "-o", str(path)]
            assert main(args) == EXIT_OK
        assert first.read_text() == second.read_text()

    def test_missing_family_parameter(self, capsys):
        """Test a family parameter left out is reported as an error."""
        assert main(["construct", "--family", "clique-matching", "--n", "9"]) == EXIT_ERROR
        assert "needs parameters" in capsys.readouterr().err

    def test_budget_exhausted(self, capsys):
        """Test an exhausted resample budget exits 1 and reports the last event."""
        args = ["construct", "--family", "lll", "--n", "12", "--pattern", "C4", "--k", "2"]
        args += ["--gamma", "64", "--max-resamples", "1", "--max-backoffs", "0"]
        assert main(args) == EXIT_ERROR
        assert "last event" in capsys.readouterr().err

    def test_unknown_family(self):
        """Test argparse rejects family names that are not registered."""
        with pytest.raises(SystemExit):
            main(["construct", "--family", "wilson", "--n", "9"])


class TestVerify:
    def test_absent(self, tmp_path, capsys):
        """Test the additive colouring of K_11 has no 2-repeat of C3."""
        path = tmp_path / "a.rfc"
        additive_colouring(11).write(path)
        assert main(["verify", str(path), "--pattern", "C3", "--k", "2"]) == EXIT_OK
        out = capsys.readouterr().out
        assert out.startswith("proper=true max_class_degree=1 colours=11\n")
        assert "verdict=absent-proven" in out

    def test_found_and_certify(self, tmp_path, k4_file, capsys):
        """Test a found repeat exits 2, writes the certificate, and certify accepts it."""
        cert = tmp_path / "cert.txt"
        assert main(["verify", str(k4_file), "--pattern", "K2", "--k", "2", "--certificate", str(cert)]) == EXIT_FOUND
        out = capsys.readouterr().out
        assert "verdict=found k=2 pattern=K2" in out
        assert cert.read_text() in out
        assert main(["certify", str(cert), str(k4_file)]) == EXIT_OK
        assert capsys.readouterr().out == "accept\n"

    def test_certify_rejects(self, tmp_path, k4_file, capsys):
        """Test a certificate checked against another colouring is rejected."""
        cert = tmp_path / "cert.txt"
        main(["verify", str(k4_file), "--pattern", "K2", "--k", "2", "--certificate", str(cert)])
        other = tmp_path / "rainbow.rfc"
        rainbow_colouring(4).write(other)
        capsys.readouterr()
        assert main(["certify", str(cert), str(other)]) == EXIT_ERROR
        assert capsys.readouterr().out.startswith("reject: ")

    def test_improper_input(self, tmp_path, capsys):
        """Test the properness violation is printed."""
        path = tmp_path / "bad.rfc"
        EdgeColouring(4, [0, 0, 1, 2, 3, 4]).write(path)
        main(["verify", str(path), "--pattern", "K2", "--k", "2"])
        out = capsys.readouterr().out
        assert out.startswith("proper=false")
        assert "violation: vertex 0" in out

    def test_budgeted_unknown(self, tmp_path, capsys):
        """Test an exhausted budget exits 3."""
        path = tmp_path / "r.rfc"
        rainbow_colouring(12).write(path)
        args = ["verify", str(path), "--pattern", "C4", "--k", "2", "--mode", "budgeted", "--budget", "10"]
        assert main(args) == EXIT_UNKNOWN
        assert "verdict=unknown" in capsys.readouterr().out

    def test_exact_limit(self, tmp_path, capsys):
        """Test exact mode on an oversized host exits 1."""
        path = tmp_path / "big.rfc"
        rainbow_colouring(61).write(path)
        assert main(["verify", str(path), "--pattern", "K2", "--k", "2"]) == EXIT_ERROR
        assert "error:" in capsys.readouterr().err

    def test_zero_budget_is_a_budget(self, k4_file, capsys):
        """Test --budget 0 in budgeted mode gives an unknown verdict rather than the default budget."""
        args = ["verify", str(k4_file), "--pattern", "K2", "--k", "2", "--mode", "budgeted", "--budget", "0"]
        assert main(args) == EXIT_UNKNOWN
        assert "verdict=unknown" in capsys.readouterr().out

    def test_threads_forwarded(self, k4_file, mocker):
        """Test --threads and the mode reach find_repeats."""
        patched = mocker.patch("repeatfree.cli.find_repeats", return_value=RepeatVerdict(RepeatStatus.UNKNOWN))
        assert main(["verify", str(k4_file), "--pattern", "K2", "--k", "2", "--threads", "4"]) == EXIT_UNKNOWN
        assert patched.call_args.kwargs["threads"] == 4
        assert patched.call_args.kwargs["mode"] == "exact"

    def test_missing_file(self, tmp_path):
        """Test a missing input file exits 1."""
        assert main(["verify", str(tmp_path / "nope.rfc"), "--pattern", "K2", "--k", "2"]) == EXIT_ERROR

    def test_bad_pattern(self, k4_file, capsys):
        """Test a malformed pattern spec exits 1."""
        assert main(["verify", str(k4_file), "--pattern", "C2", "--k", "2"]) == EXIT_ERROR


class TestSearch:
    def test_single_edge(self, tmp_path, capsys):
        """Test f_2(4, K2) = 6 with the witness written to a file."""
        path = tmp_path / "w.rfc"
        assert main(["search", "--pattern", "K2", "--k", "2", "--n", "4", "-o", str(path)]) == EXIT_OK
        lines = capsys.readouterr().out.splitlines()
        assert lines[0] == "n k pattern value lo hi exhaustive nodes"
        assert lines[1].startswith("4 2 K2 6 6 6 true ")
        assert lines[2] == "value=6 exhaustive=true"
        witness = EdgeColouring.read(path)
        assert witness.C == 6
        assert witness.meta["run.command"] == "search"

    def test_budget_unknown(self, capsys):
        """Test a spent search budget exits 3 with an unknown value."""
        assert main(["search", "--pattern", "S2", "--k", "2", "--n", "7", "--budget", "1"]) == EXIT_UNKNOWN
        assert "value=- exhaustive=false" in capsys.readouterr().out

    def test_zero_budget_is_a_budget(self, capsys):
        """Test --budget 0 spends the budget at once instead of lifting it."""
        assert main(["search", "--pattern", "S2", "--k", "2", "--n", "7", "--budget", "0"]) == EXIT_UNKNOWN
        assert "value=- exhaustive=false" in capsys.readouterr().out

    def test_host_too_large(self):
        """Test n above the search limit exits 1."""
        assert main(["search", "--pattern", "K2", "--k", "2", "--n", "11"]) == EXIT_ERROR


class TestBounds:
    def test_c6_records(self, capsys):
        """Test the record stream for C6 at k = 2."""
        assert main(["bounds", "--pattern", "C6", "--k", "2", "--n", "40", "--format", "records"]) == EXIT_OK
        records = {line.split("\t")[0]: line.split("\t") for line in capsys.readouterr().out.splitlines()}
        assert records["local-lemma"][1:3] == ["upper", "5/3"]
        assert records["theta-lower"][1:3] == ["lower", "4/3"]
        assert records["theta-lower"][4] == "true"

    def test_k_below_two(self, capsys):
        """Test k = 1 exits 1 with a message instead of a traceback."""
        assert main(["bounds", "--pattern", "C4", "--k", "1", "--n", "10"]) == EXIT_ERROR
        assert "k must be at least 2" in capsys.readouterr().err

    @pytest.mark.parametrize("fmt, marker", [("table", "best lower:"), ("markdown", "| name |"), ("html", "<table>")])
    def test_formats(self, capsys, fmt, marker):
        """Test every output format renders."""
        assert main(["bounds", "--pattern", "C4", "--k", "2", "--n", "10", "--format", fmt]) == EXIT_OK
        assert marker in capsys.readouterr().out


class TestRunConfig:
    def test_meta_skips_paths_and_unset(self):
        """Test run metadata holds set, path-free fields only."""
        args = build_parser().parse_args(["construct", "--family", "additive", "--n", "7", "-o", "x.rfc"])
        meta = RunConfig.from_args(args).to_meta()
        assert meta["run.family"] == "additive"
        assert meta["run.n"] == 7
        assert "run.output" not in meta
        assert "run.d" not in meta
