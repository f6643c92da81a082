"""
Unit tests for qinvert.runner module
"""

import json

import pytest

from qinvert.runner import (
    COMMANDS,
    GROVER_FIELDS,
    CommandOutput,
    ConfigError,
    ExperimentConfig,
    ExperimentRunner,
    load_config,
    parse_floats,
    parse_point,
    run_experiment,
)

# Dense R sampling so small reduction runs reach case B.
DENSE = {"gamma": 0.4, "c_const": 0.9, "rho": 2}


def make_config(tmp_path, command, **values):
    values.setdefault("seed", 1)
    return ExperimentConfig.from_sources({"command": command, "out": str(tmp_path), **values})


class TestLoadConfig:
    """Test the key=value config reader."""

    def test_reads_values(self, tmp_path):
        """Test parsing, comments and dashed keys."""
        path = tmp_path / "run.cfg"
        path.write_text("# sweep settings\nseed = 0x10\nc-const = 0.05\n\n"
                        "deltas = 1.0, 0.9\nprogress = no\n"
                        "point = hellman n=4096\npoint = checkpoint n=4096 t_len=64\n")
        values = load_config(path)
        assert values["seed"] == 16
        assert values["c_const"] == 0.05
        assert values["deltas"] == (1.0, 0.9)
        assert values["progress"] is False
        assert values["points"] == ("hellman n=4096", "checkpoint n=4096 t_len=64")

    @pytest.mark.parametrize("text", [
        "colour = blue\n",
        "seed = 1\nseed = 2\n",
        "seed\n",
        "n = eight\n",
        "progress = maybe\n",
    ])
    def test_rejects_bad_files(self, tmp_path, text):
        """Test unknown keys, repeats, missing '=' and bad values."""
        path = tmp_path / "bad.cfg"
        path.write_text(text)
        with pytest.raises(ConfigError):
            load_config(path)

    def test_missing_file(self, tmp_path):
        """Test an unreadable config file."""
        with pytest.raises(ConfigError):
            load_config(tmp_path / "absent.cfg")

    def test_parse_floats(self):
        """Test the delta list format."""
        assert parse_floats("1.0,0.9,") == (1.0, 0.9)


class TestExperimentConfig:
    """Test merging and validation."""

    def test_overrides_win(self):
        """Test that non-None overrides replace file values."""
        config = ExperimentConfig.from_sources(
            {"command": "grover", "seed": 1, "n": 8}, {"n": 16, "m": None})
        assert config.n == 16
        assert config.m is None

    def test_seed_required(self):
        """Test that a run without a seed is a usage error."""
        with pytest.raises(ConfigError, match="seed"):
            ExperimentConfig.from_sources({"command": "grover"})

    @pytest.mark.parametrize("values", [
        {"command": "frobnicate", "seed": 1},
        {"command": "grover", "seed": -1},
        {"command": "grover", "seed": 1, "mode": "fast"},
        {"command": "grover", "seed": 1, "inverter": "oracle"},
        {"command": "grover", "seed": 1, "n": 0},
        {"command": "grover", "seed": 1, "workers": 0},
        {"command": "grover", "seed": 1, "deltas": (1.5,)},
        {"command": "grover", "seed": 1, "colour": "blue"},
    ])
    def test_invalid(self, values):
        """Test rejected settings."""
        with pytest.raises(ConfigError):
            ExperimentConfig.from_sources(values)

    def test_describe_is_sorted(self):
        """Test the stable rendering."""
        text = ExperimentConfig.from_sources({"command": "grover", "seed": 3}).describe()
        keys = [item.split("=")[0] for item in text.split()]
        assert keys == sorted(keys)
        assert "seed=3" in text

    def test_bad_constants_are_usage_errors(self, tmp_path):
        """Test that invalid reduction constants surface as ConfigError."""
        config = make_config(tmp_path, "encode-perm", gamma=0.5, c_const=0.5)
        with pytest.raises(ConfigError):
            ExperimentRunner(config)


class TestParsePoint:
    """Test sweep point parsing."""

    def test_point(self):
        """Test method, sizes and parameters."""
        point = parse_point("hellman n=4096 m=2048 t_len=16 tables=8", {"challenges": 10})
        assert point.method == "hellman"
        assert (point.n, point.m) == (4096, 2048)
        assert point.params == {"challenges": 10, "t_len": 16, "tables": 8}

    def test_grover_point(self):
        """Test float and string parameters."""
        point = parse_point("grover n=64 epsilon=0.5 mode=simulate")
        assert point.params == {"epsilon": 0.5, "mode": "simulate"}

    @pytest.mark.parametrize("text", ["", "hellman", "hellman n=x", "hellman n=8 speed=3",
                                      "hellman n"])
    def test_invalid(self, text):
        """Test rejected points."""
        with pytest.raises(ConfigError):
            parse_point(text)


class TestRunnerArtifacts:
    """Test artifact writing and exit codes."""

    def test_bound_table(self, tmp_path):
        """Test the bound table at n=8."""
        result = run_experiment(make_config(tmp_path, "bound-table", n=8, deltas=(1.0, 0.9)))
        assert result.ok
        assert result.rows == 4
        csv_text = (tmp_path / "bound-table.csv").read_text()
        assert csv_text.startswith("family,n,m,delta,s_x,s_xj,bound,floor\n")
        assert "15.2992" in csv_text
        assert "9.1472" in csv_text
        assert (tmp_path / "bound-table-failures.jsonl").read_text() == ""
        summary = (tmp_path / "bound-table-summary.txt").read_text()
        assert summary.startswith("qinvert bound-table\n")
        assert summary.endswith("status: PASS\n")

    def test_csv_is_reproducible(self, tmp_path):
        """Test that equal configs give identical CSV bytes."""
        first = run_experiment(make_config(tmp_path / "a", "verify-swapping", n=6, trials=10))
        second = run_experiment(make_config(tmp_path / "b", "verify-swapping", n=6, trials=10,
                                            workers=3))
        assert first.ok and second.ok
        a = (tmp_path / "a" / "verify-swapping.csv").read_bytes()
        b = (tmp_path / "b" / "verify-swapping.csv").read_bytes()
        assert a == b

    def test_failures_set_exit_code(self, tmp_path):
        """Test that failure records give exit code 1 and a FAIL summary."""
        runner = ExperimentRunner(make_config(tmp_path, "grover"))
        runner._commands["grover"] = lambda: CommandOutput(
            GROVER_FIELDS, [(4, 0, 0.25, 0.25, 0.0, True)], [{"check": "forced", "k": 0}])
        result = runner.run()
        assert result.exit_code == 1
        assert not result.ok
        assert result.summary.endswith("status: FAIL\n")
        lines = (tmp_path / "grover-failures.jsonl").read_text().splitlines()
        assert json.loads(lines[0]) == {"check": "forced", "command": "grover", "k": 0}
        assert runner.stats["grover"]["failures"] == 1

    def test_unknown_command(self, tmp_path):
        """Test that run refuses unknown commands."""
        runner = ExperimentRunner(make_config(tmp_path, "grover"))
        with pytest.raises(ConfigError):
            runner.run("frobnicate")

    def test_limits_from_config(self, tmp_path):
        """Test that limit keys reach the simulation limits."""
        runner = ExperimentRunner(make_config(tmp_path, "grover", max_amplitudes=1000))
        assert runner.limits.max_amplitudes == 1000
        assert runner.limits.max_audit_qubits == 8


class TestCommands:
    """Test each command at small sizes."""

    def test_command_list(self):
        """Test the command names."""
        assert len(COMMANDS) == 11
        assert "bound-table" in COMMANDS

    def test_verify_swapping(self, tmp_path):
        """Test the swapping bound on random trials."""
        result = run_experiment(make_config(tmp_path, "verify-swapping", n=8, trials=20))
        assert result.ok
        assert result.rows == 20
        assert "full Haar unitaries (m*n <= 64): 20 trials" in result.summary

    def test_verify_swapping_large_tables_use_local_unitaries(self, tmp_path):
        """Test that trials above the Haar size switch to register-local unitaries."""
        result = run_experiment(make_config(tmp_path, "verify-swapping", n=40, trials=5))
        assert result.ok
        assert "full Haar unitaries (m*n <= 64): 0 trials" in result.summary
        assert "register-local unitaries: 5 trials" in result.summary

    def test_verify_entropy(self, tmp_path):
        """Test subadditivity and the entropy spot checks."""
        result = run_experiment(make_config(tmp_path, "verify-entropy", trials=20))
        assert result.ok
        assert "H(0.25) = 0.811278" in result.summary

    def test_verify_qrac_bound(self, tmp_path):
        """Test the reference codes on S_4."""
        result = run_experiment(make_config(tmp_path, "verify-qrac-bound", n=4))
        assert result.ok
        assert result.rows == 6
        assert "full-table-forward" in (tmp_path / "verify-qrac-bound.csv").read_text()

    def test_verify_qrac_bound_functions(self, tmp_path):
        """Test the reference codes on a function family."""
        result = run_experiment(make_config(tmp_path, "verify-qrac-bound", n=3, m=3))
        assert result.ok
        assert "F(3,3)" in result.summary

    def test_audit_chain(self, tmp_path):
        """Test the audit on S_2."""
        result = run_experiment(make_config(tmp_path, "audit-chain", n=2))
        assert result.ok
        assert result.rows == 16

    def test_audit_chain_skips_oversized(self, tmp_path):
        """Test that audits beyond the caps are skipped."""
        result = run_experiment(make_config(tmp_path, "audit-chain", n=3, max_audit_qubits=1))
        assert result.ok
        assert result.rows == 0
        assert "skipped" in result.summary

    def test_grover(self, tmp_path):
        """Test simulation against the closed form."""
        result = run_experiment(make_config(tmp_path, "grover", n=16, epsilon=1.0))
        assert result.ok
        assert result.rows == 11
        assert "T=3" in result.summary

    def test_encode_perm(self, tmp_path):
        """Test the permutation scheme with a perfect zero-query inverter."""
        result = run_experiment(make_config(tmp_path, "encode-perm", n=8, theta=1.0,
                                            trials=10, **DENSE))
        assert result.ok
        assert result.rows == 1
        assert "accounting:" in result.summary

    def test_encode_func(self, tmp_path):
        """Test the function scheme and its tag filter."""
        result = run_experiment(make_config(tmp_path, "encode-func", n=8, noise=1.0, trials=10,
                                            hash_trials=20_000, **DENSE))
        assert result.ok
        header = (tmp_path / "encode-func.csv").read_text().splitlines()[0]
        assert header.endswith("tag_bits,hash_rate,hash_ideal,heavy_fraction")

    def test_hellman(self, tmp_path):
        """Test both Hellman records and the plot script."""
        result = run_experiment(make_config(tmp_path, "hellman", n=512, challenges=50))
        assert result.ok
        assert result.rows == 2
        assert (tmp_path / "hellman.gp").exists()
        assert "query limit per challenge: 288" in result.summary
        assert (tmp_path / "hellman-failures.jsonl").read_text() == ""

    def test_hellman_small_tables_skip_success_target(self, tmp_path):
        """Test that tables below cube-root size are held only to the query and answer checks."""
        result = run_experiment(make_config(tmp_path, "hellman", n=512, m_chains=2, t_len=2,
                                            tables=1, challenges=50))
        assert result.ok
        assert "query limit per challenge: 3" in result.summary

    def test_checkpoint(self, tmp_path):
        """Test exhaustive checkpoint inversion."""
        result = run_experiment(make_config(tmp_path, "checkpoint", n=1024, t_len=32,
                                            challenges=0))
        assert result.ok
        assert "S*T / (4 n log2 n)" in result.summary

    def test_sweep(self, tmp_path):
        """Test a sweep read from point lines."""
        points = ("grover n=16", "checkpoint n=256", "hellman n=512")
        result = run_experiment(make_config(tmp_path, "sweep", points=points, challenges=30))
        assert result.ok
        assert result.rows == 4
        script = (tmp_path / "sweep.gp").read_text()
        assert "S*T^2" in script

    def test_sweep_method_filter(self, tmp_path):
        """Test restricting a sweep to one method."""
        points = ("grover n=16", "checkpoint n=256")
        result = run_experiment(make_config(tmp_path, "sweep", points=points,
                                            method="checkpoint", challenges=30))
        assert result.rows == 1
        assert "S*T + T^2" in (tmp_path / "sweep.gp").read_text()

    def test_sweep_without_points(self, tmp_path):
        """Test that an empty sweep is a usage error."""
        with pytest.raises(ConfigError):
            run_experiment(make_config(tmp_path, "sweep"))
        with pytest.raises(ConfigError):
            run_experiment(make_config(tmp_path, "sweep", points=("grover n=16",),
                                       method="hellman"))
