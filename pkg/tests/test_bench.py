"""Tests for the benchmark campaigns and the qpe-bench CLI."""

import io
import math

import numpy as np
import pytest

from qpespec import bench
from qpespec.bench import ScenarioConfig
from qpespec.cli import main as cli_main
from qpespec.extraction import SignalEstimate
from qpespec.spectrum import circular_distance, wrap_phase


def small_ts_config(**overrides):
    base = dict(
        scenario="single_ev_scaling", estimator="time_series",
        recipe="single", n=2000, k=10, trials=8, seed=42,
    )
    base.update(overrides)
    return ScenarioConfig(**base)


class TestScenarioConfig:
    def test_defaults_valid(self):
        cfg = ScenarioConfig(scenario="single_ev_scaling")
        assert cfg.estimator == "time_series"
        assert cfg.k == 50

    @pytest.mark.parametrize("bad", [
        dict(scenario="nope"),
        dict(scenario="single_ev_scaling", estimator="oracle"),
        dict(scenario="single_ev_scaling", recipe="surprise"),
        dict(scenario="single_ev_scaling", trials=0),
        dict(scenario="single_ev_scaling", mode="sideways"),
        dict(scenario="single_ev_scaling", k_err=-1.0),
        dict(scenario="single_ev_scaling", n_track=0),
    ])
    def test_invalid_fields_raise(self, bad):
        with pytest.raises(ValueError):
            ScenarioConfig(**bad)

    def test_estimator_design_must_pair(self):
        with pytest.raises(ValueError):
            ScenarioConfig(scenario="single_ev_scaling", estimator="bayes",
                           design="ts_single_round_cycle")
        with pytest.raises(ValueError):
            ScenarioConfig(scenario="single_ev_scaling",
                           estimator="time_series", design="bayes_adaptive")


class TestSpectrumRecipes:
    def test_single_one_phase(self):
        rng = np.random.default_rng(0)
        s = bench.draw_spectrum("single", rng)
        assert s.n_eig == 1
        assert abs(s.weights[0] - 1.0) < 1e-15

    def test_two_ev_gap_and_weights(self):
        rng = np.random.default_rng(1)
        s = bench.draw_spectrum("two_ev", rng, delta=0.25, a0=0.7)
        gaps = {round(abs(wrap_phase(s.phases[1] - s.phases[0])), 12),
                round(abs(wrap_phase(s.phases[0] - s.phases[1])), 12)}
        assert round(0.25, 12) in gaps
        assert sorted(s.weights) == pytest.approx([0.3, 0.7])

    def test_anchored_many_target_and_gap(self):
        rng = np.random.default_rng(2)
        s = bench.draw_spectrum("anchored_many", rng, n_eig=10, a0=0.5,
                                phi0=-0.5)
        assert -0.5 in list(s.phases)
        others = s.phases[s.phases != -0.5]
        assert others.min() >= 0.0 and others.max() <= math.pi
        assert min(circular_distance(p, -0.5) for p in others) >= 0.5
        assert s.weights.sum() == pytest.approx(1.0)

    def test_uniform_many_respects_delta_window(self):
        rng = np.random.default_rng(3)
        s = bench.draw_spectrum("uniform_many", rng, n_eig=6, delta=0.2,
                                a0=0.4, phi_max=2.0)
        others = s.phases[s.phases != 0.0]
        assert others.min() >= 0.2 and others.max() <= 2.0

    def test_explicit_passthrough(self):
        rng = np.random.default_rng(4)
        s = bench.draw_spectrum("explicit", rng, phases=(0.1, 1.2),
                                weights=(0.6, 0.4))
        assert s.phases == pytest.approx([0.1, 1.2])
        assert s.weights == pytest.approx([0.6, 0.4])

    def test_same_seed_same_spectrum(self):
        a = bench.draw_spectrum("anchored_many", np.random.default_rng(9))
        b = bench.draw_spectrum("anchored_many", np.random.default_rng(9))
        assert np.array_equal(a.phases, b.phases)
        assert np.array_equal(a.weights, b.weights)


class TestRecipeTarget:
    def test_two_ev_target_found_geometrically(self):
        # companion sits delta above the target even when it out-weighs it
        s = bench.draw_spectrum("two_ev", np.random.default_rng(5),
                                delta=0.3, a0=0.2)
        target = bench._recipe_target("two_ev", s, {"delta": 0.3})
        other = [p for p in s.phases if p != target][0]
        assert wrap_phase(other - target) == pytest.approx(0.3, abs=1e-12)

    def test_single_target_is_heaviest(self):
        s = bench.draw_spectrum("single", np.random.default_rng(6))
        assert bench._recipe_target("single", s, {}) == s.phases[0]


class TestSignalTruncation:
    def test_cuts_at_first_noisy_entry(self):
        g = np.ones(8, dtype=complex)
        sigma = np.array([0.0, 0.01, 0.02, 0.03, 0.2, 0.01, 0.01, 0.01])
        cut = bench.truncate_signal(SignalEstimate(g=g, sigma=sigma))
        assert cut.g.size == 4

    def test_keeps_minimum_three(self):
        g = np.ones(6, dtype=complex)
        sigma = np.array([0.0, 0.5, 0.5, 0.5, 0.5, 0.5])
        cut = bench.truncate_signal(SignalEstimate(g=g, sigma=sigma))
        assert cut.g.size == 3

    def test_clean_signal_untouched(self):
        sig = SignalEstimate(g=np.ones(5, dtype=complex),
                             sigma=np.zeros(5))
        assert bench.truncate_signal(sig) is sig


class TestPhaseMerging:
    def test_pair_collapses_to_mean(self):
        merged = bench._merge_close_phases([0.100, 0.104, 1.0],
                                           [0.5, 0.5, 1.0], tol=0.01)
        assert merged.size == 2
        assert merged[0] == pytest.approx(0.102, abs=1e-12)

    def test_wraparound_cluster(self):
        merged = bench._merge_close_phases(
            [-math.pi + 0.001, math.pi - 0.001], [1.0, 1.0], tol=0.01)
        assert merged.size == 1
        assert abs(circular_distance(merged[0], math.pi)) < 1e-9

    def test_far_phases_survive(self):
        merged = bench._merge_close_phases([0.0, 1.0, 2.0], [1, 1, 1], 0.01)
        assert merged.size == 3


class TestTrackingPrior:
    def test_single_candidate(self):
        assert bench.tracking_prior(1).tolist() == [1.0]

    def test_target_weight_and_tilt(self):
        prior = bench.tracking_prior(4, a0=0.4)
        assert prior[0] == pytest.approx(0.4)
        assert prior.sum() == pytest.approx(1.0)
        assert np.all(np.diff(prior[1:]) < 0)

    def test_invalid(self):
        with pytest.raises(ValueError):
            bench.tracking_prior(0)


class TestDeterminism:
    def test_rerun_bit_identical(self):
        cfg = small_ts_config()
        a = bench.run_point(cfg)
        b = bench.run_point(cfg)
        assert a == b

    def test_workers_do_not_change_results(self):
        cfg = small_ts_config()
        serial = bench.run_point(cfg)
        pooled = bench.run_point(ScenarioConfig(
            **{**{f: getattr(cfg, f) for f in cfg.__dataclass_fields__},
               "workers": 2}))
        assert serial == pooled

    def test_different_seed_differs(self):
        a = bench.run_point(small_ts_config(seed=1))
        b = bench.run_point(small_ts_config(seed=2))
        assert a[0]["eps"] != b[0]["eps"]

    def test_bayes_rerun_bit_identical(self):
        cfg = ScenarioConfig(
            scenario="single_ev_scaling", estimator="bayes",
            design="bayes_adaptive", recipe="single", n=150, k=10,
            trials=3, seed=7,
        )
        assert bench.run_point(cfg) == bench.run_point(cfg)


class TestSummaries:
    def test_rejected_and_nan_excluded(self):
        results = [
            {"phi_true": 0.0, "estimates": {10: 0.1}, "k_tot": {10: 5}},
            {"phi_true": 0.0, "estimates": {10: math.nan}, "k_tot": {10: 5}},
            {"phi_true": 0.0, "estimates": {10: 0.3},
             "rejected": {10: True}, "k_tot": {10: 5}},
        ]
        row = bench.summarize_point(results, 10)
        assert row["rejected"] == 2
        assert row["eps"] == pytest.approx(0.1)

    def test_all_rejected_gives_nan(self):
        results = [{"phi_true": 0.0, "estimates": {10: math.nan},
                    "k_tot": {10: 0}}]
        row = bench.summarize_point(results, 10)
        assert math.isnan(row["eps"])

    def test_bootstrap_ci_brackets_mean(self):
        values = np.abs(np.random.default_rng(0).normal(0.0, 1.0, 400))
        lo, hi = bench.bootstrap_ci(values)
        assert lo < values.mean() < hi

    def test_fit_loglog_slope_recovers_power(self):
        xs = np.array([1e3, 1e4, 1e5])
        ys = 3.0 * xs ** -0.5
        assert bench.fit_loglog_slope(xs, ys) == pytest.approx(-0.5)

    def test_fit_loglog_slope_ignores_nan(self):
        slope = bench.fit_loglog_slope([10, 100, 1000],
                                       [1.0, math.nan, 0.01])
        assert slope == pytest.approx(-1.0)


class TestTrialRunners:
    def test_ts_trial_reports_all_budgets(self):
        payloads = bench._payloads(small_ts_config(), "ts", (500, 1000))
        res = bench.ts_trial(payloads[0])
        assert set(res["estimates"]) == {500, 1000}
        assert res["k_tot"][1000] > res["k_tot"][500]

    def test_bayes_trial_checkpoints_and_rejection_flags(self):
        cfg = ScenarioConfig(
            scenario="single_ev_scaling", estimator="bayes",
            design="bayes_adaptive", recipe="single", n=120, k=8,
            trials=2, seed=3,
        )
        payloads = bench._payloads(cfg, "bayes", (60, 120))
        res = bench.bayes_trial(payloads[0])
        assert set(res["estimates"]) == {60, 120}
        assert set(res["rejected"]) == {60, 120}
        err = abs(wrap_phase(res["estimates"][120] - res["phi_true"]))
        assert err < 0.2

    def test_bayes_trial_degenerate_band_reports_nan(self):
        # a 3-harmonic band truncates from the first k=8 update; however
        # the run ends, it must return rows for every checkpoint
        cfg = ScenarioConfig(
            scenario="single_ev_scaling", estimator="bayes",
            design="bayes_adaptive", recipe="single", n=400, k=8,
            trials=1, seed=0,
        )
        payloads = bench._payloads(cfg, "bayes", (200, 400),
                                   overrides={"n_freq": 3})
        res = bench.bayes_trial(payloads[0])
        assert set(res["estimates"]) == {200, 400}
        for n, est in res["estimates"].items():
            if not math.isfinite(est):
                assert res["rejected"][n]

    def test_random_k_override_changes_run(self):
        cfg = ScenarioConfig(
            scenario="single_ev_scaling", estimator="bayes",
            design="bayes_adaptive", recipe="single", n=100, k=8,
            trials=1, seed=5,
        )
        plain = bench.bayes_trial(bench._payloads(cfg, "bayes", (100,))[0])
        drawn = bench.bayes_trial(
            bench._payloads(cfg, "bayes", (100,),
                            overrides={"random_k": True})[0])
        assert plain["k_tot"][100] != drawn["k_tot"][100]


class TestScenarioDrivers:
    def test_single_ev_scaling_rows(self):
        cfg = small_ts_config(trials=4)
        rows = bench.run_scenario(cfg, n_sweep=(500, 1000), k_sweep=(4, 8))
        n_rows = [r for r in rows if r["sweep"] == "n"]
        k_rows = [r for r in rows if r["sweep"] == "k"]
        assert [r["n"] for r in n_rows] == [500, 1000]
        assert sorted(r["k"] for r in k_rows) == [4, 8]

    def test_two_ev_surface_tags_rows(self):
        cfg = ScenarioConfig(scenario="two_ev_surface", n=2000, k=10,
                             trials=4, seed=1)
        rows = bench.run_scenario(cfg, deltas=(0.5, 1.0), a0s=(0.5,))
        assert {r["delta"] for r in rows} == {0.5, 1.0}
        assert all(r["a0"] == 0.5 for r in rows)

    def test_depolarizing_study_variants_and_bayes_knobs(self):
        cfg = ScenarioConfig(scenario="depolarizing_study", n=400, k=6,
                             k_err=12.0, trials=4, seed=2)
        rows = bench.run_scenario(cfg, n_sweep=(200, 400), bayes_trials=2,
                                  bayes_n_sweep=(400,))
        variants = {}
        for row in rows:
            variants.setdefault(row["variant"], []).append(row)
        assert set(variants) == {"ts_uncompensated", "ts_compensated",
                                 "bayes_compensated"}
        assert len(variants["ts_uncompensated"]) == 2
        assert len(variants["bayes_compensated"]) == 1
        assert variants["bayes_compensated"][0]["trials"] == 2

    def test_chi_selftest_rows_pass(self):
        cfg = ScenarioConfig(scenario="chi_selftest", trials=1, seed=0)
        rows = bench.run_scenario(cfg, k_values=(2, 4))
        assert [r["check"] for r in rows] == [
            "chi_identity_K2", "chi_identity_K4", "g_from_exact_pmf"]
        assert all(r["passed"] for r in rows)

    def test_run_scenario_writes_out(self, tmp_path):
        out = tmp_path / "rows.csv"
        cfg = ScenarioConfig(scenario="chi_selftest", trials=1, seed=0,
                             out=str(out))
        bench.run_scenario(cfg, k_values=(2,))
        text = out.read_text()
        assert text.startswith("#")
        assert "chi_identity_K2" in text


class TestRunSimulate:
    def test_dump_rows_then_summary(self):
        cfg = small_ts_config(trials=3)
        rows = bench.run_simulate(cfg, dump_trials=True)
        assert len(rows) == 4
        assert [r["trial"] for r in rows[:3]] == [0, 1, 2]
        summary = rows[-1]
        assert summary["n"] == cfg.n
        errors = [abs(r["error"]) for r in rows[:3]]
        assert summary["eps"] == pytest.approx(np.mean(errors))

    def test_summary_only(self):
        rows = bench.run_simulate(small_ts_config(trials=3))
        assert len(rows) == 1


class TestCsvOutput:
    def test_config_comments_and_union_header(self, tmp_path):
        path = tmp_path / "out.csv"
        bench.write_rows(path, [{"a": 1.5, "b": 2}, {"a": 3.0, "c": None}],
                         config={"seed": 7})
        lines = path.read_text().splitlines()
        assert lines[0] == "# seed,7"
        assert lines[1] == "a,b,c"
        assert lines[2] == "1.5,2,"
        assert lines[3] == "3.0,,"

    def test_stream_output(self):
        buf = io.StringIO()
        bench.write_rows(buf, [{"x": 1}])
        assert buf.getvalue() == "x\n1\n"

    def test_floats_round_trip(self, tmp_path):
        path = tmp_path / "out.csv"
        value = 0.1234567890123456789
        bench.write_rows(path, [{"v": value}])
        text = path.read_text().splitlines()[1]
        assert float(text) == value


class TestCli:
    def test_chi_selftest_exit_zero(self, capsys):
        code = cli_main(["chi-selftest", "--k-values", "2"])
        out = capsys.readouterr().out
        assert code == 0
        assert "PASS chi_identity_K2" in out

    def test_simulate_stdout_csv(self, capsys):
        code = cli_main(["simulate", "--trials", "3", "--n", "500",
                         "--k", "6", "--seed", "1", "--summary-only"])
        out = capsys.readouterr().out
        assert code == 0
        header, row = out.strip().splitlines()
        assert header.split(",")[:2] == ["n", "trials"]
        assert row.split(",")[:2] == ["500", "3"]

    def test_simulate_dump_to_file(self, tmp_path, capsys):
        out = tmp_path / "dump.csv"
        code = cli_main(["simulate", "--trials", "2", "--n", "500",
                         "--k", "6", "--seed", "1", "--out", str(out)])
        assert code == 0
        lines = out.read_text().splitlines()
        comments = [l for l in lines if l.startswith("#")]
        assert any(l.startswith("# seed,1") for l in comments)
        data = [l for l in lines if not l.startswith("#")]
        assert len(data) == 1 + 2 + 1  # header, two trials, summary

    def test_invalid_combination_rejected_at_parse_time(self, capsys):
        with pytest.raises(SystemExit) as exc:
            cli_main(["simulate", "--estimator", "bayes", "--design",
                      "ts_multi_round", "--n", "100"])
        assert exc.value.code == 2
        assert "adaptive design" in capsys.readouterr().err

    def test_random_k_needs_bayes(self, capsys):
        with pytest.raises(SystemExit) as exc:
            cli_main(["simulate", "--random-k", "--n", "100"])
        assert exc.value.code == 2

    def test_bayes_estimator_implies_design(self, capsys):
        code = cli_main(["simulate", "--estimator", "bayes", "--trials", "2",
                         "--n", "60", "--k", "6", "--seed", "2",
                         "--summary-only"])
        assert code == 0

    def test_config_file_with_flag_precedence(self, tmp_path, capsys):
        ini = tmp_path / "run.ini"
        ini.write_text(
            "[run]\n"
            "scenario = single_ev_scaling\n"
            "n = 500\n"
            "k = 6\n"
            "trials = 4\n"
            "seed = 9\n"
            "[sweep]\n"
            "n = 200,400\n"
        )
        code = cli_main(["scaling-study", "--config", str(ini),
                         "--trials", "2"])
        out = capsys.readouterr().out
        assert code == 0
        data = [l for l in out.splitlines() if not l.startswith("#")]
        rows = [dict(zip(data[0].split(","), l.split(","))) for l in data[1:]]
        n_rows = [r for r in rows if r["sweep"] == "n"]
        assert [r["n"] for r in n_rows] == ["200", "400"]  # sweep from file
        assert all(r["trials"] == "2" for r in rows)  # flag beats file

    def test_config_scientific_notation_ints(self, tmp_path, capsys):
        ini = tmp_path / "run.ini"
        ini.write_text("[run]\nn = 1e3\ntrials = 2\nk = 6\n")
        code = cli_main(["simulate", "--config", str(ini), "--seed", "4",
                         "--summary-only"])
        out = capsys.readouterr().out
        assert code == 0
        assert out.splitlines()[1].split(",")[0] == "1000"

    def test_unknown_config_key_rejected(self, tmp_path, capsys):
        ini = tmp_path / "run.ini"
        ini.write_text("[run]\nshots = 5\n")
        with pytest.raises(SystemExit) as exc:
            cli_main(["simulate", "--config", str(ini)])
        assert exc.value.code == 2
        assert "unknown [run] config key" in capsys.readouterr().err

    def test_sweep_key_scenario_mismatch_rejected(self, tmp_path, capsys):
        ini = tmp_path / "run.ini"
        ini.write_text("[run]\nk = 4\n[sweep]\ndeltas = 0.1,0.2\n")
        with pytest.raises(SystemExit) as exc:
            cli_main(["scaling-study", "--config", str(ini)])
        assert exc.value.code == 2
        assert "not valid for" in capsys.readouterr().err

    def test_missing_config_rejected(self, capsys):
        with pytest.raises(SystemExit) as exc:
            cli_main(["simulate", "--config", "/does/not/exist.ini"])
        assert exc.value.code == 2

    def test_seeded_cli_rerun_identical(self, tmp_path):
        args = ["simulate", "--trials", "3", "--n", "400", "--k", "6",
                "--seed", "8"]
        out1, out2 = tmp_path / "a.csv", tmp_path / "b.csv"
        assert cli_main(args + ["--out", str(out1)]) == 0
        assert cli_main(args + ["--out", str(out2)]) == 0
        strip = lambda p: [l for l in p.read_text().splitlines()
                           if not l.startswith("# out")]
        assert strip(out1) == strip(out2)
