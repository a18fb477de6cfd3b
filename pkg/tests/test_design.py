"""Tests for measurement-schedule generation."""

import math

import numpy as np
import pytest

from qpespec.design import (
    BayesAdaptivePolicy,
    DesignPolicy,
    adaptive_order,
    bayes_adaptive_next,
    save_schedule,
    schedule_k_tot,
    ts_multi_round_schedule,
    ts_single_round_schedule,
)
from qpespec.simulator import (
    ExperimentSpec,
    experiment_outcome_prob,
    hamming_design_rounds,
    run_schedule,
)
from qpespec.spectrum import Spectrum


class TestSingleRoundSchedule:
    def test_k2_n8_two_per_cell(self):
        sched = ts_single_round_schedule(2, 8)
        specs = [spec for spec, _ in sched]
        assert specs == [
            ExperimentSpec.single_round(1, 0.0),
            ExperimentSpec.single_round(1, math.pi / 2),
            ExperimentSpec.single_round(2, 0.0),
            ExperimentSpec.single_round(2, math.pi / 2),
        ]
        assert [reps for _, reps in sched] == [2, 2, 2, 2]

    def test_k1_n2_one_per_beta(self):
        sched = ts_single_round_schedule(1, 2)
        assert [reps for _, reps in sched] == [1, 1]

    def test_fig_scale_budget(self):
        sched = ts_single_round_schedule(50, 10**6)
        assert len(sched) == 100
        assert all(reps == 10**4 for _, reps in sched)

    def test_remainder_round_robin(self):
        sched = ts_single_round_schedule(2, 10)
        assert [reps for _, reps in sched] == [3, 3, 2, 2]
        assert sum(reps for _, reps in sched) == 10

    def test_budget_below_cell_count(self):
        sched = ts_single_round_schedule(3, 4)
        reps = [r for _, r in sched]
        assert reps == [1, 1, 1, 1, 0, 0]
        assert max(reps) - min(reps) <= 1

    def test_invalid_args(self):
        with pytest.raises(ValueError):
            ts_single_round_schedule(0, 10)
        with pytest.raises(ValueError):
            ts_single_round_schedule(3, 0)

    def test_k_tot_accounting_matches_sampler(self):
        spectrum = Spectrum.single(0.4)
        sched = ts_single_round_schedule(4, 37)
        counts = run_schedule(spectrum, sched, seed=0)
        assert counts.k_tot == schedule_k_tot(sched)
        assert counts.total_shots == 37

    def test_schedule_csv(self, tmp_path):
        sched = ts_single_round_schedule(2, 4)
        path = tmp_path / "sched.csv"
        save_schedule(sched, path)
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "experiment_id,round_id,k,beta"
        assert len(lines) == 1 + 4
        assert lines[1].startswith("0,0,1,")


class TestMultiRoundSchedule:
    def test_k2(self):
        spec = ts_multi_round_schedule(2)
        assert [(r.k, r.beta) for r in spec.rounds] == [
            (1, 0.0),
            (1, math.pi / 2),
        ]

    def test_k4_two_of_each(self):
        spec = ts_multi_round_schedule(4)
        betas = [r.beta for r in spec.rounds]
        assert betas == [0.0, 0.0, math.pi / 2, math.pi / 2]
        assert all(r.k == 1 for r in spec.rounds)

    def test_recognized_by_simulator(self):
        assert hamming_design_rounds(ts_multi_round_schedule(6)) == 6

    def test_odd_k_rejected(self):
        with pytest.raises(ValueError):
            ts_multi_round_schedule(3)
        with pytest.raises(ValueError):
            ts_multi_round_schedule(0)

    def test_outcome_prob_order_invariant(self):
        spectrum = Spectrum.from_pairs([(0.3, 0.6), (-1.1, 0.4)])
        spec = ts_multi_round_schedule(4)
        shuffled = ExperimentSpec(
            rounds=(spec.rounds[2], spec.rounds[0], spec.rounds[3], spec.rounds[1])
        )
        outcome = (1, 0, 1, 1)
        reord = (1, 1, 1, 0)  # the same bits carried with their rounds
        assert experiment_outcome_prob(
            spectrum, spec, outcome
        ) == pytest.approx(
            experiment_outcome_prob(spectrum, shuffled, reord), abs=1e-15
        )


class TestAdaptiveDesign:
    def test_order_examples(self):
        assert adaptive_order(0.1, 50) == 13
        assert adaptive_order(0.001, 50) == 50
        assert adaptive_order(math.inf, 50) == 1
        assert adaptive_order(None, 50) == 1

    def test_wide_posterior_gives_base_order(self):
        assert adaptive_order(5.0, 50) == 1

    def test_invalid_sigma(self):
        with pytest.raises(ValueError):
            adaptive_order(-0.1, 50)
        with pytest.raises(ValueError):
            adaptive_order(0.1, 0)

    def test_cycling_orders(self):
        rng = np.random.default_rng(0)
        ks = [
            bayes_adaptive_next(0.2, 50, rng, cycle=c)[0] for c in range(14)
        ]
        # ceil(1.25 / 0.2) = 7, so orders cycle 1..7.
        assert ks == [1, 2, 3, 4, 5, 6, 7, 1, 2, 3, 4, 5, 6, 7]

    def test_beta_uniform_range(self):
        rng = np.random.default_rng(1)
        betas = [bayes_adaptive_next(0.5, 10, rng)[1] for _ in range(200)]
        assert all(0.0 <= b < 2 * math.pi for b in betas)
        assert min(betas) < 1.0 and max(betas) > 5.0

    def test_random_k_within_range(self):
        rng = np.random.default_rng(2)
        ks = {
            bayes_adaptive_next(0.2, 50, rng, random_k=True)[0]
            for _ in range(300)
        }
        assert ks == set(range(1, 8))

    def test_policy_advances_cycle(self):
        policy = BayesAdaptivePolicy(50, np.random.default_rng(3))
        ks = [policy.next(0.5)[0] for _ in range(5)]
        # ceil(1.25 / 0.5) = 3.
        assert ks == [1, 2, 3, 1, 2]

    def test_policy_respects_cap(self):
        policy = BayesAdaptivePolicy(4, np.random.default_rng(4))
        ks = {policy.next(1e-6)[0] for _ in range(12)}
        assert ks == {1, 2, 3, 4}


class TestDesignPolicy:
    def test_valid_kinds(self):
        DesignPolicy(kind="ts_single_round_cycle", K=10, n_budget=100)
        DesignPolicy(kind="bayes_adaptive", k_err_cap=50)

    def test_invalid_kind(self):
        with pytest.raises(ValueError):
            DesignPolicy(kind="surprise")

    def test_invalid_cap(self):
        with pytest.raises(ValueError):
            DesignPolicy(kind="ts_multi_round", K=0)
