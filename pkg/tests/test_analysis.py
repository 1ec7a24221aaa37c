"""
分析模块: 收敛速率预测与拟合、初始参数 gamma、轨迹不变量检查
"""

import math

import numpy as np
import pytest

from app.models.check import CheckResult
from app.models.contest import ContestConfig
from app.models.cost import CostSpec
from app.models.dynamics import StoppingRule
from app.processors.analysis.gamma import gamma_lower_bound_n, gamma_two_agent
from app.processors.analysis.invariants import (
    AlternationRedundancyCheck,
    DeviationPersistenceCheck,
    PersistenceCheck,
    br_trace_observers,
    check_trace,
    deviation_floor,
    merge_results,
    two_agent_monotone,
)
from app.processors.analysis.rates import (
    RatePrediction,
    curved_warm_phase_window,
    eps_doubling_gaps,
    fit_rate,
    lglg,
    predict_steps,
    steps_to_reach,
)
from app.processors.br_dynamics.processor import StepEvent, run
from app.processors.br_dynamics.selection import Alternating, UniformRandom
from app.utils.exceptions import FitError, InvalidInputError, UnsupportedContestError


class TestRates:
    def test_lglg(self) -> None:
        assert lglg(16.0) == pytest.approx(2.0)
        assert lglg(2.0) == 0.0
        assert lglg(0.5) == 0.0

    def test_two_agent_prediction(self) -> None:
        pred = RatePrediction.two_agent(1.0)
        assert predict_steps(pred, 1 / 16) == pytest.approx(2.0)
        assert RatePrediction.two_agent(1.0, C=3.0).predicted_steps(1 / 16) == pytest.approx(5.0)

    def test_gamma_adds_warm_phase(self) -> None:
        pred = RatePrediction.two_agent(1 / 16)
        assert pred.shape(1 / 16) == pytest.approx(4.0)

    def test_fit_two_agent_additive(self) -> None:
        measured = [(2.0**-4, 5.0), (2.0**-16, 7.0), (2.0**-256, 11.0)]
        report = fit_rate(measured, RatePrediction.two_agent(1.0))
        assert report.additive == pytest.approx(3.0)
        assert report.multiplicative == 1.0
        assert report.max_residual == pytest.approx(0.0, abs=1e-9)
        assert not report.poor_fit
        assert report.to_dict()["model"] == "two_agent"

    def test_fit_n_agent_best_recovers_both_constants(self) -> None:
        model = RatePrediction.n_agent_best(4, 1.0)
        measured = [(e, 10.0 + 2.0 * model.shape(e)) for e in (1e-2, 1e-4, 1e-6, 1e-8)]
        report = fit_rate(measured, model)
        assert report.additive == pytest.approx(10.0, rel=1e-9)
        assert report.multiplicative == pytest.approx(2.0, rel=1e-9)

    def test_poor_fit_flagged(self) -> None:
        measured = [(1e-2, 2.0), (1e-4, 30.0), (1e-8, 4.0)]
        report = fit_rate(measured, RatePrediction.two_agent(1.0), tolerance=1.0)
        assert report.poor_fit

    @pytest.mark.parametrize(
        "measured",
        [
            [(1e-2, 2.0), (1e-4, 3.0)],
            [(1e-4, 3.0), (1e-2, 2.0), (1e-8, 4.0)],
            [(1.5, 1.0), (1e-2, 2.0), (1e-4, 3.0)],
            [(1e-2, 2.0), (1e-4, math.inf), (1e-8, 4.0)],
        ],
    )
    def test_fit_rejects_bad_data(self, measured) -> None:
        with pytest.raises(FitError):
            fit_rate(measured, RatePrediction.two_agent(1.0))

    def test_prediction_validation(self) -> None:
        with pytest.raises(InvalidInputError):
            RatePrediction.two_agent(0.0)
        with pytest.raises(InvalidInputError):
            RatePrediction.two_agent(1.5)
        with pytest.raises(InvalidInputError):
            RatePrediction.two_agent_curved(0.5, p=1.0, q=2.0)
        with pytest.raises(InvalidInputError):
            RatePrediction.n_agent_best(2, 1.0)
        with pytest.raises(InvalidInputError):
            RatePrediction.n_agent_random(4, 1.0, L=0.5)
        with pytest.raises(InvalidInputError):
            RatePrediction.two_agent(1.0).shape(1.0)

    def test_random_floor_defaults_to_uniform(self) -> None:
        pred = RatePrediction.n_agent_random(4, 1.0)
        assert pred.L == pytest.approx(0.25)
        assert pred.shape(1e-3) == pytest.approx(16.0 * 2.0 * math.log2(4.0 / (1e-3 * 0.05)))

    def test_curved_window(self) -> None:
        lo, hi = curved_warm_phase_window(1e-12, 2.0, 2.0)
        warm = lglg(1e12)
        assert hi == pytest.approx(warm / 2.0)
        assert lo == pytest.approx(warm / 2.0 - math.log2(5.0))
        with pytest.raises(InvalidInputError):
            curved_warm_phase_window(0.6, 2.0, 2.0)
        with pytest.raises(InvalidInputError):
            curved_warm_phase_window(0.1, 1.0, 2.0)

    def test_steps_to_reach(self) -> None:
        assert steps_to_reach([0.1, 0.3, 0.6, 0.9], 0.5) == 2
        assert steps_to_reach([0.1, 0.3], 0.5) is None

    def test_eps_doubling_gaps(self) -> None:
        assert eps_doubling_gaps([(1e-2, 2), (1e-8, 4), (1e-4, 3)]) == [1, 1]


class TestGamma:
    def test_inside_unit_interval(self, linear_pair: ContestConfig) -> None:
        report = gamma_two_agent(linear_pair, 0.5)
        assert report.gamma == 0.5
        assert report.rule == "in_unit_interval"

    def test_at_equilibrium(self, linear_pair: ContestConfig) -> None:
        assert gamma_two_agent(linear_pair, 1.0).rule == "at_equilibrium"

    def test_inverse_marginal(self) -> None:
        cfg = ContestConfig.homogeneous(2, CostSpec.power(1.0))
        report = gamma_two_agent(cfg, 16.0)
        assert report.rule == "inverse_marginal"
        assert report.gamma == pytest.approx(1 / 16)

    def test_linear_large_start_uses_a(self, linear_pair: ContestConfig) -> None:
        report = gamma_two_agent(linear_pair, 4.0)
        assert report.rule == "best_response_to_zero"
        assert report.gamma == linear_pair.a

    def test_two_agent_only(self, linear_trio: ContestConfig) -> None:
        with pytest.raises(UnsupportedContestError):
            gamma_two_agent(linear_trio, 0.5)

    def test_needs_normalized_contest(self) -> None:
        cfg = ContestConfig.heterogeneous([CostSpec.linear(), CostSpec.linear(2.0)])
        with pytest.raises(UnsupportedContestError):
            gamma_two_agent(cfg, 0.5)

    def test_lower_bound_positive_marginal_cost(self, linear_trio: ContestConfig) -> None:
        report = gamma_lower_bound_n(linear_trio, [1.0, 1.0, 1.0])
        assert report.rule == "positive_marginal_cost"
        assert report.outputs == (1.0, 1.0, 1.0)
        # kappa = 9/2, so (kappa - 1)/4 undercuts BR((kappa + 1)/4)
        assert report.responses == pytest.approx((0.875, 0.875, 0.875))
        assert report.gamma == linear_trio.a

    def test_lower_bound_zero_marginal_cost(self) -> None:
        cfg = ContestConfig.homogeneous(3, CostSpec.power(1.0))
        report = gamma_lower_bound_n(cfg, [2.0, 0.0, 0.0])
        assert report.rule == "zero_marginal_cost"
        assert report.outputs == (2.0,)
        assert len(report.responses) == 3
        assert report.to_dict()["gamma"] == cfg.a

    def test_lower_bound_needs_three_agents(self, linear_pair: ContestConfig) -> None:
        with pytest.raises(UnsupportedContestError):
            gamma_lower_bound_n(linear_pair, [1.0, 1.0])


class TestInvariants:
    def test_observers_for_linear_contest(self) -> None:
        cfg = ContestConfig.homogeneous(4, CostSpec.linear())
        names = {check.name for check in br_trace_observers(cfg)}
        assert names == {
            "alternation_redundancy",
            "persistence",
            "dissum_contract",
            "warmup_absorption",
            "two_threshold_persistence",
            "deviation_persistence",
        }

    def test_observers_for_curved_pair(self) -> None:
        cfg = ContestConfig.homogeneous(2, CostSpec.power(1.0))
        names = {check.name for check in br_trace_observers(cfg)}
        assert names == {"alternation_redundancy", "persistence"}

    def test_heterogeneous_contest_gets_redundancy_only(self) -> None:
        cfg = ContestConfig.heterogeneous([CostSpec.linear(), CostSpec.linear(2.0)])
        assert [c.name for c in br_trace_observers(cfg)] == ["alternation_redundancy"]
        with pytest.raises(UnsupportedContestError):
            PersistenceCheck(cfg)

    def test_deviation_persistence_is_linear_only(self) -> None:
        with pytest.raises(UnsupportedContestError):
            DeviationPersistenceCheck(ContestConfig.homogeneous(3, CostSpec.power(1.0)))

    def test_random_run_holds_every_invariant(self) -> None:
        cfg = ContestConfig.homogeneous(4, CostSpec.linear())
        observers = br_trace_observers(cfg)
        trace = run(
            cfg, np.full(4, 5.0), UniformRandom(),
            StoppingRule.epsilon_equilibrium(1e-9, max_steps=20_000),
            seed=3, observers=observers,
        )
        assert trace.summary.converged
        assert trace.summary.steps > 0
        for check in observers:
            result = check.result()
            assert result.passed, result.to_dict()
            assert result.checked > 0, result.name

    def test_replay_matches_streaming(self) -> None:
        cfg = ContestConfig.homogeneous(4, CostSpec.linear())
        streaming = br_trace_observers(cfg)
        trace = run(
            cfg, np.full(4, 5.0), UniformRandom(),
            StoppingRule.epsilon_equilibrium(1e-9, max_steps=20_000),
            seed=7, observers=streaming,
        )
        replayed = check_trace(trace, br_trace_observers(cfg))
        assert [r.name for r in replayed] == [c.name for c in streaming]
        assert all(r.passed for r in replayed)
        assert [r.checked for r in replayed] == [c.result().checked for c in streaming]
        assert all(r.checked > 0 for r in replayed)

    def test_repeat_within_solver_tolerance_is_redundant(self) -> None:
        check = AlternationRedundancyCheck()
        before = np.array([0.9, 1.1, 1.0])
        after = before.copy()
        after[0] = np.nextafter(after[0], 2.0)
        check(StepEvent(1, 0, before, before.copy(), 2.1))
        check(StepEvent(2, 0, before, after, 2.1))
        check(StepEvent(3, 0, after, np.array([0.95, 1.1, 1.0]), 2.1))
        result = check.result()
        assert (result.checked, result.violations) == (2, 1)
        assert result.detail["examples"][0]["t"] == 3

    def test_deviation_persistence_skips_moves_far_below_equilibrium(
        self, linear_trio: ContestConfig
    ) -> None:
        assert deviation_floor(3) == pytest.approx(2 * (7 / 8) ** 2)
        check = DeviationPersistenceCheck(linear_trio)
        # agent 0 answers s = 0.9 with about 1.1125; second deviation drops to ~0.11 < 1/6
        before = np.array([5.0, 0.0, 0.9])
        after = np.array([3 * math.sqrt(0.45) - 0.9, 0.0, 0.9])
        check(StepEvent(1, 0, before, after, 0.9))
        assert check.result().checked == 0
        # near the equilibrium the bound applies: s = 2.2 answers ~0.9
        before = np.array([1.2, 1.2, 1.0])
        response = 3 * math.sqrt(1.1) - 2.2
        check(StepEvent(2, 0, before, np.array([response, 1.2, 1.0]), 2.2))
        result = check.result()
        assert (result.checked, result.violations) == (1, 0)

    def test_two_agent_monotone(self, linear_pair: ContestConfig) -> None:
        trace = run(linear_pair, [0.01, 0.01], Alternating(first=1), StoppingRule.steps(30))
        result = two_agent_monotone(trace)
        assert result.passed
        assert result.checked > 0

    def test_two_agent_monotone_skips_short_trace(self, linear_pair: ContestConfig) -> None:
        trace = run(linear_pair, [0.3, 0.3], Alternating(first=1), StoppingRule.steps(0))
        result = two_agent_monotone(trace)
        assert result.passed
        assert result.detail == {"skipped": True}

    def test_merge_results(self) -> None:
        merged = merge_results(
            "x",
            [
                CheckResult.from_counts("x", 3, 1, examples=[{"t": 2}]),
                CheckResult.from_counts("x", 2, 0, examples=[]),
            ],
        )
        assert (merged.checked, merged.violations, merged.passed) == (5, 1, False)
        assert merged.detail["traces"] == 2
        assert merged.detail["examples"] == [{"t": 2}]
