"""
折扣和动力学与弱势函数
"""

import numpy as np
import pytest

from app.models.dissum import DissumState
from app.models.dynamics import StopReason
from app.processors.analysis.invariants import l1_bracket, potential_monotone, sign_contraction
from app.processors.br_dynamics.selection import RoundRobin, UniformRandom
from app.processors.discounted_sum import weak_potential
from app.processors.discounted_sum.beta import (
    AdversarialMaxBeta,
    CallbackBeta,
    ConstantBeta,
    UniformBeta,
    checked_beta,
)
from app.processors.discounted_sum.processor import (
    DissumBestCase,
    dissum_step,
    lower_bound_example,
    run_dissum,
    stall_example,
)
from app.utils.exceptions import BetaContractError, InvalidInputError


def _state(z, B=0.5, policy=None) -> DissumState:
    return DissumState(
        z=np.asarray(z, dtype=float),
        B=B,
        beta_policy=policy or ConstantBeta(),
        rng=np.random.default_rng(0),
    )


class TestWeakPotential:
    def test_zero_vector(self) -> None:
        value = weak_potential.potential([0.0, 0.0, 0.0])
        assert (value.V, value.W, value.f) == (0.0, 0.0, 0.0)

    def test_balanced(self) -> None:
        value = weak_potential.potential([-1.0, 1.0, 0.0, 0.0])
        assert (value.V, value.W, value.f) == (1.0, 1.0, 1.0)

    def test_mixed(self) -> None:
        value = weak_potential.potential([2.0, -0.5, -1.0, 0.3])
        assert value.V == pytest.approx(2.3)
        assert value.W == pytest.approx(1.5)
        assert value.f == pytest.approx(2.3)
        assert value.l1 == pytest.approx(3.8)

    def test_larger_side_pick(self) -> None:
        assert weak_potential.larger_side_pick([2.0, -0.5, -1.0, 0.3]) == 0
        assert weak_potential.larger_side_pick([0.2, -0.5, -1.0, 0.3]) == 2

    def test_pick_ties_go_positive_then_low_index(self) -> None:
        assert weak_potential.larger_side_pick([1.0, -1.0]) == 0
        assert weak_potential.larger_side_pick([0.5, 0.5, -1.0]) == 0

    def test_pick_with_exclusion(self) -> None:
        assert weak_potential.larger_side_pick([2.0, -0.5, 1.0], exclude=0) == 2


class TestBeta:
    def test_constant_defaults_to_cap(self) -> None:
        assert ConstantBeta().beta(np.zeros(2), 0, 0.7, np.random.default_rng(0)) == 0.7

    def test_uniform_within_cap(self) -> None:
        rng = np.random.default_rng(3)
        values = [UniformBeta().beta(np.zeros(2), 0, 0.4, rng) for _ in range(200)]
        assert all(0.0 <= v <= 0.4 for v in values)

    def test_contract_violation(self) -> None:
        policy = CallbackBeta(lambda z, i, rng: 2.0)
        with pytest.raises(BetaContractError):
            checked_beta(policy, np.zeros(3), 0, 0.5, np.random.default_rng(0))

    def test_negative_constant(self) -> None:
        with pytest.raises(InvalidInputError):
            ConstantBeta(-0.1)


class TestStep:
    def test_update(self) -> None:
        state = dissum_step(_state([1.0, 1.0, 1.0]), 0)
        assert state.z.tolist() == [-1.0, 1.0, 1.0]
        assert state.t == 1
        assert state.last_mover == 0

    def test_bad_coordinate(self) -> None:
        with pytest.raises(InvalidInputError):
            dissum_step(_state([1.0, 1.0]), 2)

    def test_cap_must_be_below_one(self) -> None:
        with pytest.raises(InvalidInputError):
            _state([1.0, 1.0], B=1.0)

    def test_stall_example(self) -> None:
        state = stall_example(4)
        after = dissum_step(state, 2)
        assert weak_potential.potential(after.z).f == weak_potential.potential(state.z).f
        assert after.z.tolist() == state.z.tolist()

    def test_stall_needs_three(self) -> None:
        with pytest.raises(InvalidInputError):
            stall_example(2)


class TestRun:
    def test_round_robin_converges(self) -> None:
        trace = run_dissum([1.0, -1.0], 0.5, ConstantBeta(), RoundRobin(), eps=1e-6)
        assert trace.summary.stop_reason is StopReason.L1_DISTANCE
        assert np.abs(trace.final_state).sum() <= 1e-6
        assert trace.prefix == "z"
        assert trace.potentials is not None
        assert trace.potentials[0] == pytest.approx(1.0)

    def test_needs_eps_or_steps(self) -> None:
        with pytest.raises(InvalidInputError):
            run_dissum([1.0, 1.0], 0.5, ConstantBeta(), RoundRobin())

    def test_zero_start_already_converged(self) -> None:
        trace = run_dissum([0.0, 0.0, 0.0], 0.5, UniformBeta(), UniformRandom(), eps=1e-9)
        assert trace.summary.steps == 0
        assert trace.summary.converged

    def test_max_steps(self) -> None:
        trace = run_dissum([1.0, 2.0, 3.0], 0.9, AdversarialMaxBeta(), UniformRandom(),
                           max_steps=5)
        assert trace.summary.stop_reason is StopReason.MAX_STEPS
        assert len(trace) == 6

    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_invariants_hold_on_random_runs(self, seed: int) -> None:
        rng = np.random.default_rng(seed)
        z0 = rng.standard_normal(8)
        trace = run_dissum(z0, 0.8, UniformBeta(), UniformRandom(), eps=1e-8,
                           max_steps=100_000, seed=seed)
        assert potential_monotone(trace).passed
        assert sign_contraction(trace, 0.8).passed
        assert l1_bracket(trace).passed

    def test_best_case_selection(self) -> None:
        state = _state([1.0, 1.0, 1.0], policy=AdversarialMaxBeta())
        assert DissumBestCase().choose(state) == 0
        trace = run_dissum([1.0, 1.0, 1.0, 1.0], 0.5, AdversarialMaxBeta(), DissumBestCase(),
                           eps=1e-9, max_steps=10_000)
        assert trace.summary.converged


class TestLowerBounds:
    def test_two_coordinate_ratio(self) -> None:
        instance = lower_bound_example("two_coordinate", kappa=1.0, B=0.9)
        trace = run_dissum(instance.z0, instance.B, instance.beta_policy, instance.schedule,
                           max_steps=20)
        f = trace.potentials
        assert f is not None
        ratios = f[2:] / f[1:-1]
        assert ratios == pytest.approx(np.full(ratios.size, 0.9))

    def test_all_ones_moves_every_coordinate(self) -> None:
        instance = lower_bound_example("all_ones", n=6)
        trace = run_dissum(instance.z0, instance.B, instance.beta_policy, instance.schedule,
                           eps=0.5, max_steps=1000)
        assert set(trace.movers[1:].tolist()) == set(range(6))

    def test_unknown_instance(self) -> None:
        with pytest.raises(InvalidInputError):
            lower_bound_example("three_coordinate")

    def test_two_coordinate_bounds(self) -> None:
        with pytest.raises(InvalidInputError):
            lower_bound_example("two_coordinate", kappa=1.0, B=0.3)
