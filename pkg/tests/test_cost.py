"""
成本函数测试
"""

import math

import pytest

from app.models.cost import CostKind, CostSpec, check_convex_cost
from app.utils.exceptions import InvalidInputError


class TestPowerFamily:
    def test_linear_cost(self) -> None:
        cost = CostSpec.linear(2.0)
        assert cost.value(3.0) == pytest.approx(6.0)
        assert cost.derivative(5.0) == 2.0
        assert cost.second_derivative(5.0) == 0.0
        assert cost.c_prime_at_zero == 2.0

    def test_power_cost(self) -> None:
        cost = CostSpec.power(2.0)
        assert cost.value(3.0) == pytest.approx(9.0)
        assert cost.derivative(3.0) == pytest.approx(9.0)
        assert cost.second_derivative(3.0) == pytest.approx(6.0)
        assert cost.c_prime_at_zero == 0.0

    def test_monomial_maps_onto_scaled_power(self) -> None:
        cost = CostSpec.monomial(2.0)
        assert cost.kind is CostKind.SCALED_POWER
        assert cost.value(3.0) == pytest.approx(9.0)
        assert cost.derivative(3.0) == pytest.approx(6.0)

    def test_monomial_rejects_concave(self) -> None:
        with pytest.raises(InvalidInputError):
            CostSpec.monomial(0.5)

    @pytest.mark.parametrize("coeff", [0.0, -1.0, math.inf])
    def test_invalid_coefficient(self, coeff: float) -> None:
        with pytest.raises(InvalidInputError):
            CostSpec.linear(coeff)

    def test_negative_exponent(self) -> None:
        with pytest.raises(InvalidInputError):
            CostSpec.power(-0.5)


class TestTransformations:
    def test_scaled(self) -> None:
        cost = CostSpec.power(1.0).scaled(2.0)
        assert cost.kind is CostKind.SCALED_POWER
        assert cost.derivative(3.0) == pytest.approx(6.0)

    def test_scaled_linear_stays_linear(self) -> None:
        assert CostSpec.linear().scaled(0.25).kind is CostKind.LINEAR

    def test_rescaled_argument(self) -> None:
        # c(2x) for c(z) = z^2/2 is 2x^2
        cost = CostSpec.power(1.0).rescaled_argument(2.0)
        assert cost.value(1.5) == pytest.approx(2 * 1.5**2)
        assert cost.derivative(1.5) == pytest.approx(6.0)

    def test_with_lipschitz(self) -> None:
        cost = CostSpec.power(1.0).with_lipschitz(0.0, 2.0)
        assert cost.lipschitz_K == pytest.approx(2.0)
        assert cost.lipschitz_interval == (0.0, 2.0)

    def test_with_lipschitz_bad_interval(self) -> None:
        with pytest.raises(InvalidInputError):
            CostSpec.linear().with_lipschitz(2.0, 1.0)


class TestInverseDerivative:
    def test_power_closed_form(self) -> None:
        assert CostSpec.power(2.0).inverse_derivative(4.0) == pytest.approx(2.0)
        assert CostSpec.power(1.0).inverse_derivative(1.0 / 16) == pytest.approx(1.0 / 16)

    def test_below_marginal_at_zero(self) -> None:
        assert CostSpec.linear().inverse_derivative(0.5) == 0.0

    def test_never_reached(self) -> None:
        assert CostSpec.linear().inverse_derivative(2.0) == math.inf

    def test_custom_by_bisection(self) -> None:
        cost = CostSpec.custom(lambda z: z**2 / 2, lambda z: z, lambda z: 1.0, name="half-square")
        assert cost.inverse_derivative(3.0) == pytest.approx(3.0, rel=1e-10)


class TestCustomValidation:
    def test_valid_custom(self) -> None:
        cost = CostSpec.custom(lambda z: z**2 / 2, lambda z: z, lambda z: 1.0)
        assert cost.c_prime_at_zero == 0.0
        check_convex_cost(cost)

    def test_decreasing_cost_rejected(self) -> None:
        with pytest.raises(InvalidInputError):
            CostSpec.custom(lambda z: -z, lambda z: -1.0, lambda z: 0.0)

    def test_inconsistent_derivative_rejected(self) -> None:
        with pytest.raises(InvalidInputError):
            CostSpec.custom(lambda z: z**2, lambda z: z, lambda z: 1.0)

    def test_missing_callbacks(self) -> None:
        with pytest.raises(InvalidInputError):
            CostSpec(kind=CostKind.CUSTOM)


class TestSerialization:
    def test_round_trip(self) -> None:
        cost = CostSpec.scaled_power(0.05, 0.2)
        assert CostSpec.from_dict(cost.to_dict()) == cost

    def test_monomial_kind(self) -> None:
        assert CostSpec.from_dict({"kind": "monomial", "p": 3.0}) == CostSpec.monomial(3.0)

    def test_unknown_kind(self) -> None:
        with pytest.raises(InvalidInputError):
            CostSpec.from_dict({"kind": "quadratic"})

    def test_custom_not_serializable(self) -> None:
        cost = CostSpec.custom(lambda z: z**2 / 2, lambda z: z, lambda z: 1.0)
        with pytest.raises(InvalidInputError):
            cost.to_dict()
