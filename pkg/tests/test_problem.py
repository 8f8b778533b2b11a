"""
Unit tests for potentials and quantization problems.
"""
import math

import numpy as np
import pytest
from pydantic import ValidationError

from src.phasequant.errors import DomainViolationError
from src.phasequant.problem import (
    Potential,
    QuantProblem,
    SpectrumEntry,
    Tolerances,
    effective_u,
    momentum_squared,
)


class TestPotential:
    """Tests for builtin and custom potentials."""

    def test_harmonic_values(self):
        """Test V = ½mω²x²."""
        potential = Potential.harmonic(2.0)

        assert potential.values([0.0, 1.0, -3.0]).tolist() == [0.0, 2.0, 18.0]

    def test_coulomb_is_half_line(self):
        """Test that the Coulomb potential lives on r > 0."""
        potential = Potential.coulomb(1.0)

        assert potential.domain == "half-line"
        assert potential.value(2.0) == -0.5
        with pytest.raises(DomainViolationError):
            potential.value(-1.0)

    def test_relativistic_cornell_value(self):
        """Test (m − α̃/r + κr)² at r = 1."""
        potential = Potential.relativistic_cornell(m=1.0, alpha_tilde=0.5, kappa=0.2)

        assert potential.value(1.0) == pytest.approx((1.0 - 0.5 + 0.2) ** 2)

    def test_relativistic_cornell_continues_through_negative_r(self):
        """Test that the punctured line evaluates at r < 0 but not at 0."""
        potential = Potential.relativistic_cornell(m=0.0, alpha_tilde=0.5, kappa=0.2)

        assert potential.value(-1.0) == pytest.approx((0.5 - 0.2) ** 2)
        with pytest.raises(DomainViolationError):
            potential.value(0.0)

    def test_missing_parameter_rejected(self):
        """Test that a builtin without its parameters is rejected."""
        with pytest.raises(ValidationError) as exc:
            Potential(kind="harmonic")

        assert "omega" in str(exc.value)

    def test_incompatible_domain_rejected(self):
        """Test that radial builtins refuse the full line."""
        with pytest.raises(ValidationError):
            Potential(kind="coulomb", e_squared=1.0, domain="full-line")

    def test_custom_expression_domain(self):
        """Test that r-expressions default to the half line, x to the full line."""
        assert Potential.custom("-1/r").domain == "half-line"
        assert Potential.custom("x^4").domain == "full-line"

    def test_custom_values_flag_singularities(self):
        """Test that non-finite custom values come back as NaN."""
        values = Potential.custom("1/x").values([0.0, 2.0])

        assert math.isnan(values[0])
        assert values[1] == 0.5

    def test_serializes_expression_as_text(self):
        """Test that custom potentials dump their canonical expression."""
        dumped = Potential.custom("x^2").model_dump()

        assert dumped["expr"] == "(x ^ 2.0)"

    def test_describe(self):
        """Test the human-readable description."""
        assert Potential.coulomb(1.0).describe() == "coulomb(e_squared=1.0)"


class TestQuantProblem:
    """Tests for QuantProblem."""

    def test_default_windows(self, harmonic, coulomb):
        """Test the domain-dependent default windows."""
        assert harmonic.window == (-50.0, 50.0)
        assert coulomb().window[0] > 0

    def test_invalid_window(self):
        """Test that reversed or infinite windows are rejected."""
        with pytest.raises(ValidationError):
            QuantProblem(potential=Potential.harmonic(1.0), window=(2.0, 1.0))
        with pytest.raises(ValidationError):
            QuantProblem(potential=Potential.harmonic(1.0), window=(-math.inf, 1.0))

    def test_half_line_window_must_be_positive(self):
        """Test that half-line windows cannot include r ≤ 0."""
        with pytest.raises(ValidationError):
            QuantProblem(potential=Potential.coulomb(1.0), window=(0.0, 10.0))

    def test_langer_term_needs_radial_domain(self):
        """Test that angular momentum is refused on the full line."""
        with pytest.raises(ValidationError):
            QuantProblem(potential=Potential.harmonic(1.0), angular=0)

    def test_effective_u(self, harmonic):
        """Test U = 2mV."""
        assert effective_u(harmonic, 2.0) == 4.0

    def test_langer_term(self, coulomb):
        """Test U = 2mV + (l+½)²ħ²/r²."""
        problem = coulomb(1)

        assert effective_u(problem, 1.0) == pytest.approx(-2.0 + 2.25)

    def test_momentum_squared_sign(self, harmonic):
        """Test that P² − U is positive inside and negative outside the well."""
        assert momentum_squared(harmonic, 0.5, 0.0) == pytest.approx(1.0)
        assert momentum_squared(harmonic, 0.5, 2.0) < 0

    def test_momentum_squared_many_matches_scalar(self, coulomb):
        """Test that array and scalar evaluation agree."""
        problem = coulomb(2)
        xs = np.linspace(0.5, 20.0, 9)

        many = problem.momentum_squared_many(-0.05, xs)

        for x, value in zip(xs, many):
            assert value == pytest.approx(momentum_squared(problem, -0.05, float(x)))

    def test_domain_violation(self, coulomb):
        """Test that U at r = 0 raises."""
        with pytest.raises(DomainViolationError):
            effective_u(coulomb(), 0.0)

    def test_problem_is_frozen(self, harmonic):
        """Test that problems are immutable."""
        with pytest.raises(ValidationError):
            harmonic.mass = 2.0


class TestModels:
    """Tests for tolerance and level models."""

    def test_tolerance_defaults(self):
        """Test default tolerances."""
        tolerances = Tolerances()

        assert tolerances.rel_tol == 1e-10
        assert tolerances.root_rel_tol == 1e-12

    def test_spectrum_entry_rejects_negative_level(self):
        """Test that levels are non-negative."""
        with pytest.raises(ValidationError):
            SpectrumEntry(n=-1, energy=0.5, phase_residual=0.0)
