"""
Tests for the relativistic Cornell spectrum and its contour identity.
"""
import math

import numpy as np
import pytest
from pydantic import ValidationError

from src.phasequant.cornell import (
    CornellLevel,
    CornellParams,
    alpha_tilde_from_alpha_s,
    contour_identity_residual,
    contour_terms,
    cornell_cut_sum,
    cornell_p_squared,
    cornell_problem,
    cornell_quantize_numeric,
    cornell_quartic,
    cornell_spectrum_closed_form,
    cornell_threshold,
    identity_sample,
    identity_sweep,
    random_params,
    regge_table,
)
from src.phasequant.errors import DomainViolationError, NoCutsError
from src.phasequant.quantizer import quantize_mtp


class TestCornellParams:
    """Tests for parameters and couplings."""

    def test_alpha_tilde_from_alpha_s(self):
        """Test α̃ = 4α_s/3."""
        assert alpha_tilde_from_alpha_s(0.375) == pytest.approx(0.5)
        assert CornellParams.from_alpha_s(0.375, kappa=0.2).alpha_tilde == pytest.approx(0.5)

    def test_lambda(self, cornell_params):
        """Test Λ = √((l+½)² + α̃²)."""
        assert cornell_params.Lambda == pytest.approx(math.sqrt(0.5))
        assert cornell_params.with_l(1).Lambda == pytest.approx(math.sqrt(2.25 + 0.25))

    def test_string_tension_must_be_positive(self):
        """Test that κ ≤ 0 is rejected."""
        with pytest.raises(ValidationError):
            CornellParams(alpha_tilde=0.5, kappa=0.0)

    def test_level_needs_positive_energy(self):
        """Test that CornellLevel rejects E² ≤ 0 and derives E."""
        assert CornellLevel(n_r=0, E_squared=4.0).E == 2.0
        with pytest.raises(ValidationError):
            CornellLevel(n_r=0, E_squared=-1.0)


class TestMomentum:
    """Tests for p² and its quartic."""

    def test_p_squared_value(self, cornell_params):
        """Test p²(r=1) at E = 2: 1 − 0.09 − 0.25 = 0.66."""
        assert cornell_p_squared(cornell_params, 2.0, 1.0) == pytest.approx(0.66, abs=1e-12)

    def test_p_squared_needs_positive_r(self, cornell_params):
        """Test that r ≤ 0 is a domain violation."""
        with pytest.raises(DomainViolationError):
            cornell_p_squared(cornell_params, 2.0, 0.0)

    def test_quartic_matches_p_squared(self):
        """Test r²p² against the quartic coefficients for a massive quark."""
        params = CornellParams(m=0.4, alpha_tilde=0.3, kappa=0.25, l=2)
        coeffs = cornell_quartic(params, 3.0)

        for r in (0.2, 1.0, 3.5):
            assert np.polyval(coeffs, r) == pytest.approx(r * r * cornell_p_squared(params, 3.0, r), rel=1e-10)

    def test_quartic_coefficients(self, cornell_params):
        """Test the massless coefficients at E = 2."""
        assert cornell_quartic(cornell_params, 2.0) == pytest.approx((-0.04, 0.0, 1.2, 0.0, -0.5))


class TestClosedForm:
    """Tests for the closed-form spectrum."""

    def test_ground_state(self, cornell_params):
        """Test E² = 1.6·(1 + √0.5 − 0.5) for κ = 0.2, α̃ = 0.5."""
        level = cornell_spectrum_closed_form(cornell_params, 0)

        assert level.E_squared == pytest.approx(1.93137085, rel=1e-8)
        assert level.E == pytest.approx(math.sqrt(1.93137085), rel=1e-8)

    def test_linear_in_radial_number(self, cornell_params):
        """Test that E² steps by 16κ in n_r."""
        levels = [cornell_spectrum_closed_form(cornell_params, n).E_squared for n in range(4)]

        assert np.diff(levels) == pytest.approx([3.2, 3.2, 3.2])

    def test_negative_level_rejected(self, cornell_params):
        """Test that n_r < 0 is refused."""
        with pytest.raises(ValueError):
            cornell_spectrum_closed_form(cornell_params, -1)


class TestCutSum:
    """Tests for the real-cut sum."""

    def test_massless_value(self, cornell_params):
        """Test the cut sum at E = 2: π(2.5 + 0.5 − √0.5) ≈ 7.20332."""
        cut_sum = cornell_cut_sum(cornell_params, 2.0)

        assert cut_sum.total == pytest.approx(7.20332, rel=1e-5)
        assert cut_sum.total == pytest.approx(math.pi * (2.5 + 0.5 - math.sqrt(0.5)), rel=1e-9)

    def test_massless_cuts_are_mirrored(self, cornell_params):
        """Test that m = 0 gives equal cuts at r > 0 and r < 0."""
        cut_sum = cornell_cut_sum(cornell_params, 2.0)

        assert len(cut_sum.positive) == 1
        assert len(cut_sum.negative) == 1
        assert cut_sum.complex_pairs == ()
        assert cut_sum.positive[0] == pytest.approx(cut_sum.negative[0], rel=1e-9)

    def test_massive_has_mirror_cut(self):
        """Test that a massive quark still has a real cut at r < 0 above the threshold."""
        params = CornellParams(m=1.0, alpha_tilde=0.5, kappa=0.2, l=0)
        E = 1.2 * cornell_threshold(params)

        cut_sum = cornell_cut_sum(params, E)

        assert len(cut_sum.positive) == 1
        assert len(cut_sum.negative) == 1
        assert cut_sum.positive[0] != pytest.approx(cut_sum.negative[0], rel=1e-3)

    def test_below_threshold(self, cornell_params):
        """Test that no cut exists below the threshold."""
        with pytest.raises(NoCutsError):
            cornell_cut_sum(cornell_params, 0.9 * cornell_threshold(cornell_params))

    def test_just_above_threshold(self, cornell_params):
        """Test that a single positive cut opens above the threshold."""
        cut_sum = cornell_cut_sum(cornell_params, 1.01 * cornell_threshold(cornell_params))

        assert len(cut_sum.positive) == 1

    def test_massive_below_positive_threshold(self, cornell_params):
        """Test that the r > 0 side is carried by its conjugate pair below its threshold."""
        params = cornell_params.model_copy(update={"m": 0.5, "l": 2})
        E = 0.95 * cornell_threshold(params)

        cut_sum = cornell_cut_sum(params, E)

        assert cut_sum.positive == ()
        assert len(cut_sum.negative) == 1
        assert cut_sum.positive_terms == 1
        assert contour_identity_residual(params, E) <= 1e-6

    def test_thresholds_by_side(self, cornell_params):
        """Test that m = 0 has mirrored thresholds and a massive quark opens r < 0 first."""
        massive = cornell_params.model_copy(update={"m": 0.5, "l": 1})

        assert cornell_threshold(cornell_params, -1) == pytest.approx(cornell_threshold(cornell_params), rel=1e-10)
        assert cornell_threshold(massive, -1) < cornell_threshold(massive)
        with pytest.raises(ValueError):
            cornell_threshold(massive, 0)


class TestContourIdentity:
    """Tests for the contour identity."""

    @pytest.mark.parametrize("m,alpha_tilde,kappa,l,E", [
        (0.0, 0.5, 0.2, 0, 2.0),
        (0.0, 0.3, 0.4, 2, 4.0),
        (0.5, 0.5, 0.2, 0, 3.0),
        (1.0, 0.8, 0.3, 1, 4.5),
    ])
    def test_residual_is_small(self, m, alpha_tilde, kappa, l, E):
        """Test |cut sum − π(E²/8κ + α̃ − Λ)| ≤ 1e−6."""
        params = CornellParams(m=m, alpha_tilde=alpha_tilde, kappa=kappa, l=l)

        assert contour_identity_residual(params, E) <= 1e-6

    def test_contour_terms(self, cornell_params):
        """Test I₀ = −2πΛ, I∞ = 2π(E²/8κ + α̃) and twice the cut sum."""
        terms = contour_terms(cornell_params, 2.0)

        assert terms.I_0 == pytest.approx(-2 * math.pi * math.sqrt(0.5))
        assert terms.I_infinity == pytest.approx(2 * math.pi * 3.0)
        assert terms.contour == pytest.approx(terms.analytic, rel=1e-9)
        assert terms.residual < 1e-8

    def test_identity_sample(self, cornell_params):
        """Test the default sample energy and tolerance."""
        sample = identity_sample(cornell_params)

        assert sample.energy == pytest.approx(1.2 * cornell_threshold(cornell_params))
        assert sample.residual <= sample.tolerance

    def test_sweep_is_seeded(self):
        """Test that the same seed gives the same parameters and residuals."""
        first = identity_sweep(5, seed=42)
        second = identity_sweep(5, seed=42, workers=2)

        assert [s.params for s in first] == [s.params for s in second]
        assert [s.residual for s in first] == [s.residual for s in second]
        assert all(s.residual <= s.tolerance for s in first)

    def test_random_params_ranges(self):
        """Test the sweep parameter ranges."""
        rng = np.random.default_rng(7)

        for _ in range(50):
            params = random_params(rng)
            assert 0.0 <= params.m <= 1.0
            assert 0.0 <= params.alpha_tilde <= 1.0
            assert 0.1 <= params.kappa <= 0.5
            assert params.l in (0, 1, 2, 3)


class TestNumericQuantization:
    """Tests for cornell_quantize_numeric()."""

    @pytest.mark.parametrize("l", [0, 1, 2, 3, 4])
    @pytest.mark.parametrize("n_r", [0, 1, 2, 3, 4, 5])
    def test_matches_closed_form_massless(self, cornell_params, n_r, l):
        """Test that the root of the cut-sum condition reproduces the closed form."""
        params = cornell_params.with_l(l)

        numeric = cornell_quantize_numeric(params, n_r)
        closed = cornell_spectrum_closed_form(params, n_r)

        assert numeric.E_squared == pytest.approx(closed.E_squared, rel=1e-6)
        assert numeric.l == l

    @pytest.mark.parametrize("l", [0, 1, 2, 3, 4])
    @pytest.mark.parametrize("n_r", [0, 1, 2, 3, 4, 5])
    def test_matches_closed_form_massive(self, cornell_params, n_r, l):
        """Test a quark of mass ½, including levels below the r > 0 threshold."""
        params = cornell_params.model_copy(update={"m": 0.5, "l": l})

        numeric = cornell_quantize_numeric(params, n_r)

        assert numeric.E_squared == pytest.approx(cornell_spectrum_closed_form(params, n_r).E_squared, rel=1e-6)

    def test_four_turning_point_rule(self, cornell_params):
        """Test that μ = 4 on the punctured line with E² = 4ε gives the ground state."""
        entry = quantize_mtp(cornell_problem(cornell_params), 0, 4)

        assert 4.0 * entry.energy == pytest.approx(1.93137085, rel=1e-7)

    def test_problem_setup(self, cornell_params):
        """Test the quantization problem used by the four-turning-point rule."""
        problem = cornell_problem(cornell_params)

        assert problem.mass == 0.5
        assert problem.domain == "punctured-line"
        assert problem.angular == 0


class TestReggeTable:
    """Tests for regge_table()."""

    def test_grid_and_columns(self, cornell_params):
        """Test rows over the (n_r, l) grid with the optional shift."""
        rows = regge_table(cornell_params, n_r_max=2, l_max=1, shift_c=0.5)

        assert len(rows) == 6
        assert [(row.l, row.n_r) for row in rows[:3]] == [(0, 0), (0, 1), (0, 2)]
        assert rows[0].M_squared == pytest.approx(rows[0].E_squared - 0.25)
        assert rows[4].linear_rescaled == pytest.approx(8 * 0.2 * (2 + 1 + 1.5))
        assert rows[0].interference == pytest.approx(-0.8)

    def test_without_shift(self, cornell_params):
        """Test that M² is omitted without a shift."""
        assert regge_table(cornell_params, 0, 0)[0].M_squared is None
