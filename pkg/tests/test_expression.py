"""
Unit tests for the potential expression parser and evaluator.
"""
import math
import random

import numpy as np
import pytest

from src.phasequant.errors import (
    DomainViolationError,
    ExpressionSyntaxError,
    MultipleVariablesError,
    UnknownIdentifierError,
)
from src.phasequant.expression import BinOp, Call, Const, ExprAst, Neg, Var, parse, to_canonical


def random_node(rng: random.Random, depth: int, variable: str):
    """Random tree with non-negative constants (negation is always a Neg node)."""
    if depth == 0 or rng.random() < 0.25:
        return Var(variable) if rng.random() < 0.5 else Const(rng.choice([0.5, 1.0, 2.0, 3.25, 1e-5, 1e20]))
    choice = rng.randrange(4)
    if choice == 0:
        return Neg(random_node(rng, depth - 1, variable))
    if choice == 1:
        return Call(rng.choice(["exp", "log", "sqrt", "abs", "sin", "cos"]), random_node(rng, depth - 1, variable))
    return BinOp(
        rng.choice(["+", "-", "*", "/", "^"]),
        random_node(rng, depth - 1, variable),
        random_node(rng, depth - 1, variable),
    )


class TestParse:
    """Tests for parse()."""

    def test_power_of_variable(self):
        """Test that x^2 parses to pow(var, 2)."""
        ast = parse("x^2")

        assert ast.root == BinOp("^", Var("x"), Const(2.0))
        assert ast.variable == "x"

    def test_radial_variable(self):
        """Test that expressions in r record r as the variable."""
        ast = parse("-0.5/r + 0.2*r")

        assert ast.variable == "r"
        assert ast.root == BinOp(
            "+",
            BinOp("/", Neg(Const(0.5)), Var("r")),
            BinOp("*", Const(0.2), Var("r")),
        )

    def test_precedence(self):
        """Test that * binds tighter than + and ^ tighter than *."""
        assert parse("1 + 2*x^3").root == BinOp(
            "+", Const(1.0), BinOp("*", Const(2.0), BinOp("^", Var("x"), Const(3.0)))
        )

    def test_power_is_right_associative(self):
        """Test that 2^3^2 groups as 2^(3^2)."""
        ast = parse("2^3^2")

        assert ast.root == BinOp("^", Const(2.0), BinOp("^", Const(3.0), Const(2.0)))
        assert ast.evaluate(0.0) == 512.0

    def test_whitespace_is_insignificant(self):
        """Test that spacing does not change the tree."""
        assert parse("  sqrt( x ) *  2 ") == parse("sqrt(x)*2")

    def test_functions_and_pi(self):
        """Test named functions and the pi constant."""
        ast = parse("cos(pi*x) + exp(log(abs(x)))")

        assert ast.evaluate(1.0) == pytest.approx(-1.0 + 1.0)

    def test_two_variables_rejected(self):
        """Test that x + y is rejected as having two free variables."""
        with pytest.raises(MultipleVariablesError) as exc:
            parse("x + y")

        assert "x, y" in str(exc.value)

    def test_unknown_function_rejected(self):
        """Test that multi-letter unknown names are unknown identifiers."""
        with pytest.raises(UnknownIdentifierError) as exc:
            parse("tanh(x)")

        assert "tanh" in str(exc.value)

    def test_unknown_variable_rejected(self):
        """Test that single letters other than x and r are rejected."""
        with pytest.raises(UnknownIdentifierError):
            parse("2*q")

    def test_syntax_error_reports_byte_offset(self):
        """Test that syntax errors carry the byte offset of the bad token."""
        with pytest.raises(ExpressionSyntaxError) as exc:
            parse("x + * 2")

        assert exc.value.offset == 4
        assert "byte offset 4" in str(exc.value)

    def test_offset_counts_utf8_bytes(self):
        """Test that offsets are counted in bytes, not characters."""
        with pytest.raises(ExpressionSyntaxError) as exc:
            parse("é + * 2")

        assert exc.value.offset == 5
        with pytest.raises(ExpressionSyntaxError) as exc:
            parse("x + €")
        assert exc.value.offset == 4

    def test_unbalanced_parenthesis(self):
        """Test that a missing closing parenthesis is a syntax error."""
        with pytest.raises(ExpressionSyntaxError):
            parse("(x + 1")

    def test_empty_source_rejected(self):
        """Test that empty input is a syntax error."""
        with pytest.raises(ExpressionSyntaxError):
            parse("   ")

    def test_constant_expression_uses_x(self):
        """Test that an expression without a variable is a function of x."""
        ast = parse("3")

        assert ast.variable == "x"
        assert ast.evaluate(7.0) == 3.0


class TestCanonicalForm:
    """Tests for printing and re-parsing."""

    def test_canonical_round_trip(self):
        """Test that the canonical form re-parses to the same AST."""
        ast = parse("-0.5/r + 0.2*r^2 - sqrt(r)")

        assert parse(str(ast)) == ast

    def test_parse_print_parse_idempotent_on_random_trees(self):
        """Test print/parse idempotence on 1000 random trees."""
        rng = random.Random(1234)
        for _ in range(1000):
            variable = rng.choice(["x", "r"])
            root = random_node(rng, 4, variable)
            text = to_canonical(root)
            once = parse(text)
            assert once.root == root
            assert parse(str(once)) == once


class TestEvaluate:
    """Tests for scalar and vectorized evaluation."""

    def test_square(self):
        """Test eval(x^2, 2) = 4."""
        assert parse("x^2").evaluate(2.0) == 4.0

    def test_cornell_like(self):
        """Test eval(-0.5/r + 0.2*r, 1) = -0.3."""
        assert parse("-0.5/r + 0.2*r").evaluate(1.0) == pytest.approx(-0.3, abs=1e-15)

    def test_division_by_zero_is_domain_violation(self):
        """Test that 1/r at 0 raises a domain violation."""
        with pytest.raises(DomainViolationError):
            parse("1/r").evaluate(0.0)

    def test_log_and_sqrt_of_negative(self):
        """Test that log and sqrt of negatives raise domain violations."""
        with pytest.raises(DomainViolationError):
            parse("log(x)").evaluate(-1.0)
        with pytest.raises(DomainViolationError):
            parse("sqrt(x)").evaluate(-1.0)

    def test_exact_arithmetic_for_ring_operations(self):
        """Test that +, -, * agree with direct arithmetic bit for bit."""
        ast = parse("(x + 0.1) * (x - 0.3) * x + 2.5")
        for x in np.linspace(-3.0, 3.0, 101):
            x = float(x)
            assert ast.evaluate(x) == (x + 0.1) * (x - 0.3) * x + 2.5

    def test_deterministic(self):
        """Test that repeated evaluation is bit-identical."""
        ast = parse("sin(x)^2 + exp(-x)")

        assert ast.evaluate(0.37) == ast.evaluate(0.37)

    def test_evaluate_many_flags_invalid_points(self):
        """Test that vectorized evaluation flags non-finite points."""
        result = parse("1/r").evaluate_many([0.0, 1.0, 2.0])

        assert result.valid.tolist() == [False, True, True]
        assert math.isnan(result.values[0])
        assert result.values[1:].tolist() == [1.0, 0.5]

    def test_evaluate_many_matches_scalar(self):
        """Test that vectorized and scalar evaluation agree."""
        ast = parse("x^4 - 3*x^2 + cos(x)")
        xs = np.linspace(-2.0, 2.0, 41)

        values = ast.evaluate_many(xs).values

        for x, v in zip(xs, values):
            assert v == pytest.approx(ast.evaluate(float(x)), rel=1e-14, abs=1e-14)

    def test_ast_is_immutable(self):
        """Test that ASTs cannot be modified after parsing."""
        ast = parse("x")
        with pytest.raises(Exception):
            ast.variable = "r"

        assert isinstance(ast, ExprAst)
