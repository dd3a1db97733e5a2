import copy
import gc
import math
import weakref
from fractions import Fraction

import numpy as np
import pytest

from modules.errors import DivisionNearZero, InvalidExpression, UnboundSymbol
from modules.symbolic_core import (ONE, ZERO, AngleSum, AngleVar, CompiledExprs, Const, Cos, Neg, Param, Product,
                                   Quotient, Sin, Sum, Mat2Sym, Vec2Sym, angle, evaluate, free_symbols, node_count, rot,
                                   simplify, steer, to_text, topological_order, transpose_rot, yaw)


def test_angle_sum_is_canonical():
    first = yaw(1) + steer(1, 2) - yaw(1)
    assert first == steer(1, 2).as_sum()
    assert AngleSum.of({steer(1, 1): 1, yaw(2): 2}) == AngleSum.of([(yaw(2), 2), (steer(1, 1), 1)])
    assert (yaw(1) - yaw(1)).is_zero
    assert AngleSum.of((), 5).quarter_turns == 1


def test_angle_sum_rejects_unsorted_terms():
    with pytest.raises(ValueError):
        AngleSum(((steer(1, 1), 1), (yaw(1), 1)), 0)
    with pytest.raises(ValueError):
        AngleSum(((yaw(1), 0),), 0)


def test_angle_var_names():
    assert yaw(3).name == 'psi_3'
    assert steer(2, 1).name == 'theta_2_1'
    assert AngleVar.from_name('theta_4_2') == steer(4, 2)
    with pytest.raises(ValueError):
        AngleVar.from_name('phi_1')


def test_interning_makes_equal_expressions_identical():
    first = Sum(Param('a_1_2'), Sin(yaw(1)))
    second = Sum(Sin(yaw(1)), Param('a_1_2'))
    assert first is second
    assert Const(Fraction(2, 4)) is Const(Fraction(1, 2))
    assert copy.deepcopy(first) is first


def test_nodes_are_immutable():
    node = Param('a_1_2')
    with pytest.raises(AttributeError):
        node.name = 'b_1_2'


def test_constant_folding():
    assert Sum(Const(1), Const(2)) is Const(3)
    assert Product(Const(2), Const(3)) is Const(6)
    assert Quotient(Const(1), Const(4)) is Const(Fraction(1, 4))
    assert Neg(Neg(Param('a'))) is Param('a')


def test_zero_constant_denominator_is_rejected():
    with pytest.raises(InvalidExpression):
        Quotient(Param('a'), ZERO)


def test_simplify_collects_like_terms():
    a = Param('a')
    assert simplify(Sum(a, a, Neg(a))) is a
    assert simplify(Sum(a, Neg(a))) is ZERO
    assert simplify(Product(Const(2), a, ZERO)) is ZERO
    assert simplify(Sum(Product(Const(2), a), a)) is simplify(Product(Const(3), a))


def test_simplify_cancels_common_factors():
    a, b = Param('a'), Param('b')
    assert simplify(Quotient(Product(a, b), b)) is a
    assert simplify(Quotient(a, a)) is ONE


def test_simplify_rejects_zero_denominator():
    a = Param('a')
    with pytest.raises(InvalidExpression):
        simplify(Quotient(ONE, Sum(a, Neg(a))))


def test_quarter_turn_rewrites():
    psi = yaw(1)
    assert simplify(Sin(psi.as_sum().shift(1))) is Cos(psi)
    assert simplify(Cos(psi.as_sum().shift(1))) is simplify(Neg(Sin(psi)))
    assert simplify(Sin(psi.as_sum().shift(2))) is simplify(Neg(Sin(psi)))
    assert simplify(Cos(psi.as_sum().shift(3))) is Sin(psi)


def test_odd_even_rewrites():
    assert simplify(Sin(-yaw(1))) is simplify(Neg(Sin(yaw(1))))
    assert simplify(Cos(-yaw(1))) is Cos(yaw(1))
    assert simplify(Sin(AngleSum())) is ZERO
    assert simplify(Cos(AngleSum())) is ONE


def test_simplify_is_value_preserving():
    expr = Quotient(Sum(Sin(yaw(1) - steer(1, 2)), Product(Const(3), Param('a'))),
                    Sum(Cos(steer(1, 2).as_sum().shift(1)), Const(2)))
    bindings = {yaw(1): 0.3, steer(1, 2): -0.7}
    params = {'a': 1.25}
    assert evaluate(simplify(expr), bindings, params) == pytest.approx(evaluate(expr, bindings, params), rel=1e-14)


def test_evaluate_accepts_names_and_reports_missing_symbols():
    expr = Product(Param('a'), Cos(yaw(1)))
    assert evaluate(expr, {'psi_1': 0.0}, {'a': 2.0}) == pytest.approx(2.0)
    with pytest.raises(UnboundSymbol):
        evaluate(expr, {}, {'a': 2.0})
    with pytest.raises(UnboundSymbol):
        evaluate(expr, {'psi_1': 0.0}, {})


def test_evaluate_guards_small_denominators():
    expr = Quotient(ONE, Sin(yaw(1)))
    with pytest.raises(DivisionNearZero):
        evaluate(expr, {yaw(1): 0.0})


def test_compiled_expressions_match_the_interpreter():
    roots = [Quotient(Sin(steer(1, 2) - steer(1, 1)), Product(Param('a_1_2'), Cos(steer(1, 2)))),
             Cos(yaw(1) + steer(1, 1))]
    variables = [yaw(1), steer(1, 1), steer(1, 2)]
    compiled = CompiledExprs(roots, variables, ['a_1_2'])
    angles = [0.4, 0.1, 0.25]
    bindings = dict(zip(variables, angles))
    values = compiled(angles, {'a_1_2': 3.0})
    for root, value in zip(roots, values):
        assert value == pytest.approx(evaluate(root, bindings, {'a_1_2': 3.0}), rel=1e-14)


def test_compiled_guard_and_unknown_symbols():
    compiled = CompiledExprs([Quotient(ONE, Cos(steer(1, 2)))], [steer(1, 2)], [])
    with pytest.raises(DivisionNearZero):
        compiled([math.pi / 2], {})
    with pytest.raises(UnboundSymbol):
        CompiledExprs([Sin(yaw(2))], [yaw(1)], [])
    with pytest.raises(UnboundSymbol):
        CompiledExprs([Param('a')], [], ['a'])([], {})


def test_topological_order_shares_nodes():
    shared = Sin(yaw(1))
    roots = [Sum(shared, Param('a')), Product(shared, Param('b'))]
    order = topological_order(roots)
    assert order.count(shared) == 1
    assert order.index(shared) < order.index(roots[0])
    assert node_count(roots) == 5


def test_free_symbols():
    expr = Quotient(Param('a_1_2'), Cos(yaw(1) - steer(2, 1)))
    angles, params = free_symbols(expr)
    assert angles == {yaw(1), steer(2, 1)}
    assert params == {'a_1_2'}


def test_to_text():
    expr = Quotient(Sin(steer(1, 2) - steer(1, 1)), Param('a_1_2'))
    assert to_text(expr) == 'sin(-theta_1_1 + theta_1_2)/a_1_2'
    assert to_text(Neg(Param('a'))) == '-a'


def test_rotation_composition_adds_angles():
    first, second = rot(yaw(1)), rot(steer(1, 2))
    assert (first @ second).angle == yaw(1) + steer(1, 2)
    assert transpose_rot(yaw(1)).angle == -yaw(1).as_sum()
    assert first.transpose().angle == transpose_rot(yaw(1)).angle


def test_rotation_of_quarter_turn():
    vector = rot(angle(quarter_turns=1)) @ Vec2Sym(ONE, ZERO)
    assert vector.x is ZERO
    assert vector.y is ONE


def test_rotation_applied_to_vector_evaluates_like_numpy():
    vector = rot(yaw(1)) @ Vec2Sym(Param('a'), Param('b'))
    bindings, params = {yaw(1): 0.6}, {'a': 2.0, 'b': -1.0}
    expected = (2.0 * math.cos(0.6) + math.sin(0.6), 2.0 * math.sin(0.6) - math.cos(0.6))
    assert evaluate(vector.x, bindings, params) == pytest.approx(expected[0])
    assert evaluate(vector.y, bindings, params) == pytest.approx(expected[1])


def rotation(value: float) -> np.ndarray:
    return np.array([[math.cos(value), -math.sin(value)], [math.sin(value), math.cos(value)]])


def evaluate_matrix(matrix: Mat2Sym, bindings) -> np.ndarray:
    return np.array([[evaluate(entry, bindings) for entry in row] for row in matrix.entries])


def test_relative_rotation_evaluates_to_angle_difference():
    product = transpose_rot(yaw(1) + steer(1, 2)) @ rot(yaw(1) + steer(1, 1))
    assert product.angle == steer(1, 1) - steer(1, 2)
    rng = np.random.default_rng(3)
    for psi, theta_1, theta_2 in rng.uniform(-math.pi, math.pi, size=(100, 3)):
        bindings = {yaw(1): psi, steer(1, 1): theta_1, steer(1, 2): theta_2}
        assert np.allclose(evaluate_matrix(product, bindings), rotation(theta_1 - theta_2), atol=1e-12)


def test_matrix_product_without_known_angles():
    left = Mat2Sym(transpose_rot(yaw(1) + steer(1, 2)).entries)
    right = Mat2Sym(rot(yaw(2)).entries)
    product = left @ right
    assert product.angle is None
    rng = np.random.default_rng(5)
    for psi_1, psi_2, theta in rng.uniform(-math.pi, math.pi, size=(20, 3)):
        bindings = {yaw(1): psi_1, yaw(2): psi_2, steer(1, 2): theta}
        assert np.allclose(evaluate_matrix(product, bindings), rotation(psi_2 - psi_1 - theta), atol=1e-12)


FUZZ_ANGLES = (yaw(1), yaw(2), steer(1, 1), steer(1, 2))
FUZZ_PARAMS = {'a': 1.5, 'b': -0.75, 'c': 3.0}


def random_angle(rng) -> AngleSum:
    count = int(rng.integers(1, len(FUZZ_ANGLES) + 1))
    chosen = rng.choice(len(FUZZ_ANGLES), size=count, replace=False)
    coefficients = rng.choice([-2, -1, 1, 2], size=count)
    return AngleSum.of([(FUZZ_ANGLES[i], int(k)) for i, k in zip(chosen, coefficients)], int(rng.integers(0, 4)))


def random_expression(rng, depth: int):
    if depth == 0 or rng.random() < 0.25:
        kind = int(rng.integers(0, 4))
        if kind == 0:
            return Const(Fraction(int(rng.integers(-4, 5)), int(rng.integers(1, 4))))
        if kind == 1:
            return Param(str(rng.choice(sorted(FUZZ_PARAMS))))
        return (Sin if kind == 2 else Cos)(random_angle(rng))
    kind = int(rng.integers(0, 4))
    if kind == 0:
        return Sum(*(random_expression(rng, depth - 1) for _ in range(int(rng.integers(2, 4)))))
    if kind == 1:
        return Product(random_expression(rng, depth - 1), random_expression(rng, depth - 1))
    if kind == 2:
        return Neg(random_expression(rng, depth - 1))
    return Quotient(random_expression(rng, depth - 1), Sum(Const(3), Sin(random_angle(rng))))


def test_simplify_preserves_values_of_random_expressions():
    rng = np.random.default_rng(11)
    points = [dict(zip(FUZZ_ANGLES, values)) for values in rng.uniform(-math.pi, math.pi, size=(10, 4))]
    for _ in range(1000):
        expr = random_expression(rng, 4)
        simplified = simplify(expr)
        assert simplify(simplified) is simplified
        for bindings in points:
            expected = evaluate(expr, bindings, FUZZ_PARAMS)
            assert evaluate(simplified, bindings, FUZZ_PARAMS) == pytest.approx(expected, rel=1e-9, abs=1e-9)


def test_unreferenced_nodes_are_released():
    node = Sum(Param('released_a'), Param('released_b'))
    shared = Sum(Param('released_b'), Param('released_a')) is node
    assert shared
    reference = weakref.ref(node)
    del node
    gc.collect()
    assert reference() is None
