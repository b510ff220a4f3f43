"""Expression DSL: worked jets, finite-difference oracle, serialization."""

import json

import numpy as np
import pytest

from tancat.errors import DomainError
from tancat.expr import (Expr, ExprBuilder, build, compose, constant_map,
                         identity, input_permutation, pair, parallel,
                         reindex_inputs, select, tangent_lift)
from tancat.randexpr import random_expr
from tancat.tower import Tower, split_top


def tower(order, *coeffs):
    return Tower(order, np.array(coeffs, dtype=float))


SQUARE = build(1, lambda xs: [xs[0] * xs[0]])
CUBE = build(1, lambda xs: [xs[0] ** 3])


def test_square_order1_worked_example():
    out, = SQUARE.evaluate([tower(1, 3.0, 1.0)])
    assert np.allclose(out.coeffs, [9.0, 6.0])


def test_square_order2_worked_example():
    out, = SQUARE.evaluate([tower(2, 2.0, 1.0, 1.0, 0.0)])
    assert np.allclose(out.coeffs, [4.0, 4.0, 4.0, 2.0])


def test_cube_order2_worked_example():
    out, = CUBE.evaluate([tower(2, 1.0, 1.0, 1.0, 0.0)])
    assert np.allclose(out.coeffs, [1.0, 3.0, 3.0, 6.0])


def test_call_evaluates_batches_at_order_zero():
    pts = np.array([[1.0, 2.0, 3.0]])
    assert np.allclose(SQUARE(pts), [[1.0, 4.0, 9.0]])


def test_shared_subterm_evaluated_once():
    b = ExprBuilder(1)
    x, = b.inputs()
    s = x * x
    e = b.finish([s + s, s])
    assert len(e.nodes) <= 4  # input, mul, add; const-free
    out = e.evaluate([tower(1, 2.0, 1.0)])
    assert np.allclose(out[0].coeffs, [8.0, 8.0])
    assert np.allclose(out[1].coeffs, [4.0, 4.0])


def test_validation_rejects_malformed_graphs():
    from tancat.expr import Node
    with pytest.raises(ValueError):
        Expr([Node("mystery")], 0, [0])
    with pytest.raises(ValueError):
        Expr([Node("add", (0, 1))], 0, [0])  # args not earlier
    with pytest.raises(ValueError):
        Expr([Node("input", index=3)], 2, [0])
    with pytest.raises(ValueError):
        Expr([Node("const", value=1.0)], 0, [4])


def test_domain_error_carries_node_id():
    e = build(1, lambda xs: [__import__("tancat.expr", fromlist=["log"]).log(xs[0])])
    with pytest.raises(DomainError) as err:
        e.evaluate([tower(0, -2.0)])
    assert "node" in str(err.value) and "log" in str(err.value)


def test_finite_difference_oracle_10k_random_dags():
    # order-1 jets against central differences, h = 1e-4
    rng = np.random.default_rng(2024)
    h = 1e-4
    worst = 0.0
    for _ in range(10_000):
        n_in = int(rng.integers(1, 4))
        n_out = int(rng.integers(1, 4))
        e = random_expr(rng, n_in, n_out, depth=int(rng.integers(1, 7)))
        x = rng.uniform(-1.5, 1.5, size=n_in)
        u = rng.uniform(-1.0, 1.0, size=n_in)
        ins = []
        for i in range(n_in):
            c = np.zeros((2, 3))
            c[0] = (x[i], x[i] + h * u[i], x[i] - h * u[i])
            c[1] = u[i]
            ins.append(Tower(1, c))
        outs = e.evaluate(ins)
        for t in outs:
            jet = t.coeffs[1, 0]
            fd = (t.coeffs[0, 1] - t.coeffs[0, 2]) / (2.0 * h)
            worst = max(worst, abs(jet - fd) / (1.0 + abs(jet)))
    assert worst <= 1e-5, f"worst relative FD mismatch {worst:.3e}"


def test_block_functoriality_of_evaluation():
    # dropping the outermost generator commutes with evaluation
    rng = np.random.default_rng(7)
    for _ in range(50):
        n_in = int(rng.integers(1, 4))
        e = random_expr(rng, n_in, 2, depth=4)
        order = int(rng.integers(1, 5))
        ins = [Tower(order, rng.uniform(-0.8, 0.8, size=1 << order))
               for _ in range(n_in)]
        hi = e.evaluate(ins)
        lo = e.evaluate([split_top(t)[0] for t in ins])
        for a, b in zip(hi, lo):
            got = split_top(a)[0].coeffs
            scale = 1.0 + np.max(np.abs(b.coeffs))
            assert np.max(np.abs(got - b.coeffs)) <= 1e-12 * scale


def test_base_block_matches_order_zero_evaluation():
    rng = np.random.default_rng(8)
    for _ in range(25):
        e = random_expr(rng, 2, 2, depth=5)
        ins = [Tower(3, rng.uniform(-0.8, 0.8, size=8)) for _ in range(2)]
        hi = e.evaluate(ins)
        lo = e.evaluate([Tower.constant(t.coeffs[0]) for t in ins])
        for a, b in zip(hi, lo):
            assert np.allclose(a.coeffs[0], b.coeffs[0], atol=1e-14)


def test_json_roundtrip_is_byte_stable():
    rng = np.random.default_rng(9)
    e = random_expr(rng, 2, 2, depth=5)
    text = json.dumps(e.to_json_dict(), sort_keys=True)
    again = Expr.from_json_dict(json.loads(text))
    assert json.dumps(again.to_json_dict(), sort_keys=True) == text
    x = [tower(1, 0.3, 1.0), tower(1, -0.2, 0.5)]
    for a, b in zip(e.evaluate(x), again.evaluate(x)):
        assert np.all(a.coeffs == b.coeffs)


def test_json_rejects_malformed_input():
    with pytest.raises(ValueError):
        Expr.from_json_dict({"nodes": [{"op": "add"}]})


def test_compose_pair_parallel_select():
    add = build(2, lambda xs: [xs[0] + xs[1]])
    double_both = build(2, lambda xs: [2.0 * xs[0], 2.0 * xs[1]])
    comp = compose(add, double_both)
    assert np.allclose(comp(np.array([[1.0], [2.0]])), [[6.0]])

    both = pair(add, build(2, lambda xs: [xs[0] * xs[1]]))
    assert np.allclose(both(np.array([[2.0], [3.0]])), [[5.0], [6.0]])

    side = parallel(SQUARE, CUBE)
    assert np.allclose(side(np.array([[2.0], [3.0]])), [[4.0], [27.0]])

    sel = select(both, [1])
    assert np.allclose(sel(np.array([[2.0], [3.0]])), [[6.0]])

    perm = input_permutation([2, 0, 1])
    assert np.allclose(perm(np.array([[1.0], [2.0], [3.0]])),
                       [[3.0], [1.0], [2.0]])

    re = reindex_inputs(SQUARE, [1], 3)
    assert np.allclose(re(np.array([[9.0], [2.0], [9.0]])), [[4.0]])

    cm = constant_map([1.5, -2.0])
    assert np.allclose(cm(np.empty((0, 2))), [[1.5, 1.5], [-2.0, -2.0]])

    assert np.allclose(identity(2)(np.array([[1.0], [2.0]])),
                       [[1.0], [2.0]])


def test_tangent_lift_agrees_with_tower_jets():
    # two independent routes to the first tangent: the source transform
    # evaluated at order 0 and the original program at order 1
    rng = np.random.default_rng(10)
    for _ in range(30):
        n_in = int(rng.integers(1, 4))
        e = random_expr(rng, n_in, 2, depth=4)
        lifted = tangent_lift(e)
        x = rng.uniform(-1.2, 1.2, size=n_in)
        u = rng.uniform(-1.0, 1.0, size=n_in)
        flat = lifted(np.concatenate([x, u])[:, None])[:, 0]
        jets = e.evaluate([tower(1, x[i], u[i]) for i in range(n_in)])
        for k, t in enumerate(jets):
            assert abs(flat[k] - t.coeffs[0]) <= 1e-12 * (1 + abs(t.coeffs[0]))
            assert abs(flat[2 + k] - t.coeffs[1]) <= 1e-10 * (1 + abs(t.coeffs[1]))


def test_double_tangent_lift_matches_order2_towers():
    rng = np.random.default_rng(11)
    e = random_expr(rng, 2, 1, depth=4)
    second = tangent_lift(tangent_lift(e))
    x = rng.uniform(-1.0, 1.0, size=2)
    u1 = rng.uniform(-1.0, 1.0, size=2)
    u2 = rng.uniform(-1.0, 1.0, size=2)
    u12 = rng.uniform(-1.0, 1.0, size=2)
    # layout of the doubled transform: (x, u1) values then (x, u1) dots
    flat_in = np.concatenate([x, u1, u2, u12])[:, None]
    flat = second(flat_in)[:, 0]
    jet, = e.evaluate([Tower(2, [x[i], u1[i], u2[i], u12[i]])
                       for i in range(2)])
    assert np.allclose(flat, jet.coeffs, atol=1e-11)
