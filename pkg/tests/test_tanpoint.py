"""Block-level transformations on tangent points, against hand-worked values."""

import numpy as np
import pytest

from tancat import tanpoint as tp
from tancat.domain import SmoothMap, box_domain, product_domain
from tancat.errors import FiberMismatchError, StructureError
from tancat.expr import build
from tancat.tanpoint import TanPoint, residual


def pt(order, *cols):
    # dim-1 point from per-block scalars
    return TanPoint(order, np.asarray(cols, dtype=float).reshape(-1, 1))


def cols(p):
    return [float(v) for v in p.blocks[:, 0]]


class TestBasics:
    def test_shapes_and_base(self):
        p = TanPoint(2, np.arange(8.0).reshape(4, 2))
        assert p.dim == 2 and p.order == 2 and p.batch_shape == ()
        assert np.array_equal(p.base, [0.0, 1.0])
        assert np.array_equal(p.block([1, 2]), [6.0, 7.0])
        assert np.array_equal(p.block(2), [4.0, 5.0])

    def test_tower_roundtrip(self):
        p = TanPoint(1, np.array([[1.0, 2.0], [3.0, 4.0]]))
        back = TanPoint.from_towers(p.to_towers())
        assert np.array_equal(back.blocks, p.blocks)

    def test_block_count_checked(self):
        with pytest.raises(ValueError):
            TanPoint(2, np.zeros((3, 1)))

    def test_residual_scales(self):
        assert residual(np.array([1.0]), np.array([1.0])) == 0.0
        # relative for large magnitudes, absolute near zero
        assert residual(np.array([1e8]), np.array([1e8 + 1.0])) < 1e-7
        assert residual(np.array([0.0]), np.array([1e-12])) <= 1e-12


class TestProjections:
    def test_outer_projection_drops_new_level(self):
        p = pt(2, 1, 2, 3, 4)
        assert cols(tp.project(p)) == [1, 2]

    def test_inner_projection_is_tangent_of_projection(self):
        p = pt(2, 1, 2, 3, 4)
        assert cols(tp.project(p, level=1)) == [1, 3]

    def test_zero_lift(self):
        p = pt(1, 5, 2)
        assert cols(tp.zero_lift(p)) == [5, 2, 0, 0]
        assert cols(tp.zero_lift(TanPoint.from_base(np.array([5.0])), 2)) == \
            [5, 0, 0, 0]


class TestFiberArithmetic:
    def test_add_sub_top_level(self):
        p, q = pt(2, 1, 2, 3, 4), pt(2, 1, 2, 1, 1)
        assert cols(tp.add_fiber(p, q)) == [1, 2, 4, 5]
        assert cols(tp.sub_fiber(p, q)) == [1, 2, 2, 3]

    def test_add_inner_level(self):
        p, q = pt(2, 1, 2, 3, 4), pt(2, 1, 5, 3, 7)
        assert cols(tp.add_fiber(p, q, level=1)) == [1, 7, 3, 11]

    def test_mismatched_bases_refused(self):
        with pytest.raises(FiberMismatchError):
            tp.add_fiber(pt(1, 1, 2), pt(1, 1.5, 2))

    def test_scale_level(self):
        assert cols(tp.scale_level(pt(1, 1, 3), 2.0)) == [1, 6]
        assert cols(tp.scale_level(pt(1, 1, 3), 0.0)) == [1, 0]
        p = pt(2, 1, 2, 3, 4)
        assert cols(tp.scale_level(p, 10.0, 1)) == [1, 20, 3, 40]
        assert cols(tp.scale_level(p, 10.0, 2)) == [1, 2, 30, 40]

    def test_scale_batch_factor(self):
        p = TanPoint(1, np.array([[[1.0, 1.0]], [[3.0, 5.0]]]))  # batch of 2
        out = tp.scale_level(p, np.array([2.0, -1.0]), 1)
        assert np.array_equal(out.blocks[1, 0], [6.0, -5.0])


class TestSwapAndLift:
    def test_swap_levels(self):
        assert cols(tp.swap_levels(pt(2, 1, 2, 3, 4), 1)) == [1, 3, 2, 4]
        p = pt(3, *range(8))
        # swapping levels 2,3 exchanges the {2} and {3} blocks and the
        # {1,2} and {1,3} blocks
        assert cols(tp.swap_levels(p, 2)) == [0, 1, 4, 5, 2, 3, 6, 7]

    def test_vertical_lift(self):
        assert cols(tp.vertical_lift(pt(1, 5, 2))) == [5, 0, 0, 2]

    def test_vertical_lift_outer_vs_inner(self):
        p = pt(2, 1, 2, 3, 4)
        # doubling the outer level sends {2} to {3} content-wise
        assert cols(tp.vertical_lift(p, 2)) == [1, 2, 0, 0, 0, 0, 3, 4]
        # doubling the inner level re-bases level 1 at level pair (1,2)
        assert cols(tp.vertical_lift(p, 1)) == [1, 0, 0, 2, 3, 0, 0, 4]

    def test_vertical_lift_pair(self):
        xi = tp.vertical_lift_pair(pt(1, 5, 2), pt(1, 5, 3))
        assert cols(xi) == [5, 2, 0, 3]
        a, b = tp.vertical_pair_parts(xi)
        assert cols(a) == [5, 2] and cols(b) == [5, 3]

    def test_vertical_lift_pair_needs_shared_base(self):
        with pytest.raises(FiberMismatchError):
            tp.vertical_lift_pair(pt(1, 5, 2), pt(1, 6, 3))


class TestChartDoubling:
    def test_collapse_expand(self):
        p = pt(2, 1, 2, 3, 4)
        c = tp.collapse_inner(p)
        assert c.order == 1 and c.dim == 2
        assert np.array_equal(c.blocks, [[1, 2], [3, 4]])
        back = tp.expand_inner(c)
        assert np.array_equal(back.blocks, p.blocks)

    def test_vector_roundtrip(self):
        p = TanPoint(2, np.arange(8.0).reshape(4, 2))
        v = tp.as_vector(p)
        assert v.shape == (8,)
        assert np.array_equal(tp.from_vector(v, 2, 2).blocks, p.blocks)


def _scalar_product_map():
    dom = product_domain(box_domain(1, -5, 5), box_domain(1, -9, 9))
    return SmoothMap(dom, box_domain(1, -50, 50),
                     build(2, lambda xs: [xs[0] * xs[1]]), name="rx")


class TestApply:
    def test_apply_tangent_chain(self):
        f = SmoothMap(box_domain(1, -2, 2), box_domain(1),
                      build(1, lambda xs: [xs[0] * xs[0]]))
        out = tp.apply_tangent(f, pt(1, 0.5, 3.0))
        assert cols(out) == pytest.approx([0.25, 3.0])

    def test_domain_enforced(self):
        f = SmoothMap(box_domain(1, -2, 2), box_domain(1),
                      build(1, lambda xs: [xs[0] * xs[0]]))
        from tancat.errors import DomainError
        with pytest.raises(DomainError):
            tp.apply_tangent(f, pt(1, 3.0, 1.0))
        out = tp.apply_tangent(f, pt(1, 3.0, 1.0), check_domain=False)
        assert cols(out) == pytest.approx([9.0, 6.0])

    def test_partial_tangent_zeroes_other_slot(self):
        f = _scalar_product_map()
        p = TanPoint(1, np.array([[2.0, 5.0], [3.0, 999.0]]).reshape(2, 2))
        out = tp.partial_tangent(f, 1, p)
        assert cols(out) == pytest.approx([10.0, 15.0])  # d/dr(r*x) rdot = x rdot
        out2 = tp.partial_tangent(f, 2, p)
        assert cols(out2) == pytest.approx([10.0, 2.0 * 999.0])

    def test_partial_tangent_needs_split(self):
        f = SmoothMap(box_domain(2, -5, 5), box_domain(1),
                      build(2, lambda xs: [xs[0] * xs[1]]))
        with pytest.raises(StructureError):
            tp.partial_tangent(f, 1, TanPoint(1, np.zeros((2, 2))))

    def test_fiber_component(self):
        assert tp.fiber_component(pt(1, 4.0, 7.5)) == 7.5
