"""Differentiating a fibered groupoid at its unit arrows.

The derivative object lives on the base chart.  A section assigns to
every object a fiber direction at the unit arrow over it; right
translation extends it to an invariant vertical field on the arrow
chart, evaluation back at the units inverts that, and the section
bracket is the field bracket conjugated through this pair of maps.
The anchor pushes a section forward through the target map and turns
sections into honest vector fields on the base.

Everything here is an order-polymorphic tower evaluator, so derived
sections (brackets of brackets, scaled sections) feed straight back
into every construction, including the kernel-certified bracket.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .domain import Domain
from .errors import StructureError, VerticalityError
from .expr import Expr
from .fields import (ScalarField, VectorField, act_on_function, field_add,
                     field_scale, lie_bracket, check_related)
from .gbundle import GBundle, arrow_bundle, invariance_defect
from .groupoid import FiberedGroupoid, check_groupoid_axioms
from .randexpr import random_expr
from .report import rng_for
from .tanpoint import residual
from .tower import Tower, extend, join_top, split_top

GATE_TOL = 1e-9

# fn(base_towers, like) -> fiber towers; ``like`` supplies the order
# and batch shape when the base chart is zero-dimensional
SectionFn = Callable[[list[Tower], Tower], list[Tower]]


@dataclass(frozen=True)
class Section:
    """A fiber direction at the unit arrow over each object."""
    base: Domain
    rank: int
    fn: SectionFn
    name: str = ""

    @classmethod
    def from_expr(cls, base: Domain, rank: int, body: Expr,
                  name: str = "") -> "Section":
        if body.n_inputs != base.dim or len(body.outputs) != rank:
            raise ValueError(f"section over dim {base.dim} with rank {rank} "
                             f"needs a {base.dim} -> {rank} map, got "
                             f"{body.n_inputs} -> {len(body.outputs)}")

        def fn(xs, like):
            return body.evaluate(xs, order=like.order,
                                 batch_shape=like.batch_shape)

        return cls(base, rank, fn, name)

    @classmethod
    def constant(cls, base: Domain, vec, name: str = "") -> "Section":
        vec = np.asarray(vec, dtype=float)

        def fn(xs, like):
            return [extend(Tower.constant(
                np.broadcast_to(vec[i], like.batch_shape)), like.order)
                for i in range(len(vec))]

        return cls(base, len(vec), fn, name or "const")

    def at(self, points: np.ndarray) -> np.ndarray:
        """Order-0 values, shape (rank, ...)."""
        points = np.asarray(points, dtype=float)
        batch = points.shape[1:]
        like = Tower.constant(np.zeros(batch))
        xs = [Tower.constant(points[i]) for i in range(self.base.dim)]
        out = self.fn(xs, like)
        return np.stack([np.broadcast_to(t.coeffs[0], batch) for t in out])


def section_add(a: Section, b: Section, name: str = "") -> Section:
    def fn(xs, like):
        return [s + t for s, t in zip(a.fn(xs, like), b.fn(xs, like))]
    return Section(a.base, a.rank, fn, name or f"({a.name}+{b.name})")


def section_scale(f, a: Section, name: str = "") -> Section:
    """Scale by a constant or pointwise by a scalar field on the base."""
    if isinstance(f, ScalarField):
        def fn(xs, like):
            if xs:
                c = f.fn(xs)
            else:
                val = np.broadcast_to(f.at(np.zeros((0,) + like.batch_shape)),
                                      like.batch_shape)
                c = extend(Tower.constant(val), like.order)
            return [c * t for t in a.fn(xs, like)]
    else:
        c0 = float(f)

        def fn(xs, like):
            return [c0 * t for t in a.fn(xs, like)]
    return Section(a.base, a.rank, fn, name or f"(f*{a.name})")


# -- the derivative object -------------------------------------------

@dataclass(frozen=True)
class Algebroid:
    gpd: FiberedGroupoid
    bundle: GBundle
    name: str = ""

    @property
    def base(self) -> Domain:
        return self.gpd.base

    @property
    def rank(self) -> int:
        return self.gpd.arrows.dim - self.gpd.base.dim

    def section(self, body: Expr, name: str = "") -> Section:
        return Section.from_expr(self.base, self.rank, body, name)

    def constant_section(self, vec, name: str = "") -> Section:
        vec = np.asarray(vec, dtype=float)
        if len(vec) != self.rank:
            raise ValueError(f"rank {self.rank} section from a "
                             f"{len(vec)}-vector")
        return Section.constant(self.base, vec, name)


def algebroid_of(G: FiberedGroupoid, rng: np.random.Generator | None = None,
                 samples: int = 200, tol: float = GATE_TOL) -> Algebroid:
    """Differentiate a groupoid, refusing structures that fail their laws.

    The unit-arrow constructions below silently produce garbage on a
    non-groupoid, so the gate runs the pointwise axioms first.
    """
    if rng is None:
        rng = rng_for(29, "algebroid/gate/" + (G.name or "?"))
    res = check_groupoid_axioms(G, rng, samples)
    bad = {k: v for k, v in res.items() if not v <= tol}
    if bad:
        raise StructureError(
            f"cannot differentiate {G.name or 'groupoid'}: axiom residuals "
            + ", ".join(f"{k}={v:.3e}" for k, v in sorted(bad.items())))
    return Algebroid(G, arrow_bundle(G), name=f"A({G.name})")


def anchor_field(al: Algebroid, a: Section) -> VectorField:
    """The base vector field x -> Tt(unit velocity a(x))."""
    G = al.gpd
    p, q = G.base.dim, al.rank
    if p == 0:
        return VectorField(al.base, lambda xs: [], name=f"rho({a.name})")

    def fn(xs: list[Tower]) -> list[Tower]:
        ux = G.unit.body.evaluate(xs)
        av = a.fn(xs, xs[0])
        lift = [extend(t) for t in ux]
        for i in range(q):
            lift[p + i] = join_top(ux[p + i], av[i])
        ty = G.target.body.evaluate(lift)
        return [split_top(t)[1] for t in ty]

    return VectorField(al.base, fn, name=f"rho({a.name})")


def extend_to_invariant(al: Algebroid, a: Section) -> VectorField:
    """Right translation of the unit velocity over each arrow's target.

    At an arrow g this is the velocity of m(u(t(g)) + eps a, g), a
    vertical field on the arrow chart; it is invariant by construction
    and restricting back at the units recovers the section.
    """
    G = al.gpd
    p, q = G.base.dim, al.rank

    def fn(gs: list[Tower]) -> list[Tower]:
        like = gs[0]
        tg = G.target.body.evaluate(gs)
        u = G.unit.body.evaluate(tg, order=like.order,
                                 batch_shape=like.batch_shape)
        av = a.fn(tg, like)
        lift_u = [extend(t) for t in u]
        for i in range(q):
            lift_u[p + i] = join_top(u[p + i], av[i])
        lift_g = [extend(t) for t in gs]
        out = G.compose.body.evaluate(lift_u + lift_g)
        return [split_top(t)[1] for t in out]

    return VectorField(G.arrows, fn, name=f"inv({a.name})")


def restrict_to_unit(al: Algebroid, v: VectorField, check: bool = True,
                     tol: float = GATE_TOL, name: str = "") -> Section:
    """Read a vertical arrow field back off at the unit arrows."""
    G = al.gpd
    p = G.base.dim
    if check:
        rng = rng_for(31, "algebroid/verticality")
        pts = al.base.sample(rng, 64) if p else np.zeros((0, 8))
        anchor_part = v.at(G.unit(pts))[:p]
        drift = residual(anchor_part, np.zeros_like(anchor_part))
        if drift > tol:
            raise VerticalityError(
                f"field {v.name or '?'} has anchor components of size "
                f"{drift:.3e} at the units; only vertical fields restrict")

    def fn(xs, like):
        u = G.unit.body.evaluate(xs, order=like.order,
                                 batch_shape=like.batch_shape)
        return v.fiber(u)[p:]

    return Section(al.base, al.rank, fn, name or f"unit({v.name})")


def algebroid_bracket(al: Algebroid, a: Section, b: Section,
                      name: str = "") -> Section:
    """Bracket of sections through their invariant extensions."""
    va = extend_to_invariant(al, a)
    vb = extend_to_invariant(al, b)
    return restrict_to_unit(al, lie_bracket(va, vb), check=False,
                            name=name or f"[{a.name},{b.name}]")


def pullback_target(al: Algebroid, f: ScalarField) -> ScalarField:
    """A base function read through the target map, as an arrow function."""
    G = al.gpd
    if G.base.dim == 0:
        c0 = float(np.asarray(f.at(np.zeros((0, 1)))))

        def fn(gs):
            like = gs[0]
            return extend(Tower.constant(
                np.broadcast_to(c0, like.batch_shape)), like.order)
    else:
        def fn(gs):
            return f.fn(G.target.body.evaluate(gs))
    return ScalarField(G.arrows, fn, name=f"t*({f.name})")


# -- law checking -----------------------------------------------------

def _default_sections(al: Algebroid, rng: np.random.Generator,
                      count: int = 3, depth: int = 3) -> list[Section]:
    p, q = al.base.dim, al.rank
    out = []
    for k in range(count):
        if p == 0:
            out.append(al.constant_section(rng.uniform(-1.0, 1.0, size=q),
                                           name=f"s{k}"))
        else:
            out.append(al.section(random_expr(rng, p, q, depth=depth),
                                  name=f"s{k}"))
    return out


def check_algebroid_laws(al: Algebroid, rng: np.random.Generator,
                         samples: int = 150,
                         sections: Sequence[Section] | None = None,
                         f: ScalarField | None = None) -> dict[str, float]:
    """Residuals of the section-level laws at sampled points."""
    G = al.gpd
    p = G.base.dim
    if sections is None:
        sections = _default_sections(al, rng, 3)
    a, b, c = sections[0], sections[1], sections[2]
    if f is None:
        body = (random_expr(rng, p, 1, depth=3) if p
                else None)
        f = (ScalarField.from_expr(al.base, body, name="f") if p
             else ScalarField(al.base, lambda xs: Tower.constant(0.7),
                              name="f"))
    pts = al.base.sample(rng, samples) if p else np.zeros((0, samples))
    gs = G.sample_arrows(rng, samples)

    res: dict[str, float] = {}
    phi_a, phi_b = extend_to_invariant(al, a), extend_to_invariant(al, b)
    res["psi_phi"] = max(
        residual(restrict_to_unit(al, extend_to_invariant(al, s),
                                  check=False).at(pts), s.at(pts))
        for s in sections)
    res["phi_psi"] = residual(
        extend_to_invariant(al, restrict_to_unit(al, phi_a)).at(gs),
        phi_a.at(gs))
    res["phi_invariant"] = max(
        invariance_defect(al.bundle, phi_a, rng, samples).values())

    ab = algebroid_bracket(al, a, b)
    res["antisymmetry"] = residual(ab.at(pts),
                                   -algebroid_bracket(al, b, a).at(pts))
    jac = (algebroid_bracket(al, a, algebroid_bracket(al, b, c)).at(pts)
           + algebroid_bracket(al, b, algebroid_bracket(al, c, a)).at(pts)
           + algebroid_bracket(al, c, algebroid_bracket(al, a, b)).at(pts))
    res["jacobi"] = residual(jac, np.zeros_like(jac))

    rho_a = anchor_field(al, a)
    lhs = algebroid_bracket(al, a, section_scale(f, b)).at(pts)
    rhs = section_scale(f, ab).at(pts)
    if p:
        rhs = rhs + section_scale(act_on_function(rho_a, f), b).at(pts)
    res["leibniz"] = residual(lhs, rhs)

    if p:
        rho_ab = anchor_field(al, ab)
        res["anchor_morphism"] = residual(
            rho_ab.at(pts), lie_bracket(rho_a, anchor_field(al, b)).at(pts))
        res["t_related"] = max(
            check_related(G.target, extend_to_invariant(al, s),
                          anchor_field(al, s), gs)
            for s in sections)
    else:
        res["anchor_morphism"] = 0.0
        res["t_related"] = 0.0

    res["phi_module"] = residual(
        extend_to_invariant(al, section_scale(f, a)).at(gs),
        field_scale(pullback_target(al, f), phi_a).at(gs))
    return res


def bracket_table(al: Algebroid, points: np.ndarray,
                  sections: Sequence[Section] | None = None) -> list[dict]:
    """Brackets of the constant frame sections, summarized over points.

    Each row reports the mean coefficients of [e_i, e_j] over the
    points and the largest pointwise deviation from that mean, which is
    zero exactly when the bracket section is constant.
    """
    if sections is None:
        frame = np.eye(al.rank)
        sections = [Section.constant(al.base, frame[i], name=f"e{i + 1}")
                    for i in range(al.rank)]
    rows = []
    for i in range(len(sections)):
        for j in range(i + 1, len(sections)):
            vals = algebroid_bracket(al, sections[i], sections[j]).at(points)
            mean = vals.mean(axis=1)
            rows.append({
                "i": i, "j": j,
                "mean": [float(x) for x in mean],
                "spread": float(np.abs(vals - mean[:, None]).max(initial=0.0)),
            })
    return rows
