"""Factory functions returning fully-built skew systems: the interval-fibre
band with flipped gluing, the two-circles-joined-by-an-interval band, the
coding-system cylinder, products with a rotated circle retraction, cyclic
circle permutations, and the two blown-up-odometer constructions whose
exceptional fibre carries two circles (disjoint or intersecting).

Each factory returns a ConstructionResult bundling the system with a
symbolic description of its claimed minimal set for oracle-driven tests.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .base_systems import (
    GOLDEN,
    BasePoint,
    BaseSystem,
    CircleAngle,
    DoubledCode,
    SymbolicWord,
    circle_rotation,
    doubled_cantor,
    doubled_pair,
    quotient_base,
    sturmian,
    weyl_minimal_rotation,
)
from .bundles import Bundle, BundlePoint, SkewSystem, monodromy_bundle, product_bundle
from .errors import BadPattern, CirclesIntersect, NotACircle, OutOfRange
from .graphs import (
    Circle,
    Edge,
    GraphMap,
    GraphPoint,
    MapPiece,
    MetricGraph,
    PathSeg,
    build_graph,
    build_retraction,
    circle_rotation_pieces,
    eval_graph_map,
    identity_map,
    rotate_along_circle,
    shortest_path_segments,
)

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class ConstructionResult:
    system: SkewSystem
    reference: dict = field(default_factory=dict, compare=False)
    note: str = ""


def _require_angle(a: float, name: str = "angle") -> None:
    if not 0.0 < a < 1.0:
        raise OutOfRange(f"{name} {a} outside (0, 1)")


# ---------------------------------------------------------------------------
# interval-fibre band with orientation-reversing gluing


def build_mobius(alpha: float) -> ConstructionResult:
    """Band over a rotation whose fibre interval flips on each base loop.

    Fibre coordinate y = 2t - 1 on the interval edge of length 2; the
    centre section y = 0 is invariant, the boundary pair y = +-1 forms a
    single circle double-covering the base.
    """
    _require_angle(alpha, "alpha")
    fibre = MetricGraph(("v0", "v1"), (Edge("I", "v0", "v1", 2.0),))
    flip = GraphMap(fibre, fibre, {"I": (MapPiece(0.0, 1.0, (PathSeg("I", 1.0, 0.0),)),)})
    base = circle_rotation(alpha)
    bundle = monodromy_bundle(base, fibre, flip, flip)
    ident = identity_map(fibre)
    system = SkewSystem(
        base=base,
        bundle=bundle,
        fibre_family=lambda b: ident,
        continuity_modulus=((1e-2, 1e-2), (1e-4, 1e-4)),
        reference={
            "minimal_sets": ["centre", "boundary"],
            "centre_t": 0.5,
            "boundary_ts": (0.0, 1.0),
            "boundary_fibre_cardinality": 2,
            "boundary_rotation_number": alpha / 2.0,
        },
        id=f"mobius(alpha={alpha})",
    )
    return ConstructionResult(system, system.reference, "interval band, flip gluing")


def mobius_boundary_circle_map(result: ConstructionResult) -> Callable[[float], float]:
    """The boundary dynamics unrolled onto a single circle coordinate.

    The boundary double-covers the base; u in [0, 1) encodes (theta, label)
    as u = (theta + lap)/2 where lap is 0 on the t=1 rim and 1 on the t=0
    rim. The returned map is computed through apply_skew, not analytically.
    """
    s = result.system
    from .bundles import apply_skew

    def fn(u: float) -> float:
        u %= 1.0
        theta = (2.0 * u) % 1.0
        lap = 0 if u < 0.5 else 1
        t = 1.0 if lap == 0 else 0.0
        x2 = apply_skew(s, BundlePoint(CircleAngle(theta), GraphPoint("I", t)))
        theta2 = float(s.base.embedding(x2.b))
        lap2 = 0 if x2.y.t > 0.5 else 1
        return ((theta2 + lap2) / 2.0) % 1.0

    return fn


# ---------------------------------------------------------------------------
# two circles joined by an interval, over a flipping base


def _loop_circle(g: MetricGraph, edge_id: str) -> Circle:
    return Circle(((edge_id, 1),), g.edge_of(edge_id).length)


def build_torus_on_mobius(alpha: float, beta: float) -> ConstructionResult:
    """Band whose fibre is two unit circles joined by an interval.

    The gluing is the central symmetry swapping the circles and reversing
    the interval; the fibre map rotates both circles by beta and carries
    the interval across accordingly. The circle pair sweeps out the claimed
    minimal set.
    """
    _require_angle(alpha, "alpha")
    _require_angle(beta, "beta")
    fibre = MetricGraph(
        ("u", "w"),
        (Edge("A", "u", "u", 1.0), Edge("I", "u", "w", 1.0), Edge("B", "w", "w", 1.0)),
    )
    swap = GraphMap(
        fibre,
        fibre,
        {
            "A": (MapPiece(0.0, 1.0, (PathSeg("B", 0.0, 1.0),)),),
            "B": (MapPiece(0.0, 1.0, (PathSeg("A", 0.0, 1.0),)),),
            "I": (MapPiece(0.0, 1.0, (PathSeg("I", 1.0, 0.0),)),),
        },
    )
    base = circle_rotation(alpha)
    bundle = monodromy_bundle(base, fibre, swap, swap)
    ca, cb = _loop_circle(fibre, "A"), _loop_circle(fibre, "B")
    phi = GraphMap(
        fibre,
        fibre,
        {
            "A": circle_rotation_pieces(fibre, "A", ca, beta % 1.0, 1.0),
            "B": circle_rotation_pieces(fibre, "B", cb, beta % 1.0, 1.0),
            # interval: back along A from A(beta) to u, across I, out to B(beta)
            "I": (
                MapPiece(
                    0.0,
                    1.0,
                    (PathSeg("A", beta % 1.0, 0.0), PathSeg("I", 0.0, 1.0), PathSeg("B", 0.0, beta % 1.0)),
                ),
            ),
        },
    )
    system = SkewSystem(
        base=base,
        bundle=bundle,
        fibre_family=lambda b: phi,
        continuity_modulus=((1e-2, 1e-1), (1e-4, 1e-3)),
        reference={
            "minimal_set": "circle pair",
            "circle_edges": ("A", "B"),
            "circle_displacement": beta,
            "interval_fixed_t": 0.5,
        },
        id=f"torus-on-mobius(alpha={alpha},beta={beta})",
    )
    return ConstructionResult(system, system.reference, "two circles joined by an interval, swap gluing")


# ---------------------------------------------------------------------------
# coding-system cylinder, carried on its minimal set


def word_embed(w: SymbolicWord) -> float:
    """Cantor-style fibre coordinate of a coding word."""
    e = 0.0
    p = 1.0
    for i in range(min(w.K, 35)):
        p /= 3.0
        if (w.bits >> i) & 1:
            e += 2.0 * p
    return e


def build_sturmian_cylinder(alpha: float, precision: int = 1500) -> ConstructionResult:
    """Skew system carried on the coding minimal set itself.

    State points are (word, fibre point at the word's Cantor coordinate);
    the fibre family collapses the whole interval fibre to the coordinate
    of the shifted word, so the graph of the embedding is invariant.
    """
    _require_angle(alpha, "alpha")
    base, factor = sturmian(alpha, precision)
    fibre = MetricGraph(("v0", "v1"), (Edge("I", "v0", "v1", 1.0),))
    bundle = product_bundle(base, fibre)

    def family(b: SymbolicWord) -> GraphMap:
        t2 = word_embed(base.apply(b))
        return GraphMap(
            fibre, fibre, {"I": (MapPiece(0.0, 1.0, (PathSeg("I", t2, t2),)),)}
        )

    system = SkewSystem(
        base=base,
        bundle=bundle,
        fibre_family=family,
        continuity_modulus=((1e-2, 1e-1), (1e-4, 1e-3)),
        reference={
            "factor": factor,
            "fibre_cardinality_generic": 1,
            "fibre_cardinality_boundary": 2,
            "embed": word_embed,
        },
        id=f"sturmian-cylinder(alpha={alpha},K={precision})",
    )
    return ConstructionResult(system, system.reference, "coding cylinder on its minimal set")


# ---------------------------------------------------------------------------
# product with a rotated retraction onto a circle


def build_circle_minimal_product(
    base: BaseSystem, fibre: MetricGraph, c: Circle, angle: float | None = None
) -> ConstructionResult:
    """Product system whose fibre map retracts onto c and rotates along it."""
    if not c.edge_ids() <= {e.id for e in fibre.edges}:
        raise NotACircle("circle does not belong to the fibre graph")
    if angle is None:
        angle = float(weyl_minimal_rotation(list(range(1, 1001)), 1000, 0.05))
    r = build_retraction(fibre, c)
    m = rotate_along_circle(r, c, angle)
    bundle = product_bundle(base, fibre)
    system = SkewSystem(
        base=base,
        bundle=bundle,
        fibre_family=lambda b: m,
        continuity_modulus=((1e-2, 1e-1), (1e-4, 1e-3)),
        reference={"circle": c, "angle": angle},
        id=f"circle-product({base.id},angle={angle})",
    )
    return ConstructionResult(system, system.reference, "rotated retraction onto one circle")


# ---------------------------------------------------------------------------
# cyclic permutation of m disjoint circles


def chained_loops_graph(m: int) -> MetricGraph:
    """m unit self-loops linked in a row by unit arcs (handy test fibre)."""
    verts = [f"v{i}" for i in range(1, m + 1)]
    edges = [Edge(f"s{i}", f"v{i}", f"v{i}", 1.0) for i in range(1, m + 1)]
    edges += [Edge(f"a{i}", f"v{i}", f"v{i+1}", 1.0) for i in range(1, m)]
    return MetricGraph(verts, edges)


def build_m_circles(
    base: BaseSystem,
    fibre: MetricGraph,
    circles: Sequence[Circle],
    angle: float | None = None,
) -> ConstructionResult:
    """Product system cyclically permuting m disjoint circles of the fibre,
    with a rotation by ``angle`` inserted on the wrap-around leg.

    Off-circle vertices collapse to the image of their nearest circle
    vertex; off-circle edges run affinely along a shortest path joining
    their endpoint images.
    """
    circles = list(circles)
    m = len(circles)
    if angle is None:
        angle = GOLDEN
    vsets = []
    for c in circles:
        vs: set[str] = set()
        for eid, _ in c.steps:
            e = fibre.edge_of(eid)
            vs.update((e.u, e.v))
        vsets.append(vs)
    for i in range(m):
        for j in range(i + 1, m):
            if (vsets[i] & vsets[j]) or (circles[i].edge_ids() & circles[j].edge_ids()):
                raise CirclesIntersect(f"circles {i} and {j} share points")

    def sigma(i: int, s: float) -> tuple[int, float]:
        """Image circle index and coordinate of coordinate s on circle i."""
        j = (i + 1) % m
        ratio = circles[j].length / circles[i].length
        s2 = s * ratio
        if i == m - 1:
            s2 += (angle % 1.0) * circles[j].length
        return j, s2 % circles[j].length

    pieces: dict[str, tuple[MapPiece, ...]] = {}
    circle_of_edge: dict[str, int] = {}
    for i, c in enumerate(circles):
        cum = c.cumulative(fibre)
        for k, (eid, d) in enumerate(c.steps):
            circle_of_edge[eid] = i
            e = fibre.edge_of(eid)
            s0 = cum[k] if d > 0 else cum[k] + e.length
            j, t0 = sigma(i, s0 % c.length)
            # unwrapped image start so the rate stays affine across the seam
            ratio = circles[j].length / circles[i].length
            rate = d * ratio
            pieces[eid] = circle_rotation_pieces(fibre, eid, circles[j], t0, rate)

    # vertex anchors: nearest circle vertex, smallest id on ties
    circle_vertices = sorted(v for vs in vsets for v in vs)

    def image_of_vertex(v: str) -> GraphPoint:
        if any(v in vs for vs in vsets):
            w = v
        else:
            w = min(circle_vertices, key=lambda cv: (fibre.vertex_distance(v, cv), cv))
        i = next(k for k, vs in enumerate(vsets) if w in vs)
        s = circles[i].coord_of(fibre, fibre.vertex_point(w))
        j, s2 = sigma(i, s)
        return circles[j].point_at(fibre, s2)

    for e in fibre.edges:
        if e.id in circle_of_edge:
            continue
        pu, pv = image_of_vertex(e.u), image_of_vertex(e.v)
        segs = shortest_path_segments(fibre, pu, pv)
        pieces[e.id] = (MapPiece(0.0, 1.0, segs),)

    h = GraphMap(fibre, fibre, pieces)
    bundle = product_bundle(base, fibre)
    system = SkewSystem(
        base=base,
        bundle=bundle,
        fibre_family=lambda b: h,
        continuity_modulus=((1e-2, 1e-1), (1e-4, 1e-3)),
        reference={"circles": tuple(circles), "m": m, "angle": angle},
        id=f"m-circles(m={m},angle={angle})",
    )
    return ConstructionResult(system, system.reference, "cyclic circle permutation with one rotated leg")


# ---------------------------------------------------------------------------
# blown-up odometer bases: shared plumbing


def _quotient_with_sides(precision: int):
    dc = doubled_cantor(precision=precision)
    q = quotient_base(dc)
    c_l, c_r = q.params["c_l"], q.params["c_r"]
    e_l = q.embedding(c_l)

    def side(x: DoubledCode) -> int:
        # 1 = left part (at or left of the identified point), 2 = right part
        return 1 if q.embedding(x) <= e_l + 1e-15 else 2

    return q, c_l, side


def _case_rotation() -> float:
    """Rotation angle equidistributed along the odometer's return times."""
    return float(weyl_minimal_rotation([2 ** k for k in range(1, 201)], 200, 0.05))


# ---------------------------------------------------------------------------
# exceptional fibre = two disjoint circles joined by an interval


def build_theorem_d_case1(precision: int = 40) -> ConstructionResult:
    """Skew system over the quotiented blown-up odometer whose minimal set
    has a single exceptional fibre made of two disjoint circles.

    Fibre graph: circles s1 and s2 (length 2*pi each, antipodally offset
    charts) joined by a unit interval i. Points over the left part of the
    base ride s1, points over the right part ride s2; the interval maps
    onto a half circle so the whole fibre map stays continuous.
    """
    q, c_l, side = _quotient_with_sides(precision)
    rho = _case_rotation()
    g = MetricGraph(
        ("v1", "v2"),
        (
            Edge("s1", "v1", "v1", TWO_PI),
            Edge("i", "v1", "v2", 1.0),
            Edge("s2", "v2", "v2", TWO_PI),
        ),
    )
    c1, c2 = _loop_circle(g, "s1"), _loop_circle(g, "s2")

    def target_map(i_target: int) -> GraphMap:
        # chart offset: loop parameter 0 of s2 sits opposite parameter 0 of s1
        off = 0.0 if i_target == 1 else 0.5
        circ = c1 if i_target == 1 else c2
        start_s1 = ((rho - off) % 1.0) * TWO_PI
        start_s2 = ((0.5 + rho - off) % 1.0) * TWO_PI
        return GraphMap(
            g,
            g,
            {
                "s1": circle_rotation_pieces(g, "s1", circ, start_s1, 1.0),
                "s2": circle_rotation_pieces(g, "s2", circ, start_s2, 1.0),
                # unit interval onto a half circle: arc length pi
                "i": circle_rotation_pieces(g, "i", circ, start_s1, math.pi),
            },
        )

    maps = {1: target_map(1), 2: target_map(2)}

    def family(b: DoubledCode) -> GraphMap:
        return maps[side(q.apply(b))]

    bundle = product_bundle(q, g)
    system = SkewSystem(
        base=q,
        bundle=bundle,
        fibre_family=family,
        continuity_modulus=((1e-2, 2e-1), (1e-4, 2e-3)),
        reference={
            "exceptional_base": c_l,
            "exceptional_circles": 2,
            "generic_circles": 1,
            "side_of": side,
            "circle_for_side": {1: c1, 2: c2},
            "rotation": rho,
            "seed": BundlePoint(q.sampler(1)[0], GraphPoint("s1", 0.0)),
        },
        id=f"theorem-d-1(K={precision})",
    )
    return ConstructionResult(system, system.reference, "two disjoint circles over a blown-up odometer")


# ---------------------------------------------------------------------------
# exceptional fibre = two intersecting circles


@dataclass(frozen=True)
class Chart:
    """Piecewise-linear angle <-> arc-length table for one curve stretch."""

    thetas: np.ndarray  # increasing
    arcs: np.ndarray  # increasing, arcs[0] = 0

    @property
    def length(self) -> float:
        return float(self.arcs[-1])

    def arc_of_theta(self, theta: float) -> float:
        return float(np.interp(theta, self.thetas, self.arcs))

    def theta_of_arc(self, s: float) -> float:
        return float(np.interp(s, self.arcs, self.thetas))


def _make_chart(r: Callable[[float], float], dr: Callable[[float], float],
                th_a: float, th_b: float, n: int = 720) -> Chart:
    th = np.linspace(th_a, th_b, n + 1)
    integrand = np.sqrt(np.array([r(t) for t in th]) ** 2 + np.array([dr(t) for t in th]) ** 2)
    arcs = np.concatenate(([0.0], np.cumsum((integrand[:-1] + integrand[1:]) / 2.0 * np.diff(th))))
    return Chart(th, arcs)


@dataclass(frozen=True)
class Case2Geometry:
    """Angle bookkeeping for a fibre made of an outer unit circle and an
    inner radial curve sharing the radius-1 set."""

    pattern: str
    graph: MetricGraph
    outer: Circle
    inner: Circle
    r: Callable[[float], float] = field(compare=False)
    theta_ranges: dict = field(compare=False)  # edge id -> (theta_a, theta_b)
    charts: dict = field(compare=False)  # edge id -> Chart (inner edges only)
    seam_thetas: tuple[float, ...] = ()
    seam_arc: tuple[float, float] | None = None

    def theta_of(self, y: GraphPoint) -> float:
        th_a, th_b = self.theta_ranges[y.edge]
        chart = self.charts.get(y.edge)
        if chart is None:
            return th_a + (th_b - th_a) * y.t
        return chart.theta_of_arc(y.t * chart.length)

    def _point_on(self, edges: tuple[str, ...], theta: float) -> GraphPoint:
        theta %= TWO_PI
        for eid in edges:
            th_a, th_b = self.theta_ranges[eid]
            if th_a - 1e-12 <= theta <= th_b + 1e-12:
                chart = self.charts.get(eid)
                if chart is None:
                    t = (theta - th_a) / (th_b - th_a)
                else:
                    t = chart.arc_of_theta(theta) / chart.length
                return GraphPoint(eid, min(max(t, 0.0), 1.0))
        raise BadPattern(f"angle {theta} not covered by edges {edges}")

    def push_outer(self, theta: float) -> GraphPoint:
        return self._point_on(self.outer_edges, theta)

    def push_inner(self, theta: float) -> GraphPoint:
        return self._point_on(self.inner_edges, theta)

    @property
    def outer_edges(self) -> tuple[str, ...]:
        return tuple(e for e, _ in self.outer.steps)

    @property
    def inner_edges(self) -> tuple[str, ...]:
        return tuple(e for e, _ in self.inner.steps)

    def radial_project(self, y: GraphPoint) -> GraphPoint:
        """Projection of an outer point onto the inner curve along its radius."""
        return self.push_inner(self.theta_of(y))

    def radial_unproject(self, y: GraphPoint) -> GraphPoint:
        return self.push_outer(self.theta_of(y))


def _case2_geometry(pattern: str, theta0: float) -> Case2Geometry:
    if pattern == "point":
        r = lambda th: (3.0 + math.cos(th)) / 4.0
        dr = lambda th: -math.sin(th) / 4.0
        chart = _make_chart(r, dr, 0.0, TWO_PI)
        g = MetricGraph(
            ("P",),
            (Edge("o", "P", "P", TWO_PI), Edge("n", "P", "P", chart.length)),
        )
        return Case2Geometry(
            pattern=pattern,
            graph=g,
            outer=Circle((("o", 1),), TWO_PI),
            inner=Circle((("n", 1),), chart.length),
            r=r,
            theta_ranges={"o": (0.0, TWO_PI), "n": (0.0, TWO_PI)},
            charts={"n": chart},
            seam_thetas=(0.0,),
        )
    if pattern == "two":
        r = lambda th: (3.0 + math.cos(2.0 * th)) / 4.0
        dr = lambda th: -math.sin(2.0 * th) / 2.0
        ch1 = _make_chart(r, dr, 0.0, math.pi)
        ch2 = _make_chart(r, dr, math.pi, TWO_PI)
        g = MetricGraph(
            ("P0", "P1"),
            (
                Edge("o1", "P0", "P1", math.pi),
                Edge("o2", "P1", "P0", math.pi),
                Edge("n1", "P0", "P1", ch1.length),
                Edge("n2", "P1", "P0", ch2.length),
            ),
        )
        return Case2Geometry(
            pattern=pattern,
            graph=g,
            outer=Circle((("o1", 1), ("o2", 1)), TWO_PI),
            inner=Circle((("n1", 1), ("n2", 1)), ch1.length + ch2.length),
            r=r,
            theta_ranges={
                "o1": (0.0, math.pi),
                "o2": (math.pi, TWO_PI),
                "n1": (0.0, math.pi),
                "n2": (math.pi, TWO_PI),
            },
            charts={"n1": ch1, "n2": ch2},
            seam_thetas=(0.0, math.pi),
        )
    if pattern == "arc":
        if not 0.0 < theta0 < TWO_PI:
            raise BadPattern(f"plateau end {theta0} outside (0, 2*pi)")
        scale = TWO_PI / (TWO_PI - theta0)
        r = lambda th: 1.0 if th <= theta0 else (3.0 + math.cos((th - theta0) * scale)) / 4.0
        dr = lambda th: 0.0 if th <= theta0 else -math.sin((th - theta0) * scale) * scale / 4.0
        chart = _make_chart(r, dr, theta0, TWO_PI)
        g = MetricGraph(
            ("A0", "A1"),
            (
                Edge("sh", "A0", "A1", theta0),
                Edge("o", "A1", "A0", TWO_PI - theta0),
                Edge("n", "A1", "A0", chart.length),
            ),
        )
        return Case2Geometry(
            pattern=pattern,
            graph=g,
            outer=Circle((("o", 1), ("sh", 1)), TWO_PI),
            inner=Circle((("n", 1), ("sh", 1)), chart.length + theta0),
            r=r,
            theta_ranges={"sh": (0.0, theta0), "o": (theta0, TWO_PI), "n": (theta0, TWO_PI)},
            charts={"n": chart},
            seam_thetas=(0.0, theta0),
            seam_arc=(0.0, theta0),
        )
    raise BadPattern(f"unknown pattern {pattern!r}; expected point | arc | two")


def _case2_fibre_map(geo: Case2Geometry, target_inner: bool, delta_theta: float,
                     knots_per_edge: int = 256) -> GraphMap:
    """GraphMap realizing y -> push_target(theta(y) + delta_theta)."""
    g = geo.graph
    circ = geo.inner if target_inner else geo.outer
    push = geo.push_inner if target_inner else geo.push_outer

    def s_of_theta(theta: float) -> float:
        return circ.coord_of(g, push(theta))

    pieces: dict[str, tuple[MapPiece, ...]] = {}
    for e in g.edges:
        ts = np.linspace(0.0, 1.0, knots_per_edge + 1)
        out: list[MapPiece] = []
        s_prev = None
        for j in range(knots_per_edge):
            t0, t1 = float(ts[j]), float(ts[j + 1])
            th0 = geo.theta_of(GraphPoint(e.id, t0)) + delta_theta
            th1 = geo.theta_of(GraphPoint(e.id, t1)) + delta_theta
            s0 = s_of_theta(th0) if s_prev is None else s_prev
            s1 = s_of_theta(th1)
            # keep the arc running forward even across the coordinate seam
            span = (s1 - s0) % circ.length
            if span > circ.length / 2.0 and th1 - th0 < math.pi:
                span -= circ.length
            segs = (
                circ.arc_segments(g, s0, s0 + span)
                if span >= 0
                else tuple(
                    PathSeg(sg.edge, sg.t1, sg.t0)
                    for sg in reversed(circ.arc_segments(g, s0 + span, s0))
                )
            )
            out.append(MapPiece(t0, t1, segs))
            s_prev = s1
        pieces[e.id] = tuple(out)
    return GraphMap(g, g, pieces)


def build_theorem_d_case2(
    pattern: str, precision: int = 40, theta0: float = math.pi / 2
) -> ConstructionResult:
    """Skew system over the quotiented blown-up odometer whose exceptional
    fibre is the union of an outer circle and an inner radial curve meeting
    it in one point, one arc, or two points.

    The fibre map rotates the common angle coordinate and pushes the result
    onto the circle selected by the image base point's side; on the shared
    radius-1 set the two pushes coincide, which is what makes the map well
    defined across its defining branches.
    """
    geo = _case2_geometry(pattern, theta0)
    q, c_l, side = _quotient_with_sides(precision)
    rho = _case_rotation()
    delta = (rho % 1.0) * TWO_PI
    maps = {
        1: _case2_fibre_map(geo, target_inner=False, delta_theta=delta),
        2: _case2_fibre_map(geo, target_inner=True, delta_theta=delta),
    }

    def family(b: DoubledCode) -> GraphMap:
        return maps[side(q.apply(b))]

    bundle = product_bundle(q, geo.graph)
    seed_theta = geo.theta_ranges[geo.outer_edges[0]][0] + 0.37
    system = SkewSystem(
        base=q,
        bundle=bundle,
        fibre_family=family,
        continuity_modulus=((1e-2, 2e-1), (1e-4, 2e-3)),
        reference={
            "exceptional_base": c_l,
            "geometry": geo,
            "side_of": side,
            "circle_for_side": {1: geo.outer, 2: geo.inner},
            "rotation": rho,
            "seed": BundlePoint(q.sampler(1)[0], geo.push_outer(seed_theta)),
        },
        id=f"theorem-d-2:{pattern}(K={precision})",
    )
    return ConstructionResult(
        system, system.reference, "two intersecting circles over a blown-up odometer"
    )


def case2_branch_images(
    result: ConstructionResult, y: GraphPoint, target_inner: bool
) -> tuple[GraphPoint, GraphPoint]:
    """Evaluate the fibre formula through its two defining branches.

    One branch reads the angle of y directly from its own curve's chart;
    the other first moves y across the radial projection (or its inverse)
    and reads the angle there. On the shared radius-1 set both give the
    same image point; returning the pair lets tests check the seams.
    """
    geo: Case2Geometry = result.reference["geometry"]
    rho: float = result.reference["rotation"]
    delta = (rho % 1.0) * TWO_PI
    push = geo.push_inner if target_inner else geo.push_outer
    direct = push(geo.theta_of(y) + delta)
    if y.edge in geo.inner_edges and y.edge not in geo.outer_edges:
        moved = geo.radial_unproject(y)
    else:
        moved = geo.radial_project(y)
    via_other = push(geo.theta_of(moved) + delta)
    return direct, via_other
