"""Graph bundles (trivial products and single-cut monodromy bundles over a
circle base) and skew-product systems with the fibre-preserving contract:
the base coordinate of the image is always the base map of the base
coordinate, by construction.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

from .base_systems import BasePoint, BaseSystem, CircleAngle
from .errors import InvalidPoint, NotHomeomorphism, WrongInput
from .graphs import GraphMap, GraphPoint, MetricGraph, eval_graph_map


@dataclass(frozen=True)
class Bundle:
    """Fibre bundle descriptor: trivial unless a gluing map is present.

    A monodromy bundle lives over a circle base with one cut at angle 0;
    crossing the cut forward applies ``gluing`` to the fibre coordinate,
    crossing backward applies ``gluing_inverse``.
    """

    fibre: MetricGraph
    gluing: Optional[GraphMap] = None
    gluing_inverse: Optional[GraphMap] = None

    @property
    def is_monodromy(self) -> bool:
        return self.gluing is not None


@dataclass(frozen=True)
class BundlePoint:
    b: BasePoint
    y: GraphPoint


@dataclass(frozen=True)
class SkewSystem:
    """Skew product: base system, bundle, and a base-indexed fibre-map family.

    ``continuity_modulus`` is a declared table of (base distance, fibre image
    distance) pairs verified by sampling; ``reference`` is a symbolic
    description of the claimed minimal set used by oracle tests.
    """

    base: BaseSystem
    bundle: Bundle
    fibre_family: Callable[[BasePoint], GraphMap]
    continuity_modulus: tuple[tuple[float, float], ...] = ()
    reference: dict = field(default_factory=dict, compare=False)
    id: str = "skew"


def product_bundle(base: BaseSystem, fibre: MetricGraph) -> Bundle:
    return Bundle(fibre=fibre)


def _check_round_trip(fibre: MetricGraph, g: GraphMap, ginv: GraphMap, tol: float = 1e-9) -> None:
    for e in fibre.edges:
        for i in range(9):
            p = GraphPoint(e.id, i / 8.0)
            q = eval_graph_map(ginv, eval_graph_map(g, p))
            if fibre.path_distance(p, q) > tol:
                raise NotHomeomorphism(
                    f"gluing round trip off by {fibre.path_distance(p, q):.2e} at {p}"
                )


def monodromy_bundle(
    base: BaseSystem, fibre: MetricGraph, gluing: GraphMap, gluing_inverse: GraphMap
) -> Bundle:
    if "rotation" not in base.id:
        raise WrongInput("monodromy bundles are supported over circle bases only")
    _check_round_trip(fibre, gluing, gluing_inverse)
    _check_round_trip(fibre, gluing_inverse, gluing)
    return Bundle(fibre=fibre, gluing=gluing, gluing_inverse=gluing_inverse)


def apply_skew(s: SkewSystem, x: BundlePoint) -> BundlePoint:
    """One step of the skew product, with chart transition on base wrap."""
    b2 = s.base.apply(x.b)
    m = s.fibre_family(x.b)
    y2 = eval_graph_map(m, x.y)
    if s.bundle.is_monodromy:
        # wrap detection: the rotation decreased the angle value
        t1 = float(s.base.embedding(x.b))
        t2 = float(s.base.embedding(b2))
        if t2 < t1:
            y2 = eval_graph_map(s.bundle.gluing, y2)
    return BundlePoint(b2, y2)


def orbit(
    s: SkewSystem, x0: BundlePoint, n: int, transient: int = 0
) -> list[BundlePoint]:
    x = x0
    for _ in range(transient):
        x = apply_skew(s, x)
    out = [x]
    for _ in range(n - 1):
        x = apply_skew(s, x)
        out.append(x)
    return out


def transport_to(
    bundle: Bundle, base: BaseSystem, b_from: BasePoint, b_to: BasePoint, y: GraphPoint
) -> GraphPoint:
    """Express the fibre coordinate of (b_from, y) in the chart of b_to.

    For product bundles this is the identity; for monodromy bundles the
    gluing (or its inverse) is applied when b_from and b_to sit on opposite
    sides of the cut at angle 0, i.e. when the short base arc joining them
    crosses the cut.
    """
    if not bundle.is_monodromy:
        return y
    t_from = float(base.embedding(b_from)) % 1.0
    t_to = float(base.embedding(b_to)) % 1.0
    d_direct = abs(t_from - t_to)
    if d_direct <= 1.0 - d_direct:
        return y  # short arc avoids the cut
    if t_from > t_to:
        # crossing the cut forward (angle wraps past 1 -> 0)
        return eval_graph_map(bundle.gluing, y)
    return eval_graph_map(bundle.gluing_inverse, y)


def fibre_slice(
    sample, b: BasePoint, delta_base: float, bundle: Bundle | None = None,
    base: BaseSystem | None = None,
) -> list[GraphPoint]:
    """Fibre coordinates of all sample points with base within delta_base of b,
    transported into b's chart.

    ``sample`` is any object with ``points: list[BundlePoint]`` or a plain
    list of BundlePoint; bundle/base enable chart transport and default to
    the sample's provenance when present.
    """
    points: Sequence[BundlePoint] = getattr(sample, "points", sample)
    if bundle is None:
        bundle = getattr(sample, "bundle", None)
    if base is None:
        base = getattr(sample, "base", None)
    if base is None:
        raise WrongInput("fibre_slice needs the base system for its metric")
    out: list[GraphPoint] = []
    for x in points:
        if base.metric(x.b, b) <= delta_base:
            y = x.y
            if bundle is not None and bundle.is_monodromy:
                y = transport_to(bundle, base, x.b, b, y)
            out.append(y)
    return out
