"""Finite metric graphs, points on them, circles, and piecewise-affine self-maps.

A graph is a finite set of vertices joined by edges of positive length;
multi-edges and self-loops are allowed.  Points are addressed as
``(edge id, t)`` with ``t`` the arc-length-normalized parameter in [0, 1];
``t in {0, 1}`` is canonically identified with the corresponding vertex.
"""
from __future__ import annotations

import heapq
import math
from bisect import bisect_right
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    DanglingEdge,
    Disconnected,
    EmptyGraph,
    InvalidPoint,
    NonPositiveLength,
    NotACircle,
    NotCircleSelfMap,
    ScaleError,
)

#: tolerance for point identity, measured in path distance
POINT_TOL = 1e-9


@dataclass(frozen=True)
class Edge:
    id: str
    u: str
    v: str
    length: float

    @property
    def is_loop(self) -> bool:
        return self.u == self.v


@dataclass(frozen=True)
class GraphPoint:
    edge: str
    t: float


class MetricGraph:
    """Immutable finite metric graph with derived adjacency and vertex metric."""

    def __init__(self, vertices: Sequence[str], edges: Sequence[Edge]):
        self.vertices: tuple[str, ...] = tuple(vertices)
        self.edges: tuple[Edge, ...] = tuple(edges)
        self._edge_by_id = {e.id: e for e in self.edges}
        self._vidx = {v: i for i, v in enumerate(self.vertices)}
        self._eidx = {e.id: i for i, e in enumerate(self.edges)}
        # incident (edge, end) germs per vertex; a self-loop contributes both ends
        self._germs: dict[str, list[tuple[str, int]]] = {v: [] for v in self.vertices}
        for e in self.edges:
            self._germs[e.u].append((e.id, 0))
            self._germs[e.v].append((e.id, 1))
        self._vdist = self._all_pairs_vertex_distances()
        # numpy caches for vectorized fibre distances
        n = len(self.edges)
        self._len_arr = np.array([e.length for e in self.edges])
        self._u_arr = np.array([self._vidx[e.u] for e in self.edges], dtype=int)
        self._v_arr = np.array([self._vidx[e.v] for e in self.edges], dtype=int)

    # -- construction -------------------------------------------------

    def _all_pairs_vertex_distances(self) -> np.ndarray:
        n = len(self.vertices)
        dist = np.full((n, n), math.inf)
        adj: dict[int, list[tuple[int, float]]] = {i: [] for i in range(n)}
        for e in self.edges:
            iu, iv = self._vidx[e.u], self._vidx[e.v]
            adj[iu].append((iv, e.length))
            adj[iv].append((iu, e.length))
        for s in range(n):
            d = [math.inf] * n
            d[s] = 0.0
            heap = [(0.0, s)]
            while heap:
                du, u = heapq.heappop(heap)
                if du > d[u]:
                    continue
                for w, L in adj[u]:
                    nd = du + L
                    if nd < d[w]:
                        d[w] = nd
                        heapq.heappush(heap, (nd, w))
            dist[s] = d
        return dist

    # -- basic queries -------------------------------------------------

    def edge_of(self, edge_id: str) -> Edge:
        try:
            return self._edge_by_id[edge_id]
        except KeyError:
            raise InvalidPoint(f"unknown edge {edge_id!r}")

    def edge_index(self, edge_id: str) -> int:
        return self._eidx[edge_id]

    def germs_at(self, vertex: str) -> list[tuple[str, int]]:
        return list(self._germs[vertex])

    def degree(self, vertex: str) -> int:
        return len(self._germs[vertex])

    def vertex_distance(self, a: str, b: str) -> float:
        return float(self._vdist[self._vidx[a], self._vidx[b]])

    def n_components(self) -> int:
        seen: set[str] = set()
        comps = 0
        for v in self.vertices:
            if v in seen:
                continue
            comps += 1
            stack = [v]
            while stack:
                w = stack.pop()
                if w in seen:
                    continue
                seen.add(w)
                for eid, end in self._germs[w]:
                    e = self.edge_of(eid)
                    stack.append(e.v if end == 0 else e.u)
        return comps

    def is_connected(self) -> bool:
        return self.n_components() == 1

    # -- points ----------------------------------------------------------

    def validate_point(self, p: GraphPoint) -> GraphPoint:
        e = self.edge_of(p.edge)
        if not (0.0 <= p.t <= 1.0) or math.isnan(p.t):
            raise InvalidPoint(f"parameter {p.t} outside [0, 1] on edge {p.edge!r}")
        return p

    def vertex_of(self, p: GraphPoint) -> str | None:
        """Vertex id if p is a vertex (within POINT_TOL), else None."""
        e = self.edge_of(p.edge)
        if p.t * e.length <= POINT_TOL:
            return e.u
        if (1.0 - p.t) * e.length <= POINT_TOL:
            return e.v
        return None

    def vertex_point(self, vertex: str) -> GraphPoint:
        eid, end = self._germs[vertex][0]
        return GraphPoint(eid, float(end))

    def points_equal(self, p: GraphPoint, q: GraphPoint) -> bool:
        return self.path_distance(p, q) <= POINT_TOL

    def path_distance(self, p: GraphPoint, q: GraphPoint) -> float:
        """Shortest-path length; math.inf marks a disconnected pair."""
        self.validate_point(p)
        self.validate_point(q)
        ep, eq = self.edge_of(p.edge), self.edge_of(q.edge)
        best = math.inf
        if p.edge == q.edge:
            best = abs(p.t - q.t) * ep.length
        pu, pv = p.t * ep.length, (1.0 - p.t) * ep.length
        qu, qv = q.t * eq.length, (1.0 - q.t) * eq.length
        for dp, a in ((pu, ep.u), (pv, ep.v)):
            for dq, b in ((qu, eq.u), (qv, eq.v)):
                best = min(best, dp + self.vertex_distance(a, b) + dq)
        return best

    def distances_to_many(self, p: GraphPoint, edge_idx: np.ndarray, ts: np.ndarray) -> np.ndarray:
        """Vectorized path_distance from p to points given as (edge index, t) arrays."""
        ep = self.edge_of(p.edge)
        lens = self._len_arr[edge_idx]
        qu = ts * lens
        qv = (1.0 - ts) * lens
        pu, pv = p.t * ep.length, (1.0 - p.t) * ep.length
        ipu, ipv = self._vidx[ep.u], self._vidx[ep.v]
        du = self._vdist[ipu]
        dv = self._vdist[ipv]
        best = np.minimum(
            np.minimum(pu + du[self._u_arr[edge_idx]] + qu, pu + du[self._v_arr[edge_idx]] + qv),
            np.minimum(pv + dv[self._u_arr[edge_idx]] + qu, pv + dv[self._v_arr[edge_idx]] + qv),
        )
        same = edge_idx == self._eidx[p.edge]
        if same.any():
            direct = np.abs(ts[same] - p.t) * ep.length
            best[same] = np.minimum(best[same], direct)
        return best


def build_graph(spec: dict) -> MetricGraph:
    """Validate and build a metric graph from a vertex/edge spec dict.

    Expected shape: ``{"vertices": [id, ...],
    "edges": [{"id", "from", "to", "length"}, ...]}``.
    """
    vertices = list(spec.get("vertices", []))
    raw_edges = list(spec.get("edges", []))
    if not vertices or not raw_edges:
        raise EmptyGraph("a graph needs at least one vertex and one edge")
    vset = set(vertices)
    edges = []
    for i, ed in enumerate(raw_edges):
        eid = str(ed.get("id", f"e{i}"))
        u, v, L = ed["from"], ed["to"], float(ed["length"])
        if L <= 0.0:
            raise NonPositiveLength(f"edge {eid!r} has length {L}")
        if u not in vset or v not in vset:
            raise DanglingEdge(f"edge {eid!r} references unknown vertex")
        edges.append(Edge(eid, u, v, L))
    if len({e.id for e in edges}) != len(edges):
        raise DanglingEdge("duplicate edge ids")
    return MetricGraph(vertices, edges)


def point_order(g: MetricGraph, p: GraphPoint) -> int:
    """Number of arcs emanating from p: 2 at edge-interior points, degree at vertices."""
    g.validate_point(p)
    v = g.vertex_of(p)
    if v is None:
        return 2
    return g.degree(v)


def path_distance(g: MetricGraph, p: GraphPoint, q: GraphPoint) -> float:
    return g.path_distance(p, q)


# ---------------------------------------------------------------------------
# circles


@dataclass(frozen=True)
class Circle:
    """A simple closed curve given as a cyclic sequence of directed edges."""

    steps: tuple[tuple[str, int], ...]  # (edge id, +1 forward / -1 backward)
    length: float

    def edge_ids(self) -> frozenset[str]:
        return frozenset(e for e, _ in self.steps)

    def cumulative(self, g: MetricGraph) -> list[float]:
        out = [0.0]
        for eid, _ in self.steps:
            out.append(out[-1] + g.edge_of(eid).length)
        return out

    def contains_point(self, g: MetricGraph, p: GraphPoint, tol: float = POINT_TOL) -> bool:
        if p.edge in self.edge_ids():
            return True
        v = g.vertex_of(p)
        if v is None:
            return False
        return any(
            v in (g.edge_of(eid).u, g.edge_of(eid).v) for eid, _ in self.steps
        )

    def coord_of(self, g: MetricGraph, p: GraphPoint) -> float:
        """Arc-length coordinate in [0, length) of a point lying on the circle."""
        cum = self.cumulative(g)
        for i, (eid, d) in enumerate(self.steps):
            if p.edge == eid:
                e = g.edge_of(eid)
                pos = p.t * e.length if d > 0 else (1.0 - p.t) * e.length
                return (cum[i] + pos) % self.length
        v = g.vertex_of(p)
        if v is not None:
            for i, (eid, d) in enumerate(self.steps):
                e = g.edge_of(eid)
                start = e.u if d > 0 else e.v
                if v == start:
                    return cum[i] % self.length
        raise NotACircle(f"point {p} does not lie on this circle")

    def point_at(self, g: MetricGraph, s: float) -> GraphPoint:
        s = s % self.length
        cum = self.cumulative(g)
        i = min(bisect_right(cum, s) - 1, len(self.steps) - 1)
        eid, d = self.steps[i]
        e = g.edge_of(eid)
        frac = (s - cum[i]) / e.length
        t = frac if d > 0 else 1.0 - frac
        return GraphPoint(eid, min(max(t, 0.0), 1.0))

    def arc_segments(self, g: MetricGraph, s0: float, s1: float) -> tuple["PathSeg", ...]:
        """Directed segments covering the forward arc from coordinate s0 to s1.

        s1 may exceed s0 by at most the full length; the arc runs in the
        positive direction of the circle.
        """
        if s1 < s0:
            s1 += self.length
        cum = self.cumulative(g)
        segs: list[PathSeg] = []
        s = s0
        while s1 - s > 1e-15:
            base = math.floor(s / self.length) * self.length
            sl = s - base
            i = min(bisect_right(cum, sl + 1e-15) - 1, len(self.steps) - 1)
            if sl < cum[i]:
                i = max(i - 1, 0)
            eid, d = self.steps[i]
            e = g.edge_of(eid)
            seg_end_abs = base + cum[i + 1]
            stop = min(s1, seg_end_abs)
            f0 = (s - base - cum[i]) / e.length
            f1 = (stop - base - cum[i]) / e.length
            if d > 0:
                segs.append(PathSeg(eid, f0, f1))
            else:
                segs.append(PathSeg(eid, 1.0 - f0, 1.0 - f1))
            s = stop
        if not segs:
            p = self.point_at(g, s0)
            segs.append(PathSeg(p.edge, p.t, p.t))
        return tuple(segs)


def _subset_is_simple_cycle(g: MetricGraph, edge_ids: frozenset[str]) -> bool:
    deg: dict[str, int] = {}
    verts: set[str] = set()
    for eid in edge_ids:
        e = g.edge_of(eid)
        deg[e.u] = deg.get(e.u, 0) + 1
        deg[e.v] = deg.get(e.v, 0) + 1
        verts.update((e.u, e.v))
    if any(d != 2 for d in deg.values()):
        return False
    # connectivity of the sub-multigraph
    start = next(iter(verts))
    seen = {start}
    stack = [start]
    while stack:
        w = stack.pop()
        for eid in edge_ids:
            e = g.edge_of(eid)
            if e.u == w and e.v not in seen:
                seen.add(e.v)
                stack.append(e.v)
            if e.v == w and e.u not in seen:
                seen.add(e.u)
                stack.append(e.u)
    return seen == verts


def _circle_from_edge_set(g: MetricGraph, edge_ids: frozenset[str]) -> Circle:
    first = min(edge_ids)
    e0 = g.edge_of(first)
    remaining = set(edge_ids) - {first}
    steps = [(first, 1)]
    cur = e0.v
    start = e0.u
    while cur != start or remaining:
        nxt = None
        for eid in sorted(remaining):
            e = g.edge_of(eid)
            if e.u == cur:
                nxt = (eid, 1)
                cur2 = e.v
            elif e.v == cur:
                nxt = (eid, -1)
                cur2 = e.u
            else:
                continue
            break
        if nxt is None:
            raise NotACircle("edge set is not a single cycle")
        steps.append(nxt)
        remaining.discard(nxt[0])
        cur = cur2
    rev = tuple((eid, -d) for eid, d in reversed(steps))
    # rotate reversed sequence to start at the same smallest edge
    k = next(i for i, (eid, _) in enumerate(rev) if eid == first)
    rev = rev[k:] + rev[:k]
    fwd = tuple(steps)
    # canonical orientation: smaller edge-id sequence, forward on ties
    chosen = min(fwd, rev, key=lambda s: ([e for e, _ in s], [-d for _, d in s]))
    total = sum(g.edge_of(eid).length for eid, _ in chosen)
    return Circle(chosen, total)


def enumerate_circles(g: MetricGraph) -> list[Circle]:
    """All simple closed curves of g, in lexicographic edge-id order."""
    found: set[frozenset[str]] = set()
    for e in g.edges:
        if e.is_loop:
            found.add(frozenset([e.id]))
    # DFS over edge paths from each start vertex
    def dfs(start: str, cur: str, used: set[str], visited: set[str]) -> None:
        for eid, end in g.germs_at(cur):
            if eid in used:
                continue
            e = g.edge_of(eid)
            if e.is_loop:
                continue
            nxt = e.v if end == 0 else e.u
            if nxt == start and len(used) >= 1:
                found.add(frozenset(used | {eid}))
                continue
            if nxt in visited:
                continue
            used.add(eid)
            visited.add(nxt)
            dfs(start, nxt, used, visited)
            used.discard(eid)
            visited.discard(nxt)

    for v in g.vertices:
        dfs(v, v, set(), {v})
    cycles = [
        s for s in found
        if len(s) == 1 and g.edge_of(next(iter(s))).is_loop or len(s) >= 2
    ]
    circles = [_circle_from_edge_set(g, s) for s in cycles]
    circles.sort(key=lambda c: tuple(sorted(c.edge_ids())))
    return circles


# ---------------------------------------------------------------------------
# piecewise-affine graph maps


@dataclass(frozen=True)
class PathSeg:
    edge: str
    t0: float
    t1: float

    def length(self, g: MetricGraph) -> float:
        return abs(self.t1 - self.t0) * g.edge_of(self.edge).length


@dataclass(frozen=True)
class MapPiece:
    lo: float
    hi: float
    path: tuple[PathSeg, ...]


@dataclass(frozen=True)
class GraphMap:
    """Per-edge subdivision into pieces, each mapped affinely onto an edge path."""

    domain: MetricGraph
    codomain: MetricGraph
    pieces: dict[str, tuple[MapPiece, ...]] = field(compare=False)

    def piece_for(self, edge: str, t: float) -> MapPiece:
        plist = self.pieces[edge]
        for piece in plist:
            if piece.lo - 1e-12 <= t <= piece.hi + 1e-12:
                return piece
        raise InvalidPoint(f"no piece covers t={t} on edge {edge!r}")


def eval_graph_map(m: GraphMap, p: GraphPoint) -> GraphPoint:
    m.domain.validate_point(p)
    plist = m.pieces[p.edge]
    lows = [pc.lo for pc in plist]
    i = min(max(bisect_right(lows, p.t) - 1, 0), len(plist) - 1)
    piece = plist[i]
    if not (piece.lo - 1e-12 <= p.t <= piece.hi + 1e-12):
        piece = m.piece_for(p.edge, p.t)
    g2 = m.codomain
    total = sum(seg.length(g2) for seg in piece.path)
    if total <= 0.0 or piece.hi - piece.lo <= 0.0:
        seg = piece.path[0]
        return GraphPoint(seg.edge, seg.t0)
    u = (p.t - piece.lo) / (piece.hi - piece.lo)
    u = min(max(u, 0.0), 1.0)
    s = u * total
    for seg in piece.path:
        sl = seg.length(g2)
        if s <= sl + 1e-15 or seg is piece.path[-1]:
            frac = s / sl if sl > 0 else 0.0
            frac = min(max(frac, 0.0), 1.0)
            t = seg.t0 + (seg.t1 - seg.t0) * frac
            return GraphPoint(seg.edge, min(max(t, 0.0), 1.0))
        s -= sl
    raise AssertionError("unreachable")


def identity_map(g: MetricGraph) -> GraphMap:
    pieces = {e.id: (MapPiece(0.0, 1.0, (PathSeg(e.id, 0.0, 1.0),)),) for e in g.edges}
    return GraphMap(g, g, pieces)


def compose_eval(maps: Sequence[GraphMap], p: GraphPoint) -> GraphPoint:
    for m in maps:
        p = eval_graph_map(m, p)
    return p


def check_continuity(m: GraphMap, tol: float = 1e-12) -> bool:
    """Left/right limits agree at every subdivision boundary; vertex images consistent."""
    g, g2 = m.domain, m.codomain
    for eid, plist in m.pieces.items():
        for a, b in zip(plist, plist[1:]):
            pa = _path_endpoint(g2, a.path, 1.0)
            pb = _path_endpoint(g2, b.path, 0.0)
            if g2.path_distance(pa, pb) > tol:
                return False
    # vertex image consistency across incident edges
    for v in g.vertices:
        images = []
        for eid, end in g.germs_at(v):
            images.append(eval_graph_map(m, GraphPoint(eid, float(end))))
        for q in images[1:]:
            if g2.path_distance(images[0], q) > tol:
                return False
    return True


def _path_endpoint(g: MetricGraph, path: tuple[PathSeg, ...], u: float) -> GraphPoint:
    seg = path[-1] if u >= 0.5 else path[0]
    t = seg.t1 if u >= 0.5 else seg.t0
    return GraphPoint(seg.edge, t)


# ---------------------------------------------------------------------------
# retraction onto a circle


def build_retraction(g: MetricGraph, c: Circle) -> GraphMap:
    """Retraction of a connected graph onto one of its circles.

    Vertices off the circle collapse (via BFS, smallest-id tie break) to the
    circle vertex where their branch attaches; every off-circle edge maps
    affinely onto the shortest arc of c joining its endpoint images, running
    in the positive circle direction on exact ties.
    """
    if not g.is_connected():
        raise Disconnected("retraction needs a connected graph")
    circle_edges = c.edge_ids()
    if not circle_edges <= {e.id for e in g.edges}:
        raise NotACircle("circle does not belong to this graph")
    on_circle: set[str] = set()
    for eid, _ in c.steps:
        e = g.edge_of(eid)
        on_circle.update((e.u, e.v))
    anchor: dict[str, str] = {v: v for v in on_circle}
    frontier = sorted(on_circle)
    while frontier:
        nxt: list[str] = []
        for v in frontier:
            for eid, end in sorted(g.germs_at(v)):
                e = g.edge_of(eid)
                w = e.v if end == 0 else e.u
                if w not in anchor:
                    anchor[w] = anchor[v]
                    nxt.append(w)
        frontier = sorted(set(nxt))
    if set(anchor) != set(g.vertices):
        raise Disconnected("graph has vertices unreachable from the circle")

    def image_coord(v: str) -> float:
        return c.coord_of(g, g.vertex_point(anchor[v]))

    pieces: dict[str, tuple[MapPiece, ...]] = {}
    for e in g.edges:
        if e.id in circle_edges:
            pieces[e.id] = (MapPiece(0.0, 1.0, (PathSeg(e.id, 0.0, 1.0),)),)
            continue
        su, sv = image_coord(e.u), image_coord(e.v)
        fwd = (sv - su) % c.length
        bwd = (su - sv) % c.length
        if abs(su - sv) <= 1e-15 or (fwd <= 1e-15 or bwd <= 1e-15):
            p = c.point_at(g, su)
            pieces[e.id] = (MapPiece(0.0, 1.0, (PathSeg(p.edge, p.t, p.t),)),)
        elif fwd <= bwd:
            pieces[e.id] = (MapPiece(0.0, 1.0, c.arc_segments(g, su, su + fwd)),)
        else:
            # traverse backwards: reverse the forward arc from sv
            segs = c.arc_segments(g, sv, sv + bwd)
            rev = tuple(PathSeg(s.edge, s.t1, s.t0) for s in reversed(segs))
            pieces[e.id] = (MapPiece(0.0, 1.0, rev),)
    return GraphMap(g, g, pieces)


def rotate_along_circle(m: GraphMap, c: Circle, angle: float) -> GraphMap:
    """Post-compose a map whose image lies on circle c with rotation by angle·length."""
    g2 = m.codomain
    shift = (angle % 1.0) * c.length
    pieces: dict[str, tuple[MapPiece, ...]] = {}
    for eid, plist in m.pieces.items():
        out: list[MapPiece] = []
        for pc in plist:
            total = sum(seg.length(g2) for seg in pc.path)
            s0 = c.coord_of(g2, GraphPoint(pc.path[0].edge, pc.path[0].t0))
            if total <= 1e-15:
                p = c.point_at(g2, s0 + shift)
                out.append(MapPiece(pc.lo, pc.hi, (PathSeg(p.edge, p.t, p.t),)))
                continue
            # determine direction of the path along the circle
            mid = _path_point_at(g2, pc.path, min(total / 2, total))
            smid = c.coord_of(g2, mid)
            fwd = (smid - s0) % c.length
            direction = 1 if fwd <= c.length / 2 else -1
            if direction > 0:
                segs = c.arc_segments(g2, s0 + shift, s0 + shift + total)
            else:
                segs = c.arc_segments(g2, s0 + shift - total, s0 + shift)
                segs = tuple(PathSeg(s.edge, s.t1, s.t0) for s in reversed(segs))
            out.append(MapPiece(pc.lo, pc.hi, segs))
        pieces[eid] = tuple(out)
    return GraphMap(m.domain, g2, pieces)


def _path_point_at(g: MetricGraph, path: tuple[PathSeg, ...], s: float) -> GraphPoint:
    for seg in path:
        sl = seg.length(g)
        if s <= sl or seg is path[-1]:
            frac = s / sl if sl > 0 else 0.0
            frac = min(max(frac, 0.0), 1.0)
            return GraphPoint(seg.edge, seg.t0 + (seg.t1 - seg.t0) * frac)
        s -= sl
    raise AssertionError("unreachable")


def circle_rotation_pieces(
    g: MetricGraph,
    domain_edge: str,
    target: Circle,
    s_at_zero: float,
    rate: float,
) -> tuple[MapPiece, ...]:
    """Pieces mapping a whole edge onto the arc s_at_zero + rate·(arc position).

    The domain edge parameter t traverses the target circle arc starting at
    coordinate ``s_at_zero`` with signed arc speed ``rate`` per unit of domain
    arc length.
    """
    e = g.edge_of(domain_edge)
    span = rate * e.length
    if span >= 0:
        segs = target.arc_segments(g, s_at_zero, s_at_zero + span)
    else:
        segs = target.arc_segments(g, s_at_zero + span, s_at_zero)
        segs = tuple(PathSeg(s.edge, s.t1, s.t0) for s in reversed(segs))
    return (MapPiece(0.0, 1.0, segs),)


def _vertex_route(g: MetricGraph, a: str, b: str) -> list[str]:
    """Vertices along a shortest a-to-b walk (Dijkstra, smallest-id ties)."""
    if a == b:
        return [a]
    dist: dict[str, float] = {a: 0.0}
    prev: dict[str, str] = {}
    heap = [(0.0, a)]
    while heap:
        du, u = heapq.heappop(heap)
        if du > dist.get(u, math.inf):
            continue
        for eid, end in sorted(g.germs_at(u)):
            e = g.edge_of(eid)
            w = e.v if end == 0 else e.u
            nd = du + e.length
            if nd < dist.get(w, math.inf) - 1e-15:
                dist[w] = nd
                prev[w] = u
                heapq.heappush(heap, (nd, w))
    if b not in dist:
        raise Disconnected(f"no path from {a!r} to {b!r}")
    route = [b]
    while route[-1] != a:
        route.append(prev[route[-1]])
    return route[::-1]


def _edge_between(g: MetricGraph, a: str, b: str) -> tuple[str, int]:
    """Shortest edge joining adjacent vertices, returned with direction from a."""
    best: tuple[float, str, int] | None = None
    for e in g.edges:
        if e.u == a and e.v == b:
            cand = (e.length, e.id, 1)
        elif e.v == a and e.u == b:
            cand = (e.length, e.id, -1)
        else:
            continue
        if best is None or cand < best:
            best = cand
    if best is None:
        raise Disconnected(f"vertices {a!r}, {b!r} not adjacent")
    return best[1], best[2]


def shortest_path_segments(g: MetricGraph, p: GraphPoint, q: GraphPoint) -> tuple[PathSeg, ...]:
    """Directed segments of a shortest path from p to q."""
    ep, eq = g.edge_of(p.edge), g.edge_of(q.edge)
    options: list[tuple[float, tuple]] = []
    if p.edge == q.edge:
        options.append((abs(p.t - q.t) * ep.length, ("direct",)))
    pu, pv = p.t * ep.length, (1.0 - p.t) * ep.length
    qu, qv = q.t * eq.length, (1.0 - q.t) * eq.length
    for dp, a, ta in ((pu, ep.u, 0.0), (pv, ep.v, 1.0)):
        for dq, b, tb in ((qu, eq.u, 0.0), (qv, eq.v, 1.0)):
            options.append((dp + g.vertex_distance(a, b) + dq, ("via", a, ta, b, tb)))
    options.sort(key=lambda o: o[0])
    best = options[0][1]
    if best[0] == "direct":
        return (PathSeg(p.edge, p.t, q.t),)
    _, a, ta, b, tb = best
    segs: list[PathSeg] = []
    if abs(p.t - ta) > 0:
        segs.append(PathSeg(p.edge, p.t, ta))
    route = _vertex_route(g, a, b)
    for x, y in zip(route, route[1:]):
        eid, d = _edge_between(g, x, y)
        segs.append(PathSeg(eid, 0.0, 1.0) if d > 0 else PathSeg(eid, 1.0, 0.0))
    if abs(q.t - tb) > 0:
        segs.append(PathSeg(q.edge, tb, q.t))
    if not segs:
        segs.append(PathSeg(p.edge, p.t, p.t))
    return tuple(segs)


# ---------------------------------------------------------------------------
# local classification (end-points vs star-like interior points)


@dataclass(frozen=True)
class PointLocalClass:
    kind: str  # "end" | "star"
    k: int  # branch count, >= 2 for "star", 0 for "end"
    r: float
    delta: float

    @property
    def is_endpoint(self) -> bool:
        return self.kind == "end"


def _initial_germ(g: MetricGraph, p: GraphPoint, q: GraphPoint, delta: float) -> tuple[str, int]:
    """Germ (edge id, direction end) along which the shortest path p -> q departs."""
    ep = g.edge_of(p.edge)
    v = None
    if p.t * ep.length <= delta:
        v = ep.u
    elif (1.0 - p.t) * ep.length <= delta:
        v = ep.v
    if v is not None:
        best, best_germ = math.inf, None
        eq = g.edge_of(q.edge)
        qu, qv = q.t * eq.length, (1.0 - q.t) * eq.length
        for eid, end in g.germs_at(v):
            e = g.edge_of(eid)
            other = e.v if end == 0 else e.u
            d = e.length + min(
                qu + g.vertex_distance(other, eq.u), qv + g.vertex_distance(other, eq.v)
            )
            if q.edge == eid:
                # q reachable within the germ's edge without leaving it
                d_in = (q.t - 0.0) * e.length if end == 0 else (1.0 - q.t) * e.length
                d = min(d, d_in)
            if d < best:
                best, best_germ = d, (eid, end)
        assert best_germ is not None
        return best_germ
    # interior point: leave along +t or -t on p's own edge
    eq = g.edge_of(q.edge)
    qu, qv = q.t * eq.length, (1.0 - q.t) * eq.length
    d_minus = p.t * ep.length + min(
        qu + g.vertex_distance(ep.u, eq.u), qv + g.vertex_distance(ep.u, eq.v)
    )
    d_plus = (1.0 - p.t) * ep.length + min(
        qu + g.vertex_distance(ep.v, eq.u), qv + g.vertex_distance(ep.v, eq.v)
    )
    if q.edge == p.edge:
        if q.t >= p.t:
            d_plus = min(d_plus, (q.t - p.t) * ep.length)
        else:
            d_minus = min(d_minus, (p.t - q.t) * ep.length)
    return (p.edge, 0) if d_minus < d_plus else (p.edge, 1)


def classify_sample_point(
    g: MetricGraph,
    fibre_sample: Sequence[GraphPoint],
    p: GraphPoint,
    r: float,
    delta: float,
) -> PointLocalClass:
    """Finite-scale end-point / star-like-interior classifier.

    A point is a star-like interior point at scale (r, delta) when the
    sample points within r of p, outside the delta-ball at p, depart along
    k >= 2 distinct edge germs each witnessed within 2·delta of p.
    """
    if delta >= r:
        raise ScaleError(f"need delta < r, got delta={delta}, r={r}")
    witnesses: dict[tuple[str, int], float] = {}
    for q in fibre_sample:
        d = g.path_distance(p, q)
        if d <= delta or d > r:
            continue
        germ = _initial_germ(g, p, q, delta)
        if d < witnesses.get(germ, math.inf):
            witnesses[germ] = d
    k = sum(1 for d in witnesses.values() if d <= 2.0 * delta)
    if k >= 2:
        return PointLocalClass("star", k, r, delta)
    return PointLocalClass("end", 0, r, delta)


# ---------------------------------------------------------------------------
# rotation number and monotonicity


def rotation_number_of_circle_map(fn, x0: float, iterations: int) -> float:
    """Birkhoff average of signed displacement for a degree-one circle map.

    Displacements are wrapped to (-1/2, 1/2]; the result is reported mod 1
    with error estimate 1/iterations for maps conjugate to rotations.
    """
    x = x0 % 1.0
    total = 0.0
    for _ in range(iterations):
        y = fn(x) % 1.0
        d = (y - x) % 1.0
        if d > 0.5:
            d -= 1.0
        total += d
        x = y
    return (total / iterations) % 1.0


def rotation_number(m: GraphMap, c: Circle, iterations: int) -> float:
    """Rotation number of a circle self-map given as a GraphMap restricted to c."""
    g = m.domain

    def fn(u: float) -> float:
        p = c.point_at(g, u * c.length)
        q = eval_graph_map(m, p)
        if not c.contains_point(g, q):
            raise NotCircleSelfMap("map image leaves the circle")
        return c.coord_of(g, q) / c.length

    return rotation_number_of_circle_map(fn, 0.12345, iterations)


def arc_monotonicity_check(
    m: GraphMap, arc_points: Sequence[GraphPoint], tol: float = 1e-9
) -> bool | None:
    """Weak monotonicity of image points along an arc, at sample scale.

    Returns True when consecutive image distances are additive (monotone along
    a geodesic arc), False when a strict fold-back is detected, None when the
    image cannot be recognized as a single arc at this scale.
    """
    g2 = m.codomain
    imgs = [eval_graph_map(m, p) for p in arc_points]
    if len(imgs) < 3:
        return True
    consec = sum(g2.path_distance(a, b) for a, b in zip(imgs, imgs[1:]))
    end_to_end = g2.path_distance(imgs[0], imgs[-1])
    if consec <= end_to_end + tol:
        return True
    # fold-back: distance from the start increases then strictly decreases
    d0 = [g2.path_distance(imgs[0], q) for q in imgs]
    peak = max(range(len(d0)), key=lambda i: d0[i])
    if peak not in (0, len(d0) - 1) and d0[peak] > d0[-1] + tol and d0[peak] > d0[0] + tol:
        return False
    return None


# ---------------------------------------------------------------------------
# small constructors used throughout


def circle_graph(length: float = 1.0, edge_id: str = "c", vertex: str = "v") -> MetricGraph:
    return MetricGraph((vertex,), (Edge(edge_id, vertex, vertex, length),))


def star_graph(n: int, branch_length: float = 1.0) -> MetricGraph:
    verts = ["o"] + [f"t{i}" for i in range(1, n + 1)]
    edges = [Edge(f"b{i}", "o", f"t{i}", branch_length) for i in range(1, n + 1)]
    return MetricGraph(verts, edges)


def interval_graph(length: float = 1.0, edge_id: str = "I") -> MetricGraph:
    return MetricGraph(("v0", "v1"), (Edge(edge_id, "v0", "v1", length),))


def graph_to_spec(g: MetricGraph) -> dict:
    return {
        "vertices": list(g.vertices),
        "edges": [
            {"id": e.id, "from": e.u, "to": e.v, "length": e.length} for e in g.edges
        ],
    }
