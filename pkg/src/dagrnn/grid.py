"""Grid neighbourhood graphs and their four directional acyclic orientations.

Vertex ``(i, j)`` of an ``H x W`` grid has id ``i * W + j``. Each direction
orients every grid edge "with the scan": the SE graph points every edge
down and/or right, SW down and/or left, NW up and/or left, NE up and/or
right. Under the 8-neighbourhood a direction only carries the diagonal
that runs along its scan (SE/NW the main diagonal, SW/NE the
anti-diagonal), so interior vertices have three predecessors.
"""
from collections import deque
from dataclasses import dataclass
from enum import Enum
from functools import cached_property

import numpy as np

from .errors import ConfigurationError


class Neighborhood(Enum):
    N4 = 4
    N8 = 8

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        try:
            return cls(int(str(value).upper().lstrip("N")))
        except ValueError:
            raise ConfigurationError(f"unknown neighborhood {value!r}; use 4 or 8") from None


class Direction(Enum):
    SE = "SE"
    SW = "SW"
    NW = "NW"
    NE = "NE"


DIRECTIONS = (Direction.SE, Direction.SW, Direction.NW, Direction.NE)

# (row step, col step) of the scan each direction follows
_SCAN = {
    Direction.SE: (1, 1),
    Direction.SW: (1, -1),
    Direction.NW: (-1, -1),
    Direction.NE: (-1, 1),
}


@dataclass(frozen=True)
class GridSpec:
    height: int
    width: int
    neighborhood: Neighborhood = Neighborhood.N8

    def __post_init__(self):
        if int(self.height) < 1 or int(self.width) < 1:
            raise ConfigurationError(f"grid extents must be positive, got {self.height}x{self.width}")
        object.__setattr__(self, "neighborhood", Neighborhood.parse(self.neighborhood))

    @property
    def size(self):
        return self.height * self.width

    def vid(self, i, j):
        return i * self.width + j

    def coords(self, v):
        return divmod(v, self.width)


def ucg_edges(spec):
    """Undirected neighbour pairs ``(u, v)`` with ``u < v``."""
    H, W = spec.height, spec.width
    offsets = [(0, 1), (1, 0)]
    if spec.neighborhood is Neighborhood.N8:
        offsets += [(1, 1), (1, -1)]
    edges = set()
    for i in range(H):
        for j in range(W):
            for di, dj in offsets:
                a, b = i + di, j + dj
                if 0 <= a < H and 0 <= b < W:
                    u, v = spec.vid(i, j), spec.vid(a, b)
                    edges.add((min(u, v), max(u, v)))
    return edges


@dataclass(frozen=True, eq=False)
class GridDag:
    spec: GridSpec
    direction: Direction
    predecessors: tuple
    successors: tuple
    topo_order: tuple

    @property
    def num_vertices(self):
        return self.spec.size

    def edges(self):
        return [(u, v) for v, preds in enumerate(self.predecessors) for u in preds]

    def sources(self):
        return [v for v, preds in enumerate(self.predecessors) if not preds]

    @cached_property
    def levels(self):
        """Vertices grouped by longest-path depth from the source.

        Vertices in one level have no edges between them, so a level can be
        updated in one vectorised step once all earlier levels are done.
        """
        depth = np.zeros(self.num_vertices, dtype=np.int64)
        for v in self.topo_order:
            preds = self.predecessors[v]
            if preds:
                depth[v] = 1 + max(depth[u] for u in preds)
        return tuple(np.flatnonzero(depth == d) for d in range(int(depth.max()) + 1))

    @cached_property
    def pred_table(self):
        """``[N, P]`` predecessor ids padded with ``N`` (an always-zero slot)."""
        n = self.num_vertices
        width = max((len(p) for p in self.predecessors), default=0)
        table = np.full((n, max(width, 1)), n, dtype=np.int64)
        for v, preds in enumerate(self.predecessors):
            table[v, : len(preds)] = preds
        return table

    def write_edgelist(self, path):
        with open(path, "w") as fh:
            for u, v in sorted(self.edges()):
                fh.write(f"{u} {v}\n")


def decompose(spec, direction):
    """Orient the grid graph of ``spec`` along ``direction``."""
    direction = Direction(direction)
    H, W = spec.height, spec.width
    si, sj = _SCAN[direction]
    back = [(-si, 0), (0, -sj)]
    if spec.neighborhood is Neighborhood.N8:
        back.append((-si, -sj))

    preds = []
    for i in range(H):
        for j in range(W):
            p = []
            for di, dj in back:
                a, b = i + di, j + dj
                if 0 <= a < H and 0 <= b < W:
                    p.append(spec.vid(a, b))
            preds.append(tuple(sorted(p)))
    succs = [[] for _ in range(H * W)]
    for v, p in enumerate(preds):
        for u in p:
            succs[u].append(v)

    rows = range(H) if si > 0 else range(H - 1, -1, -1)
    cols = list(range(W) if sj > 0 else range(W - 1, -1, -1))
    order = tuple(spec.vid(i, j) for i in rows for j in cols)
    return GridDag(spec, direction, tuple(preds), tuple(tuple(sorted(s)) for s in succs), order)


def decompose_all(spec):
    return {d: decompose(spec, d) for d in DIRECTIONS}


def is_acyclic(dag):
    """Kahn's algorithm, independent of the stored topological order."""
    indeg = [len(p) for p in dag.predecessors]
    queue = deque(v for v, d in enumerate(indeg) if d == 0)
    seen = 0
    while queue:
        u = queue.popleft()
        seen += 1
        for v in dag.successors[u]:
            indeg[v] -= 1
            if indeg[v] == 0:
                queue.append(v)
    return seen == dag.num_vertices


def is_topological(dag, order):
    order = list(order)
    if sorted(order) != list(range(dag.num_vertices)):
        return False
    pos = {v: k for k, v in enumerate(order)}
    return all(pos[u] < pos[v] for u, v in dag.edges())


def is_consistent(dag):
    pairs_pred = {(u, v) for v, ps in enumerate(dag.predecessors) for u in ps}
    pairs_succ = {(u, v) for u, ss in enumerate(dag.successors) for v in ss}
    return pairs_pred == pairs_succ


def reachable_from(dag, src):
    seen = {src}
    queue = deque([src])
    while queue:
        u = queue.popleft()
        for v in dag.successors[u]:
            if v not in seen:
                seen.add(v)
                queue.append(v)
    return seen


def shortest_path_length(dag, src, dst):
    """Number of edges on the shortest directed path, or ``None`` if unreachable."""
    dist = {src: 0}
    queue = deque([src])
    while queue:
        u = queue.popleft()
        if u == dst:
            return dist[u]
        for v in dag.successors[u]:
            if v not in dist:
                dist[v] = dist[u] + 1
                queue.append(v)
    return None


def check_cover(spec):
    ucg = ucg_edges(spec)
    oriented = set()
    for d in DIRECTIONS:
        oriented.update(decompose(spec, d).edges())
    undirected = {(min(u, v), max(u, v)) for u, v in oriented}
    both_ways = all((u, v) in oriented and (v, u) in oriented for u, v in ucg)
    return undirected == ucg and both_ways


def check_reachability(spec):
    dags = [decompose(spec, d) for d in DIRECTIONS]
    n = spec.size
    reach = [set() for _ in range(n)]
    for dag in dags:
        for u in range(n):
            reach[u] |= reachable_from(dag, u)
    return all(len(r) == n for r in reach)
