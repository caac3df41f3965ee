"""Node layouts, multicast routing trees and the interference/collision graph."""

from dataclasses import dataclass, field

import numpy as np


@dataclass
class Topology:
    positions: np.ndarray  # (n_nodes, 2), meters
    area_side: float
    source_index: int = 0

    def __post_init__(self):
        self.positions = np.asarray(self.positions, dtype=float)
        n = len(self.positions)
        if n < 2:
            raise ValueError("a topology needs at least two nodes")
        if not 0 <= self.source_index < n:
            raise ValueError("source_index out of range")
        if np.any(self.positions < 0) or np.any(self.positions > self.area_side):
            raise ValueError("node outside the deployment area")

    @property
    def n_nodes(self):
        return len(self.positions)


@dataclass(frozen=True)
class Link:
    id: int
    tx: int
    rx: int
    distance: float


@dataclass
class RoutingTree:
    links: list
    parent: list  # parent[node] is the upstream node, -1 at the source
    source: int = 0

    @property
    def n_links(self):
        return len(self.links)

    @property
    def tx(self):
        return np.array([l.tx for l in self.links], dtype=int)

    @property
    def rx(self):
        return np.array([l.rx for l in self.links], dtype=int)

    @property
    def distances(self):
        return np.array([l.distance for l in self.links])


@dataclass
class InterferenceCollisionGraph:
    """Links as vertices; every pair is either colliding or interfering."""

    colliding: np.ndarray  # (n_links, n_links) bool, symmetric, zero diagonal
    interfering: np.ndarray = field(init=False)

    def __post_init__(self):
        c = np.asarray(self.colliding, dtype=bool)
        self.colliding = c
        self.interfering = ~c & ~np.eye(len(c), dtype=bool)

    @property
    def n_links(self):
        return len(self.colliding)

    @property
    def collision_degree(self):
        return self.colliding.sum(axis=1)

    def colliding_neighbors(self, k):
        return np.flatnonzero(self.colliding[k])

    def interfering_neighbors(self, k):
        return np.flatnonzero(self.interfering[k])


def generate_topology(n_nodes, area_side, seed=None, source_index=0,
                      min_separation=0.5, max_tries=100000):
    """Drop ``n_nodes`` uniformly in a square of side ``area_side``.

    Candidate points closer than ``min_separation`` to an accepted node are
    redrawn, which keeps path-loss gains bounded.
    """
    if n_nodes < 2:
        raise ValueError("n_nodes must be >= 2")
    if area_side <= 0:
        raise ValueError("area_side must be positive")
    rng = np.random.default_rng(seed)
    pts = np.empty((n_nodes, 2))
    placed = 0
    tries = 0
    while placed < n_nodes:
        tries += 1
        if tries > max_tries:
            raise ValueError("could not honour min_separation; area too small")
        p = rng.uniform(0.0, area_side, size=2)
        if placed and np.min(np.hypot(*(pts[:placed] - p).T)) < min_separation:
            continue
        pts[placed] = p
        placed += 1
    return Topology(pts, float(area_side), source_index)


def pairwise_distances(points):
    diff = points[:, None, :] - points[None, :, :]
    return np.hypot(diff[..., 0], diff[..., 1])


def build_routing_tree(topology):
    """Euclidean minimum spanning tree grown from the source (Prim).

    Links point away from the source and are numbered in the order they
    join the tree.
    """
    n = topology.n_nodes
    dist = pairwise_distances(topology.positions)
    src = topology.source_index
    in_tree = np.zeros(n, dtype=bool)
    in_tree[src] = True
    best = dist[src].copy()
    via = np.full(n, src)
    parent = [-1] * n
    links = []
    for _ in range(n - 1):
        cand = np.where(in_tree, np.inf, best)
        v = int(np.argmin(cand))
        u = int(via[v])
        parent[v] = u
        links.append(Link(len(links), u, v, float(dist[u, v])))
        in_tree[v] = True
        closer = dist[v] < best
        best = np.where(closer, dist[v], best)
        via = np.where(closer, v, via)
    return RoutingTree(links, parent, src)


def build_icg(tree):
    """Links k, l collide when ``t_k == t_l``, ``t_k == r_l`` or ``t_l == r_k``."""
    tx, rx = tree.tx, tree.rx
    same_tx = tx[:, None] == tx[None, :]
    tx_is_rx = tx[:, None] == rx[None, :]
    col = same_tx | tx_is_rx | tx_is_rx.T
    np.fill_diagonal(col, False)
    return InterferenceCollisionGraph(col)


def channel_gain(sigma1_sq, distance, alpha):
    """``sigma1**2 / d**alpha``."""
    if np.any(np.asarray(distance) <= 0):
        raise ValueError("distance must be positive")
    return sigma1_sq / distance**alpha


def cross_distances(topology, tree):
    """``D[i, k]``: distance from the transmitter of link i to the receiver of link k."""
    pos = topology.positions
    d = pos[tree.tx][:, None, :] - pos[tree.rx][None, :, :]
    return np.hypot(d[..., 0], d[..., 1])


def path_attenuation(distances, alpha):
    """``d**-alpha``, with 0 where the distance is 0.

    A zero distance only arises between colliding links (a transmitter that
    is another link's receiver); those pairs never share a slot.
    """
    d = np.asarray(distances, dtype=float)
    out = np.zeros_like(d)
    np.power(d, -alpha, out=out, where=d > 0)
    return out


def topology_table(topology):
    lines = ["node\tx\ty"]
    for i, (x, y) in enumerate(topology.positions):
        tag = "\tsource" if i == topology.source_index else ""
        lines.append(f"{i}\t{x:.9g}\t{y:.9g}{tag}")
    return "\n".join(lines) + "\n"


def links_table(tree, icg=None):
    head = "link\ttx\trx\tdistance"
    if icg is not None:
        head += "\tcollision_degree"
        deg = icg.collision_degree
    lines = [head]
    for l in tree.links:
        row = f"{l.id}\t{l.tx}\t{l.rx}\t{l.distance:.9g}"
        if icg is not None:
            row += f"\t{deg[l.id]}"
        lines.append(row)
    return "\n".join(lines) + "\n"


def icg_table(icg):
    """Unordered link pairs with their relation (``colliding``/``interfering``)."""
    lines = ["link_a\tlink_b\trelation"]
    n = icg.n_links
    for a in range(n):
        for b in range(a + 1, n):
            rel = "colliding" if icg.colliding[a, b] else "interfering"
            lines.append(f"{a}\t{b}\t{rel}")
    return "\n".join(lines) + "\n"
