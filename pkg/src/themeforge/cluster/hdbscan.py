"""HDBSCAN over dense Euclidean distances.

Pipeline: core distances -> mutual reachability graph -> Prim MST ->
single-linkage merge tree (n-ary on tied levels) -> condensed tree ->
excess-of-mass selection.
Quadratic memory, which is fine for page-level corpora of a few thousand
documents.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import pdist, squareform

from ..errors import ParameterError
from .embed import EmbeddingMatrix

NOISE = -1
# Stands in for 1/0 so stabilities stay finite when points coincide.
_MAX_LAMBDA = 1e300


@dataclass(frozen=True)
class ClusterLabels:
    labels: np.ndarray
    n_clusters: int

    def __post_init__(self):
        object.__setattr__(self, "labels", np.asarray(self.labels, dtype=np.int64))

    def members(self, label: int) -> np.ndarray:
        return np.flatnonzero(self.labels == label)

    def sizes(self) -> dict[int, int]:
        return {c: int(np.sum(self.labels == c)) for c in range(self.n_clusters)}


@dataclass(frozen=True)
class CondensedEdge:
    parent: int
    child: int
    lambda_val: float
    child_size: int


def core_distances(dist: np.ndarray, min_samples: int) -> np.ndarray:
    """Distance from each point to its ``min_samples``-th nearest other point."""
    k = min(min_samples, dist.shape[0] - 1)
    return np.sort(dist, axis=1)[:, k]


def mutual_reachability(dist: np.ndarray, core: np.ndarray) -> np.ndarray:
    mr = np.maximum(dist, np.maximum.outer(core, core))
    np.fill_diagonal(mr, 0.0)
    return mr


def prim_mst(weights: np.ndarray) -> np.ndarray:
    """Minimum spanning tree of a dense graph as ``(a, b, w)`` rows, sorted by ``w``."""
    n = weights.shape[0]
    in_tree = np.zeros(n, dtype=bool)
    best = np.full(n, np.inf)
    source = np.zeros(n, dtype=np.int64)
    edges = np.empty((max(n - 1, 0), 3))
    current = 0
    in_tree[0] = True
    for step in range(n - 1):
        row = weights[current]
        closer = ~in_tree & (row < best)
        best[closer] = row[closer]
        source[closer] = current
        masked = np.where(in_tree, np.inf, best)
        nxt = int(np.argmin(masked))
        edges[step] = (source[nxt], nxt, best[nxt])
        in_tree[nxt] = True
        current = nxt
    order = np.argsort(edges[:, 2], kind="stable")
    return edges[order]


@dataclass(frozen=True)
class MergeTree:
    """Single-linkage hierarchy with simultaneous merges kept n-ary.

    Leaves are points ``0..n-1``; internal node ``i`` sits at ``n + i``.
    All MST edges of one exact weight are merged together, which makes the
    tree independent of input order when mutual reachability produces ties
    (common, since many pairs share a core distance).
    """

    n: int
    children: tuple[tuple[int, ...], ...]
    level: tuple[float, ...]
    size: tuple[int, ...]

    @property
    def root(self) -> int:
        return self.n + len(self.children) - 1

    def node_size(self, node: int) -> int:
        return 1 if node < self.n else self.size[node - self.n]

    def leaves(self, node: int) -> list[int]:
        stack, out = [node], []
        while stack:
            x = stack.pop()
            if x < self.n:
                out.append(x)
            else:
                stack.extend(self.children[x - self.n])
        return sorted(out)


def single_linkage(mst: np.ndarray, n: int) -> MergeTree:
    parent = list(range(n))
    node_of = list(range(n))

    def find(x):
        root = x
        while parent[root] != root:
            root = parent[root]
        while parent[x] != root:
            parent[x], x = root, parent[x]
        return root

    children: list[tuple[int, ...]] = []
    level: list[float] = []
    size: list[int] = []
    sizes = [1] * n
    i = 0
    while i < len(mst):
        w = mst[i, 2]
        j = i
        while j < len(mst) and mst[j, 2] == w:
            j += 1
        before = {}
        for a, b, _ in mst[i:j]:
            for p in (int(a), int(b)):
                r = find(p)
                before.setdefault(r, node_of[r])
        for a, b, _ in mst[i:j]:
            ra, rb = find(int(a)), find(int(b))
            if ra != rb:
                parent[rb] = ra
                sizes[ra] += sizes[rb]
        groups: dict[int, list[int]] = {}
        for r, node in before.items():
            groups.setdefault(find(r), []).append(node)
        for root in sorted(groups, key=lambda r: min(groups[r])):
            kids = tuple(sorted(groups[root]))
            children.append(kids)
            level.append(float(w))
            size.append(sizes[root])
            node_of[root] = n + len(children) - 1
        i = j
    return MergeTree(n, tuple(children), tuple(level), tuple(size))


def condense_tree(tree: MergeTree, min_cluster_size: int) -> list[CondensedEdge]:
    """Keep only splits into two or more clusters of size >= ``min_cluster_size``.

    Cluster ids start at ``n`` (the root); points keep their indices.
    """
    n = tree.n
    edges: list[CondensedEdge] = []
    relabel = {tree.root: n}
    next_label = n + 1
    queue = [tree.root]
    while queue:
        node = queue.pop(0)
        dist = tree.level[node - n]
        lam = min(1.0 / dist, _MAX_LAMBDA) if dist > 0 else _MAX_LAMBDA
        parent_label = relabel[node]
        kids = tree.children[node - n]
        big = [c for c in kids if tree.node_size(c) >= min_cluster_size]
        for c in kids:
            if c in big:
                continue
            for p in tree.leaves(c):
                edges.append(CondensedEdge(parent_label, p, lam, 1))
        if len(big) >= 2:
            for c in big:
                relabel[c] = next_label
                edges.append(CondensedEdge(parent_label, next_label, lam, tree.node_size(c)))
                next_label += 1
        elif big:
            relabel[big[0]] = parent_label
        queue.extend(c for c in big if c >= n)
    return edges


def cluster_stability(edges: list[CondensedEdge], n: int) -> dict[int, float]:
    birth = {n: 0.0}
    for e in edges:
        if e.child >= n:
            birth[e.child] = e.lambda_val
    stability = {c: 0.0 for c in birth}
    for e in edges:
        stability[e.parent] += (e.lambda_val - birth[e.parent]) * e.child_size
    return stability


def select_clusters(edges: list[CondensedEdge], n: int, allow_single_cluster: bool = False) -> set[int]:
    """Excess-of-mass selection over the condensed tree."""
    stability = cluster_stability(edges, n)
    children: dict[int, list[int]] = {c: [] for c in stability}
    for e in edges:
        if e.child >= n:
            children[e.parent].append(e.child)

    selected = {c: True for c in stability}
    # Children always carry larger ids than their parent.
    for c in sorted(stability, reverse=True):
        if c == n and not allow_single_cluster:
            continue
        sub = sum(stability[k] for k in children[c])
        if children[c] and sub > stability[c]:
            selected[c] = False
            stability[c] = sub
        else:
            stack = list(children[c])
            while stack:
                x = stack.pop()
                selected[x] = False
                stack.extend(children[x])
    if not allow_single_cluster:
        selected[n] = False
        if not children[n]:
            return set()
    return {c for c, keep in selected.items() if keep}


def _label_points(edges: list[CondensedEdge], n: int, selected: set[int]) -> np.ndarray:
    up = {e.child: e.parent for e in edges}
    owner = np.full(n, NOISE, dtype=np.int64)
    for p in range(n):
        x = up.get(p)
        while x is not None:
            if x in selected:
                owner[p] = x
                break
            x = up.get(x)
    return owner


def hdbscan(
    points,
    min_cluster_size: int = 5,
    min_samples: int | None = None,
    allow_single_cluster: bool = False,
) -> ClusterLabels:
    """Cluster rows of ``points``; unclustered points get label -1.

    ``min_samples`` defaults to ``min_cluster_size - 1``. Clusters are
    numbered by decreasing size, ties broken by lowest member index.
    """
    if min_cluster_size < 2:
        raise ParameterError(f"min_cluster_size must be >= 2, got {min_cluster_size}")
    if min_samples is None:
        min_samples = min_cluster_size - 1
    if min_samples < 1:
        raise ParameterError(f"min_samples must be >= 1, got {min_samples}")
    X = points.vectors if isinstance(points, EmbeddingMatrix) else np.asarray(points, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    n = X.shape[0]
    if n < 1:
        raise ParameterError("need at least one point")
    if n < min_cluster_size:
        return ClusterLabels(np.full(n, NOISE), 0)

    dist = squareform(pdist(X))
    mr = mutual_reachability(dist, core_distances(dist, min_samples))
    tree = single_linkage(prim_mst(mr), n)
    edges = condense_tree(tree, min_cluster_size)
    owner = _label_points(edges, n, select_clusters(edges, n, allow_single_cluster))

    found = [c for c in np.unique(owner) if c != NOISE]
    found.sort(key=lambda c: (-int(np.sum(owner == c)), int(np.flatnonzero(owner == c)[0])))
    labels = np.full(n, NOISE, dtype=np.int64)
    for new, c in enumerate(found):
        labels[owner == c] = new
    return ClusterLabels(labels, len(found))
