"""Per-vertex labels answering heaviest-edge-on-tree-path queries.

Labels come from a recursive separator (centroid) decomposition of each
tree of the forest: every vertex stores, per decomposition level, the
separator of its region and the maximum edge weight on its tree path to
that separator.  Two labels alone decode the heaviest edge weight on the
path between their vertices, or report that the vertices lie in
different trees.
"""

from __future__ import annotations

from dataclasses import dataclass


DIFFERENT_COMPONENTS = object()


@dataclass
class FlowLabel:
    vertex: int
    entries: list  # (separator id, level, max weight on path to separator)
    component: int  # root separator of this vertex's tree

    def words(self) -> int:
        return 2 * max(1, len(self.entries))


def _subtree_sizes(adj, root, region):
    order, parent = [root], {root: None}
    i = 0
    while i < len(order):
        u = order[i]
        i += 1
        for v, _ in adj[u]:
            if v in region and v != parent[u]:
                parent[v] = u
                order.append(v)
    size = {u: 1 for u in order}
    for u in reversed(order[1:]):
        size[parent[u]] += size[u]
    return order, parent, size


def _centroid(adj, region):
    root = min(region)
    order, parent, size = _subtree_sizes(adj, root, region)
    total = len(order)
    best = None
    for u in order:
        heaviest = total - size[u]
        for v, _ in adj[u]:
            if v in region and parent.get(v) == u:
                heaviest = max(heaviest, size[v])
        if best is None or (heaviest, u) < best:
            best = (heaviest, u)
    return best[1]


def flow_label_marker(n, forest_edges) -> dict:
    """Build a FlowLabel for every vertex 0..n-1 from an acyclic edge set."""
    adj = [[] for _ in range(n)]
    for u, v, w in forest_edges:
        adj[u].append((v, w))
        adj[v].append((u, w))

    # split into trees
    seen = [False] * n
    labels = {}
    n_trees = 0
    for s in range(n):
        if seen[s]:
            continue
        n_trees += 1
        tree = [s]
        seen[s] = True
        i = 0
        while i < len(tree):
            u = tree[i]
            i += 1
            for v, _ in adj[u]:
                if not seen[v]:
                    seen[v] = True
                    tree.append(v)
        entries = {u: [] for u in tree}
        root_sep = None
        # (region, level) work list
        stack = [(set(tree), 0)]
        while stack:
            region, level = stack.pop()
            c = _centroid(adj, region)
            if level == 0:
                root_sep = c
            # max weight from every region vertex to the separator
            maxw = {c: 0}
            frontier = [c]
            while frontier:
                u = frontier.pop()
                for v, w in adj[u]:
                    if v in region and v not in maxw:
                        maxw[v] = max(maxw[u], w)
                        frontier.append(v)
            for u in region:
                entries[u].append((c, level, maxw[u]))
            region.discard(c)
            # split remaining region into connected pieces
            while region:
                start = next(iter(region))
                piece = {start}
                frontier = [start]
                while frontier:
                    u = frontier.pop()
                    for v, _ in adj[u]:
                        if v in region and v not in piece:
                            piece.add(v)
                            frontier.append(v)
                region -= piece
                stack.append((piece, level + 1))
        for u in tree:
            labels[u] = FlowLabel(u, entries[u], root_sep)
    if len(forest_edges) != n - n_trees:
        raise ValueError("cyclic input")
    return labels


def flow_label_decode(lu: FlowLabel, lv: FlowLabel):
    """Heaviest edge weight on the tree path between the two labeled
    vertices, or DIFFERENT_COMPONENTS."""
    if lu.component != lv.component:
        return DIFFERENT_COMPONENTS
    if lu.vertex == lv.vertex:
        return 0
    # entries are ordered by level; the deepest shared separator is the one
    # right before the two vertices part into different regions
    best = None
    for (su, _, wu), (sv, _, wv) in zip(lu.entries, lv.entries):
        if su != sv:
            break
        best = max(wu, wv)
    return best
