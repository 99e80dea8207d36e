"""Constant-round communication primitives.

Distributed sample-sort, aggregation trees, dissemination, broadcast, and
arranging each vertex's outgoing edges on consecutive machines.  Every
primitive executes real message rounds on the cluster and then pads with
empty rounds up to a fixed per-primitive constant (a function of gamma
only), so algorithm round counts are structurally constant.
"""

from __future__ import annotations

import math
from bisect import bisect_left, bisect_right
from dataclasses import dataclass, field

from .simcore import LARGE, CapacityError, Cluster, MachineId


# ---------------------------------------------------------------------------
# round-charge constants (functions of gamma only)


def vertex_tree_depth(gamma: float) -> int:
    """Depth bound for an aggregation tree over one vertex's machine range
    (range length <= n^(1-gamma))."""
    return math.ceil((1 - gamma) / gamma) + 1


def global_tree_depth(gamma: float) -> int:
    """Depth bound for a tree over all K <= n^(2-gamma) small machines."""
    return math.ceil((2 - gamma) / gamma)


def broadcast_rounds(gamma):
    return global_tree_depth(gamma) + 1


def aggregate_rounds(gamma):
    return global_tree_depth(gamma) + 1


def disseminate_rounds(gamma, known_ranges=True):
    d = global_tree_depth(gamma) + 1
    return d if known_ranges else 2 * d


def sort_rounds(gamma):
    # sample + splitter broadcast + group route + group sample +
    # group splitters + final route + summary
    return broadcast_rounds(gamma) + 6


def arrange_rounds(gamma):
    return sort_rounds(gamma)


QUERY_ROUNDS = 2


def _pad(cluster: Cluster, start: int, target: int):
    used = cluster.sink_rounds - start
    if used > target:
        raise AssertionError(
            f"primitive used {used} rounds, exceeding its fixed charge {target}"
        )
    for _ in range(target - used):
        cluster.empty_round()


def branching(cluster: Cluster) -> int:
    return max(2, int(cluster.config.n ** cluster.config.gamma))


# ---------------------------------------------------------------------------
# machine trees


@dataclass
class AggregationTree:
    """b-ary tree over a contiguous machine range; node = first machine of
    its range, so a chain of nodes shares one physical machine and the
    in-chain hops are free."""

    lo: int
    hi: int
    b: int
    levels: list = field(default_factory=list)  # levels[r] = [(lo, hi), ...]

    @classmethod
    def build(cls, lo, hi, b):
        nodes = [(i, i) for i in range(lo, hi + 1)]
        levels = [nodes]
        while len(nodes) > 1:
            nodes = [
                (nodes[j][0], nodes[min(j + b, len(nodes)) - 1][1])
                for j in range(0, len(nodes), b)
            ]
            levels.append(nodes)
        return cls(lo, hi, b, levels)

    @property
    def depth(self) -> int:
        return len(self.levels) - 1

    @property
    def root(self) -> int:
        return self.levels[-1][0][0]

    def parent_rep(self, level, idx):
        return self.levels[level + 1][idx // self.b][0]


def _mid(i: int) -> MachineId:
    return MachineId("S", i)


# ---------------------------------------------------------------------------
# broadcast


def tree_broadcast(cluster: Cluster, value, pad=True):
    """Large machine sends `value` to every small machine down the global
    tree; returns nothing (value is known host-side, traffic is metered)."""
    start = cluster.sink_rounds
    K = len(cluster.small_ids)
    tree = AggregationTree.build(1, K, branching(cluster))
    cluster.round([(LARGE, _mid(tree.root), value)])
    for level in range(tree.depth, 0, -1):
        sends = []
        for idx, (lo, hi) in enumerate(tree.levels[level]):
            rep = lo
            for clo, chi in _children(tree, level, idx):
                if clo != rep:  # first child shares the machine: free
                    sends.append((_mid(rep), _mid(clo), value))
        cluster.round(sends)
    if pad:
        _pad(cluster, start, broadcast_rounds(cluster.config.gamma))


def _children(tree, level, idx):
    lo, hi = tree.levels[level][idx]
    return [nd for nd in tree.levels[level - 1] if lo <= nd[0] and nd[1] <= hi]


# ---------------------------------------------------------------------------
# sorting


@dataclass
class SortedLayout:
    counts: list  # per small machine (index 0 = machine 1)
    boundaries: list  # per machine: (min_sort_key, max_sort_key) or None
    extras: list  # per machine summarize() payloads (or None)


def _even_sample(seq, k):
    if not seq or k <= 0:
        return []
    if len(seq) <= k:
        return list(seq)
    step = len(seq) / k
    return [seq[min(len(seq) - 1, int(i * step))] for i in range(k)]


def _pick_splitters(weighted, parts):
    """weighted: list of (count, [sorted keys]); pick parts-1 quantile keys."""
    pool = []
    for count, keys in weighted:
        if not keys:
            continue
        w = count / len(keys)
        pool.extend((k, w) for k in keys)
    pool.sort(key=lambda t: t[0])
    total = sum(w for _, w in pool)
    if total == 0 or parts <= 1:
        return []
    splitters, acc, j = [], 0.0, 0
    for i in range(1, parts):
        threshold = i * total / parts
        while j < len(pool) and acc + pool[j][1] < threshold:
            acc += pool[j][1]
            j += 1
        splitters.append(pool[min(j, len(pool) - 1)][0])
    return splitters


def het_sort(cluster: Cluster, state_key="E", key=None, summarize=None) -> SortedLayout:
    """Globally sort the records stored under state_key on the small
    machines (two-phase sample sort; fixed round charge).

    Total order is (key(record), record).  `summarize(shard)` may attach a
    per-machine payload to the final summary message to the large machine.
    """
    start = cluster.sink_rounds
    gamma = cluster.config.gamma
    K = len(cluster.small_ids)
    b = branching(cluster)
    keyf = key or (lambda r: r)
    skey = lambda r: (keyf(r), r)

    # local sort + seeded-position sample to the large machine
    sends = []
    for i, mid in enumerate(cluster.small_ids, start=1):
        mach = cluster.machines[mid]
        shard = sorted(mach.state.get(state_key) or [], key=skey)
        mach.put(state_key, shard)
        sample = _even_sample([skey(r) for r in shard], b)
        sends.append((mid, LARGE, [len(shard)] + sample))
    inbox = cluster.round(sends)

    samples = [(p[0], p[1:]) for _, p in inbox.get(LARGE, [])]
    g = max(1, math.ceil(math.sqrt(K)))
    size = math.ceil(K / g)
    groups = [(lo, min(lo + size - 1, K)) for lo in range(1, K + 1, size)]
    gsplit = _pick_splitters(samples, len(groups))
    tree_broadcast(cluster, gsplit)

    # route each record to a machine of its target group (balanced by
    # sender index)
    sends = []
    for i, mid in enumerate(cluster.small_ids, start=1):
        mach = cluster.machines[mid]
        shard = mach.pop(state_key) or []
        buckets = {}
        for r in shard:
            gi = bisect_right(gsplit, skey(r))
            lo, hi = groups[gi]
            dst = lo + (i % (hi - lo + 1))
            buckets.setdefault(dst, []).append(r)
        for dst, recs in buckets.items():
            sends.append((mid, _mid(dst), recs))
    inbox = cluster.round(sends)
    for i, mid in enumerate(cluster.small_ids, start=1):
        recs = [r for _, batch in inbox.get(mid, []) for r in batch]
        recs.sort(key=skey)
        cluster.machines[mid].put(state_key, recs)

    # phase 2: per-group splitters chosen by the group leader
    sends = []
    for lo, hi in groups:
        for i in range(lo, hi + 1):
            shard = cluster.machines[_mid(i)].state.get(state_key) or []
            sample = _even_sample([skey(r) for r in shard], 2 * (hi - lo + 1))
            sends.append((_mid(i), _mid(lo), [len(shard)] + sample))
    inbox = cluster.round(sends)

    leader_split = {}
    sends = []
    for lo, hi in groups:
        samples = [(p[0], p[1:]) for _, p in inbox.get(_mid(lo), [])]
        split = _pick_splitters(samples, hi - lo + 1)
        leader_split[lo] = split
        for i in range(lo, hi + 1):
            if i != lo:
                sends.append((_mid(lo), _mid(i), split))
    cluster.round(sends)

    sends = []
    for lo, hi in groups:
        split = leader_split[lo]
        for i in range(lo, hi + 1):
            mach = cluster.machines[_mid(i)]
            shard = mach.pop(state_key) or []
            buckets = {}
            for r in shard:
                dst = lo + bisect_right(split, skey(r))
                buckets.setdefault(dst, []).append(r)
            for dst, recs in buckets.items():
                sends.append((_mid(i), _mid(dst), recs))
    inbox = cluster.round(sends)

    sends = []
    for i, mid in enumerate(cluster.small_ids, start=1):
        recs = [r for _, batch in inbox.get(mid, []) for r in batch]
        recs.sort(key=skey)
        cluster.machines[mid].put(state_key, recs)
        payload = [len(recs)]
        if recs:
            payload.append((skey(recs[0]), skey(recs[-1])))
        if summarize is not None:
            payload.append(summarize(recs))
        sends.append((mid, LARGE, payload))
    inbox = cluster.round(sends)

    counts, boundaries, extras = [0] * K, [None] * K, [None] * K
    for src, payload in inbox.get(LARGE, []):
        i = src.index - 1
        counts[i] = payload[0]
        j = 1
        if payload[0]:
            boundaries[i] = payload[1]
            j = 2
        if summarize is not None:
            extras[i] = payload[j] if len(payload) > j else None
    _pad(cluster, start, sort_rounds(gamma))
    return SortedLayout(counts, boundaries, extras)


# ---------------------------------------------------------------------------
# aggregation


def aggregate(cluster: Cluster, state_key, part_fn, map_fn, reduce_fn,
              result_key=None):
    """Tree-aggregate f over per-part multisets stored on small machines.

    Requires parts to be contiguous in the machine order (run het_sort
    first if they are not).  reduce_fn takes a list of values/partials and
    must satisfy f({f(X1),...,f(Xk)}) = f(X1 u ... u Xk).  Returns
    {part: value} computed at the large machine.
    """
    start = cluster.sink_rounds
    K = len(cluster.small_ids)
    tree = AggregationTree.build(1, K, branching(cluster))
    results = {}

    # node payloads: {node: (partials dict, min_part, max_part)}
    data = {}
    for i, mid in enumerate(cluster.small_ids, start=1):
        items = cluster.machines[mid].state.get(state_key) or []
        partials = {}
        for r in items:
            partials.setdefault(part_fn(r), []).append(map_fn(r))
        reduced = {p: reduce_fn(vals) for p, vals in partials.items()}
        if reduced:
            parts = sorted(reduced)
            data[(0, i - 1)] = (reduced, parts[0], parts[-1])

    for level in range(tree.depth + 1):
        sends = []
        nxt = {}
        for idx in range(len(tree.levels[level])):
            node = data.get((level, idx))
            if node is None:
                continue
            reduced, pmin, pmax = node
            rep = tree.levels[level][idx][0]
            interior = {p: v for p, v in reduced.items() if pmin < p < pmax}
            boundary = {p: v for p, v in reduced.items() if p == pmin or p == pmax}
            if interior:
                sends.append((_mid(rep), LARGE, interior))
            if level == tree.depth:
                if boundary:
                    sends.append((_mid(rep), LARGE, boundary))
            else:
                pidx = idx // tree.b
                prep = tree.parent_rep(level, idx)
                slot = nxt.setdefault(pidx, {})
                for p, v in boundary.items():
                    slot.setdefault(p, []).append(v)
                if prep != rep and boundary:
                    sends.append((_mid(rep), _mid(prep), boundary))
        inbox = cluster.round(sends)
        for _, payload in inbox.get(LARGE, []):
            for p, v in payload.items():
                results.setdefault(p, []).append(v)
        if level < tree.depth:
            for pidx, slot in nxt.items():
                merged = {p: reduce_fn(vs) if len(vs) > 1 else vs[0]
                          for p, vs in slot.items()}
                parts = sorted(merged)
                data[(level + 1, pidx)] = (merged, parts[0], parts[-1])

    out = {p: reduce_fn(vs) if len(vs) > 1 else vs[0] for p, vs in results.items()}
    if result_key is not None:
        cluster.large.put(result_key, out)
    _pad(cluster, start, aggregate_rounds(cluster.config.gamma))
    return out


# ---------------------------------------------------------------------------
# dissemination


def disseminate(cluster: Cluster, values: dict, machine_ranges=None,
                state_key=None):
    """Deliver values[i] to every small machine whose stored items include
    part i.  machine_ranges maps machine index -> (min part, max part); if
    None, ranges are first computed with an up-phase over the tree.
    Requires parts contiguous in machine order.  Returns
    {machine index: {part: value}}.
    """
    start = cluster.sink_rounds
    gamma = cluster.config.gamma
    K = len(cluster.small_ids)
    tree = AggregationTree.build(1, K, branching(cluster))
    if machine_ranges is None:
        raise ValueError("disseminate requires per-machine part ranges; "
                         "arrange or sort the parts first")

    parts_sorted = sorted(values)
    node_range = {}
    for idx, (lo, hi) in enumerate(tree.levels[0]):
        node_range[(0, idx)] = machine_ranges.get(lo)
    for level in range(1, tree.depth + 1):
        for idx in range(len(tree.levels[level])):
            rs = [
                node_range.get((level - 1, c))
                for c in range(idx * tree.b,
                               min((idx + 1) * tree.b, len(tree.levels[level - 1])))
            ]
            rs = [r for r in rs if r is not None]
            node_range[(level, idx)] = (
                (min(r[0] for r in rs), max(r[1] for r in rs)) if rs else None
            )

    def overlap(rng):
        if rng is None:
            return {}
        lo = bisect_left(parts_sorted, rng[0])
        hi = bisect_right(parts_sorted, rng[1])
        return {p: values[p] for p in parts_sorted[lo:hi]}

    # down-phase: large -> root -> ... -> leaves, filtered per subtree
    top = node_range[(tree.depth, 0)]
    payloads = {(tree.depth, 0): overlap(top)}
    cluster.round(
        [(LARGE, _mid(tree.root), payloads[(tree.depth, 0)])]
        if payloads[(tree.depth, 0)]
        else []
    )
    for level in range(tree.depth, 0, -1):
        sends = []
        nxt = {}
        for idx in range(len(tree.levels[level])):
            have = payloads.get((level, idx))
            if not have:
                continue
            rep = tree.levels[level][idx][0]
            for c in range(idx * tree.b,
                           min((idx + 1) * tree.b, len(tree.levels[level - 1]))):
                crng = node_range[(level - 1, c)]
                if crng is None:
                    continue
                sub = {p: v for p, v in have.items() if crng[0] <= p <= crng[1]}
                if not sub:
                    continue
                nxt[(level - 1, c)] = sub
                crep = tree.levels[level - 1][c][0]
                if crep != rep:
                    sends.append((_mid(rep), _mid(crep), sub))
        cluster.round(sends)
        payloads = nxt

    delivered = {}
    for idx in range(len(tree.levels[0])):
        got = payloads.get((0, idx))
        if got:
            i = tree.levels[0][idx][0]
            delivered[i] = got
            if state_key is not None:
                cluster.machines[_mid(i)].put(state_key, got)
    _pad(cluster, start, disseminate_rounds(gamma, known_ranges=True))
    return delivered


# ---------------------------------------------------------------------------
# arranging nodes


@dataclass
class Arranged:
    layout: SortedLayout
    deg_out: dict  # vertex -> out-degree over directed copies
    m_first: dict  # vertex -> first machine index holding its edges
    slices: dict  # vertex -> [(machine index, count here), ...]


def arrange_nodes(cluster: Cluster, state_key="E", dst_key="D", key=None) -> Arranged:
    """Make directed copies of every stored edge and sort them so each
    vertex's outgoing edges sit on consecutive machines; the large machine
    learns M_first(v), deg_out(v), and the per-machine slice counts.

    `key(directed_record) -> comparable` must order primarily by source
    vertex (default: the record itself, i.e. by (source, target, ...)).
    """
    for mid in cluster.small_ids:
        mach = cluster.machines[mid]
        es = mach.state.get(state_key) or []
        directed = list(es) + [(e[1], e[0]) + tuple(e[2:]) for e in es]
        mach.put(dst_key, directed)

    def counts_by_vertex(shard):
        out = []
        for r in shard:
            if out and out[-1][0] == r[0]:
                out[-1][1] += 1
            else:
                out.append([r[0], 1])
        return [tuple(t) for t in out]

    layout = het_sort(cluster, state_key=dst_key, key=key, summarize=counts_by_vertex)
    deg_out, m_first, slices = {}, {}, {}
    for i, extra in enumerate(layout.extras, start=1):
        for v, cnt in extra or []:
            deg_out[v] = deg_out.get(v, 0) + cnt
            m_first.setdefault(v, i)
            slices.setdefault(v, []).append((i, cnt))
    return Arranged(layout, deg_out, m_first, slices)


def query_k_lightest(cluster: Cluster, arranged: Arranged, k_of: dict,
                     dst_key="D") -> dict:
    """Collection protocol on an arranged layout: the large machine asks
    each machine holding part of v's first k_of[v] outgoing edges for its
    share (queries (v, k)) and gathers the replies.  2 rounds."""
    plans = {}
    for v, k in k_of.items():
        left = k
        for mi, cnt in arranged.slices.get(v, []):
            if left <= 0:
                break
            take = min(left, cnt)
            plans.setdefault(mi, []).append((v, take))
            left -= take
    cluster.round([(LARGE, _mid(mi), qs) for mi, qs in plans.items()])

    sends = []
    for mi, qs in plans.items():
        shard = cluster.machines[_mid(mi)].state.get(dst_key) or []
        by_v = {}
        for r in shard:
            by_v.setdefault(r[0], []).append(r)
        reply = []
        for v, take in qs:
            reply.extend(by_v.get(v, [])[:take])
        sends.append((_mid(mi), LARGE, reply))
    inbox = cluster.round(sends)

    collected = {}
    for _, reply in inbox.get(LARGE, []):
        for r in reply:
            collected.setdefault(r[0], []).append(r)
    return collected


# ---------------------------------------------------------------------------
# small helpers with fixed 1-round charges


def gather_to_large(cluster: Cluster, state_key, select=None):
    """Each small machine ships (a selection of) its stored items to the
    large machine in one round; returns the combined list."""
    sends = []
    for mid in cluster.small_ids:
        items = cluster.machines[mid].state.get(state_key) or []
        if select is not None:
            items = [r for r in items if select(r)]
        if items:
            sends.append((mid, LARGE, items))
    inbox = cluster.round(sends)
    out = []
    for _, items in inbox.get(LARGE, []):
        out.extend(items)
    return out


def scatter_from_large(cluster: Cluster, shards: dict, state_key, extend=False):
    """Large machine sends shards[machine index] to each machine, stored
    under state_key.  One round."""
    sends = [(LARGE, _mid(i), items) for i, items in shards.items() if items]
    cluster.round(sends)
    for i, items in shards.items():
        mach = cluster.machines[_mid(i)]
        if extend:
            cur = mach.state.get(state_key) or []
            mach.put(state_key, cur + list(items))
        else:
            mach.put(state_key, list(items))


def neighbor_shift(cluster: Cluster, payload_fn):
    """Each machine sends payload_fn(machine index) to its successor; one
    round; returns {machine index: payload from predecessor}."""
    sends = []
    K = len(cluster.small_ids)
    for i in range(1, K):
        p = payload_fn(i)
        if p is not None:
            sends.append((_mid(i), _mid(i + 1), p))
    inbox = cluster.round(sends)
    out = {}
    for i in range(2, K + 1):
        got = inbox.get(_mid(i), [])
        if got:
            out[i] = got[0][1]
    return out
