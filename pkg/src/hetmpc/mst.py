"""Minimum spanning forest on the simulated cluster.

Pipeline: doubly-exponential Boruvka contraction (step i merges along each
supervertex's 2^(2^i) lightest edges), then amplified random sampling:
sample a subgraph, build its MSF, label it for heaviest-path queries,
filter the remaining edges down to the light ones, and finish the MSF on
the large machine.  A superlinear-memory variant raises the per-step
select counts and drops the sampling probability accordingly.

Edge records on the machines are (u, v, w, ou, ov): current supervertex
endpoints, weight, and the original edge this record represents.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

from . import oracles, primitives
from .labels import DIFFERENT_COMPONENTS, flow_label_decode, flow_label_marker
from .simcore import LARGE, CapacityError, Cluster, RunFailed, distribute_edges


def wkey(r):
    """Unique total order on edge records via the attached original edge."""
    return (r[2], min(r[3], r[4]), max(r[3], r[4]))


@dataclass
class ContractionState:
    level: int
    vertices: set
    c: dict  # original vertex -> current supervertex
    forest: list = field(default_factory=list)  # chosen original (u, v, w)

    @property
    def n_super(self):
        return len(self.vertices)


def init_state(cluster: Cluster, graph, placement="seeded") -> ContractionState:
    records = [(u, v, w, u, v) for u, v, w in graph.edges]
    distribute_edges(cluster, records, placement=placement)
    return ContractionState(0, set(range(graph.n)), {v: v for v in range(graph.n)})


class _DictDSU:
    def __init__(self, vertices):
        self.p = {v: v for v in vertices}

    def find(self, x):
        r = x
        while self.p[r] != r:
            r = self.p[r]
        while self.p[x] != r:
            self.p[x], x = r, self.p[x]
        return r

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if rb < ra:  # smallest member id becomes the representative
            ra, rb = rb, ra
        self.p[rb] = ra
        return True


def _safe_merge(collected, deg_out, vertices):
    """Merge supervertices along collected edges, Boruvka-style.

    Sub-iterations: every component repeatedly merges along its minimum
    outgoing collected edge, but a component freezes once some member has
    all its collected edges internal while more of its edges exist
    elsewhere (its true minimum outgoing edge may be uncollected).  Every
    used edge is then the true minimum over its cut, hence an MSF edge.
    Returns (used records, vertex -> new representative map).
    """
    dsu = _DictDSU(vertices)
    per_vertex = {v: sorted(es, key=wkey) for v, es in collected.items()}
    ptr = {v: 0 for v in per_vertex}
    used = []
    while True:
        comps = {}
        for v in vertices:
            comps.setdefault(dsu.find(v), []).append(v)
        merges = []
        for root, members in comps.items():
            cand, frozen = None, False
            for u in members:
                es = per_vertex.get(u, [])
                i = ptr.get(u, 0)
                while i < len(es) and dsu.find(es[i][1]) == root:
                    i += 1
                ptr[u] = i
                if i == len(es):
                    if deg_out.get(u, 0) > len(es):
                        frozen = True
                        break
                    continue
                e = es[i]
                if cand is None or wkey(e) < wkey(cand):
                    cand = e
            if not frozen and cand is not None:
                merges.append(cand)
        progressed = False
        for e in sorted(merges, key=wkey):
            if dsu.union(e[0], e[1]):
                used.append(e)
                progressed = True
        if not progressed:
            break
    cmap = {v: dsu.find(v) for v in vertices}
    return used, cmap


def _rename_side(cluster, cmap, side):
    """Sort edges by one endpoint, deliver the contraction map to the
    holders, and rewrite that endpoint."""
    layout = primitives.het_sort(cluster, "E", key=lambda r: (r[side],))
    ranges = {}
    for i, b in enumerate(layout.boundaries, start=1):
        if b is not None:
            ranges[i] = (b[0][1][side], b[1][1][side])
    primitives.disseminate(cluster, cmap, machine_ranges=ranges)
    # local rewrite (delivery recorded machine-side via the dissemination)
    for i, mid in enumerate(cluster.small_ids, start=1):
        mach = cluster.machines[mid]
        es = mach.state.get("E") or []
        if not es:
            continue
        out = []
        for r in es:
            e = list(r)
            e[side] = cmap[e[side]]
            out.append(tuple(e))
        mach.put("E", out)


def boruvka_step(cluster: Cluster, state: ContractionState, s: int) -> ContractionState:
    """One contraction step: collect min(s, deg) lightest outgoing edges
    per supervertex at the large machine, merge safely, rename, and
    dedupe parallel edges keeping the lightest."""
    arranged = primitives.arrange_nodes(
        cluster, "E", "D", key=lambda r: (r[0], wkey(r))
    )
    k_of = {v: min(s, d) for v, d in arranged.deg_out.items() if d > 0}
    need = sum(k_of.values()) * 5
    if need > cluster.config.large_budget:
        raise CapacityError(
            f"collection of {need} words exceeds the large budget "
            f"{cluster.config.large_budget}; select count {s} too large"
        )
    collected = primitives.query_k_lightest(cluster, arranged, k_of)
    for mid in cluster.small_ids:
        cluster.machines[mid].pop("D")

    used, cmap = _safe_merge(collected, arranged.deg_out, state.vertices)
    forest = state.forest + [(min(r[3], r[4]), max(r[3], r[4]), r[2]) for r in used]
    new_vertices = set(cmap.values())

    _rename_side(cluster, cmap, 0)
    _rename_side(cluster, cmap, 1)
    for mid in cluster.small_ids:
        mach = cluster.machines[mid]
        es = [r for r in (mach.state.get("E") or []) if r[0] != r[1]]
        mach.put("E", es)

    # drop parallel edges: sort by (pair, weight key); each machine keeps
    # its first record per pair, and drops its leading pair if the
    # predecessor's trailing pair matches
    primitives.het_sort(
        cluster, "E",
        key=lambda r: ((min(r[0], r[1]), max(r[0], r[1])), wkey(r)),
    )
    last_pair = {}
    for i, mid in enumerate(cluster.small_ids, start=1):
        es = cluster.machines[mid].state.get("E") or []
        last_pair[i] = (min(es[-1][0], es[-1][1]), max(es[-1][0], es[-1][1])) if es else None
    pred = primitives.neighbor_shift(
        cluster, lambda i: last_pair[i] if last_pair[i] is not None else None
    )
    for i, mid in enumerate(cluster.small_ids, start=1):
        mach = cluster.machines[mid]
        es = mach.state.get("E") or []
        kept, prev = [], pred.get(i)
        # a pair spanning machines: only the first machine's first record
        # survives, so inherit the predecessor's last pair as "seen"
        for r in es:
            pair = (min(r[0], r[1]), max(r[0], r[1]))
            if pair != prev:
                kept.append(r)
                prev = pair
        mach.put("E", kept)

    new_c = {v: cmap[sv] for v, sv in state.c.items()}
    return ContractionState(state.level + 1, new_vertices, new_c, forest)


def near_linear_steps(n, m) -> int:
    return math.ceil(math.log2(max(1, math.log2(max(m, 1) / n)))) if m > n else 0


def doubly_exp_boruvka(cluster, state, t, select_counts=None) -> ContractionState:
    for i in range(1, t + 1):
        s = select_counts[i - 1] if select_counts else 2 ** (2 ** i)
        state = boruvka_step(cluster, state, s)
    return state


def kkt_sample(cluster: Cluster, p, tag) -> list | None:
    """Each machine ships each held edge independently with probability p;
    returns the sample at the large machine, or None if the realized
    sample would not fit (repetition aborted).  2 rounds."""
    picks = {}
    for i, mid in enumerate(cluster.small_ids, start=1):
        rng = cluster.rng("kkt", tag, i)
        es = cluster.machines[mid].state.get("E") or []
        picks[mid] = [r for r in es if rng.random() < p]
    cluster.round([(mid, LARGE, len(v)) for mid, v in picks.items()])
    total = sum(len(v) for v in picks.values())
    if total * 5 > cluster.config.large_budget:
        cluster.empty_round()
        return None
    inbox = cluster.round([(mid, LARGE, v) for mid, v in picks.items() if v])
    sample = []
    for _, v in inbox.get(LARGE, []):
        sample.extend(v)
    return sample


def _kruskal_records(vertices, records):
    dsu = _DictDSU(vertices)
    chosen = []
    for r in sorted(records, key=wkey):
        if dsu.union(r[0], r[1]):
            chosen.append(r)
    return chosen


def _disseminate_labels_and_filter(cluster, labels):
    """Two label-delivery passes (by each endpoint), then the local
    light-edge test: keep a record iff its endpoints lie in different
    trees or its weight is at most the decoded path maximum."""
    for side in (0, 1):
        layout = primitives.het_sort(cluster, "E", key=lambda r: (r[side],))
        ranges = {}
        for i, b in enumerate(layout.boundaries, start=1):
            if b is not None:
                ranges[i] = (b[0][1][side], b[1][1][side])
        primitives.disseminate(cluster, labels, machine_ranges=ranges)
        for i, mid in enumerate(cluster.small_ids, start=1):
            mach = cluster.machines[mid]
            es = mach.state.get("E") or []
            if side == 0:
                mach.put("E", [r + (labels[r[0]],) for r in es])
            else:
                kept = []
                for r in es:
                    lu, lv = r[5], labels[r[1]]
                    dec = flow_label_decode(lu, lv)
                    if dec is DIFFERENT_COMPONENTS or r[2] <= dec:
                        kept.append(r[:5])
                mach.put("E", kept)


def f_light_filter(cluster: Cluster, labels, threshold):
    """Filter to light edges, count them, and ship them to the large
    machine unless the count exceeds the abort threshold."""
    _disseminate_labels_and_filter(cluster, labels)
    counts = cluster.round(
        [(mid, LARGE, len(cluster.machines[mid].state.get("E") or []))
         for mid in cluster.small_ids]
    )
    total = sum(c for _, c in counts.get(LARGE, []))
    if total > threshold:
        cluster.empty_round()
        return None, total
    light = primitives.gather_to_large(cluster, "E")
    return light, total


ALPHA = 4


def _finish_by_sampling(cluster, state, p, alpha=ALPHA, reps=None):
    """Amplified sampling stage; returns (chosen records, report)."""
    n = cluster.config.n
    R = reps if reps is not None else math.ceil(2 * math.log2(n))
    threshold = alpha * math.ceil(state.n_super / p) if p < 1 else float("inf")
    branches = []
    light_counts = []
    winner = None
    for rep in range(1, R + 1):
        snapshot = {
            mid: list(cluster.machines[mid].state.get("E") or [])
            for mid in cluster.small_ids
        }
        cluster.start_branch()
        sample = kkt_sample(cluster, p, rep)
        if sample is None:
            branches.append(cluster.end_branch())
            light_counts.append(None)
            continue
        forest = _kruskal_records(state.vertices, sample)
        labels = flow_label_marker(n, [(r[0], r[1], r[2]) for r in forest])
        labels = {v: labels[v] for v in state.vertices}
        light, total = f_light_filter(cluster, labels, threshold)
        branches.append(cluster.end_branch())
        light_counts.append(total)
        # the filter pass consumed the stored edges; restore for the next
        # repetition (repetitions are conceptually parallel)
        for mid, es in snapshot.items():
            cluster.machines[mid].put("E", es)
        if light is not None:
            winner = (rep, light, sample)
            break
    cluster.merge_parallel(branches)
    if winner is None:
        raise RunFailed(f"all {R} sampling repetitions aborted")
    rep, light, sample = winner
    chosen = _kruskal_records(state.vertices, light + sample)
    report = {
        "repetitions_run": len(branches),
        "successful_repetition": rep,
        "f_light_counts": light_counts,
        "abort_threshold": threshold if threshold != float("inf") else None,
    }
    return chosen, report


def mst(cluster: Cluster, graph, placement="seeded"):
    """Minimum spanning forest of a weighted graph; returns (edges, report)
    with edges as (u, v, w) sorted by (w, u, v)."""
    n, m = graph.n, graph.m
    state = init_state(cluster, graph, placement)
    t = near_linear_steps(n, m)
    state = doubly_exp_boruvka(cluster, state, t)
    p = min(1.0, n / m)
    chosen, rep_report = _finish_by_sampling(cluster, state, p)
    forest = state.forest + [(min(r[3], r[4]), max(r[3], r[4]), r[2]) for r in chosen]
    forest = sorted(set(forest), key=lambda e: (e[2], e[0], e[1]))
    out = [(u, v, w) for u, v, w in forest]
    n_components = n - len(out)
    report = {
        "t": t,
        "supervertices_after_contraction": state.n_super,
        "components": n_components,
        "connected": n_components == 1,
        "total_weight": sum(w for _, _, w in out),
        **rep_report,
    }
    return out, report


def superlinear_params(n, m, f: Fraction):
    f = Fraction(f)
    lognm = Fraction(0)
    if m > n:
        # log_n(m/n) as an exact fraction is irrational in general; the
        # step count only needs the ceiling of a log2, so floats suffice
        lognm = math.log(m / n, n)
    t = max(0, math.ceil(math.log2(max(1e-12, lognm / float(f))))) if lognm > 0 else 0
    counts = []
    for i in range(1, t + 1):
        exp = Fraction(2 ** i) * f
        counts.append(_int_pow_floor(n, exp))
    exp_p = Fraction(2 ** t) * f + f
    p = 1.0 / _int_pow_floor(n, exp_p)
    return t, counts, p


def _int_pow_floor(n, exp: Fraction):
    """floor(n**exp) computed exactly for rational exp."""
    a, b = exp.numerator, exp.denominator
    x = n ** a
    lo, hi = 1, 1 << ((x.bit_length() + b - 1) // b + 1)
    while lo < hi:
        mid = (lo + hi + 1) // 2
        if mid ** b <= x:
            lo = mid
        else:
            hi = mid - 1
    return lo


def mst_superlinear(cluster: Cluster, graph, placement="seeded"):
    """MSF with a superlinear large machine: fewer, bigger contraction
    steps (select count n^(2^i f)) and a sparser sample."""
    f = cluster.config.f_exp
    if f is None:
        raise ValueError("cluster config has no superlinear exponent f_exp")
    n, m = graph.n, graph.m
    t, counts, p = superlinear_params(n, m, f)
    state = init_state(cluster, graph, placement)
    state = doubly_exp_boruvka(cluster, state, t, select_counts=counts)
    chosen, rep_report = _finish_by_sampling(cluster, state, min(1.0, p))
    forest = state.forest + [(min(r[3], r[4]), max(r[3], r[4]), r[2]) for r in chosen]
    forest = sorted(set(forest), key=lambda e: (e[2], e[0], e[1]))
    out = [(u, v, w) for u, v, w in forest]
    report = {
        "t": t,
        "select_counts": counts,
        "sample_p": p,
        "supervertices_after_contraction": state.n_super,
        "total_weight": sum(w for _, _, w in out),
        **rep_report,
    }
    return out, report
