"""Maximal matching on the simulated cluster.

Three phases: a small-machine randomized matching of the low-degree
induced subgraph, a rank-sampled greedy pass over the high-degree
vertices on the large machine, and a residual cleanup of the leftover
free-free edges.  A separate sampling recursion handles clusters whose
large machine has superlinear memory.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from . import primitives
from .simcore import (
    LARGE,
    Cluster,
    ConfigError,
    MachineId,
    RunFailed,
    distribute_edges,
)


def _pair(a, b):
    return (a, b) if a < b else (b, a)


@dataclass
class MatchingState:
    d: int
    deg: dict
    v_low: set
    v_high: set
    m1: list = field(default_factory=list)
    m2: list = field(default_factory=list)
    m3: list = field(default_factory=list)
    residual_count: int = 0

    def matched_vertices(self):
        out = set()
        for u, v in self.m1 + self.m2 + self.m3:
            out.add(u)
            out.add(v)
        return out


def degree_split(cluster: Cluster, graph) -> MatchingState:
    """Arrange the stored edges to learn degrees, then split vertices at
    the d^2 threshold (d = average-degree ceiling)."""
    arranged = primitives.arrange_nodes(cluster, "E", "D")
    for mid in cluster.small_ids:
        cluster.machines[mid].pop("D")
    deg = dict(arranged.deg_out)
    d = max(1, math.ceil(2 * graph.m / graph.n))
    v_low = {v for v, dv in deg.items() if dv <= d * d}
    v_high = set(deg) - v_low
    assert len(v_high) <= graph.n / d, "high-degree count exceeds n/d"
    return MatchingState(d=d, deg=deg, v_low=v_low, v_high=v_high)


def _owner(cluster, v):
    return MachineId("S", 1 + v % len(cluster.small_ids))


MAX_PHASE1_ITERS = 200


def phase1_low_degree(cluster: Cluster, graph, state: MatchingState):
    """Maximal matching of the low-degree induced subgraph, found by the
    small machines alone (default plug-in: round-synchronous randomized
    proposals; each free vertex flips proposer/acceptor, proposers pick a
    random free neighbor, acceptors take the smallest proposal)."""
    v_low = state.v_low
    # route every low-low edge to both endpoint owners
    sends = []
    adj_of = {}
    for mid in cluster.small_ids:
        buckets = {}
        for e in cluster.machines[mid].state.get("E") or []:
            u, v = e[0], e[1]
            if u in v_low and v in v_low:
                for w in (u, v):
                    buckets.setdefault(_owner(cluster, w), []).append((u, v))
        for dst, recs in buckets.items():
            sends.append((mid, dst, recs))
    inbox = cluster.round(sends)
    for mid in cluster.small_ids:
        adj = {}
        for _, recs in inbox.get(mid, []):
            for u, v in recs:
                for a, b in ((u, v), (v, u)):
                    if _owner(cluster, a) == mid:
                        adj.setdefault(a, set()).add(b)
        adj_of[mid] = adj
        cluster.machines[mid].put("P", sorted(
            (a, b) for a, nbrs in adj.items() for b in nbrs
        ))

    matched = set()
    m1 = []
    it = 0
    while True:
        live = any(
            u not in matched and v not in matched
            for adj in adj_of.values()
            for u, nbrs in adj.items()
            for v in nbrs
        )
        if not live:
            break
        it += 1
        if it > MAX_PHASE1_ITERS:
            raise RunFailed("phase-1 proposal rounds did not converge")
        coin = cluster.rng("p1-coin", it)
        role = {}
        for adj in adj_of.values():
            for v in adj:
                if v not in matched and v not in role:
                    role[v] = coin.random() < 0.5  # True = proposer

        # round A: proposers pick a random believed-free neighbor
        sends = []
        proposals = {}
        for mid in cluster.small_ids:
            buckets = {}
            for v, nbrs in adj_of[mid].items():
                if v in matched or not role.get(v, False):
                    continue
                free = sorted(
                    u for u in nbrs if u not in matched and not role.get(u, False)
                )
                if not free:
                    continue
                u = free[cluster.rng("p1-pick", it, v).randrange(len(free))]
                buckets.setdefault(_owner(cluster, u), []).append((v, u))
            for dst, recs in buckets.items():
                sends.append((mid, dst, recs))
        inbox = cluster.round(sends)
        for mid in cluster.small_ids:
            for _, recs in inbox.get(mid, []):
                for v, u in recs:
                    proposals.setdefault(u, []).append(v)

        # round B: free acceptors take their smallest proposer and notify
        sends = []
        new_pairs = []
        for u, props in sorted(proposals.items()):
            if u in matched:
                continue
            v = min(p for p in props if p not in matched) if any(
                p not in matched for p in props
            ) else None
            if v is None:
                continue
            matched.add(u)
            matched.add(v)
            new_pairs.append(_pair(u, v))
            sends.append((_owner(cluster, u), _owner(cluster, v), (u, v)))
        cluster.round(sends)

        # round C: owners of newly matched vertices tell their neighbors'
        # owners, keeping the believed-free views current
        sends = []
        for u, v in new_pairs:
            for w in (u, v):
                own = _owner(cluster, w)
                buckets = {}
                for nb in adj_of[own].get(w, ()):
                    buckets.setdefault(_owner(cluster, nb), []).append((w,))
                for dst, recs in buckets.items():
                    sends.append((own, dst, recs))
        cluster.round(sends)
        m1.extend(new_pairs)

    for mid in cluster.small_ids:
        cluster.machines[mid].pop("P")
    # ship M1 to the large machine
    shard = sorted(m1)
    cluster.round(
        [(_owner(cluster, e[0]), LARGE, e) for e in shard] if shard else []
    )
    state.m1 = shard
    return shard


def _ranked_records(cluster, tag):
    """Attach a fresh uniform rank in {1..n^5} to every stored edge."""
    n5 = cluster.config.n ** 5
    for i, mid in enumerate(cluster.small_ids, start=1):
        rngm = cluster.rng("ranks", tag, i)
        es = cluster.machines[mid].state.get("E") or []
        cluster.machines[mid].put(
            "R", [(e[0], e[1], rngm.randint(1, n5)) for e in es]
        )


def phase2_high_degree(cluster: Cluster, graph, state: MatchingState):
    """Rank-sampled greedy over V_high on the large machine.

    For each high vertex the large machine collects its lowest-ranked
    incident edges (2d*ceil(log2 n) of them, or all), then matches the
    high vertices in ascending id to their first free collected neighbor.
    """
    n = cluster.config.n
    budget = 2 * state.d * max(1, math.ceil(math.log2(n)))
    matched = state.matched_vertices()

    for attempt in range(2):
        _ranked_records(cluster, attempt)
        arranged = primitives.arrange_nodes(
            cluster, "R", "D", key=lambda r: (r[0], r[2])
        )
        k_of = {
            v: min(budget, state.deg.get(v, 0))
            for v in sorted(state.v_high)
        }
        collected = primitives.query_k_lightest(cluster, arranged, k_of, "D")
        for mid in cluster.small_ids:
            cluster.machines[mid].pop("D")
            cluster.machines[mid].pop("R")
        ranks_seen = [r[2] for recs in collected.values() for r in recs]
        if len(ranks_seen) == len(set(ranks_seen)):
            break
        if attempt == 1:
            raise RunFailed("edge ranks collided twice")
    m2 = []
    for v in sorted(state.v_high):
        if v in matched:
            continue
        for _, u, _rank in sorted(collected.get(v, []), key=lambda r: r[2]):
            if u not in matched:
                m2.append(_pair(v, u))
                matched.add(v)
                matched.add(u)
                break
    state.m2 = m2

    # matched statuses out to every machine, keyed by both edge endpoints
    status = {v: (1 if v in matched else 0) for v in range(n)}
    for side in (0, 1):
        layout = primitives.het_sort(cluster, "E", key=lambda r: (r[side],))
        ranges = {}
        for i, b in enumerate(layout.boundaries, start=1):
            if b is not None:
                ranges[i] = (b[0][1][side], b[1][1][side])
        primitives.disseminate(cluster, status, machine_ranges=ranges)
    return m2


def phase3_residual(cluster: Cluster, graph, state: MatchingState):
    """Count the free-free residual edges; if at most 2n they ship to the
    large machine for a final greedy pass, else this attempt fails."""
    n = cluster.config.n
    matched = state.matched_vertices()

    def residual(e):
        return e[0] not in matched and e[1] not in matched

    sends = []
    for mid in cluster.small_ids:
        es = cluster.machines[mid].state.get("E") or []
        sends.append((mid, LARGE, sum(1 for e in es if residual(e))))
    inbox = cluster.round(sends)
    total = sum(c for _, c in inbox.get(LARGE, []))
    state.residual_count = total
    if total > 2 * n:
        cluster.empty_round()
        return None  # this attempt fails

    shipped = primitives.gather_to_large(cluster, "E", select=residual)
    m3 = []
    for e in sorted(shipped):
        u, v = e[0], e[1]
        if u not in matched and v not in matched:
            m3.append(_pair(u, v))
            matched.add(u)
            matched.add(v)
    state.m3 = m3
    return m3


def maximal_matching(cluster: Cluster, graph, placement="seeded"):
    """Maximal matching of the stored graph; returns (edges, report).

    One full retry on a Phase-3 overflow, then RunFailed.
    """
    for attempt in range(2):
        distribute_edges(
            cluster,
            [(e[0], e[1]) for e in graph.edges],
            placement=placement,
        )
        if graph.m == 0:
            return [], {"d": 1, "v_high": 0, "phase_sizes": [0, 0, 0],
                        "residual": 0, "phase1_rounds": 0}
        state = degree_split(cluster, graph)
        pre = cluster.sink_rounds
        phase1_low_degree(cluster, graph, state)
        phase1_rounds = cluster.sink_rounds - pre
        phase2_high_degree(cluster, graph, state)
        m3 = phase3_residual(cluster, graph, state)
        if m3 is None:
            if attempt == 1:
                raise RunFailed("residual exceeded 2n twice")
            cluster.config.seed += 1 << 32  # fresh substreams for the retry
            continue
        M = sorted(state.m1 + state.m2 + state.m3)
        report = {
            "d": state.d,
            "v_high": len(state.v_high),
            "phase_sizes": [len(state.m1), len(state.m2), len(state.m3)],
            "residual": state.residual_count,
            "phase1_rounds": phase1_rounds,
            "post_phase1_rounds": cluster.sink_rounds - pre - phase1_rounds,
            "size": len(M),
            "retried": attempt,
        }
        return M, report
    raise RunFailed("unreachable")


# ---------------------------------------------------------------------------
# superlinear-memory recursion


STOP_C = 4


def matching_superlinear(cluster: Cluster, graph, placement="seeded",
                         stop_c=STOP_C):
    """Maximal matching via the edge-sampling recursion: sample at rate
    n^-f, match the sample recursively, then greedily extend over the
    edges left free-free.  Requires a superlinear large machine."""
    f = cluster.config.f_exp
    if f is None or f <= 0:
        raise ConfigError("matching_superlinear needs a positive memory "
                          "exponent f")
    n = cluster.config.n
    cap = stop_c * math.floor(n ** (1.0 + float(f)))
    p = n ** (-float(f))
    max_depth = math.ceil(1 / float(f)) + 1

    for attempt in range(2):
        distribute_edges(
            cluster,
            [(e[0], e[1]) for e in graph.edges],
            placement=placement,
        )
        try:
            M, depth = _super_rec(cluster, "E", 1, cap, p, attempt)
        except _Overflow:
            if attempt == 1:
                raise RunFailed("free-free edge count overflowed twice")
            continue
        report = {
            "depth": depth,
            "max_depth": max_depth,
            "cap": cap,
            "p": p,
            "size": len(M),
            "retried": attempt,
        }
        return sorted(M), report
    raise RunFailed("unreachable")


class _Overflow(Exception):
    pass


def _count_round(cluster, key):
    sends = []
    for mid in cluster.small_ids:
        es = cluster.machines[mid].state.get(key) or []
        sends.append((mid, LARGE, len(es)))
    inbox = cluster.round(sends)
    return sum(c for _, c in inbox.get(LARGE, []))


def _super_rec(cluster, key, depth, cap, p, attempt):
    total = _count_round(cluster, key)
    if total <= cap:
        shipped = primitives.gather_to_large(cluster, key)
        return _greedy(shipped, set()), depth

    # sample each stored edge into the next level
    for i, mid in enumerate(cluster.small_ids, start=1):
        rngm = cluster.rng("super-sample", attempt, depth, i)
        es = cluster.machines[mid].state.get(key) or []
        cluster.machines[mid].put(
            key + "s", [e for e in es if rngm.random() < p]
        )
    M, sub_depth = _super_rec(cluster, key + "s", depth + 1, cap, p, attempt)
    for mid in cluster.small_ids:
        cluster.machines[mid].pop(key + "s")

    # matched statuses out, free-free edges back, then extend greedily
    matched = {v for e in M for v in e}
    status = {v: (1 if v in matched else 0) for v in range(cluster.config.n)}
    for side in (0, 1):
        layout = primitives.het_sort(cluster, key, key=lambda r: (r[side],))
        ranges = {}
        for i, b in enumerate(layout.boundaries, start=1):
            if b is not None:
                ranges[i] = (b[0][1][side], b[1][1][side])
        primitives.disseminate(cluster, status, machine_ranges=ranges)

    def residual(e):
        return e[0] not in matched and e[1] not in matched

    sends = []
    for mid in cluster.small_ids:
        es = cluster.machines[mid].state.get(key) or []
        sends.append((mid, LARGE, sum(1 for e in es if residual(e))))
    inbox = cluster.round(sends)
    free_free = sum(c for _, c in inbox.get(LARGE, []))
    if free_free > cap:
        raise _Overflow
    shipped = primitives.gather_to_large(cluster, key, select=residual)
    return M + _greedy(shipped, matched), sub_depth


def _greedy(edges, matched):
    out = []
    for e in sorted(_pair(e[0], e[1]) for e in edges):
        u, v = e
        if u not in matched and v not in matched:
            out.append(e)
            matched.add(u)
            matched.add(v)
    return out
