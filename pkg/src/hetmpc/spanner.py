"""Sparse spanners on the simulated cluster.

The graph is decomposed into per-level clustering graphs over star
centers (edges bucketed by the smaller endpoint degree), a (2k-1)-spanner
is built for every level -- whole levels ship to the large machine, dense
levels run a sub-sampled clustering construction -- and the per-level
spanners plus the star edges combine into a (6k-1)-spanner.
"""

from __future__ import annotations

import hashlib
import math
from collections import deque
from dataclasses import dataclass, field

from . import primitives
from .simcore import LARGE, Cluster, Packed, distribute_edges


def _pair(a, b):
    return (a, b) if a < b else (b, a)


def _hash_int(seed, *tags):
    h = hashlib.blake2b(repr((seed,) + tags).encode(), digest_size=8).digest()
    return int.from_bytes(h, "big")


def _chunks(x, nbits, wb):
    """Split an nbits-wide int into word-sized pieces (metered honestly)."""
    n = max(1, math.ceil(nbits / wb))
    mask = (1 << wb) - 1
    return tuple((x >> (i * wb)) & mask for i in range(n))


def _or_chunks(vals):
    out = list(vals[0])
    for v in vals[1:]:
        for i, c in enumerate(v):
            out[i] |= c
    return tuple(out)


def _unchunks(t, wb):
    x = 0
    for i, c in enumerate(t):
        x |= c << (i * wb)
    return x


# ---------------------------------------------------------------------------
# clustering decomposition


@dataclass
class ClusteringDecomposition:
    n: int
    delta: int
    levels: int  # L; level indices 0..L-1
    deg: dict
    hitting: list  # D_i per level (level 0 = all vertices)
    b_sets: list  # B_i = union of D_j for j >= i
    sigma: dict  # vertex -> star center
    star_edges: list  # (u, sigma_u) original edges
    bucket_sizes: dict = field(default_factory=dict)  # level -> deduped |E_i|

    def vertices_at(self, i):
        """V_i: the level-i clustering-graph vertex set."""
        return self.b_sets[i]


def bucket_level(min_deg, levels):
    """Level of an edge whose smaller endpoint degree is min_deg: the i
    with min_deg in [2^i, 2^(i+1)), clamped into the level range."""
    return min(int(math.log2(max(1, min_deg))), levels - 1)


def clustering_graphs(cluster: Cluster, graph) -> ClusteringDecomposition:
    """Build the star decomposition and per-level clustering graphs.

    Leaves per-machine level records (level, c, c', wu, wv) under state
    key "A" -- (c, c') is the pair of star centers, (wu, wv) the locally
    smallest witness edge -- and returns the host-side decomposition.
    """
    n = cluster.config.n
    wb = cluster.config.word_bits
    seed = cluster.config.seed

    arranged = primitives.arrange_nodes(cluster, "E", "D")
    deg = dict(arranged.deg_out)
    delta = max(deg.values(), default=1)
    L = max(1, math.ceil(math.log2(delta))) if delta >= 2 else 1
    J = max(1, math.ceil(math.log2(n)))

    # hitting-set trials: level i in 1..L-1, trial j in 1..J, each vertex
    # sampled with probability min(1, i/2^i); level 0 is all of V
    rng = cluster.rng("hitting")
    nbits = (L - 1) * J
    sampled = {}
    for v in range(n):
        bits = 0
        for i in range(1, L):
            p = min(1.0, i / 2 ** i)
            for j in range(J):
                if rng.random() < p:
                    bits |= 1 << ((i - 1) * J + j)
        sampled[v] = bits
    primitives.tree_broadcast(cluster, Packed(sampled, n * max(1, nbits), wb))

    # per-vertex OR of the sampled-trial membership over its neighbors
    nbr = primitives.aggregate(
        cluster, "D",
        part_fn=lambda r: r[0],
        map_fn=lambda r: _chunks(sampled.get(r[1], 0), nbits, wb),
        reduce_fn=_or_chunks,
    )
    nbr = {v: _unchunks(t, wb) for v, t in nbr.items()}

    # patch each trial into a hitting set: add any vertex of degree >= 2^i
    # with no sampled neighbor in the trial; keep the smallest trial
    hitting = [set(range(n))]
    for i in range(1, L):
        best = None
        for j in range(J):
            bit = 1 << ((i - 1) * J + j)
            d = {v for v in range(n) if sampled[v] & bit}
            d |= {
                v for v, dv in deg.items()
                if dv >= 2 ** i and not (nbr.get(v, 0) & bit)
            }
            if best is None or len(d) < len(best):
                best = d
        hitting.append(best if best is not None else set())

    b_sets = [set() for _ in range(L)]
    acc = set()
    for i in range(L - 1, -1, -1):
        acc |= hitting[i]
        b_sets[i] = set(acc)

    # second pass with the patched sets: which D-levels each neighborhood
    # intersects (bit i-1 of the mask = some neighbor lies in D_i)
    patched_mask = {v: 0 for v in range(n)}
    for i in range(1, L):
        for v in hitting[i]:
            patched_mask[v] |= 1 << (i - 1)
    pbits = max(1, L - 1)
    primitives.tree_broadcast(cluster, Packed(patched_mask, n * pbits, wb))
    nbr_b = primitives.aggregate(
        cluster, "D",
        part_fn=lambda r: r[0],
        map_fn=lambda r: _chunks(patched_mask.get(r[1], 0), pbits, wb),
        reduce_fn=_or_chunks,
    )
    nbr_b = {v: _unchunks(t, wb) for v, t in nbr_b.items()}

    # i_v: deepest level whose B-set contains v or one of its neighbors
    # (B_0 = V, so the maximum always exists)
    i_of = {}
    for v in range(n):
        top = 0
        mask = nbr_b.get(v, 0)
        for i in range(L - 1, 0, -1):
            if v in b_sets[i] or mask >> (i - 1):
                top = i
                break
        i_of[v] = top

    # sigma: own id for members of B_{i_v}; otherwise a seeded-random
    # neighbor inside B_{i_v}, chosen by a distributed argmin on a hash
    need = {v for v in deg if v not in b_sets[i_of[v]]}
    ranges = {}
    for i, b in enumerate(arranged.layout.boundaries, start=1):
        if b is not None:
            ranges[i] = (b[0][1][0], b[1][1][0])
    primitives.disseminate(
        cluster, {v: (i_of[v], 1 if v in need else 0) for v in deg},
        machine_ranges=ranges,
    )
    no_choice = (1 << 64, 0)  # above any 64-bit hash value
    cand = primitives.aggregate(
        cluster, "D",
        part_fn=lambda r: r[0],
        map_fn=lambda r: (
            (_hash_int(seed, "sigma", r[0], r[1]), r[1])
            if r[0] in need and r[1] in b_sets[i_of[r[0]]]
            else no_choice
        ),
        reduce_fn=min,
    )
    sigma, star_edges = {}, []
    for v in range(n):
        if v not in need:
            sigma[v] = v
            continue
        choice = cand.get(v)
        if choice is None or choice == no_choice:
            # every vertex of degree >= 2^i has a B_i neighbor once the
            # trials are patched into hitting sets
            raise RuntimeError(f"no star center found for vertex {v}")
        sigma[v] = choice[1]
        star_edges.append(_pair(v, sigma[v]))
    for mid in cluster.small_ids:
        cluster.machines[mid].pop("D")

    # deliver (deg, sigma) for both endpoints, then build level records
    per_vertex = {v: (deg.get(v, 0), sigma[v]) for v in range(n)}
    for side in (0, 1):
        layout = primitives.het_sort(cluster, "E", key=lambda r: (r[side],))
        rng_map = {}
        for i, b in enumerate(layout.boundaries, start=1):
            if b is not None:
                rng_map[i] = (b[0][1][side], b[1][1][side])
        primitives.disseminate(cluster, per_vertex, machine_ranges=rng_map)
    bucket_sizes = {}
    seen_pairs = {}
    for mid in cluster.small_ids:
        mach = cluster.machines[mid]
        recs = {}
        for u, v in mach.state.get("E") or []:
            su, sv = sigma[u], sigma[v]
            if su == sv:
                continue  # the edge lies inside a star
            lvl = bucket_level(min(deg[u], deg[v]), L)
            c, cp = _pair(su, sv)
            w = _pair(u, v)
            key = (lvl, c, cp)
            if key not in recs or w < recs[key]:
                recs[key] = w
            seen_pairs.setdefault(lvl, set()).add((c, cp))
        mach.put(
            "A", [(lvl, c, cp, w[0], w[1]) for (lvl, c, cp), w in recs.items()]
        )
    for lvl, prs in seen_pairs.items():
        bucket_sizes[lvl] = len(prs)

    return ClusteringDecomposition(
        n=n, delta=delta, levels=L, deg=deg, hitting=hitting, b_sets=b_sets,
        sigma=sigma, star_edges=sorted(set(star_edges)),
        bucket_sizes=bucket_sizes,
    )


# ---------------------------------------------------------------------------
# levelled center clustering (the (2k-1)-spanner core)


def _bs_centers_and_histories(rng, vertices, samples, k, base):
    """Levelled center sampling and re-clustering through the sampled
    subgraphs only; returns (histories, re-cluster edges).

    histories[v] = (c_0(v), ..., c_{t-1}(v)) where t is the step at which
    v became unclustered for good; c_0(v) = v.
    """
    q = max(1, base) ** (-1.0 / k)
    adj = []
    for sub in samples:
        a = {}
        for u, v in sub:
            a.setdefault(u, set()).add(v)
            a.setdefault(v, set()).add(u)
        adj.append(a)
    centers = set(vertices)
    c_prev = {v: v for v in vertices}
    hist = {v: [v] for v in vertices}
    recluster = set()
    for i in range(1, k + 1):
        centers = set() if i == k else {c for c in centers if rng.random() < q}
        c_cur = {}
        for v in sorted(c_prev):
            cp = c_prev[v]
            if cp in centers:
                c_cur[v] = cp
                continue
            # re-cluster through a sampled neighbor whose center survived
            best = None
            if i <= len(adj):
                for u in adj[i - 1].get(v, ()):
                    cu = c_prev.get(u)
                    if cu is not None and cu in centers:
                        if best is None or u < best:
                            best = u
            if best is not None:
                c_cur[v] = c_prev[best]
                recluster.add(_pair(v, best))
        for v in c_cur:
            hist[v].append(c_cur[v])
        c_prev = c_cur
    return {v: tuple(h) for v, h in hist.items()}, recluster


def _candidates_for_edge(u, v, hist):
    """Candidate records (removed vertex, prior-level cluster of the other
    endpoint, other endpoint) for one stored edge.  Both directions apply
    when the endpoints were unclustered at the same step."""
    lu, lv = hist.get(u), hist.get(v)
    if lu is None or lv is None:
        return []
    out = []
    if len(lv) >= len(lu):
        out.append((u, lv[len(lu) - 1], v))
    if len(lu) >= len(lv):
        out.append((v, lu[len(lv) - 1], u))
    return out


def _deliver_histories(cluster, state_key, hist, sides):
    """Sort the stored records by each endpoint position in `sides` and
    disseminate the center histories to the machines holding them."""
    for side in sides:
        layout = primitives.het_sort(cluster, state_key,
                                     key=lambda r: (r[side],))
        ranges = {}
        for i, b in enumerate(layout.boundaries, start=1):
            if b is not None:
                ranges[i] = (b[0][1][side], b[1][1][side])
        primitives.disseminate(cluster, dict(hist), machine_ranges=ranges)


def modified_baswana_sen(cluster: Cluster, k, p, vertices=None, state_key="E"):
    """(2k-1)-spanner of the unweighted graph stored under state_key.

    k-1 sampled subgraphs ship to the large machine, which runs the center
    levels on them alone; the removal edges come from the small machines,
    one aggregated edge per (removed vertex, adjacent prior-level
    cluster).  Returns the spanner edge list (held at the large machine).
    """
    if vertices is None:
        vertices = set()
        for mid in cluster.small_ids:
            for u, v in cluster.machines[mid].state.get(state_key) or []:
                vertices.add(u)
                vertices.add(v)
    sends = []
    for i, mid in enumerate(cluster.small_ids, start=1):
        rngm = cluster.rng("bs-sample", state_key, i)
        es = cluster.machines[mid].state.get(state_key) or []
        payload = []
        for j in range(1, k):
            payload.extend((j, u, v) for u, v in es if rngm.random() < p)
        if payload:
            sends.append((mid, LARGE, payload))
    inbox = cluster.round(sends)
    samples = [set() for _ in range(max(0, k - 1))]
    for _, payload in inbox.get(LARGE, []):
        for j, u, v in payload:
            samples[j - 1].add(_pair(u, v))

    hist, recluster = _bs_centers_and_histories(
        cluster.rng("bs-centers", state_key), vertices, samples, k,
        len(vertices),
    )

    _deliver_histories(cluster, state_key, hist, sides=(0, 1))
    for mid in cluster.small_ids:
        mach = cluster.machines[mid]
        cands = []
        for u, v in mach.state.get(state_key) or []:
            cands.extend(_candidates_for_edge(u, v, hist))
        mach.put("_cand", cands)

    primitives.het_sort(cluster, "_cand", key=lambda r: (r[0], r[1]))
    removal = primitives.aggregate(
        cluster, "_cand",
        part_fn=lambda r: (r[0], r[1]),
        map_fn=lambda r: r[2],
        reduce_fn=min,
    )
    for mid in cluster.small_ids:
        cluster.machines[mid].pop("_cand")

    H = set(recluster)
    for (v, _c), u in removal.items():
        H.add(_pair(v, u))
    return sorted(H)


# ---------------------------------------------------------------------------
# per-level spanners and their combination


def greedy_spanner(edges, bound):
    """Add an edge iff the current spanner distance between its endpoints
    exceeds `bound` (classic size bound O(n^(1+1/k)) for bound 2k-1)."""
    adj = {}
    out = []
    for u, v in sorted(edges):
        if u == v:
            continue
        if _bounded_dist(adj, u, v, bound) > bound:
            adj.setdefault(u, []).append(v)
            adj.setdefault(v, []).append(u)
            out.append((u, v))
    return out


def _bounded_dist(adj, s, t, bound):
    if s == t:
        return 0
    dist = {s: 0}
    q = deque([s])
    while q:
        u = q.popleft()
        du = dist[u]
        if du >= bound:
            continue
        for v in adj.get(u, ()):
            if v not in dist:
                if v == t:
                    return du + 1
                dist[v] = du + 1
                q.append(v)
    return bound + 1


def level_probability(i, k):
    """Sampling probability for the level-i clustering graph."""
    if i == 0:
        return 1.0
    return min(1.0, k * k * i ** (1.0 + 1.0 / k) / 2 ** i)


def combine_spanners(decomposition, per_level_witnessed):
    """Union of the witness edges of every per-level spanner plus the
    star edges.  per_level_witnessed: level -> {pair: witness edge}."""
    H = set(decomposition.star_edges)
    for lvl, chosen in per_level_witnessed.items():
        for pr, witness in chosen.items():
            if witness is None:
                raise RuntimeError(f"missing witness for level {lvl} edge {pr}")
            H.add(_pair(*witness))
    return sorted(H)


def _level_rounds(gamma):
    """Fixed per-level round charge: the sub-sampled case (sample ship,
    two history deliveries, candidate sort, aggregate) bounds both."""
    return (
        1
        + 2 * (primitives.sort_rounds(gamma)
               + primitives.disseminate_rounds(gamma))
        + primitives.sort_rounds(gamma)
        + primitives.aggregate_rounds(gamma)
    )


def spanner(cluster: Cluster, graph, k, placement="seeded"):
    """Spanner with stretch at most 6k-1; returns (edges, report).

    All levels run conceptually in parallel (round charge is the fixed
    per-level constant; traffic sums across levels)."""
    distribute_edges(cluster, [(e[0], e[1]) for e in graph.edges],
                     placement=placement)
    deco = clustering_graphs(cluster, graph)
    target = _level_rounds(cluster.config.gamma)

    branches = []
    per_level = {}
    report_levels = {}
    for lvl in range(deco.levels):
        cluster.start_branch()
        for mid in cluster.small_ids:
            mach = cluster.machines[mid]
            recs = [r for r in (mach.state.get("A") or []) if r[0] == lvl]
            mach.put("_lvl", recs)
        p = level_probability(lvl, k)
        if p >= 1.0:
            shipped = primitives.gather_to_large(cluster, "_lvl")
            pairs = {}
            for _, c, cp, wu, wv in shipped:
                key = _pair(c, cp)
                w = _pair(wu, wv)
                if key not in pairs or w < pairs[key]:
                    pairs[key] = w
            chosen = greedy_spanner(pairs.keys(), 2 * k - 1)
            per_level[lvl] = {pr: pairs[pr] for pr in chosen}
            case = "shipped-whole"
        else:
            per_level[lvl] = _bs_level(cluster, deco, lvl, k, p)
            case = "sub-sampled"
        for mid in cluster.small_ids:
            cluster.machines[mid].pop("_lvl")
        used = cluster.sink_rounds
        assert used <= target, f"level pipeline used {used} > {target} rounds"
        for _ in range(target - used):
            cluster.empty_round()
        branches.append(cluster.end_branch())
        report_levels[lvl] = {
            "p": p,
            "case": case,
            "clustering_edges": deco.bucket_sizes.get(lvl, 0),
            "spanner_edges": len(per_level[lvl]),
        }
    cluster.merge_parallel(branches)
    for mid in cluster.small_ids:
        cluster.machines[mid].pop("A")

    H = combine_spanners(deco, per_level)
    report = {
        "k": k,
        "stretch_bound": 6 * k - 1,
        "delta": deco.delta,
        "levels": deco.levels,
        "star_edges": len(deco.star_edges),
        "size": len(H),
        "per_level": report_levels,
    }
    return H, report


def _bs_level(cluster, deco, lvl, k, p):
    """Sub-sampled spanner for one clustering graph.  Level records under
    "_lvl" carry witnesses; returns {pair: witness edge}."""
    sends = []
    for i, mid in enumerate(cluster.small_ids, start=1):
        rngm = cluster.rng("bs-sample", lvl, i)
        recs = cluster.machines[mid].state.get("_lvl") or []
        payload = []
        for j in range(1, k):
            payload.extend(
                (j, c, cp, wu, wv)
                for _, c, cp, wu, wv in recs
                if rngm.random() < p
            )
        if payload:
            sends.append((mid, LARGE, payload))
    inbox = cluster.round(sends)
    samples = [set() for _ in range(max(0, k - 1))]
    witness = {}
    for _, payload in inbox.get(LARGE, []):
        for j, c, cp, wu, wv in payload:
            pr = _pair(c, cp)
            samples[j - 1].add(pr)
            w = _pair(wu, wv)
            if pr not in witness or w < witness[pr]:
                witness[pr] = w

    vertices = deco.vertices_at(lvl)
    hist, recluster = _bs_centers_and_histories(
        cluster.rng("bs-centers", lvl), vertices, samples, k, len(vertices)
    )

    _deliver_histories(cluster, "_lvl", hist, sides=(1, 2))
    for mid in cluster.small_ids:
        mach = cluster.machines[mid]
        cands = []
        for _, c, cp, wu, wv in mach.state.get("_lvl") or []:
            for v, ctr, u in _candidates_for_edge(c, cp, hist):
                cands.append((v, ctr, u, wu, wv))
        mach.put("_cand", cands)
    primitives.het_sort(cluster, "_cand", key=lambda r: (r[0], r[1]))
    removal = primitives.aggregate(
        cluster, "_cand",
        part_fn=lambda r: (r[0], r[1]),
        map_fn=lambda r: (r[2], r[3], r[4]),
        reduce_fn=min,
    )
    for mid in cluster.small_ids:
        cluster.machines[mid].pop("_cand")

    chosen = {pr: witness[pr] for pr in recluster}
    for (v, _c), (u, wu, wv) in removal.items():
        chosen[_pair(v, u)] = _pair(wu, wv)
    return chosen
