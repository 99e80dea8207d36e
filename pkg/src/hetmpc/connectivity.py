"""Linear sketches and sketch-based connectivity.

Every vertex gets an L0-sampler sketch of its incidence vector (signed
coordinates over ordered vertex pairs).  Sketches are linear, so the sum
over a vertex set S is supported exactly on the cut E[S, V-S]; the large
machine runs Boruvka on summed sketches, drawing one cut edge per
supernode per phase, to find connected components in a constant number
of simulated rounds.  Component counts over geometric weight thresholds
give a (1 +/- 2*eps) estimate of the minimum spanning forest weight.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import primitives
from .simcore import Cluster, RunFailed, distribute_edges


# ---------------------------------------------------------------------------
# field arithmetic (prime q > n^4, int64-safe split multiplication)

_SPLIT = 21  # valid while q < 2^42, i.e. n <= 1024


def _is_prime(x):
    if x < 2:
        return False
    for p in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        if x % p == 0:
            return x == p
    d, s = x - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        y = pow(a, d, x)
        if y in (1, x - 1):
            continue
        for _ in range(s - 1):
            y = y * y % x
            if y == x - 1:
                break
        else:
            return False
    return True


def field_prime(n):
    """Smallest prime above n^4 (checksums live in this field)."""
    q = n ** 4 + 1
    while not _is_prime(q):
        q += 1
    return q


def _mulmod(a, b, q):
    """(a*b) % q on int64 numpy arrays, a,b in [0,q), q < 2^42."""
    hi = b >> _SPLIT
    lo = b & ((1 << _SPLIT) - 1)
    return ((a * hi % q << _SPLIT) + a * lo) % q


def _poly_eval(coeffs, xs, q):
    """Horner evaluation of one polynomial at int64 array xs, mod q."""
    acc = np.zeros_like(xs)
    for c in coeffs:
        acc = (_mulmod(acc, xs, q) + int(c)) % q
    return acc


# ---------------------------------------------------------------------------
# sketch keys and per-coordinate tables


@dataclass
class SketchKeys:
    """Shared hash randomness: one level-selection polynomial per
    (instance, level) and one checksum polynomial per instance, each of
    degree t-1 over the prime field (t-wise independence).

    All coefficients expand deterministically from a small master seed,
    so only the seed (a handful of words) travels over the network.
    """

    n: int
    q: int
    R: int  # sampler instances
    L: int  # subsampling levels
    t: int  # independence
    master_seed: int
    level_coeffs: np.ndarray  # (R, L, t)
    check_coeffs: np.ndarray  # (R, t)

    def words(self):
        return 4  # the master seed (128 bits)


def sketch_params(n):
    wb = max(1, math.ceil(math.log2(n)))
    return 2 * wb, 2 * wb, 2 * wb  # R, L, t


def make_keys(rng, n) -> SketchKeys:
    return keys_from_seed(rng.getrandbits(128), n)


def keys_from_seed(master_seed, n) -> SketchKeys:
    import random as _random

    q = field_prime(n)
    R, L, t = sketch_params(n)
    exp = _random.Random(master_seed)
    level = np.array(
        [[[exp.randrange(q) for _ in range(t)] for _ in range(L)]
         for _ in range(R)],
        dtype=np.int64,
    )
    check = np.array(
        [[exp.randrange(q) for _ in range(t)] for _ in range(R)],
        dtype=np.int64,
    )
    return SketchKeys(n=n, q=q, R=R, L=L, t=t, master_seed=master_seed,
                      level_coeffs=level, check_coeffs=check)


class CoordTable:
    """Level membership and checksum values of a fixed coordinate set.

    Coordinate of edge (a,b), a<b, is a*n + b.  A coordinate belongs to
    level l of instance r with probability ~2^-l (hash threshold test).
    """

    def __init__(self, keys: SketchKeys, coords):
        self.keys = keys
        self.coords = np.asarray(sorted(set(int(c) for c in coords)),
                                 dtype=np.int64)
        self.index = {int(c): i for i, c in enumerate(self.coords)}
        q, R, L = keys.q, keys.R, keys.L
        mc = len(self.coords)
        self.member = np.zeros((mc, R, L), dtype=np.int64)
        self.check = np.zeros((mc, R), dtype=np.int64)
        for r in range(R):
            for l in range(L):
                u = _poly_eval(keys.level_coeffs[r, l], self.coords, q)
                self.member[:, r, l] = (u << l) < q
            self.check[:, r] = _poly_eval(keys.check_coeffs[r], self.coords, q)


def edge_coord(n, u, v):
    a, b = (u, v) if u < v else (v, u)
    return a * n + b


class SketchPartial:
    """Partial (or complete) sketch of a sum of incidence vectors:
    per-cell count, signed id-sum, and field checksum, (R, L) each."""

    __slots__ = ("count", "idsum", "check", "q")

    def __init__(self, count, idsum, check, q):
        self.count = count
        self.idsum = idsum
        self.check = check
        self.q = q

    def words(self):
        # count 1 word, id-sum 2, checksum 4 per cell
        return 7 * self.count.size

    @classmethod
    def zero(cls, keys):
        shape = (keys.R, keys.L)
        return cls(np.zeros(shape, np.int64), np.zeros(shape, np.int64),
                   np.zeros(shape, np.int64), keys.q)

    def add(self, other):
        self.count += other.count
        self.idsum += other.idsum
        self.check = (self.check + other.check) % self.q


def _reduce_partials(table: CoordTable, vals):
    """Aggregate reducer: leaf values are ("c", sign, coord row) tuples,
    inner values are SketchPartial objects; the result is their sum."""
    out = SketchPartial.zero(table.keys)
    rows, signs = [], []
    for v in vals:
        if isinstance(v, SketchPartial):
            out.add(v)
        else:
            _, sign, ci = v
            rows.append(ci)
            signs.append(sign)
    if rows:
        m = table.member[rows]  # (k, R, L)
        s = np.asarray(signs, dtype=np.int64)[:, None, None]
        out.count += (m * s).sum(axis=0)
        out.idsum += (m * s * table.coords[rows][:, None, None]).sum(axis=0)
        chk = (table.check[rows][:, :, None] * s) * m
        out.check = (out.check + chk.sum(axis=0)) % table.keys.q
    return out


def sketch_build(cluster: Cluster, keys: SketchKeys, table: CoordTable,
                 state_key="E"):
    """Per-vertex sketches at the large machine.

    Keys are broadcast, edges arranged by endpoint, and the partial
    sketches (signed contributions of locally held incident edges) are
    summed up the aggregation tree using linearity.
    Returns {vertex: SketchPartial}.
    """
    n = cluster.config.n
    primitives.tree_broadcast(cluster, keys)
    primitives.arrange_nodes(cluster, state_key, "D")

    def map_fn(r):
        u, v = r[0], r[1]
        sign = 1 if u < v else -1
        return ("c", sign, table.index[edge_coord(n, u, v)])

    out = primitives.aggregate(
        cluster, "D",
        part_fn=lambda r: r[0],
        map_fn=map_fn,
        reduce_fn=lambda vals: _reduce_partials(table, vals),
    )
    for mid in cluster.small_ids:
        cluster.machines[mid].pop("D")
    return out


# ---------------------------------------------------------------------------
# decoding


EMPTY = "empty"
FAIL = "fail"


def l0_sample(sketch: SketchPartial, keys: SketchKeys, r: int, n: int):
    """Decode one edge from instance r of a summed sketch.

    Scans the levels sparsest-first for a verifying one-sparse cell
    (count = +-1, integral recovered coordinate, checksum match).
    Returns an edge (a, b), EMPTY, or FAIL.
    """
    q = keys.q
    if (not sketch.count[r].any() and not sketch.idsum[r].any()
            and not sketch.check[r].any()):
        return EMPTY
    for l in range(keys.L - 1, -1, -1):
        c = int(sketch.count[r, l])
        if c == 0:
            continue
        ids = int(sketch.idsum[r, l])
        if ids % c:
            continue
        x = ids // c
        if not (0 <= x < n * n):
            continue
        gx = int(_poly_eval(keys.check_coeffs[r],
                            np.array([x], dtype=np.int64), q)[0])
        if (c % q) * gx % q == sketch.check[r, l] % q:
            a, b = divmod(x, n)
            if a < b < n:
                return (a, b)
    return FAIL


# ---------------------------------------------------------------------------
# connectivity by sketch Boruvka


class _DSU:
    def __init__(self, n):
        self.parent = list(range(n))

    def find(self, x):
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if rb < ra:
            ra, rb = rb, ra
        self.parent[rb] = ra
        return True


def connected_components(cluster: Cluster, graph, state_key="E",
                         keys=None, table=None, tag="cc"):
    """Component label (smallest member id) per vertex; O(1) rounds.

    Boruvka on sketches: each phase sums the per-vertex sketches inside
    every current supernode and draws one cut edge from a fresh sampler
    instance.  A run whose samplers fail outright is retried once with
    fresh keys.
    """
    n = cluster.config.n
    for attempt in range(2):
        if keys is None or attempt == 1:
            keys = make_keys(cluster.rng("sketch-keys", tag, attempt), n)
            table = None
        if table is None:
            coords = sorted({
                edge_coord(n, e[0], e[1])
                for mid in cluster.small_ids
                for e in cluster.machines[mid].state.get(state_key) or []
            })
            table = CoordTable(keys, coords)
        sketches = sketch_build(cluster, keys, table, state_key)
        full = {v: sketches.get(v) for v in range(n)}

        dsu = _DSU(n)
        phases = 0
        ok = True
        for r in range(keys.R):
            groups = {}
            for v in range(n):
                groups.setdefault(dsu.find(v), []).append(v)
            merged_any = False
            failed_any = False
            for root, members in groups.items():
                s = SketchPartial.zero(keys)
                for v in members:
                    if full[v] is not None:
                        s.add(full[v])
                res = l0_sample(s, keys, r, n)
                if res == EMPTY:
                    continue
                if res == FAIL:
                    failed_any = True
                    continue
                a, b = res
                if dsu.union(a, b):
                    merged_any = True
            phases += 1
            if not merged_any and not failed_any:
                break
            if not merged_any and failed_any and r == keys.R - 1:
                ok = False
        else:
            ok = False
        if ok:
            labels = {v: dsu.find(v) for v in range(n)}
            return labels, {"phases": phases, "instances": keys.R,
                            "retried": attempt}
        keys = None
        table = None
    raise RunFailed("sketch samplers failed on both key draws")


# ---------------------------------------------------------------------------
# MST weight estimation by threshold component counting


def mst_weight_estimate(cluster: Cluster, graph, eps, max_weight=None):
    """(1 +/- 2*eps) estimate of the minimum spanning forest weight.

    Runs connectivity on every threshold subgraph (edge weight <=
    (1+eps)^i) conceptually in parallel and combines the component
    counts: w_hat = n - cc_r + sum_i eps*(1+eps)^i * (cc_i - cc_r).
    """
    if not (0 < eps <= 1):
        raise ValueError(f"eps must lie in (0, 1], got {eps}")
    n = cluster.config.n
    W = max_weight
    if W is None:
        W = max((e[2] for e in graph.edges), default=1)
    r = 0 if W <= 1 else math.ceil(math.log(W) / math.log(1 + eps))

    distribute_edges(cluster, [tuple(e) for e in graph.edges])
    shared_keys = make_keys(cluster.rng("sketch-keys", "est"), n)
    all_coords = sorted({
        edge_coord(n, e[0], e[1]) for e in graph.edges
    })
    shared_table = CoordTable(shared_keys, all_coords)

    branches = []
    ccs = []
    for i in range(r + 1):
        tau = (1 + eps) ** i
        cluster.start_branch()
        for mid in cluster.small_ids:
            mach = cluster.machines[mid]
            es = mach.state.get("E") or []
            mach.put("T", [(e[0], e[1]) for e in es if e[2] <= tau])
        labels, _ = connected_components(
            cluster, graph, state_key="T",
            keys=shared_keys, table=shared_table, tag=("est", i),
        )
        for mid in cluster.small_ids:
            cluster.machines[mid].pop("T")
        ccs.append(len(set(labels.values())))
        branches.append(cluster.end_branch())
    cluster.merge_parallel(branches)

    cc_r = ccs[-1]
    w_hat = float(n - cc_r)
    for i in range(r):
        w_hat += eps * (1 + eps) ** i * (ccs[i] - cc_r)
    report = {
        "eps": eps,
        "max_weight": W,
        "thresholds": r + 1,
        "cc_per_threshold": ccs,
        "estimate": w_hat,
    }
    return w_hat, report
