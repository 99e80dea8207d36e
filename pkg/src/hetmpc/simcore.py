"""Round-based simulator of a heterogeneous cluster.

One "large" machine with near-linear (optionally superlinear) memory plus
K small machines with sublinear memory.  All memory and traffic is counted
in words of ceil(log2 n) bits.  Computation proceeds in synchronous rounds;
between rounds local computation is free, only resident state and traffic
are metered.
"""

from __future__ import annotations

import hashlib
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction


class ConfigError(ValueError):
    """Invalid cluster configuration."""


class CapacityError(RuntimeError):
    """Input or intermediate data does not fit the available memory."""


class BudgetError(RuntimeError):
    """A machine exceeded its word budget in strict mode."""


class RunFailed(RuntimeError):
    """A randomized algorithm exhausted its retries."""


@dataclass(frozen=True, order=True)
class MachineId:
    role: str  # "L" (large) or "S" (small)
    index: int

    def __str__(self):
        return "L" if self.role == "L" else f"S{self.index}"


LARGE = MachineId("L", 0)


@dataclass
class ClusterConfig:
    """Model parameters fixing every machine's word budget.

    Small machines have polylog_c * n^gamma * ceil(log2 n)^polylog_e words.
    The large machine has polylog_c * n^(1+f) * ceil(log2 n)^polylog_e words
    when the superlinear exponent f_exp is set, else the same with n^1.
    """

    n: int
    m: int
    gamma: float = 0.5
    polylog_c: int = 128
    polylog_e: int = 2
    f_exp: Fraction | None = None
    seed: int = 0

    def __post_init__(self):
        if self.n < 2:
            raise ConfigError(f"need n >= 2, got {self.n}")
        if self.m < 1:
            raise ConfigError(f"need m >= 1, got {self.m}")
        if not (0.0 < self.gamma < 1.0):
            raise ConfigError(f"gamma must lie in (0,1), got {self.gamma}")
        if self.polylog_c < 1 or self.polylog_e < 1:
            raise ConfigError("polylog_c and polylog_e must be positive")
        if self.f_exp is not None:
            f = Fraction(self.f_exp)
            if f < Fraction(1, max(1, math.ceil(math.log2(self.n)))):
                raise ConfigError(f"f_exp must be >= 1/log2(n), got {f}")
            object.__setattr__ if False else None
            self.f_exp = f

    @property
    def word_bits(self) -> int:
        return max(1, math.ceil(math.log2(self.n)))

    @property
    def num_small(self) -> int:
        return max(1, math.ceil(self.m / (self.n ** self.gamma)))

    @property
    def small_budget(self) -> int:
        return math.floor(
            self.polylog_c * (self.n ** self.gamma) * self.word_bits ** self.polylog_e
        )

    @property
    def large_budget(self) -> int:
        exp = 1.0 if self.f_exp is None else 1.0 + float(self.f_exp)
        return math.floor(
            self.polylog_c * round(self.n ** exp) * self.word_bits ** self.polylog_e
        )


class Packed:
    """Payload wrapper for bit-packed values (membership masks etc.).

    Charged ceil(bits / word_bits) words instead of one word per item.
    """

    __slots__ = ("value", "bits", "_wb")

    def __init__(self, value, bits, word_bits):
        self.value = value
        self.bits = bits
        self._wb = word_bits

    def words(self):
        return max(1, math.ceil(self.bits / self._wb))


def payload_words(obj) -> int:
    """Number of words a payload occupies when serialized.

    Integers, identifiers, weights and ranks are one word each; an edge
    record (tuple of three ints) is three words.  Floats are rejected:
    all metered data is integral.
    """
    if isinstance(obj, bool) or isinstance(obj, int):
        return 1
    if isinstance(obj, (tuple, list)):
        total = 0
        for x in obj:
            total += 1 if type(x) is int else payload_words(x)
        return total
    if obj is None or isinstance(obj, str):
        return 1
    if isinstance(obj, dict):
        return sum(payload_words(k) + payload_words(v) for k, v in obj.items())
    w = getattr(obj, "words", None)
    if w is not None:
        return w() if callable(w) else int(w)
    raise TypeError(f"unmeterable payload of type {type(obj).__name__}")


@dataclass
class RoundTelemetry:
    round: int
    sent: dict
    received: dict
    resident: dict
    violations: list = field(default_factory=list)


class Machine:
    __slots__ = ("mid", "budget", "state", "dirty")

    def __init__(self, mid, budget):
        self.mid = mid
        self.budget = budget
        self.state = {}
        self.dirty = True

    def touch(self):
        self.dirty = True

    def put(self, key, value):
        self.state[key] = value
        self.dirty = True

    def pop(self, key):
        self.dirty = True
        return self.state.pop(key, None)

    def resident_words(self) -> int:
        return sum(payload_words(v) for v in self.state.values())


class Cluster:
    """1 large + K small machines exchanging messages in synchronous rounds.

    `round(sends)` runs one communication round: it delivers the queued
    messages (canonically ordered by sender then sequence number), meters
    per-machine traffic and resident state, and records telemetry.  Budget
    violations raise in strict mode and are only logged otherwise.
    """

    def __init__(self, config: ClusterConfig, strict: bool = True):
        self.config = config
        self.strict = strict
        self.machines = {LARGE: Machine(LARGE, config.large_budget)}
        self.small_ids = [MachineId("S", i) for i in range(1, config.num_small + 1)]
        for mid in self.small_ids:
            self.machines[mid] = Machine(mid, config.small_budget)
        self.telemetry: list[RoundTelemetry] = []
        self._sinks = [self.telemetry]
        self._resident_cache = {mid: 0 for mid in self.machines}
        self.inboxes = {}

    # -- basic accessors -------------------------------------------------

    @property
    def large(self) -> Machine:
        return self.machines[LARGE]

    def small(self, i: int) -> Machine:
        return self.machines[MachineId("S", i)]

    @property
    def rounds_used(self) -> int:
        return len(self.telemetry)

    @property
    def sink_rounds(self) -> int:
        """Rounds recorded in the currently active telemetry sink."""
        return len(self._sinks[-1])

    def rng(self, *tags) -> random.Random:
        """Deterministic substream for (seed, *tags)."""
        raw = repr((self.config.seed,) + tags).encode()
        h = hashlib.blake2b(raw, digest_size=8).digest()
        return random.Random(int.from_bytes(h, "big"))

    # -- the round barrier -----------------------------------------------

    def round(self, sends) -> dict:
        """Deliver messages; returns {dst: [(src, payload), ...]}.

        `sends` is a list of (src, dst, payload) triples in send order.
        """
        sent, received = {}, {}
        inbox = {}
        for seq, (src, dst, payload) in enumerate(sends):
            w = payload_words(payload)
            sent[src] = sent.get(src, 0) + w
            received[dst] = received.get(dst, 0) + w
            inbox.setdefault(dst, []).append((src, seq, payload))
        for dst in inbox:
            inbox[dst].sort(key=lambda t: (t[0], t[1]))
            inbox[dst] = [(src, payload) for src, _, payload in inbox[dst]]

        violations = []
        for mid, w in sent.items():
            if w > self.machines[mid].budget:
                violations.append((mid, "SendBudget"))
        for mid, w in received.items():
            if w > self.machines[mid].budget:
                violations.append((mid, "RecvBudget"))
        for mid, mach in self.machines.items():
            if mach.dirty:
                self._resident_cache[mid] = mach.resident_words()
                mach.dirty = False
        for mid, w in self._resident_cache.items():
            if w > self.machines[mid].budget:
                violations.append((mid, "StateBudget"))

        tel = RoundTelemetry(
            round=len(self._sinks[-1]),
            sent=sent,
            received=received,
            resident=dict(self._resident_cache),
            violations=violations,
        )
        self._sinks[-1].append(tel)
        if violations and self.strict:
            raise BudgetError(
                "budget violations: "
                + ", ".join(f"{mid}:{kind}" for mid, kind in violations)
            )
        self.inboxes = inbox
        return inbox

    def empty_round(self):
        return self.round([])

    # -- parallel branch accounting ---------------------------------------

    def start_branch(self):
        """Start recording rounds into a separate branch telemetry list."""
        branch = []
        self._sinks.append(branch)
        return branch

    def end_branch(self):
        return self._sinks.pop()

    def merge_parallel(self, branches):
        """Merge branch telemetries as if they ran concurrently.

        Round count is the maximum across branches; per-round traffic is
        summed; violations are unioned.
        """
        depth = max((len(b) for b in branches), default=0)
        for r in range(depth):
            sent, received, resident, violations = {}, {}, {}, []
            for b in branches:
                if r >= len(b):
                    continue
                t = b[r]
                for mid, w in t.sent.items():
                    sent[mid] = sent.get(mid, 0) + w
                for mid, w in t.received.items():
                    received[mid] = received.get(mid, 0) + w
                for mid, w in t.resident.items():
                    resident[mid] = max(resident.get(mid, 0), w)
                violations.extend(t.violations)
            self._sinks[-1].append(
                RoundTelemetry(len(self._sinks[-1]), sent, received, resident, violations)
            )


def init_cluster(config: ClusterConfig, strict: bool = True) -> Cluster:
    return Cluster(config, strict=strict)


def run_round(cluster: Cluster, program) -> RoundTelemetry:
    """Run one round of a per-machine step program.

    `program(machine, inbox) -> [(dst, payload), ...]` executes on every
    machine (large first, then small machines in index order) with the
    inbox delivered at the previous barrier.
    """
    sends = []
    for mid in [LARGE] + cluster.small_ids:
        out = program(cluster.machines[mid], cluster.inboxes.get(mid, []))
        for dst, payload in out or []:
            sends.append((mid, dst, payload))
    cluster.round(sends)
    return cluster.telemetry[-1] if cluster._sinks[-1] is cluster.telemetry else cluster._sinks[-1][-1]


def distribute_edges(cluster: Cluster, edges, placement="seeded", shard_size=None):
    """Place edge records on the small machines (initial input placement).

    adversarial: pack in input order, `shard_size` per machine;
    roundrobin: stripe; seeded: permute with the global seed, then stripe.
    """
    K = len(cluster.small_ids)
    records = [tuple(e) for e in edges]
    rec_words = sum(payload_words(r) for r in records)
    if rec_words > K * cluster.config.small_budget:
        raise CapacityError(
            f"{rec_words} edge words exceed aggregate small memory "
            f"{K * cluster.config.small_budget}"
        )
    shards = [[] for _ in range(K)]
    if placement == "adversarial":
        per = shard_size if shard_size is not None else math.ceil(len(records) / K)
        for i, r in enumerate(records):
            k = i // per
            if k >= K:
                raise CapacityError("adversarial shard size too small for machine count")
            shards[k].append(r)
    elif placement == "roundrobin":
        for i, r in enumerate(records):
            shards[i % K].append(r)
    elif placement == "seeded":
        order = list(range(len(records)))
        cluster.rng("placement").shuffle(order)
        for i, j in enumerate(order):
            shards[i % K].append(records[j])
    else:
        raise ConfigError(f"unknown placement {placement!r}")
    for k, mid in enumerate(cluster.small_ids):
        if sum(payload_words(r) for r in shards[k]) > cluster.config.small_budget:
            raise CapacityError(f"shard for {mid} exceeds its budget")
        cluster.machines[mid].put("E", shards[k])


def telemetry_json(cluster: Cluster) -> dict:
    """Telemetry export: one JSON-ready document per run."""
    rounds = []
    for t in cluster.telemetry:
        machines = sorted(
            set(t.sent) | set(t.received),
            key=lambda mid: (mid.role, mid.index),
        )
        rounds.append(
            {
                "round": t.round,
                "traffic": [
                    {
                        "machine": str(mid),
                        "sent": t.sent.get(mid, 0),
                        "received": t.received.get(mid, 0),
                        "resident": t.resident.get(mid, 0),
                    }
                    for mid in machines
                ],
                "violations": [[str(mid), kind] for mid, kind in t.violations],
            }
        )
    return {
        "rounds_used": cluster.rounds_used,
        "rounds": rounds,
        "violations": [
            [t.round, str(mid), kind]
            for t in cluster.telemetry
            for mid, kind in t.violations
        ],
    }
