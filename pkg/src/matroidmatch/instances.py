"""Problem instances, arrival models, generators, and JSON persistence.

An instance is a bipartite graph with n_offline ground elements on the
offline side, a budget function f over them, and an ordered list of online
arrivals, each bringing its neighbor set. The stored arrival order is the
adversarial order; arrival models reorder it and attach timestamps.

Seeded generation uses SplitMix64 (64-bit state, one mixed stream per
online vertex) so instances are reproducible bit-for-bit from (params,
seed) and the generator is easy to restate outside Python. Golden tests
should still pin serialized instance files rather than seeds.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

from .errors import InputError, ParseError
from .submodular import (
    Cardinality,
    ExplicitTable,
    GroundSet,
    PartitionBudget,
    SubmodularFn,
    UniformRank,
    WeightedThreshold,
    fn_from_spec,
    mask_members,
)

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


class SplitMix64:
    """Tiny portable PRNG; split(key) derives an independent child stream."""

    def __init__(self, seed: int):
        self.state = seed & _MASK64

    def next_u64(self) -> int:
        self.state = (self.state + _GOLDEN) & _MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)

    def random(self) -> float:
        return (self.next_u64() >> 11) * (2.0 ** -53)

    def randint(self, n: int) -> int:
        # rejection-free modulo is fine at desk scale
        return self.next_u64() % n

    def split(self, key: int) -> "SplitMix64":
        return SplitMix64(self.next_from(key))

    def next_from(self, key: int) -> int:
        tmp = SplitMix64((self.state ^ (key * _GOLDEN)) & _MASK64)
        return tmp.next_u64()


@dataclass(frozen=True)
class Arrival:
    id: int
    nbrs: tuple[int, ...]


@dataclass
class Instance:
    name: str
    n_offline: int
    f: SubmodularFn
    arrivals: list[Arrival] = field(default_factory=list)

    @property
    def ground(self) -> GroundSet:
        return self.f.ground

    @property
    def m_online(self) -> int:
        return len(self.arrivals)

    def edges(self) -> list[tuple[int, int]]:
        """(offline u, online v) pairs."""
        return [(u, arr.id) for arr in self.arrivals for u in arr.nbrs]

    def neighbor_mask(self, arrival: Arrival) -> int:
        m = 0
        for u in arrival.nbrs:
            m |= 1 << u
        return m

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "n_offline": self.n_offline,
            "f": self.f.to_spec(),
            "arrivals": [{"id": a.id, "nbrs": list(a.nbrs)} for a in self.arrivals],
        }


@dataclass(frozen=True)
class ArrivalModel:
    """How online vertices are ordered and stamped.

    kind is one of 'adversarial' (stored order, rank/m timestamps),
    'permutation' (seeded uniform shuffle, rank/m timestamps), or
    'timestamps' (i.i.d. uniform draws, sorted ascending, ties by id).
    """

    kind: str = "adversarial"
    seed: int = 0

    KINDS = ("adversarial", "permutation", "timestamps")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise InputError(f"unknown arrival model {self.kind!r}; expected one of {self.KINDS}")

    @classmethod
    def adversarial(cls) -> "ArrivalModel":
        return cls("adversarial")

    @classmethod
    def permutation(cls, seed: int) -> "ArrivalModel":
        return cls("permutation", seed)

    @classmethod
    def timestamps(cls, seed: int) -> "ArrivalModel":
        return cls("timestamps", seed)


def order_arrivals(instance: Instance, model: ArrivalModel) -> list[tuple[Arrival, float]]:
    """Processing order with a timestamp per arrival, ascending."""
    arrivals = list(instance.arrivals)
    m = len(arrivals)
    if m == 0:
        return []
    if model.kind == "adversarial":
        return [(a, (i + 1) / m) for i, a in enumerate(arrivals)]
    if model.kind == "permutation":
        rng = SplitMix64(model.seed)
        for i in range(m - 1, 0, -1):  # Fisher-Yates
            j = rng.randint(i + 1)
            arrivals[i], arrivals[j] = arrivals[j], arrivals[i]
        return [(a, (i + 1) / m) for i, a in enumerate(arrivals)]
    # timestamps: one i.i.d. uniform per arrival, ties broken by id
    rng = SplitMix64(model.seed)
    stamped = [(a, rng.random()) for a in arrivals]
    stamped.sort(key=lambda at: (at[1], at[0].id))
    return stamped


# ---------------------------------------------------------------------------
# Generators
# ---------------------------------------------------------------------------

def gen_upper_triangular(n: int) -> Instance:
    """v_j neighbors {u_j, ..., u_n} under cardinality: opt = n, and the
    adversarial order is the classic hard sequence for ratio 1 - 1/e."""
    if n < 1:
        raise InputError(f"n must be >= 1, got {n}")
    g = GroundSet(n)
    arrivals = [Arrival(j, tuple(range(j, n))) for j in range(n)]
    return Instance(f"triangular-{n}", n, Cardinality(g), arrivals)


def gen_random(n: int, m: int, p: float, f: SubmodularFn | None = None,
               seed: int = 0, name: str | None = None) -> Instance:
    """G(n, m, p) bipartite: each (u, v) edge present independently with
    probability p, decided by a per-online-vertex SplitMix64 stream."""
    if n < 1 or m < 0:
        raise InputError(f"need n >= 1 and m >= 0, got n={n}, m={m}")
    if not 0.0 <= p <= 1.0:
        raise InputError(f"edge probability p = {p} outside [0, 1]")
    g = GroundSet(n)
    if f is None:
        f = Cardinality(g)
    if f.ground.size != n:
        raise InputError(f"f is on a ground set of size {f.ground.size}, not {n}")
    root = SplitMix64(seed)
    arrivals = []
    for j in range(m):
        stream = root.split(j + 1)
        nbrs = tuple(u for u in range(n) if stream.random() < p)
        arrivals.append(Arrival(j, nbrs))
    if name is None:
        name = f"random-n{n}-m{m}-p{p:g}-s{seed}-{f.family}"
    return Instance(name, n, f, arrivals)


def random_coverage_table(n: int, seed: int, universe: int | None = None) -> ExplicitTable:
    """Random weighted coverage function as an explicit table.

    Element u covers a random subset of a weighted universe; f(S) is the
    weight covered by S. Always nonnegative, monotone, and submodular, and
    generically none of the closed-form families.
    """
    if n < 1 or n > 12:
        raise InputError(f"coverage tables supported for 1 <= n <= 12, got {n}")
    if universe is None:
        universe = 2 * n + 1
    rng = SplitMix64(seed)
    weights = [0.05 + rng.random() for _ in range(universe)]
    covers = []
    for _ in range(n):
        mask = 0
        for j in range(universe):
            if rng.random() < 0.45:
                mask |= 1 << j
        covers.append(mask)
    values = []
    for smask in range(1 << n):
        covered = 0
        for u in mask_members(smask):
            covered |= covers[u]
        values.append(sum(weights[j] for j in mask_members(covered)))
    return ExplicitTable(GroundSet(n), values)


def _random_matroid_fn(n: int, stream: SplitMix64) -> SubmodularFn:
    g = GroundSet(n)
    pick = stream.randint(3)
    if pick == 0 or n == 1:
        return Cardinality(g)
    if pick == 1:
        return UniformRank(g, 1 + stream.randint(n))
    # random partition with caps >= 1 so no element is spanned by the empty set
    k = 1 + stream.randint(min(3, n))
    blocks = [[] for _ in range(k)]
    for u in range(n):
        blocks[stream.randint(k)].append(u)
    blocks = [b for b in blocks if b]
    caps = [1 + stream.randint(2) for _ in blocks]
    return PartitionBudget(g, blocks, caps)


def make_suite(count: int = 200, n_max: int = 12, m_max: int = 12,
               seed: int = 0) -> list[Instance]:
    """Deterministic mixed-family test suite of at least `count` instances.

    Starts with the triangular family, then cycles random graphs through
    all five function families. Explicit tables come from random coverage,
    so every instance is monotone submodular by construction.
    """
    if count < 1:
        raise InputError("count must be >= 1")
    suite = [gen_upper_triangular(n) for n in range(1, min(n_max, 12) + 1)]
    root = SplitMix64(seed ^ 0xC0FFEE)
    i = 0
    while len(suite) < count:
        n = 2 + i % (n_max - 1)
        m = 1 + (i * 5 + 3) % m_max
        p = (0.15, 0.35, 0.55, 0.75, 0.95)[i % 5]
        s = root.next_u64() >> 16
        kind = i % 5
        g = GroundSet(n)
        if kind == 0:
            f = Cardinality(g)
        elif kind == 1:
            f = UniformRank(g, 1 + i % n)
        elif kind == 2:
            f = _random_matroid_fn(n, SplitMix64(s))
        elif kind == 3:
            w_stream = SplitMix64(s ^ 0xBEEF)
            weights = [0.25 + w_stream.random() for _ in range(n)]
            f = WeightedThreshold(g, weights, 1.0 + w_stream.random() * n / 2)
        else:
            f = random_coverage_table(min(n, 8), s)
            n = f.ground.size
        inst = gen_random(n, m, p, f, seed=s, name=None)
        inst.name = f"suite-{len(suite):03d}-{inst.name}"
        suite.append(inst)
        i += 1
    return suite


def make_matroid_suite(count: int = 20, n_max: int = 8, m_max: int = 8,
                       seed: int = 1) -> list[Instance]:
    """Instances whose f is a matroid rank with no rank-zero singletons."""
    if count < 1:
        raise InputError("count must be >= 1")
    suite = []
    root = SplitMix64(seed ^ 0x5EED)
    i = 0
    while len(suite) < count:
        n = 2 + i % (n_max - 1)
        m = 1 + (i * 3 + 1) % m_max
        p = (0.3, 0.5, 0.7, 0.9)[i % 4]
        s = root.next_u64() >> 16
        f = _random_matroid_fn(n, SplitMix64(s))
        inst = gen_random(n, m, p, f, seed=s)
        inst.name = f"matroid-{len(suite):03d}-{inst.name}"
        suite.append(inst)
        i += 1
    return suite


# ---------------------------------------------------------------------------
# Persistence
# ---------------------------------------------------------------------------

def instance_from_dict(data: dict, where: str = "instance") -> Instance:
    def need(obj, key, ctx):
        if not isinstance(obj, dict) or key not in obj:
            raise ParseError(f"{ctx}: missing field '{key}'")
        return obj[key]

    name = need(data, "name", where)
    n = need(data, "n_offline", where)
    if not isinstance(n, int) or n < 0:
        raise ParseError(f"{where}.n_offline: expected a nonnegative int, got {n!r}")
    fspec = need(data, "f", where)
    try:
        f = fn_from_spec(fspec, GroundSet(n))
    except InputError as e:
        raise ParseError(f"{where}.f: {e}") from e
    raw = need(data, "arrivals", where)
    if not isinstance(raw, list):
        raise ParseError(f"{where}.arrivals: expected a list")
    arrivals = []
    seen_ids = set()
    for i, entry in enumerate(raw):
        ctx = f"{where}.arrivals[{i}]"
        vid = need(entry, "id", ctx)
        if not isinstance(vid, int):
            raise ParseError(f"{ctx}.id: expected an int, got {vid!r}")
        if vid in seen_ids:
            raise ParseError(f"{ctx}.id: duplicate online id {vid}")
        seen_ids.add(vid)
        nbrs = need(entry, "nbrs", ctx)
        if not isinstance(nbrs, list):
            raise ParseError(f"{ctx}.nbrs: expected a list")
        seen_u = set()
        for j, u in enumerate(nbrs):
            if not isinstance(u, int) or not 0 <= u < n:
                raise ParseError(
                    f"{ctx}.nbrs[{j}]: neighbor {u!r} out of range (n_offline={n})")
            if u in seen_u:
                raise ParseError(f"{ctx}.nbrs[{j}]: duplicate neighbor {u}")
            seen_u.add(u)
        arrivals.append(Arrival(vid, tuple(nbrs)))
    return Instance(str(name), n, f, arrivals)


def save(instance: Instance, path: str | os.PathLike):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(instance.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load(path: str | os.PathLike) -> Instance:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as e:
            raise ParseError(f"{path}: not valid JSON ({e})") from e
    return instance_from_dict(data, where=str(path))
