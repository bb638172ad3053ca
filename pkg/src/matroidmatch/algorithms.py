"""Online algorithms: waterfilling cover, its primal-dual matching variant,
and the random-arrival greedy matching.

All three waterfilling entry points share one driver. Per arrival v the
water level a is the largest level in [0, 1] such that

    h(a) = (1 - a) + [fhat(y raised on N(v) to a) - fhat(y)] <= 1 + ALPHA,

where fhat is the Lovasz extension. h is continuous piecewise linear, so a
is found by an exact right-to-left segment scan over the chart boundaries
(no bisection); whenever a < 1 the budget is exhausted and h(a) = 1 + ALPHA
up to float rounding. The arrival pays z_v = 1 - a and the neighbors below
a are raised to a.

run_obvc computes the level with a modular closed form (neighbor levels
only) and exists both as the plain-graph algorithm and as an independent
cross-check of the chart path: on cardinality budgets run_mobvc must agree
with it to 1e-12.

run_mobm_pd additionally builds a fractional matching: each new chart
region splits its mass over the appended elements by their marginal values
in sigma_t order, scaled by 1 / (a + ALPHA), which makes every round's dual
increase exactly (1 + ALPHA) times its primal increase.

run_random_arrival_greedy is the integral matching algorithm for matroid
rank budgets: arrivals sorted by uniform timestamps, each takes its first
preferred neighbor outside the span of the current matched set; duals are
split by the rate e^(t-1).
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field

from .barchart import BarChart, NewRegion
from .constants import ALPHA, SNAP_EPS
from .errors import InputError, InvariantError, PreconditionError
from .instances import Arrival, ArrivalModel, Instance, SplitMix64, order_arrivals
from .submodular import SubmodularFn, is_matroid_rank, lovasz, mask_members, span_mask

ALGORITHMS = ("obvc", "mobvc", "mobm-pd", "greedy-ra")


def dual_split_rate(t: float) -> float:
    """e^(t - 1): the share of a matched round's budget handed to the online
    side under the random-arrival greedy."""
    return math.exp(t - 1.0)


# ---------------------------------------------------------------------------
# Water level
# ---------------------------------------------------------------------------

def _sup_below(bounds: list[float], hvals: list[float], target: float) -> float:
    """Largest a with h(a) <= target for a piecewise-linear h given by its
    values at the sorted breakpoints. Requires h(bounds[0]) <= target."""
    if hvals[-1] <= target:
        return bounds[-1]
    for i in range(len(bounds) - 2, -1, -1):
        h_lo, h_hi = hvals[i], hvals[i + 1]
        if h_lo <= target:
            # scan invariant: h_hi > target, so the slope here is positive
            a = bounds[i] + (target - h_lo) * (bounds[i + 1] - bounds[i]) / (h_hi - h_lo)
            return min(max(a, bounds[i]), bounds[i + 1])
    raise InvariantError("h(0) <= target must hold; no crossing found")


def _snap_to(bounds, a: float) -> float:
    for b in bounds:
        if abs(a - b) <= SNAP_EPS:
            return b
    return a


def water_level(chart: BarChart, y, nbrs, alpha: float = ALPHA) -> float:
    """Exact water level for an arrival with neighbor set nbrs.

    The chart must be the chart of y; segment slopes are read off its bars:
    on the bar with member set L the slope of h is -1 + f(L + nbrs) - f(L).
    Non-neighbor potentials matter too (they change the level sets), which
    is why the scan walks every chart boundary.
    """
    f = chart.f
    levels = chart.levels
    y = [float(v) for v in y]
    if len(y) != len(levels) or any(a != b for a, b in zip(y, levels)):
        raise InvariantError("chart is not the chart of the given potentials")
    nmask = 0
    for u in nbrs:
        nmask |= 1 << f.ground.check_element(u)

    bounds = [chart.intervals[0].lo]
    hvals = [1.0]
    g_acc = 0.0
    for iv in chart.intervals:
        gain = f.value_mask(iv.mask | nmask) - iv.height
        g_acc += iv.width * gain
        bounds.append(iv.hi)
        hvals.append(1.0 - iv.hi + g_acc)
    a = _sup_below(bounds, hvals, 1.0 + alpha)
    return _snap_to(bounds, a)


def _modular_water_level(y, nbrs, alpha: float = ALPHA) -> float:
    """Water level under a cardinality budget: h(a) = 1 - a + sum over
    neighbors of max(a - y_u, 0). Only neighbor levels are breakpoints."""
    levels = sorted(y[u] for u in nbrs)
    bounds = [0.0]
    hvals = [1.0]
    covered = 0.0  # sum of neighbor levels at or below the current bound
    k = 0
    for b in sorted(set(levels) | {1.0}):
        if not 0.0 < b <= 1.0:
            continue
        while k < len(levels) and levels[k] < b:
            covered += levels[k]
            k += 1
        bounds.append(b)
        hvals.append(1.0 - b + k * b - covered)
    a = _sup_below(bounds, hvals, 1.0 + alpha)
    return _snap_to(bounds, a)


# ---------------------------------------------------------------------------
# Run records
# ---------------------------------------------------------------------------

@dataclass
class RoundRecord:
    """One arrival's outcome.

    Waterfilling rounds carry the level a and the chart regions; greedy
    rounds carry the matched element and the timestamp. X is the set of
    offline elements whose potential changed this round. dP and dD are the
    primal and dual increments (dP stays 0 for cover-only runs).
    """

    v: int
    a: float | None = None
    X: tuple[int, ...] = ()
    regions: tuple[NewRegion, ...] = ()
    dP: float = 0.0
    dD: float = 0.0
    t: float | None = None
    z: float = 0.0
    matched: int | None = None
    x_inc: dict[int, float] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "v": self.v, "a": self.a, "X": list(self.X),
            "regions": [r.to_dict() for r in self.regions],
            "dP": self.dP, "dD": self.dD, "t": self.t, "z": self.z,
            "matched": self.matched,
            "x_inc": {str(u): val for u, val in sorted(self.x_inc.items())},
        }

    @staticmethod
    def from_dict(d: dict) -> "RoundRecord":
        return RoundRecord(
            v=d["v"], a=d["a"], X=tuple(d["X"]),
            regions=tuple(NewRegion.from_dict(r) for r in d["regions"]),
            dP=float(d["dP"]), dD=float(d["dD"]), t=d["t"], z=float(d["z"]),
            matched=d["matched"],
            x_inc={int(u): float(val) for u, val in d.get("x_inc", {}).items()},
        )


@dataclass
class OnlineState:
    """Final algorithm state: offline potentials y, online duals z, edge
    variables x, the bar chart (waterfilling runs only), and the matched
    element set."""

    y: list[float]
    z: dict[int, float]
    x: dict[tuple[int, int], float]
    chart: BarChart | None = None
    matched: frozenset[int] = frozenset()


@dataclass
class RunTrace:
    algorithm: str
    instance_name: str
    n_offline: int
    rounds: list[RoundRecord]
    state: OnlineState
    primal_value: float
    dual_value: float

    def to_dict(self) -> dict:
        return {
            "algorithm": self.algorithm,
            "instance": {"name": self.instance_name, "n_offline": self.n_offline},
            "alpha": ALPHA,
            "rounds": [r.to_dict() for r in self.rounds],
            "final": {
                "y": list(self.state.y),
                "z": [[v, zv] for v, zv in sorted(self.state.z.items())],
                "x": [[u, v, val] for (u, v), val in sorted(self.state.x.items())],
                "matched_offline": sorted(self.state.matched),
                "primal_value": self.primal_value,
                "dual_value": self.dual_value,
            },
        }

    @staticmethod
    def from_dict(d: dict) -> "RunTrace":
        fin = d["final"]
        state = OnlineState(
            y=[float(v) for v in fin["y"]],
            z={int(v): float(zv) for v, zv in fin["z"]},
            x={(int(u), int(v)): float(val) for u, v, val in fin["x"]},
            chart=None,
            matched=frozenset(fin["matched_offline"]),
        )
        return RunTrace(
            algorithm=d["algorithm"],
            instance_name=d["instance"]["name"],
            n_offline=int(d["instance"]["n_offline"]),
            rounds=[RoundRecord.from_dict(r) for r in d["rounds"]],
            state=state,
            primal_value=float(fin["primal_value"]),
            dual_value=float(fin["dual_value"]),
        )


def save_trace(trace: RunTrace, path: str | os.PathLike):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(trace.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_trace(path: str | os.PathLike) -> RunTrace:
    from .errors import ParseError
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as e:
            raise ParseError(f"{path}: not valid JSON ({e})") from e
    try:
        return RunTrace.from_dict(data)
    except (KeyError, TypeError, ValueError) as e:
        raise ParseError(f"{path}: not a run trace ({e!r})") from e


# ---------------------------------------------------------------------------
# Waterfilling runs
# ---------------------------------------------------------------------------

def _primal_increments(f: SubmodularFn, regions, denom: float) -> dict[int, float]:
    """Split each region's mass over its appended elements by their marginals
    in sigma_t order, scaled by 1 / denom."""
    inc: dict[int, float] = {}
    for r in regions:
        mask = 0
        for u in r.base:
            mask |= 1 << u
        prev = f.value_mask(mask)
        for u in r.appended:
            mask |= 1 << u
            cur = f.value_mask(mask)
            if cur != prev:
                inc[u] = inc.get(u, 0.0) + r.width * (cur - prev) / denom
            prev = cur
    return inc


def _run_waterfilling(instance: Instance, algorithm: str) -> RunTrace:
    f = instance.f
    n = instance.n_offline
    chart = BarChart.from_potentials(f, [0.0] * n)
    z: dict[int, float] = {}
    x: dict[tuple[int, int], float] = {}
    rounds: list[RoundRecord] = []
    for arr in instance.arrivals:
        y = chart.levels
        if algorithm == "obvc":
            a = _modular_water_level(y, arr.nbrs)
        else:
            a = water_level(chart, y, arr.nbrs)
        X = tuple(u for u in sorted(set(arr.nbrs)) if y[u] < a)
        regions = tuple(chart.raise_to(X, a))
        zv = 1.0 - a
        z[arr.id] = zv
        dd = zv + sum(r.area for r in regions)
        rec = RoundRecord(v=arr.id, a=a, X=X, regions=regions, dD=dd, z=zv)
        if algorithm == "mobm-pd":
            inc = _primal_increments(f, regions, a + ALPHA)
            for u, val in inc.items():
                x[(u, arr.id)] = val
            rec.x_inc = inc
            rec.dP = sum(inc.values())
        rounds.append(rec)
    state = OnlineState(y=chart.levels, z=z, x=x, chart=chart)
    primal = sum(x.values())
    dual = chart.area() + sum(z.values())
    return RunTrace(algorithm, instance.name, n, rounds, state, primal, dual)


def run_obvc(instance: Instance) -> RunTrace:
    """Online fractional vertex cover waterfilling on a plain bipartite
    graph. The budget must be cardinality."""
    if instance.f.family != "cardinality":
        raise PreconditionError("run_obvc requires a cardinality budget; use run_mobvc")
    return _run_waterfilling(instance, "obvc")


def run_mobvc(instance: Instance) -> RunTrace:
    """Online fractional cover with a monotone submodular offline budget."""
    return _run_waterfilling(instance, "mobvc")


def run_mobm_pd(instance: Instance) -> RunTrace:
    """Primal-dual waterfilling: the mobvc duals plus a fractional matching
    whose value is exactly dual / (1 + ALPHA)."""
    return _run_waterfilling(instance, "mobm-pd")


# ---------------------------------------------------------------------------
# Random-arrival greedy
# ---------------------------------------------------------------------------

@dataclass
class _GreedyOutcome:
    matched: dict[int, int]          # online id -> matched element
    y: list[float]
    z: dict[int, float]
    spanned_at: dict[int, float]     # element -> timestamp of the round that spanned it
    matched_mask: int
    per_round: list[tuple[int, float, int | None, int]]  # (vid, t, pick, newly-spanned mask)


def _greedy_core(f: SubmodularFn, ordered, preferences=None) -> _GreedyOutcome:
    """Run greedy over ordered (Arrival, t) pairs; shared by the public run
    and the critical-value replays."""
    n = f.ground.size
    matched: dict[int, int] = {}
    y = [0.0] * n
    z: dict[int, float] = {}
    spanned_at: dict[int, float] = {}
    per_round: list[tuple[int, float, int | None, int]] = []
    m_mask = 0
    span_now = span_mask(f, 0)
    for arr, t in ordered:
        order = preferences.get(arr.id, None) if preferences else None
        if order is None:
            candidates = sorted(arr.nbrs)
        else:
            in_nbrs = set(arr.nbrs)
            candidates = [u for u in order if u in in_nbrs]
        pick = None
        for u in candidates:
            if not (span_now >> u) & 1:
                pick = u
                break
        if pick is None:
            per_round.append((arr.id, t, None, 0))
            continue
        rate = dual_split_rate(t)
        matched[arr.id] = pick
        z[arr.id] = (1.0 + ALPHA) * rate
        yval = (1.0 + ALPHA) * (1.0 - rate)
        new_span = span_mask(f, m_mask | (1 << pick))
        newly = new_span & ~span_now
        per_round.append((arr.id, t, pick, newly))
        rest, u = newly, 0
        while rest:
            if rest & 1:
                y[u] = yval
                spanned_at[u] = t
            rest >>= 1
            u += 1
        m_mask |= 1 << pick
        span_now = new_span
    return _GreedyOutcome(matched, y, z, spanned_at, m_mask, per_round)


def run_random_arrival_greedy(instance: Instance,
                              model: ArrivalModel | None = None,
                              preferences: dict[int, tuple[int, ...]] | None = None,
                              timestamps: dict[int, float] | None = None) -> RunTrace:
    """Integral greedy matching under random arrivals.

    The budget must be a matroid rank. Arrivals are ordered by the model
    (default adversarial, stamping rank/m) unless explicit timestamps are
    given, which is the hook used by tests and the lemma auditors. Each
    arrival takes its first preferred neighbor outside span(matched set);
    preferences default to ascending id.
    """
    f = instance.f
    if not is_matroid_rank(f):
        raise PreconditionError("random-arrival greedy requires a matroid rank budget")
    if timestamps is not None:
        missing = [a.id for a in instance.arrivals if a.id not in timestamps]
        if missing:
            raise InputError(f"timestamps missing for arrivals {missing}")
        ordered = sorted(((a, float(timestamps[a.id])) for a in instance.arrivals),
                         key=lambda at: (at[1], at[0].id))
        for _, t in ordered:
            if not 0.0 <= t <= 1.0:
                raise InputError("timestamps must lie in [0, 1]")
    else:
        ordered = order_arrivals(instance, model or ArrivalModel.adversarial())

    n = instance.n_offline
    out = _greedy_core(f, ordered, preferences)
    x = {(u, vid): 1.0 for vid, u in out.matched.items()}

    # per-round dual increments, with the potential gain measured honestly
    # through the Lovasz extension rather than assumed from the update rule
    rounds: list[RoundRecord] = []
    fhat_prev = 0.0
    y_run = [0.0] * n
    for vid, t, pick, newly in out.per_round:
        if pick is None:
            rounds.append(RoundRecord(v=vid, t=t))
            continue
        raised = mask_members(newly)
        for u in raised:
            y_run[u] = out.y[u]
        fhat = lovasz(f, y_run)
        zv = out.z[vid]
        rounds.append(RoundRecord(
            v=vid, X=raised, dP=1.0, dD=zv + (fhat - fhat_prev),
            t=t, z=zv, matched=pick))
        fhat_prev = fhat

    state = OnlineState(y=out.y, z=out.z, x=x, chart=None,
                        matched=frozenset(mask_members(out.matched_mask)))
    primal = float(len(out.matched))
    dual = lovasz(f, out.y) + sum(out.z.values())
    return RunTrace("greedy-ra", instance.name, n, rounds, state, primal, dual)


# ---------------------------------------------------------------------------
# Rounding
# ---------------------------------------------------------------------------

def round_cover(instance: Instance, y, z: dict[int, float],
                gamma: float | None = None, seed: int | None = None,
                tol: float = 1e-9) -> tuple[frozenset[int], frozenset[int]]:
    """Round fractional cover duals to an integral cover with one shared
    threshold: u enters at y_u >= gamma, v at z_v >= 1 - gamma (both
    inclusive). Requires y_u + z_v >= 1 - tol on every edge, which makes
    the output a cover for every gamma in [0, 1]."""
    y = [float(v) for v in y]
    if len(y) != instance.n_offline:
        raise InputError(f"need {instance.n_offline} potentials, got {len(y)}")
    for u, vid in instance.edges():
        if y[u] + z.get(vid, 0.0) < 1.0 - tol:
            raise PreconditionError(
                f"edge ({u}, {vid}) is uncovered: y={y[u]}, z={z.get(vid, 0.0)}")
    if gamma is None:
        gamma = SplitMix64(0 if seed is None else seed).random()
    if not 0.0 <= gamma <= 1.0:
        raise InputError(f"gamma = {gamma} outside [0, 1]")
    S = frozenset(u for u in range(instance.n_offline) if y[u] >= gamma)
    T = frozenset(vid for vid, zv in z.items() if zv >= 1.0 - gamma)
    return S, T
