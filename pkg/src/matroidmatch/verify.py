"""Offline oracles and lemma-level auditors.

Everything here is deliberately independent of the online code paths: the
optimum is a brute-force enumeration, matching feasibility re-derives the
constraints from scratch, and the charging audit recomputes integrals from
the raw trace regions. A disagreement between an auditor and a run is
evidence against the run, never the other way around.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .algorithms import RunTrace, _greedy_core, dual_split_rate
from .barchart import charge_integral
from .constants import ALPHA, DEFAULT_TOL, charge_potential
from .errors import InputError, SizeError
from .instances import Instance
from .submodular import SubmodularFn, is_matroid_rank, lovasz, mask_members

OFFLINE_OPT_LIMIT = 24
EXHAUSTIVE_MATCHING_LIMIT = 20


# ---------------------------------------------------------------------------
# Offline optimum
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class OptCertificate:
    """Offline optimum min over S of f(S) + |{v : N(v) not within S}|.

    argmin_S is the lexicographically-smallest minimizing bitmask as a
    frozenset; cover_online is the forced online side {v : N(v) not within
    argmin_S}. The pair is itself a vertex cover, so the value upper-bounds
    the fractional dual optimum and (by LP duality for these instances)
    equals the fractional matching optimum.
    """

    value: float
    argmin_offline: frozenset[int]
    cover_online: frozenset[int]


def offline_opt(instance: Instance) -> OptCertificate:
    """Brute force over all subsets of the offline side (n <= 24)."""
    n = instance.n_offline
    if n > OFFLINE_OPT_LIMIT:
        raise SizeError(f"offline_opt enumerates 2^n subsets; n = {n} > {OFFLINE_OPT_LIMIT}")
    masks = np.arange(1 << n, dtype=np.int64)
    uncovered = np.zeros(1 << n, dtype=np.float64)
    for arr in instance.arrivals:
        nm = instance.neighbor_mask(arr)
        if nm:
            uncovered += (masks & nm) != nm
    cost = instance.f.values_for_masks(masks) + uncovered
    best = int(np.argmin(cost))  # first index = smallest bitmask on ties
    smask = best
    cover = frozenset(arr.id for arr in instance.arrivals
                      if (instance.neighbor_mask(arr) & ~smask) != 0)
    return OptCertificate(float(cost[best]), frozenset(mask_members(smask)), cover)


# ---------------------------------------------------------------------------
# Matching and duality checks
# ---------------------------------------------------------------------------

@dataclass
class CheckReport:
    ok: bool
    violations: list[str] = field(default_factory=list)
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"ok": self.ok, "violations": list(self.violations),
                "details": dict(self.details)}


def check_matching(x: dict[tuple[int, int], float], instance: Instance,
                   tol: float = DEFAULT_TOL, samples: int = 10_000,
                   seed: int = 0) -> CheckReport:
    """Feasibility of a fractional matching: x >= 0, unit online mass, and
    offline mass within the budget polytope (x(S) <= f(S) for all S;
    exhaustive up to n = 20, sampled with singletons and the full set
    beyond)."""
    n = instance.n_offline
    f = instance.f
    report = CheckReport(ok=True)
    online_ids = {arr.id for arr in instance.arrivals}
    nbr_sets = {arr.id: set(arr.nbrs) for arr in instance.arrivals}
    x_u = [0.0] * n
    x_v: dict[int, float] = {}
    for (u, vid), val in x.items():
        if not (0 <= u < n) or vid not in online_ids:
            report.violations.append(f"x[{u},{vid}]: no such vertex pair")
            continue
        if u not in nbr_sets[vid]:
            report.violations.append(f"x[{u},{vid}]: not an edge")
        if val < -tol:
            report.violations.append(f"x[{u},{vid}] = {val} < 0")
        x_u[u] += val
        x_v[vid] = x_v.get(vid, 0.0) + val
    for vid, tot in sorted(x_v.items()):
        if tot > 1.0 + tol:
            report.violations.append(f"online mass at v={vid} is {tot} > 1")

    if n <= EXHAUSTIVE_MATCHING_LIMIT:
        load = np.zeros(1, dtype=np.float64)
        for u in range(n):
            load = np.concatenate([load, load + x_u[u]])
        fvals = f.values_for_masks(np.arange(1 << n, dtype=np.int64))
        bad = np.nonzero(load > fvals + tol)[0]
        if bad.size:
            m = int(bad[0])
            report.violations.append(
                f"offline mass {load[m]:.12g} exceeds budget f(S) = {fvals[m]:.12g} "
                f"on S = {sorted(mask_members(m))}")
        report.details["budget_mode"] = "exhaustive"
    else:
        rng = np.random.default_rng(seed)
        cand = [1 << u for u in range(n)] + [(1 << n) - 1]
        cand += [int(m) for m in rng.integers(0, 1 << n, size=samples, dtype=np.uint64)]
        for m in cand:
            tot = sum(x_u[u] for u in mask_members(m))
            if tot > f.value_mask(m) + tol:
                report.violations.append(
                    f"offline mass {tot:.12g} exceeds budget on S = {sorted(mask_members(m))}")
                break
        report.details["budget_mode"] = "sampled"

    report.details["total"] = sum(x.values())
    report.ok = not report.violations
    return report


def check_weak_duality(x: dict[tuple[int, int], float], y, z: dict[int, float],
                       f: SubmodularFn, tol: float = DEFAULT_TOL) -> CheckReport:
    """sum of x <= Lovasz(f, y) + sum of z, always, for feasible pairs."""
    primal = sum(x.values())
    dual = lovasz(f, y) + sum(z.values())
    ok = primal <= dual + tol
    report = CheckReport(ok=ok, details={"primal": primal, "dual": dual})
    if not ok:
        report.violations.append(f"primal {primal:.12g} exceeds dual {dual:.12g}")
    return report


def check_cover(y, z: dict[int, float], instance: Instance,
                tol: float = DEFAULT_TOL) -> CheckReport:
    """Fractional cover feasibility: y_u + z_v >= 1 on every edge."""
    report = CheckReport(ok=True)
    for u, vid in instance.edges():
        have = y[u] + z.get(vid, 0.0)
        if have < 1.0 - tol:
            report.violations.append(
                f"edge ({u}, {vid}) uncovered: y + z = {have:.12g} < 1")
    report.ok = not report.violations
    return report


def expected_rounding_cost(f: SubmodularFn, y, z: dict[int, float]) -> float:
    """Exact expectation over the rounding threshold gamma of
    f({u : y_u >= gamma}) + |{v : z_v >= 1 - gamma}|.

    Piecewise-constant in gamma with breakpoints at the potentials and at
    1 - z_v, integrated segment by segment. Equals Lovasz(f, y) + sum z
    whenever every z_v lies in [0, 1]; for larger z the online term
    saturates at probability one.
    """
    n = f.ground.size
    y = [float(v) for v in y]
    points = {0.0, 1.0}
    points |= {v for v in y if 0.0 < v < 1.0}
    points |= {1.0 - zv for zv in z.values() if 0.0 < 1.0 - zv < 1.0}
    bounds = sorted(points)
    total = 0.0
    for g1, g2 in zip(bounds, bounds[1:]):
        smask = 0
        for u in range(n):
            if y[u] >= g2:
                smask |= 1 << u
        t_count = sum(1 for zv in z.values() if 1.0 - zv <= g1)
        total += (g2 - g1) * (f.value_mask(smask) + t_count)
    return total


# ---------------------------------------------------------------------------
# Charging audit
# ---------------------------------------------------------------------------

@dataclass
class RoundAudit:
    v: int
    in_opt_cover: bool
    charge: float
    required: float
    ok: bool
    pervertex_lhs: float | None = None  # obvc per-vertex form only

    def to_dict(self) -> dict:
        return {"v": self.v, "in_opt_cover": self.in_opt_cover,
                "charge": self.charge, "required": self.required, "ok": self.ok,
                "pervertex_lhs": self.pervertex_lhs}


@dataclass
class AuditReport:
    rounds: list[RoundAudit]
    total_charge: float
    budget: float
    global_ok: bool
    ok: bool

    def to_dict(self) -> dict:
        return {"rounds": [r.to_dict() for r in self.rounds],
                "total_charge": self.total_charge, "budget": self.budget,
                "global_ok": self.global_ok, "ok": self.ok}


def audit_charging(trace: RunTrace, cert: OptCertificate, instance: Instance,
                   alpha: float = ALPHA, tol: float = DEFAULT_TOL) -> AuditReport:
    """Audit the charging argument behind the (1 + alpha) cover guarantee.

    Per round with online vertex outside the optimal cover, the new chart
    regions must collect charge at least 1 - a under the density
    (1 - x) / (x + alpha); those charges must sum to at most alpha * f of
    the optimal cover's offline part. The per-round inequality actually
    holds for every round (budget exhaustion does not care about the
    optimum), so it is checked everywhere but only rounds outside the
    cover feed the global sum. For plain-graph traces the per-vertex form
    sum over raised u of F(a) - F(old y_u) >= 1 - a is checked as well,
    F being the charge antiderivative.
    """
    if trace.algorithm not in ("obvc", "mobvc", "mobm-pd"):
        raise InputError(f"charging audit applies to waterfilling traces, "
                         f"not {trace.algorithm!r}")
    rounds_out: list[RoundAudit] = []
    total = 0.0
    y_old = [0.0] * trace.n_offline
    ok = True
    for rec in trace.rounds:
        charge = charge_integral(rec.regions, alpha)
        required = 1.0 - rec.a
        in_cover = rec.v in cert.cover_online
        round_ok = charge >= required - tol
        pervertex = None
        if trace.algorithm == "obvc":
            pervertex = sum(charge_potential(rec.a, alpha) - charge_potential(y_old[u], alpha)
                            for u in rec.X)
            round_ok = round_ok and pervertex >= required - tol
        if not in_cover:
            total += charge
        ok = ok and round_ok
        rounds_out.append(RoundAudit(rec.v, in_cover, charge, required, round_ok, pervertex))
        for u in rec.X:
            y_old[u] = rec.a
    budget = alpha * instance.f.value(cert.argmin_offline)
    global_ok = total <= budget + tol
    return AuditReport(rounds_out, total, budget, global_ok, ok and global_ok)


# ---------------------------------------------------------------------------
# Random-arrival lemmas
# ---------------------------------------------------------------------------

def critical_value(instance: Instance, v: int, timestamps: dict[int, float],
                   preferences: dict[int, tuple[int, ...]] | None = None) -> dict[int, float]:
    """Per-element critical times for the greedy run without online vertex v.

    Element u maps to the timestamp of the round that brought it into the
    span of the matched set, or 1.0 if that never happens. Timestamps are
    needed for every arrival except v.
    """
    others = [a for a in instance.arrivals if a.id != v]
    if len(others) == len(instance.arrivals):
        raise InputError(f"no arrival with id {v}")
    missing = [a.id for a in others if a.id not in timestamps]
    if missing:
        raise InputError(f"timestamps missing for arrivals {missing}")
    ordered = sorted(((a, float(timestamps[a.id])) for a in others),
                     key=lambda at: (at[1], at[0].id))
    out = _greedy_core(instance.f, ordered, preferences)
    return {u: out.spanned_at.get(u, 1.0) for u in range(instance.n_offline)}


@dataclass
class EdgeFeasibility:
    u: int
    v: int
    mean: float
    stderr: float
    ok: bool

    def to_dict(self) -> dict:
        return {"u": self.u, "v": self.v, "mean": self.mean,
                "stderr": self.stderr, "ok": self.ok}


@dataclass
class RandomArrivalReport:
    trials: int
    mean_value: float
    dominance_checked: int
    dominance_violations: int
    monotonicity_min_slack: float
    monotonicity_ok: bool
    edges: list[EdgeFeasibility]
    feasibility_ok: bool
    skipped_rank_zero_edges: int

    @property
    def ok(self) -> bool:
        return (self.dominance_violations == 0 and self.monotonicity_ok
                and self.feasibility_ok)

    def to_dict(self) -> dict:
        return {"trials": self.trials, "mean_value": self.mean_value,
                "dominance_checked": self.dominance_checked,
                "dominance_violations": self.dominance_violations,
                "monotonicity_min_slack": self.monotonicity_min_slack,
                "monotonicity_ok": self.monotonicity_ok,
                "edges": [e.to_dict() for e in self.edges],
                "feasibility_ok": self.feasibility_ok,
                "skipped_rank_zero_edges": self.skipped_rank_zero_edges,
                "ok": self.ok}


def verify_random_arrival_lemmas(instance: Instance, trials: int = 1000,
                                 seed: int = 0, tol: float = DEFAULT_TOL,
                                 preferences: dict[int, tuple[int, ...]] | None = None
                                 ) -> RandomArrivalReport:
    """Monte-Carlo check of the three structural lemmas behind the greedy
    guarantee, against independently drawn timestamp profiles.

    Per edge (u, v) with critical time t_c computed from the run without v:
    dominance (t_v < t_c implies v is matched), monotonicity (the final
    potential of u in the full run is at least (1 + ALPHA)(1 - e^(t_c - 1)),
    whatever t_v is), and in-expectation dual feasibility
    (mean of y_u + z_v at least 1 - 3 standard errors).

    Edges at rank-zero elements are skipped: f({u}) = 0 means u can never
    leave the span of the empty set, no matching ever uses the edge, and
    the per-edge lemmas are vacuous for it.
    """
    f = instance.f
    if not is_matroid_rank(f):
        raise InputError("random-arrival lemmas require a matroid rank budget")
    if trials < 2:
        raise InputError("need at least 2 trials")
    m = instance.m_online
    edges = [(u, arr.id) for arr in instance.arrivals for u in arr.nbrs]
    live_edges = [(u, vid) for u, vid in edges if f.value_mask(1 << u) >= 0.5]
    skipped = len(edges) - len(live_edges)

    rng = np.random.default_rng(seed)
    draws = rng.random((trials, m))
    ids = [arr.id for arr in instance.arrivals]
    arr_by_id = {arr.id: arr for arr in instance.arrivals}

    value_sum = 0.0
    dom_checked = 0
    dom_violations = 0
    mono_min_slack = math.inf
    samples = np.empty((trials, len(live_edges)), dtype=np.float64)

    for k in range(trials):
        ts = {vid: float(draws[k, i]) for i, vid in enumerate(ids)}
        ordered = sorted(((arr_by_id[vid], ts[vid]) for vid in ids),
                         key=lambda at: (at[1], at[0].id))
        full = _greedy_core(f, ordered, preferences)
        value_sum += len(full.matched)
        tcrit: dict[int, dict[int, float]] = {}
        for vid in ids:
            if arr_by_id[vid].nbrs:
                tcrit[vid] = critical_value(instance, vid, ts, preferences)
        for j, (u, vid) in enumerate(live_edges):
            tc = tcrit[vid][u]
            if ts[vid] < tc:
                dom_checked += 1
                if vid not in full.matched:
                    dom_violations += 1
            bound = (1.0 + ALPHA) * (1.0 - dual_split_rate(tc))
            mono_min_slack = min(mono_min_slack, full.y[u] - bound)
            samples[k, j] = full.y[u] + full.z.get(vid, 0.0)

    edge_reports = []
    feas_ok = True
    if live_edges:
        means = samples.mean(axis=0)
        stderrs = np.sqrt(samples.var(axis=0) / trials)
        for j, (u, vid) in enumerate(live_edges):
            ok = means[j] >= 1.0 - 3.0 * stderrs[j] - tol
            feas_ok = feas_ok and bool(ok)
            edge_reports.append(EdgeFeasibility(u, vid, float(means[j]),
                                                float(stderrs[j]), bool(ok)))

    if math.isinf(mono_min_slack):
        mono_min_slack = 0.0
    return RandomArrivalReport(
        trials=trials,
        mean_value=value_sum / trials,
        dominance_checked=dom_checked,
        dominance_violations=dom_violations,
        monotonicity_min_slack=mono_min_slack,
        monotonicity_ok=mono_min_slack >= -tol,
        edges=edge_reports,
        feasibility_ok=feas_ok,
        skipped_rank_zero_edges=skipped,
    )
