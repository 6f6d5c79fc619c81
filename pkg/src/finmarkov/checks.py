"""Named verifiers for the structural identities of stationary processes:
partial spreadability, the Markov sequence property, pyramidal correlations,
the invariance-principle hierarchy, lumped processes, and the end-to-end
de Finetti suite.

Every check reports a named verdict together with an anchor string naming
the exact identity it decides, and a concrete witness on failure.  All
verdicts are exact; there are no tolerances anywhere.
"""

from __future__ import annotations

import itertools
import json
import time
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import _kernels as kern
from .dilation import (
    ChainSpec,
    ProcessModel,
    build_first_order_dilation,
    build_markov_dilation,
    dilation_property_check,
)
from .finprob import (
    FinSpace,
    Partition,
    local_filtration_markov_check,
)
from .rep import PointRep, intertwining_check, triangular_tower_check


@dataclass(frozen=True)
class CheckResult:
    check: str
    anchor: str
    ok: bool
    witness: str | None = None
    micros: int | None = None


@dataclass
class VerificationReport:
    entries: list = field(default_factory=list)

    def add(self, check: str, anchor: str, ok: bool, witness=None, micros=None):
        self.entries.append(CheckResult(check, anchor, bool(ok), witness, micros))
        return ok

    def extend(self, other: "VerificationReport"):
        self.entries.extend(other.entries)

    @property
    def passed(self) -> bool:
        return all(e.ok for e in self.entries)

    def failures(self):
        return [e for e in self.entries if not e.ok]

    def to_json(self, include_timing: bool = False) -> str:
        out = []
        for e in self.entries:
            item = {"check": e.check, "anchor": e.anchor, "verdict": "pass" if e.ok else "fail"}
            if e.witness:
                item["witness"] = e.witness
            if include_timing and e.micros is not None:
                item["micros"] = e.micros
            out.append(item)
        return json.dumps(out, indent=2)

    def lines(self):
        for e in self.entries:
            mark = "PASS" if e.ok else "FAIL"
            extra = f"  [{e.witness}]" if e.witness else ""
            yield f"{mark}  {e.check}  --  {e.anchor}{extra}"


class _Timer:
    def __enter__(self):
        self.t0 = time.perf_counter_ns()
        return self

    def __exit__(self, *exc):
        self.micros = (time.perf_counter_ns() - self.t0) // 1000


# ---------------------------------------------------------------------------
# process views
# ---------------------------------------------------------------------------


class ProcessView:
    """A stationary sequence of finite-valued random variables read off a
    graded model: the k-th variable is the base coordinate transported by k
    applications of the time evolution, optionally composed with a function
    of the state space (a lumping)."""

    def __init__(self, rep: PointRep, base: FinSpace, value_map, horizon: int, label="process"):
        self.rep = rep
        self.base = base  # the value space of the variables
        self.value_map = np.asarray(value_map, dtype=np.int64)
        self.K = horizon
        self.label = label
        self._parts: dict = {}

    @staticmethod
    def from_model(model: ProcessModel) -> "ProcessView":
        d = model.spec.d
        return ProcessView(model.rep, model.spec.pi, np.arange(d), model.K, "chain")

    def lump(self, f) -> "ProcessView":
        """The view of f(X_k): value space atoms are merged along f."""
        f = np.asarray(f, dtype=np.int64)
        if len(f) != self.base.n:
            raise ValueError("lumping map must be total on the state space")
        f_canon, nvals = kern.canonicalize(f)
        weights = [Fraction(0)] * nvals
        for i, w in enumerate(self.base.weights):
            weights[int(f_canon[i])] += w
        lumped = FinSpace(tuple(weights))
        return ProcessView(
            self.rep, lumped, f_canon[self.value_map], self.K, f"{self.label}/lumped"
        )

    def x_table(self, k: int, level: int) -> np.ndarray:
        return self.value_map[self.rep.x_table(k, level)]

    def interval_partition(self, m: int, n: int, level: int) -> Partition:
        """Canonical filtration algebra generated by X_m .. X_n at a level."""
        key = (m, n, level)
        if key not in self._parts:
            labels = self.x_table(m, level)
            for k in range(m + 1, n + 1):
                labels = labels * self.base.n + self.x_table(k, level)
                labels, _ = kern.canonicalize(labels)
            self._parts[key] = Partition(labels)
        return self._parts[key]

    def joint_law(self, ks, level=None):
        g = self.rep.gspace
        level = self.K if level is None else level
        key = np.zeros(g.level_size(level), dtype=np.int64)
        for k in ks:
            key = key * self.base.n + self.x_table(k, level)
        num = kern.group_sum(key, g.level_weights(level), self.base.n ** len(ks))
        return num.reshape((self.base.n,) * len(ks)), g.level_denominator(level)


# ---------------------------------------------------------------------------
# partial spreadability
# ---------------------------------------------------------------------------


def partial_spreadability_check(view: ProcessView, horizon=None) -> VerificationReport:
    """Localization (L): alpha_n iota_0 = iota_0 for n >= 1, and
    stationarity (S): iota_n = alpha_0^n iota_0, as exact pullback identities.

    The definition quantifies over genuine monoid representations, so the
    represented relations are re-verified as a premise; a corrupted noise
    map fails here even when it still preserves the state.
    """
    rep, K = view.rep, view.K if horizon is None else horizon
    report = VerificationReport()
    prem_ok, prem_wit = True, None
    if rep.kind == "fplus":
        for k in range(K):
            for l in range(k + 1, K + 1):
                for m in range(max(K - 1, 1)):
                    good, atom = rep.relation_check(k, l, m)
                    if not good:
                        prem_ok = False
                        prem_wit = f"alpha_{k} alpha_{l} != alpha_{l+1} alpha_{k} at level-{m+2} atom {atom}"
                        break
                if not prem_ok:
                    break
            if not prem_ok:
                break
    report.add(
        "representation-premise",
        "the maps alpha_n satisfy the monoid relations",
        prem_ok,
        prem_wit,
    )
    level = K - 1
    x0 = view.x_table(0, level)
    drop = rep.drop_last(level)
    ok_all, wit = True, None
    for n in range(1, K):
        en = rep.eta(n, level)
        if not np.array_equal(x0[en], x0[drop]):
            ok_all = False
            y = int(np.argmax(x0[en] != x0[drop]))
            wit = f"alpha_{n} moves iota_0 at atom {y} of level {level + 1}"
            break
    report.add("localization", "alpha_n iota_0 = iota_0 for all n >= 1", ok_all, wit)

    ok_all, wit = True, None
    for n in range(1, K + 1):
        lhs = view.x_table(n, K)
        chain = rep.alpha_pullback([0] * n, K)
        rhs = view.value_map[rep.gspace.base_coord(chain, K - n)]
        if not np.array_equal(lhs, rhs):
            ok_all = False
            wit = f"iota_{n} differs from alpha_0^{n} iota_0"
            break
    report.add("stationarity", "iota_n = alpha_0^n iota_0 for all n", ok_all, wit)
    return report


def maximal_ps_check(view: ProcessView, horizon=None) -> VerificationReport:
    """Maximality: the range of iota_0 is the whole intersected fixed-point
    algebra M_0 = ∩_{k>=1} fix(alpha_k)."""
    K = view.K if horizon is None else horizon
    report = partial_spreadability_check(view, K)
    level = K
    range_part = Partition(view.x_table(0, level))
    m0 = view.rep.intersected_fixed_points(0, level)
    ok = range_part == m0
    wit = None
    if not ok:
        rel = "strictly coarser than" if range_part.coarsens(m0) else "different from"
        wit = f"iota_0 range has {range_part.nblocks} blocks, M_0 has {m0.nblocks} ({rel} M_0)"
    report.add("maximality", "iota_0(A) = M_0 = ∩_{k>=1} fix(alpha_k)", ok, wit)
    return report


# ---------------------------------------------------------------------------
# Markov sequence property
# ---------------------------------------------------------------------------


def markov_sequence_check(view: ProcessView, horizon=None) -> VerificationReport:
    """E_{A[0,n]} iota_{n+1} = E_{A[n,n]} iota_{n+1} for 0 <= n <= K-1, plus
    the equivalent local-filtration Markov property of the canonical family."""
    K = view.K if horizon is None else horizon
    rep = view.rep
    level = K
    w = rep.gspace.level_weights(level)
    report = VerificationReport()

    seq_ok, wit = True, None
    for n in range(K):
        past = view.interval_partition(0, n, level)
        now = view.interval_partition(n, n, level)
        nxt = view.x_table(n + 1, level)
        w_past = kern.group_sum(past.labels, w, past.nblocks)
        w_now = kern.group_sum(now.labels, w, now.nblocks)
        for j in range(view.base.n):
            hit = np.where(nxt == j, w, 0).astype(np.int64)
            s_past = kern.group_sum(past.labels, hit, past.nblocks)
            s_now = kern.group_sum(now.labels, hit, now.nblocks)
            lhs = s_past[past.labels].astype(object) * w_now[now.labels]
            rhs = s_now[now.labels].astype(object) * w_past[past.labels]
            neq = lhs != rhs
            if neq.any():
                seq_ok = False
                x = int(np.argmax(neq))
                wit = f"n={n}, value {j}: prediction from the past differs at atom {x}"
                break
        if not seq_ok:
            break
    report.add(
        "markov-sequence", "E[0,n] iota_{n+1} = E[n,n] iota_{n+1}", seq_ok, wit
    )

    filt = local_filtration_markov_check(
        lambda m, n: view.interval_partition(m, n, level), K, w
    )
    report.add(
        "canonical-filtration-markov",
        "E[0,n] E[n,K] = E[n,n] on the canonical local filtration",
        filt.is_markov,
        "; ".join(filt.witnesses[:2]) or None,
    )
    report.add(
        "canonical-filtration-minimal",
        "A_I ∨ A_J = A_{I∪J} for overlapping intervals",
        filt.locally_minimal,
    )
    report.add(
        "markov-equivalence",
        "sequence Markov property coincides with filtration Markov property",
        seq_ok == filt.is_markov,
    )
    return report


# ---------------------------------------------------------------------------
# pyramidal correlations
# ---------------------------------------------------------------------------


def qregression_check(view: ProcessView, transition, ks, a_elems, b_elems, law=None) -> VerificationReport:
    """Compare the model moment psi(iota_{k1}(a1 b1) ... iota_{kr}(ar br))
    with the nested transition-operator expression
    phi(a1 T^{k2-k1}(a2 ... T^{kr-k_{r-1}}(ar br) ...) b1), and, when a
    path law is supplied, with the brute-force path expectation."""
    report = VerificationReport()
    ks = tuple(ks)
    if list(ks) != sorted(ks) or len(set(ks)) != len(ks):
        raise ValueError("time indices must be strictly increasing")
    d = view.base.n
    a_elems = [tuple(Fraction(x) for x in a) for a in a_elems]
    b_elems = [tuple(Fraction(x) for x in b) for b in b_elems]

    num, den = view.joint_law(ks)
    model_val = Fraction(0)
    for cell in np.ndindex(*((d,) * len(ks))):
        if int(num[cell]) == 0:
            continue
        factor = Fraction(int(num[cell]), den)
        for t, s in enumerate(cell):
            factor *= a_elems[t][s] * b_elems[t][s]
        model_val += factor

    # nested pyramid: a1 T^{g1}( a2 T^{g2}( ... (ar br) ... ) b2 ) b1
    inner = tuple(a_elems[-1][s] * b_elems[-1][s] for s in range(d))
    for t in range(len(ks) - 2, -1, -1):
        gap = ks[t + 1] - ks[t]
        powered = transition.power(gap)
        moved = tuple(
            sum(powered.rows[i][j] * inner[j] for j in range(d)) for i in range(d)
        )
        inner = tuple(a_elems[t][s] * moved[s] * b_elems[t][s] for s in range(d))
    pyramid_val = sum(w * v for w, v in zip(view.base.weights, inner))

    report.add(
        "qregression",
        "psi(prod iota_{k_i}(a_i b_i)) = phi(a_1 T^{k_2-k_1}(... ) b_1)",
        model_val == pyramid_val,
        None if model_val == pyramid_val else f"model {model_val} vs pyramid {pyramid_val}",
    )
    if law is not None:
        brute = Fraction(0)
        mnum = _tensor_marginal(law.num, ks, law.K)
        for cell in np.ndindex(*((d,) * len(ks))):
            if int(mnum[cell]) == 0:
                continue
            factor = Fraction(int(mnum[cell]), law.den)
            for t, s in enumerate(cell):
                factor *= a_elems[t][s] * b_elems[t][s]
            brute += factor
        report.add(
            "qregression-path-law",
            "model moment equals the brute-force path expectation",
            model_val == brute,
            None if model_val == brute else f"model {model_val} vs paths {brute}",
        )
    return report


# ---------------------------------------------------------------------------
# invariance-principle hierarchy
# ---------------------------------------------------------------------------


def _tensor_marginal(num, ks, K):
    axes = tuple(t for t in range(K + 1) if t not in set(ks))
    out = num.sum(axis=axes) if axes else num
    order = sorted(range(len(ks)), key=lambda t: ks[t])
    inv = [0] * len(ks)
    for pos, t in enumerate(order):
        inv[t] = pos
    return np.transpose(out, axes=tuple(inv)) if len(ks) > 1 else out


@dataclass(frozen=True)
class HierarchyReport:
    stationary: bool
    spreadable: bool
    exchangeable: bool
    partially_spreadable: bool | None
    witnesses: dict
    report: VerificationReport

    @property
    def chain_consistent(self) -> bool:
        """exchangeable => spreadable => (partially spreadable =>) stationary"""
        if self.exchangeable and not self.spreadable:
            return False
        if self.spreadable and not self.stationary:
            return False
        if self.partially_spreadable is not None:
            if self.spreadable and not self.partially_spreadable:
                return False
            if self.partially_spreadable and not self.stationary:
                return False
        return True


def hierarchy_check(view: ProcessView, horizon=None) -> HierarchyReport:
    """Decide stationarity, spreadability and exchangeability exactly on the
    finite-horizon path law, and record the strictness witnesses."""
    K = view.K if horizon is None else horizon
    if K > 6:
        raise ValueError("hierarchy enumeration is desk-scale: horizon <= 6")
    num, den = view.joint_law(range(K + 1))
    witnesses = {}

    stationary = True
    for r in range(K):
        base = _tensor_marginal(num, tuple(range(r + 1)), K)
        for m in range(1, K - r + 1):
            win = _tensor_marginal(num, tuple(range(m, m + r + 1)), K)
            if not np.array_equal(base, win):
                stationary = False
                witnesses.setdefault(
                    "stationarity", f"window [{m},{m+r}] differs from [0,{r}]"
                )

    spreadable = True
    for r in range(1, K + 1):
        base = _tensor_marginal(num, tuple(range(r + 1)), K)
        for ks in itertools.combinations(range(K + 1), r + 1):
            win = _tensor_marginal(num, ks, K)
            if not np.array_equal(base, win):
                spreadable = False
                witnesses.setdefault(
                    "spreadability",
                    f"marginal at indices {ks} differs from [0,{r}]",
                )
                break
        if not spreadable:
            break

    exchangeable = True
    for i in range(K):  # adjacent transpositions generate all permutations
        if not np.array_equal(num, np.swapaxes(num, i, i + 1)):
            exchangeable = False
            witnesses.setdefault(
                "exchangeability", f"law changes under swapping times {i},{i+1}"
            )
            break

    from .rep import AtomBudgetError

    ps = None
    try:
        ps = partial_spreadability_check(view).passed
    except AtomBudgetError:
        pass

    # the decisions themselves are answers, not assertions: the check that
    # can fail is the consistency of the implication chain
    def verdict(name, holds):
        w = witnesses.get(name)
        return ("yes" if holds else "no") + (f" ({w})" if w else "")

    rep = VerificationReport()
    rep.add("stationary", "all marginal windows shift-invariant", True,
            verdict("stationarity", stationary))
    rep.add("spreadable", "marginals invariant along increasing reindexings",
            True, verdict("spreadability", spreadable))
    rep.add("exchangeable", "path law invariant under time permutations",
            True, verdict("exchangeability", exchangeable))
    if ps is not None:
        rep.add("partially-spreadable", "localization and stationarity of iota",
                True, "yes" if ps else "no")
    hr = HierarchyReport(stationary, spreadable, exchangeable, ps, witnesses, rep)
    rep.add("hierarchy", "exchangeable => spreadable => partially spreadable => stationary",
            hr.chain_consistent)
    return hr


# ---------------------------------------------------------------------------
# lumped processes
# ---------------------------------------------------------------------------


def lump_process(view: ProcessView, f) -> ProcessView:
    return view.lump(f)


def find_lumped_fixture(max_den: int = 4, horizon: int = 3):
    """First 3-state chain (entries with denominator max_den) and 2-block
    lumping whose image process fails the Markov property.

    Deterministic enumeration order; the first hit is frozen as a fixture.
    """
    maps = ([0, 0, 1], [0, 1, 0], [0, 1, 1])
    rows_choices = [
        tuple(Fraction(k, max_den) for k in parts)
        for parts in _compositions(max_den, 3)
    ]
    for r0 in rows_choices:
        for r1 in rows_choices:
            for r2 in rows_choices:
                try:
                    spec = ChainSpec.from_rows([r0, r1, r2])
                except ValueError:
                    continue
                model = build_markov_dilation(spec, horizon)
                view = ProcessView.from_model(model)
                for f in maps:
                    lumped = view.lump(f)
                    rep = markov_sequence_check(lumped)
                    if not rep.entries[0].ok:
                        return spec, list(f)
    raise RuntimeError("no lumped counterexample in range")


def _compositions(total, parts):
    if parts == 1:
        yield (total,)
        return
    for head in range(total + 1):
        for rest in _compositions(total - head, parts - 1):
            yield (head,) + rest


# ---------------------------------------------------------------------------
# the de Finetti suite
# ---------------------------------------------------------------------------


def definetti_suite(spec: ChainSpec, horizon: int, budget: int = 2_000_000) -> VerificationReport:
    """End-to-end verification for one chain: dilation, representation
    relations, partial and maximal partial spreadability, Markov property,
    distributional equality with the path law, tower and intertwining."""
    report = VerificationReport()
    K = horizon

    with _Timer() as t:
        _, coupling = build_first_order_dilation(spec, noise="compact", adopt=False)
        model = build_markov_dilation(spec, K, coupling, budget=budget)
    report.add(
        "construction",
        "first-order coupling compresses to T; model state-preserving",
        model.measure_preservation_check(),
        micros=t.micros,
    )

    with _Timer() as t:
        ok = all(
            model.rep.relation_check(k, l, m)[0]
            for k in range(K)
            for l in range(k + 1, K + 1)
            for m in range(K - 1)
        )
    report.add(
        "monoid-relations",
        "alpha_k alpha_l = alpha_{l+1} alpha_k for k < l",
        ok,
        micros=t.micros,
    )

    view = ProcessView.from_model(model)
    with _Timer() as t:
        sub = maximal_ps_check(view)
    for e in sub.entries:
        report.add(e.check, e.anchor, e.ok, e.witness, t.micros)

    with _Timer() as t:
        sub = markov_sequence_check(view)
    for e in sub.entries:
        report.add(e.check, e.anchor, e.ok, e.witness, t.micros)

    with _Timer() as t:
        dil = dilation_property_check(model)
    report.add(
        "dilation-powers",
        "T^n = iota* alpha^n iota for 0 <= n <= K",
        all(dil.power_ok.values()),
        micros=t.micros,
    )
    report.add(
        "moments-vs-path-law",
        "model moments equal path-law expectations",
        not dil.moment_failures,
        str(dil.moment_failures[0]) if dil.moment_failures else None,
    )
    report.add(
        "transition-equality",
        "equal transition operators give equal distributions",
        model.compressed_power(1) == spec.rows,
    )

    with _Timer() as t:
        tower = triangular_tower_check(model.rep)
    report.add(
        "triangular-tower",
        "every shifted fixed-point tower cell is a commuting square",
        tower.passed and tower.cells_agree,
        micros=t.micros,
    )
    report.add(
        "tower-intersections",
        "M_{n+1} ∩ alpha_0(M_{n+1}) = alpha_0(M_n)",
        all(tower.intersections.values()),
    )

    with _Timer() as t:
        ok, wit = True, None
        for n in range(1, K):
            for k in range(0, n):
                good, w = intertwining_check(model.rep, k, n)
                if not good:
                    ok, wit = False, f"k={k}, n={n}: {w}"
                    break
            if not ok:
                break
    report.add(
        "intertwining",
        "alpha_k Q_n = Q_{n+1} alpha_k for k < n",
        ok,
        wit,
        micros=t.micros,
    )
    return report
