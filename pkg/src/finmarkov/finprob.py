"""Finite commutative probability spaces with exact rational states.

Atoms carry strictly positive Fraction weights summing to 1 (faithfulness).
Unital subalgebras correspond exactly to partitions of the atom set, which
makes conditional expectations weighted block averages and lets operator
identities like E_P E_Q = E_R reduce to block-weight identities checked in
exact integer arithmetic.

The low-level checks work on plain label/weight arrays so the same code
serves both desk-size spaces and the large graded level spaces built in
:mod:`finmarkov.rep`.  Weight numerators are int64 over a common denominator;
comparisons that multiply weights are done on object (big-int) arrays, so no
intermediate result is ever rounded or overflowed.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import gcd

import numpy as np

from . import _kernels as kern
from .rationals import common_denominator, numerators_over, parse_rational


@dataclass(frozen=True)
class FinSpace:
    """Finite atom space with a faithful rational state."""

    weights: tuple[Fraction, ...]

    def __post_init__(self):
        if not self.weights:
            raise ValueError("empty atom space")
        if any(w <= 0 for w in self.weights):
            raise ValueError("state must be faithful: all weights positive")
        if sum(self.weights) != 1:
            raise ValueError(f"weights sum to {sum(self.weights)}, not 1")

    @property
    def n(self) -> int:
        return len(self.weights)

    @property
    def denominator(self) -> int:
        return common_denominator(self.weights)

    def weight_numerators(self) -> np.ndarray:
        num = numerators_over(self.weights, self.denominator)
        if not kern.fits_int64(self.denominator, self.n):
            raise OverflowError("weights too fine for int64 numerators")
        return np.array(num, dtype=np.int64)

    @staticmethod
    def from_rationals(items) -> "FinSpace":
        return FinSpace(tuple(parse_rational(x) for x in items))

    @staticmethod
    def uniform(n: int) -> "FinSpace":
        return FinSpace((Fraction(1, n),) * n)

    def element(self, values) -> "AlgebraElement":
        return AlgebraElement(self, tuple(parse_rational(v) for v in values))

    def indicator(self, atoms) -> "AlgebraElement":
        atoms = set(atoms)
        return AlgebraElement(
            self, tuple(Fraction(int(i in atoms)) for i in range(self.n))
        )

    def state(self, f: "AlgebraElement") -> Fraction:
        return sum(w * v for w, v in zip(self.weights, f.values))


@dataclass(frozen=True)
class AlgebraElement:
    """A rational-valued function on the atoms of a FinSpace."""

    space: FinSpace
    values: tuple[Fraction, ...]

    def __post_init__(self):
        if len(self.values) != self.space.n:
            raise ValueError("value vector does not match atom count")

    def __add__(self, other):
        self._same_host(other)
        return AlgebraElement(self.space, tuple(a + b for a, b in zip(self.values, other.values)))

    def __mul__(self, other):
        if isinstance(other, AlgebraElement):
            self._same_host(other)
            return AlgebraElement(
                self.space, tuple(a * b for a, b in zip(self.values, other.values))
            )
        q = parse_rational(other)
        return AlgebraElement(self.space, tuple(q * a for a in self.values))

    __rmul__ = __mul__

    def __sub__(self, other):
        return self + (-1) * other

    def _same_host(self, other):
        if other.space is not self.space and other.space != self.space:
            raise ValueError("elements live on different spaces")

    def state(self) -> Fraction:
        return self.space.state(self)

    def sup_norm(self) -> Fraction:
        return max(abs(v) for v in self.values)


class Partition:
    """A partition of n atoms, canonically labeled 0..k-1 by first occurrence.

    Stands for the unital subalgebra of functions constant on its blocks; the
    one-block partition is the scalars.
    """

    def __init__(self, labels, n=None):
        labels = np.asarray(labels, dtype=np.int64)
        if n is not None and len(labels) != n:
            raise ValueError("label vector has wrong length")
        if len(labels) == 0:
            raise ValueError("empty partition")
        self.labels, self.nblocks = kern.canonicalize(labels)
        self.n = len(self.labels)

    @staticmethod
    def from_blocks(blocks, n: int) -> "Partition":
        labels = np.full(n, -1, dtype=np.int64)
        for b, idxs in enumerate(blocks):
            for i in idxs:
                if not 0 <= i < n:
                    raise ValueError(f"atom index {i} out of range")
                if labels[i] != -1:
                    raise ValueError(f"atom {i} in two blocks")
                labels[i] = b
        if (labels == -1).any():
            raise ValueError("blocks do not exhaust atoms")
        return Partition(labels)

    @staticmethod
    def trivial(n: int) -> "Partition":
        return Partition(np.zeros(n, dtype=np.int64))

    @staticmethod
    def discrete(n: int) -> "Partition":
        return Partition(np.arange(n, dtype=np.int64))

    def blocks(self):
        order = np.argsort(self.labels, kind="stable")
        cuts = np.searchsorted(self.labels[order], np.arange(self.nblocks))
        return [order[s:e] for s, e in zip(cuts, list(cuts[1:]) + [self.n])]

    def join(self, other: "Partition") -> "Partition":
        """Common refinement: the subalgebra generated by both."""
        labels, _ = kern.pair_canon(self.labels, other.labels)
        return Partition(labels)

    def meet(self, other: "Partition") -> "Partition":
        """Finest common coarsening: the intersection subalgebra."""
        return Partition(meet_labels(self.labels, other.labels))

    def coarsens(self, other: "Partition") -> bool:
        """True if self is coarser than other (every other-block fits in one
        self-block), i.e. the subalgebra of self is contained in other's."""
        return _constant_on_blocks(self.labels, other.labels)

    def refines(self, other: "Partition") -> bool:
        return other.coarsens(self)

    def __eq__(self, other):
        return isinstance(other, Partition) and np.array_equal(self.labels, other.labels)

    def __hash__(self):
        return hash(self.labels.tobytes())

    def __repr__(self):
        return f"Partition({self.nblocks} blocks on {self.n} atoms)"


# ---------------------------------------------------------------------------
# label/weight primitives (shared with the graded-space machinery)
# ---------------------------------------------------------------------------


def _first_occurrence(labels, nblocks):
    # canonical labels are numbered in first-occurrence order
    _, first = np.unique(labels, return_index=True)
    assert len(first) == nblocks
    return first


def _constant_on_blocks(values, labels):
    """True if `values` is constant on every block of `labels`."""
    labels = np.asarray(labels, dtype=np.int64)
    first = _first_occurrence(labels, int(labels.max()) + 1)
    return bool(np.array_equal(values, np.asarray(values)[first][labels]))


def meet_labels(a, b):
    """Finest common coarsening of two labelings (connected block graph)."""
    n = len(a)
    edges_u, edges_v = [], []
    for lab in (np.asarray(a, dtype=np.int64), np.asarray(b, dtype=np.int64)):
        order = np.argsort(lab, kind="stable")
        same = lab[order][1:] == lab[order][:-1]
        edges_u.append(order[:-1][same])
        edges_v.append(order[1:][same])
    labels, _ = kern.union_components(
        n, np.concatenate(edges_u), np.concatenate(edges_v)
    )
    return labels


def join_labels(a, b):
    labels, _ = kern.pair_canon(a, b)
    return labels


def _products_equal(a, b, c, d):
    """Exact test a[i]*b[i] == c[i]*d[i]; returns index of first failure."""
    lhs = np.asarray(a).astype(object) * np.asarray(b).astype(object)
    rhs = np.asarray(c).astype(object) * np.asarray(d).astype(object)
    eq = lhs == rhs
    if isinstance(eq, np.ndarray):
        if eq.all():
            return None
        return int(np.argmax(~eq))
    return None if eq else 0


def block_weight_sums(labels, nblocks, wnum):
    if not kern.fits_int64(int(wnum.max(initial=0)), len(wnum)):
        raise OverflowError("weight sums exceed int64")
    return kern.group_sum(labels, wnum, nblocks)


def cond_independence_given(labels_r, labels_p, labels_q, wnum):
    """Check E_R(xy) = E_R(x)E_R(y) for all block indicators x of p, y of q.

    Equivalent block form: for every r-block R and blocks b of p, c of q,
    W(b∩c∩R)·W(R) = W(b∩R)·W(c∩R), and every (b,c) pair meeting R does so
    jointly.  Returns (ok, witness_or_None).
    """
    rp, n_rp = kern.pair_canon(labels_r, labels_p)
    rq, n_rq = kern.pair_canon(labels_r, labels_q)
    rpq, n_rpq = kern.pair_canon(rp, labels_q)
    n_r = int(labels_r.max()) + 1

    w_r = block_weight_sums(labels_r, n_r, wnum)
    w_rp = block_weight_sums(rp, n_rp, wnum)
    w_rq = block_weight_sums(rq, n_rq, wnum)
    w_rpq = block_weight_sums(rpq, n_rpq, wnum)

    first_rpq = _first_occurrence(rpq, n_rpq)
    r_of_t = labels_r[first_rpq]
    rp_of_t = rp[first_rpq]
    rq_of_t = rq[first_rpq]

    # joint-occurrence completeness per r-block
    first_rp = _first_occurrence(rp, n_rp)
    first_rq = _first_occurrence(rq, n_rq)
    np_r = kern.group_count(labels_r[first_rp], n_r)
    nq_r = kern.group_count(labels_r[first_rq], n_r)
    npq_r = kern.group_count(r_of_t, n_r)
    bad = np.nonzero(npq_r != np_r * nq_r)[0]
    if len(bad):
        return False, f"blocks of p and q miss each other inside r-block {int(bad[0])}"

    idx = _products_equal(w_rpq, w_r[r_of_t], w_rp[rp_of_t], w_rq[rq_of_t])
    if idx is not None:
        atom = int(first_rpq[idx])
        return False, f"factorization fails on the triple containing atom {atom}"
    return True, None


def cexp_product_equals(labels_p, labels_q, labels_r, wnum):
    """Check the operator identity E_P E_Q = E_R on the whole space.

    Necessarily r coarsens p and q; then the identity holds iff inside every
    r-block all p-blocks and q-blocks intersect with the product-weight rule
    W(b∩c)·W(R) = W(b)·W(c).  Returns (ok, witness_or_None).
    """
    if not _constant_on_blocks(labels_r, labels_p):
        return False, "target partition does not coarsen the left factor"
    if not _constant_on_blocks(labels_r, labels_q):
        return False, "target partition does not coarsen the right factor"

    n_p = int(labels_p.max()) + 1
    n_q = int(labels_q.max()) + 1
    n_r = int(labels_r.max()) + 1
    pq, n_pq = kern.pair_canon(labels_p, labels_q)

    w_p = block_weight_sums(labels_p, n_p, wnum)
    w_q = block_weight_sums(labels_q, n_q, wnum)
    w_r = block_weight_sums(labels_r, n_r, wnum)
    w_pq = block_weight_sums(pq, n_pq, wnum)

    first_p = _first_occurrence(labels_p, n_p)
    first_q = _first_occurrence(labels_q, n_q)
    first_pq = _first_occurrence(pq, n_pq)
    r_of_p = labels_r[first_p]
    r_of_q = labels_r[first_q]
    r_of_t = labels_r[first_pq]

    np_r = kern.group_count(r_of_p, n_r)
    nq_r = kern.group_count(r_of_q, n_r)
    npq_r = kern.group_count(r_of_t, n_r)
    bad = np.nonzero(npq_r != np_r * nq_r)[0]
    if len(bad):
        return False, (
            f"a left and a right block inside r-block {int(bad[0])} are disjoint"
        )

    idx = _products_equal(
        w_pq, w_r[r_of_t], w_p[labels_p[first_pq]], w_q[labels_q[first_pq]]
    )
    if idx is not None:
        atom = int(first_pq[idx])
        return False, f"weight identity fails on the pair containing atom {atom}"
    return True, None


def cexp_image_labels(labels_p, labels_q, wnum):
    """Partition generated by E_P applied to all q-block indicators.

    Two p-blocks are identified iff their conditional rows over q-blocks are
    proportional; canonical rows are gcd-reduced integer vectors.
    """
    pq, n_pq = kern.pair_canon(labels_p, labels_q)
    w_pq = block_weight_sums(pq, n_pq, wnum)
    first_pq = _first_occurrence(pq, n_pq)
    p_of_t = labels_p[first_pq]
    q_of_t = labels_q[first_pq]
    n_p = int(labels_p.max()) + 1

    rows = [[] for _ in range(n_p)]
    for t in range(n_pq):
        rows[int(p_of_t[t])].append((int(q_of_t[t]), int(w_pq[t])))
    keys = {}
    block_key = np.empty(n_p, dtype=np.int64)
    for b, row in enumerate(rows):
        g = 0
        for _, w in row:
            g = gcd(g, w)
        key = tuple(sorted((c, w // g) for c, w in row))
        block_key[b] = keys.setdefault(key, len(keys))
    labels, _ = kern.canonicalize(block_key[labels_p])
    return labels


def cexps_commute(labels_p, labels_q, wnum):
    """Check E_P E_Q = E_Q E_P.

    Both are state-symmetric idempotents, so they commute iff their product
    is the conditional expectation onto the intersection algebra M_P ∩ M_Q,
    i.e. onto the meet partition.
    """
    m = meet_labels(labels_p, labels_q)
    ok, wit = cexp_product_equals(labels_p, labels_q, m, wnum)
    return ok, wit


# ---------------------------------------------------------------------------
# conditional expectations on FinSpace
# ---------------------------------------------------------------------------


def cond_exp(space: FinSpace, part: Partition, f: AlgebraElement) -> AlgebraElement:
    """Weighted block average: the state-preserving projection onto the
    subalgebra of block-constant functions."""
    if part.n != space.n:
        raise ValueError("partition does not match space")
    sums = [Fraction(0)] * part.nblocks
    masses = [Fraction(0)] * part.nblocks
    for i, lab in enumerate(part.labels):
        sums[lab] += space.weights[i] * f.values[i]
        masses[lab] += space.weights[i]
    vals = tuple(sums[lab] / masses[lab] for lab in part.labels)
    return AlgebraElement(space, vals)


def cond_exp_matrix(space: FinSpace, part: Partition):
    """The projection as an exact n x n rational matrix (desk-scale only)."""
    if space.n > 4096:
        raise ValueError("dense conditional-expectation matrix is desk-scale only")
    masses = [Fraction(0)] * part.nblocks
    for i, lab in enumerate(part.labels):
        masses[lab] += space.weights[i]
    return tuple(
        tuple(
            space.weights[j] / masses[part.labels[i]]
            if part.labels[i] == part.labels[j]
            else Fraction(0)
            for j in range(space.n)
        )
        for i in range(space.n)
    )


@dataclass(frozen=True)
class CommutingSquareReport:
    factorization: bool
    product_collapse: bool
    image_equals_base: bool
    commute_and_meet: bool
    witnesses: tuple

    @property
    def is_commuting_square(self) -> bool:
        return self.factorization

    @property
    def all_agree(self) -> bool:
        return (
            self.factorization
            == self.product_collapse
            == self.image_equals_base
            == self.commute_and_meet
        )


def commuting_square_check(
    space_or_wnum, p0: Partition, p1: Partition, p2: Partition
) -> CommutingSquareReport:
    """Evaluate the four equivalent commuting-square conditions independently.

    Requires M_0 ⊂ M_1 ∩ M_2, i.e. p0 coarser than p1 and p2.  The four
    conditions are computed by different routes; their agreement on every
    instance is itself part of what the test suite verifies.
    """
    if isinstance(space_or_wnum, FinSpace):
        wnum = space_or_wnum.weight_numerators()
    else:
        wnum = np.asarray(space_or_wnum, dtype=np.int64)
    if not (p0.coarsens(p1) and p0.coarsens(p2)):
        raise ValueError("commuting square needs p0 coarser than p1 and p2")

    ok_i, wit_i = cond_independence_given(p0.labels, p1.labels, p2.labels, wnum)
    ok_ii, wit_ii = cexp_product_equals(p1.labels, p2.labels, p0.labels, wnum)
    image = cexp_image_labels(p1.labels, p2.labels, wnum)
    ok_iii = bool(np.array_equal(image, p0.labels))
    wit_iii = None if ok_iii else "image algebra differs from the base"
    commute, wit_iv = cexps_commute(p1.labels, p2.labels, wnum)
    meet_is_base = bool(np.array_equal(meet_labels(p1.labels, p2.labels), p0.labels))
    ok_iv = commute and meet_is_base
    if ok_iv:
        wit_iv = None
    elif wit_iv is None:
        wit_iv = "intersection algebra differs from the base"
    return CommutingSquareReport(
        ok_i, ok_ii, ok_iii, ok_iv, (wit_i, wit_ii, wit_iii, wit_iv)
    )


# ---------------------------------------------------------------------------
# Markov kernels between finite spaces
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MarkovKernel:
    """A state-compatible stochastic matrix T: (source, psi) -> (target, phi).

    Rows index target atoms when the map is read on functions:
    (T b)(i) = sum_j T[i][j] b(j).  Conditions: entries nonnegative, rows sum
    to 1, and phi∘T = psi.  States here are tracial, so no further modular
    condition has content.
    """

    rows: tuple[tuple[Fraction, ...], ...]
    source: FinSpace
    target: FinSpace

    def __post_init__(self):
        if len(self.rows) != self.target.n:
            raise ValueError("row count must match target atom count")
        for row in self.rows:
            if len(row) != self.source.n:
                raise ValueError("column count must match source atom count")
            if any(x < 0 for x in row):
                raise ValueError("negative kernel entry")
            if sum(row) != 1:
                raise ValueError("kernel row does not sum to 1")
        for j in range(self.source.n):
            got = sum(self.target.weights[i] * self.rows[i][j] for i in range(self.target.n))
            if got != self.source.weights[j]:
                raise ValueError("state compatibility phi∘T = psi fails")

    @staticmethod
    def square(rows, state: FinSpace) -> "MarkovKernel":
        rows = tuple(tuple(parse_rational(x) for x in r) for r in rows)
        return MarkovKernel(rows, state, state)

    @property
    def d(self) -> int:
        return self.source.n

    def __call__(self, f: AlgebraElement) -> AlgebraElement:
        if f.space != self.source:
            raise ValueError("element not on the source space")
        vals = tuple(
            sum(self.rows[i][j] * f.values[j] for j in range(self.source.n))
            for i in range(self.target.n)
        )
        return AlgebraElement(self.target, vals)

    def compose(self, other: "MarkovKernel") -> "MarkovKernel":
        """self ∘ other (apply other first)."""
        if other.target != self.source:
            raise ValueError("kernels not composable")
        rows = tuple(
            tuple(
                sum(self.rows[i][k] * other.rows[k][j] for k in range(self.source.n))
                for j in range(other.source.n)
            )
            for i in range(self.target.n)
        )
        return MarkovKernel(rows, other.source, self.target)

    def power(self, n: int) -> "MarkovKernel":
        if self.source != self.target:
            raise ValueError("powers need a square kernel")
        acc = MarkovKernel.square(
            [[int(i == j) for j in range(self.d)] for i in range(self.d)], self.source
        )
        for _ in range(n):
            acc = self.compose(acc)
        return acc


def markov_map_adjoint(T: MarkovKernel) -> MarkovKernel:
    """The unique adjoint with psi(T*(y)·x) = phi(y·T(x)); faithfulness of the
    source state makes the division well defined."""
    phi = T.target.weights
    psi = T.source.weights
    rows = tuple(
        tuple(phi[i] * T.rows[i][j] / psi[j] for i in range(T.target.n))
        for j in range(T.source.n)
    )
    return MarkovKernel(rows, T.target, T.source)


def adjoint_pairing_holds(T: MarkovKernel) -> bool:
    """Check psi(T*(1_i)·1_j) == phi(1_i·T(1_j)) on all basis pairs."""
    S = markov_map_adjoint(T)
    for i in range(T.target.n):
        for j in range(T.source.n):
            lhs = T.source.weights[j] * S.rows[j][i]
            rhs = T.target.weights[i] * T.rows[i][j]
            if lhs != rhs:
                return False
    return True


# ---------------------------------------------------------------------------
# local filtrations
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FiltrationReport:
    isotone: bool
    markov_m: dict
    markov_m_prime: dict
    locally_minimal: bool
    witnesses: tuple

    @property
    def is_markov(self) -> bool:
        return self.isotone and all(self.markov_m_prime.values())

    @property
    def lemma_consistent(self) -> bool:
        """Saturated implies plain Markov; minimal + plain implies saturated."""
        saturated = all(self.markov_m_prime.values())
        plain = all(self.markov_m.values())
        if saturated and not plain:
            return False
        if self.locally_minimal and plain and not saturated:
            return False
        return True


def local_filtration_markov_check(family, horizon: int, wnum) -> FiltrationReport:
    """Exact Markov-property check of an interval-indexed partition family.

    `family(m, n)` must return the Partition for the interval [m, n] within
    [0, horizon]; the half-line [n, ∞) is truncated to [n, horizon].  Checks
    isotony, condition (M) for 1 <= n <= horizon-1, condition (M') for
    0 <= n <= horizon, and local minimality for overlapping unions.
    """
    wnum = np.asarray(wnum, dtype=np.int64)
    K = horizon
    parts = {}
    for m in range(K + 1):
        for n in range(m, K + 1):
            parts[(m, n)] = family(m, n)

    witnesses = []
    isotone = True
    for (m, n), p in parts.items():
        for (m2, n2) in ((m - 1, n), (m, n + 1)):
            if 0 <= m2 and n2 <= K and not parts[(m2, n2)].refines(p):
                isotone = False
                witnesses.append(f"isotony fails: [{m},{n}] vs [{m2},{n2}]")

    markov_m = {}
    for n in range(1, K):
        left = parts[(0, n - 1)].join(parts[(n, n)])
        right = parts[(n, n)].join(parts[(n + 1, K)])
        ok, wit = cexp_product_equals(left.labels, right.labels, parts[(n, n)].labels, wnum)
        markov_m[n] = ok
        if wit:
            witnesses.append(f"(M) n={n}: {wit}")

    markov_mp = {}
    for n in range(K + 1):
        ok, wit = cexp_product_equals(
            parts[(0, n)].labels, parts[(n, K)].labels, parts[(n, n)].labels, wnum
        )
        markov_mp[n] = ok
        if wit:
            witnesses.append(f"(M') n={n}: {wit}")

    minimal = True
    intervals = list(parts)
    for m, n in intervals:
        for m2, n2 in intervals:
            if m2 > n + 1 or m > n2 + 1:
                continue  # union is not an interval
            joined = parts[(m, n)].join(parts[(m2, n2)])
            if joined != parts[(min(m, m2), max(n, n2))]:
                minimal = False
    return FiltrationReport(isotone, markov_m, markov_mp, minimal, tuple(witnesses))


# ---------------------------------------------------------------------------
# config-file loading
# ---------------------------------------------------------------------------


def load_finspace(obj) -> FinSpace:
    """Weights given as a list of "num/den" strings or integers."""
    return FinSpace.from_rationals(obj)


def load_partition(blocks, n: int) -> Partition:
    return Partition.from_blocks(blocks, n)


def load_kernel(obj) -> MarkovKernel:
    """{"T": [["num/den", ...]], "psi": [...], "phi": optional [...]}."""
    src = load_finspace(obj["psi"])
    tgt = load_finspace(obj["phi"]) if "phi" in obj else src
    rows = tuple(tuple(parse_rational(x) for x in row) for row in obj["T"])
    return MarkovKernel(rows, src, tgt)
