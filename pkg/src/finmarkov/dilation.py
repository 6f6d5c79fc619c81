"""Constructive tensor dilation of a finite-state stationary Markov chain.

The chain's transition matrix is realized as the compression of a coupling
acting on (state space) x (noise space): the noise interval [0,1] is cut into
finitely many rational atoms so that every row distribution is a union of
atoms, and the coupling sends atom (a, c) to the state prescribed by the
piece containing c.  Amplifying over fresh noise slots gives the graded
endomorphism whose compressions are exactly the matrix powers, and whose
random-variable sequence has the chain's path law.

Where the atom masses allow it, the first-order coupling is realized as a
genuine measure-preserving bijection of (state x noise) atoms (the map tau,
fixing the diagonal pieces pointwise); a state-preserving non-invertible
assignment is always available and is all the downstream theory consumes.
A bijective refinement does not exist for every chain: if some state flows
entirely into a single state of different stationary mass, every candidate
atom image must shrink by a fixed ratio, which no finite atom set supports.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from math import gcd

import numpy as np

from . import _kernels as kern
from .finprob import FinSpace, MarkovKernel
from .rationals import parse_rational
from .rep import GradedSpace, PointRep, build_fplus_rep, delta_second_coordinate


@dataclass(frozen=True)
class ChainSpec:
    """A d-state transition matrix with its (unique, faithful) stationary state."""

    kernel: MarkovKernel

    def __post_init__(self):
        if self.kernel.source != self.kernel.target:
            raise ValueError("chain kernel must be square")

    @property
    def d(self) -> int:
        return self.kernel.d

    @property
    def pi(self) -> FinSpace:
        return self.kernel.source

    @property
    def rows(self):
        return self.kernel.rows

    @staticmethod
    def from_rows(rows, pi=None) -> "ChainSpec":
        rows = tuple(tuple(parse_rational(x) for x in r) for r in rows)
        if pi is None:
            pi = stationary_distribution(rows)
        space = FinSpace(tuple(parse_rational(p) for p in pi))
        return ChainSpec(MarkovKernel(rows, space, space))

    @staticmethod
    def coin(p1, p2) -> "ChainSpec":
        """The two-state chain [[1-p1, p1], [p2, 1-p2]]."""
        p1, p2 = parse_rational(p1), parse_rational(p2)
        return ChainSpec.from_rows([[1 - p1, p1], [p2, 1 - p2]])

    @staticmethod
    def from_dict(obj) -> "ChainSpec":
        rows = obj["T"]
        if len(rows) != obj.get("d", len(rows)):
            raise ValueError("field d disagrees with the matrix size")
        return ChainSpec.from_rows(rows, obj.get("pi"))


def stationary_distribution(rows) -> tuple[Fraction, ...]:
    """The unique strictly positive solution of pi T = pi, sum(pi) = 1.

    Rejects kernels whose stationary vector is non-unique or touches zero,
    since the construction needs a faithful state.
    """
    d = len(rows)
    # exact RREF nullspace of (T^t - I)
    a = [[Fraction(rows[i][j]) - Fraction(int(i == j)) for i in range(d)] for j in range(d)]
    pivots = []
    r = 0
    for c in range(d):
        piv = next((i for i in range(r, d) if a[i][c] != 0), None)
        if piv is None:
            continue
        a[r], a[piv] = a[piv], a[r]
        inv = 1 / a[r][c]
        a[r] = [x * inv for x in a[r]]
        for i in range(d):
            if i != r and a[i][c] != 0:
                f = a[i][c]
                a[i] = [x - f * y for x, y in zip(a[i], a[r])]
        pivots.append(c)
        r += 1
    free = [c for c in range(d) if c not in pivots]
    if len(free) != 1:
        raise ValueError("stationary distribution is not unique")
    sol = [Fraction(0)] * d
    sol[free[0]] = Fraction(1)
    for row, c in zip(a, pivots):
        sol[c] = -row[free[0]]
    total = sum(sol)
    if total == 0:
        raise ValueError("degenerate stationary solution")
    pi = tuple(x / total for x in sol)
    if any(p <= 0 for p in pi):
        raise ValueError("stationary distribution is not strictly positive")
    return pi


# ---------------------------------------------------------------------------
# noise space and coupling
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class NoiseSpace:
    """A finite interval partition of [0,1] with rational lengths as weights."""

    space: FinSpace
    cuts: tuple[Fraction, ...]

    @staticmethod
    def from_lengths(lengths) -> "NoiseSpace":
        lengths = tuple(Fraction(x) for x in lengths)
        cuts, acc = [], Fraction(0)
        for x in lengths[:-1]:
            acc += x
            cuts.append(acc)
        return NoiseSpace(FinSpace(lengths), tuple(cuts))

    @staticmethod
    def from_cuts(cuts) -> "NoiseSpace":
        pts = sorted({Fraction(c) for c in cuts if 0 < Fraction(c) < 1})
        bounds = [Fraction(0)] + pts + [Fraction(1)]
        return NoiseSpace(
            FinSpace(tuple(b - a for a, b in zip(bounds, bounds[1:]))), tuple(pts)
        )

    @property
    def n(self):
        return self.space.n

    def intervals(self):
        bounds = (Fraction(0),) + self.cuts + (Fraction(1),)
        return tuple(zip(bounds, bounds[1:]))


@dataclass(frozen=True)
class CouplingMap:
    """First-order coupling of a chain: for every (state, noise atom) the
    state it flows to, with lambda(flow-to-j pieces of row a) = T[a][j].

    ``perm``, when present, is a mass-preserving bijection of the (state x
    noise) atoms realizing the flow (an automorphism of the product space);
    ``target`` alone is the dual of a state-preserving homomorphism and is
    what every model construction consumes.
    """

    base: FinSpace
    noise: NoiseSpace
    target: np.ndarray  # (d, nc) -> state
    perm: np.ndarray | None = None  # flat (d * nc) -> flat (d * nc)
    note: str = ""

    @property
    def is_automorphism(self) -> bool:
        return self.perm is not None

    def compression_rows(self) -> tuple:
        """Raw rows of iota* C iota recovered from the piece masses."""
        d, nc = self.target.shape
        lam = self.noise.space.weights
        rows = []
        for a in range(d):
            row = [Fraction(0)] * d
            for c in range(nc):
                row[int(self.target[a, c])] += lam[c]
            rows.append(tuple(row))
        return tuple(rows)

    def compression(self) -> MarkovKernel:
        return MarkovKernel(self.compression_rows(), self.base, self.base)

    def validate_perm(self) -> None:
        if self.perm is None:
            raise ValueError("coupling carries no bijection")
        d, nc = self.target.shape
        flat = np.asarray(self.perm, dtype=np.int64)
        if sorted(flat.tolist()) != list(range(d * nc)):
            raise ValueError("perm is not a bijection")
        lam = self.noise.space.weights
        pi = self.base.weights
        for i in range(d):
            for c in range(nc):
                j, c2 = divmod(int(flat[i * nc + c]), nc)
                if j != int(self.target[i, c]):
                    raise ValueError(f"perm sends ({i},{c}) off its piece")
                if pi[i] * lam[c] != pi[j] * lam[c2]:
                    raise ValueError(f"perm does not preserve the mass of ({i},{c})")


def _row_cut_points(rows):
    cuts = set()
    for row in rows:
        acc = Fraction(0)
        for x in row[:-1]:
            acc += x
            cuts.add(acc)
    return cuts


def _target_cut_points(rows, pi):
    d = len(rows)
    cuts = set()
    for j in range(d):
        acc = Fraction(0)
        for i in range(d):
            acc += pi[i] * rows[i][j] / pi[j]
            if i < d - 1:
                cuts.add(acc)
    return cuts


def _piece_assignment(rows, noise: NoiseSpace) -> np.ndarray:
    """Which state each (row, atom) flows to; atoms must refine the row cuts."""
    d = len(rows)
    out = np.empty((d, noise.n), dtype=np.int64)
    for a in range(d):
        bounds = []
        acc = Fraction(0)
        for x in rows[a]:
            acc += x
            bounds.append(acc)
        for c, (lo, hi) in enumerate(noise.intervals()):
            # zero-mass pieces are skipped: their right edge equals lo
            j = next(t for t, b in enumerate(bounds) if b > lo)
            if hi > bounds[j]:
                raise ValueError("noise atoms do not refine the row pieces")
            out[a, c] = j
    return out


def _try_perm(pi, lam, target) -> np.ndarray | None:
    """Mass-class matching: a bijection exists iff, for every target fiber,
    the incoming atom masses tie out with the fiber's own atom masses.
    Diagonal atoms are fixed pointwise first."""
    d, nc = target.shape
    receivers: dict[tuple[int, Fraction], list[int]] = {}
    for j in range(d):
        for c in range(nc):
            receivers.setdefault((j, pi[j] * lam[c]), []).append(j * nc + c)
    sources: dict[tuple[int, Fraction], list[int]] = {}
    diag = []
    for i in range(d):
        for c in range(nc):
            j = int(target[i, c])
            if j == i:
                diag.append(i * nc + c)
            else:
                sources.setdefault((j, pi[i] * lam[c]), []).append(i * nc + c)
    perm = np.full(d * nc, -1, dtype=np.int64)
    for flat in diag:  # tau is the identity on the diagonal pieces
        perm[flat] = flat
        i, c = divmod(flat, nc)
        receivers[(i, pi[i] * lam[c])].remove(flat)
    for key, srcs in sources.items():
        rec = receivers.get(key, [])
        if len(rec) < len(srcs):
            return None
        for s, t in zip(srcs, rec[: len(srcs)]):
            perm[s] = t
        del rec[: len(srcs)]
    if any(rest for rest in receivers.values()):
        return None
    return perm


def _d2_cascade(spec: ChainSpec, depth_cap=64):
    """Two-state bijective coupling when the heavier state's crossing
    probability stays below 1: a geometric cascade of atom lengths makes the
    cross-fiber masses tie out exactly."""
    pi = spec.pi.weights
    rows = spec.rows
    if pi[0] == pi[1]:
        return None  # uniform state is handled by the grid strategy
    big = 0 if pi[0] > pi[1] else 1
    small = 1 - big
    r = pi[small] / pi[big]
    t_bs = rows[big][small]
    t_sb = rows[small][big]
    if t_sb >= 1 or t_bs == 0:
        return None
    for K in range(1, depth_cap):
        total = t_sb * (1 - r ** (K + 1)) / (1 - r**K)
        if total <= 1:
            break
    else:
        return None
    ell0 = t_bs * (1 - r) / (r * (1 - r**K))
    lengths = [ell0 * r**t for t in range(K + 1)]
    slack = 1 - sum(lengths)
    if slack > 0:
        lengths.append(slack)
    noise = NoiseSpace.from_lengths(lengths)
    nc = noise.n
    target = np.empty((2, nc), dtype=np.int64)
    target[big, :] = big
    target[small, :] = small
    target[big, 1 : K + 1] = small
    target[small, 0:K] = big
    perm = np.arange(2 * nc, dtype=np.int64)
    for t in range(1, K + 1):
        perm[big * nc + t] = small * nc + (t - 1)
        perm[small * nc + (t - 1)] = big * nc + t
    return noise, target, perm


def build_first_order_dilation(
    spec: ChainSpec, noise: str = "compact", automorphism: bool = True, adopt: bool = True
) -> tuple[NoiseSpace, CouplingMap]:
    """Cut the noise interval and assemble the coupling for a chain.

    noise="compact" refines only the row cut points (smallest atom count and
    smallest weight denominators); noise="refined" also includes the
    incoming-piece cut points of every fiber, which is what the bijective
    matching prefers.  With adopt=True the bijection hunt may switch to a
    finer or rearranged noise space (refined cuts, uniform grid, geometric
    cascade); those spaces can carry much larger weight denominators or atom
    counts, so model construction uses adopt=False and keeps the compact
    noise regardless of whether a bijection exists on it.
    """
    rows = spec.rows
    pi = spec.pi.weights
    cuts = _row_cut_points(rows)
    if noise == "refined":
        cuts |= _target_cut_points(rows, pi)
    elif noise != "compact":
        raise ValueError(f"unknown noise strategy {noise!r}")
    nspace = NoiseSpace.from_cuts(cuts)
    target = _piece_assignment(rows, nspace)

    perm = None
    note = ""
    if automorphism:
        perm = _try_perm(pi, nspace.space.weights, target)
        if perm is None and adopt and noise == "compact":
            refined = NoiseSpace.from_cuts(cuts | _target_cut_points(rows, pi))
            t2 = _piece_assignment(rows, refined)
            p2 = _try_perm(pi, refined.space.weights, t2)
            if p2 is not None:
                nspace, target, perm = refined, t2, p2
        if perm is None and adopt and len(set(pi)) == 1:
            # uniform state: the equal-length grid always ties out
            den = 1
            for c in cuts | {Fraction(1)}:
                den = den * c.denominator // gcd(den, c.denominator)
            uniform = NoiseSpace.from_lengths([Fraction(1, den)] * den)
            t2 = _piece_assignment(rows, uniform)
            p2 = _try_perm(pi, uniform.space.weights, t2)
            if p2 is not None:
                nspace, target, perm = uniform, t2, p2
        if perm is None and adopt and spec.d == 2:
            cascade = _d2_cascade(spec)
            if cascade is not None:
                nspace, target, perm = cascade
        if perm is None:
            note = (
                "no atom-level bijection found on this noise space; coupling "
                "kept as a state-preserving assignment"
            )

    coupling = CouplingMap(spec.pi, nspace, target, perm, note)
    if coupling.compression_rows() != rows:
        raise AssertionError("coupling does not compress to the chain matrix")
    if perm is not None:
        coupling.validate_perm()
    return nspace, coupling


# ---------------------------------------------------------------------------
# the amplified model
# ---------------------------------------------------------------------------


@dataclass
class ProcessModel:
    """A chain amplified over K fresh noise slots, carrying the full
    monoid representation whose 0-th generator is the time evolution."""

    spec: ChainSpec
    coupling: CouplingMap
    rep: PointRep
    K: int

    @property
    def gspace(self) -> GradedSpace:
        return self.rep.gspace

    def compressed_power(self, n: int) -> tuple:
        """iota* alpha^n iota as an exact d x d matrix."""
        g = self.gspace
        x0 = np.arange(g.level_size(n), dtype=np.int64) // g.nc**n
        xn = self.rep.x_table(n, n)
        w = g.level_weights(n)
        num = kern.group_sum(x0 * g.d + xn, w, g.d * g.d).reshape(g.d, g.d)
        den = g.level_denominator(n)
        pi = self.spec.pi.weights
        return tuple(
            tuple(Fraction(int(num[a, j]), den) / pi[a] for j in range(g.d))
            for a in range(g.d)
        )

    def joint_law(self, ks=None):
        """Exact joint distribution of (X_k)_{k in ks} read off the model.

        Returns (numerator array of shape (d,)*len(ks), denominator).
        """
        g = self.gspace
        if ks is None:
            ks = tuple(range(self.K + 1))
        level = self.K
        key = np.zeros(g.level_size(level), dtype=np.int64)
        for k in ks:
            key = key * g.d + self.rep.x_table(k, level)
        num = kern.group_sum(key, g.level_weights(level), g.d ** len(ks))
        return num.reshape((g.d,) * len(ks)), g.level_denominator(level)

    def measure_preservation_check(self) -> bool:
        return all(
            self.rep.state_preservation_check(0, m) for m in range(self.K)
        )

    def first_coordinate_masses_check(self) -> bool:
        """The range of iota_0 carries the chain's state: the level mass of
        each base fiber is pi exactly (this is iota_0 iota_0* = E_0)."""
        g = self.gspace
        x0 = np.arange(g.level_size(self.K), dtype=np.int64) // g.nc**self.K
        sums = kern.group_sum(x0, g.level_weights(self.K), g.d)
        return bool(np.array_equal(sums, g.base_num * g.noise_den**self.K))


def build_markov_dilation(
    spec: ChainSpec,
    horizon: int,
    coupling: CouplingMap | None = None,
    budget: int = 2_000_000,
) -> ProcessModel:
    if horizon < 1:
        raise ValueError("horizon must be at least 1")
    if coupling is None:
        # the compact noise keeps level denominators and atom counts small;
        # a bijective realization on some finer space is irrelevant here
        _, coupling = build_first_order_dilation(spec, noise="compact", adopt=False)
    noise = coupling.noise.space
    rep = build_fplus_rep(
        spec.pi,
        noise,
        coupling.target,
        delta_second_coordinate(noise),
        max(horizon, 2),
        budget=budget,
    )
    return ProcessModel(spec, coupling, rep, horizon)


# ---------------------------------------------------------------------------
# path law and the dilation property
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PathLaw:
    """Exact chain path probabilities: P(s) = pi[s0] T[s0,s1] ... T[s_,sK]."""

    num: np.ndarray  # shape (d,)*(K+1)
    den: int
    d: int
    K: int

    def prob(self, path) -> Fraction:
        return Fraction(int(self.num[tuple(path)]), self.den)

    def marginal(self, ks):
        """Sum out all coordinates except those in ks (kept in given order)."""
        axes = tuple(t for t in range(self.K + 1) if t not in set(ks))
        m = self.num.sum(axis=axes) if axes else self.num
        return np.transpose(m, axes=_marginal_axes(ks)), self.den


def _marginal_axes(ks):
    # after summing, the remaining axes sit in sorted(ks) order
    s = sorted(ks)
    return tuple(s.index(k) for k in ks)


def path_law(spec: ChainSpec, horizon: int) -> PathLaw:
    d = spec.d
    pi_num = np.array(spec.pi.weight_numerators(), dtype=np.int64)
    t_den = 1
    for row in spec.rows:
        for x in row:
            t_den = t_den * x.denominator // gcd(t_den, x.denominator)
    t_num = np.array(
        [[int(x * t_den) for x in row] for row in spec.rows], dtype=np.int64
    )
    den = spec.pi.denominator * t_den**horizon
    if not kern.fits_int64(den):
        raise OverflowError("path-law denominator exceeds int64")
    arr = pi_num.copy()
    for _ in range(horizon):
        arr = arr[..., :, None] * t_num
    return PathLaw(arr, den, d, horizon)


@dataclass(frozen=True)
class DilationReport:
    power_ok: dict
    moment_failures: tuple
    moments_checked: int
    measure_preserving: bool
    projection_ok: bool

    @property
    def passed(self) -> bool:
        return (
            all(self.power_ok.values())
            and not self.moment_failures
            and self.measure_preserving
            and self.projection_ok
        )


def dilation_property_check(model: ProcessModel, r_max=3, n_random=50, seed=7) -> DilationReport:
    """iota* alpha^n iota = T^n for n <= K, and model moments of basis
    indicators equal path-law expectations, exhaustively up to r_max factors
    and on random longer tuples."""
    spec, K = model.spec, model.K
    power_ok = {}
    for n in range(K + 1):
        power_ok[n] = model.compressed_power(n) == spec.kernel.power(n).rows

    law = path_law(spec, K)
    model_num, model_den = model.joint_law()
    # one exact tensor comparison implies every indicator-moment identity;
    # individual tuples are still sampled to produce pointed witnesses
    tensors_equal = _ratio_tensor_equal(model_num, model_den, law.num, law.den)

    failures = []
    checked = 0
    d = spec.d
    tuples = []
    for r in range(1, r_max + 1):
        tuples.extend(_increasing_tuples(K, r))
    rng = random.Random(seed)
    for _ in range(n_random):
        r = rng.randint(min(r_max + 1, K + 1), K + 1)
        tuples.append(tuple(sorted(rng.sample(range(K + 1), r))))
    for ks in tuples:
        m_num = _axis_marginal(model_num, ks, K)
        p_num = _axis_marginal(law.num, ks, K)
        for cell in np.ndindex(*([d] * len(ks))):
            checked += 1
            if int(m_num[cell]) * law.den != int(p_num[cell]) * model_den:
                failures.append((ks, cell))
    if not tensors_equal and not failures:
        failures.append(("joint-law", ()))
    return DilationReport(
        power_ok,
        tuple(failures[:5]),
        checked,
        model.measure_preservation_check(),
        model.first_coordinate_masses_check(),
    )


def _increasing_tuples(K, r):
    from itertools import combinations

    return list(combinations(range(K + 1), r))


def _axis_marginal(num, ks, K):
    axes = tuple(t for t in range(K + 1) if t not in set(ks))
    return num.sum(axis=axes) if axes else num


def _ratio_tensor_equal(a_num, a_den, b_num, b_den) -> bool:
    lhs = a_num.astype(object).reshape(-1) * b_den
    rhs = b_num.astype(object).reshape(-1) * a_den
    return bool((lhs == rhs).all())


# ---------------------------------------------------------------------------
# random chains
# ---------------------------------------------------------------------------


def random_irreducible_chain(rng: random.Random, d: int, max_den: int = 6) -> ChainSpec:
    """A random irreducible chain with entry denominators bounded by max_den
    and a unique strictly positive stationary distribution."""
    while True:
        rows = []
        for _ in range(d):
            den = rng.randint(2, max_den)
            cuts = sorted(rng.randint(0, den) for _ in range(d - 1))
            parts = [b - a for a, b in zip([0] + cuts, cuts + [den])]
            rng.shuffle(parts)
            rows.append([Fraction(p, den) for p in parts])
        if not _strongly_connected(rows):
            continue
        try:
            return ChainSpec.from_rows(rows)
        except ValueError:
            continue


def _strongly_connected(rows) -> bool:
    d = len(rows)

    def reach(start, transpose):
        seen = {start}
        stack = [start]
        while stack:
            u = stack.pop()
            for v in range(d):
                x = rows[v][u] if transpose else rows[u][v]
                if x > 0 and v not in seen:
                    seen.add(v)
                    stack.append(v)
        return seen

    return len(reach(0, False)) == d and len(reach(0, True)) == d
