"""Graded point-map representations of the monoids F+ and S+ on truncated
tensor products of finite probability spaces.

The infinite tensor product A ⊗ C ⊗ C ⊗ ... is modeled by its finite stages:
``level m`` is the product atom space A × C^m with product weights.  A
represented generator with index n is stored through its dual point maps
eta_n: level_{m+1} -> level_m (the algebra map raises the tensor length by
one, its dual consumes one coordinate).  Generators with index beyond the
current level act as the plain cylinder embedding, which keeps every
horizon-truncated statement exact.

Two kinds are built here:

* ``splus``: beta_n inserts a unit tensor factor in slot n; the dual deletes
  coordinate n.
* ``fplus``: alpha_0 couples the base to the first noise slot through a
  state-preserving map c_map: A x C -> A, and alpha_n (n >= 1) merges noise
  slots (n-1, n) through delta: C x C -> C.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels as kern
from .finprob import (
    FinSpace,
    Partition,
    commuting_square_check,
    local_filtration_markov_check,
    _first_occurrence,
    _products_equal,
)


class AtomBudgetError(RuntimeError):
    pass


class GradedSpace:
    """Truncated tensor-product atom spaces A x C^m for 0 <= m <= K.

    Atom ids are mixed-radix integers: the base-space atom is the most
    significant digit, noise coordinates follow in slot order.
    """

    def __init__(self, base: FinSpace, noise: FinSpace, horizon: int, budget: int = 2_000_000):
        self.base = base
        self.noise = noise
        self.K = horizon
        self.budget = budget
        self.d = base.n
        self.nc = noise.n
        if self.level_size(horizon) > budget:
            raise AtomBudgetError(
                f"level-{horizon} atom count {self.level_size(horizon)} exceeds budget {budget}"
            )
        self.base_num = base.weight_numerators()
        self.base_den = base.denominator
        self.noise_num = noise.weight_numerators()
        self.noise_den = noise.denominator
        self._weights: dict[int, np.ndarray] = {}

    def level_size(self, m: int) -> int:
        return self.d * self.nc**m

    def ensure(self, m: int):
        if self.level_size(m) > self.budget:
            raise AtomBudgetError(
                f"level-{m} atom count {self.level_size(m)} exceeds budget {self.budget}"
            )

    def level_denominator(self, m: int) -> int:
        return self.base_den * self.noise_den**m

    def level_weights(self, m: int) -> np.ndarray:
        """Integer weight numerators over level_denominator(m)."""
        if m not in self._weights:
            self.ensure(m)
            # numerators sum to the denominator, so the denominator itself
            # is the only quantity that must stay clear of int64
            if not kern.fits_int64(self.level_denominator(m)):
                raise OverflowError(
                    "level weights exceed int64; refine the chain or lower the horizon"
                )
            w = self.base_num.astype(np.int64)
            for _ in range(m):
                w = (w[:, None] * self.noise_num[None, :]).reshape(-1)
            self._weights[m] = w
        return self._weights[m]

    def base_coord(self, ids, m: int):
        return ids // self.nc**m

    def noise_digit(self, ids, m: int, slot: int):
        return (ids // self.nc ** (m - 1 - slot)) % self.nc


def _pushforward_ok(table, src_num, src_den, dst_num, dst_den):
    """Exact check that the point map pushes the source weights to the target."""
    if src_den % dst_den:
        return False
    sums = kern.group_sum(table.reshape(-1), src_num.reshape(-1), len(dst_num))
    return bool(np.array_equal(sums, dst_num.astype(np.int64) * (src_den // dst_den)))


@dataclass
class PointRep:
    """A family of measure-pushforward point maps realizing represented
    monoid generators on a GradedSpace."""

    gspace: GradedSpace
    kind: str  # "splus" or "fplus"
    c_map: np.ndarray | None = None  # (d, nc) -> base atom
    delta: np.ndarray | None = None  # (nc, nc) -> noise atom
    _eta_cache: dict = field(default_factory=dict, repr=False)
    _fix_cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        g = self.gspace
        if self.kind == "fplus":
            self.c_map = np.asarray(self.c_map, dtype=np.int64)
            self.delta = np.asarray(self.delta, dtype=np.int64)
            if self.c_map.shape != (g.d, g.nc):
                raise ValueError("c_map must be a (base x noise) atom table")
            if self.delta.shape != (g.nc, g.nc):
                raise ValueError("delta must be a (noise x noise) atom table")
            pair_num = g.base_num[:, None] * g.noise_num[None, :]
            if not _pushforward_ok(
                self.c_map, pair_num, g.base_den * g.noise_den, g.base_num, g.base_den
            ):
                raise ValueError("c_map does not push the product state to the base state")
            pair_num = g.noise_num[:, None] * g.noise_num[None, :]
            if not _pushforward_ok(
                self.delta, pair_num, g.noise_den**2, g.noise_num, g.noise_den
            ):
                raise ValueError("delta does not push the product state to the noise state")
        elif self.kind != "splus":
            raise ValueError(f"unknown representation kind {self.kind!r}")

    # -- point maps ---------------------------------------------------------

    def eta(self, n: int, m: int) -> np.ndarray:
        """Dual point map of generator n from level m+1 onto level m."""
        g = self.gspace
        g.ensure(m + 1)
        if self.kind == "splus":
            key = ("s", min(n, m), m)
        else:
            key = ("f", min(n, m + 1), m)
        if key in self._eta_cache:
            return self._eta_cache[key]
        ids = np.arange(g.level_size(m + 1), dtype=np.int64)
        nc = g.nc
        if self.kind == "splus":
            s = min(n, m)
            hi = ids // nc ** (m + 1 - s)
            lo = ids % nc ** (m - s)
            out = hi * nc ** (m - s) + lo
        elif n == 0:
            a = ids // nc ** (m + 1)
            c0 = (ids // nc**m) % nc
            out = self.c_map[a, c0] * nc**m + ids % nc**m
        elif n <= m:
            hi = ids // nc ** (m - n + 2)
            x = (ids // nc ** (m - n + 1)) % nc
            y = (ids // nc ** (m - n)) % nc
            lo = ids % nc ** (m - n)
            out = (hi * nc + self.delta[x, y]) * nc ** (m - n) + lo
        else:
            out = ids // nc  # generator beyond the level: cylinder embedding dual
        self._eta_cache[key] = out
        return out

    def drop_last(self, m: int) -> np.ndarray:
        g = self.gspace
        return np.arange(g.level_size(m + 1), dtype=np.int64) // g.nc

    def alpha_pullback(self, word_indices, level: int) -> np.ndarray:
        """Point map of the represented word at the given top level.

        The word acts as the composite algebra map into level `level`; the
        returned table maps level `level` down by len(word) levels, applying
        the dual of the leftmost letter first.
        """
        ids = np.arange(self.gspace.level_size(level), dtype=np.int64)
        lvl = level
        for n in word_indices:
            ids = self.eta(n, lvl - 1)[ids]
            lvl -= 1
        return ids

    def x_table(self, k: int, level: int) -> np.ndarray:
        """Base-space value of the k-th random variable, read at a level."""
        if k > level:
            raise ValueError("random variable index exceeds level")
        ids = self.alpha_pullback([0] * k, level)
        return self.gspace.base_coord(ids, level - k)

    # -- exact structural checks -------------------------------------------

    def state_preservation_check(self, n: int, m: int) -> bool:
        """Pushforward of the level-(m+1) state under eta_n is the level-m state."""
        g = self.gspace
        sums = kern.group_sum(self.eta(n, m), g.level_weights(m + 1), g.level_size(m))
        return bool(np.array_equal(sums, g.level_weights(m) * g.noise_den))

    def relation_check(self, k: int, l: int, m: int):
        """Check alpha_k alpha_l = alpha_{l+1} alpha_k as point maps
        level_{m+2} -> level_m.  Returns (ok, witness_atom_or_None)."""
        if self.kind == "fplus" and not k < l:
            raise ValueError("the F+ relation needs k < l")
        if self.kind == "splus" and not k <= l:
            raise ValueError("the S+ relation needs k <= l")
        left = self.eta(l, m)[self.eta(k, m + 1)]
        right = self.eta(k, m)[self.eta(l + 1, m + 1)]
        if np.array_equal(left, right):
            return True, None
        return False, int(np.argmax(left != right))

    def relation_pair_holds(self, k: int, l: int, m: int) -> bool:
        """Raw comparison without the k<l / k<=l guard (used to exhibit that
        the F+ construction genuinely lacks the k = l relation)."""
        left = self.eta(l, m)[self.eta(k, m + 1)]
        right = self.eta(k, m)[self.eta(l + 1, m + 1)]
        return bool(np.array_equal(left, right))

    # -- fixed point algebras ------------------------------------------------

    def fixed_point_partition(self, n: int, level: int) -> Partition:
        """Atoms of level `level` glued along eta_n(y) ~ drop_last(y).

        Functions constant on the resulting blocks are exactly those with
        alpha_n(f) equal to the cylinder extension of f.
        """
        cap = level if self.kind == "splus" else level + 1
        key = (min(n, cap), level)
        if key not in self._fix_cache:
            u = self.eta(n, level)
            v = self.drop_last(level)
            labels, _ = kern.union_components(self.gspace.level_size(level), u, v)
            self._fix_cache[key] = Partition(labels)
        return self._fix_cache[key]

    def intersected_fixed_points(self, n: int, level: int) -> Partition:
        """The tower algebra M_n = ∩_{k>=n+1} M^{alpha_k} at a level; indices
        beyond the horizon act as the identity and add no constraint."""
        top = min(self.gspace.K, level)
        acc = Partition.discrete(self.gspace.level_size(level))
        for k in range(n + 1, top + 1):
            acc = acc.meet(self.fixed_point_partition(k, level))
        return acc

    def tower_join(self, level: int) -> Partition:
        acc = Partition.trivial(self.gspace.level_size(level))
        for n in range(level + 1):
            acc = acc.join(self.intersected_fixed_points(n, level))
        return acc

    def has_generating_property(self, level: int) -> bool:
        """Join of the tower algebras is everything at the level."""
        return self.tower_join(level) == Partition.discrete(self.gspace.level_size(level))

    def shifted_partition(self, part: Partition, k: int, level: int) -> Partition:
        """Image algebra alpha_0^k(M) as a partition of the given level;
        `part` must live at level - k."""
        chain = self.alpha_pullback([0] * k, level)
        return Partition(part.labels[chain])


# ---------------------------------------------------------------------------
# builders
# ---------------------------------------------------------------------------


def build_splus_rep(base: FinSpace, noise: FinSpace, horizon: int, budget: int = 2_000_000) -> PointRep:
    if horizon < 2:
        raise ValueError("horizon must be at least 2")
    return PointRep(GradedSpace(base, noise, horizon, budget), "splus")


def build_fplus_rep(
    base: FinSpace,
    noise: FinSpace,
    c_map,
    delta,
    horizon: int,
    budget: int = 2_000_000,
) -> PointRep:
    if horizon < 2:
        raise ValueError("horizon must be at least 2")
    return PointRep(GradedSpace(base, noise, horizon, budget), "fplus", c_map, delta)


def delta_second_coordinate(noise: FinSpace) -> np.ndarray:
    """Dual of x -> 1 ⊗ x; makes alpha_n the partial shift beta_{n-1}."""
    n = noise.n
    return np.tile(np.arange(n, dtype=np.int64), (n, 1))


def delta_first_coordinate(noise: FinSpace) -> np.ndarray:
    """Dual of x -> x ⊗ 1; makes alpha_n the partial shift beta_n."""
    n = noise.n
    return np.repeat(np.arange(n, dtype=np.int64), n).reshape(n, n)


# ---------------------------------------------------------------------------
# intertwining and the triangular tower
# ---------------------------------------------------------------------------


def intertwining_check(rep: PointRep, k: int, n: int, horizon: int | None = None):
    """Check alpha_k Q_n = Q_{n+1} alpha_k on level-(K-1) atom indicators.

    Q_n is the conditional expectation onto the fixed-point algebra of the
    n-th represented generator.  Returns (ok, witness_or_None).
    """
    K = rep.gspace.K if horizon is None else horizon
    if not 0 <= k < n:
        raise ValueError("the intertwining identity is only claimed for k < n")
    if n > K - 1:
        raise ValueError("n must stay below the horizon")
    g = rep.gspace
    lo, hi = K - 1, K
    w_lo = g.level_weights(lo)
    w_hi = g.level_weights(hi)
    bn = rep.fixed_point_partition(n, lo)
    bn1 = rep.fixed_point_partition(n + 1, hi)
    ek = rep.eta(k, lo)  # level hi -> level lo

    # beta(y) = block of eta_k(y) in Q_n's partition must be constant on
    # every Q_{n+1}-block
    beta = bn.labels[ek]
    first_b = _first_occurrence(bn1.labels, bn1.nblocks)
    if not np.array_equal(beta, beta[first_b][bn1.labels]):
        y = int(np.argmax(beta != beta[first_b][bn1.labels]))
        return False, f"left side is not measurable along the right at atom {y}"
    beta_of_block = beta[first_b]

    w_bn = kern.group_sum(bn.labels, w_lo, bn.nblocks)
    w_bn1 = kern.group_sum(bn1.labels, w_hi, bn1.nblocks)

    # joint mass J[x, b] of eta_k^{-1}(x) within each Q_{n+1}-block b
    xb, n_xb = kern.pair_canon(ek, bn1.labels)
    j = kern.group_sum(xb, w_hi, n_xb)
    first_t = _first_occurrence(xb, n_xb)
    x_of_t = ek[first_t]
    b_of_t = bn1.labels[first_t]

    # completeness: every x in the block beta(b) must put mass into b
    blk_sizes = kern.group_count(bn.labels, bn.nblocks)
    seen = kern.group_count(b_of_t, bn1.nblocks)
    if not np.array_equal(seen, blk_sizes[beta_of_block]):
        b = int(np.argmax(seen != blk_sizes[beta_of_block]))
        return False, f"some source atom reaches no mass in target block {b}"

    if not np.array_equal(bn.labels[x_of_t], beta_of_block[b_of_t]):
        t = int(np.argmax(bn.labels[x_of_t] != beta_of_block[b_of_t]))
        return False, f"mass crosses fixed-point blocks at atom {int(first_t[t])}"

    idx = _products_equal(j, w_bn[bn.labels[x_of_t]], w_lo[x_of_t], w_bn1[b_of_t])
    if idx is not None:
        return False, f"projection weights differ at atom {int(first_t[idx])}"
    return True, None


@dataclass(frozen=True)
class TowerReport:
    generating: bool
    cells: dict
    cells_agree: bool
    intersections: dict

    @property
    def passed(self) -> bool:
        return (
            self.generating
            and self.cells_agree
            and all(self.cells.values())
            and all(self.intersections.values())
        )


def triangular_tower_check(rep: PointRep, horizon: int | None = None) -> TowerReport:
    """Verify that every cell (M_{m+k} ⊃ alpha_0^k(M_m); M_{n+k} ⊃
    alpha_0^k(M_n)) in the shifted tower is a commuting square, plus the
    intersection identities M_{n+1} ∩ alpha_0(M_{n+1}) = alpha_0(M_n)."""
    K = rep.gspace.K if horizon is None else horizon
    level = K - 1
    wnum = rep.gspace.level_weights(level)
    generating = rep.has_generating_property(level)
    cells = {}
    agree = True
    intersections = {}
    if not generating:
        return TowerReport(False, cells, agree, intersections)

    towers = {t: rep.intersected_fixed_points(t, level) for t in range(level + 1)}
    shifted: dict[tuple[int, int], Partition] = {}

    def alpha_shift(t: int, k: int) -> Partition:
        if (t, k) not in shifted:
            low = rep.intersected_fixed_points(t, level - k)
            shifted[(t, k)] = rep.shifted_partition(low, k, level)
        return shifted[(t, k)]

    for m in range(level + 1):
        for n in range(m + 1, level + 1):
            for k in range(1, level + 1):
                if n + k > level:
                    continue
                p0 = alpha_shift(m, k)
                p1 = towers[m + k]
                p2 = alpha_shift(n, k)
                report = commuting_square_check(wnum, p0, p1, p2)
                cells[(m, n, k)] = report.is_commuting_square
                agree = agree and report.all_agree

    for n in range(level):
        lhs = towers[n + 1].meet(alpha_shift(n + 1, 1))
        intersections[n] = lhs == alpha_shift(n, 1)
    return TowerReport(generating, cells, agree, intersections)


@dataclass(frozen=True)
class RepFiltration:
    """The interval-indexed family M_[0,n] = M_n, M_[m,m+t] = alpha_0^m(M_t),
    with the half-line truncated to the horizon."""

    partitions: dict
    horizon: int
    report: object

    @property
    def is_markov(self):
        return self.report.is_markov


def filtration_from_rep(rep: PointRep, horizon: int | None = None) -> RepFiltration:
    K = rep.gspace.K if horizon is None else horizon
    rep.gspace.ensure(K + 1)  # fixed points at level K read one level up
    level = K
    m_inf = rep.tower_join(level)  # discrete when generating
    parts = {}
    for m in range(K + 1):
        for n in range(m, K + 1):
            if n == K:
                low = rep.tower_join(level - m) if m else m_inf
            else:
                low = rep.intersected_fixed_points(n - m, level - m)
            parts[(m, n)] = rep.shifted_partition(low, m, level) if m else low
    report = local_filtration_markov_check(
        lambda m, n: parts[(m, n)], K, rep.gspace.level_weights(level)
    )
    return RepFiltration(parts, K, report)


def shifted_filtration_from_rep(rep: PointRep, m: int, n: int, horizon: int):
    """The (m,n)-shifted variant: generators g_0 -> g_m, g_k -> g_{n+k}.

    Realized by relabeling which represented generators the filtration reads;
    returns the same structure as filtration_from_rep.
    """
    K = horizon
    rep.gspace.ensure(K + 1)
    level = K

    def tower(t: int, lev: int) -> Partition:
        top = min(rep.gspace.K, lev)
        acc = Partition.discrete(rep.gspace.level_size(lev))
        for kk in range(t + n + 1, top + 1):
            acc = acc.meet(rep.fixed_point_partition(kk, lev))
        return acc

    def shift_m(part: Partition, k: int, lev: int) -> Partition:
        chain = rep.alpha_pullback([m] * k, lev)
        return Partition(part.labels[chain])

    parts = {}
    joined_top = rep.tower_join(level)
    for a in range(K + 1):
        for b in range(a, K + 1):
            if b == K:
                low = rep.tower_join(level - a) if a else joined_top
            else:
                low = tower(b - a, level - a)
            parts[(a, b)] = shift_m(low, a, level) if a else low
    report = local_filtration_markov_check(
        lambda u, v: parts[(u, v)], K, rep.gspace.level_weights(level)
    )
    return RepFiltration(parts, K, report)
