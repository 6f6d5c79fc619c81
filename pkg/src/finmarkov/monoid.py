"""Words and word problems for the Thompson monoid F+, the partial shifts
monoid S+, and the extended monoids EF+/ES+/FF+.

Conventions, fixed once and used everywhere:

* a word reads left to right and denotes the composite applied
  rightmost-letter-first (so ``a b`` means "apply b, then a");
* F+ carries the relations g_k g_l = g_{l+1} g_k for 0 <= k < l,
  S+ the same relations for k <= l.

All defining relations of every monoid here are length-preserving, which
keeps the closure oracles finite.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass

FAMILIES = ("g", "h", "c")

Letter = tuple[str, int]


@dataclass(frozen=True)
class Word:
    """A free word over indexed generators g_i / h_i / c_i."""

    letters: tuple[Letter, ...] = ()

    def __post_init__(self):
        for fam, idx in self.letters:
            if fam not in FAMILIES or idx < 0:
                raise ValueError(f"bad letter ({fam}, {idx})")

    @staticmethod
    def parse(text: str) -> "Word":
        letters = []
        for tok in text.split():
            fam = tok[0]
            if fam not in FAMILIES or not tok[1:].isdigit():
                raise ValueError(f"bad token {tok!r}")
            letters.append((fam, int(tok[1:])))
        return Word(tuple(letters))

    def __str__(self):
        return " ".join(f"{f}{i}" for f, i in self.letters) if self.letters else "e"

    def __len__(self):
        return len(self.letters)

    def __mul__(self, other: "Word") -> "Word":
        return Word(self.letters + other.letters)

    def families(self):
        return {f for f, _ in self.letters}

    def max_index(self) -> int:
        return max((i for _, i in self.letters), default=0)

    def indices(self, family=None):
        return tuple(i for f, i in self.letters if family is None or f == family)


def gword(*indices: int) -> Word:
    return Word(tuple(("g", i) for i in indices))


def hword(*indices: int) -> Word:
    return Word(tuple(("h", i) for i in indices))


@dataclass(frozen=True)
class NormalForm:
    """Normal form g_k^{a_k} g_{k-1}^{a_{k-1}} ... g_0^{a_0} of an F+ class.

    Stored as (index, exponent) blocks with strictly decreasing indices and
    positive exponents; the empty tuple denotes the identity e.
    """

    blocks: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        prev = None
        for idx, exp in self.blocks:
            if exp <= 0 or idx < 0 or (prev is not None and idx >= prev):
                raise ValueError(f"not a normal form: {self.blocks}")
            prev = idx

    @property
    def top_index(self):
        return self.blocks[0][0] if self.blocks else None

    def exponents(self) -> tuple[int, ...]:
        """Full vector (a_k, a_{k-1}, ..., a_0), zeros included."""
        if not self.blocks:
            return ()
        top = self.blocks[0][0]
        out = [0] * (top + 1)
        for idx, exp in self.blocks:
            out[top - idx] = exp
        return tuple(out)

    def to_word(self) -> Word:
        return Word(tuple(("g", i) for i, e in self.blocks for _ in range(e)))

    def __str__(self):
        return " ".join(f"g{i}^{e}" for i, e in self.blocks) if self.blocks else "e"


def _require_family(w: Word, family: str, op: str):
    bad = w.families() - {family}
    if bad:
        raise ValueError(f"{op} expects only {family}-letters, found {sorted(bad)}")


def normal_form_fplus(w: Word) -> NormalForm:
    """Unique F+ normal form, indices strictly decreasing left to right.

    Right-to-left insertion: a letter i bubbles rightward through the
    already-normalized suffix, incrementing every strictly larger index it
    passes (the rewrite g_i g_j -> g_{j+1} g_i for i < j).  Each insertion
    does at most len(suffix) rewrites, so this terminates.
    """
    _require_family(w, "g", "normal_form_fplus")
    suffix: list[int] = []
    for i in reversed(w.indices()):
        t = 0
        new = []
        while t < len(suffix) and i < suffix[t]:
            new.append(suffix[t] + 1)
            t += 1
        new.append(i)
        new.extend(suffix[t:])
        suffix = new
    blocks = []
    for i in suffix:
        if blocks and blocks[-1][0] == i:
            blocks[-1][1] += 1
        else:
            blocks.append([i, 1])
    return NormalForm(tuple((i, e) for i, e in blocks))


def words_equal_fplus(w1: Word, w2: Word) -> bool:
    return normal_form_fplus(w1) == normal_form_fplus(w2)


def shift_mn(m: int, n: int, w: Word) -> Word:
    """(m,n)-partial shift: g_0 -> g_m and g_k -> g_{n+k} for k >= 1."""
    if m > n:
        raise ValueError(f"(m,n)-partial shift needs m <= n, got ({m}, {n})")
    _require_family(w, "g", "shift_mn")
    return Word(tuple(("g", m if i == 0 else n + i) for _, i in w.letters))


def theta(k: int, x: int) -> int:
    """Partial shift on N_0: skips the value k."""
    return x + 1 if x >= k else x


def splus_apply(w: Word, x: int) -> int:
    """Evaluate the composite of partial shifts named by an h-word at x.

    The leftmost letter applies last (operator composition order).
    """
    _require_family(w, "h", "splus_apply")
    for _, k in reversed(w.letters):
        x = theta(k, x)
    return x


def words_equal_splus(w1: Word, w2: Word) -> bool:
    """Decide S+ equality through the induced injections of N_0.

    A composite of partial shifts is determined by its values on the finite
    segment [0, L] with L = 1 + max index + max word length: beyond the max
    index every letter acts as +1, so the segment also separates composites
    of different lengths.
    """
    _require_family(w1, "h", "words_equal_splus")
    _require_family(w2, "h", "words_equal_splus")
    hi = max(w1.max_index(), w2.max_index())
    bound = 1 + hi + max(len(w1), len(w2))
    return all(splus_apply(w1, x) == splus_apply(w2, x) for x in range(bound + 1))


def project_to_splus(w: Word) -> Word:
    """Canonical epimorphism F+ ->> S+, letterwise g_n -> h_n."""
    _require_family(w, "g", "project_to_splus")
    return Word(tuple(("h", i) for _, i in w.letters))


# ---------------------------------------------------------------------------
# Rewriting relations and closure oracles
# ---------------------------------------------------------------------------

# Every relation below swaps one adjacent pair, possibly shifting one index.
# A rule is (name, match(pair) -> new pair or None).


def _fplus_rules(fam):
    def fwd(p):
        (fa, a), (fb, b) = p
        if fa == fb == fam and a < b:
            return ((fam, b + 1), (fam, a))

    def bwd(p):
        (fa, a), (fb, b) = p
        if fa == fb == fam and a >= b + 2:
            return ((fam, b), (fam, a - 1))

    return [(f"{fam}{fam}+", fwd), (f"{fam}{fam}-", bwd)]


def _splus_rules(fam):
    def fwd(p):
        (fa, a), (fb, b) = p
        if fa == fb == fam and a <= b:
            return ((fam, b + 1), (fam, a))

    def bwd(p):
        (fa, a), (fb, b) = p
        if fa == fb == fam and a >= b + 1:
            return ((fam, b), (fam, a - 1))

    return [(f"{fam}{fam}+", fwd), (f"{fam}{fam}-", bwd)]


def _cc_far_swap(p):
    (fa, a), (fb, b) = p
    if fa == fb == "c" and abs(a - b) >= 2:
        return (("c", b), ("c", a))


def _cx_far_swap(fam):
    # c_k x_{l+1} = x_{l+1} c_k for k < l, both orders
    def rule(p):
        (fa, a), (fb, b) = p
        if fa == "c" and fb == fam and b >= a + 2:
            return ((fam, b), ("c", a))
        if fa == fam and fb == "c" and a >= b + 2:
            return (("c", b), (fam, a))

    return rule


def _xc_twist(fam):
    # x_k c_l = c_{l+1} x_k for k < l, and its inverse
    def fwd(p):
        (fa, a), (fb, b) = p
        if fa == fam and fb == "c" and a < b:
            return (("c", b + 1), (fam, a))

    def bwd(p):
        (fa, a), (fb, b) = p
        if fa == "c" and fb == fam and a >= b + 2:
            return ((fam, b), ("c", a - 1))

    return [(f"{fam}c+", fwd), (f"{fam}c-", bwd)]


def _xc_plain_swap(fam):
    # FF+ variant: x_k c_l = c_l x_k for k < l, both orders
    def rule(p):
        (fa, a), (fb, b) = p
        if fa == fam and fb == "c" and a < b:
            return (("c", b), (fam, a))
        if fa == "c" and fb == fam and a > b:
            return ((fam, b), ("c", a))

    return rule


def monoid_rules(kind: str):
    """Adjacent-pair rewrite rules (both directions) for a monoid name."""
    k = kind.upper().replace("^", "").replace("⁺", "+")
    if k == "F+":
        return _fplus_rules("g")
    if k == "S+":
        return _splus_rules("h")
    if k == "EF+":
        return (
            _fplus_rules("g")
            + [("cc~", _cc_far_swap), ("cg~", _cx_far_swap("g"))]
            + _xc_twist("g")
        )
    if k == "ES+":
        return (
            _splus_rules("h")
            + [("cc~", _cc_far_swap), ("ch~", _cx_far_swap("h"))]
            + _xc_twist("h")
        )
    if k == "FF+":
        rules = _fplus_rules("g")
        rules += [(n.replace("g", "c"), f) for n, f in _fplus_rules("c")]
        rules += [("cg~", _cx_far_swap("g")), ("gc~", _xc_plain_swap("g"))]
        return rules
    raise ValueError(f"unknown monoid {kind!r}")


def neighbours(w: Word, rules):
    """All single-relation rewrites of w: (word, rule name, position)."""
    out = []
    ls = w.letters
    for pos in range(len(ls) - 1):
        pair = (ls[pos], ls[pos + 1])
        for name, rule in rules:
            new = rule(pair)
            if new is not None:
                out.append((Word(ls[:pos] + new + ls[pos + 2 :]), name, pos))
    return out


def rewriting_closure(w: Word, kind: str = "F+", index_cap=None, node_budget=2_000_000):
    """The full bidirectional-rewriting class of w (a finite set).

    Exploration caps generator indices at max index + word length + 1 unless
    index_cap is given; each forward rewrite raises one index by exactly 1
    and words keep their length, so the class stays within the cap.
    """
    rules = monoid_rules(kind)
    cap = index_cap if index_cap is not None else w.max_index() + len(w) + 1
    seen = {w}
    queue = deque([w])
    while queue:
        cur = queue.popleft()
        for nxt, _, _ in neighbours(cur, rules):
            if nxt.max_index() > cap or nxt in seen:
                continue
            if len(seen) >= node_budget:
                raise RuntimeError("closure node budget exhausted")
            seen.add(nxt)
            queue.append(nxt)
    return seen


@dataclass(frozen=True)
class DerivationStep:
    relation: str
    position: int
    result: Word


@dataclass(frozen=True)
class DerivationTrace:
    """A replayable chain of single-relation rewrites."""

    monoid: str
    start: Word
    steps: tuple[DerivationStep, ...]

    @property
    def end(self) -> Word:
        return self.steps[-1].result if self.steps else self.start

    def validate(self) -> bool:
        """Replay every step against the monoid's defining relations."""
        rules = dict(monoid_rules(self.monoid))
        cur = self.start
        for step in self.steps:
            ls = cur.letters
            if not 0 <= step.position < len(ls) - 1:
                return False
            rule = rules.get(step.relation)
            if rule is None:
                return False
            new = rule((ls[step.position], ls[step.position + 1]))
            if new is None:
                return False
            cur = Word(ls[: step.position] + new + ls[step.position + 2 :])
            if cur != step.result:
                return False
        return True

    def to_json(self) -> str:
        return json.dumps(
            {
                "monoid": self.monoid,
                "start": str(self.start),
                "steps": [
                    {"relation": s.relation, "position": s.position, "result": str(s.result)}
                    for s in self.steps
                ],
                "end": str(self.end),
            },
            indent=2,
        )


class DerivationNotFound(RuntimeError):
    pass


def derive_words(kind: str, start: Word, target: Word, node_budget=200_000) -> DerivationTrace:
    """Breadth-first derivation of target from start inside the given monoid.

    All relations are length-preserving, so the search space is finite once
    indices are capped; the budget bounds explored nodes.
    """
    rules = monoid_rules(kind)
    cap = max(start.max_index(), target.max_index()) + len(start) + 1
    prev: dict[Word, tuple[Word, str, int] | None] = {start: None}
    queue = deque([start])
    while queue:
        cur = queue.popleft()
        if cur == target:
            steps = []
            node = cur
            while prev[node] is not None:
                parent, name, pos = prev[node]
                steps.append(DerivationStep(name, pos, node))
                node = parent
            return DerivationTrace(kind, start, tuple(reversed(steps)))
        for nxt, name, pos in neighbours(cur, rules):
            if nxt.max_index() > cap or nxt in prev:
                continue
            if len(prev) >= node_budget:
                raise DerivationNotFound(
                    f"no derivation within {node_budget} nodes: {start} -> {target}"
                )
            prev[nxt] = (cur, name, pos)
            queue.append(nxt)
    raise DerivationNotFound(f"search space exhausted: {start} -> {target} in {kind}")


def extended_relation_check(monoid_kind: str, k: int, l: int, node_budget=200_000) -> DerivationTrace:
    """Derive (c_k x_k)(c_l x_l) -> (c_{l+1} x_{l+1})(c_k x_k) in EF+/ES+/FF+.

    This witnesses that the elements c_n x_n satisfy the Thompson-monoid
    relation for the given pair of indices.
    """
    if not 0 <= k < l:
        raise ValueError(f"need 0 <= k < l, got ({k}, {l})")
    kind = monoid_kind.upper().replace("^", "").replace("⁺", "+")
    if kind not in ("EF+", "ES+", "FF+"):
        raise ValueError(f"extended monoid expected, got {monoid_kind!r}")
    fam = "h" if kind == "ES+" else "g"
    start = Word((("c", k), (fam, k), ("c", l), (fam, l)))
    target = Word((("c", l + 1), (fam, l + 1), ("c", k), (fam, k)))
    return derive_words(kind, start, target, node_budget=node_budget)
