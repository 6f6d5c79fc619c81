import random
from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from finmarkov import dilation as D


# -- stationary distributions -------------------------------------------------


def test_two_state_formula():
    # pi = (p2/(p1+p2), p1/(p1+p2))
    for p1 in (F(1, 4), F(1, 2), F(3, 4)):
        for p2 in (F(1, 4), F(1, 2), F(3, 4)):
            pi = D.stationary_distribution(((1 - p1, p1), (p2, 1 - p2)))
            assert pi == (p2 / (p1 + p2), p1 / (p1 + p2))


def test_one_state():
    assert D.stationary_distribution(((F(1),),)) == (F(1),)


def test_worked_example():
    assert D.stationary_distribution(((F(1, 2), F(1, 2)), (F(1, 4), F(3, 4)))) == (
        F(1, 3),
        F(2, 3),
    )


def test_reject_non_unique():
    with pytest.raises(ValueError, match="not unique"):
        D.stationary_distribution(((F(1), F(0)), (F(0), F(1))))


def test_reject_non_positive():
    # absorbing state: stationary mass escapes state 0
    with pytest.raises(ValueError, match="positive"):
        D.ChainSpec.from_rows([[F(1, 2), F(1, 2)], [F(0), F(1)]])


@given(st.integers(0, 10_000))
@settings(max_examples=60, deadline=None)
def test_random_stationary_solves_fixed_point(seed):
    rng = random.Random(seed)
    spec = D.random_irreducible_chain(rng, rng.choice([2, 3, 4]))
    pi = spec.pi.weights
    d = spec.d
    for j in range(d):
        assert sum(pi[i] * spec.rows[i][j] for i in range(d)) == pi[j]
    assert sum(pi) == 1 and all(p > 0 for p in pi)


# -- first-order coupling ------------------------------------------------------


def test_symmetric_coin_swaps_halves():
    spec = D.ChainSpec.coin(F(1, 2), F(1, 2))
    ns, cpl = D.build_first_order_dilation(spec)
    assert ns.space.weights == (F(1, 2), F(1, 2))
    assert cpl.is_automorphism
    # tau swaps the second half of fiber 0 with the first half of fiber 1
    assert list(cpl.perm) == [0, 2, 1, 3]
    assert cpl.compression().rows == spec.rows


def test_paper_chain_coupling_is_identity_on_diagonal():
    spec = D.ChainSpec.coin(F(1, 2), F(1, 4))
    ns, cpl = D.build_first_order_dilation(spec)
    assert ns.space.weights == (F(1, 4), F(1, 4), F(1, 2))
    assert cpl.is_automorphism
    nc = ns.n
    for i in range(2):
        for c in range(nc):
            flat = i * nc + c
            if int(cpl.target[i, c]) == i:
                assert cpl.perm[flat] == flat  # identity on the diagonal pieces
    # the two mass-1/6 off-diagonal pieces swap
    assert cpl.perm[0 * nc + 2] == 1 * nc + 0
    assert cpl.perm[1 * nc + 0] == 0 * nc + 2
    cpl.validate_perm()


def test_general_two_state_compression():
    for p1 in (F(1, 4), F(1, 2), F(3, 4), F(1, 6)):
        for p2 in (F(1, 4), F(1, 2), F(3, 4), F(5, 6)):
            spec = D.ChainSpec.coin(p1, p2)
            _, cpl = D.build_first_order_dilation(spec)
            assert cpl.compression().rows == spec.rows


def test_two_state_cascade_is_bijective():
    # p1 + p2 > 1 with non-uniform state: needs the geometric cascade
    spec = D.ChainSpec.coin(F(3, 4), F(1, 2))
    _, cpl = D.build_first_order_dilation(spec)
    assert cpl.is_automorphism
    cpl.validate_perm()
    assert cpl.compression().rows == spec.rows


def test_bijective_coupling_impossible_case():
    # every fiber-0 atom must shrink by ratio pi0/pi1 < 1 under the flow
    # 0 -> 1 with full mass: no finite atom set supports that descent
    spec = D.ChainSpec.from_rows([[F(0), F(1)], [F(1, 2), F(1, 2)]])
    _, cpl = D.build_first_order_dilation(spec)
    assert not cpl.is_automorphism
    assert cpl.note
    assert cpl.compression().rows == spec.rows  # assignment still exact


def test_uniform_grid_retry():
    # doubly stochastic 3-state chain: uniform state, bijection always exists
    rows = [
        [F(0), F(1, 2), F(1, 2)],
        [F(1, 2), F(0), F(1, 2)],
        [F(1, 2), F(1, 2), F(0)],
    ]
    spec = D.ChainSpec.from_rows(rows)
    _, cpl = D.build_first_order_dilation(spec)
    assert cpl.is_automorphism
    cpl.validate_perm()


def test_zero_entries_omitted():
    spec = D.ChainSpec.from_rows([[F(0), F(1)], [F(1, 2), F(1, 2)]])
    ns, cpl = D.build_first_order_dilation(spec)
    # row 0 has a single piece: everything flows to state 1
    assert all(int(j) == 1 for j in cpl.target[0])


@given(st.integers(0, 10_000))
@settings(max_examples=40, deadline=None)
def test_random_chain_compression_exact(seed):
    rng = random.Random(seed)
    spec = D.random_irreducible_chain(rng, rng.choice([2, 3, 4]))
    _, cpl = D.build_first_order_dilation(spec)
    assert cpl.compression().rows == spec.rows
    if cpl.is_automorphism:
        cpl.validate_perm()


# -- the amplified model -------------------------------------------------------


def test_dilation_powers_paper_chain():
    spec = D.ChainSpec.coin(F(1, 2), F(1, 4))
    model = D.build_markov_dilation(spec, 5)
    for n in range(6):
        assert model.compressed_power(n) == spec.kernel.power(n).rows
    assert model.measure_preservation_check()
    assert model.first_coordinate_masses_check()


def test_model_requires_positive_horizon():
    spec = D.ChainSpec.coin(F(1, 2), F(1, 4))
    with pytest.raises(ValueError):
        D.build_markov_dilation(spec, 0)


def test_budget_refusal():
    from finmarkov.rep import AtomBudgetError

    spec = D.ChainSpec.coin(F(1, 2), F(1, 4))
    with pytest.raises(AtomBudgetError):
        D.build_markov_dilation(spec, 20)


def test_path_law_examples():
    spec = D.ChainSpec.coin(F(1, 2), F(1, 4))
    assert [D.path_law(spec, 0).prob((s,)) for s in range(2)] == [F(1, 3), F(2, 3)]
    law = D.path_law(spec, 2)
    assert law.prob((0, 1, 1)) == F(1, 8)
    total = sum(law.prob(p) for p in np.ndindex(2, 2, 2))
    assert total == 1


def test_path_law_iid_is_product():
    spec = D.ChainSpec.from_rows([[F(1, 3), F(2, 3)], [F(1, 3), F(2, 3)]])
    law = D.path_law(spec, 3)
    for p in np.ndindex(2, 2, 2, 2):
        expect = F(1)
        for s in p:
            expect *= spec.pi.weights[s]
        assert law.prob(p) == expect


def test_path_law_marginals():
    spec = D.ChainSpec.coin(F(1, 2), F(1, 4))
    law = D.path_law(spec, 3)
    num, den = law.marginal((0, 2))
    t2 = spec.kernel.power(2).rows
    for a in range(2):
        for b in range(2):
            assert F(int(num[a, b]), den) == spec.pi.weights[a] * t2[a][b]
    # order matters: marginal((2, 0)) is the transpose
    num2, _ = law.marginal((2, 0))
    assert np.array_equal(num2, num.T)


def test_model_joint_law_equals_path_law():
    spec = D.ChainSpec.coin(F(1, 2), F(1, 4))
    model = D.build_markov_dilation(spec, 4)
    law = D.path_law(spec, 4)
    num, den = model.joint_law()
    assert np.array_equal(num.astype(object) * law.den, law.num.astype(object) * den)


@given(st.integers(0, 10_000))
@settings(max_examples=15, deadline=None)
def test_dilation_property_random(seed):
    rng = random.Random(seed)
    spec = D.random_irreducible_chain(rng, rng.choice([2, 3, 4]))
    model = D.build_markov_dilation(spec, 3)
    assert D.dilation_property_check(model, n_random=10).passed


def test_path_law_invariant_under_noise_choice():
    # the observable distribution does not depend on how tau was realized
    spec = D.ChainSpec.coin(F(1, 2), F(1, 4))
    m1 = D.build_markov_dilation(
        spec, 3, D.build_first_order_dilation(spec, noise="compact")[1]
    )
    m2 = D.build_markov_dilation(
        spec, 3, D.build_first_order_dilation(spec, noise="refined")[1]
    )
    n1, d1 = m1.joint_law()
    n2, d2 = m2.joint_law()
    assert np.array_equal(n1.astype(object) * d2, n2.astype(object) * d1)


def test_corrupted_coupling_detected():
    # swap the targets of two equal-mass atoms across fibers: the product
    # state is still preserved, but the compression is no longer T
    spec = D.ChainSpec.coin(F(1, 2), F(1, 4))
    ns, cpl = D.build_first_order_dilation(spec)
    bad_target = cpl.target.copy()
    bad_target[0, 2], bad_target[1, 0] = bad_target[1, 0], bad_target[0, 2]
    bad = D.CouplingMap(cpl.base, cpl.noise, bad_target, None, "corrupted")
    assert bad.compression_rows() != spec.rows
    model = D.build_markov_dilation(spec, 3, bad)
    report = D.dilation_property_check(model)
    assert not report.passed
    assert not report.power_ok[1]


def test_state_breaking_corruption_rejected_at_build():
    spec = D.ChainSpec.coin(F(1, 2), F(1, 4))
    ns, cpl = D.build_first_order_dilation(spec)
    bad_target = cpl.target.copy()
    bad_target[0, 0] = 1 - bad_target[0, 0]
    bad = D.CouplingMap(cpl.base, cpl.noise, bad_target, None, "corrupted")
    with pytest.raises(ValueError, match="push"):
        D.build_markov_dilation(spec, 3, bad)


def test_chainspec_from_dict_and_errors():
    spec = D.ChainSpec.from_dict({"d": 2, "T": [["1/2", "1/2"], ["1/4", "3/4"]]})
    assert spec.pi.weights == (F(1, 3), F(2, 3))
    with pytest.raises(ValueError):
        D.ChainSpec.from_dict({"d": 3, "T": [["1/2", "1/2"], ["1/4", "3/4"]]})
    with pytest.raises(ValueError):
        D.ChainSpec.from_dict({"T": [["0.5", "0.5"], ["1/4", "3/4"]]})


def test_two_state_bijection_characterization():
    # exhaustive over entry denominators <= 4: an atom-level bijection exists
    # exactly when the lighter state keeps some probability at home
    # (otherwise all of its atoms would have to shrink by a fixed ratio,
    # which no finite atom set supports)
    probs = sorted({F(n, m) for m in range(1, 5) for n in range(1, m + 1)})
    for p1 in probs:
        for p2 in probs:
            spec = D.ChainSpec.coin(p1, p2)
            _, cpl = D.build_first_order_dilation(spec)
            pi = spec.pi.weights
            if pi[0] == pi[1]:
                assert cpl.is_automorphism, (p1, p2)
                continue
            small = 0 if pi[0] < pi[1] else 1
            crossing = spec.rows[small][1 - small]
            if crossing < 1:
                assert cpl.is_automorphism, (p1, p2)
                cpl.validate_perm()
            else:
                assert not cpl.is_automorphism, (p1, p2)


def test_int64_guard_refuses_rather_than_wrapping():
    # denominators beyond int64 raise cleanly; nothing is ever computed
    # with silently wrapped integers
    rng = random.Random(0)
    spec = D.random_irreducible_chain(rng, 4, 49)
    model = D.build_markov_dilation(spec, 5, budget=10**7)
    bits3 = model.gspace.level_denominator(3).bit_length()
    assert bits3 < 62
    assert model.compressed_power(3) == spec.kernel.power(3).rows
    assert model.gspace.level_denominator(4).bit_length() > 62
    with pytest.raises(OverflowError):
        model.compressed_power(4)


def test_iota_projection_is_conditional_expectation():
    # iota_0 iota_0* equals block averaging over the state coordinate
    from finmarkov.finprob import Partition, cond_exp, FinSpace

    spec = D.ChainSpec.coin(F(1, 2), F(1, 4))
    model = D.build_markov_dilation(spec, 2)
    g = model.gspace
    level = 2
    n = g.level_size(level)
    den = g.level_denominator(level)
    w = g.level_weights(level)
    space = FinSpace(tuple(F(int(x), den) for x in w))
    x0 = Partition(np.arange(n) // g.nc**level)
    f = space.element([(i * 7) % 5 - 2 for i in range(n)])
    left = cond_exp(space, x0, f)
    # iota_0 iota_0* (f) = iota_0 of the compression a -> E[f | X_0 = a]
    pi = spec.pi.weights
    comp = []
    for a in range(g.d):
        mask = np.arange(n) // g.nc**level == a
        total = sum(F(int(w[i]), den) * f.values[i] for i in np.nonzero(mask)[0])
        comp.append(total / pi[a])
    right = tuple(comp[int(np.arange(n)[i] // g.nc**level)] for i in range(n))
    assert left.values == right


def test_model_default_noise_stays_compact():
    # a chain whose bijection needs pi-ratio cuts: the hunt may adopt a
    # finer noise, but the model default must keep the compact one so the
    # level denominators stay within exact int64 range at depth 4
    spec = D.ChainSpec.from_rows([[F(1, 6), F(5, 6)], [F(4, 5), F(1, 5)]])
    ns_full, cpl_full = D.build_first_order_dilation(spec)
    assert cpl_full.is_automorphism  # found on the refined cuts
    assert ns_full.space.denominator > 10**6
    model = D.build_markov_dilation(spec, 4)
    assert model.gspace.noise_den <= 60
    assert D.dilation_property_check(model).passed
