"""Composite measures: weighted sums, value decomposition, refutation."""

import random
from fractions import Fraction

import pytest

from goodmeasures.chain import ClopenSet, new_chain
from goodmeasures.composite import (
    maximality_refute,
    measure,
    member,
    partial_isomorphism_extend_composite,
    weighted_sum,
)
from goodmeasures.errors import ComponentMixing, NotAValue, NotSeparable, SumMismatch

from conftest import E, alpha_module


@pytest.fixture()
def example_composite(triadic):
    """(1/3) * 3-adic measure next to (2/3) * (Z + Z*alpha) measure."""
    c1 = new_chain(triadic)
    c1.run_schedule(2)
    c2 = new_chain(alpha_module())
    c2.run_schedule(2)
    return weighted_sum([(c1, Fraction(1, 3)), (c2, Fraction(2, 3))])


# -- construction -------------------------------------------------------------


def test_single_component(dyadic):
    ch = new_chain(dyadic)
    ch.run_schedule(1)
    m = weighted_sum([(ch, Fraction(1))])
    assert member(m, E("1/2"))
    assert not member(m, E("1/3"))


def test_scale_sum_checked(triadic):
    c1 = new_chain(triadic)
    c2 = new_chain(alpha_module())
    with pytest.raises(SumMismatch):
        weighted_sum([(c1, Fraction(1, 2)), (c2, Fraction(1, 3))])


def test_two_rational_components_rejected(dyadic, triadic):
    c1 = new_chain(dyadic)
    c2 = new_chain(triadic)
    with pytest.raises(NotSeparable):
        weighted_sum([(c1, Fraction(1, 2)), (c2, Fraction(1, 2))])


# -- membership -----------------------------------------------------------------


def test_member_third(example_composite):
    assert member(example_composite, E("1/3"))


def test_member_alpha_scaled(example_composite):
    sym = alpha_module().symbols()["alpha"]
    assert member(example_composite, E(0, {sym: Fraction(2, 3)}))
    assert member(example_composite, E(Fraction(1, 9), {sym: Fraction(2, 3)}))
    # alpha coefficient outside (2/3)*Z is not attained
    assert not member(example_composite, E(0, {sym: Fraction(1, 3)}))


def test_member_rational_bounds(example_composite):
    assert member(example_composite, E(0))
    assert member(example_composite, E(1))
    assert not member(example_composite, E("1/2"))  # 1/2 not in (1/3)*V1 + {0, 2/3}


# -- measure queries ----------------------------------------------------------------


def test_measure_is_scaled_sum(example_composite):
    rng = random.Random(3)
    m = example_composite
    for _ in range(200):
        sets = {}
        expected = E(0)
        for idx, (chain, scale) in enumerate(m.components):
            level = rng.randint(0, chain.depth)
            cells = [c for c in chain.levels[level].cells if rng.random() < 0.5]
            U = ClopenSet.of(level, cells)
            sets[idx] = U
            expected = expected + chain.measure(U).scale(scale)
        assert measure(m, sets) == expected


# -- maximality refutation ------------------------------------------------------------


def test_refute_thirds_infeasible(example_composite):
    out = maximality_refute(example_composite, [E("1/3")] * 3)
    assert not out.feasible
    cert = out.certificate
    assert cert["failing_component"] == 1
    assert cert["coefficient_forced_contributions"] == [["0", "2/3"]] * 3


def test_refute_defining_partition_feasible(example_composite):
    out = maximality_refute(example_composite, [E("1/3"), E("2/3")])
    assert out.feasible
    assert out.realization["0"]["weights"] == [{"q": "1"}]
    assert out.realization["1"]["weights"] == [{"q": "1"}]


def test_refute_finer_feasible(example_composite):
    sym = alpha_module().symbols()["alpha"]
    a23 = E(0, {sym: Fraction(2, 3)})
    targets = [E("1/3"), a23, E("2/3") - a23]
    out = maximality_refute(example_composite, targets)
    assert out.feasible


def test_refute_rejects_non_values(example_composite):
    with pytest.raises(NotAValue):
        maximality_refute(example_composite, [E("1/2"), E("1/2")])
    with pytest.raises(SumMismatch):
        maximality_refute(example_composite, [E("1/3"), E("1/3")])


def test_refute_single_component_delegates(triadic):
    ch = new_chain(triadic)
    ch.run_schedule(1)
    m = weighted_sum([(ch, Fraction(1))])
    out = maximality_refute(m, [E("1/3")] * 3)
    assert out.feasible


# -- ultrahomogeneity ---------------------------------------------------------------------


def test_extend_identity(example_composite):
    m = example_composite
    chain0 = m.components[0][0]
    cells = list(chain0.levels[1].cells)
    f = {(0, 1, c): (0, 1, c) for c in cells}
    prefixes = partial_isomorphism_extend_composite(m, f)
    assert chain0.prefix_valid(prefixes[0])


def test_extend_swap_in_component(example_composite):
    m = example_composite
    chain0 = m.components[0][0]
    L = chain0.levels[1]
    same = [c for c in L.cells if L.weight(c) == L.weight(L.cells[0])]
    if len(same) < 2:
        pytest.skip("level has no equal pair")
    f = {(0, 1, same[0]): (0, 1, same[1])}
    prefixes = partial_isomorphism_extend_composite(m, f)
    assert prefixes[0].maps[1][same[0]] == same[1]
    assert chain0.prefix_valid(prefixes[0])


def test_extend_rejects_component_mixing(example_composite):
    m = example_composite
    c0 = m.components[0][0].levels[1].cells[0]
    c1 = m.components[1][0].levels[1].cells[0]
    with pytest.raises(ComponentMixing):
        partial_isomorphism_extend_composite(m, {(0, 1, c0): (1, 1, c1)})


def test_extend_random_partial_isomorphisms(example_composite):
    rng = random.Random(29)
    m = example_composite
    for _ in range(20):
        f = {}
        for idx, (chain, _) in enumerate(m.components):
            level = rng.randint(1, chain.depth)
            L = chain.levels[level]
            by_weight = {}
            for c in L.cells:
                by_weight.setdefault(str(L.weight(c)), []).append(c)
            for group in by_weight.values():
                chosen = [c for c in group if rng.random() < 0.6]
                rotated = chosen[1:] + chosen[:1]
                for a, b in zip(chosen, rotated):
                    f[(idx, level, a)] = (idx, level, b)
        if not f:
            continue
        prefixes = partial_isomorphism_extend_composite(m, f)
        for idx, (chain, _) in enumerate(m.components):
            assert chain.prefix_valid(prefixes[idx])
        for (ci, li, cell), (_, _, target) in f.items():
            assert prefixes[ci].maps[li][cell] == target
