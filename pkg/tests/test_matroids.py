import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stopping_lab.arrivals import gen_permutation_sequence, sequence_from_order
from stopping_lab.errors import InvalidArgument
from stopping_lab.harness import matroid_experiment
from stopping_lab.matroids import (
    TableMatroid,
    WeightedMatroidInstance,
    adversarial_instance,
    axiom_violations,
    brute_force_max_weight,
    complete_graph_edges,
    dump_instance,
    first_half_singletons,
    graphic_instance,
    greedy_basis,
    greedy_dominance_check,
    parse_instance,
    random_graph_instance,
    run_continued_greedy,
    run_matroid_secretary,
    transversal_instance,
    uniform_instance,
)
from stopping_lab.rng import generator

TRIANGLE = WeightedMatroidInstance("graphic", (3.0, 2.0, 1.0), (3, ((0, 1), (1, 2), (0, 2))))


def _spanning_trees(num_vertices, edges):
    """All edge subsets of size V-1 that connect the graph, found by brute force."""
    trees = []
    for subset in itertools.combinations(range(len(edges)), num_vertices - 1):
        parent = list(range(num_vertices))

        def find(x):
            while parent[x] != x:
                x = parent[x]
            return x

        ok = True
        for e in subset:
            a, b = find(edges[e][0]), find(edges[e][1])
            if a == b:
                ok = False
                break
            parent[a] = b
        if ok:
            trees.append(subset)
    return trees


def test_independence_examples():
    assert TRIANGLE.is_independent([])
    assert not TRIANGLE.is_independent([0, 1, 2])
    assert TRIANGLE.is_independent([0, 2])
    u = WeightedMatroidInstance("uniform", (4.0, 3.0, 2.0, 1.0), 2)
    assert not u.is_independent([0, 1, 2])
    assert u.is_independent([1, 3])
    with pytest.raises(InvalidArgument):
        u.is_independent([4])


def test_transversal_independence():
    inst = WeightedMatroidInstance("transversal", (1.0, 2.0, 3.0), (2, ((0,), (0,), (0, 1))))
    assert inst.is_independent([0, 2])
    assert not inst.is_independent([0, 1])
    assert not inst.is_independent([0, 1, 2])


def test_instance_validation():
    with pytest.raises(InvalidArgument):
        WeightedMatroidInstance("uniform", (1.0, 1.0), 1)
    with pytest.raises(InvalidArgument):
        WeightedMatroidInstance("uniform", (1.0, -2.0), 1)
    with pytest.raises(InvalidArgument):
        WeightedMatroidInstance("partition", (1.0,), 1)


def test_greedy_examples():
    res = greedy_basis(TRIANGLE)
    assert set(res.basis) == {0, 1} and res.weight == 5.0
    u = WeightedMatroidInstance("uniform", (0.1, 0.9, 0.5, 0.7), 2)
    assert set(greedy_basis(u).basis) == {1, 3}


def test_k4_spanning_trees():
    rng = generator(4)
    edges = complete_graph_edges(4)
    trees = _spanning_trees(4, edges)
    assert len(trees) == 16
    for _ in range(50):
        inst = graphic_instance(4, edges, rng)
        best = max(inst.weight(t) for t in trees)
        assert greedy_basis(inst).weight == pytest.approx(best, abs=1e-12)


def _random_small(kind, rng):
    size = int(rng.integers(1, 9))
    if kind == "uniform":
        return uniform_instance(size, int(rng.integers(0, size + 1)), rng)
    if kind == "graphic":
        return random_graph_instance(int(rng.integers(2, 6)), 0.7, rng, max_edges=8)
    return transversal_instance(size, int(rng.integers(1, 5)), 0.5, rng)


@pytest.mark.parametrize("kind", ["uniform", "graphic", "transversal"])
def test_axioms_and_greedy_optimality(kind):
    rng = generator(8, len(kind))
    for _ in range(40):
        inst = _random_small(kind, rng)
        assert inst.ground_size <= 8
        assert axiom_violations(inst, inst.ground_size) == []
        assert greedy_basis(inst).weight == pytest.approx(brute_force_max_weight(inst), abs=1e-12)


def test_axiom_checker_catches_a_non_matroid():
    # {0,1} and {2} independent but {2} cannot grow from {0,1}: exchange fails
    table = TableMatroid(3, frozenset({0b000, 0b001, 0b010, 0b011, 0b100}))
    problems = axiom_violations(table, 3)
    assert any(p.startswith("exchange") for p in problems)
    table = TableMatroid(2, frozenset({0b11}))
    assert "empty set is dependent" in axiom_violations(table, 2)


def test_table_oracle_agrees_with_native():
    rng = generator(9)
    inst = transversal_instance(6, 3, 0.5, rng)
    table = TableMatroid.from_instance(inst)
    for m in range(1 << 6):
        subset = [e for e in range(6) if m >> e & 1]
        assert table.is_independent(subset) == inst.is_independent(subset)


def test_greedy_result_is_maximal():
    rng = generator(10)
    for _ in range(30):
        inst = _random_small("graphic", rng)
        basis = list(greedy_basis(inst).basis)
        assert inst.is_independent(basis)
        for e in set(range(inst.ground_size)) - set(basis):
            assert not inst.is_independent(basis + [e])


def test_single_element_selected():
    inst = WeightedMatroidInstance("uniform", (2.5,), 1)
    out = run_matroid_secretary(inst, sequence_from_order([0, 0], 1, 2))
    assert out.selected == (0,) and out.weight == 2.5


def test_rejects_wrong_k_and_size():
    inst = WeightedMatroidInstance("uniform", (2.5, 1.0), 1)
    with pytest.raises(InvalidArgument):
        run_matroid_secretary(inst, sequence_from_order([0, 0, 0, 1, 1, 1], 2, 3))
    with pytest.raises(InvalidArgument):
        run_matroid_secretary(inst, sequence_from_order([0, 0], 1, 2))


@settings(max_examples=80, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), kind=st.sampled_from(["uniform", "graphic", "transversal"]))
def test_selection_is_legal(seed, kind):
    rng = np.random.default_rng(seed)
    inst = _random_small(kind, rng)
    n = inst.ground_size
    seq = gen_permutation_sequence(n, 2, seed)
    out = run_matroid_secretary(inst, seq)
    assert inst.is_independent(out.selected)
    assert set(out.selected) <= set(out.e_prime)
    second = {e.item: e.round for e in seq.events if e.occurrence == 2}
    assert all(second[e] > n for e in out.selected)
    assert set(out.e_prime) == set(first_half_singletons(seq))


def test_dominance_examples():
    rng = generator(11)
    inst = graphic_instance(4, complete_graph_edges(4), rng)
    assert greedy_dominance_check(inst, range(inst.ground_size))
    u = WeightedMatroidInstance("uniform", (4.0, 3.0, 2.0, 1.0), 2)
    assert greedy_dominance_check(u, [1, 2, 3])
    assert greedy_basis(u, [1, 2, 3]).basis[0] == 1


def test_dominance_property_k4():
    rng = generator(12)
    edges = complete_graph_edges(4)
    for _ in range(1000):
        inst = graphic_instance(4, edges, rng)
        subset = np.flatnonzero(rng.random(len(edges)) < 0.5)
        assert greedy_dominance_check(inst, subset.tolist())


def test_adversarial_small():
    inst = adversarial_instance(1, 0.01, generator(13))
    assert inst.ground_size == 3
    res = greedy_basis(inst)
    assert 0 in res.basis and inst.weights[0] == 2.0
    with pytest.raises(InvalidArgument):
        adversarial_instance(0)


def test_adversarial_m20():
    eps = 1e-3
    inst = adversarial_instance(20, eps, generator(14))
    w = np.array(inst.weights)
    assert inst.ground_size == 41
    assert np.all((w[1::2] > eps) & (w[1::2] < 2 * eps))
    assert np.all((w[2::2] > 2 * eps) & (w[2::2] < 3 * eps))
    res = greedy_basis(inst)
    assert 0 in res.basis
    assert res.weight == pytest.approx(21 + w[2::2].sum(), abs=1e-12)


def test_continued_greedy_diagnostic():
    # m=2: spokes (v,w1), (u,w2), (v,w2) picked at round n leave no room for (u,v)
    inst = adversarial_instance(2, 0.01, generator(15))
    seq = sequence_from_order([1, 2, 3, 4, 1, 0, 2, 3, 4, 0], 5, 2)
    base = run_matroid_secretary(inst, seq)
    assert set(base.e_prime) == {2, 3, 4} and set(base.selected) == {2, 3, 4}
    cont = run_continued_greedy(inst, seq)
    assert 0 not in cont.selected
    # had (u,v) arrived in the first half it would have been picked
    early = run_matroid_secretary(inst, sequence_from_order([0, 1, 2, 3, 4, 1, 2, 3, 4, 0], 5, 2))
    assert 0 in early.selected


def test_membership_probability_n2():
    inst = WeightedMatroidInstance("uniform", (1.0, 2.0), 1)
    exp = matroid_experiment(inst, 200_000, seed=16)
    se = math.sqrt((2 / 3) * (1 / 3) / exp.trials)
    assert np.all(np.abs(exp.membership_freq - 2 / 3) < 4 * se)


def test_uniform_rank1_ratio():
    inst = uniform_instance(5, 1, generator(17))
    exp = matroid_experiment(inst, 100_000, seed=17)
    assert exp.mean_weight / exp.opt >= 5 / 9


@pytest.mark.parametrize("kind", ["uniform", "graphic", "transversal"])
def test_instance_file_round_trip(kind):
    rng = generator(18)
    inst = {
        "uniform": lambda: uniform_instance(6, 2, rng),
        "graphic": lambda: graphic_instance(4, complete_graph_edges(4), rng),
        "transversal": lambda: transversal_instance(5, 3, 0.3, rng),
    }[kind]()
    assert parse_instance(dump_instance(inst)) == inst


def test_parse_rejects_missing_lines():
    with pytest.raises(InvalidArgument):
        parse_instance("uniform 2 1\n0 1.0\n")
    with pytest.raises(InvalidArgument):
        parse_instance("")
