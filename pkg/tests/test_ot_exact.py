import itertools
import math

import numpy as np
import pytest
from conftest import coupling_lp, enumerate_vertices
from hypothesis import given, settings
from hypothesis import strategies as st

from shadowproj.exceptions import InputError
from shadowproj.instances import random_measure
from shadowproj.measures import DiscreteMeasure, MetricSpec, pairwise_cost
from shadowproj.ot_exact import (
    TransportPlan,
    barycentric_map,
    max_flow_bipartite,
    plan_cost,
    read_plan_csv,
    solve,
    solve_ot,
    solve_ot_inf,
    transport_simplex,
    write_plan_csv,
)

S2 = MetricSpec(2, (1,))
SINF = MetricSpec(math.inf, (1,))


def U(*xs):
    return DiscreteMeasure([[x] for x in xs])


def test_identity_coupling():
    m = DiscreteMeasure([[0.1], [0.5], [0.9]], [0.2, 0.3, 0.5])
    r = solve_ot(m, m, S2)
    assert r.value == 0.0
    assert np.array_equal(r.plan.table, np.diag(m.weights))
    assert solve_ot_inf(m, m, SINF).value == 0.0


def test_dirac_source_forces_product_plan():
    t = DiscreteMeasure([[0.0], [1.0], [3.0]], [0.5, 0.25, 0.25])
    r = solve_ot(DiscreteMeasure.dirac([1.0]), t, S2)
    expected = math.sqrt(0.5 * 1 + 0.25 * 0 + 0.25 * 4)
    assert r.value == pytest.approx(expected, abs=1e-15)
    assert np.array_equal(r.plan.table[0], t.weights)


def test_split_to_dirac():
    r = solve_ot(U(0.0, 1.0), DiscreteMeasure.dirac([0.5]), S2)
    # the only coupling: both halves travel 0.5
    assert r.value == 0.5


def test_bottleneck_examples():
    assert solve_ot_inf(U(0.0, 1.0), U(0.1, 0.9), SINF).value == pytest.approx(0.1, abs=1e-15)
    assert solve_ot_inf(DiscreteMeasure.dirac([0.2]), DiscreteMeasure.dirac([0.9]), SINF).value \
        == pytest.approx(0.7, abs=1e-15)
    with pytest.raises(InputError):
        solve_ot_inf(U(0.0), U(1.0), S2)
    with pytest.raises(InputError):
        solve_ot(U(0.0), U(1.0), SINF)


def test_dimension_mismatch():
    with pytest.raises(InputError):
        solve_ot(U(0.0), DiscreteMeasure.dirac([0.0, 1.0]), S2)


@pytest.mark.parametrize("seed", range(40))
@pytest.mark.parametrize("p", [1.0, 1.5, 2.0])
def test_matches_basis_enumeration(seed, p):
    a = random_measure(seed, 3, 1, levels=(0, 3)[seed % 2])
    b = random_measure(seed + 1000, 3, 1, levels=(0, 3)[seed % 2])
    spec = MetricSpec(p, (1,))
    r = solve_ot(a, b, spec)
    C = pairwise_cost(a.atoms, b.atoms, spec)
    ref = enumerate_vertices(*coupling_lp(a.weights, b.weights, C))
    assert r.value ** p == pytest.approx(ref, abs=1e-12)
    assert r.plan.nnz() <= a.n_atoms + b.n_atoms - 1
    assert r.duality_gap <= 1e-12


def _bottleneck_bruteforce(xs, ys):
    # equal-size uniform measures: optimal couplings include a permutation
    n = len(xs)
    return min(max(abs(xs[i] - ys[s[i]]) for i in range(n))
               for s in itertools.permutations(range(n)))


@pytest.mark.parametrize("seed", range(30))
def test_bottleneck_vs_permutations(seed):
    rng = np.random.default_rng(seed)
    n = 1 + seed % 5
    xs, ys = rng.random(n), rng.random(n)
    r = solve_ot_inf(U(*xs), U(*ys), SINF)
    assert r.value == pytest.approx(_bottleneck_bruteforce(xs, ys), abs=1e-15)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32), st.sampled_from([1.0, 2.0, 3.0, math.inf]))
def test_plan_invariants(seed, p):
    a = random_measure(seed, 5, 2, levels=(0, 4)[seed % 2])
    b = random_measure(seed ^ 0xABCDEF, 5, 2, levels=(0, 4)[seed % 2])
    spec = MetricSpec(p, (2,))
    r = solve(a, b, spec)
    t = r.plan.table
    assert t.min() >= 0
    assert np.max(np.abs(t.sum(axis=1) - a.weights)) <= 1e-9
    assert np.max(np.abs(t.sum(axis=0) - b.weights)) <= 1e-9
    assert plan_cost(r.plan, spec) == pytest.approx(r.value, abs=1e-12)
    # same input twice gives the same plan
    assert np.array_equal(solve(a, b, spec).plan.table, t)


def test_plan_cost_consistency():
    t = DiscreteMeasure([[0.0], [2.0]], [0.3, 0.7])
    d = DiscreteMeasure.dirac([0.5])
    product = TransportPlan(d, t, [t.weights])
    assert plan_cost(product, S2) == solve_ot(d, t, S2).value
    diag = TransportPlan(t, t, np.diag(t.weights))
    assert plan_cost(diag, S2) == 0.0


def test_transport_plan_validation():
    a = U(0.0, 1.0)
    with pytest.raises(InputError):
        TransportPlan(a, a, [[0.5, 0.0], [0.0, 0.4]])
    with pytest.raises(InputError):
        TransportPlan(a, a, [[0.6, -0.1], [-0.1, 0.6]])


def test_transport_simplex_degenerate_equal_masses():
    # all supplies equal all demands: heavily degenerate, must still certify
    n = 6
    a = np.full(n, 1 / n)
    C = np.abs(np.subtract.outer(np.arange(n), np.arange(n)[::-1])).astype(float)
    flow, u, v, _ = transport_simplex(a, a, C)
    assert float(np.sum(flow * C)) == pytest.approx(float(a @ u + a @ v), abs=1e-12)
    assert float(np.sum(flow * C)) == pytest.approx(0.0, abs=1e-12)


def test_max_flow():
    a = np.array([0.5, 0.5])
    b = np.array([0.5, 0.5])
    val, F = max_flow_bipartite(a, b, np.array([[True, False], [True, False]]))
    assert val == pytest.approx(0.5)
    val, _ = max_flow_bipartite(a, b, np.ones((2, 2), bool))
    assert val == pytest.approx(1.0)


def test_barycentric_map_cases():
    a = U(0.0, 1.0)
    d = DiscreteMeasure.dirac([0.5])
    # conditioning on the Dirac: half-half split column -> mean 0.5
    bm = barycentric_map(solve_ot(a, d, S2).plan)
    assert bm.mapped[0, 0] == 0.5 and not bm.deterministic
    # transposed: each of {0,1} receives from the single atom 0.5
    bm = barycentric_map(solve_ot(d, a, S2).plan)
    assert bm.deterministic and bm.mapped[:, 0].tolist() == [0.5, 0.5]
    m = DiscreteMeasure([[0.1], [0.6]], [0.4, 0.6])
    bm = barycentric_map(solve_ot(m, m, S2).plan)
    assert bm.deterministic and bm.mapped[:, 0].tolist() == [0.1, 0.6]
    assert bm.excluded == ()


def test_plan_csv_round_trip(tmp_path):
    a = random_measure(3, 4, 1)
    b = random_measure(4, 4, 1)
    plan = solve_ot(a, b, S2).plan
    write_plan_csv(plan, tmp_path / "plan.csv", "a.json", "b.json")
    header, table = read_plan_csv(tmp_path / "plan.csv")
    assert header == {"source": "a.json", "target": "b.json", "shape": list(plan.table.shape)}
    assert np.array_equal(table, plan.table)
