import math

import numpy as np
import pytest
from conftest import enumerate_vertices

from shadowproj.exceptions import InputError, SizeError, SolverError
from shadowproj.instances import random_marginals, random_product, worked_instance
from shadowproj.measures import (
    DiscreteMeasure,
    MarginalVector,
    ProductMeasure,
    marginal,
    marginals,
)
from shadowproj.mot_oracle import LinearProgram, build_projection_lp, project_oracle, solve_lp
from shadowproj.shadow import total_variation


def U(*xs):
    return DiscreteMeasure([[x] for x in xs])


def test_lp_counting():
    rho = ProductMeasure(DiscreteMeasure([[0.0, 0.0], [1.0, 1.0]]), (1, 1))
    mu = MarginalVector([U(0.0, 1.0), DiscreteMeasure.dirac([0.5])])
    lp = build_projection_lp(rho, mu, 2)
    assert lp.n_vars == 4
    assert lp.n_constraints == 2 + 1 + 2 - 1


def test_worked_instance_value():
    rho, mu = worked_instance()
    lp = build_projection_lp(rho, mu, 2)
    sol = solve_lp(lp)
    assert sol.value == pytest.approx(0.25, abs=1e-15)
    assert enumerate_vertices(lp.A, lp.b, lp.c) == pytest.approx(0.25, abs=1e-15)
    cert = project_oracle(rho, mu, 2)
    assert cert.distance == pytest.approx(0.5, abs=1e-15)
    for i in range(2):
        assert total_variation(marginal(cert.pi_star, i), mu[i]) <= 1e-12


def test_identity_zero():
    rho = ProductMeasure(DiscreteMeasure([[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]],
                                         [0.1, 0.2, 0.3, 0.4]), (1, 1))
    assert project_oracle(rho, marginals(rho), 2).value == pytest.approx(0.0, abs=1e-15)
    assert project_oracle(rho, marginals(rho), math.inf).value == 0.0


def test_dirac_marginals_closed_form():
    rho = random_product(17, 4, (1, 1))
    a = (0.25, 0.75)
    mu = MarginalVector([DiscreteMeasure.dirac([a[0]]), DiscreteMeasure.dirac([a[1]])])
    p = 1.5
    ref = sum(
        math.fsum(w * abs(y[i] - a[i]) ** p for y, w in zip(rho.atoms, rho.weights))
        for i in range(2)
    ) ** (1 / p)
    assert project_oracle(rho, mu, p).distance == pytest.approx(ref, abs=1e-13)


@pytest.mark.parametrize("seed", range(12))
def test_small_instances_match_basis_enumeration(seed):
    rho = random_product(seed, 3, (1, 1), levels=(0, 3)[seed % 2])
    mu = MarginalVector(random_marginals(seed + 7, 2, (1, 1), levels=(0, 3)[seed % 2]))
    lp = build_projection_lp(rho, mu, 2)
    if lp.n_vars > 14:
        pytest.skip("basis enumeration too large")
    assert solve_lp(lp).value == pytest.approx(enumerate_vertices(lp.A, lp.b, lp.c), abs=1e-12)


@pytest.mark.parametrize("seed", range(10))
def test_three_by_three_by_three_against_scipy(seed):
    linprog = pytest.importorskip("scipy.optimize").linprog
    g = np.random.default_rng(seed)
    w = g.random(3) + 0.1
    rho = ProductMeasure(DiscreteMeasure(g.random((3, 2)), w / w.sum()), (1, 1))
    mu = MarginalVector([DiscreteMeasure(g.random((3, 1))), DiscreteMeasure(g.random((3, 1)))])
    lp = build_projection_lp(rho, mu, 2)
    ref = linprog(lp.c, A_eq=lp.A, b_eq=lp.b, bounds=(0, None), method="highs")
    assert solve_lp(lp).value == pytest.approx(ref.fun, abs=1e-10)


def test_variable_cap():
    rho = random_product(1, 4, (1, 1))
    mu = MarginalVector([U(0.0, 0.5, 1.0), U(0.0, 0.5, 1.0)])
    with pytest.raises(SizeError):
        build_projection_lp(rho, mu, 2, variable_cap=5)
    with pytest.raises(InputError):
        build_projection_lp(rho, mu, math.inf)


def test_infeasible_and_unbounded_lp():
    lp = LinearProgram(c=np.zeros(1), A=np.array([[1.0], [1.0]]), b=np.array([1.0, 2.0]))
    with pytest.raises(SolverError):
        solve_lp(lp)
    assert solve_lp(lp, phase_one_only=True) is None
    lp = LinearProgram(c=np.array([-1.0, 0.0]), A=np.array([[1.0, -1.0]]), b=np.array([0.0]))
    with pytest.raises(SolverError):
        solve_lp(lp)


def test_redundant_rows_removed():
    A = np.array([[1.0, 1.0, 0.0], [2.0, 2.0, 0.0], [0.0, 1.0, 1.0]])
    b = np.array([1.0, 2.0, 1.0])
    sol = solve_lp(LinearProgram(c=np.array([1.0, 2.0, 0.5]), A=A, b=b))
    assert sol.value == pytest.approx(1.5)
    assert len(sol.rows) == 2
