import itertools
from math import gamma

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from symmaxent.errors import DomainError, NonHermitian, UnsupportedOrder
from symmaxent.numerics import (check_hermitian, eig_hermitian, fix_phases, hermitize, lp_feasible,
                                lp_minimize, matrix_function, nullspace, project_density,
                                project_simplex, random_density, random_hermitian, random_probability,
                                random_unitary, sphere_quadrature)


def test_check_hermitian_rejects_asymmetric():
    with pytest.raises(NonHermitian):
        check_hermitian(np.array([[0, 1], [0, 0]]))
    m = np.array([[1, 1j], [-1j, 2]])
    assert np.array_equal(check_hermitian(m), m)


def test_eig_reconstructs():
    rng = np.random.default_rng(0)
    for d in (1, 2, 5, 9):
        h = random_hermitian(d, rng)
        dec = eig_hermitian(h)
        assert np.all(np.diff(dec.eigenvalues) >= 0)
        assert np.max(np.abs(dec.reconstruct() - h)) < 1e-12


def test_fix_phases_makes_leading_entry_positive():
    v = np.array([[0.0, 1j], [-1.0, 0.0]])
    f = fix_phases(v)
    assert f[1, 0] > 0 and np.isclose(f[0, 1], 1.0)


def test_matrix_function_exp_log_roundtrip():
    rng = np.random.default_rng(1)
    rho = random_density(4, rng)
    assert np.max(np.abs(matrix_function(matrix_function(rho, "log"), "exp") - rho)) < 1e-10
    s = matrix_function(rho, "sqrt")
    assert np.max(np.abs(s @ s - rho)) < 1e-12


def test_matrix_function_log_domain():
    with pytest.raises(DomainError):
        matrix_function(np.diag([1.0, 0.0]), "log")
    out = matrix_function(np.diag([1.0, 0.0]), "log", extended=True)
    assert np.allclose(out, 0.0)


def test_matrix_function_callable():
    h = np.diag([1.0, 2.0])
    assert np.allclose(matrix_function(h, lambda w: w ** 2), np.diag([1.0, 4.0]))


def test_nullspace():
    a = np.array([[1.0, 1.0, 0.0], [0.0, 0.0, 0.0]])
    ns = nullspace(a)
    assert ns.shape == (3, 2)
    assert np.allclose(a @ ns, 0.0)
    assert np.allclose(ns.T @ ns, np.eye(2))


def _simplex_projection_bruteforce(v):
    # KKT: x = max(v - tau, 0) with tau chosen so x sums to 1; scan supports
    best = None
    n = v.size
    for k in range(1, n + 1):
        for supp in itertools.combinations(range(n), k):
            supp = list(supp)
            tau = (v[supp].sum() - 1.0) / k
            x = np.zeros(n)
            x[supp] = v[supp] - tau
            if np.all(x >= -1e-12):
                d = np.sum((x - v) ** 2)
                if best is None or d < best[0]:
                    best = (d, x)
    return best[1]


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(-3, 3), min_size=1, max_size=6))
def test_project_simplex_matches_bruteforce(vals):
    v = np.array(vals)
    x = project_simplex(v)
    assert abs(x.sum() - 1) < 1e-12 and x.min() >= 0
    assert np.max(np.abs(x - _simplex_projection_bruteforce(v))) < 1e-9


def test_project_density_is_closest_spectrahedron_point():
    rng = np.random.default_rng(2)
    for _ in range(20):
        h = random_hermitian(4, rng)
        p = project_density(h)
        w = np.linalg.eigvalsh(p)
        assert w.min() >= -1e-12 and abs(np.trace(p).real - 1) < 1e-12
        dist = np.linalg.norm(p - h)
        for _ in range(20):
            other = random_density(4, rng)
            assert dist <= np.linalg.norm(other - h) + 1e-12


def _vertices_feasible(a_eq, b_eq, n):
    """Brute-force: enumerate basic solutions of A x = b, x >= 0."""
    m = a_eq.shape[0]
    for cols in itertools.combinations(range(n), m):
        sub = a_eq[:, cols]
        if abs(np.linalg.det(sub)) < 1e-12:
            continue
        xb = np.linalg.solve(sub, b_eq)
        if np.all(xb >= -1e-9):
            return True
    return False


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 10_000))
def test_lp_feasible_matches_vertex_enumeration(seed):
    rng = np.random.default_rng(seed)
    m, n = 2, 4
    a = rng.integers(-3, 4, size=(m, n)).astype(float)
    b = rng.integers(-3, 4, size=m).astype(float)
    if np.linalg.matrix_rank(a) < m:
        return
    res = lp_feasible(a, b, n=n)
    assert res.feasible == _vertices_feasible(a, b, n)
    if res.feasible:
        assert np.max(np.abs(a @ res.point - b)) < 1e-9 and res.point.min() >= -1e-12
    else:
        cert = res.certificate
        y = cert["y"]
        assert np.all(cert["matrix"].T @ y <= 1e-9)
        assert cert["rhs"] @ y > 1e-9


def test_lp_with_inequalities_and_bounds():
    # x + y <= 1, x >= 0.8, y >= 0.3 is empty
    res = lp_feasible(None, None, np.array([[1.0, 1.0]]), np.array([1.0]), [(0.8, None), (0.3, None)], n=2)
    assert not res.feasible
    res = lp_feasible(None, None, np.array([[1.0, 1.0]]), np.array([1.0]), [(0.5, None), (0.3, None)], n=2)
    assert res.feasible and res.point.sum() <= 1 + 1e-12


def test_lp_minimize():
    # min -x - y s.t. x + 2y <= 4, 3x + y <= 6
    res = lp_minimize([-1.0, -1.0], None, None, np.array([[1.0, 2.0], [3.0, 1.0]]), np.array([4.0, 6.0]))
    assert res.status == "optimal"
    assert np.allclose(res.point, [1.6, 1.2]) and np.isclose(res.objective, -2.8)
    unb = lp_minimize([-1.0, 0.0])
    assert unb.status == "unbounded"
    inf = lp_minimize([1.0], np.array([[1.0]]), np.array([-1.0]))
    assert inf.status == "infeasible"


def test_lp_redundant_equalities():
    a = np.array([[1.0, 1.0, 1.0], [2.0, 2.0, 2.0], [1.0, 0.0, 0.0]])
    b = np.array([1.0, 2.0, 0.25])
    res = lp_feasible(a, b, n=3)
    assert res.feasible and np.allclose(a @ res.point, b)


@pytest.mark.parametrize("order", [1, 2, 5, 8])
def test_sphere_quadrature_integrates_monomials(order):
    dirs, w = sphere_quadrature(order)
    assert np.isclose(w.sum(), 4 * np.pi)
    assert np.allclose(np.linalg.norm(dirs, axis=1), 1.0)
    # exact integral of x^a y^b z^c over the sphere
    for a, b, c in itertools.product(range(order + 1), repeat=3):
        if a + b + c > order:
            continue
        if a % 2 or b % 2 or c % 2:
            exact = 0.0
        else:
            be = [(k + 1) / 2 for k in (a, b, c)]
            exact = 2 * gamma(be[0]) * gamma(be[1]) * gamma(be[2]) / gamma(sum(be))
        approx = np.sum(w * dirs[:, 0] ** a * dirs[:, 1] ** b * dirs[:, 2] ** c)
        assert abs(approx - exact) < 1e-12


def test_sphere_quadrature_order_limits():
    with pytest.raises(UnsupportedOrder):
        sphere_quadrature(0)
    with pytest.raises(UnsupportedOrder):
        sphere_quadrature(10_000)


def test_random_generators_valid():
    rng = np.random.default_rng(3)
    u = random_unitary(5, rng)
    assert np.allclose(u.conj().T @ u, np.eye(5))
    rho = random_density(5, rng, rank=2)
    w = np.linalg.eigvalsh(rho)
    assert np.isclose(w.sum(), 1) and w.min() > -1e-14 and np.sum(w > 1e-12) == 2
    p = random_probability(7, rng)
    assert np.isclose(p.sum(), 1) and p.min() >= 0
    h = random_hermitian(3, rng)
    assert np.allclose(h, hermitize(h))
