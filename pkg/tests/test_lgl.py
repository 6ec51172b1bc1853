import numpy as np
import pytest

from csbp.lgl import lgl_rule, legendre_vandermonde, lgl_moment_error


def test_two_point_rule_is_endpoints():
    rule = lgl_rule(2)
    assert np.allclose(rule.nodes, [-1.0, 1.0])
    assert np.allclose(rule.weights, [1.0, 1.0])


def test_three_point_rule_is_simpson():
    # Solving the moment equations for k = 0..3 by hand forces Simpson's rule.
    rule = lgl_rule(3)
    assert np.allclose(rule.nodes, [-1.0, 0.0, 1.0], atol=1e-15)
    assert np.allclose(rule.weights, [1 / 3, 4 / 3, 1 / 3], atol=1e-15)


def test_five_point_interior_nodes():
    # Interior nodes are the roots of P4', i.e. +-sqrt(3/7) and 0; the
    # bisection oracle below brackets them independently of the builder.
    rule = lgl_rule(5)
    assert np.allclose(rule.nodes[1:-1], [-np.sqrt(3 / 7), 0.0, np.sqrt(3 / 7)], atol=1e-14)

    from numpy.polynomial import legendre as npleg

    dc = npleg.legder(np.array([0.0, 0.0, 0.0, 0.0, 1.0]))
    for x in rule.nodes[1:-1]:
        if abs(x) < 1e-13:
            continue
        a, b = x - 1e-3, x + 1e-3
        fa = npleg.legval(a, dc)
        for _ in range(100):
            m = 0.5 * (a + b)
            if fa * npleg.legval(m, dc) <= 0:
                b = m
            else:
                a, fa = m, npleg.legval(m, dc)
        assert abs(0.5 * (a + b) - x) < 1e-12


@pytest.mark.parametrize("n", range(2, 12))
def test_rule_invariants(n):
    rule = lgl_rule(n)
    assert rule.nodes[0] == -1.0 and rule.nodes[-1] == 1.0
    assert np.all(np.diff(rule.nodes) > 0)
    assert np.all(rule.weights > 0)
    assert abs(rule.weights.sum() - 2.0) < 1e-14
    assert lgl_moment_error(rule, 2 * n - 3) < 1e-13


def test_rejects_small_n():
    with pytest.raises(ValueError):
        lgl_rule(1)


def test_vandermonde_orthonormal():
    rule = lgl_rule(6)
    V = legendre_vandermonde(4, rule.nodes, rule.weights)
    gram = V.L.T @ (rule.weights[:, None] * V.L)
    assert np.max(np.abs(gram - np.eye(5))) < 1e-12


def test_vandermonde_columns():
    rule = lgl_rule(5)
    V = legendre_vandermonde(1, rule.nodes, rule.weights)
    assert np.allclose(V.L[:, 0], 1 / np.sqrt(2))
    assert np.allclose(V.L[:, 1], np.sqrt(3 / 2) * rule.nodes)
    assert np.allclose(V.Lp[:, 1], np.sqrt(3 / 2))


def test_vandermonde_rejects_inexact_quadrature():
    rule = lgl_rule(3)  # exact to degree 3 only
    with pytest.raises(ValueError):
        legendre_vandermonde(3, rule.nodes, rule.weights)
