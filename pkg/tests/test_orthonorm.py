import numpy as np
import pytest

from waveharm.gram import BoundaryNodes, gram_quadrature
from waveharm.orthonorm import (
    ConditioningError,
    basis_values,
    cartesian_to_spherical,
    decay_report,
    evaluate_basis,
    orthonormalize,
    orthonormalize_recursive,
)
from waveharm.quadrature import gauss_rule, integrate


def test_one_by_one():
    T = orthonormalize(np.array([[4.0 + 0j]]))
    assert T.C[0, 0] == 0.5 and T.lam[0] == 2.0


def test_diagonal():
    T = orthonormalize(np.diag([1.0, 4.0, 9.0]).astype(complex))
    np.testing.assert_allclose(np.diag(T.C), [1, 0.5, 1 / 3])
    assert np.all(T.C[np.tril_indices(3, -1)] == 0)


def test_two_by_two_example():
    G = np.array([[2.0, 1j], [-1j, 1.0]])
    for T in (orthonormalize(G), orthonormalize_recursive(G)):
        assert T.lam[0] == pytest.approx(np.sqrt(2))
        assert T.lam[1] == pytest.approx(np.sqrt(0.5))
        assert T.orthonormality_error(G) < 1e-15
        assert T.C[0, 1] == 0


def test_recursion_matches_cholesky(perturbed):
    G = gram_quadrature(perturbed, 1.2, (5, 5))
    a, b = orthonormalize(G), orthonormalize_recursive(G)
    assert np.abs(a.C - b.C).max() <= 1e-9 * np.abs(a.C).max()
    np.testing.assert_allclose(a.lam, b.lam, rtol=1e-10)
    np.testing.assert_array_equal(np.diag(a.C), 1.0 / a.lam)


def test_singular_matrix_raises():
    v = np.array([1.0, 2.0, 3.0])
    G = np.outer(v, v).astype(complex) + np.diag([1.0, 0, 0])
    G[2] = G[1] * 1.5
    G[:, 2] = G[:, 1] * 1.5
    G[2, 2] = 1.5**2 * G[1, 1]
    with pytest.raises(ConditioningError) as info:
        orthonormalize(G)
    assert info.value.rank == 2
    with pytest.raises(ConditioningError):
        orthonormalize_recursive(G)


def test_threshold_is_relative():
    G = np.diag([1.0, 1e-20]).astype(complex)
    T = orthonormalize(G)  # tiny but well separated from zero relative to itself
    assert T.lam[1] == pytest.approx(1e-10)
    G = np.array([[1.0, 1.0], [1.0, 1.0 + 1e-15]], dtype=complex)
    with pytest.raises(ConditioningError):
        orthonormalize(G)


def test_deterministic_and_nested(tilted):
    G = gram_quadrature(tilted, 1.0, (4, 4))
    a, b = orthonormalize(G), orthonormalize(G)
    np.testing.assert_array_equal(a.C, b.C)
    small = orthonormalize(gram_quadrature(tilted, 1.0, (2, 2)))
    np.testing.assert_allclose(a.truncated(small.count).C, small.C, rtol=1e-12, atol=1e-14)


def test_boundary_orthonormality_independent_rule(perturbed):
    T = orthonormalize(gram_quadrature(perturbed, 1.0, (3, 3)))
    rule = gauss_rule(60, 32)
    th, ph, w = rule.flat
    pts = perturbed.sample(th, ph).points
    V = basis_values(T, pts)
    E = (V * w) @ V.conj().T
    assert np.abs(E - np.eye(T.count)).max() < 1e-10


def test_evaluate_basis_forms(perturbed):
    T = orthonormalize(gram_quadrature(perturbed, 1.0, (3, 3)))
    p = np.array([0.3, -1.1, 2.0])
    all_vals = basis_values(T, p)
    assert evaluate_basis(T, (2, -1), p) == pytest.approx(all_vals[5, 0])
    on = evaluate_basis(T, (1, 0), np.array([0.7, 1.2]), surface=perturbed)
    xyz = perturbed.sample(np.array(0.7), np.array(1.2)).points
    assert on == pytest.approx(evaluate_basis(T, (1, 0), xyz))
    with pytest.raises(ValueError):
        evaluate_basis(T, (4, 0), p)
    with pytest.raises(ValueError):
        evaluate_basis(T, (1, 0), np.array([0.7, 1.2]))


def test_far_field_limit(sphere):
    # |r| e^{-ik|r|} hat Psi_n -> sum_k c_nk Y_k / k along a ray
    k = 1.0
    T = orthonormalize(gram_quadrature(sphere, k, (3, 3)))
    d = np.array([0.0, 0.6, 0.8])
    r = 1e5
    v = basis_values(T, r * d)[:, 0] * r * np.exp(-1j * k * r)
    _, th, ph = cartesian_to_spherical(d)
    from waveharm.oracle import ylm
    from waveharm.indexing import unrank

    Y = np.array([ylm(*unrank(n), th, ph) for n in range(T.count)])
    np.testing.assert_allclose(v, T.C @ Y / k, rtol=1e-4, atol=1e-6)


def test_origin_rejected():
    with pytest.raises(ValueError):
        cartesian_to_spherical(np.zeros(3))


def test_decay_report(sphere):
    T = orthonormalize(gram_quadrature(sphere, 1.0, (4, 4)))
    rep = decay_report(T)
    assert rep.min_lambda == pytest.approx(T.lam.min())
    assert rep.lambda_by_degree.shape == (5,)
    d = rep.to_dict()
    assert set(d) >= {"column_sup", "min_lambda", "C1", "C2"}
