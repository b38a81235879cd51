import math

import numpy as np
import pytest

from lbspectra.assembly import assemble
from lbspectra.eigensolve import (
    EigenSolveError,
    check_solution,
    eigendecompose,
    eigh_ascending,
    mode_mass,
    mode_masses,
    sample_mode,
)
from lbspectra.geometry import FlatTorus, Rectangle, default_resolution, enumerate_basis, quadrature
from lbspectra.region import ConvexPolygon, Full, HalfPlane


def test_small_examples():
    sol = eigendecompose(np.array([[2.0, 1.0], [1.0, 2.0]]))
    np.testing.assert_allclose(sol.eigenvalues, [1.0, 3.0], atol=1e-14)
    np.testing.assert_allclose(np.abs(sol.coefficients), 1 / math.sqrt(2), atol=1e-14)

    sol = eigendecompose(np.eye(3))
    np.testing.assert_allclose(sol.eigenvalues, [1, 1, 1], atol=1e-15)

    sol = eigendecompose(np.diag([3.0, 1.0, 2.0]), 2)
    assert sol.K == 2
    np.testing.assert_allclose(sol.eigenvalues, [1.0, 2.0])
    np.testing.assert_allclose(sol.coefficients, [[0, 0], [1, 0], [0, 1]], atol=1e-15)


def test_rejects_bad_input():
    with pytest.raises(EigenSolveError):
        eigendecompose(np.array([[1.0, 2.0], [2.0 + 1e-15, 1.0]]))
    with pytest.raises(EigenSolveError):
        eigendecompose(np.eye(3), 4)
    with pytest.raises(EigenSolveError):
        eigendecompose(np.eye(3), 0)
    with pytest.raises(EigenSolveError):
        eigendecompose(np.ones((2, 3)))
    bad = np.eye(2)
    bad[0, 0] = np.nan
    with pytest.raises(EigenSolveError):
        eigendecompose(bad)


def test_random_symmetric_orthonormal_and_residual(rng):
    for n in (5, 40, 150):
        A = rng.normal(size=(n, n))
        A = A + A.T
        sol = eigendecompose(A, n // 2)
        ortho, res = check_solution(A, sol)
        assert ortho < 1e-12 and res < 1e-13
        assert np.all(np.diff(sol.eigenvalues) >= 0)
        np.testing.assert_allclose(sol.eigenvalues, np.linalg.eigvalsh(A)[: n // 2], atol=1e-10)


def test_sign_convention(rng):
    A = rng.normal(size=(30, 30))
    A = A + A.T
    C = eigendecompose(A).coefficients
    for j in range(C.shape[1]):
        col = C[:, j]
        first = np.flatnonzero(np.abs(col) > 1e-10 * np.abs(col).max())[0]
        assert col[first] > 0
    # flipping the input's sign structure by a similarity keeps eigenvalues
    D = np.diag(np.where(rng.random(30) < 0.5, -1.0, 1.0))
    assert np.allclose(eigendecompose(D @ A @ D).eigenvalues, eigendecompose(A).eigenvalues)


def test_solution_is_read_only():
    sol = eigendecompose(np.eye(2))
    with pytest.raises(ValueError):
        sol.eigenvalues[0] = 5.0


def test_sample_mode_examples():
    g = Rectangle(2, 2)
    spec = enumerate_basis(g, 9)
    sol = eigendecompose(assemble(spec, Full(), 1e3, quadrature(g, (24, 24))), 3)
    # on the full host the first mode is the first basis function
    assert sample_mode(sol, 0, (1.0, 1.0))[0] == pytest.approx(1.0, abs=1e-14)
    pts = np.array([[0.3, 0.4], [1.7, 0.2]])
    np.testing.assert_allclose(sample_mode(sol, 0, pts), np.sin(np.pi * pts[:, 0] / 2) * np.sin(np.pi * pts[:, 1] / 2))
    with pytest.raises(IndexError):
        sample_mode(sol, 3, pts)
    with pytest.raises(EigenSolveError):
        sample_mode(eigendecompose(np.eye(2)), 0, pts)
    with pytest.raises(ValueError):
        sample_mode(sol, 0, (3.0, 1.0))


def test_reflection_symmetry_is_preserved():
    # triangle 0 < y < x < 1 is mapped to itself by (x, y) -> (1 - y, 1 - x)
    g = Rectangle(1, 1)
    region = ConvexPolygon(((0.0, 0.0), (1.0, 0.0), (1.0, 1.0)))
    spec = enumerate_basis(g, 400)
    grid = quadrature(g, default_resolution(spec))
    sol = eigendecompose(assemble(spec, region, 2e5, grid), 6)
    rng = np.random.default_rng(3)
    pts = rng.uniform(0.05, 0.95, (200, 2))
    pts = pts[pts[:, 1] < pts[:, 0]]
    img = np.column_stack([1 - pts[:, 1], 1 - pts[:, 0]])
    for j in range(6):
        if j and abs(sol.eigenvalues[j] - sol.eigenvalues[j - 1]) < 1e-6 * sol.eigenvalues[j]:
            continue
        a, b = sample_mode(sol, j, pts), sample_mode(sol, j, img)
        scale = np.abs(a).max()
        assert min(np.abs(a - b).max(), np.abs(a + b).max()) < 1e-8 * scale


def test_mode_mass_and_leakage(catalog):
    d = catalog["l_shape"]
    spec = enumerate_basis(d.geometry, 400)
    grid = quadrature(d.geometry, default_resolution(spec))
    masses = []
    for V0 in (1e3, 1e4, 1e5):
        sol = eigendecompose(assemble(spec, d.region, V0, grid), 5)
        inside, outside = mode_masses(sol, grid, d.region)
        # quadrature is exact for the product of two basis functions
        np.testing.assert_allclose(inside + outside, 1.0, atol=1e-10)
        # the potential energy bounds the outside mass: V0 * out <= lambda
        assert np.all(V0 * outside <= sol.eigenvalues * (1 + 1e-9))
        masses.append(outside[0])
        i0, o0 = mode_mass(sol, 0, grid, d.region)
        assert (i0, o0) == pytest.approx((inside[0], outside[0]))
    assert masses[0] > masses[1] > masses[2]


def test_spectral_shift():
    g = Rectangle(1, 1)
    spec = enumerate_basis(g, 64)
    grid = quadrature(g, default_resolution(spec))
    H = assemble(spec, HalfPlane((1.0, 1.0), 0.8), 1e4, grid)
    a = eigendecompose(H, 8).eigenvalues
    b = eigendecompose(H.entries + 7.5 * np.eye(64), 8).eigenvalues
    np.testing.assert_allclose(b - a, 7.5, atol=1e-9)


def test_degenerate_cluster_projector_is_well_defined():
    g = FlatTorus(((1, 0), (0, 1)))
    spec = enumerate_basis(g, 25)
    grid = quadrature(g, default_resolution(spec))
    H = assemble(spec, Full(), 1e4, grid)
    sol = eigendecompose(H, 9)
    np.testing.assert_allclose(sol.eigenvalues[1:5], 4 * math.pi**2, rtol=1e-12)
    # individual vectors inside the cluster are arbitrary, the projector is not
    C = sol.coefficients[:, 1:5]
    Pr = C @ C.T
    expected = np.zeros((25, 25))
    expected[1:5, 1:5] = np.eye(4)
    np.testing.assert_allclose(Pr, expected, atol=1e-12)


def test_eigh_ascending_matches_numpy(rng):
    A = rng.normal(size=(20, 20))
    A = (A + A.T) / 2
    vals, vecs = eigh_ascending(A, 20)
    np.testing.assert_allclose(vals, np.linalg.eigvalsh(A), atol=1e-12)
