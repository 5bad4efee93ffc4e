import numpy as np
import pytest

from pecsynth import matrixkit as mk
from pecsynth.errors import NonFinite, NotObservable


def test_left_null_basis_forced_1d_kernel():
    K = mk.left_null_basis(np.array([[1.0], [0.0]]))
    assert K.shape == (2, 1)
    assert abs(abs(K[1, 0]) - 1.0) < 1e-12
    assert abs(K[0, 0]) < 1e-12


def test_left_null_basis_full_rank_empty():
    K = mk.left_null_basis(np.eye(2))
    assert K.shape == (2, 0)


def test_left_null_basis_quadtank_block(case, tp):
    # the case study measures the full state, so the unmeasured block has no
    # columns and the kernel is everything; count from the SVD-rank oracle
    M = tp.A12
    expected = case.plant.n_y - np.linalg.matrix_rank(M) if M.size else case.plant.n_y
    K = mk.left_null_basis(M)
    assert K.shape == (case.plant.n_y, expected)
    assert expected == 4


def test_left_null_basis_tall_selection():
    # 4x2 full-column-rank block leaves a 2-column kernel
    M = np.zeros((4, 2)); M[1, 0] = 1.0; M[3, 1] = 1.0
    K = mk.left_null_basis(M)
    assert K.shape == (4, 2)
    assert np.abs(K.T @ M).max() <= 1e-8
    assert np.abs(K.T @ K - np.eye(2)).max() <= 1e-10


def test_left_null_basis_orthonormal_property():
    rng = np.random.default_rng(7)
    for _ in range(50):
        m, n = rng.integers(1, 6, size=2)
        M = rng.standard_normal((m, n))
        if rng.random() < 0.3 and m > 1:
            M[rng.integers(m)] = M[0]  # force rank deficiency sometimes
        K = mk.left_null_basis(M)
        r = np.linalg.matrix_rank(M, tol=1e-9 * max(np.linalg.svd(M, compute_uv=False)[0], 1e-30))
        assert K.shape == (m, m - r)
        if K.size:
            assert np.abs(K.T @ M).max() <= 1e-8
            assert np.abs(K.T @ K - np.eye(K.shape[1])).max() <= 1e-10


def test_left_null_basis_nonfinite():
    with pytest.raises(NonFinite):
        mk.left_null_basis(np.array([[np.nan], [1.0]]))


def test_pinv_selection_column():
    M = np.array([[1.0], [0.0], [0.0]])
    assert np.allclose(mk.pinv(M), M.T, atol=1e-12)


def test_pinv_identity():
    assert np.allclose(mk.pinv(np.eye(3)), np.eye(3), atol=1e-12)


def test_pinv_selection_two_sensors():
    M = np.zeros((4, 2)); M[1, 0] = 1.0; M[3, 1] = 1.0
    assert np.abs(mk.pinv(M) @ M - np.eye(2)).max() <= 1e-12


def test_is_hurwitz_examples():
    assert mk.is_hurwitz(np.diag([-1.0, -2.0]), 0.0)
    assert not mk.is_hurwitz(np.array([[0.0, 1.0], [0.0, 0.0]]), 0.0)


def test_is_hurwitz_case_study_observer(case):
    A_obs = case.plant.A - case.L @ case.plant.C
    assert mk.is_hurwitz(A_obs, margin=1.9)
    assert not mk.is_hurwitz(A_obs, margin=2.05)


def test_is_hurwitz_charpoly_oracle():
    # independent oracle: roots of the characteristic polynomial; matrices
    # with an eigenvalue exactly on the axis have no numerically meaningful
    # strict sign and are excluded
    rng = np.random.default_rng(123)
    checked = 0
    for _ in range(1500):
        n = int(rng.integers(1, 4))
        M = rng.integers(-3, 4, size=(n, n)).astype(float)
        max_real = np.max(np.roots(np.poly(M)).real)
        if abs(max_real) < 1e-8:
            continue
        checked += 1
        assert mk.is_hurwitz(M, 0.0) == bool(max_real < 0)
    assert checked >= 1000


def test_place_observer_gain_double_integrator():
    A = np.array([[0.0, 1.0], [0.0, 0.0]])
    L = mk.place_observer_gain(A, np.eye(2), [-1.0, -2.0])
    eig = np.sort(np.linalg.eigvals(A - L).real)
    assert np.allclose(eig, [-2.0, -1.0], rtol=1e-6)


def test_place_observer_gain_quadtank(case):
    L = mk.place_observer_gain(case.plant.A, case.plant.C, [-2.0, -2.0, -2.1, -2.1])
    eig = np.sort(np.linalg.eigvals(case.plant.A - L @ case.plant.C).real)
    assert np.allclose(eig, [-2.1, -2.1, -2.0, -2.0], rtol=1e-6)


def test_place_observer_gain_not_observable():
    with pytest.raises(NotObservable):
        mk.place_observer_gain(np.array([[1.0]]), np.array([[0.0]]), [-1.0])


def test_place_observer_gain_wide_C():
    # non-square C goes through the dual placement path
    A = np.array([[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [-1.0, -2.0, -3.0]])
    C = np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
    poles = [-1.0, -2.0, -3.5]
    L = mk.place_observer_gain(A, C, poles)
    eig = np.sort(np.linalg.eigvals(A - L @ C).real)
    assert np.allclose(eig, np.sort(poles), rtol=1e-6)


def test_min_eig_sym():
    assert mk.min_eig_sym(np.eye(3)) == pytest.approx(1.0)
    assert mk.min_eig_sym(np.diag([3.0, -2.0])) == pytest.approx(-2.0)
