"""Banded matrix storage, factorization, and the edit/factor state machine."""

import numpy as np
import pytest

from layerfem.banded import BandedMatrix, SingularSystemError


def random_banded(n, kl, ku, seed=0):
    rng = np.random.default_rng(seed)
    bm = BandedMatrix(n, kl, ku)
    dense = np.zeros((n, n))
    for i in range(n):
        for j in range(max(0, i - kl), min(n, i + ku + 1)):
            v = rng.standard_normal()
            if i == j:
                v += 4.0  # keep it comfortably nonsingular
            bm.add(i, j, v)
            dense[i, j] += v
    return bm, dense


def test_matches_dense_solver():
    bm, dense = random_banded(12, 2, 1)
    rng = np.random.default_rng(1)
    b = rng.standard_normal(12)
    assert np.allclose(bm.matvec(b), dense @ b, rtol=1e-13)
    x = bm.solve(b)
    assert np.allclose(x, np.linalg.solve(dense, b), rtol=1e-11)
    # repeated solves reuse the factorization
    b2 = rng.standard_normal(12)
    assert np.allclose(bm.solve(b2), np.linalg.solve(dense, b2), rtol=1e-11)


def test_add_accumulates_and_respects_band():
    bm = BandedMatrix(4, 1, 1)
    bm.add(1, 1, 2.0)
    bm.add(1, 1, 3.0)
    assert bm[1, 1] == 5.0
    assert bm[0, 3] == 0.0  # outside band reads as zero
    with pytest.raises(ValueError, match="band"):
        bm.add(0, 3, 1.0)


def test_row_and_column_edits():
    bm, dense = random_banded(6, 1, 2)
    bm.set_row_identity(2)
    dense[2, :] = 0.0
    dense[2, 2] = 1.0
    bm.zero_column(4)  # keeps a unit diagonal by default
    dense[:, 4] = 0.0
    dense[4, 4] = 1.0
    rng = np.random.default_rng(2)
    b = rng.standard_normal(6)
    assert np.allclose(bm.matvec(b), dense @ b, rtol=1e-13)


def test_residual_is_small_for_true_solution():
    bm, dense = random_banded(10, 2, 2, seed=3)
    x = np.linspace(1.0, 2.0, 10)
    b = dense @ x
    r = bm.residual(x, b)
    assert np.max(np.abs(r)) < 1e-13 * np.max(np.abs(b))


def test_factored_matrix_refuses_edits():
    bm, _ = random_banded(6, 1, 1, seed=4)
    bm.solve(np.ones(6))
    for call in (lambda: bm.add(0, 0, 1.0),
                 lambda: bm.set_row_identity(0),
                 lambda: bm.zero_column(0),
                 lambda: bm.matvec(np.ones(6)),
                 lambda: bm.residual(np.ones(6), np.ones(6)),
                 lambda: bm.copy()):
        with pytest.raises(RuntimeError, match="factored"):
            call()


def test_singular_system_reports_pivot_index():
    bm = BandedMatrix(3, 1, 1)
    for i in (0, 2):
        bm.add(i, i, 1.0)
    bm.add(0, 1, 1.0)  # column 1 is zero except a dependent entry
    with pytest.raises(SingularSystemError, match="singular") as err:
        bm.solve(np.ones(3))
    assert err.value.index in (1, 2)
    assert "pivot" in str(err.value)


def test_relative_pivot_threshold():
    # all pivot candidates sit 16 orders below the column scale
    bm = BandedMatrix(3, 1, 1)
    bm.add(0, 0, 1.0)
    bm.add(0, 1, 1.0)
    bm.add(1, 1, 1e-16)
    bm.add(2, 1, 1e-16)
    bm.add(1, 2, 1.0)
    bm.add(2, 2, 1.0)
    with pytest.raises(SingularSystemError) as err:
        bm.solve(np.ones(3))
    assert err.value.index == 1


def test_perturbed_copy():
    bm, dense = random_banded(8, 1, 1, seed=5)
    pert = bm.perturbed(1e-12, np.random.default_rng(0))
    same = bm.perturbed(1e-12, np.random.default_rng(0))
    for i in range(8):
        for j in range(max(0, i - 1), min(8, i + 2)):
            assert abs(pert[i, j] - bm[i, j]) <= 1.0001e-12 * abs(bm[i, j])
            assert pert[i, j] == same[i, j]  # deterministic for a fixed stream
    b = np.ones(8)
    assert np.allclose(pert.solve(b), bm.solve(b), rtol=1e-9)
