import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from convexity.errors import InputError, PreconditionError, UnsupportedError
from convexity.symcore import (
    OracleBudget,
    SymmetricMatrix,
    canonical_split,
    eigendecompose,
    jacobi_eigh,
    load_matrix_csv,
    nuclear_distance_to_psd_oracle,
    nuclear_norm,
    psd_indices,
    trace_bound_check,
)

SWAP = [[0.0, 1.0], [1.0, 0.0]]

entries = st.floats(-10, 10, allow_nan=False, allow_infinity=False)


@st.composite
def symmetric(draw, min_dim=1, max_dim=5):
    d = draw(st.integers(min_dim, max_dim))
    a = draw(arrays(np.float64, (d, d), elements=entries))
    return a + a.T


def _fro(m):
    return max(1.0, float(np.linalg.norm(m)))


# ---------------------------------------------------------------- types


def test_symmetric_matrix_symmetrizes():
    m = SymmetricMatrix([[1.0, 2.0], [4.0, 3.0]])
    assert m.entries[0, 1] == m.entries[1, 0] == 3.0
    with pytest.raises(ValueError):
        m.entries[0, 0] = 5.0


@pytest.mark.parametrize("bad", [[[1.0, np.nan], [0.0, 1.0]], [[1.0, 2.0]], [], [[np.inf]]])
def test_symmetric_matrix_rejects(bad):
    with pytest.raises(InputError):
        SymmetricMatrix(bad)


# ---------------------------------------------------------------- eigendecompose


def test_eigen_diagonal():
    e = eigendecompose(np.diag([3.0, -1.0]))
    assert e.eigenvalues.tolist() == [3.0, -1.0]


def test_eigen_swap_matches_characteristic_roots():
    # lambda^2 - 1 = 0
    roots = sorted(np.roots([1.0, 0.0, -1.0]).real, reverse=True)
    e = eigendecompose(SWAP)
    np.testing.assert_allclose(e.eigenvalues, roots, atol=1e-15)


def test_eigen_identity():
    e = eigendecompose(np.eye(3))
    assert e.eigenvalues.tolist() == [1.0, 1.0, 1.0]
    np.testing.assert_allclose(e.eigenvectors.T @ e.eigenvectors, np.eye(3), atol=1e-15)


@given(symmetric(max_dim=6))
def test_eigen_invariants(a):
    e = eigendecompose(a)
    q = e.eigenvectors
    assert np.max(np.abs(q.T @ q - np.eye(len(a)))) <= 1e-10
    assert np.max(np.abs(e.reconstruct() - a)) <= 1e-9 * _fro(a)
    assert np.all(np.diff(e.eigenvalues) <= 0)


@given(symmetric(max_dim=6))
def test_eigen_matches_lapack(a):
    e = eigendecompose(a)
    np.testing.assert_allclose(e.eigenvalues, np.linalg.eigvalsh(a)[::-1], atol=1e-9 * _fro(a))


def test_eigen_deterministic_and_batch_stable(rng):
    stack = rng.standard_normal((50, 4, 4))
    stack = stack + np.swapaxes(stack, 1, 2)
    lam_all, v_all, _ = jacobi_eigh(stack)
    for k in (0, 17, 49):
        lam_one, v_one, _ = jacobi_eigh(stack[k:k + 1])
        assert np.array_equal(lam_all[k], lam_one[0])
        assert np.array_equal(v_all[k], v_one[0])
    again = eigendecompose(stack[3])
    assert np.array_equal(again.eigenvalues, eigendecompose(stack[3]).eigenvalues)


def test_eigen_large_dim(rng):
    a = rng.standard_normal((40, 40))
    a = a + a.T
    e = eigendecompose(a)
    assert np.max(np.abs(e.reconstruct() - a)) <= 1e-9 * _fro(a)


# ---------------------------------------------------------------- canonical split


def test_split_diagonal():
    s = canonical_split(np.diag([3.0, -1.0]))
    np.testing.assert_array_equal(s.plus.entries, np.diag([3.0, 0.0]))
    np.testing.assert_array_equal(s.minus.entries, np.diag([0.0, 1.0]))


def test_split_swap_from_eigenvectors():
    u = np.array([1.0, 1.0]) / math.sqrt(2)
    w = np.array([1.0, -1.0]) / math.sqrt(2)
    s = canonical_split(SWAP)
    np.testing.assert_allclose(s.plus.entries, np.outer(u, u), atol=1e-15)
    np.testing.assert_allclose(s.minus.entries, np.outer(w, w), atol=1e-15)


def test_split_psd_has_zero_minus():
    s = canonical_split(np.diag([2.0, 1.0]))
    assert np.all(s.minus.entries == 0.0)


def test_split_zero_threshold():
    s = canonical_split(np.diag([1.0, -1e-9]), zero_threshold=1e-8)
    assert s.nuclear_minus == 0.0
    assert canonical_split(np.diag([1.0, -1e-9])).nuclear_minus == 1e-9


@given(symmetric(max_dim=5))
def test_split_invariants(a):
    s = canonical_split(a)
    tol = 1e-10 * _fro(a)
    assert np.linalg.eigvalsh(s.plus.entries)[0] >= -tol
    assert np.linalg.eigvalsh(s.minus.entries)[0] >= -tol
    assert np.max(np.abs(s.plus.entries - s.minus.entries - a)) <= 1e-9 * _fro(a)
    assert math.isclose(nuclear_norm(a), s.nuclear_plus + s.nuclear_minus, rel_tol=1e-10, abs_tol=1e-300)


# ---------------------------------------------------------------- norms and indices


@pytest.mark.parametrize("m, expected", [(np.diag([3.0, -1.0]), 4.0), (np.zeros((2, 2)), 0.0)])
def test_nuclear_norm_trivial(m, expected):
    assert nuclear_norm(m) == expected


def test_nuclear_norm_swap():
    roots = np.roots([1.0, 0.0, -1.0]).real
    assert nuclear_norm(SWAP) == pytest.approx(np.sum(np.abs(roots)), abs=1e-15)


def test_psd_indices_examples():
    r = psd_indices(np.diag([3.0, -1.0]))
    assert (r.lops, r.nlops, r.ps, r.degenerate) == (1.0, 0.25, 0.75, False)
    r = psd_indices(SWAP)
    assert r.lops == pytest.approx(1.0, abs=1e-15)
    assert r.nlops == pytest.approx(0.5, abs=1e-15)
    assert r.ps == pytest.approx(0.5, abs=1e-15)
    r = psd_indices(np.zeros((3, 3)))
    assert (r.lops, r.nlops, r.ps, r.degenerate) == (0.0, 0.0, 1.0, True)


def _random_orthogonal(rng, d):
    q, r = np.linalg.qr(rng.standard_normal((d, d)))
    return q * np.sign(np.diag(r))


@given(symmetric(min_dim=2, max_dim=5), st.integers(0, 2**32 - 1))
def test_rotation_invariance(a, seed):
    q = _random_orthogonal(np.random.default_rng(seed), len(a))
    r0 = psd_indices(a)
    r1 = psd_indices(q @ a @ q.T)
    scale = _fro(a)
    assert abs(r0.lops - r1.lops) <= 1e-9 * scale
    if not r0.degenerate and np.sum(np.abs(r0.eigenvalues)) > 1e-6:
        assert abs(r0.nlops - r1.nlops) <= 1e-9
        assert abs(r0.ps - r1.ps) <= 1e-9


@given(symmetric(max_dim=5), st.floats(1e-3, 1e3))
def test_positive_homogeneity(a, alpha):
    r0 = psd_indices(a)
    r1 = psd_indices(alpha * a)
    assert math.isclose(r1.lops, alpha * r0.lops, rel_tol=1e-10, abs_tol=1e-12 * alpha * _fro(a))
    if not r0.degenerate:
        assert abs(r1.nlops - r0.nlops) <= 1e-12


@given(symmetric(max_dim=5))
def test_negation_duality(a):
    r = psd_indices(a)
    n = psd_indices(-a)
    if not r.degenerate:
        assert abs(n.nlops - r.ps) <= 1e-12
        assert abs(n.ps - r.nlops) <= 1e-12
    assert r.nlops + r.ps == pytest.approx(1.0, abs=1e-12) or r.degenerate


# ---------------------------------------------------------------- oracle


def test_oracle_examples():
    assert nuclear_distance_to_psd_oracle(np.diag([3.0, -1.0])) == pytest.approx(1.0, abs=1e-12)
    assert nuclear_distance_to_psd_oracle(np.diag([2.0, 1.0])) == pytest.approx(0.0, abs=1e-12)
    assert nuclear_distance_to_psd_oracle(SWAP) == pytest.approx(1.0, abs=1e-12)
    assert nuclear_distance_to_psd_oracle(np.zeros((2, 2))) == 0.0


def test_oracle_swap_grid_finds_nothing_better():
    # independent exhaustive lattice over [[a,b],[b,c]], a,c >= 0, b^2 <= ac
    h = np.array(SWAP)
    best = np.inf
    for a in np.linspace(0, 2, 41):
        for c in np.linspace(0, 2, 41):
            for b in np.linspace(-1, 1, 41) * math.sqrt(a * c):
                best = min(best, np.sum(np.abs(np.linalg.eigvalsh(h - [[a, b], [b, c]]))))
    assert best >= 1.0 - 1e-12
    assert nuclear_distance_to_psd_oracle(h) == pytest.approx(1.0, abs=1e-12)


@settings(max_examples=30)
@given(symmetric(min_dim=1, max_dim=3))
def test_oracle_equivalence(a):
    lops = canonical_split(a).nuclear_minus
    dist = nuclear_distance_to_psd_oracle(a, OracleBudget(perturbations=50, random_samples=500))
    assert lops - 1e-3 * _fro(a) <= dist <= lops + 1e-12 * _fro(a)


def test_oracle_rejects_large():
    with pytest.raises(UnsupportedError):
        nuclear_distance_to_psd_oracle(np.eye(4))


# ---------------------------------------------------------------- trace bound


def test_trace_bound_examples():
    assert trace_bound_check(np.diag([2.0, 0.0]), np.diag([0.0, 1.0]))
    assert trace_bound_check(np.eye(2), np.eye(2))
    h1 = np.array([[2.0, 1.0], [1.0, 2.0]])
    h2 = np.array([[1.0, 0.0], [0.0, 3.0]])
    # H = [[1,1],[1,-1]]: lambda^2 - 2 = 0
    lam = np.roots([1.0, 0.0, -2.0]).real
    assert np.sum(np.maximum(lam, 0)) == pytest.approx(math.sqrt(2))
    assert trace_bound_check(h1, h2)


def test_trace_bound_rejects_non_psd():
    with pytest.raises(PreconditionError):
        trace_bound_check(np.diag([1.0, -1.0]), np.eye(2))


@given(st.integers(2, 4), st.integers(0, 2**32 - 1))
def test_trace_bound_property(d, seed):
    r = np.random.default_rng(seed)
    a = r.standard_normal((d, d))
    b = r.standard_normal((d, d))
    assert trace_bound_check(a.T @ a, b.T @ b)


# ---------------------------------------------------------------- csv


def test_load_matrix_csv(tmp_path, caplog):
    p = tmp_path / "m.csv"
    p.write_text("3,0\n0,-1\n")
    assert load_matrix_csv(p) == SymmetricMatrix(np.diag([3.0, -1.0]))
    p.write_text("1,2\n2.5,1\n")
    with caplog.at_level("WARNING"):
        m = load_matrix_csv(p)
    assert m.entries[0, 1] == 2.25
    assert "asymmetric" in caplog.text
    p.write_text("1,2,3\n4,5,6\n")
    with pytest.raises(InputError):
        load_matrix_csv(p)


@pytest.mark.parametrize("scale", [1e-13, 1e-200, 1e200])
def test_tiny_and_huge_matrices(scale):
    r = psd_indices(scale * np.array(SWAP))
    assert r.nlops == pytest.approx(0.5, abs=1e-15) and not r.degenerate
    e = eigendecompose(scale * np.diag([3.0, -1.0]))
    assert e.eigenvalues.tolist() == [3.0 * scale, -1.0 * scale]


@given(symmetric(max_dim=4), st.integers(-60, 60))
def test_power_of_two_scaling_is_exact(a, k):
    # keep every entry normal after scaling
    assume(np.all((a == 0) | (np.abs(a) > 1e-280)))
    lam0, _, _ = jacobi_eigh(a[None])
    lam1, _, _ = jacobi_eigh(np.ldexp(a, k)[None])
    assert np.array_equal(np.ldexp(lam0, k), lam1)
