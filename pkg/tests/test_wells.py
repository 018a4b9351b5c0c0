import numpy as np
import pytest

from mslab import wells
from mslab.errors import DimensionMismatchError, DuplicateWellError, UnsupportedFamilyError


def test_lorent_k3_exact_matrices():
    W = wells.make_well_set("lorent_k3", 2)
    assert np.array_equal(W.wells[0], np.zeros((2, 2)))
    assert np.array_equal(W.wells[1], np.diag([1.0, 0.0]))
    assert np.array_equal(W.wells[2], np.diag([0.5, 1.0]))


def test_two_well_default():
    W = wells.make_well_set("two_well", 2)
    assert np.array_equal(W.wells[0], np.zeros((2, 2)))
    assert np.array_equal(W.wells[1], np.outer([1, 0], [1, 0]))
    ro = wells.rank_one_direction(W.wells[1], W.wells[0])
    assert ro is not None


def test_diagonal_kn_d3():
    W = wells.make_well_set("diagonal_kn", 3, n_wells=4)
    expect = [
        np.zeros(3),
        [1.0, 0.0, 0.0],
        [0.5, 1.0, 0.0],
        [0.5, 0.5, 1.0],
    ]
    for A, diag in zip(W.wells, expect):
        assert np.array_equal(A, np.diag(diag))


def test_family_dimension_mismatch():
    with pytest.raises(DimensionMismatchError):
        wells.make_well_set("lorent_k3", 3)
    with pytest.raises(DimensionMismatchError):
        wells.make_well_set("diagonal_kn", 2, n_wells=4)
    with pytest.raises(DuplicateWellError):
        wells.make_well_set("custom", 2, matrices=[np.eye(2), np.eye(2)])


def test_rank_one_k3_pair():
    W = wells.make_well_set("lorent_k3", 2)
    a, n = wells.rank_one_direction(W.wells[1], W.wells[0])
    assert np.allclose(a, [1.0, 0.0])
    assert np.allclose(n, [1.0, 0.0])


def test_rank_one_zero_and_high_rank():
    A = np.diag([1.0, 2.0])
    assert wells.rank_one_direction(A, A) is None
    assert wells.rank_one_direction(np.eye(2), np.zeros((2, 2))) is None


def test_tartar_all_pairs_incompatible():
    T = wells.make_well_set("tartar_t4", 2)
    for i in range(4):
        for j in range(i + 1, 4):
            assert wells.rank_one_direction(T.wells[i], T.wells[j]) is None


def test_rank_one_sign_convention():
    a = np.array([-2.0, 1.0])
    n = np.array([-0.6, 0.8])
    M = np.outer(a, n)
    av, nv = wells.rank_one_direction(M, np.zeros((2, 2)))
    assert nv[np.nonzero(np.abs(nv) > 1e-14)[0][0]] > 0
    assert np.allclose(np.outer(av, nv), M)


def test_cross_product_examples():
    assert np.allclose(wells.cross_product([1, 0], np.eye(2)), [0.0, 1.0])
    W = wells.make_well_set("lorent_k3", 2)
    assert np.allclose(wells.cross_product([1, 0], W.wells[1] - W.wells[0]), 0.0)


def test_cross_product_random_formula_oracle():
    rng = np.random.default_rng(0)
    for _ in range(25):
        v = rng.normal(size=2)
        M = rng.normal(size=(2, 2))
        got = wells.cross_product(v, M)
        expect = [v[0] * M[j, 1] - v[1] * M[j, 0] for j in range(2)]
        assert np.allclose(got, expect)


def test_classify_k3_examples():
    W = wells.make_well_set("lorent_k3", 2)
    bd = wells.classify_boundary_datum(W, np.diag([0.3, 0.0]))
    assert bd.laminate_order == 1 and abs(bd.alpha - 0.3) < 1e-12
    bd = wells.classify_boundary_datum(W, np.diag([0.5, 0.75]))
    assert bd.laminate_order == 2 and abs(bd.alpha - 0.75) < 1e-12
    bd = wells.classify_boundary_datum(W, np.zeros((2, 2)))
    assert bd.laminate_order == 0
    assert wells.classify_boundary_datum(W, np.diag([2.0, 0.0])).laminate_order is None


def test_classify_roundtrip_parametrization():
    # classification o parametrization = ell on a 99-point alpha grid
    for d, n_wells in ((2, 3), (3, 4)):
        W = wells.make_well_set("diagonal_kn", d, n_wells=n_wells)
        for ell in range(1, n_wells):
            for alpha in np.linspace(0.01, 0.99, 99):
                F = wells.parametrize_order(W, ell, alpha)
                bd = wells.classify_boundary_datum(W, F)
                assert bd.laminate_order == ell
                assert abs(bd.alpha - alpha) < 1e-9


def test_classify_tartar_qc_hull():
    T = wells.make_well_set("tartar_t4", 2)
    assert wells.classify_boundary_datum(T, np.diag([0.0, 0.0])).in_qc_hull
    assert wells.classify_boundary_datum(T, np.diag([2.0, -1.0])).in_qc_hull  # arm
    assert not wells.classify_boundary_datum(T, np.diag([2.0, 0.5])).in_qc_hull
    assert wells.classify_boundary_datum(T, T.wells[2]).laminate_order == 0


def test_classify_custom_unsupported():
    W = wells.make_well_set("custom", 2, matrices=[np.zeros((2, 2)), np.eye(2)])
    with pytest.raises(UnsupportedFamilyError):
        wells.classify_boundary_datum(W, np.eye(2))


def test_kn_connectivity_fig2():
    # A1-A2 connected with normal e1; A_j's inner connection normal is e_{j-1}
    for d in (2, 3):
        for n_wells in range(2, d + 2):
            W = wells.make_well_set("diagonal_kn", d, n_wells=n_wells)
            a, n = wells.rank_one_direction(W.wells[1], W.wells[0])
            assert np.allclose(n, np.eye(d)[0])
            for j in range(3, n_wells + 1):
                # A_j connects to the midpoint structure of the previous wells
                mid = W.wells[j - 2].copy()
                mid[j - 2, j - 2] = 0.5  # auxiliary midpoint on the chain
                mid[j - 2, j - 2] = 0.5
                aux = np.diag(
                    [0.5] * (j - 2) + [0.0] * (d - j + 2)
                )
                ro = wells.rank_one_direction(W.wells[j - 1], aux)
                assert ro is not None
                assert np.allclose(ro[1], np.eye(d)[j - 2])


def test_wellset_diameter():
    W = wells.make_well_set("lorent_k3", 2)
    assert abs(W.diameter() - np.sqrt(1.25)) < 1e-12
