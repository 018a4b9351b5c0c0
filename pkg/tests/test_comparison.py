import numpy as np
import pytest

from mslab import comparison, energies, fields, wells
from mslab.comparison import mollified_diffuse_analytic, mollify_preserving_data, threshold_to_sharp
from mslab.constructions import BranchingParams, branching_assembly, simple_laminate
from mslab.constructions.core import paper_generations
from mslab.energies import EnergySpec, Kind
from mslab.errors import InvalidParameterError
from mslab.fields import PhaseField

E11 = np.array([[1.0, 0.0], [0.0, 0.0]])


def two_well():
    return wells.make_well_set("two_well", 2)


def ramp_setup(n=256):
    """U(x) = x1 E11 on the square, K = {0, E11}, natural sharp indicator."""
    W = two_well()
    x = (np.arange(n) + 0.5) / n
    U = x[:, None, None, None] * E11[None, None] * np.ones((1, n, 1, 1))
    chi = PhaseField(W, (x[:, None] > 0.5).astype(int) * np.ones((1, n), dtype=int))
    return W, U, chi


def test_threshold_pointwise_sharp_input():
    W, U, chi = ramp_setup(128)
    # U identical to a sharp indicator: chi_tilde may be taken equal to it
    Us = chi.values().astype(float)
    ct, cert = threshold_to_sharp(Us, chi, [1, 0], eps=0.01, r=E11)
    assert np.array_equal(ct.cells, chi.cells)
    assert cert["elastic_tilde"] == 0.0


def test_threshold_ramp_exact_oracle():
    # 1d ramp, p = q = 2, nu = e1: exact integrals against the chosen level
    n = 512
    W, U, chi = ramp_setup(n)
    eps = 0.01
    ct, cert = threshold_to_sharp(U, chi, [1, 0], eps=eps, r=E11, p=2.0, q=2.0)
    # chi_tilde is a single step at some level t in (1/4, 3/4)
    col = ct.cells[:, 0]
    switches = np.nonzero(np.diff(col))[0]
    assert len(switches) == 1
    t_level = (switches[0] + 1) / n
    # oracle: int |U - chi|^2 with chi the step at 1/2
    x = (np.arange(n) + 0.5) / n
    elastic_exact = float(np.sum(np.minimum(x, 1 - x) ** 2) / n)
    assert cert["elastic_chi"] == pytest.approx(elastic_exact, rel=1e-3)
    # diffuse term: int |d1 (U . r)|^2 = 1
    assert cert["diffuse_term"] == pytest.approx(eps**2 * 1.0, rel=5e-3)
    # surface of the thresholded step: single jump of the projected gap
    assert cert["tv_fr"] == pytest.approx(1.0, rel=1e-9)
    # the Thm-style inequalities hold with order-one constants
    assert cert["ratio_surface"] <= 1.0
    elastic_tilde_exact = float(np.sum((x - (x > t_level)) ** 2) / n)
    assert cert["elastic_tilde"] == pytest.approx(elastic_tilde_exact, rel=1e-3)


def test_threshold_values_in_wells_and_monotone_steps():
    rng = np.random.default_rng(0)
    W = two_well()
    n = 64
    x = (np.arange(n) + 0.5) / n
    U = (x[:, None, None, None] + 0.15 * rng.normal(size=(n, n, 1, 1))) * E11[None, None]
    chi = PhaseField(W, (U[..., 0, 0] > 0.5).astype(int))
    ct, cert = threshold_to_sharp(U, chi, [1, 0], eps=0.01, r=E11)
    assert set(np.unique(ct.cells)) <= {0, 1}
    # level counts per line never exceed the crossing counts of U . r
    Ur = U[..., 0, 0]
    lv = cert["plan"].levels
    for j in range(n):
        line = Ur[:, j]
        block = min(j // comparison.BLOCK_CELLS, lv.shape[0] - 1)
        crossings = np.sum(np.diff(line > lv[block, 0]) != 0)
        steps = np.sum(np.diff(ct.cells[:, j]) != 0)
        assert steps <= max(crossings, 1)


def test_threshold_pointwise_domination():
    rng = np.random.default_rng(1)
    W = two_well()
    n = 64
    ratios = []
    for _ in range(10):
        U = rng.normal(scale=0.6, size=(n, n, 2, 2)) + 0.5 * E11[None, None]
        chi = PhaseField(W, rng.integers(0, 2, (n, n)))
        ct, cert = threshold_to_sharp(U, chi, [1, 0], eps=0.01)
        mis_t = np.sqrt(np.sum((U - ct.values()) ** 2, axis=(-2, -1)))
        mis = np.sqrt(np.sum((U - chi.values()) ** 2, axis=(-2, -1)))
        ratios.append(float(np.max(mis_t / np.maximum(mis, 1e-12))))
    cal = ratios[0]
    assert all(r <= 4.0 * cal for r in ratios)


def test_threshold_certificates_randomized_margin():
    rng = np.random.default_rng(2)
    W = two_well()
    n = 64
    s_ratios, e_ratios = [], []
    for k in range(20):
        x = (np.arange(n) + 0.5) / n
        phase = rng.uniform(0, 1)
        U = (0.5 + 0.5 * np.sin(2 * np.pi * (rng.integers(1, 4) * x[:, None] + phase))
             )[..., None, None] * E11[None, None] + 0.1 * rng.normal(size=(n, n, 2, 2))
        chi = PhaseField(W, (U[..., 0, 0] > 0.5).astype(int))
        ct, cert = threshold_to_sharp(U, chi, [1, 0], eps=0.02)
        s_ratios.append(cert["ratio_surface"])
        e_ratios.append(cert["ratio_elastic"])
    assert all(r <= 4.0 * max(s_ratios[0], 1e-6) for r in s_ratios)
    assert all(r <= 4.0 * max(e_ratios[0], 1e-2) for r in e_ratios)


def test_threshold_q1_coarea_path():
    # q = 1 uses the total variation of U . r instead of the gradient power
    n = 256
    W, U, chi = ramp_setup(n)
    eps = 0.05
    ct, cert = threshold_to_sharp(U, chi, [1, 0], eps=eps, r=E11, p=2.0, q=1.0)
    # TV of the ramp along e1 is exactly 1, so the diffuse term is eps * 1
    assert cert["diffuse_term"] == pytest.approx(eps, rel=5e-3)
    assert cert["ratio_surface"] <= 1.0


def test_mollify_zero_and_support():
    out, rep = mollify_preserving_data(np.zeros((64, 64)), 0.05)
    assert np.all(out == 0.0)
    rng = np.random.default_rng(3)
    blob = np.zeros((128, 128, 2, 2))
    blob[30:100, 40:90] = rng.normal(size=(70, 50, 2, 2))
    out, rep = mollify_preserving_data(blob, 0.06, nu=[0, 1])
    assert np.abs(out[:4]).max() == 0.0 and np.abs(out[-4:]).max() == 0.0
    assert np.abs(out[:, :4]).max() == 0.0 and np.abs(out[:, -4:]).max() == 0.0
    assert np.abs(out).max() <= np.abs(blob).max() + 1e-12


def test_mollify_support_of_competitor():
    W = two_well()
    F = 0.5 * W.wells[1]
    comp = simple_laminate(W, F, 8)
    n = 256
    U = comp.deformation_field(n).cell_gradient() - F
    out, rep = mollify_preserving_data(U, 0.05, nu=[1, 0])
    assert np.abs(out[:2]).max() == 0.0 and np.abs(out[-2:]).max() == 0.0
    with pytest.raises(InvalidParameterError):
        mollify_preserving_data(U, 0.3)


def test_mollified_diffuse_upper_bound_calibrated():
    # diffuse energy of the mollified competitor <= C (sharp + eps TV terms)
    W = two_well()
    F = 0.5 * W.wells[1] + 0.5 * W.wells[0]
    ratios = []
    for N in (3, 4, 6, 8, 10):
        params = BranchingParams(N, 0.3, paper_generations(1, 1, N), alpha=0.5)
        comp = branching_assembly(W, F, params, [1, 0], 1e-3)
        eps = 1e-3
        rep = mollified_diffuse_analytic(comp, [1, 0], 2.0, eps)
        sharp = comp.sharp_energy([1, 0], eps)["total"]
        ratios.append(rep["total"] / (sharp + eps * (comp.full_tv() + 4.0)))
    assert all(r <= 4.0 * ratios[0] for r in ratios)


def test_mollified_diffuse_matches_grid_at_resolvable_scale():
    # the analytic seminorm agrees with the grid mollify + grid seminorm
    W = two_well()
    F = 0.5 * W.wells[1] + 0.5 * W.wells[0]
    comp = simple_laminate(W, F, 4)
    n = 512
    eps = 0.02
    U = comp.deformation_field(n).cell_gradient()
    shifted = U - F
    U_eps, _ = mollify_preserving_data(shifted, eps, nu=[1, 0])
    grid_semi = fields.directional_lq_seminorm(U_eps + F, [1, 0], 2.0)
    rep = mollified_diffuse_analytic(comp, [1, 0], 2.0, eps)
    assert rep["seminorm"] == pytest.approx(grid_semi, rel=0.35)


def test_verify_comparison_bounds_roundtrip():
    rng = np.random.default_rng(4)
    W = two_well()
    n = 64
    x = (np.arange(n) + 0.5) / n
    U = (0.5 + 0.4 * np.sin(2 * np.pi * 3 * x)[:, None, None, None]) * E11[None, None] \
        * np.ones((1, n, 1, 1))
    chi = PhaseField(W, (U[..., 0, 0] > 0.5).astype(int))
    spec = EnergySpec(Kind.DIFFUSE, [[1, 0]], epsilon=0.05, q=2.0)
    rep = comparison.verify_comparison_bounds(U, chi, spec)
    assert "threshold" in rep and "mollify" in rep
    assert rep["threshold"]["ratio_surface"] >= 0.0
