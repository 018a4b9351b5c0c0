import json

import numpy as np
import pytest
from scipy.special import zeta

from mslab import energies, fields, wells
from mslab.energies import EnergySpec, Kind
from mslab.errors import GridMismatchError, InvalidParameterError
from mslab.fields import PhaseField


def two_well():
    return wells.make_well_set("two_well", 2)


def laminate_field(n, periods, W):
    x = (np.arange(n) + 0.5) / n
    cells = ((x[:, None] * periods).astype(int) % 2) * np.ones((1, n), dtype=int)
    return PhaseField(W, cells)


def test_elastic_affine_zero():
    F = np.array([[0.4, 0.1], [0.0, -0.2]])
    WF = wells.make_well_set("custom", 2, matrices=[F])
    u = fields.affine_deformation(F, 32)
    chi = PhaseField(WF, np.zeros((32, 32), dtype=int))
    assert energies.elastic_energy(u, chi) < 1e-25


def test_elastic_laminate_misfit_formula():
    # u = F x against a two-well laminate: alpha (1-alpha) |a|^2
    W = two_well()
    alpha = 0.25
    F = alpha * W.wells[1] + (1 - alpha) * W.wells[0]
    n = 64
    x = (np.arange(n) + 0.5) / n
    cells = (x[:, None] < alpha).astype(int) * np.ones((1, n), dtype=int)
    # exact fractions: alpha of the cells in well 1
    cells = (np.arange(n)[:, None] < alpha * n).astype(int) * np.ones((1, n), dtype=int)
    chi = PhaseField(W, cells)
    u = fields.affine_deformation(F, n)
    assert energies.elastic_energy(u, chi) == pytest.approx(alpha * (1 - alpha), rel=1e-12)


def test_elastic_grid_mismatch_error():
    W = two_well()
    u = fields.affine_deformation(np.zeros((2, 2)), 32)
    chi = PhaseField(W, np.zeros((16, 16), dtype=int))
    with pytest.raises(GridMismatchError):
        energies.elastic_energy(u, chi)


def test_elastic_translation_invariance():
    rng = np.random.default_rng(0)
    W = two_well()
    chi = PhaseField(W, rng.integers(0, 2, (16, 16)))
    F = 0.5 * W.wells[1]
    u = fields.affine_deformation(F, 16)
    shifted = fields.DeformationField(u.nodes + np.array([0.3, -0.1]), F,
                                      enforce_boundary=False)
    assert energies.elastic_energy(u, chi) == pytest.approx(
        energies.elastic_energy(shifted, chi)
    )


def test_sharp_total_laminate_surface_free_direction():
    W = two_well()
    chi = laminate_field(64, 8, W)
    F = 0.5 * W.wells[1]
    u = fields.affine_deformation(F, 64)
    spec = EnergySpec(Kind.SHARP, [[0, 1]], epsilon=0.1)
    rep = energies.sharp_total(u, chi, spec)
    assert rep.surface == 0.0
    assert rep.total == rep.elastic


def test_sharp_total_single_interface():
    W = two_well()
    n = 64
    cells = (np.arange(n)[:, None] >= n // 2).astype(int) * np.ones((1, n), dtype=int)
    seg = fields.InterfaceSegment([0.5, 0], [0.5, 1], W.wells[1] - W.wells[0])
    chi = PhaseField(W, cells, interfaces=(seg,))
    F = 0.5 * W.wells[1]
    u = fields.affine_deformation(F, n)
    spec = EnergySpec(Kind.SHARP, [[1, 0]], epsilon=0.1)
    rep = energies.sharp_total(u, chi, spec)
    assert rep.surface == pytest.approx(1.0)
    assert rep.total == pytest.approx(rep.elastic + 0.1)
    assert rep.provenance["surface"] == "analytic"


def test_report_json_schema():
    rep = energies.EnergyReport(Kind.DIFFUSE, 1.0, 2.0, 0.1, q=2.0)
    payload = json.loads(rep.to_json())
    for key in ("kind", "epsilon", "p", "elastic", "surface", "total", "q"):
        assert key in payload
    assert payload["total"] == pytest.approx(1.0 + 0.1**2 * 2.0)


def test_diffuse_total_affine_zero():
    W = two_well()
    chi = PhaseField(W, np.zeros((32, 32), dtype=int))
    U = np.tile(W.wells[0], (32, 32, 1, 1))
    spec = EnergySpec(Kind.DIFFUSE, [[1, 0]], epsilon=0.1, q=2.0)
    rep = energies.diffuse_total(U, chi, spec)
    assert rep.total == 0.0


def test_diffuse_total_mollified_laminate_closed_form():
    # transition width w: surface term ~ |a|^2 w^{-1} x transitions (q = 2)
    W = two_well()
    n = 512
    w = 1.0 / 32.0
    x = (np.arange(n) + 0.5) / n
    tri = 2 * np.abs((x * 4) % 1.0 - 0.5)
    prof = np.clip((tri - 0.5) / (8 * w) + 0.5, 0, 1)
    U = np.zeros((n, n, 2, 2))
    U[..., 0, 0] = prof[:, None]
    chi = PhaseField(W, (prof[:, None] > 0.5).astype(int) * np.ones((1, n), dtype=int))
    spec = EnergySpec(Kind.DIFFUSE, [[1, 0]], epsilon=w, q=2.0)
    rep = energies.diffuse_total(U, chi, spec)
    assert rep.surface == pytest.approx(8.0 / w, rel=0.1)


def test_fractional_constant_zero_and_range():
    W = two_well()
    chi = PhaseField(W, np.ones((32, 32), dtype=int))
    assert energies.fractional_surface(chi, [1, 0], 0.25) == 0.0
    with pytest.raises(InvalidParameterError):
        energies.fractional_surface(chi, [1, 0], 0.6)


def test_fractional_square_wave_series_oracle():
    # 50/50 square wave with values +-1 along x1, s = 1/4, n = 4096:
    # sum over odd k of |k|^{1/2} (2 / (pi |k|))^2, truncated at n/2
    W = wells.make_well_set(
        "custom", 2, matrices=[-np.eye(2) / np.sqrt(2), np.eye(2) / np.sqrt(2)]
    )
    # scale so the projected scalar values are +-1 in Frobenius magnitude
    n = 4096
    s = 0.25
    cells = (np.arange(n)[:, None] >= n // 2).astype(int) * np.ones((1, 1), dtype=int)
    cells = np.tile(cells, (1, n)).astype(np.int32)
    # memory: use a thin field instead (independent of x2) via n x n would be
    # 16M cells; exactness only needs the x1 structure, so use d = 2 with a
    # reduced transverse resolution by tiling rows
    chi = fields.PhaseField(W, cells)
    got_sum = energies.fractional_surface(chi, [1, 0], s) ** (2 * s)
    k = np.arange(1, n // 2, 2)
    series = 2 * np.sum(k**0.5 * (2.0 / (np.pi * k)) ** 2)
    assert got_sum == pytest.approx(series, rel=5e-4)


def test_fractional_interpolation_bound_random_fields():
    # E_surf^s <= C (1 + Per + TV_nu)^{1/(2s)}, constant calibrated on the
    # first field with a x4 margin
    rng = np.random.default_rng(5)
    W = two_well()
    s = 0.25
    nu = [1, 0]
    ratios = []
    for _ in range(20):
        periods = rng.integers(2, 12)
        chi = laminate_field(128, periods, W)
        Es = energies.fractional_surface(chi, nu, s)
        tv = fields.directional_tv(chi, nu)
        _, per = fields.full_tv_perimeter(chi)
        ratios.append(Es / (1 + per + tv) ** (1 / (2 * s)))
    cal = ratios[0]
    assert all(r <= 4.0 * cal for r in ratios)


def test_total_monotone_in_epsilon():
    W = two_well()
    chi = laminate_field(64, 6, W)
    F = 0.5 * W.wells[1]
    u = fields.affine_deformation(F, 64)
    totals = []
    for eps in (1e-3, 1e-2, 1e-1):
        spec = EnergySpec(Kind.SHARP, [[1, 0]], epsilon=eps)
        totals.append(energies.sharp_total(u, chi, spec).total)
    assert totals[0] <= totals[1] <= totals[2]


def test_sharp_vs_fractional_calibrated_ordering():
    rng = np.random.default_rng(11)
    W = two_well()
    F = 0.5 * W.wells[1]
    s = 0.25
    eps = 1e-2
    nu = [1, 0]
    ratios = []
    for _ in range(20):
        chi = laminate_field(128, int(rng.integers(2, 10)), W)
        u = fields.affine_deformation(F, 128)
        sharp = energies.sharp_total(u, chi, EnergySpec(Kind.SHARP, [nu], epsilon=eps))
        frac = energies.fractional_total(
            u, chi, EnergySpec(Kind.FRACTIONAL, [nu], epsilon=eps, s=s)
        )
        _, per = fields.full_tv_perimeter(chi)
        ratios.append(frac.total / (sharp.total + eps * (1 + per)))
    assert all(r <= 4.0 * ratios[0] for r in ratios)
