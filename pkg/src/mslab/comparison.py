"""Constructive diffuse/sharp bridges.

Thresholding turns a diffuse field into a sharp phase indicator whose
surface measure is controlled by the diffuse energy (lower-bound
direction); support-preserving mollification turns a sharp competitor
into an admissible diffuse one (upper-bound direction).  Both emit
certificates with the inequality ratios used by the sweep harness.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import ndimage

from mslab import energies as en
from mslab import fields as flds
from mslab._bumps import mollifier_1d, mollifier_q_norm
from mslab.errors import InvalidParameterError
from mslab.fields import PhaseField, as_direction
from mslab.wells import WellSet

BLOCK_CELLS = 4
N_LEVELS = 8
ZETA_TRIES = 100


# ---------------------------------------------------------------------------
# thresholding (diffuse -> sharp)
# ---------------------------------------------------------------------------


@dataclass
class ThresholdPlan:
    """Projection direction and per-block threshold levels."""

    r: np.ndarray  # unit direction in well-value space, shape (d, d)
    order: np.ndarray  # well indices sorted by projected value
    levels: np.ndarray  # (n_blocks, n_wells - 1), strictly increasing per block
    block_cells: int

    def __post_init__(self):
        lv = np.asarray(self.levels, dtype=float)
        if lv.ndim != 2 or np.any(np.diff(lv, axis=1) <= 0):
            raise InvalidParameterError("threshold levels must increase within each block")


def _project_wells(W: WellSet, r: np.ndarray) -> np.ndarray:
    return np.einsum("kij,ij->k", W.wells, r)


def _auto_zeta(W: WellSet, rng) -> np.ndarray:
    """Random unit direction separating all projected wells."""
    diam = max(W.diameter(), 1e-30)
    d = W.dimension
    for _ in range(ZETA_TRIES):
        z = rng.normal(size=(d, d))
        z /= np.linalg.norm(z)
        proj = _project_wells(W, z)
        gaps = np.diff(np.sort(proj))
        if len(gaps) == 0 or gaps.min() > 1e-6 * diam:
            return z
    raise InvalidParameterError("could not find a separating projection direction")


def _axis_of(nu) -> int:
    nu = as_direction(nu).nu
    axis = int(np.argmax(np.abs(nu)))
    if abs(abs(nu[axis]) - 1.0) > 1e-12:
        raise InvalidParameterError("thresholding implemented for axis-aligned nu")
    return axis


def threshold_to_sharp(
    U: np.ndarray,
    chi: PhaseField,
    nu,
    eps: float,
    r: Optional[np.ndarray] = None,
    p: float = 2.0,
    q: float = 2.0,
    rng=0,
) -> tuple[PhaseField, dict]:
    """Monotone-step thresholding of U . r into a sharp indicator in K.

    Per slice block (BLOCK_CELLS wide across nu), one level t_k per gap is
    chosen among N_LEVELS equispaced candidates in
    (A_k + c/4, A_{k+1} - c/4) minimizing the crossing count; the vector
    lift picks the nearest well among those sharing the projected class.

    Returns (chi_tilde, certificate) where the certificate carries

      ratio_surface = eps ||D_nu (chi_tilde . r)|| / int(|U-chi|^p + eps^q |d_nu (U.r)|^q)
      ratio_elastic = int |U - chi_tilde|^p / int |U - chi|^p
    """
    W = chi.well_set
    rng = np.random.default_rng(rng)
    axis = _axis_of(nu)
    if r is None:
        r = _auto_zeta(W, rng)
    else:
        r = np.asarray(r, dtype=float)
        r = r / np.linalg.norm(r)
        proj = np.sort(_project_wells(W, r))
        if np.min(np.diff(proj)) <= 1e-12 * max(W.diameter(), 1e-30):
            r = _auto_zeta(W, rng)
    proj = _project_wells(W, r)
    order = np.argsort(proj)
    sorted_proj = proj[order]
    c = np.min(np.diff(sorted_proj))

    n = chi.n
    h = chi.h
    Ur = np.einsum("...ij,ij->...", U, r)
    # lines run along `axis`; move that axis last
    Ur_l = np.moveaxis(Ur, axis, -1)
    n_lines = Ur_l.size // n
    Ur_lines = Ur_l.reshape(n_lines, n)

    n_blocks = int(np.ceil(n_lines / BLOCK_CELLS))
    levels = np.empty((n_blocks, len(W) - 1))
    classes = np.empty_like(Ur_lines, dtype=np.int64)
    for b in range(n_blocks):
        sl = slice(b * BLOCK_CELLS, min((b + 1) * BLOCK_CELLS, n_lines))
        block = Ur_lines[sl]
        for k in range(len(W) - 1):
            lo = sorted_proj[k] + c / 4.0
            hi = sorted_proj[k + 1] - c / 4.0
            cands = lo + (np.arange(N_LEVELS) + 0.5) * (hi - lo) / N_LEVELS
            crossings = [
                int(np.sum(np.diff((block >= t).astype(np.int8), axis=-1) != 0))
                for t in cands
            ]
            levels[b, k] = cands[int(np.argmin(crossings))]
        classes[sl] = np.sum(block[..., None] > levels[b][None, None, :], axis=-1)
    plan = ThresholdPlan(r=r, order=order, levels=levels, block_cells=BLOCK_CELLS)

    # vector lift: nearest well among those with the matching projected class
    class_of_well = np.empty(len(W), dtype=np.int64)
    class_of_well[order] = np.arange(len(W))
    # bring the spatial `axis` last among spatial dims, matching Ur_lines
    U_lines = np.moveaxis(U, axis, chi.d - 1).reshape(n_lines, n, chi.d, chi.d)
    dist = np.sum(
        (U_lines[:, :, None, :, :] - W.wells[None, None, :, :, :]) ** 2, axis=(-2, -1)
    )
    mismatch_class = class_of_well[None, None, :] != classes[:, :, None]
    dist = dist + np.where(mismatch_class, np.inf, 0.0)
    tilde_idx_lines = np.argmin(dist, axis=-1)
    tilde_idx = np.moveaxis(
        tilde_idx_lines.reshape(Ur_l.shape), -1, axis
    )
    chi_tilde = PhaseField(W, tilde_idx.astype(np.int32))

    # certificate
    fr_lines = sorted_proj[classes]
    tv_fr = float(np.sum(np.abs(np.diff(fr_lines, axis=-1)))) * h ** (chi.d - 1)
    dUr = np.diff(Ur_lines, axis=-1) / h
    if q == 1.0:
        grad_term = float(np.sum(np.abs(np.diff(Ur_lines, axis=-1)))) * h ** (chi.d - 1)
        diffuse = grad_term * eps
    else:
        diffuse = float(np.sum(np.abs(dUr) ** q)) * h**chi.d * eps**q
    mis = np.sqrt(np.sum((U - chi.values()) ** 2, axis=(-2, -1)))
    elastic_chi = float(np.sum(mis**p) * h**chi.d)
    mis_t = np.sqrt(np.sum((U - chi_tilde.values()) ** 2, axis=(-2, -1)))
    elastic_tilde = float(np.sum(mis_t**p) * h**chi.d)
    denom = elastic_chi + diffuse
    cert = {
        "tv_fr": tv_fr,
        "elastic_chi": elastic_chi,
        "elastic_tilde": elastic_tilde,
        "diffuse_term": diffuse,
        "ratio_surface": eps * tv_fr / denom if denom > 0 else 0.0,
        "ratio_elastic": elastic_tilde / elastic_chi if elastic_chi > 0 else 0.0,
        "plan": plan,
    }
    return chi_tilde, cert


# ---------------------------------------------------------------------------
# mollification (sharp -> diffuse)
# ---------------------------------------------------------------------------


def mollify_preserving_data(
    U: np.ndarray, eps: float, nu=None, n_kernel: int = 33
) -> tuple[np.ndarray, dict]:
    """Two-stage mollification that keeps the field zero outside the domain.

    The input is the shifted field (vanishing outside (0,1)^d): first the
    inner rescale V(y) -> V(center + (y - center)/(1 - 2 eps)), then a
    compactly supported convolution at scale eps (1d along nu when given,
    radial otherwise).  The output vanishes exactly outside (0,1)^d.
    """
    if not 0.0 < eps < 0.25:
        raise InvalidParameterError("mollification scale must lie in (0, 1/4)")
    U = np.asarray(U, dtype=float)
    n = U.shape[0]
    d = U.ndim - 2 if U.ndim >= 3 else U.ndim
    spatial = U.shape[:d] if U.ndim > d else U.shape
    # inner rescale about the center
    idx = [np.arange(n) for _ in range(d)]
    grids = np.meshgrid(*idx, indexing="ij")
    coords = [((g - (n - 1) / 2.0) * (1.0 / (1.0 - 2.0 * eps)) + (n - 1) / 2.0) for g in grids]
    coords = np.stack([c.ravel() for c in coords])

    def resample(arr):
        return ndimage.map_coordinates(
            arr, coords, order=1, mode="constant", cval=0.0
        ).reshape(spatial)

    if U.ndim == d:
        V = resample(U)[..., None, None]
        squeeze = True
        comps = 1
    else:
        V = np.empty_like(U)
        for i in range(U.shape[-2]):
            for j in range(U.shape[-1]):
                V[..., i, j] = resample(U[..., i, j])
        squeeze = False

    radius = max(1, int(np.floor(eps * n)))
    x = np.linspace(-1 + 1e-9, 1 - 1e-9, 2 * radius + 1)
    t = 1.0 - x**2
    ker = np.where(t > 0, np.exp(-1.0 / np.maximum(t, 1e-300)), 0.0)
    ker /= ker.sum()
    out = V.copy()
    if nu is not None:
        axis = _axis_of(nu)
        for i in range(out.shape[-2]):
            for j in range(out.shape[-1]):
                out[..., i, j] = ndimage.convolve1d(
                    out[..., i, j], ker, axis=axis, mode="constant", cval=0.0
                )
    else:
        for a in range(d):
            for i in range(out.shape[-2]):
                for j in range(out.shape[-1]):
                    out[..., i, j] = ndimage.convolve1d(
                        out[..., i, j], ker, axis=a, mode="constant", cval=0.0
                    )
    if squeeze:
        out = out[..., 0, 0]
    report = {"eps": eps, "kernel_radius_cells": radius, "rescale": 1.0 / (1.0 - 2.0 * eps)}
    return out, report


# ---------------------------------------------------------------------------
# analytic diffuse energy of a mollified competitor
# ---------------------------------------------------------------------------


def mollified_diffuse_analytic(comp, nu, q: float, eps: float) -> dict:
    """Leading-order diffuse total of the competitor mollified along nu at
    scale eps.

    Each interface of the gradient (jump J, normal n) contributes
    c_q eps^{1-q} |J|^q |n . nu| length to int |d_nu grad u|^q; built-in
    smooth transition zones are added through the competitor's
    ``diffuse_extra`` hook.  The elastic term keeps its sharp value (the
    mollification correction is the same order as the surface term).
    """
    nu = as_direction(nu).nu
    c_q = mollifier_q_norm(q)
    semi = 0.0
    for f in comp.families:
        e = f.edge
        n_len = abs(float(-e[1] * nu[0] + e[0] * nu[1]))
        semi += c_q * eps ** (1.0 - q) * f.jump_mag**q * n_len * f.count
    extra = comp.extras.get("diffuse_extra")
    if extra is not None:
        semi += extra(nu, q, eps)
    elastic = comp.elastic()
    return {
        "elastic": elastic,
        "seminorm": semi,
        "total": elastic + eps**q * semi,
        "provenance": "analytic",
    }


def verify_comparison_bounds(U, chi: PhaseField, spec: en.EnergySpec, rng=0) -> dict:
    """Round-trip both bridges on a grid pair (U, chi) and report the
    sandwich ratios the harness uses to transfer sharp scaling laws."""
    if spec.kind is not en.Kind.DIFFUSE:
        raise InvalidParameterError("comparison bounds are a diffuse-energy check")
    nu = spec.directions[0]
    chi_tilde, cert = threshold_to_sharp(U, chi, nu, spec.epsilon, p=spec.p, q=spec.q, rng=rng)
    shifted = U - np.mean(U, axis=tuple(range(chi.d)), keepdims=True)
    U_eps, moll_report = mollify_preserving_data(shifted, min(spec.epsilon, 0.2), nu=nu.nu)
    report = {
        "threshold": {k: v for k, v in cert.items() if k != "plan"},
        "mollify": moll_report,
        "chi_tilde": chi_tilde,
    }
    return report
