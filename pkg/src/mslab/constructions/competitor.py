"""Competitor container: an admissible pair (u, chi) with exact evaluators."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from mslab import fields as flds
from mslab.constructions import core
from mslab.errors import InvalidParameterError
from mslab.fields import DeformationField, InterfaceSegment, PhaseField
from mslab.wells import WellSet

SEGMENT_CAP = 400_000


@dataclass(frozen=True)
class BranchingParams:
    """Branching parameters: N zeroth-generation oscillations, refinement
    ratio theta in (1/4, 1/2), j0 + 1 ~ log2(H N / L) generations."""

    N: int
    theta: float
    j0: int
    L: float = 1.0
    H: float = 1.0
    alpha: float = 0.5
    degenerate: bool = False

    def __post_init__(self):
        if self.N < 1:
            raise InvalidParameterError("N must be >= 1")
        if not 0.25 < self.theta < 0.5:
            raise InvalidParameterError("theta must lie in (1/4, 1/2)")
        if not 0.0 < self.alpha < 1.0:
            raise InvalidParameterError("alpha must lie in (0,1)")
        target = np.log2(max(self.H * self.N / self.L, 1.0))
        if not self.degenerate and abs((self.j0 + 1) - (target + 1)) > 2.0 + 1e-9:
            raise InvalidParameterError(
                f"j0 + 1 = {self.j0 + 1} is not within 2 of log2(HN/L) = {target:.2f}"
            )

    def lengths(self) -> tuple[np.ndarray, np.ndarray]:
        j = np.arange(self.j0 + 1)
        ell = self.L / (self.N * 2.0**j)
        h = (1.0 - self.theta) * self.H * self.theta**j / 2.0
        return ell, h


@dataclass
class Competitor:
    """Admissible (u, chi) with pointwise evaluators and exact energies.

    ``u_at`` maps (m, 2) points to (m, 2) deformations, ``chi_index_at``
    to well indices.  ``elastic`` is the exact elastic energy; ``tv``
    evaluates sum over interfaces of |n . nu| |jump| length from the
    interface families.
    """

    well_set: WellSet
    F: np.ndarray
    u_at: Callable
    chi_index_at: Callable
    families: list
    elastic_value: float
    params: Optional[BranchingParams] = None
    formula_value: Optional[float] = None
    boundary_exact: bool = True
    segments_builder: Optional[Callable] = None
    u_grad_at: Optional[Callable] = None
    extras: dict = field(default_factory=dict)

    def elastic(self) -> float:
        return self.elastic_value

    def tv(self, nu) -> float:
        nu = np.asarray(nu, dtype=float)
        return core.families_tv(self.families, nu)

    def full_tv(self) -> float:
        return core.families_full_tv(self.families)

    def sharp_energy(self, nu, eps: float) -> dict:
        surf = self.tv(nu)
        return {
            "elastic": self.elastic_value,
            "surface": surf,
            "total": self.elastic_value + eps * surf,
        }

    def phase_field(self, n: int, with_segments: bool = True) -> PhaseField:
        pf = flds.rasterize(self.well_set, self.chi_index_at, n, d=2)
        segs = None
        if with_segments and self.segments_builder is not None:
            segs = self.segments_builder()
            if segs is not None and len(segs) > SEGMENT_CAP:
                segs = None
        if segs is not None:
            return PhaseField(self.well_set, pf.cells, interfaces=tuple(segs))
        return pf

    def deformation_field(self, n: int) -> DeformationField:
        ax = np.arange(n + 1) / n
        X, Y = np.meshgrid(ax, ax, indexing="ij")
        pts = np.stack([X.ravel(), Y.ravel()], axis=-1)
        vals = self.u_at(pts).reshape(n + 1, n + 1, 2)
        return DeformationField(vals, self.F, enforce_boundary=self.boundary_exact)

    def continuity_defect(self, rng=None, n_pairs: int = 4000, delta: float = 1e-8) -> float:
        """max |u(x+) - u(x-)| over random point pairs straddling tiny gaps."""
        rng = np.random.default_rng(rng)
        pts = rng.uniform(delta, 1 - delta, size=(n_pairs, 2))
        step = rng.normal(size=(n_pairs, 2))
        step /= np.linalg.norm(step, axis=1, keepdims=True)
        u1 = self.u_at(pts)
        u2 = self.u_at(pts + delta * step)
        return float(np.max(np.linalg.norm(u1 - u2, axis=1)))

    def elastic_quadrature(self, n: int = 1024, rng=0, p: float = 2.0) -> float:
        """Independent per-cell quadrature of int |grad u - chi|^p.

        Midpoint rule with a seeded sub-cell jitter (so samples do not
        align with interfaces), gradients exact when the construction
        provides them and tiny central differences otherwise.
        """
        rng = np.random.default_rng(rng)
        h = 1.0 / n
        ax = (np.arange(n) + 0.5) * h
        X, Y = np.meshgrid(ax, ax, indexing="ij")
        pts = np.stack([X.ravel(), Y.ravel()], axis=-1)
        pts = pts + rng.uniform(-0.3 * h, 0.3 * h, size=pts.shape)
        pts = np.clip(pts, 1e-9, 1 - 1e-9)
        if self.u_grad_at is not None:
            grad = self.u_grad_at(pts)
        else:
            delta = 1e-7
            grad = np.empty((len(pts), 2, 2))
            for a in range(2):
                e = np.zeros(2)
                e[a] = delta
                d = (self.u_at(pts + e) - self.u_at(pts - e)) / (2 * delta)
                grad[:, :, a] = d
        chi = self.well_set.wells[self.chi_index_at(pts)]
        mis = np.sqrt(np.sum((grad - chi) ** 2, axis=(-2, -1)))
        return float(np.sum(mis**p) * h * h)

    def grad_sup(self, rng=None, n_pts: int = 20000, delta: float = 1e-7) -> float:
        """Sampled sup |grad u| via tiny central differences."""
        rng = np.random.default_rng(rng)
        pts = rng.uniform(2 * delta, 1 - 2 * delta, size=(n_pts, 2))
        gmax = 0.0
        for a in range(2):
            e = np.zeros(2)
            e[a] = delta
            d = (self.u_at(pts + e) - self.u_at(pts - e)) / (2 * delta)
            gmax = max(gmax, float(np.max(np.abs(d))))
        return gmax
