"""Piecewise-affine deformations on the triangulation: energy, solves,
projection, alternating minimization, and interpolation of competitors."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import cg as sparse_cg

from mslab.discrete.triangulation import Triangulation
from mslab.errors import InvalidParameterError, SolverError
from mslab.wells import WellSet


@dataclass
class FePair:
    """Nodal deformation (continuous, affine per triangle) and per-triangle
    well indices; exterior nodes carry u = F x exactly."""

    tri: Triangulation
    nodes: np.ndarray  # (n_nodes, 2)
    chi: np.ndarray  # (n_triangles,) well indices
    F: np.ndarray
    well_set: WellSet

    def gradients(self) -> np.ndarray:
        """(n_tri, 2, 2) per-triangle gradients, entry [t, i, a] = d u_i / d x_a."""
        g = self.tri.grads()
        uv = self.nodes[self.tri.triangles]  # (n_tri, 3, 2)
        return np.einsum("tkv,tka->tva", uv, g)


def affine_pair(tri: Triangulation, W: WellSet, F, chi=None) -> FePair:
    F = np.asarray(F, dtype=float)
    nodes = tri.vertices @ F.T
    if chi is None:
        chi = np.zeros(tri.n_triangles, dtype=np.int64)
    return FePair(tri, nodes, np.asarray(chi, dtype=np.int64), F, W)


def discrete_energy(pair: FePair, p: float = 2.0) -> float:
    """Exact int_Omega |grad u - chi|^p: per-triangle constant gradients,
    clipped areas at the boundary."""
    grad = pair.gradients()
    mis = grad - pair.well_set.wells[pair.chi]
    mags = np.sqrt(np.sum(mis**2, axis=(-2, -1)))
    return float(np.sum(mags**p * pair.tri.areas_in))


def _stiffness(tri: Triangulation):
    """Scalar stiffness with clipped-area weights and the load operator.

    Returns (K_ff, K_fp, B) where B maps per-triangle target gradients to
    nodal loads; f/p index the free/pinned node split.
    """
    g = tri.grads()  # (t, 3, 2)
    w = tri.areas_in
    n = tri.n_nodes
    rows, cols, vals = [], [], []
    for a in range(3):
        for b in range(3):
            rows.append(tri.triangles[:, a])
            cols.append(tri.triangles[:, b])
            vals.append(w * np.einsum("td,td->t", g[:, a], g[:, b]))
    K = sparse.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n, n),
    ).tocsr()
    return K


def _loads(tri: Triangulation, target: np.ndarray) -> np.ndarray:
    """Nodal loads sum_t w_t grad(phi_a) . target_t for a scalar row field."""
    g = tri.grads()
    w = tri.areas_in
    out = np.zeros(tri.n_nodes)
    for a in range(3):
        np.add.at(out, tri.triangles[:, a], w * np.einsum("td,td->t", g[:, a], target))
    return out


class DisplacementSolver:
    """Reusable CG solver for the quadratic displacement problem at p = 2.

    The Hessian does not depend on chi, so the stiffness (and its Jacobi
    preconditioner) is assembled once; chi only changes the loads.
    """

    def __init__(self, tri: Triangulation, F, tol: float = 1e-10, maxiter: Optional[int] = None):
        self.tri = tri
        self.F = np.asarray(F, dtype=float)
        self.tol = tol
        self.free = ~tri.pinned
        K = _stiffness(tri)
        self.K_ff = K[self.free][:, self.free].tocsr()
        self.K_fp = K[self.free][:, ~self.free].tocsr()
        self.M = self._preconditioner()
        self.maxiter = maxiter or max(2000, 20 * int(np.sqrt(self.K_ff.shape[0])) * 20)
        self._warm = None

    def _preconditioner(self):
        if self.K_ff.shape[0] > 5000:
            try:
                import pyamg

                ml = pyamg.smoothed_aggregation_solver(self.K_ff.tocsr(), max_coarse=200)
                return ml.aspreconditioner(cycle="V")
            except Exception:
                pass
        diag = self.K_ff.diagonal()
        diag[diag <= 0] = 1.0
        return sparse.diags(1.0 / diag)

    def solve(self, chi_vals: np.ndarray, warm: Optional[np.ndarray] = None) -> np.ndarray:
        """Nodal minimizer of sum_t w_t |grad u - chi_t|^2 with pinned trace."""
        tri = self.tri
        nodes = tri.vertices @ self.F.T
        u = nodes.copy()
        pinned_vals = nodes[~self.free]
        for row in range(2):
            b = _loads(tri, chi_vals[:, row, :])[self.free]
            b = b - self.K_fp @ pinned_vals[:, row]
            x0 = None
            if warm is not None:
                x0 = warm[self.free, row]
            elif self._warm is not None:
                x0 = self._warm[self.free, row]
            x, info = sparse_cg(
                self.K_ff, b, x0=x0, rtol=self.tol, atol=0.0, M=self.M,
                maxiter=self.maxiter,
            )
            if info > 0:
                res = np.linalg.norm(self.K_ff @ x - b) / max(np.linalg.norm(b), 1e-300)
                raise SolverError(f"CG did not reach tol, relative residual {res:.2e}")
            u[self.free, row] = x
        self._warm = u
        return u


def solve_displacement(
    tri: Triangulation, W: WellSet, chi, F, tol: float = 1e-10,
    solver: Optional[DisplacementSolver] = None,
) -> FePair:
    """Minimize the p = 2 discrete energy over interior nodal values."""
    chi = np.asarray(chi, dtype=np.int64)
    if solver is None:
        solver = DisplacementSolver(tri, F, tol=tol)
    u = solver.solve(W.wells[chi])
    return FePair(tri, u, chi, np.asarray(F, dtype=float), W)


def project_chi(pair: FePair) -> np.ndarray:
    """Per-triangle nearest well in Frobenius distance; ties take the
    lowest index (argmin convention)."""
    grad = pair.gradients()
    d = np.sum(
        (grad[:, None, :, :] - pair.well_set.wells[None, :, :, :]) ** 2, axis=(-2, -1)
    )
    return np.argmin(d, axis=1)


def alternate_minimize(
    tri: Triangulation,
    W: WellSet,
    F,
    chi0=None,
    iters: int = 30,
    restarts: int = 1,
    seed: int = 0,
    tol: float = 1e-10,
) -> tuple[FePair, list]:
    """Block-coordinate descent: exact displacement solve, then pointwise
    well projection.  The energy trace is nonincreasing (each half step is
    an exact block minimization); restarts draw random initial indicators
    and the best pair is kept.  Deterministic given the seed."""
    rng = np.random.default_rng(seed)
    solver = DisplacementSolver(tri, F, tol=tol)
    best = None
    best_trace = None
    inits = []
    if chi0 is not None:
        inits.append(np.asarray(chi0, dtype=np.int64))
    while len(inits) < restarts:
        inits.append(rng.integers(0, len(W), size=tri.n_triangles))
    for chi in inits:
        chi = chi.copy()
        trace = []
        prev = np.inf
        pair = None
        for _ in range(iters):
            pair = solve_displacement(tri, W, chi, F, tol=tol, solver=solver)
            e = discrete_energy(pair)
            trace.append(e)
            chi_new = project_chi(pair)
            if np.array_equal(chi_new, chi) or e >= prev - 1e-15:
                chi = chi_new
                break
            prev = e
            chi = chi_new
        pair = FePair(tri, pair.nodes, chi, pair.F, W)
        e = discrete_energy(pair)
        trace.append(e)
        if best is None or e < discrete_energy(best):
            best, best_trace = pair, trace
    return best, best_trace


def prolong_chi(coarse: Triangulation, fine: Triangulation, chi_coarse) -> np.ndarray:
    """Carry a coarse indicator onto the h/2 mesh (same rotation): each fine
    triangle inherits the value of the coarse triangle containing its
    centroid."""
    chi_coarse = np.asarray(chi_coarse)
    lut = {}
    for t in range(coarse.n_triangles):
        lut[(coarse.z_index[t, 0], coarse.z_index[t, 1], bool(coarse.is_upper[t]))] = (
            chi_coarse[t]
        )
    cent = fine.vertices[fine.triangles].mean(axis=1) @ coarse.R  # back to lattice frame
    out = np.empty(fine.n_triangles, dtype=np.int64)
    h = coarse.h
    for t in range(fine.n_triangles):
        x, y = cent[t]
        i, j = int(np.floor(x / h)), int(np.floor(y / h))
        fx, fy = x / h - i, y / h - j
        up = fx + fy >= 1.0
        key = (i, j, bool(up))
        if key not in lut:
            key = (i, j, False) if (i, j, False) in lut else (i, j, True)
        out[t] = lut.get(key, 0)
    return out


def interpolate_to_fe(comp, tri: Triangulation, W: Optional[WellSet] = None) -> tuple[FePair, dict]:
    """Nodal interpolation of a competitor, boundary condition preserved;
    chi is the pointwise projection of the interpolated gradients.

    The report counts triangles where u is not affine (edge-midpoint
    deviation), the measured stand-in for |{u_h != u}| <= C h (TV + Per).
    """
    W = W if W is not None else comp.well_set
    F = np.asarray(comp.F, dtype=float)
    inside = np.clip(tri.vertices, 0.0, 1.0)
    nodes = comp.u_at(inside)
    affine = tri.vertices @ F.T
    nodes[tri.pinned] = affine[tri.pinned]
    pair = FePair(tri, nodes, np.zeros(tri.n_triangles, dtype=np.int64), F, W)
    pair.chi = project_chi(pair)

    v = tri.vertices[tri.triangles]
    mids = 0.5 * (v + np.roll(v, -1, axis=1)).reshape(-1, 2)
    outside = np.any((mids < 0.0) | (mids > 1.0), axis=1)
    u_mid = comp.u_at(np.clip(mids, 0.0, 1.0))
    u_mid[outside] = mids[outside] @ F.T  # u = F x outside the domain
    u_mid = u_mid.reshape(tri.n_triangles, 3, 2)
    u_nodal_mid = 0.5 * (nodes[tri.triangles] + np.roll(nodes[tri.triangles], -1, axis=1))
    dev = np.max(np.linalg.norm(u_mid - u_nodal_mid, axis=-1), axis=1)
    mismatched = dev > 1e-12
    report = {
        "mismatch_count": int(np.sum(mismatched)),
        "mismatch_area": float(np.sum(tri.areas_in[mismatched])),
    }
    return pair, report
