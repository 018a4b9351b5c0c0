"""Three-triangle patch inequality: elastic cost of discrete phase changes.

The patch Omega_1 u Omega_2 = {T, T', T + h e1, T + h e2} (+Rz) shares all
interior edges with the middle triangle T'; tangential continuity of the
affine deformation forces elastic cost whenever the indicator jumps across
an edge whose direction is not the distinguished compatible one.
"""

from __future__ import annotations

import numpy as np

from mslab.errors import InvalidParameterError
from mslab.wells import WellSet, cross_product

#: directions entering the compatibility assumption
W_DIRS = {
    "e1": np.array([1.0, 0.0]),
    "e2": np.array([0.0, 1.0]),
    "diag": np.array([1.0, 1.0]) / np.sqrt(2.0),
}


def patch_c0(W: WellSet, v_key: str, R=None) -> float:
    """C0 = min over well pairs and directions w != v of |(R w) x (A_j - A_k)|."""
    R = np.eye(2) if R is None else np.asarray(R, dtype=float)
    vals = []
    for key, w in W_DIRS.items():
        if key == v_key:
            continue
        for i in range(len(W)):
            for j in range(i + 1, len(W)):
                vals.append(
                    np.linalg.norm(cross_product(R @ w, W.wells[i] - W.wells[j]))
                )
    c0 = float(min(vals))
    if c0 <= 0:
        raise InvalidParameterError(
            "wells violate the compatibility assumption for this v"
        )
    return c0


def patch_constant(W: WellSet, v_key: str, p: float = 2.0, R=None) -> float:
    """The proof's constant: 2^{-2p-1} C0^{p-1} from the middle-triangle
    estimate, 2^{-p-1} from assembling the two patches, C0/diam(K) to pass
    to jump magnitudes, and 1/sqrt(2) to reach the nu-weighted measure."""
    c0 = patch_c0(W, v_key, R)
    return 2.0 ** (-3.0 * p - 2.0) * c0**p / (np.sqrt(2.0) * W.diameter())


def _patch_geometry(h: float, R: np.ndarray, flipped: bool):
    """Nodes, triangles, and interior edges of Omega_1 u Omega_2 (or the
    flipped variant), rotated by R.

    Interior edges are given as (tri_a, tri_b, length, unit normal) with
    the middle triangle always tri_b.
    """
    e1 = np.array([1.0, 0.0])
    e2 = np.array([0.0, 1.0])
    if not flipped:
        nodes_ref = np.array(
            [[0, 0], [1, 0], [0, 1], [1, 1], [2, 0], [0, 2]], dtype=float
        )
        tris = np.array(
            [
                [0, 1, 2],  # T
                [1, 3, 2],  # T' (middle)
                [1, 4, 3],  # T + h e1
                [2, 3, 5],  # T + h e2
            ]
        )
        edges = [
            (0, 1, np.sqrt(2.0), (e1 + e2) / np.sqrt(2.0)),  # T | T'
            (2, 1, 1.0, e1),  # (T + h e1) | T'
            (3, 1, 1.0, e2),  # (T + h e2) | T'
        ]
    else:
        nodes_ref = np.array(
            [[0, 0], [1, 0], [0, 1], [1, 1], [0, -1], [-1, 1]], dtype=float
        )
        tris = np.array(
            [
                [0, 1, 2],  # T (middle)
                [1, 3, 2],  # T'
                [1, 0, 4],  # T' - h e2
                [0, 2, 5],  # T' - h e1
            ]
        )
        edges = [
            (1, 0, np.sqrt(2.0), (e1 + e2) / np.sqrt(2.0)),
            (2, 0, 1.0, e2),
            (3, 0, 1.0, e1),
        ]
    nodes = nodes_ref * h @ R.T
    edges = [(a, b, L * h, R @ n) for (a, b, L, n) in edges]
    return nodes, tris, edges


def patch_inequality_check(
    W: WellSet,
    v_key: str,
    u_nodes: np.ndarray,
    chi_idx: np.ndarray,
    h: float = 1.0,
    R=None,
    p: float = 2.0,
    flipped: bool = False,
) -> dict:
    """lhs = int_patch |grad u - chi|^p against rhs = C h ||D_{R nu} chi||.

    ``u_nodes`` are the six nodal deformations, ``chi_idx`` the four
    triangle well indices; nu is the direction orthogonal to v.
    """
    R = np.eye(2) if R is None else np.asarray(R, dtype=float)
    nodes, tris, edges = _patch_geometry(h, R, flipped)
    u_nodes = np.asarray(u_nodes, dtype=float)
    chi_idx = np.asarray(chi_idx, dtype=np.int64)
    v = W_DIRS[v_key]
    nu = np.array([-v[1], v[0]])
    Rnu = R @ nu

    # exact per-triangle gradients and energies
    lhs = 0.0
    area = h * h / 2.0
    for t in range(4):
        tv = nodes[tris[t]]
        uv = u_nodes[tris[t]]
        A = np.stack([tv[1] - tv[0], tv[2] - tv[0]], axis=1)
        du = np.stack([uv[1] - uv[0], uv[2] - uv[0]], axis=1)
        grad = du @ np.linalg.inv(A)
        mis = grad - W.wells[chi_idx[t]]
        lhs += np.linalg.norm(mis) ** p * area

    tv_nu = 0.0
    for a, b, L, n in edges:
        jump = W.wells[chi_idx[a]] - W.wells[chi_idx[b]]
        tv_nu += abs(float(n @ Rnu)) * L * float(np.linalg.norm(jump))

    C = patch_constant(W, v_key, p, R)
    rhs = C * h * tv_nu
    return {
        "lhs": float(lhs),
        "rhs": float(rhs),
        "tv_nu": float(tv_nu),
        "constant": C,
        "pass": bool(lhs >= rhs - 1e-14),
    }


def random_patch_trial(
    W: WellSet, v_key: str, rng, h: float = 1.0, R=None, p: float = 2.0,
    flipped: bool = False, u_scale: float = 2.0,
) -> dict:
    """One randomized admissible (u, chi) on the patch."""
    rng = np.random.default_rng(rng)
    u_nodes = rng.normal(scale=u_scale * h, size=(6, 2))
    chi_idx = rng.integers(0, len(W), size=4)
    return patch_inequality_check(W, v_key, u_nodes, chi_idx, h, R, p, flipped)
