"""Rotated structured triangulations of a polygonal domain.

The lattice tiles the plane with lower triangles (z, z+h e1, z+h e2) and
upper triangles (z+h e1, z+h(e1+e2), z+h e2), z in h Z^2, rotated by R.
Triangles partially outside the domain keep exact clipped areas
(Sutherland-Hodgman with snapping); admissibility pins every node of a
triangle with positive exterior area to the affine boundary map.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from mslab.errors import InvalidParameterError

SNAP = 1e-12
UNIT_SQUARE = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])


def rotation(deg: float) -> np.ndarray:
    t = np.radians(deg)
    return np.array([[np.cos(t), -np.sin(t)], [np.sin(t), np.cos(t)]])


def _polygon_area(poly: np.ndarray) -> float:
    if len(poly) < 3:
        return 0.0
    x, y = poly[:, 0], poly[:, 1]
    return 0.5 * abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def clip_polygon(subject: np.ndarray, clip: np.ndarray) -> np.ndarray:
    """Sutherland-Hodgman clipping of a convex subject against a convex clip
    polygon (counterclockwise), with SNAP tolerance on the half planes."""
    out = list(subject)
    m = len(clip)
    for i in range(m):
        a, b = clip[i], clip[(i + 1) % m]
        edge = b - a
        normal = np.array([-edge[1], edge[0]])  # inward for ccw
        inp = out
        out = []
        if not inp:
            break
        prev = inp[-1]
        prev_in = np.dot(normal, prev - a) >= -SNAP
        for cur in inp:
            cur_in = np.dot(normal, cur - a) >= -SNAP
            if cur_in != prev_in:
                da = np.dot(normal, prev - a)
                db = np.dot(normal, cur - a)
                t = da / (da - db)
                out.append(prev + t * (cur - prev))
            if cur_in:
                out.append(cur)
            prev, prev_in = cur, cur_in
    return np.asarray(out) if out else np.zeros((0, 2))


def _boundary_overlap(tri: np.ndarray, square: np.ndarray) -> float:
    """H^1 measure of the triangle boundary lying on the square boundary."""
    total = 0.0
    for i in range(3):
        a, b = tri[i], tri[(i + 1) % 3]
        for j in range(4):
            c, d = square[j], square[(j + 1) % 4]
            e = d - c
            elen = np.linalg.norm(e)
            t_dir = e / elen
            # collinearity of segment ab with edge cd
            ca, cb = a - c, b - c
            if (
                abs(t_dir[0] * ca[1] - t_dir[1] * ca[0]) > SNAP
                or abs(t_dir[0] * cb[1] - t_dir[1] * cb[0]) > SNAP
            ):
                continue
            ta = np.dot(a - c, t_dir)
            tb = np.dot(b - c, t_dir)
            lo, hi = min(ta, tb), max(ta, tb)
            total += max(0.0, min(hi, elen) - max(lo, 0.0))
    return total


INTERIOR, I_SMALL, I_1, I_2 = 0, 1, 2, 3


@dataclass
class Triangulation:
    """Structured triangulation clipped to the unit square.

    vertices: (n_nodes, 2) physical node coordinates;
    triangles: (n_tri, 3) node indices (lower triangles first per z);
    areas_in: clipped |tau & Omega|; full area is h^2/2 per triangle;
    pinned: node mask (touches the exterior; carries the affine trace);
    t_class: INTERIOR / I_SMALL / I_1 / I_2 per triangle.
    """

    h: float
    R: np.ndarray
    vertices: np.ndarray
    triangles: np.ndarray
    areas_in: np.ndarray
    is_upper: np.ndarray
    z_index: np.ndarray
    t_class: np.ndarray
    pinned: np.ndarray
    sigma: float = 0.1

    @property
    def n_nodes(self) -> int:
        return len(self.vertices)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    def grads(self) -> np.ndarray:
        """(n_tri, 3, 2) gradients of the nodal hat functions per triangle."""
        v = self.vertices[self.triangles]
        e1 = v[:, 1] - v[:, 0]
        e2 = v[:, 2] - v[:, 0]
        det = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
        g = np.empty((len(v), 3, 2))
        g[:, 1, 0] = e2[:, 1] / det
        g[:, 1, 1] = -e2[:, 0] / det
        g[:, 2, 0] = -e1[:, 1] / det
        g[:, 2, 1] = e1[:, 0] / det
        g[:, 0] = -g[:, 1] - g[:, 2]
        return g

    def save(self, path):
        path = Path(path)
        head = {
            "h": self.h,
            "R_deg": float(np.degrees(np.arctan2(self.R[1, 0], self.R[0, 0]))),
            "n_nodes": self.n_nodes,
            "n_triangles": self.n_triangles,
            "sigma": self.sigma,
        }
        path.with_suffix(".json").write_text(json.dumps(head))
        np.savez(
            path.with_suffix(".npz"),
            vertices=self.vertices,
            triangles=self.triangles,
            areas_in=self.areas_in,
            is_upper=self.is_upper,
            z_index=self.z_index,
            t_class=self.t_class,
            pinned=self.pinned,
            R=self.R,
        )


def build_triangulation(h: float, R=None, sigma: float = 0.1) -> Triangulation:
    """All triangles of the rotated lattice meeting the unit square.

    Fully interior triangles take the fast path (area h^2/2); only the
    O(1/h) boundary-straddling ones run the polygon clipper.  Boundary
    triangles are classified with the area threshold sigma h^2 / 2 into
    I_small, I_1 (positive exterior area) and I_2 (inside, with an edge on
    the boundary).
    """
    if R is None:
        R = np.eye(2)
    R = np.asarray(R, dtype=float)
    if h >= np.sqrt(2.0):
        raise InvalidParameterError("h must be smaller than diam(Omega)")
    corners_ref = UNIT_SQUARE @ R  # rows are R^T c
    lo = corners_ref.min(axis=0) - 2 * h
    hi = corners_ref.max(axis=0) + 2 * h
    i0, i1 = int(np.floor(lo[0] / h)) - 1, int(np.ceil(hi[0] / h)) + 1
    j0, j1 = int(np.floor(lo[1] / h)) - 1, int(np.ceil(hi[1] / h)) + 1
    ni, nj = i1 - i0 + 2, j1 - j0 + 2

    ii, jj = np.meshgrid(np.arange(i0, i0 + ni), np.arange(j0, j0 + nj), indexing="ij")
    all_nodes = np.stack([ii.ravel() * h, jj.ravel() * h], axis=-1) @ R.T

    def node_index(i, j):
        return (i - i0) * nj + (j - j0)

    zi, zj = np.meshgrid(np.arange(i0, i1 + 1), np.arange(j0, j1 + 1), indexing="ij")
    zi, zj = zi.ravel(), zj.ravel()
    lower_ids = np.stack(
        [node_index(zi, zj), node_index(zi + 1, zj), node_index(zi, zj + 1)], axis=-1
    )
    upper_ids = np.stack(
        [node_index(zi + 1, zj), node_index(zi + 1, zj + 1), node_index(zi, zj + 1)],
        axis=-1,
    )
    tris_all = np.concatenate([lower_ids, upper_ids], axis=0)
    is_upper_all = np.concatenate(
        [np.zeros(len(zi), bool), np.ones(len(zi), bool)]
    )
    z_all = np.concatenate([np.stack([zi, zj], axis=-1)] * 2, axis=0)

    v = all_nodes[tris_all]  # (m, 3, 2)
    inside_nodes = (
        (v[..., 0] >= -SNAP) & (v[..., 0] <= 1 + SNAP)
        & (v[..., 1] >= -SNAP) & (v[..., 1] <= 1 + SNAP)
    )
    strictly_in = (
        (v[..., 0] > SNAP) & (v[..., 0] < 1 - SNAP)
        & (v[..., 1] > SNAP) & (v[..., 1] < 1 - SNAP)
    )
    all_in = inside_nodes.all(axis=1)
    # quick reject: bounding box disjoint from the square
    bb_reject = (
        (v[..., 0].max(axis=1) < -SNAP) | (v[..., 0].min(axis=1) > 1 + SNAP)
        | (v[..., 1].max(axis=1) < -SNAP) | (v[..., 1].min(axis=1) > 1 + SNAP)
    )
    full = h * h / 2.0
    m = len(tris_all)
    areas = np.full(m, -1.0)
    classes = np.full(m, INTERIOR, dtype=np.int8)
    areas[all_in] = full
    ambiguous = np.nonzero(~all_in & ~bb_reject)[0]
    for t in ambiguous:
        clipped = clip_polygon(v[t], UNIT_SQUARE)
        areas[t] = _polygon_area(clipped)
    keep = areas > SNAP
    # interior triangles touching the boundary line need classification too
    touch = all_in & ~strictly_in.all(axis=1)
    check_cls = np.nonzero(keep & (touch | ~all_in))[0]
    for t in check_cls:
        a_in = areas[t]
        bdry_len = _boundary_overlap(v[t], UNIT_SQUARE)
        outside = full - a_in > SNAP
        if not outside and bdry_len <= SNAP:
            classes[t] = INTERIOR
        elif a_in < 0.5 * sigma * h * h:
            classes[t] = I_SMALL
        elif outside:
            classes[t] = I_1
        else:
            classes[t] = I_2

    tris_kept = tris_all[keep]
    used = np.unique(tris_kept)
    remap = -np.ones(len(all_nodes), dtype=np.int64)
    remap[used] = np.arange(len(used))
    tris = remap[tris_kept]
    verts = all_nodes[used]
    areas_kept = areas[keep]
    classes_kept = classes[keep]
    is_upper_kept = is_upper_all[keep]
    z_kept = z_all[keep]

    pinned = np.zeros(len(verts), dtype=bool)
    ext = np.abs(full - areas_kept) > SNAP
    pinned[np.unique(tris[ext])] = True
    on_bdry = (
        (verts[:, 0] <= SNAP)
        | (verts[:, 0] >= 1 - SNAP)
        | (verts[:, 1] <= SNAP)
        | (verts[:, 1] >= 1 - SNAP)
    )
    pinned |= on_bdry
    return Triangulation(
        h=h,
        R=R,
        vertices=verts,
        triangles=tris,
        areas_in=areas_kept,
        is_upper=is_upper_kept,
        z_index=z_kept,
        t_class=classes_kept,
        pinned=pinned,
        sigma=sigma,
    )
