"""Shared geometry of the branched constructions.

Everything is built from one scalar profile W on a rectangle: a sawtooth
in the oscillation coordinate whose frequency doubles row by row along
the refinement coordinate, continued by an unbranched laminate band and
closed by a linear amplitude decay, mirrored about the midline.  The
profile is exact (piecewise affine), so elastic energies and interface
measures have closed forms.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from mslab.errors import InvalidParameterError

# ---------------------------------------------------------------------------
# single frequency-doubling cell, local coordinates xi in [0,p), tau in [0,1]
# ---------------------------------------------------------------------------
# pattern at tau: "plus" phase (slope 1-beta) on [0, beta p/2) and on
# [beta p/2 + s, beta p + s) with s = tau (1-beta) p / 2; "minus" (slope
# -beta) elsewhere.  The migrating tooth carries the only tau-derivative,
# d_tau W = -(1-beta) p / 2.


def row_pattern(xi, tau, p, beta):
    """True on the plus phase."""
    s = tau * (1.0 - beta) * p / 2.0
    return (xi < beta * p / 2.0) | ((xi >= beta * p / 2.0 + s) & (xi < beta * p + s))


def row_W(xi, tau, p, beta):
    s = tau * (1.0 - beta) * p / 2.0
    w = np.where(
        xi < beta * p / 2.0,
        (1.0 - beta) * xi,
        np.where(
            xi < beta * p / 2.0 + s,
            beta * (1.0 - beta) * p / 2.0 - beta * (xi - beta * p / 2.0),
            np.where(xi < beta * p + s, (1.0 - beta) * xi - s, beta * p - beta * xi),
        ),
    )
    return w


def row_Wtau(xi, tau, p, beta):
    """d W / d tau (tau normalized to [0,1])."""
    s = tau * (1.0 - beta) * p / 2.0
    mig = (xi >= beta * p / 2.0 + s) & (xi < beta * p + s)
    return np.where(mig, -(1.0 - beta) * p / 2.0, 0.0)


def saw_W(xi, p, beta):
    """Mean-zero sawtooth: slope (1-beta) on [0, beta p), slope -beta after."""
    return np.where(xi < beta * p, (1.0 - beta) * xi, beta * p - beta * xi)


def saw_pattern(xi, p, beta):
    return xi < beta * p


# ---------------------------------------------------------------------------
# split cell for the second order construction: the parent plus-band keeps a
# pinned lower edge while its upper edge recedes, and a plus wedge grows in
# the middle of the minus band.  Both minus regions keep constant width
# (1-beta) p / 2; only the first carries a tau-derivative.
# ---------------------------------------------------------------------------


def _split_edges(tau, p, beta):
    a = beta * p * (1.0 - tau / 2.0)
    w1 = (1.0 + beta) * p / 2.0 - (beta * p / 2.0) * tau
    w2 = (1.0 + beta) * p / 2.0 * np.ones_like(np.asarray(tau, dtype=float))
    return a, w1, w2


def split_region(xi, tau, p, beta):
    """0 = plus parent, 1 = minus V1, 2 = plus wedge, 3 = minus V2."""
    a, w1, w2 = _split_edges(tau, p, beta)
    return np.where(xi < a, 0, np.where(xi < w1, 1, np.where(xi < w2, 2, 3)))


def split_pattern(xi, tau, p, beta):
    r = split_region(xi, tau, p, beta)
    return (r == 0) | (r == 2)


def split_W(xi, tau, p, beta):
    a, w1, w2 = _split_edges(tau, p, beta)
    r = split_region(xi, tau, p, beta)
    w = np.where(
        r == 0,
        (1.0 - beta) * xi,
        np.where(
            r == 1,
            a - beta * xi,
            np.where(r == 2, (1.0 - beta) * xi + a - w1, a + (w2 - w1) - beta * xi),
        ),
    )
    return w


def split_Wtau(xi, tau, p, beta):
    r = split_region(xi, tau, p, beta)
    return np.where(r == 1, -beta * p / 2.0, 0.0)


# ---------------------------------------------------------------------------
# interface families: congruent segment bundles with closed-form measures
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class IfaceFamily:
    """``count`` congruent straight interfaces with physical edge vector
    ``edge`` and jump magnitude ``jump_mag`` (Frobenius)."""

    count: float
    edge: np.ndarray  # physical (dx1, dx2)
    jump_mag: float
    label: str = ""

    def tv(self, nu) -> float:
        e = self.edge
        n_len = np.array([-e[1], e[0]])
        return self.count * abs(float(n_len[0] * nu[0] + n_len[1] * nu[1])) * self.jump_mag

    def total_length(self) -> float:
        return self.count * float(np.hypot(*self.edge))


def families_tv(families, nu) -> float:
    nu = np.asarray(nu, dtype=float)
    return float(sum(f.tv(nu) for f in families))


def families_full_tv(families) -> float:
    return float(sum(f.total_length() * f.jump_mag for f in families))


# ---------------------------------------------------------------------------
# band stack: the one-half refinement schedule shared by all assemblies
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Band:
    kind: str  # "row" | "split" | "lam" | "cut"
    lo: float  # offset from the coarse midline, along the refinement axis
    hi: float
    p: float

    @property
    def t(self) -> float:
        return self.hi - self.lo


#: default generation depth; fixed (not epsilon dependent) so the truncated
#: geometric sums entering the prefactors are identical across a sweep.
#: Deep rows are essentially free: the per-band energies are closed forms
#: and both the added elastic (4 theta)^-j and the squeezed-closure cost
#: decay geometrically with depth.
DEEP_GENERATIONS = 24


def schedule_bands(
    extent_half: float,
    L_osc: float,
    N: int,
    theta: float,
    beta: float,
    j_gens: Optional[int] = None,
    row_kind: str = "row",
) -> list[Band]:
    """Rows j = 0..j_gens with thickness (1-theta) extent theta^j, then an
    unbranched laminate through the remaining gap, then the amplitude-decay
    band sized to the finest sawtooth amplitude.

    ``j_gens = None`` uses the fixed deep schedule DEEP_GENERATIONS.
    """
    if not 0.25 < theta < 0.5:
        raise InvalidParameterError("theta must lie in (1/4, 1/2)")
    if j_gens is None:
        j_gens = DEEP_GENERATIONS
    bands = []
    off = 0.0
    p = L_osc / N
    for j in range(j_gens + 1):
        t = (1.0 - theta) * extent_half * theta**j
        bands.append(Band(row_kind, off, off + t, p))
        off += t
        p /= 2.0
    gap_total = extent_half - off
    amp = beta * (1.0 - beta) * p
    delta_cl = min(amp / max(np.sqrt(beta * (1.0 - beta)), 1e-9), gap_total)
    if gap_total - delta_cl > 1e-15 * extent_half:
        bands.append(Band("lam", off, extent_half - delta_cl, p))
    bands.append(Band("cut", extent_half - delta_cl, extent_half, p))
    return bands


@dataclass
class Profile:
    """Mirrored branched profile on (0, L_osc) x (0, extent) in local
    (oscillation, refinement) coordinates; refinement proceeds from the
    midline toward both boundaries."""

    L_osc: float
    extent: float
    beta: float
    bands: list  # upper-half schedule, offsets from the midline
    row_kind: str = "row"

    def _locate(self, y):
        """Fold about the midline and bucket into bands.

        Returns (band_index, tau) with tau in [0,1] increasing toward the
        outer boundary.
        """
        mid = self.extent / 2.0
        y_off = np.abs(np.asarray(y, dtype=float) - mid)
        his = np.array([b.hi for b in self.bands])
        idx = np.searchsorted(his, y_off, side="left")
        idx = np.clip(idx, 0, len(self.bands) - 1)
        los = np.array([b.lo for b in self.bands])
        ts = his - los
        tau = (y_off - los[idx]) / ts[idx]
        return idx, np.clip(tau, 0.0, 1.0)

    def _cell_funcs(self):
        if self.row_kind == "row":
            return row_W, row_pattern, row_Wtau
        return split_W, split_pattern, split_Wtau

    def W(self, xi, y):
        fW, _, _ = self._cell_funcs()
        xi = np.asarray(xi, dtype=float)
        idx, tau = self._locate(y)
        out = np.zeros_like(xi, dtype=float)
        for i, b in enumerate(self.bands):
            m = idx == i
            if not np.any(m):
                continue
            xm = np.mod(xi[m], b.p)
            if b.kind in ("row", "split"):
                out[m] = fW(xm, tau[m], b.p, self.beta)
            elif b.kind == "lam":
                out[m] = saw_W(xm, b.p, self.beta)
            else:
                out[m] = saw_W(xm, b.p, self.beta) * (1.0 - tau[m])
        return out

    def pattern(self, xi, y):
        """True on the plus phase."""
        _, fP, _ = self._cell_funcs()
        xi = np.asarray(xi, dtype=float)
        idx, tau = self._locate(y)
        out = np.zeros(xi.shape, dtype=bool)
        for i, b in enumerate(self.bands):
            m = idx == i
            if not np.any(m):
                continue
            xm = np.mod(xi[m], b.p)
            if b.kind in ("row", "split"):
                out[m] = fP(xm, tau[m], b.p, self.beta)
            else:
                out[m] = saw_pattern(xm, b.p, self.beta)
        return out

    def band_at(self, y):
        idx, tau = self._locate(y)
        return idx, tau

    def gradW(self, xi, y):
        """Exact (dW/dxi, dW/dy); the mirror fold flips the y-derivative."""
        fW, fP, fT = self._cell_funcs()
        xi = np.asarray(xi, dtype=float)
        y = np.asarray(y, dtype=float)
        idx, tau = self._locate(y)
        sign = np.where(y >= self.extent / 2.0, 1.0, -1.0)
        dxi = np.zeros_like(xi, dtype=float)
        dy = np.zeros_like(xi, dtype=float)
        beta = self.beta
        for i, b in enumerate(self.bands):
            m = idx == i
            if not np.any(m):
                continue
            xm = np.mod(xi[m], b.p)
            if b.kind in ("row", "split"):
                plus = fP(xm, tau[m], b.p, beta)
                dxi[m] = np.where(plus, 1.0 - beta, -beta)
                dy[m] = fT(xm, tau[m], b.p, beta) / b.t * sign[m]
            elif b.kind == "lam":
                dxi[m] = np.where(saw_pattern(xm, b.p, beta), 1.0 - beta, -beta)
            else:
                plus = saw_pattern(xm, b.p, beta)
                dxi[m] = np.where(plus, 1.0 - beta, -beta) * (1.0 - tau[m])
                dy[m] = -saw_W(xm, b.p, beta) / b.t * sign[m]
        return dxi, dy

    # -- closed-form energy pieces (per side; callers multiply jumps in) --

    def elastic_scalar(self) -> float:
        """int (misfit)^2 for unit jump amplitude: both mirror halves."""
        beta = self.beta
        total = 0.0
        for b in self.bands:
            cells = self.L_osc / b.p
            if b.kind == "row":
                total += cells * beta * (1.0 - beta) ** 2 * b.p**3 / (8.0 * b.t)
            elif b.kind == "split":
                total += cells * beta**2 * (1.0 - beta) * b.p**3 / (8.0 * b.t)
            elif b.kind == "cut":
                amp2 = (beta * (1.0 - beta) * b.p) ** 2 / 3.0
                total += self.L_osc * (
                    beta * (1.0 - beta) * b.t / 3.0 + amp2 / max(b.t, 1e-300)
                )
        return 2.0 * total

    def interface_families(self, axis_osc: int, jump_mag: float) -> list[IfaceFamily]:
        """Physical interface bundles for both mirror halves.

        ``axis_osc`` = 0 when the oscillation runs along x1, 1 when along x2.
        Edge vectors are reported in physical (dx1, dx2) components.
        """

        def phys(d_osc, d_cross):
            return (
                np.array([d_osc, d_cross]) if axis_osc == 0 else np.array([d_cross, d_osc])
            )

        beta = self.beta
        fams = []
        for b in self.bands:
            cells = self.L_osc / b.p
            if b.kind == "row":
                fams.append(
                    IfaceFamily(2 * cells * 2, phys(0.0, b.t), jump_mag, "row-vertical")
                )
                # doubling edges tilt oppositely on the two mirror halves
                for sgn in (+1.0, -1.0):
                    fams.append(
                        IfaceFamily(
                            2 * cells,
                            phys((1.0 - beta) * b.p / 2.0, sgn * b.t),
                            jump_mag,
                            "row-oblique",
                        )
                    )
            elif b.kind == "split":
                fams.append(
                    IfaceFamily(2 * cells * 2, phys(0.0, b.t), jump_mag, "split-vertical")
                )
                for sgn in (+1.0, -1.0):
                    fams.append(
                        IfaceFamily(
                            2 * cells,
                            phys(-beta * b.p / 2.0, sgn * b.t),
                            jump_mag,
                            "split-oblique",
                        )
                    )
            else:  # lam / cut keep the laminate teeth
                fams.append(
                    IfaceFamily(2 * cells * 2, phys(0.0, b.t), jump_mag, f"{b.kind}-vertical")
                )
        return fams

    def segment_count(self) -> int:
        total = 0
        for b in self.bands:
            per = 4 if b.kind in ("row", "split") else 2
            total += 2 * per * int(round(self.L_osc / b.p))
        return total

    def materialize_segments(self, axis_osc: int):
        """Explicit (p0, p1, sign) segment coordinates for both halves;
        sign = +1 when the plus phase lies on the rot90 normal side."""
        mid = self.extent / 2.0
        beta = self.beta
        chunks = []

        def emit(u0, v0, u1, v1, sign):
            # u*, v* arrays of equal length
            if axis_osc == 0:
                chunks.append((u0, v0, u1, v1, sign))
            else:
                chunks.append((v0, u0, v1, u1, sign))

        for b in self.bands:
            cells = int(round(self.L_osc / b.p))
            u = np.arange(cells) * b.p
            ones = np.ones(cells)
            for side in (+1, -1):
                y0 = (mid + side * b.lo) * ones
                y1 = (mid + side * b.hi) * ones
                if b.kind == "row":
                    s1 = (1.0 - beta) * b.p / 2.0
                    emit(u, y0, u, y1, +1)
                    emit(u + beta * b.p / 2.0, y0, u + beta * b.p / 2.0, y1, -1)
                    emit(u + beta * b.p / 2.0, y0, u + beta * b.p / 2.0 + s1, y1, +1)
                    emit(u + beta * b.p, y0, u + beta * b.p + s1, y1, -1)
                elif b.kind == "split":
                    emit(u, y0, u, y1, +1)
                    emit(u + beta * b.p, y0, u + beta * b.p / 2.0, y1, -1)
                    emit(u + (1 + beta) * b.p / 2.0, y0, u + b.p / 2.0, y1, +1)
                    emit(u + (1 + beta) * b.p / 2.0, y0, u + (1 + beta) * b.p / 2.0, y1, -1)
                else:
                    emit(u, y0, u, y1, +1)
                    emit(u + beta * b.p, y0, u + beta * b.p, y1, -1)
        x0 = np.concatenate([c[0] for c in chunks])
        y0 = np.concatenate([c[1] for c in chunks])
        x1 = np.concatenate([c[2] for c in chunks])
        y1 = np.concatenate([c[3] for c in chunks])
        signs = np.concatenate([np.full(len(c[0]), c[4]) for c in chunks])
        return [
            ((x0[i], y0[i]), (x1[i], y1[i]), signs[i]) for i in range(len(signs))
        ]


def paper_generations(L: float, H: float, N: int) -> int:
    """j0 with j0 + 1 ~ log2(H N / L), floored at 0."""
    return max(0, int(round(np.log2(max(H * N / L, 1.0)))))


def two_well_profile(L: float, H: float, N: int, theta: float, beta: float,
                     j_gens: Optional[int] = None, row_kind: str = "row") -> Profile:
    bands = schedule_bands(H / 2.0, L, N, theta, beta, j_gens, row_kind=row_kind)
    return Profile(L, H, beta, bands, row_kind=row_kind)
