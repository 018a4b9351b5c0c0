"""Exact spectral sums of the constructions' phase indicators.

Every construction is, line by line along a coordinate axis, a periodic
comb of jumps.  For a p-periodic pattern on the unit torus with per-period
breakpoints t_a (fractions of p) and jumps D_a, the nonzero modes sit at
k = f m (f = 1/p) with

  sum_{k != 0} |k|^{2s} |c_k|^2 = f^{2s} / (2 pi^2) sum_{m>=1} m^{2s-2} |S(m)|^2,
  S(m) = sum_a D_a e^{-2 pi i m t_a}.

The m-sum is truncated and closed with the zeta tail using the
equidistribution limit <|S|^2> -> sum_a |D_a|^2.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import zeta

M_TRUNC = 4096
_GLN, _GLW = np.polynomial.legendre.leggauss(16)
GL_T = 0.5 * (_GLN + 1.0)
GL_W = 0.5 * _GLW


@dataclass(frozen=True)
class Comb:
    """One family of identical per-line jump combs.

    weight: total line measure carrying this comb (integrates the
            transverse coordinate, both mirror halves included);
    freq:   base frequency f = 1/period;
    t_hat:  (n_quad, n_breaks) breakpoint fractions of the period;
    jumps:  (n_breaks,) signed jump magnitudes;
    wq:     quadrature weights over the comb family (sums to 1).
    """

    weight: float
    freq: float
    t_hat: np.ndarray
    jumps: np.ndarray
    wq: np.ndarray


def comb_line_sum(comb: Comb, s: float, m_trunc: int = M_TRUNC) -> float:
    """Per unit line measure: sum_k |k|^{2s} |c_k|^2 for one comb."""
    m = np.arange(1, m_trunc + 1)
    phases = np.exp(-2j * np.pi * m[None, None, :] * comb.t_hat[:, :, None])
    S = np.einsum("b,qbm->qm", comb.jumps.astype(complex), phases)
    mw = m ** (2.0 * s - 2.0)
    partial = np.einsum("q,qm,m->", comb.wq, np.abs(S) ** 2, mw)
    tail = float(np.sum(comb.jumps**2)) * (zeta(2.0 - 2.0 * s) - float(np.sum(mw)))
    total = (partial + tail) * comb.freq ** (2.0 * s) / (2.0 * np.pi**2)
    return float(total)


def combs_surface_sum(combs, s: float, rel_tol: float = 1e-6) -> float:
    """sum_k |k . e_axis|^{2s} |chi_hat(k)|^2 from a comb decomposition.

    Combs are prescreened by the upper bound weight f^{2s} sum|D|^2 zeta /
    (2 pi^2); the negligible tail is added as that bound instead of being
    evaluated mode by mode.
    """
    combs = list(combs)
    z = None
    bounds = []
    for c in combs:
        if z is None:
            z = float(zeta(2.0 - 2.0 * s))
        bounds.append(
            c.weight * c.freq ** (2.0 * s) * float(np.sum(c.jumps**2)) * z / (2.0 * np.pi**2)
        )
    order = np.argsort(bounds)[::-1]
    total_bound = float(np.sum(bounds))
    out = 0.0
    acc_bound = 0.0
    for i in order:
        if total_bound - acc_bound < rel_tol * max(total_bound, 1e-300):
            out += total_bound - acc_bound
            break
        out += combs[i].weight * comb_line_sum(combs[i], s)
        acc_bound += bounds[i]
    return float(out)


def _row_combs(p: float, beta: float, t: float, weight_per_t: float, jump: float):
    """Combs of a frequency-doubling row: per-line breakpoints
    {0, beta p/2, beta p/2 + s, beta p + s} with s = tau (1-beta) p/2."""
    s_hat = GL_T * (1.0 - beta) / 2.0
    t_hat = np.stack(
        [
            np.zeros_like(s_hat),
            np.full_like(s_hat, beta / 2.0),
            beta / 2.0 + s_hat,
            beta + s_hat,
        ],
        axis=1,
    )
    jumps = np.array([jump, -jump, jump, -jump])
    return [Comb(weight_per_t * t, 1.0 / p, t_hat, jumps, GL_W.copy())]


def _lam_combs(p: float, beta: float, t: float, weight_per_t: float, jump: float):
    t_hat = np.array([[0.0, beta]])
    jumps = np.array([jump, -jump])
    return [Comb(weight_per_t * t, 1.0 / p, t_hat, jumps, np.array([1.0]))]


def profile_combs(profile, jump: float):
    """Comb decomposition of a branched profile along its oscillation axis.

    Lines run along the oscillation coordinate; each one lies in a single
    band, so the band schedule gives the transverse measure directly
    (factor 2 for the mirror half).
    """
    combs = []
    for b in profile.bands:
        if b.kind in ("row", "split"):
            # split rows have breakpoints {0, a, w1, w2}; a and w1 recede
            if b.kind == "row":
                combs += _row_combs(b.p, profile.beta, b.t, 2.0, jump)
            else:
                beta = profile.beta
                a_hat = beta * (1.0 - GL_T / 2.0)
                w1_hat = (1.0 + beta) / 2.0 - (beta / 2.0) * GL_T
                t_hat = np.stack(
                    [
                        np.zeros_like(a_hat),
                        a_hat,
                        w1_hat,
                        np.full_like(a_hat, (1.0 + beta) / 2.0),
                    ],
                    axis=1,
                )
                jumps = np.array([jump, -jump, jump, -jump])
                combs.append(Comb(2.0 * b.t, 1.0 / b.p, t_hat, jumps, GL_W.copy()))
        else:
            combs += _lam_combs(b.p, profile.beta, b.t, 2.0, jump)
    return combs


def second_order_inner_combs(outer, inners, jump: float = 1.0):
    """Inner-teeth combs of the second-order construction along x1.

    A fixed-x2 line meets the inner band of one V region as a burst of
    teeth of length t_b (the outer band thickness); a burst of a locally
    periodic comb carries the global comb's spectral density times its
    length.  Weight per (outer band, region, inner band):

      (x2 fraction of lines through the inner band: 2 ib.t / p_b)
      x (burst length t_b) x (outer mirror: 2).

    Cross terms between distinct bursts on one line are dropped
    (incoherent approximation, validated against the grid DFT).
    """
    combs = []
    for b, asms in zip(outer.bands, inners):
        for asm in asms:
            for ib in asm.profile.bands:
                w = (2.0 * ib.t / b.p) * b.t * 2.0
                if ib.kind == "row":
                    combs += _row_combs(ib.p, 0.5, 1.0, w, jump)
                else:
                    combs += _lam_combs(ib.p, 0.5, 1.0, w, jump)
    return combs
