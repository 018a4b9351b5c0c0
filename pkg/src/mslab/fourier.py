"""Periodic spectral machinery: exact elastic minimization, cone multipliers,
and numeric certification of the frequency-localization inequalities.

Conventions: forward transform c(k) = h^d * sum_x f(x) e^{-2 pi i k.x}
(so Parseval holds exactly on the grid), integer frequencies
k in [-n/2, n/2)^d stored in FFT order.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from mslab import fields as flds
from mslab._bumps import phi_cutoff
from mslab.errors import InvalidParameterError
from mslab.fields import PhaseField, as_direction

#: default factor M in the reduced truncation lambda_2 = M * mu * lambda
COMMUTATOR_M = 4.0


# ---------------------------------------------------------------------------
# spectra
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Spectrum:
    """DFT coefficients of a matrix-valued periodic grid field.

    ``coeffs`` has shape (n,)*d + (d, d) in FFT frequency order.
    """

    coeffs: np.ndarray

    @property
    def d(self) -> int:
        return self.coeffs.ndim - 2

    @property
    def n(self) -> int:
        return self.coeffs.shape[0]

    def freqs(self) -> list[np.ndarray]:
        n = self.n
        return [np.fft.fftfreq(n, d=1.0 / n) for _ in range(self.d)]

    def freq_grids(self) -> list[np.ndarray]:
        return np.meshgrid(*self.freqs(), indexing="ij")

    def mode_power(self) -> np.ndarray:
        """|c(k)|^2 with Frobenius magnitude across matrix entries."""
        return np.sum(np.abs(self.coeffs) ** 2, axis=(-2, -1))

    def total_power(self) -> float:
        return float(self.mode_power().sum())


def _field_values(chi) -> np.ndarray:
    if isinstance(chi, PhaseField):
        return chi.values()
    return np.asarray(chi, dtype=float)


def dft_periodic(chi) -> Spectrum:
    """Forward transform of a PhaseField or raw (n,)*d+(d,d) array."""
    vals = _field_values(chi)
    d = vals.ndim - 2
    n = vals.shape[0]
    flds._check_power_of_two(n)
    coeffs = np.fft.fftn(vals, axes=tuple(range(d))) * (1.0 / n) ** d
    return Spectrum(coeffs)


def idft_periodic(spec: Spectrum) -> np.ndarray:
    d = spec.d
    n = spec.n
    vals = np.fft.ifftn(spec.coeffs, axes=tuple(range(d))) * n**d
    return vals.real


def piecewise_constant_spectrum(chi) -> Spectrum:
    """Exact Fourier coefficients of the cellwise-constant field at |k| < n/2.

    Applies the per-axis factor e^{-i pi k/n} sinc(pi k/n) to the sample
    DFT; exact for fields that are constant on grid cells.
    """
    spec = dft_periodic(chi)
    n = spec.n
    k = np.fft.fftfreq(n, d=1.0 / n)
    x = np.pi * k / n
    factor1d = np.exp(-1j * x) * np.sinc(k / n)
    coeffs = spec.coeffs.copy()
    for a in range(spec.d):
        shape = [1] * coeffs.ndim
        shape[a] = n
        coeffs = coeffs * factor1d.reshape(shape)
    return Spectrum(coeffs)


# ---------------------------------------------------------------------------
# elastic minimization over periodic deformations
# ---------------------------------------------------------------------------


def periodic_elastic_min(chi) -> tuple[float, np.ndarray]:
    """Exact minimum of int |grad u - chi|^2 over periodic u, diagonal chi.

    Returns (value, u_hat) with
      value = |c(0)|^2 + sum_{k != 0} sum_j ((|k|^2 - k_j^2)/|k|^2) |c_jj(k)|^2
    and the minimizing spectrum u_hat(k) = c(k) k / (2 pi i |k|^2).
    """
    vals = _field_values(chi)
    d = vals.ndim - 2
    off = vals - np.einsum("...ii->...i", vals)[..., None] * np.eye(d)
    if np.max(np.abs(off)) > 1e-12:
        raise InvalidParameterError("periodic_elastic_min requires diagonal chi")
    spec = dft_periodic(vals)
    K = spec.freq_grids()
    k2 = sum(Ka**2 for Ka in K)
    value = 0.0
    zero = tuple([0] * d)
    c0 = spec.coeffs[zero]
    value += float(np.sum(np.abs(c0) ** 2))
    k2_safe = np.where(k2 == 0, 1.0, k2)
    for j in range(d):
        mult = (k2 - K[j] ** 2) / k2_safe
        mult[zero] = 0.0
        value += float(np.sum(mult * np.abs(spec.coeffs[..., j, j]) ** 2))
    u_hat = np.zeros(spec.coeffs.shape[:-1], dtype=complex)
    kvec = np.stack(K, axis=-1)
    u_hat = np.einsum("...ij,...j->...i", spec.coeffs, kvec) / (
        2j * np.pi * k2_safe[..., None]
    )
    u_hat[zero] = 0.0
    return value, u_hat


# ---------------------------------------------------------------------------
# cone multipliers
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConeSpec:
    """Truncated frequency cone around the k_axis direction.

    ``axis`` is 1-based; the truncated cone is
    {k : |k|^2 - k_axis^2 <= mu^2 |k|^2, |k_axis| <= 2 lambda / |nu1_ref|}.
    """

    axis: int
    mu: float
    lam: float = np.inf
    nu1_ref: float = 1.0
    truncated: bool = True

    def __post_init__(self):
        if not 0.0 < self.mu < 1.0:
            raise InvalidParameterError("mu must lie in (0,1)")
        if self.truncated and not np.isfinite(self.lam):
            raise InvalidParameterError("truncated cone needs a finite lambda")
        if self.truncated and self.nu1_ref == 0.0:
            raise InvalidParameterError("nu1_ref must be nonzero for the truncation")

    def axial_cut(self) -> float:
        return 2.0 * self.lam / abs(self.nu1_ref) if self.truncated else np.inf

    def contains(self, K: list[np.ndarray]) -> np.ndarray:
        j = self.axis - 1
        k2 = sum(Ka**2 for Ka in K)
        inside = (k2 - K[j] ** 2) <= self.mu**2 * k2
        if self.truncated:
            inside &= np.abs(K[j]) <= self.axial_cut()
        return inside


def multiplier_values(cone: ConeSpec, K: list[np.ndarray], smooth: bool = True) -> np.ndarray:
    """Smooth (or sharp) multiplier: 1 on the cone, 0 outside the doubled cone."""
    j = cone.axis - 1
    k2 = sum(Ka**2 for Ka in K)
    if not smooth:
        return cone.contains(K).astype(float)
    knorm = np.sqrt(k2)
    base = phi_cutoff(2.0 * knorm)  # equals 1 at k = 0, vanishes for |k| >= 1
    transverse = np.sqrt(np.maximum(k2 - K[j] ** 2, 0.0))
    arg1 = np.where(knorm > 0, transverse / (cone.mu * np.maximum(knorm, 1e-300)), 0.0)
    m = (1.0 - base) * phi_cutoff(arg1)
    if cone.truncated:
        m = m * phi_cutoff(np.abs(cone.nu1_ref) * np.abs(K[j]) / (2.0 * cone.lam))
    m = m + base
    return np.clip(m, 0.0, 1.0)


def apply_cone_multiplier(spec: Spectrum, cone: ConeSpec, smooth: bool = True) -> Spectrum:
    K = spec.freq_grids()
    m = multiplier_values(cone, K, smooth=smooth)
    return Spectrum(spec.coeffs * m[..., None, None])


# ---------------------------------------------------------------------------
# psi envelope
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PsiEnvelope:
    """psi_t(x) = max(|x|, |x|^t); composition law psi_t1 o psi_t2 = psi_(t1 t2)."""

    t: float

    def __post_init__(self):
        if not 0.0 < self.t <= 1.0:
            raise InvalidParameterError("t must lie in (0, 1]")

    def __call__(self, x):
        x = np.abs(np.asarray(x, dtype=float))
        return np.maximum(x, x**self.t)


def psi_envelope(t: float, x) -> float:
    return float(PsiEnvelope(t)(np.asarray(x)))


# ---------------------------------------------------------------------------
# diagnostics: high/low frequency control and the commutator residual
# ---------------------------------------------------------------------------


@dataclass
class DiagnosticsRecord:
    """Container for the frequency-control ratios; serializes to JSON."""

    n: int
    d: int
    nu: list
    lam: float
    lam_bar: float
    tail: float
    tail_ratio: float
    low: float
    low_ratio: Optional[float]
    elastic_min: float
    diff_quotients: list
    tv_nu_torus: float
    sup_norm: float
    passes: dict = field(default_factory=dict)

    def to_json(self) -> str:
        payload = dict(self.__dict__)
        return json.dumps(payload, indent=2)


def high_low_freq_check(
    chi,
    nu,
    lam: float,
    lam_bar: float,
    elastic: Optional[float] = None,
    tv_nu: Optional[float] = None,
    max_shift_cells: int = 4,
) -> DiagnosticsRecord:
    """High-frequency tail, low-frequency mass, and difference-quotient checks.

    tail      = sum_{|k.nu| >= lam} |c(k)|^2, reported against
                lam^-1 ||chi||_inf (||D_nu chi|| + ||chi||_inf Per),
    low       = sum_{|k_1| <= lam_bar} |c_11(k)|^2, against lam_bar^2 E_el,
    quotients = int |chi(x + m h nu) - chi(x)| / (m h) for lattice shifts
                (axis-aligned nu only).
    """
    if lam <= 0:
        raise InvalidParameterError("lambda must be positive")
    nu = as_direction(nu).nu
    vals = _field_values(chi)
    d = vals.ndim - 2
    n = vals.shape[0]
    h = 1.0 / n
    spec = dft_periodic(vals)
    K = spec.freq_grids()
    kdotnu = sum(K[a] * nu[a] for a in range(d))
    power = spec.mode_power()
    tail = float(power[np.abs(kdotnu) >= lam].sum())

    sup = float(np.sqrt(np.sum(vals**2, axis=(-2, -1))).max())
    per = 2.0 * d
    if tv_nu is None:
        # grid slicing on the torus (periodic wrap included)
        sums = []
        area = h ** (d - 1)
        for a in range(d):
            diff = np.roll(vals, -1, axis=a) - vals
            sums.append(float(np.sqrt(np.sum(diff**2, axis=(-2, -1))).sum() * area))
        tv_nu = float(sum(abs(nu[a]) * sums[a] for a in range(d)))
    denom = sup * (tv_nu + sup * per)
    tail_ratio = tail * lam / denom if denom > 0 else 0.0

    if elastic is None:
        try:
            elastic, _ = periodic_elastic_min(vals)
        except InvalidParameterError:
            elastic = None
    low = float(power[np.abs(K[0]) <= lam_bar].sum()) if lam_bar > 0 else 0.0
    low11 = float(
        (np.abs(spec.coeffs[..., 0, 0]) ** 2)[np.abs(K[0]) <= lam_bar].sum()
    )
    low_ratio = None
    if elastic is not None and elastic > 0 and lam_bar > 1:
        low_ratio = low11 / (lam_bar**2 * elastic)

    quotients = []
    axis = int(np.argmax(np.abs(nu)))
    axis_aligned = abs(abs(nu[axis]) - 1.0) < 1e-12
    if axis_aligned:
        for m in range(1, max_shift_cells + 1):
            shifted = np.roll(vals, -m, axis=axis)
            l1 = float(np.sqrt(np.sum((shifted - vals) ** 2, axis=(-2, -1))).sum() * h**d)
            quotients.append({"shift": m * h, "quotient": l1 / (m * h)})

    passes = {
        "tail_within_lemma": bool(tail * lam <= max(4.0, 8.0) * denom + 1e-12),
        "diff_quotient": all(
            q["quotient"] <= tv_nu + 2.0 * h * tv_nu + 1e-12 for q in quotients
        )
        if quotients
        else None,
    }
    return DiagnosticsRecord(
        n=n,
        d=d,
        nu=list(map(float, nu)),
        lam=float(lam),
        lam_bar=float(lam_bar),
        tail=tail,
        tail_ratio=float(tail_ratio),
        low=low11,
        low_ratio=None if low_ratio is None else float(low_ratio),
        elastic_min=float(elastic) if elastic is not None else float("nan"),
        diff_quotients=quotients,
        tv_nu_torus=float(tv_nu),
        sup_norm=sup,
        passes=passes,
    )


def _l2_norm(vals: np.ndarray) -> float:
    n = vals.shape[0]
    d = vals.ndim
    return float(np.sqrt(np.sum(vals**2) / n**d))


def commutator_residual(
    chi,
    g_coeffs,
    alpha,
    mu: float,
    lam: float,
    gamma: float = 0.1,
    nu=None,
    C_cal: float = 1.0,
    controlled_axis: int = 1,
    smooth: bool = True,
) -> dict:
    """Residual of the spectral-truncation transfer through a quadratic relation.

    Checks sum_j alpha_j chi_jj = g(chi_11) pointwise (1e-10), then reports

      lhs = || sum_j alpha_j m_{j,mu}(D) chi_jj - g(m_{1,mu,lam}(D) chi_11) ||_L2
      rhs = C_cal psi_{1-gamma}(|| chi_11 - m_{1,mu,lam}(D) chi_11 ||_L2)
            + sum_j |alpha_j| || chi_jj - m_{j,mu}(D) chi_jj ||_L2

    and pass = lhs <= rhs.  ``g_coeffs`` are polynomial coefficients
    (c0, c1, c2); ``alpha`` has one weight per remaining diagonal entry.
    """
    if not 0.0 < gamma < 1.0:
        raise InvalidParameterError("gamma must lie in (0,1)")
    vals = _field_values(chi)
    d = vals.ndim - 2
    n = vals.shape[0]
    ax0 = controlled_axis - 1
    others = [j for j in range(d) if j != ax0]
    c0, c1, c2 = (list(g_coeffs) + [0.0, 0.0, 0.0])[:3]

    def g(x):
        return c0 + c1 * x + c2 * x**2

    f1 = vals[..., ax0, ax0]
    combo = sum(alpha[i] * vals[..., j, j] for i, j in enumerate(others))
    if np.max(np.abs(combo - g(f1))) > 1e-10:
        raise InvalidParameterError("relation sum alpha_j chi_jj = g(chi_11) violated")

    nu1_ref = 1.0 if nu is None else float(as_direction(nu).nu[ax0])
    spec = dft_periodic(vals)
    K = spec.freq_grids()
    cone1 = ConeSpec(axis=controlled_axis, mu=mu, lam=lam, nu1_ref=nu1_ref, truncated=True)
    m1 = multiplier_values(cone1, K, smooth=smooth)
    f1_hat = spec.coeffs[..., ax0, ax0]
    f1_trunc = np.fft.ifftn(np.fft.fftn(f1) * m1).real

    lhs_field = -g(f1_trunc)
    rhs = C_cal * float(PsiEnvelope(1.0 - gamma)(_l2_norm(f1 - f1_trunc)))
    for i, j in enumerate(others):
        conej = ConeSpec(axis=j + 1, mu=mu, truncated=False)
        mj = multiplier_values(conej, K, smooth=smooth)
        fj = vals[..., j, j]
        fj_trunc = np.fft.ifftn(np.fft.fftn(fj) * mj).real
        lhs_field = lhs_field + alpha[i] * fj_trunc
        rhs += abs(alpha[i]) * _l2_norm(fj - fj_trunc)
    lhs = _l2_norm(lhs_field)
    return {
        "lhs": lhs,
        "rhs": float(rhs),
        "pass": bool(lhs <= rhs),
        "trunc_error_f1": _l2_norm(f1 - f1_trunc),
        "mu": mu,
        "lam": lam,
        "gamma": gamma,
    }


def disjoint_support_fact(n: int, d: int, mu: float, smooth: bool = True) -> bool:
    """m_{j,mu}(k) m_{l,mu}(k) = 0 for j != l and k != 0, exhaustively on the lattice."""
    freqs = [np.fft.fftfreq(n, d=1.0 / n) for _ in range(d)]
    K = np.meshgrid(*freqs, indexing="ij")
    mults = [
        multiplier_values(ConeSpec(axis=j + 1, mu=mu, truncated=False), K, smooth=smooth)
        for j in range(d)
    ]
    zero = tuple([0] * d)
    ok = True
    for j in range(d):
        for l in range(j + 1, d):
            prod = mults[j] * mults[l]
            prod[zero] = 0.0
            ok &= bool(np.max(np.abs(prod)) == 0.0)
    return ok


def cone_inclusion_fact(n: int, d: int, mu: float, lam: float, nu) -> bool:
    """{|k|^2 - k_1^2 <= mu^2|k|^2, |k.nu| <= lam} lies in the truncated cone
    with axial bound 2 lam / |nu_1|, checked on the whole lattice (mu < |nu1|/2)."""
    nu = as_direction(nu).nu
    if not mu < abs(nu[0]) / 2:
        raise InvalidParameterError("inclusion requires mu < |nu_1| / 2")
    freqs = [np.fft.fftfreq(n, d=1.0 / n) for _ in range(d)]
    K = np.meshgrid(*freqs, indexing="ij")
    k2 = sum(Ka**2 for Ka in K)
    kdotnu = sum(K[a] * nu[a] for a in range(d))
    lhs_set = ((k2 - K[0] ** 2) <= mu**2 * k2) & (np.abs(kdotnu) <= lam)
    rhs_set = np.abs(K[0]) <= 2.0 * lam / abs(nu[0])
    return bool(np.all(rhs_set[lhs_set]))
