"""Stokes and Brinkman fundamental solutions.

All tensors take the separation ``d = x - y`` (pole at ``y``) as their first
argument and broadcast over any leading shape ``(..., 3)``.  The Brinkman
velocity kernel is

    g_jk = (1/8pi) (delta_jk A1(z)/r + d_j d_k A2(z)/r^3),   z = sqrt(alpha) r,

the pressure kernel is the Stokes one, and the stress tensor

    s_jkl = -p_k delta_jl + d_l g_jk + d_j g_lk

is symmetric in ``j, l``.  ``lam`` is the pressure companion of ``s`` (the
pressure of the double layer).

Besides the plain tensors, the module exposes kernels already contracted
with the surface normals that the layer potentials need (velocity, pressure,
gradient and traction of the single and double layer), so quadrature loops
never build the rank-4 stress gradient.

The scalar profiles lose digits to cancellation for small ``z``; below
``Z_SERIES`` they are evaluated from their Taylor series instead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from numpy.typing import ArrayLike, NDArray

FOUR_PI = 4.0 * np.pi
EIGHT_PI = 8.0 * np.pi

#: Crossover between the Taylor series and the closed forms.  The closed
#: forms of d1 and d2 lose about ``4 log10(1/z)`` digits, so the crossover has
#: to sit well above the region where that loss exceeds 1e-12.
Z_SERIES = 0.5
#: Number of Taylor coefficients kept (powers z^0 .. z^(SERIES_TERMS-1)).
SERIES_TERMS = 18

# Each profile is exp(-z) * sum_p c_p z^p + sum_q e_q z^q.
_PROFILES: dict[str, tuple[dict[int, int], dict[int, int]]] = {
    "a1": ({0: 2, -1: 2, -2: 2}, {-2: -2}),
    "a2": ({0: -2, -1: -6, -2: -6}, {-2: 6}),
    "d1": ({0: 2, -1: 6, -2: 6}, {-2: -6, 0: 1}),
    "d2": ({1: 1, 0: 3, -1: 6, -2: 6}, {-2: -6}),
    "d3": ({1: -2, 0: -12, -1: -30, -2: -30}, {-2: 30}),
}
_NAMES = ("a1", "a2", "d1", "d2", "d3")


def _taylor_coefficients(exp_part: dict[int, int], plain: dict[int, int], n: int) -> list[Fraction]:
    """Exact Taylor coefficients of a profile, checking the poles cancel."""
    def coeff(m: int) -> Fraction:
        c = Fraction(plain.get(m, 0))
        for p, cp in exp_part.items():
            if m - p >= 0:
                c += Fraction(cp * (-1) ** (m - p), math.factorial(m - p))
        return c

    for m in (-2, -1):
        if coeff(m) != 0:
            raise AssertionError("profile has a pole at z = 0")
    return [coeff(m) for m in range(n)]


@dataclass(frozen=True)
class _Profile:
    exp_part: tuple[tuple[int, float], ...]
    plain: tuple[tuple[int, float], ...]
    series: NDArray[np.float64]  # ascending powers
    d_exp_part: tuple[tuple[int, float], ...]
    d_plain: tuple[tuple[int, float], ...]
    d_series: NDArray[np.float64]

    @classmethod
    def build(cls, exp_part: dict[int, int], plain: dict[int, int]) -> "_Profile":
        coeffs = _taylor_coefficients(exp_part, plain, SERIES_TERMS + 1)
        series = np.array([float(c) for c in coeffs[:SERIES_TERMS]])
        d_series = np.array([float(m * coeffs[m]) for m in range(1, SERIES_TERMS + 1)])
        # d/dz [c z^p e^-z] = c p z^(p-1) e^-z - c z^p e^-z
        d_exp: dict[int, int] = {}
        for p, c in exp_part.items():
            d_exp[p - 1] = d_exp.get(p - 1, 0) + c * p
            d_exp[p] = d_exp.get(p, 0) - c
        d_plain = {q - 1: e * q for q, e in plain.items() if q != 0}
        return cls(
            tuple((p, float(c)) for p, c in exp_part.items()),
            tuple((q, float(e)) for q, e in plain.items()),
            series,
            tuple((p, float(c)) for p, c in d_exp.items() if c != 0),
            tuple((q, float(e)) for q, e in d_plain.items()),
            d_series,
        )



_PROFILE_TABLE = {name: _Profile.build(*_PROFILES[name]) for name in _NAMES}


def _horner(z: NDArray[np.float64], coeffs: NDArray[np.float64]) -> NDArray[np.float64]:
    out = np.full_like(z, coeffs[-1])
    for c in coeffs[-2::-1]:
        out *= z
        out += c
    return out


def _evaluate_profiles(
    z: NDArray[np.float64], names, derivative: bool = False, cut: float | None = None
) -> list[NDArray[np.float64]]:
    """Evaluate several profiles at flat ``z``, sharing the exponential and inverse powers.

    Points below ``cut`` (default :data:`Z_SERIES`) use the series.
    """
    small = z < (Z_SERIES if cut is None else cut)
    any_small, all_small = bool(small.any()), bool(small.all())
    if not all_small:
        zl = z[~small] if any_small else z
        zi = 1.0 / zl
        zi2 = zi * zi
        powers = {1: zl, 0: 1.0, -1: zi, -2: zi2, -3: zi2 * zi}
        ez = np.exp(-zl)
    zs = z[small] if any_small and not all_small else z
    outs = []
    for name in names:
        prof = _PROFILE_TABLE[name]
        if derivative:
            exp_part, plain, series = prof.d_exp_part, prof.d_plain, prof.d_series
        else:
            exp_part, plain, series = prof.exp_part, prof.plain, prof.series
        if all_small:
            outs.append(_horner(zs, series))
            continue
        poly = sum(c * powers[p] for p, c in exp_part)
        closed = ez * poly + sum(e * powers[q] for q, e in plain)
        if not any_small:
            outs.append(closed)
            continue
        out = np.empty_like(z)
        out[small] = _horner(zs, series)
        out[~small] = closed
        outs.append(out)
    return outs


@dataclass(frozen=True)
class KernelScalarSet:
    """Values of the five radial profiles A1, A2, D1, D2, D3 at ``z``."""

    a1: NDArray[np.float64]
    a2: NDArray[np.float64]
    d1: NDArray[np.float64]
    d2: NDArray[np.float64]
    d3: NDArray[np.float64]

    def as_tuple(self) -> tuple[NDArray[np.float64], ...]:
        return (self.a1, self.a2, self.d1, self.d2, self.d3)


def _as_z(z: ArrayLike) -> NDArray[np.float64]:
    arr = np.asarray(z, dtype=float)
    if np.any(arr < 0) or np.any(~np.isfinite(arr)):
        raise ValueError("z must be finite and non-negative")
    return arr


_CUTS = {"auto": None, "series": np.inf, "closed": 0.0}


def eval_scalar_set(z: ArrayLike, method: str = "auto") -> KernelScalarSet:
    """Evaluate A1, A2, D1, D2, D3 at ``z >= 0`` (scalar or array).

    ``z = 0`` returns the Stokes limits (1, 1, 0, 0, 3).  ``method`` forces
    the Taylor series (``"series"``) or the closed forms (``"closed"``, which
    need ``z > 0``) everywhere; ``"auto"`` switches at :data:`Z_SERIES`.
    """
    if method not in _CUTS:
        raise ValueError("method must be 'auto', 'series' or 'closed'")
    arr = _as_z(z)
    if method == "closed" and np.any(arr == 0):
        raise ValueError("closed forms are singular at z = 0")
    flat = np.atleast_1d(arr).ravel()
    vals = [v.reshape(arr.shape) for v in _evaluate_profiles(flat, _NAMES, cut=_CUTS[method])]
    return KernelScalarSet(*vals)


def eval_scalar_derivatives(z: ArrayLike) -> KernelScalarSet:
    """First derivatives dA1/dz, ..., dD3/dz, packed like :func:`eval_scalar_set`."""
    arr = _as_z(z)
    flat = np.atleast_1d(arr).ravel()
    vals = [v.reshape(arr.shape) for v in _evaluate_profiles(flat, _NAMES, derivative=True)]
    return KernelScalarSet(*vals)


@dataclass(frozen=True)
class KernelTensors:
    """Fundamental tensors at one or many separations.

    ``g`` has shape ``(..., 3, 3)``, ``p`` ``(..., 3)``, ``s`` ``(..., 3, 3, 3)``
    indexed ``[j, k, l]`` and ``lam`` ``(..., 3, 3)``.
    """

    g: NDArray[np.float64]
    p: NDArray[np.float64]
    s: NDArray[np.float64]
    lam: NDArray[np.float64]


def _check_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not np.isfinite(alpha) or alpha < 0:
        raise ValueError(f"alpha must be a finite non-negative number, got {alpha}")
    return alpha


def _separation(d: ArrayLike) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    d = np.asarray(d, dtype=float)
    if d.shape[-1] != 3:
        raise ValueError("separation vectors must have a trailing dimension of 3")
    r = np.sqrt(np.einsum("...i,...i->...", d, d))
    if np.any(r == 0):
        raise ValueError("kernels are singular at zero separation")
    return d, r


_EYE = np.eye(3)


def stokes_tensors(x_minus_y: ArrayLike) -> KernelTensors:
    """Stokeslet, pressure kernel, stresslet and pressure tensor of the Stokes system."""
    d, r = _separation(x_minus_y)
    r_ = r[..., None, None]
    dd = d[..., :, None] * d[..., None, :]
    g = (_EYE / r_ + dd / r_**3) / EIGHT_PI
    p = d / (FOUR_PI * r[..., None] ** 3)
    s = -3.0 / FOUR_PI * dd[..., :, :, None] * d[..., None, None, :] / r[..., None, None, None] ** 5
    lam = (-2.0 * _EYE / r_**3 + 6.0 * dd / r_**5) / FOUR_PI
    return KernelTensors(g, p, s, lam)


def brinkman_tensors(x_minus_y: ArrayLike, alpha: float) -> KernelTensors:
    """Brinkman counterparts of :func:`stokes_tensors`; ``alpha = 0`` returns them exactly."""
    alpha = _check_alpha(alpha)
    if alpha == 0.0:
        return stokes_tensors(x_minus_y)
    d, r = _separation(x_minus_y)
    sc = eval_scalar_set(np.sqrt(alpha) * r)
    r_ = r[..., None, None]
    dd = d[..., :, None] * d[..., None, :]
    g = (_EYE * (sc.a1 / r)[..., None, None] + dd * (sc.a2 / r**3)[..., None, None]) / EIGHT_PI
    p = d / (FOUR_PI * r[..., None] ** 3)
    h1 = (sc.d1 / r**3)[..., None, None, None]
    h2 = (sc.d2 / r**3)[..., None, None, None]
    h3 = (sc.d3 / r**5)[..., None, None, None]
    e = _EYE
    dj = d[..., :, None, None]
    dk = d[..., None, :, None]
    dl = d[..., None, None, :]
    s = -(
        e[:, None, :] * dk * h1
        + (e[:, :, None] * dl + e[None, :, :] * dj) * h2
        + dj * dk * dl * h3
    ) / FOUR_PI
    lam = (_EYE * ((alpha * r**2 - 2.0) / r**3)[..., None, None] + 6.0 * dd / r_**5) / FOUR_PI
    return KernelTensors(g, p, s, lam)


def kernel_divergence_check(x: ArrayLike, alpha: float, h: float) -> NDArray[np.float64]:
    """Central-difference divergence of each column of the velocity kernel at ``x``.

    The result should be O(h^2); it is a diagnostic for the divergence-free
    property of the kernel, not a tool for accurate derivatives.
    """
    x = np.asarray(x, dtype=float)
    if np.linalg.norm(x) <= 4.0 * h:
        raise ValueError("finite-difference stencil would cross the pole")
    div = np.zeros(3)
    for j in range(3):
        step = h * _EYE[j]
        gp = brinkman_tensors(x + step, alpha).g
        gm = brinkman_tensors(x - step, alpha).g
        div += (gp[j, :] - gm[j, :]) / (2.0 * h)
    return div


# ---------------------------------------------------------------------------
# Radial factors shared by the contracted kernels below.


@dataclass(frozen=True)
class _Radial:
    r: NDArray[np.float64]
    f1: NDArray[np.float64]  # g = delta f1 + d d f2
    f2: NDArray[np.float64]
    f1p_r: NDArray[np.float64]  # f1'(r) / r
    f2p_r: NDArray[np.float64]
    h1: NDArray[np.float64]  # s = -(1/4pi)(... h1 ... h2 ... h3)
    h2: NDArray[np.float64]
    h3: NDArray[np.float64]
    h1p_r: NDArray[np.float64]
    h2p_r: NDArray[np.float64]
    h3p_r: NDArray[np.float64]


def _radial(r: NDArray[np.float64], alpha: float, stress: bool = True, derivs: bool = True) -> _Radial:
    """Radial factors of the kernels; only the profiles actually needed are evaluated."""
    names = ("a1", "a2") + (("d1", "d2", "d3") if stress else ())
    if alpha == 0.0:
        stokes = {"a1": 1.0, "a2": 1.0, "d1": 0.0, "d2": 0.0, "d3": 3.0}
        val = {k: stokes[k] for k in names}
        der = {k: 0.0 for k in names}
        sq = 0.0
    else:
        sq = np.sqrt(alpha)
        z = (sq * r).ravel()
        val = dict(zip(names, (v.reshape(r.shape) for v in _evaluate_profiles(z, names))))
        der = dict(zip(names, (v.reshape(r.shape) for v in _evaluate_profiles(z, names, True)))) if derivs else {}
    ri = 1.0 / r
    r2 = ri * ri
    r3 = r2 * ri
    r5 = r3 * r2
    f1 = val["a1"] * ri / EIGHT_PI
    f2 = val["a2"] * r3 / EIGHT_PI
    f1p_r = f2p_r = h1 = h2 = h3 = h1p_r = h2p_r = h3p_r = None
    if derivs:
        f1p_r = (sq * der["a1"] * r2 - val["a1"] * r3) / EIGHT_PI
        f2p_r = (sq * der["a2"] * r2 * r2 - 3.0 * val["a2"] * r5) / EIGHT_PI
    if stress:
        h1, h2, h3 = val["d1"] * r3, val["d2"] * r3, val["d3"] * r5
        if derivs:
            h1p_r = sq * der["d1"] * r2 * r2 - 3.0 * val["d1"] * r5
            h2p_r = sq * der["d2"] * r2 * r2 - 3.0 * val["d2"] * r5
            h3p_r = sq * der["d3"] * r5 * ri - 5.0 * val["d3"] * r5 * r2
    return _Radial(r, f1, f2, f1p_r, f2p_r, h1, h2, h3, h1p_r, h2p_r, h3p_r)


def _norm(d: NDArray[np.float64]) -> NDArray[np.float64]:
    return np.sqrt(np.einsum("...i,...i->...", d, d))


def _outer(a: NDArray[np.float64], b: NDArray[np.float64]) -> NDArray[np.float64]:
    return a[..., :, None] * b[..., None, :]


def _dot(a: NDArray[np.float64], b: NDArray[np.float64]) -> NDArray[np.float64]:
    return np.einsum("...i,...i->...", a, b)


# Single layer: u_j(x) = sum g_jk(x - y) phi_k; arrays are indexed [j, k].


def single_layer_velocity(d: NDArray[np.float64], alpha: float) -> NDArray[np.float64]:
    """Velocity kernel ``g(d)`` with ``d = x - y``; shape ``(..., 3, 3)``."""
    rad = _radial(_norm(d), alpha, stress=False, derivs=False)
    return _EYE * rad.f1[..., None, None] + _outer(d, d) * rad.f2[..., None, None]


def single_layer_pressure(d: NDArray[np.float64]) -> NDArray[np.float64]:
    """Pressure kernel ``p(d)``; shape ``(..., 3)``."""
    r = _norm(d)
    return d / (FOUR_PI * r[..., None] ** 3)


def single_layer_gradient(d: NDArray[np.float64], alpha: float) -> NDArray[np.float64]:
    """``dg_jk/dx_m`` indexed ``[j, k, m]``."""
    rad = _radial(_norm(d), alpha, stress=False)
    e = _EYE
    dj = d[..., :, None, None]
    dk = d[..., None, :, None]
    dm = d[..., None, None, :]
    return (
        e[:, :, None] * dm * rad.f1p_r[..., None, None, None]
        + (e[:, None, :] * dk + e[None, :, :] * dj) * rad.f2[..., None, None, None]
        + dj * dk * dm * rad.f2p_r[..., None, None, None]
    )


def single_layer_traction(d: NDArray[np.float64], n: NDArray[np.float64], alpha: float) -> NDArray[np.float64]:
    """Traction at ``x`` with normal ``n`` produced by a unit force at ``y``; ``[j, k]``."""
    rad = _radial(_norm(d), alpha, stress=False)
    dn = _dot(d, n)
    c_delta = dn * (rad.f1p_r + rad.f2)
    c_nd = 2.0 * rad.f2 - 1.0 / (FOUR_PI * rad.r**3)
    c_dn = rad.f1p_r + rad.f2
    c_dd = 2.0 * dn * rad.f2p_r
    return (
        _EYE * c_delta[..., None, None]
        + _outer(n, d) * c_nd[..., None, None]
        + _outer(d, n) * c_dn[..., None, None]
        + _outer(d, d) * c_dd[..., None, None]
    )


# Double layer: u_k(x) = sum s_jkl(y - x) nu_l(y) h_j; arrays are indexed [k, j].


def double_layer_velocity(d: NDArray[np.float64], nu: NDArray[np.float64], alpha: float) -> NDArray[np.float64]:
    """Kernel ``s_jkl(d) nu_l`` indexed ``[k, j]`` with ``d = y - x``."""
    rad = _radial(_norm(d), alpha, derivs=False)
    dnu = _dot(d, nu)
    out = _outer(d, nu) * rad.h1[..., None, None]
    out += (_EYE * (dnu * rad.h2)[..., None, None] + _outer(nu, d) * rad.h2[..., None, None])
    out += _outer(d, d) * (dnu * rad.h3)[..., None, None]
    return -out / FOUR_PI


def double_layer_pressure(d: NDArray[np.float64], nu: NDArray[np.float64], alpha: float) -> NDArray[np.float64]:
    """Pressure kernel ``lam_jl(d) nu_l`` indexed ``[j]``."""
    r = _norm(d)
    ri = 1.0 / r
    c_nu = (alpha * r * r - 2.0) * ri**3
    c_d = 6.0 * _dot(d, nu) * ri**5
    return (nu * c_nu[..., None] + d * c_d[..., None]) / FOUR_PI


def double_layer_gradient(d: NDArray[np.float64], nu: NDArray[np.float64], alpha: float) -> NDArray[np.float64]:
    """``du_k/dx_m`` per unit density component ``j``, indexed ``[k, j, m]``.

    With ``d = y - x`` the x-derivative is minus the d-derivative of the
    contracted stress kernel.
    """
    rad = _radial(_norm(d), alpha)
    e = _EYE
    dnu = _dot(d, nu)[..., None, None, None]
    dk = d[..., :, None, None]
    dj = d[..., None, :, None]
    dm = d[..., None, None, :]
    nuj = nu[..., None, :, None]
    nuk = nu[..., :, None, None]
    num = nu[..., None, None, :]
    h1 = rad.h1[..., None, None, None]
    h2 = rad.h2[..., None, None, None]
    h3 = rad.h3[..., None, None, None]
    grad = (
        nuj * (e[:, None, :] * h1 + dk * dm * rad.h1p_r[..., None, None, None])
        + e[:, :, None] * (num * h2 + dnu * dm * rad.h2p_r[..., None, None, None])
        + nuk * (e[None, :, :] * h2 + dj * dm * rad.h2p_r[..., None, None, None])
        + (e[None, :, :] * dk * dnu + e[:, None, :] * dj * dnu + num * dj * dk) * h3
        + dj * dk * dnu * dm * rad.h3p_r[..., None, None, None]
    )
    return grad / FOUR_PI


def double_layer_traction(
    d: NDArray[np.float64], nu: NDArray[np.float64], n: NDArray[np.float64], alpha: float
) -> NDArray[np.float64]:
    """Traction at ``x`` (normal ``n``) per unit double-layer density at ``y``; ``[k, j]``."""
    rad = _radial(_norm(d), alpha)
    dnu = _dot(d, nu)
    dn = _dot(d, n)
    nun = _dot(nu, n)
    e = _EYE

    def c(a):
        return a[..., None, None]

    # (A + B)_kj with A = sum_m du_k/dx_m n_m and B = sum_m du_m/dx_k n_m,
    # both per unit density component j and without the 1/4pi factor.
    ab = (
        _outer(n, nu) * c(2.0 * rad.h1)
        + _outer(d, nu) * c(2.0 * dn * rad.h1p_r)
        + e * c(2.0 * nun * rad.h2 + dnu * dn * (rad.h2p_r + rad.h3))
        + _outer(nu, n) * c(2.0 * rad.h2)
        + _outer(nu, d) * c(dn * (rad.h2p_r + rad.h3))
        + _outer(d, n) * c(dnu * (rad.h2p_r + rad.h3))
        + _outer(n, d) * c(2.0 * dnu * rad.h3)
        + _outer(d, d) * c(nun * (rad.h2p_r + rad.h3) + 2.0 * dnu * dn * rad.h3p_r)
    )
    press = double_layer_pressure(d, nu, alpha)
    return ab / FOUR_PI - _outer(n, press)
