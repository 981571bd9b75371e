"""Triangle quadrature rules in barycentric form.

Rules are given on the reference triangle as barycentric coordinates
``(n, 3)`` and weights summing to one, so that mapping to a physical panel is
``points = bary @ corners`` and ``weights * area``.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np
from numpy.typing import NDArray

CENTROID = (np.array([[1.0, 1.0, 1.0]]) / 3.0, np.array([1.0]))

#: Three interior points, exact for polynomials of degree 2.
THREE_POINT = (
    np.array([[2 / 3, 1 / 6, 1 / 6], [1 / 6, 2 / 3, 1 / 6], [1 / 6, 1 / 6, 2 / 3]]),
    np.full(3, 1.0 / 3.0),
)

_A, _B = 0.445948490915965, 0.091576213509771
_WA, _WB = 0.223381589678011, 0.109951743655322
#: Six-point rule exact for polynomials of degree 4.
SIX_POINT = (
    np.array(
        [
            [_A, _A, 1 - 2 * _A], [_A, 1 - 2 * _A, _A], [1 - 2 * _A, _A, _A],
            [_B, _B, 1 - 2 * _B], [_B, 1 - 2 * _B, _B], [1 - 2 * _B, _B, _B],
        ]
    ),
    np.array([_WA, _WA, _WA, _WB, _WB, _WB]),
)


@lru_cache(maxsize=None)
def subdivided_rule(level: int) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """The six-point rule applied on each of the ``4**level`` congruent children."""
    tris = [np.eye(3)]  # rows are child corners in barycentric coordinates
    for _ in range(level):
        nxt = []
        for t in tris:
            a, b, c = t
            ab, bc, ca = 0.5 * (a + b), 0.5 * (b + c), 0.5 * (c + a)
            nxt.extend([np.array([a, ab, ca]), np.array([ab, b, bc]), np.array([ca, bc, c]), np.array([ab, bc, ca])])
        tris = nxt
    base_pts, base_w = SIX_POINT
    pts = np.concatenate([base_pts @ t for t in tris])
    w = np.tile(base_w, len(tris)) / len(tris)
    pts.setflags(write=False)
    w.setflags(write=False)
    return pts, w


@lru_cache(maxsize=None)
def gauss_legendre_01(n: int) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


def singular_rule(beta: NDArray[np.float64], order: int = 8) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Barycentric rule for integrands with a ``1/r`` singularity at ``beta``.

    ``beta`` has shape ``(P, 3)`` (one singular point per panel); the result
    is ``(P, Q, 3)`` points and ``(P, Q)`` weights summing to one.  The panel
    is split into three triangles with the singular point as apex, and on
    each the Duffy map ``y = x + s (a + t (b - a))`` cancels the singularity
    with its Jacobian, which is proportional to ``s``.  The edge parameter
    ``t`` goes through ``t = t0 + c sinh(u)`` about the foot ``t0`` of the
    apex on the edge line (``c`` is the apex height over the edge length,
    measured on the reference triangle), which makes ``1/r`` constant in ``u``.
    """
    beta = np.atleast_2d(np.asarray(beta, dtype=float))
    s, ws = gauss_legendre_01(order)
    eye = np.eye(3)
    ref = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    apex = beta @ ref
    pts, wts = [], []
    for i in range(3):
        a = ref[i][None, :] - apex
        e = np.broadcast_to(ref[(i + 1) % 3] - ref[i], a.shape)
        ee = np.sum(e * e, axis=1)
        t0 = -np.sum(a * e, axis=1) / ee
        foot = a + t0[:, None] * e
        scale = np.sqrt(np.sum(foot * foot, axis=1) / ee)
        safe = np.where(scale > 0, scale, 1.0)
        th0, th1 = np.arcsinh(-t0 / safe), np.arcsinh((1 - t0) / safe)
        th = th0[:, None] + (th1 - th0)[:, None] * s[None, :]
        t = t0[:, None] + safe[:, None] * np.sinh(th)
        jac = (th1 - th0)[:, None] * safe[:, None] * np.cosh(th)
        S = s[:, None]  # (order, 1) radial nodes against (P, order) angular nodes
        a3 = eye[i][None, :] - beta
        b3 = eye[(i + 1) % 3][None, :] - beta
        p = (beta[:, None, None, :] + S[None, :, :, None] * (a3[:, None, None, :]
             + t[:, None, :, None] * (b3 - a3)[:, None, None, :]))
        w = 2.0 * beta[:, (i + 2) % 3, None, None] * (ws * s)[None, :, None] * (ws[None, :] * jac)[:, None, :]
        w = np.where(scale[:, None, None] > 0, w, 0.0)
        pts.append(p.reshape(len(beta), -1, 3))
        wts.append(w.reshape(len(beta), -1))
    return np.concatenate(pts, axis=1), np.concatenate(wts, axis=1)
