"""Compiled inner loops for panel quadrature and Newtonian sums.

The formulas mirror the vectorised kernels in :mod:`kernels` (which the
tests use as the reference); here they are evaluated one quadrature point at
a time so that no large temporaries are formed.
"""

from __future__ import annotations

import math
from typing import Callable, NamedTuple

import numba as nb
import numpy as np

from .kernels import _NAMES, _PROFILE_TABLE, SERIES_TERMS, Z_SERIES

# kernel kinds
SL_VELOCITY = 0
DL_VELOCITY = 1
SL_TRACTION = 2
DL_TRACTION = 3
SL_FIELD = 4  # velocity, pressure, gradient: 13 rows
DL_FIELD = 5

ROWS = {SL_VELOCITY: 3, DL_VELOCITY: 3, SL_TRACTION: 3, DL_TRACTION: 3, SL_FIELD: 13, DL_FIELD: 13}

_POWERS = (1, 0, -1, -2, -3)


def _tables(derivative: bool):
    series = np.zeros((5, SERIES_TERMS))
    expc = np.zeros((5, 5))
    plain = np.zeros((5, 5))
    for i, name in enumerate(_NAMES):
        prof = _PROFILE_TABLE[name]
        if derivative:
            ser, ep, pl = prof.d_series, prof.d_exp_part, prof.d_plain
        else:
            ser, ep, pl = prof.series, prof.exp_part, prof.plain
        series[i, : len(ser)] = ser
        for p, c in ep:
            expc[i, _POWERS.index(p)] += c
        for q, e in pl:
            plain[i, _POWERS.index(q)] += e
    return series, expc, plain


_SER, _EXPC, _PLAIN = _tables(False)
_DSER, _DEXPC, _DPLAIN = _tables(True)
_ZS = Z_SERIES
_FOUR_PI = 4.0 * math.pi
_EIGHT_PI = 8.0 * math.pi


@nb.njit(cache=True, inline='always')
def _profile_subset(z, ser, expc, plain, out, first, last):
    if z < _ZS:
        for i in range(first, last):
            acc = ser[i, ser.shape[1] - 1]
            for m in range(ser.shape[1] - 2, -1, -1):
                acc = acc * z + ser[i, m]
            out[i] = acc
    else:
        ez = math.exp(-z)
        zi = 1.0 / z
        pw3 = zi * zi
        pw4 = pw3 * zi
        for i in range(first, last):
            e = expc[i, 0] * z + expc[i, 1] + expc[i, 2] * zi + expc[i, 3] * pw3 + expc[i, 4] * pw4
            p = plain[i, 0] * z + plain[i, 1] + plain[i, 2] * zi + plain[i, 3] * pw3 + plain[i, 4] * pw4
            out[i] = ez * e + p


@nb.njit(cache=True, inline='always')
def _radial(r, alpha, rad, val, der, stress=True, derivs=True):
    """Fill rad = [f1, f2, f1p_r, f2p_r, h1, h2, h3, h1p_r, h2p_r, h3p_r].

    Entries that are not requested (stress or derivative factors) are left stale.
    """
    if alpha == 0.0:
        val[0] = 1.0
        val[1] = 1.0
        val[2] = 0.0
        val[3] = 0.0
        val[4] = 3.0
        for i in range(5):
            der[i] = 0.0
        sq = 0.0
    else:
        sq = math.sqrt(alpha)
        z = sq * r
        last = 5 if stress else 2
        _profile_subset(z, _SER, _EXPC, _PLAIN, val, 0, last)
        if derivs:
            _profile_subset(z, _DSER, _DEXPC, _DPLAIN, der, 0, last)
    ri = 1.0 / r
    r2 = ri * ri
    r3 = r2 * ri
    r5 = r3 * r2
    rad[0] = val[0] * ri / _EIGHT_PI
    rad[1] = val[1] * r3 / _EIGHT_PI
    rad[2] = (sq * der[0] * r2 - val[0] * r3) / _EIGHT_PI
    rad[3] = (sq * der[1] * r2 * r2 - 3.0 * val[1] * r5) / _EIGHT_PI
    rad[4] = val[2] * r3
    rad[5] = val[3] * r3
    rad[6] = val[4] * r5
    rad[7] = sq * der[2] * r2 * r2 - 3.0 * val[2] * r5
    rad[8] = sq * der[3] * r2 * r2 - 3.0 * val[3] * r5
    rad[9] = sq * der[4] * r5 * ri - 5.0 * val[4] * r5 * r2


@nb.njit(cache=True, inline='always')
def _kernel_add(kind, alpha, x, y0, y1, y2, nu, n, w, acc, rad, val, der, d):
    """acc[rows, 3] += w * kernel(kind) for one source point y; d is scratch."""
    if kind == SL_VELOCITY or kind == SL_TRACTION or kind == SL_FIELD:
        d0 = x[0] - y0
        d1 = x[1] - y1
        d2 = x[2] - y2
    else:
        d0 = y0 - x[0]
        d1 = y1 - x[1]
        d2 = y2 - x[2]
    d[0] = d0
    d[1] = d1
    d[2] = d2
    r = math.sqrt(d0 * d0 + d1 * d1 + d2 * d2)
    stress = kind == DL_VELOCITY or kind == DL_FIELD or kind == DL_TRACTION
    derivs = kind != SL_VELOCITY and kind != DL_VELOCITY
    _radial(r, alpha, rad, val, der, stress, derivs)
    f1, f2, f1p, f2p = rad[0], rad[1], rad[2], rad[3]
    h1, h2, h3, h1p, h2p, h3p = rad[4], rad[5], rad[6], rad[7], rad[8], rad[9]
    if kind == SL_VELOCITY or kind == SL_FIELD:
        for j in range(3):
            for k in range(3):
                v = d[j] * d[k] * f2
                if j == k:
                    v += f1
                acc[j, k] += w * v
        if kind == SL_FIELD:
            r3 = r * r * r
            for k in range(3):
                acc[3, k] += w * d[k] / (_FOUR_PI * r3)
            for j in range(3):
                for m in range(3):
                    for k in range(3):
                        v = d[j] * d[k] * d[m] * f2p
                        if j == k:
                            v += d[m] * f1p
                        if j == m:
                            v += d[k] * f2
                        if k == m:
                            v += d[j] * f2
                        acc[4 + 3 * j + m, k] += w * v
    elif kind == SL_TRACTION:
        dn = d0 * n[0] + d1 * n[1] + d2 * n[2]
        c_delta = dn * (f1p + f2)
        c_nd = 2.0 * f2 - 1.0 / (_FOUR_PI * r * r * r)
        c_dn = f1p + f2
        c_dd = 2.0 * dn * f2p
        for j in range(3):
            for k in range(3):
                v = n[j] * d[k] * c_nd + d[j] * n[k] * c_dn + d[j] * d[k] * c_dd
                if j == k:
                    v += c_delta
                acc[j, k] += w * v
    else:
        dnu = d0 * nu[0] + d1 * nu[1] + d2 * nu[2]
        if kind == DL_VELOCITY or kind == DL_FIELD:
            for k in range(3):
                for j in range(3):
                    v = d[k] * nu[j] * h1 + nu[k] * d[j] * h2 + d[k] * d[j] * dnu * h3
                    if j == k:
                        v += dnu * h2
                    acc[k, j] -= w * v / _FOUR_PI
        if kind == DL_FIELD:
            r2 = r * r
            ri3 = 1.0 / (r2 * r)
            ri5 = ri3 / r2
            for j in range(3):
                acc[3, j] += w * (nu[j] * (alpha * r2 - 2.0) * ri3 + 6.0 * d[j] * dnu * ri5) / _FOUR_PI
            for k in range(3):
                for m in range(3):
                    for j in range(3):
                        v = nu[j] * d[k] * d[m] * h1p + d[j] * d[k] * dnu * d[m] * h3p
                        if k == m:
                            v += nu[j] * h1 + d[j] * dnu * h3
                        if k == j:
                            v += nu[m] * h2 + dnu * d[m] * h2p
                        v += nu[k] * d[j] * d[m] * h2p + nu[m] * d[j] * d[k] * h3
                        if j == m:
                            v += nu[k] * h2 + d[k] * dnu * h3
                        acc[4 + 3 * k + m, j] += w * v / _FOUR_PI
        if kind == DL_TRACTION:
            dn = d0 * n[0] + d1 * n[1] + d2 * n[2]
            nun = nu[0] * n[0] + nu[1] * n[1] + nu[2] * n[2]
            r2 = r * r
            ri3 = 1.0 / (r2 * r)
            ri5 = ri3 / r2
            c_delta = 2.0 * nun * h2 + dnu * dn * (h2p + h3)
            c_dd = nun * (h2p + h3) + 2.0 * dnu * dn * h3p
            for k in range(3):
                for j in range(3):
                    v = (
                        n[k] * nu[j] * 2.0 * h1
                        + d[k] * nu[j] * 2.0 * dn * h1p
                        + nu[k] * n[j] * 2.0 * h2
                        + nu[k] * d[j] * dn * (h2p + h3)
                        + d[k] * n[j] * dnu * (h2p + h3)
                        + n[k] * d[j] * 2.0 * dnu * h3
                        + d[k] * d[j] * c_dd
                    )
                    if j == k:
                        v += c_delta
                    q = nu[j] * (alpha * r2 - 2.0) * ri3 + 6.0 * d[j] * dnu * ri5
                    acc[k, j] += w * (v - n[k] * q) / _FOUR_PI


@nb.njit(cache=True)
def _point_triangle_distance(p, a, b, c):
    ab0, ab1, ab2 = b[0] - a[0], b[1] - a[1], b[2] - a[2]
    ac0, ac1, ac2 = c[0] - a[0], c[1] - a[1], c[2] - a[2]
    ap0, ap1, ap2 = p[0] - a[0], p[1] - a[1], p[2] - a[2]
    d1 = ab0 * ap0 + ab1 * ap1 + ab2 * ap2
    d2 = ac0 * ap0 + ac1 * ap1 + ac2 * ap2
    if d1 <= 0.0 and d2 <= 0.0:
        s, t = 0.0, 0.0
    else:
        bp0, bp1, bp2 = p[0] - b[0], p[1] - b[1], p[2] - b[2]
        d3 = ab0 * bp0 + ab1 * bp1 + ab2 * bp2
        d4 = ac0 * bp0 + ac1 * bp1 + ac2 * bp2
        cp0, cp1, cp2 = p[0] - c[0], p[1] - c[1], p[2] - c[2]
        d5 = ab0 * cp0 + ab1 * cp1 + ab2 * cp2
        d6 = ac0 * cp0 + ac1 * cp1 + ac2 * cp2
        vc = d1 * d4 - d3 * d2
        vb = d5 * d2 - d1 * d6
        va = d3 * d6 - d5 * d4
        if d3 >= 0.0 and d4 <= d3:
            s, t = 1.0, 0.0
        elif d6 >= 0.0 and d5 <= d6:
            s, t = 0.0, 1.0
        elif vc <= 0.0 and d1 >= 0.0 and d3 <= 0.0:
            s, t = d1 / (d1 - d3), 0.0
        elif vb <= 0.0 and d2 >= 0.0 and d6 <= 0.0:
            s, t = 0.0, d2 / (d2 - d6)
        elif va <= 0.0 and (d4 - d3) >= 0.0 and (d5 - d6) >= 0.0:
            ww = (d4 - d3) / ((d4 - d3) + (d5 - d6))
            s, t = 1.0 - ww, ww
        else:
            den = va + vb + vc
            s, t = vb / den, vc / den
    q0 = a[0] + s * ab0 + t * ac0 - p[0]
    q1 = a[1] + s * ab1 + t * ac1 - p[1]
    q2 = a[2] + s * ab2 + t * ac2 - p[2]
    return math.sqrt(q0 * q0 + q1 * q1 + q2 * q2)


@nb.njit(cache=True)
def _barycentric(x, a, b, c, beta):
    v00, v01, v02 = b[0] - a[0], b[1] - a[1], b[2] - a[2]
    v10, v11, v12 = c[0] - a[0], c[1] - a[1], c[2] - a[2]
    v20, v21, v22 = x[0] - a[0], x[1] - a[1], x[2] - a[2]
    d00 = v00 * v00 + v01 * v01 + v02 * v02
    d01 = v00 * v10 + v01 * v11 + v02 * v12
    d11 = v10 * v10 + v11 * v11 + v12 * v12
    d20 = v20 * v00 + v21 * v01 + v22 * v02
    d21 = v20 * v10 + v21 * v11 + v22 * v12
    den = d00 * d11 - d01 * d01
    v = (d11 * d20 - d01 * d21) / den
    w = (d00 * d21 - d01 * d20) / den
    beta[0] = max(1.0 - v - w, 0.0)
    beta[1] = max(v, 0.0)
    beta[2] = max(w, 0.0)
    tot = beta[0] + beta[1] + beta[2]
    for i in range(3):
        beta[i] /= tot


@nb.njit(cache=True)
def _split(stack, depth, top):
    """Replace stack[top] by its four midpoint children at stack[top:top + 4]."""
    lev = depth[top]
    for k in range(3):
        t0 = stack[top, 0, k]
        t1 = stack[top, 1, k]
        t2 = stack[top, 2, k]
        m01 = 0.5 * (t0 + t1)
        m12 = 0.5 * (t1 + t2)
        m20 = 0.5 * (t2 + t0)
        stack[top, 1, k] = m01
        stack[top, 2, k] = m20
        stack[top + 1, 0, k] = m01
        stack[top + 1, 1, k] = t1
        stack[top + 1, 2, k] = m12
        stack[top + 2, 0, k] = m20
        stack[top + 2, 1, k] = m12
        stack[top + 2, 2, k] = t2
        stack[top + 3, 0, k] = m01
        stack[top + 3, 1, k] = m12
        stack[top + 3, 2, k] = m20
    for i in range(4):
        depth[top + i] = lev + 1


@nb.njit(cache=True)
def _grow(pts, wts, pid, need):
    cap = max(2 * pts.shape[0], need)
    npts = np.empty((cap, 3))
    nwts = np.empty(cap)
    npid = np.empty(cap, dtype=np.int64)
    npts[: pts.shape[0]] = pts
    nwts[: pts.shape[0]] = wts
    npid[: pts.shape[0]] = pid
    return npts, nwts, npid


@nb.njit(cache=True)
def _emit_rule(tri, area, bary, wts, p, pts, wbuf, pid, count):
    for q in range(bary.shape[0]):
        b0 = bary[q, 0]
        b1 = bary[q, 1]
        b2 = bary[q, 2]
        pts[count, 0] = b0 * tri[0, 0] + b1 * tri[1, 0] + b2 * tri[2, 0]
        pts[count, 1] = b0 * tri[0, 1] + b1 * tri[1, 1] + b2 * tri[2, 1]
        pts[count, 2] = b0 * tri[0, 2] + b1 * tri[1, 2] + b2 * tri[2, 2]
        wbuf[count] = wts[q] * area
        pid[count] = p
        count += 1
    return count


class Engine(NamedTuple):
    """Compiled panel loop for one kernel kind."""

    run: Callable


def _build_engine(kind: int) -> Engine:
    rows = ROWS[kind]

    # ``kind`` is a closure constant, so the other kernel branches fold away.
    # For each target the quadrature points of all panels are gathered into a
    # buffer first and then evaluated in one tight loop; per-point function
    # calls with array arguments are what dominated the cost otherwise.
    @nb.njit(cache=True)
    def run(alpha, targets, tnormals, own, corners, normals, areas, diameters, radii, centroids,
            three_bary, three_w, six_bary, six_w, gl_x, gl_w, far_ratio, mid_ratio, near_ratio, max_level,
            density, as_matrix, matrix_out, field_out, minus_stokes):
        npan = corners.shape[0]
        cap = 8 * npan + 1024
        pts = np.empty((cap, 3))
        wbuf = np.empty(cap)
        pid = np.empty(cap, dtype=np.int64)
        acc = np.zeros((rows, 3))
        rad = np.zeros(10)
        val = np.zeros(5)
        der = np.zeros(5)
        d = np.zeros(3)
        nu = np.zeros(3)
        tri = np.zeros((3, 3))
        beta = np.zeros(3)
        stack = np.zeros((3 * max_level + 4, 3, 3))
        depth = np.zeros(3 * max_level + 4, dtype=np.int64)
        ng = gl_x.shape[0]
        skip = np.zeros(npan, dtype=np.bool_)
        if not as_matrix:
            for p in range(npan):
                skip[p] = density[p, 0] == 0.0 and density[p, 1] == 0.0 and density[p, 2] == 0.0
        for t in range(targets.shape[0]):
            x = targets[t]
            n = tnormals[t]
            x0 = x[0]
            x1 = x[1]
            x2 = x[2]
            count = 0
            for p in range(npan):
                if skip[p]:
                    continue
                if count + 6 * 4 * (max_level + 1) + 3 * ng * ng > pts.shape[0]:
                    pts, wbuf, pid = _grow(pts, wbuf, pid, count + 6 * 4 * (max_level + 1) + 3 * ng * ng)
                diam = diameters[p]
                dx = x0 - centroids[p, 0]
                dy = x1 - centroids[p, 1]
                dz = x2 - centroids[p, 2]
                dc = math.sqrt(dx * dx + dy * dy + dz * dz)
                if dc >= radii[p] + far_ratio * diam:
                    pts[count, 0] = centroids[p, 0]
                    pts[count, 1] = centroids[p, 1]
                    pts[count, 2] = centroids[p, 2]
                    wbuf[count] = areas[p]
                    pid[count] = p
                    count += 1
                    continue
                for v in range(3):
                    for k in range(3):
                        tri[v, k] = corners[p, v, k]
                area = areas[p]
                if dc >= radii[p] + mid_ratio * diam:
                    count = _emit_rule(tri, area, three_bary, three_w, p, pts, wbuf, pid, count)
                    continue
                ratio = _point_triangle_distance(x, tri[0], tri[1], tri[2]) / diam
                if own[t] == p or ratio < 1e-10:
                    # Duffy rule on the three sub-triangles with apex at the target;
                    # the edge parameter goes through a sinh map about the foot of the
                    # apex on the edge line, which makes 1/r exactly constant along it
                    _barycentric(x, tri[0], tri[1], tri[2], beta)
                    for side in range(3):
                        e0 = side
                        e1 = (side + 1) % 3
                        wside = 2.0 * beta[(side + 2) % 3] * area
                        if wside == 0.0:
                            continue
                        ae = 0.0
                        ee = 0.0
                        for k in range(3):
                            ak = tri[e0, k] - x[k]
                            ek = tri[e1, k] - tri[e0, k]
                            ae += ak * ek
                            ee += ek * ek
                        t0 = -ae / ee
                        hh = 0.0
                        for k in range(3):
                            fk = tri[e0, k] - x[k] + t0 * (tri[e1, k] - tri[e0, k])
                            hh += fk * fk
                        scale = np.sqrt(hh / ee)
                        th0 = np.arcsinh(-t0 / scale)
                        th1 = np.arcsinh((1.0 - t0) / scale)
                        for ia in range(ng):
                            s = gl_x[ia]
                            for ib in range(ng):
                                th = th0 + (th1 - th0) * gl_x[ib]
                                tt = t0 + scale * np.sinh(th)
                                jac = (th1 - th0) * scale * np.cosh(th)
                                y0 = 0.0
                                y1 = 0.0
                                y2 = 0.0
                                for v in range(3):
                                    bv = beta[v] * (1.0 - s)
                                    if v == e0:
                                        bv += s * (1.0 - tt)
                                    if v == e1:
                                        bv += s * tt
                                    y0 += bv * tri[v, 0]
                                    y1 += bv * tri[v, 1]
                                    y2 += bv * tri[v, 2]
                                pts[count, 0] = y0
                                pts[count, 1] = y1
                                pts[count, 2] = y2
                                wbuf[count] = wside * gl_w[ia] * gl_w[ib] * jac * s
                                pid[count] = p
                                count += 1
                    continue
                if ratio >= near_ratio or max_level == 0:
                    count = _emit_rule(tri, area, six_bary, six_w, p, pts, wbuf, pid, count)
                    continue
                # adaptive refinement: split a sub-triangle while the target is
                # closer than near_ratio of its diameter, up to max_level halvings
                for v in range(3):
                    for k in range(3):
                        stack[0, v, k] = tri[v, k]
                depth[0] = 0
                _split(stack, depth, 0)
                top = 4
                while top > 0:
                    top -= 1
                    lev = depth[top]
                    for v in range(3):
                        for k in range(3):
                            tri[v, k] = stack[top, v, k]
                    near = _point_triangle_distance(x, tri[0], tri[1], tri[2]) < near_ratio * diam / (1 << lev)
                    if lev < max_level and near:
                        _split(stack, depth, top)
                        top += 4
                    else:
                        if count + 6 > pts.shape[0]:
                            pts, wbuf, pid = _grow(pts, wbuf, pid, count + 6)
                        count = _emit_rule(tri, area / (1 << (2 * lev)), six_bary, six_w, p, pts, wbuf, pid, count)
            # evaluate all gathered points
            if as_matrix:
                for p in range(npan):
                    for i in range(rows):
                        for j in range(3):
                            matrix_out[t, p, i, j] = 0.0
            else:
                for i in range(rows):
                    field_out[t, i] = 0.0
            for q in range(count):
                p = pid[q]
                for k in range(3):
                    nu[k] = normals[p, k]
                for i in range(rows):
                    for j in range(3):
                        acc[i, j] = 0.0
                _kernel_add(kind, alpha, x, pts[q, 0], pts[q, 1], pts[q, 2], nu, n, wbuf[q], acc, rad, val, der, d)
                if minus_stokes:
                    _kernel_add(kind, 0.0, x, pts[q, 0], pts[q, 1], pts[q, 2], nu, n, -wbuf[q], acc, rad, val, der, d)
                if as_matrix:
                    for i in range(rows):
                        for j in range(3):
                            matrix_out[t, p, i, j] += acc[i, j]
                else:
                    for i in range(rows):
                        field_out[t, i] += acc[i, 0] * density[p, 0] + acc[i, 1] * density[p, 1] + acc[i, 2] * density[p, 2]

    return Engine(run)


@nb.njit(cache=True)
def newtonian_field(alpha, targets, centers, forces, half, ball, gradient, u, pi, grad):
    """Newtonian sums with host-cell regularisation; forces already multiplied by cell volume."""
    rad = np.zeros(10)
    val = np.zeros(5)
    der = np.zeros(5)
    for t in range(targets.shape[0]):
        x = targets[t]
        for i in range(3):
            u[t, i] = 0.0
            for m in range(3):
                grad[t, i, m] = 0.0
        pi[t] = 0.0
        for c in range(centers.shape[0]):
            f0, f1_, f2_ = forces[c, 0], forces[c, 1], forces[c, 2]
            d0 = x[0] - centers[c, 0]
            d1 = x[1] - centers[c, 1]
            d2 = x[2] - centers[c, 2]
            if abs(d0) <= half and abs(d1) <= half and abs(d2) <= half:
                u[t, 0] -= ball * f0
                u[t, 1] -= ball * f1_
                u[t, 2] -= ball * f2_
                continue
            r = math.sqrt(d0 * d0 + d1 * d1 + d2 * d2)
            _radial(r, alpha, rad, val, der, False, gradient)
            f1, f2, f1p, f2p = rad[0], rad[1], rad[2], rad[3]
            d = (d0, d1, d2)
            fv = (f0, f1_, f2_)
            df = d0 * f0 + d1 * f1_ + d2 * f2_
            for j in range(3):
                u[t, j] -= f1 * fv[j] + d[j] * df * f2
            pi[t] -= df / (_FOUR_PI * r * r * r)
            if gradient:
                for j in range(3):
                    for m in range(3):
                        v = d[j] * df * d[m] * f2p + d[m] * f1p * fv[j] + d[j] * f2 * fv[m]
                        if j == m:
                            v += df * f2
                        grad[t, j, m] -= v



#: one compiled engine per kernel kind
ENGINES = {kind: _build_engine(kind) for kind in ROWS}
