"""Executable checks of the potential theory behind the solver.

Each study returns plain records that can be written as CSV: jump relations
of the layer potentials measured through offset traces, Green's first
identity, the representation formula, far-field decay, and manufactured
transmission solves under refinement.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
import scipy.stats
from numpy.typing import ArrayLike, NDArray

from . import potentials as pt
from .geometry import SurfaceMesh, make_sphere
from .quadrature import SIX_POINT, gauss_legendre_01
from .transmission import (
    FlowState,
    Grids,
    ProblemParams,
    TransmissionSolver,
    manufactured_problem,
)


# ---------------------------------------------------------------------------
# Refinement bookkeeping


@dataclass(frozen=True)
class RefinementStudy:
    """Errors over a refinement sequence with a least-squares order fit.

    ``h`` is the characteristic size of each level (mean panel diameter for
    surface studies).  The fitted order is the slope of ``log error`` against
    ``log h``; ``order_bounds`` is its 95% confidence interval.
    """

    name: str
    levels: tuple[int, ...]
    h: tuple[float, ...]
    errors: tuple[float, ...]
    extra: dict[str, tuple[float, ...]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if len(self.levels) < 3:
            raise ValueError("a refinement study needs at least 3 levels")
        if not (len(self.levels) == len(self.h) == len(self.errors)):
            raise ValueError("levels, h and errors must have equal length")
        if any(not e > 0 for e in self.errors):
            raise ValueError(f"{self.name}: errors must be positive, got {self.errors}")

    def _fit(self):
        return scipy.stats.linregress(np.log(self.h), np.log(self.errors))

    @property
    def fitted_order(self) -> float:
        return float(self._fit().slope)

    @property
    def order_bounds(self) -> tuple[float, float]:
        fit = self._fit()
        dof = len(self.levels) - 2
        if dof < 1:
            return (float("nan"), float("nan"))
        half = scipy.stats.t.ppf(0.975, dof) * fit.stderr
        return (float(fit.slope - half), float(fit.slope + half))

    @property
    def reductions(self) -> tuple[float, ...]:
        """Error ratio of each level to the next finer one."""
        e = self.errors
        return tuple(e[i] / e[i + 1] for i in range(len(e) - 1))

    @property
    def final_error(self) -> float:
        return self.errors[-1]

    def rows(self) -> list[dict[str, float | int | str]]:
        order = self.fitted_order
        lo, hi = self.order_bounds
        out = []
        for i, lev in enumerate(self.levels):
            row = {"study": self.name, "level": lev, "h": self.h[i], "error": self.errors[i],
                   "fitted_order": order, "order_low": lo, "order_high": hi}
            for key, vals in self.extra.items():
                row[key] = vals[i]
            out.append(row)
        return out


def write_csv(rows: Sequence[dict], path: str | Path) -> None:
    """Write dict rows with the union of their keys as the header, in first-seen order."""
    keys: list[str] = []
    for r in rows:
        keys.extend(k for k in r if k not in keys)
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=keys, lineterminator="\n")
        writer.writeheader()
        for r in rows:
            writer.writerow({k: _fmt(r.get(k, "")) for k in keys})


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


def study_report(studies: Sequence[RefinementStudy]) -> str:
    """Plain-text summary, one block per study."""
    buf = io.StringIO()
    for s in studies:
        lo, hi = s.order_bounds
        buf.write(f"[{s.name}]\n")
        buf.write(f"levels = {list(s.levels)}\n")
        buf.write("errors = [" + ", ".join(f"{e:.4e}" for e in s.errors) + "]\n")
        buf.write("reductions = [" + ", ".join(f"{r:.3f}" for r in s.reductions) + "]\n")
        buf.write(f"fitted_order = {s.fitted_order:.3f}  (95%: {lo:.3f} .. {hi:.3f})\n\n")
    return buf.getvalue()


# ---------------------------------------------------------------------------
# Jump relations


def smooth_density(points: ArrayLike, seed: int = 0) -> NDArray[np.float64]:
    """Random smooth vector field: a fixed random combination of ten smooth functions of position."""
    x = np.atleast_2d(np.asarray(points, dtype=float))
    coeffs = np.random.default_rng(seed).normal(size=(10, 3))
    basis = np.stack(
        [
            np.ones(len(x)), x[:, 0], x[:, 1], x[:, 2], x[:, 0] * x[:, 1], x[:, 1] * x[:, 2],
            x[:, 0] ** 2 - x[:, 2] ** 2, np.sin(2 * x[:, 0]), np.cos(x[:, 1] + x[:, 2]), x[:, 2] ** 2,
        ],
        axis=1,
    )
    return basis @ coeffs


#: Offset of the finer trace at level ``l`` is ``2**-(l + JUMP_OFFSET_SHIFT)`` local panel diameters.
JUMP_OFFSET_SHIFT = 3

JUMP_RELATIONS = ("single_trace", "double_jump", "single_traction_jump", "double_traction_continuity")


def _rel(a: NDArray[np.float64], b: NDArray[np.float64]) -> float:
    return float(np.linalg.norm(a) / np.linalg.norm(b))


def offset_traces(mesh: SurfaceMesh, alpha: float, g, h, factor: float) -> dict[str, dict[str, NDArray]]:
    """Extrapolated one-sided traces of ``V g`` and ``W h`` and their tractions.

    Fields are sampled on the panel normals through the centroids at
    ``factor`` and ``2 factor`` local panel diameters, and combined as
    ``2 f(e) - f(2 e)`` to cancel the linear term in the offset.
    """
    n = mesh.panel_normals
    out: dict[str, dict[str, NDArray]] = {}
    for side in ("inner", "outer"):
        vals = []
        for f in (factor, 2 * factor):
            x = pt.offset_points(mesh, f, side)
            vals.append(
                (
                    pt.single_layer_eval(mesh, g, alpha, x).u,
                    pt.double_layer_eval(mesh, h, alpha, x).u,
                    pt.layer_traction(mesh, "single", alpha, g, x, n),
                    pt.layer_traction(mesh, "double", alpha, h, x, n),
                )
            )
        out[side] = {
            key: 2 * vals[0][i] - vals[1][i] for i, key in enumerate(("Vg", "Wh", "tVg", "tWh"))
        }
    return out


def jump_errors(mesh: SurfaceMesh, alpha: float, factor: float, seed: int = 0) -> dict[str, float]:
    """Relative errors of the four jump and continuity relations on one mesh.

    * ``single_trace``: both one-sided traces of ``V g`` equal the boundary operator applied to ``g``.
    * ``double_jump``: exterior minus interior trace of ``W h`` equals ``h``.
    * ``single_traction_jump``: interior minus exterior traction of ``V g`` equals ``g``.
    * ``double_traction_continuity``: the two tractions of ``W h`` agree.
    """
    c = mesh.panel_centroids
    g = smooth_density(c, seed)
    h = smooth_density(c[:, ::-1], seed + 1)
    tr = offset_traces(mesh, alpha, g, h, factor)
    inner, outer = tr["inner"], tr["outer"]
    Vg = (pt.assemble_boundary_operator(mesh, alpha, "V").matrix @ g.ravel()).reshape(-1, 3)
    mean_tw = 0.5 * (inner["tWh"] + outer["tWh"])
    return {
        "single_trace": max(_rel(inner["Vg"] - Vg, Vg), _rel(outer["Vg"] - Vg, Vg)),
        "double_jump": _rel(outer["Wh"] - inner["Wh"] - h, h),
        "single_traction_jump": _rel(inner["tVg"] - outer["tVg"] - g, g),
        "double_traction_continuity": _rel(inner["tWh"] - outer["tWh"], mean_tw),
    }


def run_jump_suite(
    meshes: Sequence[SurfaceMesh] | Sequence[int], alpha: float = 1.0, seed: int = 0
) -> dict[str, RefinementStudy]:
    """One refinement study per jump relation.

    ``meshes`` are surfaces of increasing resolution, or icosphere levels.
    Level ``l`` (counted from one) uses the offset schedule of
    :data:`JUMP_OFFSET_SHIFT`, so offsets shrink with the panels.
    """
    if len(meshes) < 3:
        raise ValueError("the jump suite needs at least 3 refinement levels")
    levels, sizes, errs = [], [], {k: [] for k in JUMP_RELATIONS}
    for i, m in enumerate(meshes):
        mesh = make_sphere(1.0, int(m)) if isinstance(m, (int, np.integer)) else m
        lev = int(m) if isinstance(m, (int, np.integer)) else i + 1
        factor = 2.0 ** -(lev + JUMP_OFFSET_SHIFT)
        e = jump_errors(mesh, alpha, factor, seed)
        levels.append(lev)
        sizes.append(mesh.mean_diameter)
        for k in JUMP_RELATIONS:
            errs[k].append(e[k])
    return {k: RefinementStudy(k, tuple(levels), tuple(sizes), tuple(errs[k])) for k in JUMP_RELATIONS}


# ---------------------------------------------------------------------------
# Green's first identity


@dataclass(frozen=True)
class BumpField:
    """Quadratic vector polynomial times ``(1 - |x - c|^2 / R^2)^2``, zero outside radius ``R``."""

    center: NDArray[np.float64]
    radius: float
    coeffs: NDArray[np.float64]  # (10, 3): 1, x, y, z, xx, yy, zz, xy, yz, zx

    @staticmethod
    def random(center: ArrayLike, radius: float, seed: int = 0) -> "BumpField":
        c = np.random.default_rng(seed).normal(size=(10, 3))
        return BumpField(np.asarray(center, dtype=float), float(radius), c)

    @staticmethod
    def zero(center: ArrayLike, radius: float) -> "BumpField":
        return BumpField(np.asarray(center, dtype=float), float(radius), np.zeros((10, 3)))

    def value_and_gradient(self, x: ArrayLike) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
        """Values ``(M, 3)`` and gradients ``(M, 3, 3)`` with ``grad[:, a, b] = dw_a/dx_b``."""
        d = np.atleast_2d(np.asarray(x, dtype=float)) - self.center
        X, Y, Z = d[:, 0], d[:, 1], d[:, 2]
        one, zero = np.ones(len(d)), np.zeros(len(d))
        basis = np.stack([one, X, Y, Z, X * X, Y * Y, Z * Z, X * Y, Y * Z, Z * X], axis=1)
        dbasis = np.stack(
            [
                np.stack([zero, one, zero, zero, 2 * X, zero, zero, Y, zero, Z], axis=1),
                np.stack([zero, zero, one, zero, zero, 2 * Y, zero, X, Z, zero], axis=1),
                np.stack([zero, zero, zero, one, zero, zero, 2 * Z, zero, Y, X], axis=1),
            ],
            axis=2,
        )  # (M, 10, 3)
        p = basis @ self.coeffs
        dp = np.einsum("mkb,ka->mab", dbasis, self.coeffs)
        s = 1.0 - np.sum(d * d, axis=1) / self.radius**2
        inside = s > 0
        bump = np.where(inside, s * s, 0.0)
        dbump = np.where(inside, 2 * s, 0.0)[:, None] * (-2.0 * d / self.radius**2)
        w = p * bump[:, None]
        grad = dp * bump[:, None, None] + p[:, :, None] * dbump[:, None, :]
        return w, grad


def _surface_rule(mesh: SurfaceMesh) -> tuple[NDArray[np.float64], NDArray[np.float64], NDArray[np.float64]]:
    bary, w = SIX_POINT
    pts = np.einsum("qk,pkd->pqd", bary, mesh.corners)
    wts = mesh.panel_areas[:, None] * w[None, :]
    nrm = np.broadcast_to(mesh.panel_normals[:, None, :], pts.shape)
    return pts.reshape(-1, 3), wts.ravel(), nrm.reshape(-1, 3)


def cone_rule(
    mesh: SurfaceMesh, outer_radius: float | None = None, radial_order: int = 16
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Volume quadrature inside the surface, or between it and a sphere of ``outer_radius``.

    Rays from the surface centroid through the panel quadrature points carry
    Gauss-Legendre points in the radius.  The surface must be star-shaped
    about its centroid.
    """
    c = mesh.center()
    y, wy, n = _surface_rule(mesh)
    d = y - c
    rho = np.linalg.norm(d, axis=1)
    height = np.sum(n * d, axis=1)
    if np.any(height <= 0):
        raise ValueError("cone quadrature needs a surface star-shaped about its centroid")
    solid = wy * height / rho**3  # solid angle weights
    t, wt = gauss_legendre_01(radial_order)
    if outer_radius is None:
        r0, r1 = np.zeros_like(rho), rho
    else:
        if outer_radius <= rho.max():
            raise ValueError("outer radius must enclose the surface")
        r0, r1 = rho, np.full_like(rho, outer_radius)
    r = r0[:, None] + (r1 - r0)[:, None] * t[None, :]
    pts = c + (d / rho[:, None])[:, None, :] * r[:, :, None]
    wts = solid[:, None] * r**2 * (r1 - r0)[:, None] * wt[None, :]
    return pts.reshape(-1, 3), wts.ravel()


@dataclass(frozen=True)
class GreenResult:
    """Both sides of Green's first identity and their relative gap."""

    boundary: float
    volume: float
    scale: float

    @property
    def gap(self) -> float:
        return abs(self.boundary - self.volume) / self.scale if self.scale > 0 else 0.0


def run_green_identity(
    mesh: SurfaceMesh,
    alpha: float,
    source: pt.FieldSample | Callable[[NDArray[np.float64], bool], pt.FieldSample],
    test: BumpField,
    side: str = "interior",
    radial_order: int = 16,
) -> GreenResult:
    """Compare ``+-<t(u, pi), w>`` on the surface with ``2<E u, E w> + alpha<u, w> - <pi, div w>``.

    ``source(x, gradient)`` must return a solution of the homogeneous
    equations in the chosen domain (a point force with its pole on the other
    side).  On the exterior side the volume integral runs out to the support
    radius of ``test``, beyond which every integrand vanishes.
    """
    y, wy, n = _surface_rule(mesh)
    fs = source(y, True)
    w_s, _ = test.value_and_gradient(y)
    sign = 1.0 if side == "interior" else -1.0
    boundary = sign * float(np.sum(wy * np.sum(fs.traction(n) * w_s, axis=1)))
    if side == "interior":
        X, wx = cone_rule(mesh, None, radial_order)
    else:
        reach = float(np.linalg.norm(test.center - mesh.center())) + test.radius
        X, wx = cone_rule(mesh, reach, radial_order)
    fv = source(X, True)
    w, gw = test.value_and_gradient(X)
    Eu = 0.5 * (fv.grad_u + np.swapaxes(fv.grad_u, 1, 2))
    Ew = 0.5 * (gw + np.swapaxes(gw, 1, 2))
    parts = np.stack(
        [2 * np.einsum("mab,mab->m", Eu, Ew), alpha * np.sum(fv.u * w, axis=1), -fv.pi * np.trace(gw, axis1=1, axis2=2)]
    )
    volume = float(np.sum(parts @ wx))
    scale = max(abs(boundary), float(np.sum(np.abs(parts) @ wx)))
    return GreenResult(boundary, volume, scale)


def point_source(alpha: float, pole: ArrayLike, force: ArrayLike) -> Callable[[NDArray[np.float64], bool], pt.FieldSample]:
    pole = np.asarray(pole, dtype=float)
    force = np.asarray(force, dtype=float)
    return lambda x, gradient=False: pt.point_force_field(alpha, pole, force, x, gradient)


# ---------------------------------------------------------------------------
# Representation formula


def sphere_probes(count: int, radius: float, center: ArrayLike = (0, 0, 0), seed: int = 1) -> NDArray[np.float64]:
    """``count`` random points on a sphere."""
    x = np.random.default_rng(seed).normal(size=(count, 3))
    return np.asarray(center, dtype=float) + radius * x / np.linalg.norm(x, axis=1, keepdims=True)


def representation_error(
    mesh: SurfaceMesh, alpha: float, pole: ArrayLike, force: ArrayLike, probes: ArrayLike, side: str = "interior"
) -> float:
    """Max relative error of ``u = +-(V t(u) - W u)`` at probes for a point-force flow.

    The sign is ``+`` inside the surface (pole outside) and ``-`` outside
    (pole inside).  An identically zero field gives zero.
    """
    src = point_source(alpha, pole, force)
    c, n = mesh.panel_centroids, mesh.panel_normals
    on = src(c, True)
    P = np.atleast_2d(np.asarray(probes, dtype=float))
    exact = src(P, False).u
    rep = pt.single_layer_eval(mesh, on.traction(n), alpha, P).u - pt.double_layer_eval(mesh, on.u, alpha, P).u
    if side != "interior":
        rep = -rep
    scale = np.abs(exact).max()
    if scale == 0:
        return float(np.abs(rep).max())
    return float(np.abs(rep - exact).max() / scale)


def run_representation(
    levels: Sequence[int] = (1, 2, 3),
    alpha: float = 0.0,
    side: str = "interior",
    force: ArrayLike = (1.0, -0.5, 0.25),
    probes: int = 25,
) -> RefinementStudy:
    """Representation-formula residual on unit icospheres of increasing level.

    For interior probes the pole sits outside at ``(0.9, 0, 1.2)``; for
    exterior probes it sits inside at ``0.3 (0, -0.6, 0.8)``.
    """
    if side == "interior":
        pole, P = np.array([0.9, 0.0, 1.2]), sphere_probes(probes, 0.5)
    else:
        pole, P = 0.3 * np.array([0.0, -0.6, 0.8]), sphere_probes(probes, 2.0)
    errs, sizes = [], []
    for lev in levels:
        mesh = make_sphere(1.0, lev)
        errs.append(representation_error(mesh, alpha, pole, force, P, side))
        sizes.append(mesh.mean_diameter)
    return RefinementStudy(f"representation_{side}_alpha{alpha:g}", tuple(levels), tuple(sizes), tuple(errs))


# ---------------------------------------------------------------------------
# Far-field decay


def fibonacci_sphere(count: int) -> NDArray[np.float64]:
    """Nearly uniform unit vectors; equal weights approximate the sphere average."""
    i = np.arange(count) + 0.5
    z = 1.0 - 2.0 * i / count
    phi = np.pi * (1.0 + np.sqrt(5.0)) * i
    s = np.sqrt(1.0 - z * z)
    return np.stack([s * np.cos(phi), s * np.sin(phi), z], axis=1)


@dataclass(frozen=True)
class DecayStudy:
    """Far-field magnitudes per radius and their fitted log-log slopes.

    Magnitudes are sphere averages over ``points`` directions.  ``leray`` is
    the sphere average of ``|u - u_inf|``.
    """

    radii: tuple[float, ...]
    velocity: tuple[float, ...]
    gradient: tuple[float, ...]
    pressure: tuple[float, ...]
    points: int

    @staticmethod
    def _slope(r, v) -> float:
        return float(scipy.stats.linregress(np.log(r), np.log(v)).slope)

    @property
    def velocity_slope(self) -> float:
        return self._slope(self.radii, self.velocity)

    @property
    def gradient_slope(self) -> float:
        return self._slope(self.radii, self.gradient)

    @property
    def pressure_slope(self) -> float:
        return self._slope(self.radii, self.pressure)

    @property
    def leray(self) -> tuple[float, ...]:
        return self.velocity

    def leray_ratios(self) -> tuple[float, ...]:
        """Average at each radius over the average at the previous one."""
        v = self.velocity
        return tuple(v[i + 1] / v[i] for i in range(len(v) - 1))

    def rows(self) -> list[dict[str, float]]:
        return [
            {"radius": r, "velocity": self.velocity[i], "gradient": self.gradient[i], "pressure": self.pressure[i],
             "velocity_slope": self.velocity_slope, "gradient_slope": self.gradient_slope,
             "pressure_slope": self.pressure_slope}
            for i, r in enumerate(self.radii)
        ]


def run_decay_study(state: FlowState, radii: Sequence[float], points: int = 200) -> DecayStudy:
    """Sphere-averaged ``|u - u_inf|``, ``|grad u|`` and ``|pi|`` of the exterior flow at each radius."""
    radii = tuple(float(r) for r in radii)
    if len(radii) < 4:
        raise ValueError("the decay study needs at least 4 radii")
    if state.grids.exterior is not None and state.grids.exterior.outer_radius is not None:
        if min(radii) <= state.grids.exterior.outer_radius:
            raise ValueError("decay radii must lie beyond the exterior force support")
    dirs = fibonacci_sphere(points)
    c = state.mesh.center()
    vel, grad, pres = [], [], []
    for r in radii:
        s = state.evaluate(c + r * dirs, gradient=True, inside=np.zeros(points, bool))
        vel.append(float(np.mean(np.linalg.norm(s.u - state.params.u_inf, axis=1))))
        grad.append(float(np.mean(np.linalg.norm(s.grad_u, axis=(1, 2)))))
        pres.append(float(np.mean(np.abs(s.pi))))
    return DecayStudy(radii, tuple(vel), tuple(grad), tuple(pres), points)


# ---------------------------------------------------------------------------
# Weighted norms


@dataclass(frozen=True)
class WeightedNormSet:
    """Exterior norms over an annulus with weight ``rho = sqrt(1 + |x|^2)``.

    ``weighted_velocity`` is the ``L2`` norm of ``(u - u_inf) / rho``.
    """

    weighted_velocity: float
    gradient: float
    pressure: float
    inner_radius: float
    outer_radius: float


def weighted_norms(
    state: FlowState, inner_radius: float, outer_radius: float, radial_order: int = 12, directions: int = 200
) -> WeightedNormSet:
    """Annulus norms by Gauss-Legendre in the radius and equal-weight directions."""
    if not 0 < inner_radius < outer_radius:
        raise ValueError("need 0 < inner_radius < outer_radius")
    c = state.mesh.center()
    if np.any(state.mesh.contains(c + inner_radius * fibonacci_sphere(directions))):
        raise ValueError("annulus must lie outside the surface")
    t, wt = gauss_legendre_01(radial_order)
    r = inner_radius + (outer_radius - inner_radius) * t
    dirs = fibonacci_sphere(directions)
    X = (c + r[:, None, None] * dirs[None, :, :]).reshape(-1, 3)
    w = (4 * np.pi / directions) * ((outer_radius - inner_radius) * wt * r**2)[:, None] * np.ones(directions)
    w = w.ravel()
    s = state.evaluate(X, gradient=True, inside=np.zeros(len(X), bool))
    rho2 = 1.0 + np.sum(X * X, axis=1)
    vel = float(np.sqrt(np.sum(w * np.sum((s.u - state.params.u_inf) ** 2, axis=1) / rho2)))
    grad = float(np.sqrt(np.sum(w * np.sum(s.grad_u**2, axis=(1, 2)))))
    pres = float(np.sqrt(np.sum(w * s.pi**2)))
    return WeightedNormSet(vel, grad, pres, float(inner_radius), float(outer_radius))


# ---------------------------------------------------------------------------
# Manufactured transmission solves


@dataclass(frozen=True)
class ManufacturedResult:
    level: int
    h: float
    max_relative_error: float
    residual: float


def manufactured_probes(count: int = 50, seed: int = 1) -> tuple[NDArray[np.float64], NDArray[np.bool_]]:
    """Random directions; the first half at radius 0.5 (inside a unit surface), the rest at radius 2."""
    d = np.random.default_rng(seed).normal(size=(count, 3))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    inside = np.arange(count) < count // 2
    return d * np.where(inside, 0.5, 2.0)[:, None], inside


def manufactured_error(
    params: ProblemParams, mesh: SurfaceMesh, probes: int = 50, seed: int = 1,
    solver: TransmissionSolver | None = None,
) -> tuple[float, float]:
    """Largest pointwise relative velocity error of a manufactured transmission solve, and the linear residual.

    Probe radii are scaled by the bounding radius of the surface about its
    center.  A factored ``solver`` for the same parameters and mesh is reused.
    """
    prob = manufactured_problem(params, mesh)
    center = mesh.center()
    radius = float(np.linalg.norm(mesh.vertices - center, axis=1).max())
    P, inside = manufactured_probes(probes, seed)
    P = center + radius * P
    solver = solver or TransmissionSolver(params, mesh, Grids())
    state = solver.solve(prob.data(mesh))
    got = state.evaluate(P, inside=inside).u
    exact = prob.exact(P, inside)
    err = np.linalg.norm(got - exact, axis=1) / np.linalg.norm(exact, axis=1)
    return float(err.max()), state.residual


def run_manufactured_study(
    params: ProblemParams, levels: Sequence[int] = (1, 2, 3), radius: float = 1.0, probes: int = 50, seed: int = 1
) -> tuple[RefinementStudy, list[ManufacturedResult]]:
    """Manufactured transmission solves on icospheres of increasing level."""
    results = []
    for lev in levels:
        mesh = make_sphere(radius, lev)
        err, res = manufactured_error(params, mesh, probes, seed)
        results.append(ManufacturedResult(lev, mesh.mean_diameter, err, res))
    study = RefinementStudy(
        "manufactured", tuple(levels), tuple(r.h for r in results), tuple(r.max_relative_error for r in results),
        {"residual": tuple(r.residual for r in results)},
    )
    return study, results
