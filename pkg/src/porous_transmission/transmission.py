"""Linear Stokes-Brinkman transmission problem.

The interior domain (inside the surface) carries a Brinkman flow with
damping ``alpha`` and the exterior a Stokes flow with viscosity ratio ``mu``.
Both velocities are represented with one pair of boundary densities
``(Phi, phi)``:

    u+ = N_alpha f+ + W_alpha Phi + V_alpha phi        (inside)
    u- = N_0 f-     + W_0 Phi     + V_0 phi  + u_inf   (outside)

and the densities solve the collocated system enforcing

    u+ - u-                                   = h0
    t(u+) - mu t(u-) + P (u+ + u-) / 2        = g0

on the surface, where ``t`` is the traction with the outward normal and
``P`` a symmetric positive semidefinite 3x3 matrix per panel.
"""

from __future__ import annotations

import time
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from numpy.typing import ArrayLike, NDArray

from . import potentials as pt
from .geometry import SurfaceMesh, VolumeGrid
from .potentials import BoundaryDensityPair, FieldSample

#: Relative tolerance for negative eigenvalues of ``P``.
PSD_TOLERANCE = 1e-12
#: Linear-system residual accepted without iterative refinement.
RESIDUAL_TOLERANCE = 1e-10


class ParameterError(ValueError):
    """Invalid problem parameter; ``key`` names the offending field."""

    def __init__(self, key: str, message: str) -> None:
        super().__init__(f"{key}: {message}")
        self.key = key


class SolverError(RuntimeError):
    """The transmission system could not be solved accurately."""

    def __init__(self, message: str, condition: float | None = None) -> None:
        super().__init__(message if condition is None else f"{message} (condition number ~ {condition:.3e})")
        self.condition = condition


@dataclass(frozen=True)
class ProblemParams:
    """Physical parameters.

    ``p_matrix`` is either one 3x3 matrix or one per panel, shape ``(N, 3, 3)``.
    """

    alpha: float
    mu: float
    p_matrix: NDArray[np.float64] = field(default_factory=lambda: np.zeros((3, 3)))
    u_inf: NDArray[np.float64] = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self) -> None:
        alpha, mu = float(self.alpha), float(self.mu)
        if not np.isfinite(alpha) or alpha <= 0:
            raise ParameterError("alpha", f"must satisfy alpha > 0, got {self.alpha}")
        if not np.isfinite(mu) or mu <= 0:
            raise ParameterError("mu", f"must satisfy mu > 0, got {self.mu}")
        p = np.array(self.p_matrix, dtype=float)
        if p.shape[-2:] != (3, 3) or p.ndim not in (2, 3):
            raise ParameterError("p_matrix", "must be a 3x3 matrix or an array of them")
        if not np.all(np.isfinite(p)):
            raise ParameterError("p_matrix", "entries must be finite")
        blocks = p.reshape(-1, 3, 3)
        if not np.allclose(blocks, np.swapaxes(blocks, 1, 2), rtol=0.0, atol=1e-12 * max(1.0, np.abs(blocks).max())):
            raise ParameterError("p_matrix", "must be symmetric")
        for i, b in enumerate(blocks):
            lowest = np.linalg.eigvalsh(b)[0]
            if lowest < -PSD_TOLERANCE * np.linalg.norm(b, 2):
                where = "" if p.ndim == 2 else f" (panel {i})"
                raise ParameterError(
                    "p_matrix",
                    f"violates the positivity condition <Pv, v> >= 0{where}: eigenvalue {lowest:.6g}",
                )
        u_inf = np.array(self.u_inf, dtype=float).reshape(-1)
        if u_inf.shape != (3,) or not np.all(np.isfinite(u_inf)):
            raise ParameterError("u_inf", "must be a finite 3-vector")
        p.setflags(write=False)
        u_inf.setflags(write=False)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "p_matrix", p)
        object.__setattr__(self, "u_inf", u_inf)

    def panel_p(self, n_panels: int) -> NDArray[np.float64]:
        """``P`` broadcast to one matrix per panel."""
        if self.p_matrix.ndim == 2:
            return np.broadcast_to(self.p_matrix, (n_panels, 3, 3))
        if len(self.p_matrix) != n_panels:
            raise ParameterError("p_matrix", f"has {len(self.p_matrix)} panel matrices for {n_panels} panels")
        return self.p_matrix


@dataclass(frozen=True)
class Grids:
    """Volume quadrature for the interior force and for the bounded exterior force support."""

    interior: VolumeGrid | None = None
    exterior: VolumeGrid | None = None


def _cell_forces(grid: VolumeGrid | None, f: ArrayLike | None, name: str) -> NDArray[np.float64] | None:
    if f is None:
        return None
    arr = np.array(f, dtype=float)
    if grid is None:
        raise ValueError(f"{name} given without a volume grid")
    if arr.shape == (3,):
        arr = np.tile(arr, (grid.n_cells, 1))
    arr = arr.reshape(-1, 3)
    if len(arr) != grid.n_cells:
        raise ValueError(f"{name} must have one 3-vector per cell ({grid.n_cells})")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class TransmissionData:
    """Forces per cell (``None`` for none) and boundary data per panel."""

    h0: NDArray[np.float64]
    g0: NDArray[np.float64]
    f_plus: NDArray[np.float64] | None = None
    f_minus: NDArray[np.float64] | None = None

    def __post_init__(self) -> None:
        h0 = np.array(self.h0, dtype=float).reshape(-1, 3)
        g0 = np.array(self.g0, dtype=float).reshape(-1, 3)
        if h0.shape != g0.shape:
            raise ValueError("h0 and g0 must both have one 3-vector per panel")
        for name, arr in (("h0", h0), ("g0", g0)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        for name in ("f_plus", "f_minus"):
            val = getattr(self, name)
            if val is not None:
                arr = np.array(val, dtype=float).reshape(-1, 3)
                arr.setflags(write=False)
                object.__setattr__(self, name, arr)

    @staticmethod
    def zeros(mesh: SurfaceMesh) -> "TransmissionData":
        return TransmissionData(np.zeros((mesh.n_panels, 3)), np.zeros((mesh.n_panels, 3)))

    def validate(self, mesh: SurfaceMesh, grids: Grids) -> None:
        if len(self.h0) != mesh.n_panels:
            raise ValueError(f"boundary data has {len(self.h0)} panels, mesh has {mesh.n_panels}")
        _cell_forces(grids.interior, self.f_plus, "f_plus")
        _cell_forces(grids.exterior, self.f_minus, "f_minus")

    def scaled(self, c: float) -> "TransmissionData":
        def mul(a):
            return None if a is None else c * a

        return TransmissionData(c * self.h0, c * self.g0, mul(self.f_plus), mul(self.f_minus))

    def __add__(self, other: "TransmissionData") -> "TransmissionData":
        def add(a, b):
            if a is None:
                return b
            if b is None:
                return a
            return a + b

        return TransmissionData(
            self.h0 + other.h0, self.g0 + other.g0, add(self.f_plus, other.f_plus), add(self.f_minus, other.f_minus)
        )


def _newtonian(grid: VolumeGrid | None, f, alpha: float, x, gradient: bool) -> FieldSample:
    X = np.atleast_2d(np.asarray(x, dtype=float))
    if grid is None or f is None or not np.any(f):
        return FieldSample.zeros(len(X), gradient)
    return pt.newtonian_eval(grid, f, alpha, X, gradient)


def build_rhs(
    data: TransmissionData, params: ProblemParams, mesh: SurfaceMesh, grids: Grids
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Boundary data corrected for the Newtonian potentials and the far-field velocity.

    Volume potentials of bounded forces are continuously differentiable across
    the surface, so their traces and tractions are evaluated at the centroids.
    """
    data.validate(mesh, grids)
    c, n = mesh.panel_centroids, mesh.panel_normals
    P = params.panel_p(mesh.n_panels)
    plus = _newtonian(grids.interior, data.f_plus, params.alpha, c, True)
    minus = _newtonian(grids.exterior, data.f_minus, 0.0, c, True)
    h00 = data.h0 - plus.u + minus.u + params.u_inf
    g00 = (
        data.g0
        - plus.traction(n)
        + params.mu * minus.traction(n)
        - 0.5 * np.einsum("nab,nb->na", P, plus.u + minus.u)
        - 0.5 * np.einsum("nab,b->na", P, params.u_inf)
    )
    return h00, g00


def _apply_panel_p(P: NDArray[np.float64], matrix: NDArray[np.float64]) -> NDArray[np.float64]:
    """Left-multiply row blocks of ``matrix`` by the per-panel ``P``."""
    N = len(P)
    return np.einsum("nab,nbc->nac", P, matrix.reshape(N, 3, -1)).reshape(matrix.shape)


@dataclass(frozen=True)
class OperatorCache:
    """Collocation operators for the Brinkman (``alpha``) and Stokes families on one mesh."""

    mesh: SurfaceMesh
    alpha: float
    brinkman: dict[str, pt.BoundaryOperatorBlock]
    stokes: dict[str, pt.BoundaryOperatorBlock]
    #: ``D_alpha - D_0``
    d_difference: NDArray[np.float64]

    @staticmethod
    def build(mesh: SurfaceMesh, alpha: float) -> "OperatorCache":
        return OperatorCache(
            mesh,
            float(alpha),
            pt.assemble_operator_set(mesh, alpha, ("V", "K", "Kstar")),
            pt.assemble_operator_set(mesh, 0.0),
            pt.complementary_hypersingular(mesh, alpha),
        )


def complementary_spectra(operators: OperatorCache) -> dict[str, NDArray[np.float64]]:
    """Singular values of the Brinkman-minus-Stokes operator differences, largest first.

    Purely diagnostic: their decay is the discrete trace of the smoothing
    that makes these differences compact.
    """
    out = {}
    for name in ("V", "K", "Kstar"):
        out[name] = np.linalg.svd(operators.brinkman[name].matrix - operators.stokes[name].matrix, compute_uv=False)
    out["D"] = np.linalg.svd(operators.d_difference, compute_uv=False)
    return out


def assemble_system(
    params: ProblemParams, mesh: SurfaceMesh, operators: OperatorCache | None = None
) -> NDArray[np.float64]:
    """Dense ``6N x 6N`` matrix acting on ``(Phi, phi)``, both panel-major."""
    if operators is None or operators.alpha != params.alpha or operators.mesh is not mesh:
        operators = OperatorCache.build(mesh, params.alpha)
    B = {k: v.matrix for k, v in operators.brinkman.items()}
    S = {k: v.matrix for k, v in operators.stokes.items()}
    mu = params.mu
    I = np.eye(3 * mesh.n_panels)
    top_left = -I + (B["K"] - S["K"])
    top_right = B["V"] - S["V"]
    bottom_left = (1.0 - mu) * S["D"] + operators.d_difference
    bottom_right = 0.5 * (1.0 + mu) * I + (1.0 - mu) * S["Kstar"] + (B["Kstar"] - S["Kstar"])
    if np.any(params.p_matrix):
        P = params.panel_p(mesh.n_panels)
        bottom_left = bottom_left + 0.5 * _apply_panel_p(P, B["K"] + S["K"])
        bottom_right = bottom_right + 0.5 * _apply_panel_p(P, B["V"] + S["V"])
    return np.block([[top_left, top_right], [bottom_left, bottom_right]])


@dataclass(frozen=True)
class FlowSample:
    """Field values at points, with ``inside`` marking points of the interior domain."""

    sample: FieldSample
    inside: NDArray[np.bool_]

    @property
    def u(self) -> NDArray[np.float64]:
        return self.sample.u

    @property
    def pi(self) -> NDArray[np.float64]:
        return self.sample.pi

    @property
    def grad_u(self) -> NDArray[np.float64] | None:
        return self.sample.grad_u

    @property
    def near(self) -> NDArray[np.bool_] | None:
        return self.sample.near


@dataclass(frozen=True)
class FlowState:
    """Solved densities together with everything needed to evaluate the flow."""

    densities: BoundaryDensityPair
    params: ProblemParams
    mesh: SurfaceMesh
    grids: Grids
    data: TransmissionData
    residual: float = 0.0

    def evaluate(self, points: ArrayLike, gradient: bool = False, inside: ArrayLike | None = None) -> FlowSample:
        return evaluate_flow(self, points, gradient, inside)


def _side_field(state: FlowState, X, interior: bool, gradient: bool) -> FieldSample:
    mesh, dens, p = state.mesh, state.densities, state.params
    if interior:
        alpha, grid, f = p.alpha, state.grids.interior, state.data.f_plus
    else:
        alpha, grid, f = 0.0, state.grids.exterior, state.data.f_minus
    out = _newtonian(grid, f, alpha, X, gradient)
    if np.any(dens.phi_big):
        out = out + pt.double_layer_eval(mesh, dens.phi_big, alpha, X, gradient)
    if np.any(dens.phi_small):
        out = out + pt.single_layer_eval(mesh, dens.phi_small, alpha, X, gradient)
    near = pt._near_flag(mesh, X)
    if not interior:
        out = FieldSample(out.u + p.u_inf, out.pi, out.grad_u, near)
    return FieldSample(out.u, out.pi, out.grad_u, near)


def evaluate_flow(
    state: FlowState, points: ArrayLike, gradient: bool = False, inside: ArrayLike | None = None
) -> FlowSample:
    """Velocity and pressure (and optionally the velocity gradient) at off-surface points.

    Points are classified by ray parity unless ``inside`` is given.  ``near``
    flags points within one panel diameter of the surface.
    """
    X = np.atleast_2d(np.asarray(points, dtype=float))
    mask = state.mesh.contains(X) if inside is None else np.asarray(inside, dtype=bool)
    M = len(X)
    u, pi = np.zeros((M, 3)), np.zeros(M)
    grad = np.zeros((M, 3, 3)) if gradient else None
    near = np.zeros(M, bool)
    for interior in (True, False):
        idx = np.nonzero(mask == interior)[0]
        if len(idx) == 0:
            continue
        part = _side_field(state, X[idx], interior, gradient)
        u[idx], pi[idx], near[idx] = part.u, part.pi, part.near
        if gradient:
            grad[idx] = part.grad_u
    return FlowSample(FieldSample(u, pi, grad, near), mask)


class TransmissionSolver:
    """Assembles and factors the system once; each :meth:`solve` is then a pair of triangular solves."""

    def __init__(
        self, params: ProblemParams, mesh: SurfaceMesh, grids: Grids | None = None,
        operators: OperatorCache | None = None,
    ) -> None:
        self.params = params
        self.mesh = mesh
        self.grids = grids or Grids()
        params.panel_p(mesh.n_panels)
        t0 = time.perf_counter()
        self.matrix = assemble_system(params, mesh, operators)
        self.assembly_seconds = time.perf_counter() - t0
        with warnings.catch_warnings():
            warnings.simplefilter("error", scipy.linalg.LinAlgWarning)
            try:
                self._lu = scipy.linalg.lu_factor(self.matrix, check_finite=True)
            except (scipy.linalg.LinAlgWarning, np.linalg.LinAlgError, ValueError) as exc:
                raise SolverError(f"transmission matrix is singular: {exc}", self.condition_number()) from exc
        if np.any(np.diag(self._lu[0]) == 0):
            raise SolverError("transmission matrix is singular", self.condition_number())

    def condition_number(self) -> float:
        """2-norm condition number of the assembled matrix."""
        try:
            s = np.linalg.svd(self.matrix, compute_uv=False)
        except np.linalg.LinAlgError:
            return float("inf")
        return float(s[0] / s[-1]) if s[-1] > 0 else float("inf")

    def solve_vector(self, rhs: NDArray[np.float64]) -> tuple[NDArray[np.float64], float]:
        """Solve for the density vector, refining once if the residual is above tolerance."""
        with np.errstate(over="ignore"):
            scale = max(np.linalg.norm(rhs), np.finfo(float).tiny)
        if not np.isfinite(scale):
            raise SolverError("right-hand side is not finite or overflows")
        x = scipy.linalg.lu_solve(self._lu, rhs)
        res = np.linalg.norm(self.matrix @ x - rhs) / scale
        if res > RESIDUAL_TOLERANCE:
            x = x + scipy.linalg.lu_solve(self._lu, rhs - self.matrix @ x)
            res = np.linalg.norm(self.matrix @ x - rhs) / scale
        if not np.all(np.isfinite(x)):
            raise SolverError("non-finite densities", self.condition_number())
        if res > RESIDUAL_TOLERANCE:
            raise SolverError(f"linear residual {res:.3e} above {RESIDUAL_TOLERANCE:g}", self.condition_number())
        if not np.any(rhs):
            res = 0.0
        return x, float(res)

    def solve(self, data: TransmissionData) -> FlowState:
        h00, g00 = build_rhs(data, self.params, self.mesh, self.grids)
        x, res = self.solve_vector(np.concatenate([h00.ravel(), g00.ravel()]))
        dens = BoundaryDensityPair.from_vector(x)
        return FlowState(dens, self.params, self.mesh, self.grids, data, res)


def solve_linear(
    params: ProblemParams, mesh: SurfaceMesh, grids: Grids | None, data: TransmissionData
) -> FlowState:
    """Assemble, factor and solve the transmission system for one data set."""
    return TransmissionSolver(params, mesh, grids).solve(data)


# ---------------------------------------------------------------------------
# Exact solutions built from point forces


@dataclass(frozen=True)
class PointForce:
    """Fundamental solution with pole ``pole`` and strength ``force``."""

    pole: NDArray[np.float64]
    force: NDArray[np.float64]
    alpha: float

    def field(self, x: ArrayLike, gradient: bool = False) -> FieldSample:
        X = np.atleast_2d(np.asarray(x, dtype=float))
        return pt.point_force_field(self.alpha, self.pole, self.force, X, gradient)


@dataclass(frozen=True)
class ManufacturedProblem:
    """Transmission data whose exact solution is a pair of point-force fields.

    ``plus`` has its pole outside the surface and ``minus`` inside, so each
    solves the homogeneous equations in its own domain.
    """

    params: ProblemParams
    plus: PointForce
    minus: PointForce

    def exact(self, points: ArrayLike, inside: ArrayLike) -> NDArray[np.float64]:
        X = np.atleast_2d(np.asarray(points, dtype=float))
        mask = np.asarray(inside, dtype=bool)
        u = np.empty((len(X), 3))
        if mask.any():
            u[mask] = self.plus.field(X[mask]).u
        if (~mask).any():
            u[~mask] = self.minus.field(X[~mask]).u + self.params.u_inf
        return u

    def data(self, mesh: SurfaceMesh) -> TransmissionData:
        c, n = mesh.panel_centroids, mesh.panel_normals
        P = self.params.panel_p(mesh.n_panels)
        up = self.plus.field(c, True)
        um = self.minus.field(c, True)
        um_u = um.u + self.params.u_inf
        h0 = up.u - um_u
        g0 = up.traction(n) - self.params.mu * um.traction(n) + 0.5 * np.einsum("nab,nb->na", P, up.u + um_u)
        return TransmissionData(h0, g0)


def manufactured_problem(
    params: ProblemParams,
    mesh: SurfaceMesh,
    outer_pole: ArrayLike | None = None,
    inner_pole: ArrayLike | None = None,
    outer_force: ArrayLike = (1.0, -0.5, 0.25),
    inner_force: ArrayLike = (-0.3, 0.8, 0.5),
) -> ManufacturedProblem:
    """Brinkman point force outside the surface for the interior field, Stokes point force inside for the exterior.

    Default poles sit at 1.5 and 0.3 times the surface's bounding radius from
    its center, in two fixed directions.
    """
    center = mesh.center()
    radius = float(np.linalg.norm(mesh.vertices - center, axis=1).max())
    if outer_pole is None:
        outer_pole = center + 1.5 * radius * np.array([0.6, 0.0, 0.8])
    if inner_pole is None:
        inner_pole = center + 0.3 * radius * np.array([0.0, -0.6, 0.8])
    plus = PointForce(np.asarray(outer_pole, float), np.asarray(outer_force, float), params.alpha)
    minus = PointForce(np.asarray(inner_pole, float), np.asarray(inner_force, float), 0.0)
    return ManufacturedProblem(params, plus, minus)

