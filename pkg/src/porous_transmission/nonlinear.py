"""Darcy-Forchheimer-Brinkman nonlinearity and the fixed-point loop around the linear solver.

The interior velocity is iterated as samples (value and gradient) at the
cell centres of the interior volume grid.  Each step solves the linear
transmission problem with the extra interior force ``I(v) = k|v|v + beta (v.grad)v``
and samples the new interior velocity.

Norms used here are cell-quadrature surrogates: the ``H1`` norm of a sampled
field is ``sqrt(sum_c w_c (|u_c|^2 + |grad u_c|^2))`` and forces are measured in
the matching ``L2`` norm.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .geometry import SurfaceMesh, VolumeGrid
from .transmission import FlowState, Grids, ProblemParams, SolverError, TransmissionData, TransmissionSolver


@dataclass(frozen=True)
class NonlinearConfig:
    """Coefficients of the nonlinearity and controls of the fixed-point loop.

    ``k`` and ``beta`` may have either sign.
    """

    k: float = 0.0
    beta: float = 0.0
    max_iters: int = 50
    tol: float = 1e-8
    relaxation: float = 1.0

    def __post_init__(self) -> None:
        for name in ("k", "beta"):
            if not np.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if int(self.max_iters) != self.max_iters or self.max_iters < 1:
            raise ValueError("max_iters must be an integer >= 1")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if not 0 < self.relaxation <= 1:
            raise ValueError("relaxation must lie in (0, 1]")

    @property
    def is_linear(self) -> bool:
        return self.k == 0 and self.beta == 0


@dataclass(frozen=True)
class CellField:
    """Velocity ``u`` (n, 3) and gradient ``grad[c, a, b] = du_a/dx_b`` sampled at cell centres."""

    u: NDArray[np.float64]
    grad: NDArray[np.float64]

    @staticmethod
    def zeros(n: int) -> "CellField":
        return CellField(np.zeros((n, 3)), np.zeros((n, 3, 3)))

    def __add__(self, other: "CellField") -> "CellField":
        return CellField(self.u + other.u, self.grad + other.grad)

    def __sub__(self, other: "CellField") -> "CellField":
        return CellField(self.u - other.u, self.grad - other.grad)

    def scaled(self, c: float) -> "CellField":
        return CellField(c * self.u, c * self.grad)


def h1_norm(v: CellField, grid: VolumeGrid) -> float:
    return float(np.sqrt(grid.cell_volume * (np.sum(v.u**2) + np.sum(v.grad**2))))


def l2_norm(f: ArrayLike, grid: VolumeGrid) -> float:
    return float(np.sqrt(grid.cell_volume * np.sum(np.asarray(f) ** 2)))


def nonlinear_term(v: CellField, cfg: NonlinearConfig) -> NDArray[np.float64]:
    """Cell-wise ``k |v| v + beta (v . grad) v``."""
    speed = np.linalg.norm(v.u, axis=1)
    convective = np.einsum("cab,cb->ca", v.grad, v.u)
    return cfg.k * speed[:, None] * v.u + cfg.beta * convective


def sample_interior(state: FlowState, grid: VolumeGrid) -> CellField:
    """Interior velocity and gradient at the cell centres of ``grid``."""
    s = state.evaluate(grid.centers, gradient=True, inside=np.ones(grid.n_cells, bool))
    return CellField(s.u, s.grad_u)


@dataclass
class IterationTrace:
    """Per-iteration diagnostics of :func:`picard_solve`.

    ``ratios[i]`` is ``update_norms[i + 1] / update_norms[i]``, so it has one
    entry fewer than the updates.  ``residuals`` holds the root-mean-square
    interior residual at the probe points after each iteration, when probes
    were given.
    """

    update_norms: list[float] = field(default_factory=list)
    solution_norms: list[float] = field(default_factory=list)
    ratios: list[float] = field(default_factory=list)
    residuals: list[float] = field(default_factory=list)
    converged: bool = False

    @property
    def iterations(self) -> int:
        return len(self.update_norms)

    def rows(self) -> list[dict[str, float]]:
        out = []
        for i, upd in enumerate(self.update_norms):
            out.append(
                {
                    "iteration": i + 1,
                    "update_norm": upd,
                    "solution_norm": self.solution_norms[i],
                    "ratio": self.ratios[i - 1] if i > 0 else float("nan"),
                    "residual": self.residuals[i] if i < len(self.residuals) else float("nan"),
                }
            )
        return out


class NonConvergenceError(RuntimeError):
    """The fixed-point loop did not converge; ``trace`` holds the history."""

    def __init__(self, message: str, trace: IterationTrace) -> None:
        super().__init__(message)
        self.trace = trace


#: Step of the central differences used by :func:`interior_residual`.
FD_STEP = 1e-3


def interior_residual(
    state: FlowState, cfg: NonlinearConfig, points: ArrayLike, applied_force: ArrayLike, data_force: ArrayLike
) -> NDArray[np.float64]:
    """Residual ``lap u - alpha u - grad pi - k|u|u - beta (u.grad)u - f`` at interior points.

    The Laplacian and pressure gradient of the layer potentials are central
    differences of their exact gradients and pressures.  The volume potential
    satisfies its equation with the applied cell force by construction, so
    its contribution enters as ``applied_force`` (the force of the cell that
    holds each point) rather than through differences of a cell sum.
    ``data_force`` is the prescribed force at the points.
    """
    X = np.atleast_2d(np.asarray(points, dtype=float))
    layers = FlowState(state.densities, state.params, state.mesh, Grids(), TransmissionData.zeros(state.mesh))
    inside = np.ones(len(X), bool)
    h = FD_STEP
    lap = np.zeros_like(X)
    grad_pi = np.zeros_like(X)
    for axis in range(3):
        e = np.zeros(3)
        e[axis] = h
        plus = layers.evaluate(X + e, gradient=True, inside=inside)
        minus = layers.evaluate(X - e, gradient=True, inside=inside)
        lap += (plus.grad_u[:, :, axis] - minus.grad_u[:, :, axis]) / (2 * h)
        grad_pi[:, axis] = (plus.pi - minus.pi) / (2 * h)
    base = layers.evaluate(X, inside=inside).u
    linear_part = lap - state.params.alpha * base - grad_pi
    full = state.evaluate(X, gradient=True, inside=inside)
    nl = nonlinear_term(CellField(full.u, full.grad_u), cfg)
    return linear_part + np.asarray(applied_force) - nl - np.asarray(data_force)


def interior_probes(mesh: SurfaceMesh, count: int = 20, seed: int = 5) -> NDArray[np.float64]:
    """Random points in the ball of half the inscribed radius about the surface center."""
    center = mesh.center()
    reach = 0.5 * float(mesh.distance(center[None, :])[0])
    rng = np.random.default_rng(seed)
    d = rng.normal(size=(count, 3))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    return center + d * reach * rng.uniform(0.0, 1.0, size=(count, 1))


def _host_cells(grid: VolumeGrid, points: NDArray[np.float64]) -> NDArray[np.int64]:
    d = np.abs(points[:, None, :] - grid.centers[None, :, :]).max(axis=2)
    host = np.argmin(d, axis=1)
    if np.any(d[np.arange(len(points)), host] > 0.5 * grid.h * (1 + 1e-9)):
        raise ValueError("residual probe outside the interior grid")
    return host


def picard_solve(
    params: ProblemParams,
    mesh: SurfaceMesh,
    grids: Grids,
    data: TransmissionData,
    cfg: NonlinearConfig,
    solver: TransmissionSolver | None = None,
    initial: CellField | None = None,
    probes: ArrayLike | None = None,
) -> tuple[FlowState, IterationTrace]:
    """Fixed-point iteration ``v <- (1 - r) v + r U(v)`` on the interior velocity.

    ``U(v)`` solves the linear problem with interior force ``f+ + I(v)``.  The
    loop stops once the update norm is at most ``tol`` times the norm of the
    new iterate; with ``k = beta = 0`` the first solve is already the fixed
    point.  Raises :class:`NonConvergenceError` after ``max_iters`` steps.
    """
    grid = grids.interior
    if grid is None:
        raise ValueError("the nonlinear problem needs an interior grid")
    solver = solver or TransmissionSolver(params, mesh, grids)
    base_force = np.zeros((grid.n_cells, 3)) if data.f_plus is None else np.asarray(data.f_plus)
    v = initial or CellField.zeros(grid.n_cells)
    trace = IterationTrace()
    probe_pts = None if probes is None else np.atleast_2d(np.asarray(probes, dtype=float))
    probe_host = None if probe_pts is None else _host_cells(grid, probe_pts)
    state: FlowState | None = None
    for _ in range(int(cfg.max_iters)):
        with np.errstate(over="ignore", invalid="ignore"):
            force = base_force + nonlinear_term(v, cfg)
        if not np.all(np.isfinite(force)):
            break
        try:
            state = solver.solve(TransmissionData(data.h0, data.g0, force, data.f_minus))
        except SolverError:
            break
        new = sample_interior(state, grid)
        if cfg.relaxation != 1.0:
            new = v.scaled(1.0 - cfg.relaxation) + new.scaled(cfg.relaxation)
        with np.errstate(over="ignore", invalid="ignore"):
            update = h1_norm(new - v, grid)
            size = h1_norm(new, grid)
        if not (np.isfinite(update) and np.isfinite(size)):
            break
        if trace.update_norms and trace.update_norms[-1] > 0:
            trace.ratios.append(update / trace.update_norms[-1])
        trace.update_norms.append(update)
        trace.solution_norms.append(size)
        v = new
        if probe_pts is not None:
            applied = force[probe_host]
            r = interior_residual(state, cfg, probe_pts, applied, base_force[probe_host])
            trace.residuals.append(float(np.sqrt(np.mean(r**2))))
        if cfg.is_linear or update <= cfg.tol * size or size == 0.0:
            trace.converged = True
            return state, trace
    raise NonConvergenceError(
        f"no convergence in {trace.iterations} iterations (last update ratio "
        f"{trace.ratios[-1] if trace.ratios else float('nan'):.3g}); the data may exceed the smallness bound",
        trace,
    )


def random_cell_fields(grid: VolumeGrid, count: int, rng: np.random.Generator, scale: float = 1.0) -> list[CellField]:
    """Smooth random fields: random combinations of low-degree polynomials and sines, with exact gradients."""
    x = grid.centers - grid.centers.mean(axis=0)
    out = []
    for _ in range(count):
        lin = rng.normal(size=(3, 3))
        quad = rng.normal(size=(3, 3, 3)) * 0.5
        amp = rng.normal(size=(3, 3)) * 0.5
        freq = rng.uniform(0.5, 2.0, size=(3, 3))
        const = rng.normal(size=3)
        u = const + x @ lin.T + 0.5 * np.einsum("abc,nb,nc->na", quad, x, x)
        grad = np.broadcast_to(lin, (len(x), 3, 3)) + 0.5 * (
            np.einsum("abc,nc->nab", quad, x) + np.einsum("acb,nc->nab", quad, x)
        )
        phase = x[:, None, :] * freq[None, :, :]  # (n, a, b)
        u = u + np.einsum("ab,nab->na", amp, np.sin(phase))
        grad = grad + amp[None, :, :] * freq[None, :, :] * np.cos(phase)
        out.append(CellField(scale * u, scale * np.ascontiguousarray(grad)))
    return out


def lipschitz_ratios(pairs: list[tuple[CellField, CellField]], grid: VolumeGrid, cfg: NonlinearConfig) -> NDArray[np.float64]:
    """``|I(v) - I(w)| / ((|v| + |w|) |v - w|)`` for each pair, in the cell norms."""
    out = []
    for v, w in pairs:
        num = l2_norm(nonlinear_term(v, cfg) - nonlinear_term(w, cfg), grid)
        den = (h1_norm(v, grid) + h1_norm(w, grid)) * h1_norm(v - w, grid)
        out.append(num / den)
    return np.array(out)


def _data_norm(data: TransmissionData, mesh: SurfaceMesh, grids: Grids) -> float:
    area = mesh.panel_areas[:, None]
    total = float(np.sum(area * data.h0**2) + np.sum(area * data.g0**2))
    if data.f_plus is not None and grids.interior is not None:
        total += l2_norm(data.f_plus, grids.interior) ** 2
    if data.f_minus is not None and grids.exterior is not None:
        total += l2_norm(data.f_minus, grids.exterior) ** 2
    return float(np.sqrt(total))


def data_norm(data: TransmissionData, params: ProblemParams, mesh: SurfaceMesh, grids: Grids) -> float:
    """Surrogate data norm: area-weighted ``L2`` of ``h0``, ``g0`` and the far-field velocity, cell ``L2`` of the forces."""
    base = _data_norm(data, mesh, grids)
    return float(np.sqrt(base**2 + mesh.total_area * np.sum(params.u_inf**2)))


@dataclass(frozen=True)
class SmallnessReport:
    """Empirical surrogates of the smallness constants.

    ``c_star`` bounds the linear solution map (data norm to interior ``H1``),
    ``c1`` the quadratic growth of the nonlinearity; ``zeta = 3/(16 c1 c*^2)``
    and ``eta = 1/(4 c1 c*)``.  These are observed maxima over random probes,
    not proven bounds.
    """

    c_star: float
    c1: float
    zeta: float
    eta: float
    data_norm: float
    probes: int

    @property
    def data_ratio(self) -> float:
        """``data_norm / zeta``; below one means the data is inside the estimated ball."""
        return self.data_norm / self.zeta if self.zeta > 0 else float("inf")


def random_data(mesh: SurfaceMesh, grids: Grids, rng: np.random.Generator) -> TransmissionData:
    """Random boundary data and interior force with unit-scale entries."""
    N = mesh.n_panels
    f_plus = None if grids.interior is None else rng.normal(size=(grids.interior.n_cells, 3))
    return TransmissionData(rng.normal(size=(N, 3)), rng.normal(size=(N, 3)), f_plus, None)


def smallness_report(
    params: ProblemParams,
    mesh: SurfaceMesh,
    grids: Grids,
    data: TransmissionData,
    cfg: NonlinearConfig,
    probes: int = 20,
    seed: int = 0,
    solver: TransmissionSolver | None = None,
) -> SmallnessReport:
    """Estimate ``c*`` and ``c1`` by random probing and report the implied ``(zeta, eta)``.

    ``c*`` is the largest observed ratio of interior ``H1`` norm to data norm
    over ``probes`` random data sets, and ``c1`` the largest observed
    ``|I(u)| / |u|^2`` over the corresponding solutions.
    """
    grid = grids.interior
    if grid is None:
        raise ValueError("smallness estimates need an interior grid")
    solver = solver or TransmissionSolver(params, mesh, grids)
    rng = np.random.default_rng(seed)
    c_star = 0.0
    c1 = 0.0
    for _ in range(probes):
        d = random_data(mesh, grids, rng)
        v = sample_interior(solver.solve(d), grid)
        norm_v = h1_norm(v, grid)
        c_star = max(c_star, norm_v / _data_norm(d, mesh, grids))
        if norm_v > 0:
            c1 = max(c1, l2_norm(nonlinear_term(v, cfg), grid) / norm_v**2)
    zeta = 3.0 / (16.0 * c1 * c_star**2) if c1 > 0 else float("inf")
    eta = 1.0 / (4.0 * c1 * c_star) if c1 > 0 else float("inf")
    return SmallnessReport(c_star, c1, zeta, eta, data_norm(data, params, mesh, grids), probes)
