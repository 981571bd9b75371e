"""Layer and volume potentials on piecewise-constant panels.

Densities are one 3-vector per panel.  Every integral over a panel is taken
with a tiered rule chosen from the ratio of target distance to panel
diameter: the centroid far away, a three-point rule further in, a
degree-4 six-point rule at moderate range, adaptively subdivided six-point
rules close by, and a Duffy rule when the target lies on the panel itself.

Boundary operators are collocated at panel centroids:

* ``V``  single layer trace,
* ``K``  principal value of the double layer,
* ``Kstar`` principal value of the single-layer traction,
* ``D``  traction of the double layer: the Stokes part from the Calderon
  identity in terms of ``V``, ``K`` and ``Kstar``, the Brinkman correction by
  direct collocation of the difference kernel.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.linalg
from numpy.typing import ArrayLike, NDArray

from . import _core
from . import kernels as kn
from .geometry import SurfaceMesh, VolumeGrid
from .quadrature import SIX_POINT, THREE_POINT, gauss_legendre_01

#: Beyond this many panel diameters a panel is integrated with its centroid.
FAR_RATIO = 12.0
#: Beyond this many panel diameters (from the panel's circumscribed ball) a
#: three-point rule is used.
MID_RATIO = 4.0
#: Below this ratio the six-point rule is applied on subdivided children.
NEAR_RATIO = 2.0
MAX_LEVEL = 8
SINGULAR_ORDER = 8
#: Targets closer than this to the surface (in panel diameters) only flag a warning.
NEAR_FLAG_RATIO = 1.0


@dataclass(frozen=True)
class FieldSample:
    """Velocity ``u`` (M, 3), pressure ``pi`` (M,), optional gradient ``grad_u[a, b] = du_a/dx_b``.

    ``near`` marks points closer than one panel diameter to the surface, where
    panel quadrature is less accurate.
    """

    u: NDArray[np.float64]
    pi: NDArray[np.float64]
    grad_u: NDArray[np.float64] | None = None
    near: NDArray[np.bool_] | None = None

    def __add__(self, other: "FieldSample") -> "FieldSample":
        grad = None
        if self.grad_u is not None and other.grad_u is not None:
            grad = self.grad_u + other.grad_u
        near = None
        if self.near is not None or other.near is not None:
            near = np.zeros(len(self.u), dtype=bool)
            for part in (self.near, other.near):
                if part is not None:
                    near |= part
        return FieldSample(self.u + other.u, self.pi + other.pi, grad, near)

    def scaled(self, c: float) -> "FieldSample":
        grad = None if self.grad_u is None else c * self.grad_u
        return FieldSample(c * self.u, c * self.pi, grad, self.near)

    def traction(self, normals: ArrayLike) -> NDArray[np.float64]:
        """``(-pi I + grad u + grad u^T) n`` at every sample."""
        if self.grad_u is None:
            raise ValueError("traction needs the velocity gradient")
        n = np.asarray(normals, dtype=float)
        strain = self.grad_u + np.swapaxes(self.grad_u, -1, -2)
        return np.einsum("...ab,...b->...a", strain, n) - self.pi[..., None] * n

    @staticmethod
    def zeros(m: int, gradient: bool = False) -> "FieldSample":
        return FieldSample(np.zeros((m, 3)), np.zeros(m), np.zeros((m, 3, 3)) if gradient else None, np.zeros(m, bool))


@dataclass(frozen=True)
class BoundaryDensityPair:
    """Double-layer density ``phi_big`` and single-layer density ``phi_small``, (N, 3) each."""

    phi_big: NDArray[np.float64]
    phi_small: NDArray[np.float64]

    def __post_init__(self) -> None:
        big = np.asarray(self.phi_big, dtype=float).reshape(-1, 3)
        small = np.asarray(self.phi_small, dtype=float).reshape(-1, 3)
        if big.shape != small.shape:
            raise ValueError("both densities must have one 3-vector per panel")
        object.__setattr__(self, "phi_big", big)
        object.__setattr__(self, "phi_small", small)

    @classmethod
    def from_vector(cls, x: NDArray[np.float64]) -> "BoundaryDensityPair":
        half = len(x) // 2
        return cls(x[:half].reshape(-1, 3), x[half:].reshape(-1, 3))

    def as_vector(self) -> NDArray[np.float64]:
        return np.concatenate([self.phi_big.ravel(), self.phi_small.ravel()])


@dataclass(frozen=True)
class BoundaryOperatorBlock:
    """Dense collocation matrix of size (3N, 3N); rows and columns ordered panel-major."""

    matrix: NDArray[np.float64]
    which: str
    alpha: float

    @property
    def tag(self) -> str:
        family = "stokes" if self.alpha == 0 else "brinkman"
        return f"{self.which}:{family}"


# ---------------------------------------------------------------------------
# Quadrature engine


def _engine_args(mesh: SurfaceMesh, targets, normals, own):
    X = np.ascontiguousarray(np.atleast_2d(np.asarray(targets, dtype=float)))
    M = len(X)
    nrm = np.zeros((M, 3)) if normals is None else np.ascontiguousarray(np.broadcast_to(normals, (M, 3)), dtype=float)
    own_arr = np.full(M, -1, dtype=np.int64) if own is None else np.asarray(own, dtype=np.int64)
    gl_x, gl_w = gauss_legendre_01(SINGULAR_ORDER)
    geo = (
        np.ascontiguousarray(mesh.corners), mesh.panel_normals, mesh.panel_areas,
        mesh.panel_diameters, mesh.panel_radii, mesh.panel_centroids,
    )
    return X, nrm, own_arr, geo, gl_x, gl_w


def _run(kind, alpha, mesh, X, nrm, own, geo, gl_x, gl_w, dens, as_matrix, matrix_out, field_out, minus_stokes=False):
    _core.ENGINES[kind].run(
        float(alpha), X, nrm, own, *geo, *THREE_POINT, *SIX_POINT, gl_x, gl_w,
        FAR_RATIO, MID_RATIO, NEAR_RATIO, MAX_LEVEL, dens, as_matrix, matrix_out, field_out,
        minus_stokes,
    )


def panel_blocks(
    mesh: SurfaceMesh,
    targets: ArrayLike,
    kind: int,
    alpha: float,
    target_normals: ArrayLike | None = None,
    self_panels: ArrayLike | None = None,
    minus_stokes: bool = False,
) -> NDArray[np.float64]:
    """``blocks[t, p, row, b]``: integral over panel ``p`` of the kernel ``kind`` at target ``t``.

    ``self_panels[t]`` (or -1) names the panel that target ``t`` lies on;
    such pairs, and any pair closer than 1e-10 panel diameters, use the
    singular rule.  With ``minus_stokes`` the Stokes kernel is subtracted
    pointwise, which removes the strongest singularity.
    """
    X, nrm, own, geo, gl_x, gl_w = _engine_args(mesh, targets, target_normals, self_panels)
    out = np.empty((len(X), mesh.n_panels, _core.ROWS[kind], 3))
    _run(
        kind, alpha, mesh, X, nrm, own, geo, gl_x, gl_w, np.zeros((0, 3)), True, out, np.zeros((0, 0)),
        minus_stokes=minus_stokes,
    )
    return out


def panel_field(
    mesh: SurfaceMesh,
    targets: ArrayLike,
    kind: int,
    alpha: float,
    density: ArrayLike,
    target_normals: ArrayLike | None = None,
    self_panels: ArrayLike | None = None,
) -> NDArray[np.float64]:
    """Kernel integrals already contracted with a panel density: shape ``(M, rows)``."""
    X, nrm, own, geo, gl_x, gl_w = _engine_args(mesh, targets, target_normals, self_panels)
    dens = np.ascontiguousarray(_as_density(mesh, density))
    out = np.empty((len(X), _core.ROWS[kind]))
    _run(kind, alpha, mesh, X, nrm, own, geo, gl_x, gl_w, dens, False, np.zeros((0, 0, 0, 0)), out)
    return out


def _as_density(mesh: SurfaceMesh, density: ArrayLike) -> NDArray[np.float64]:
    dens = np.asarray(density, dtype=float)
    if dens.shape == (3,):
        dens = np.broadcast_to(dens, (mesh.n_panels, 3))
    dens = dens.reshape(-1, 3)
    if len(dens) != mesh.n_panels:
        raise ValueError("density must have one 3-vector per panel")
    return dens


def _near_flag(mesh: SurfaceMesh, points: NDArray[np.float64]) -> NDArray[np.bool_]:
    return mesh.distance(points) < NEAR_FLAG_RATIO * mesh.mean_diameter


def _layer_eval(mesh, density, points, kind, alpha, gradient):
    X = np.atleast_2d(np.asarray(points, dtype=float))
    acc = panel_field(mesh, X, kind, alpha, density)
    grad = acc[:, 4:13].reshape(-1, 3, 3).copy() if gradient else None
    return FieldSample(acc[:, :3].copy(), acc[:, 3].copy(), grad, _near_flag(mesh, X))


def single_layer_eval(
    mesh: SurfaceMesh, g: ArrayLike, alpha: float, x: ArrayLike, gradient: bool = False
) -> FieldSample:
    """Single-layer velocity and pressure of traction density ``g`` at off-surface points ``x``."""
    return _layer_eval(mesh, g, x, _core.SL_FIELD, kn._check_alpha(alpha), gradient)


def double_layer_eval(
    mesh: SurfaceMesh, h: ArrayLike, alpha: float, x: ArrayLike, gradient: bool = False
) -> FieldSample:
    """Double-layer velocity and pressure of velocity density ``h`` at off-surface points ``x``."""
    return _layer_eval(mesh, h, x, _core.DL_FIELD, kn._check_alpha(alpha), gradient)


def layer_traction(
    mesh: SurfaceMesh, kind: str, alpha: float, density: ArrayLike, targets: ArrayLike, normals: ArrayLike
) -> NDArray[np.float64]:
    """Traction ``(M, 3)`` of a single (``"single"``) or double (``"double"``) layer at off-surface targets."""
    code = _core.SL_TRACTION if kind == "single" else _core.DL_TRACTION
    return panel_field(mesh, targets, code, kn._check_alpha(alpha), density, normals)


def layer_traction_matrix(
    mesh: SurfaceMesh, kind: str, alpha: float, targets: ArrayLike, normals: ArrayLike
) -> NDArray[np.float64]:
    """Dense map (3M, 3N) from a panel density to tractions at off-surface targets."""
    code = _core.SL_TRACTION if kind == "single" else _core.DL_TRACTION
    blocks = panel_blocks(mesh, targets, code, kn._check_alpha(alpha), normals)
    return _blocks_to_matrix(blocks)


def _blocks_to_matrix(blocks: NDArray[np.float64]) -> NDArray[np.float64]:
    M, N = blocks.shape[:2]
    return np.ascontiguousarray(np.transpose(blocks, (0, 2, 1, 3)).reshape(3 * M, 3 * N))


def offset_points(mesh: SurfaceMesh, factor: float, side: str) -> NDArray[np.float64]:
    """Centroids shifted by ``factor`` local panel diameters into Omega+ (``"inner"``) or Omega- (``"outer"``)."""
    sign = -1.0 if side == "inner" else 1.0
    eps = factor * mesh.panel_diameters
    return mesh.panel_centroids + sign * eps[:, None] * mesh.panel_normals


# ---------------------------------------------------------------------------
# Boundary operators


def _collocation_matrix(mesh: SurfaceMesh, kind: int, alpha: float) -> NDArray[np.float64]:
    blocks = panel_blocks(mesh, mesh.panel_centroids, kind, alpha, mesh.panel_normals, np.arange(mesh.n_panels))
    return _blocks_to_matrix(blocks)


def weighted_transpose(mesh: SurfaceMesh, matrix: NDArray[np.float64]) -> NDArray[np.float64]:
    """Adjoint of a collocation matrix in the area-weighted inner product: ``A^-1 M^T A``."""
    area = np.repeat(mesh.panel_areas, 3)
    return matrix.T * area[None, :] / area[:, None]


def assemble_operator_set(
    mesh: SurfaceMesh, alpha: float, which: tuple[str, ...] = ("V", "K", "Kstar", "D")
) -> dict[str, BoundaryOperatorBlock]:
    """Assemble several collocation operators for one ``alpha``, sharing work where possible."""
    alpha = kn._check_alpha(alpha)
    unknown = set(which) - {"V", "K", "Kstar", "D"}
    if unknown:
        raise ValueError(f"unknown operators {sorted(unknown)}")
    out: dict[str, BoundaryOperatorBlock] = {}
    if "V" in which:
        out["V"] = BoundaryOperatorBlock(_collocation_matrix(mesh, _core.SL_VELOCITY, alpha), "V", alpha)
    if "K" in which:
        out["K"] = BoundaryOperatorBlock(_collocation_matrix(mesh, _core.DL_VELOCITY, alpha), "K", alpha)
    if "Kstar" in which:
        # The discrete transpose of K is only a first-order approximation of the
        # adjoint on P0 panels, so the traction kernel is collocated directly.
        out["Kstar"] = BoundaryOperatorBlock(_collocation_matrix(mesh, _core.SL_TRACTION, alpha), "Kstar", alpha)
    if "D" in which:
        stokes = out if alpha == 0.0 else {}
        missing = tuple(k for k in ("V", "K", "Kstar") if k not in stokes)
        stokes = {**stokes, **assemble_operator_set(mesh, 0.0, missing)} if missing else stokes
        d = stokes_hypersingular(mesh, stokes["V"].matrix, stokes["K"].matrix, stokes["Kstar"].matrix)
        if alpha > 0.0:
            d = d + complementary_hypersingular(mesh, alpha)
        out["D"] = BoundaryOperatorBlock(d, "D", alpha)
    return out


def assemble_boundary_operator(mesh: SurfaceMesh, alpha: float, which: str) -> BoundaryOperatorBlock:
    """Collocation matrix of ``V``, ``K``, ``Kstar`` or ``D`` for the given ``alpha``."""
    if which not in ("V", "K", "Kstar", "D"):
        raise ValueError(f"unknown operator {which!r}")
    return assemble_operator_set(mesh, alpha, (which,))[which]


def interior_point(mesh: SurfaceMesh) -> NDArray[np.float64]:
    """A point inside the surface, as far from it as a few candidates allow."""
    cands = np.vstack([mesh.center()[None, :], offset_points(mesh, 1.0, "inner")[:: max(1, mesh.n_panels // 64)]])
    inside = mesh.contains(cands)
    if not inside.any():
        raise ValueError("could not find a point inside the surface")
    cands = cands[inside]
    return cands[np.argmax(mesh.distance(cands))]


def stokes_hypersingular(
    mesh: SurfaceMesh, V: NDArray[np.float64], K: NDArray[np.float64], Kstar: NDArray[np.float64]
) -> NDArray[np.float64]:
    """Collocated Stokes ``D`` from the exterior Calderon identity ``D = (K* + 1/2) V^-1 (K - 1/2)``.

    For a velocity density ``h`` the traction density ``t = V^-1 (K - 1/2) h``
    is the one whose single layer, minus the double layer of ``h``, vanishes
    inside the surface.  ``V`` annihilates the normal field, so ``t`` is
    fixed by a rank-one regularisation and then shifted along the normal until
    the interior pressure vanishes as well.  Unlike direct collocation of the
    hypersingular kernel, this is consistent for piecewise-constant densities.
    """
    N = mesh.n_panels
    nv = mesh.panel_normals.ravel()
    area = np.repeat(mesh.panel_areas, 3)
    eye = np.eye(3 * N)
    reg = np.outer(nv, nv * area) / mesh.total_area
    lu = scipy.linalg.lu_factor(V + reg)
    t0 = scipy.linalg.lu_solve(lu, K - 0.5 * eye)
    x = interior_point(mesh)[None, :]
    p_single = panel_blocks(mesh, x, _core.SL_FIELD, 0.0)[0, :, 3, :].ravel()
    p_double = panel_blocks(mesh, x, _core.DL_FIELD, 0.0)[0, :, 3, :].ravel()
    # V n has zero velocity and pressure -1 inside
    shift = (p_double - p_single @ t0) / (p_single @ nv)
    t = t0 + np.outer(nv, shift)
    return (Kstar + 0.5 * eye) @ t


def complementary_hypersingular(mesh: SurfaceMesh, alpha: float) -> NDArray[np.float64]:
    """Collocated ``D_alpha - D_0``.

    Subtracting the Stokes kernel pointwise leaves a kernel whose on-panel
    singularity the Duffy rule integrates, so no offsets are needed.
    """
    alpha = kn._check_alpha(alpha)
    blocks = panel_blocks(
        mesh, mesh.panel_centroids, _core.DL_TRACTION, alpha, mesh.panel_normals, np.arange(mesh.n_panels),
        minus_stokes=True,
    )
    return _blocks_to_matrix(blocks)


def offset_hypersingular(
    mesh: SurfaceMesh, alpha: float, offsets: tuple[float, ...] = (0.5, 1.0), weights: tuple[float, ...] = (2.0, -1.0)
) -> NDArray[np.float64]:
    """Double-layer traction at centroids shifted by ``offsets`` panel diameters, extrapolated with ``weights``.

    Both sides are averaged.  On piecewise-constant densities this does not
    converge to ``D`` as the offsets shrink (the density jumps at panel edges
    dominate), so it serves only as a diagnostic.
    """
    N = mesh.n_panels
    mat = np.zeros((3 * N, 3 * N))
    for side in ("inner", "outer"):
        for factor, weight in zip(offsets, weights):
            pts = offset_points(mesh, factor, side)
            mat += 0.5 * weight * layer_traction_matrix(mesh, "double", alpha, pts, mesh.panel_normals)
    return mat


# ---------------------------------------------------------------------------
# Newtonian potentials


def _ball_integral(radius: float, alpha: float) -> float:
    """Integral of ``g_11`` over a ball of ``radius`` centred at the pole.

    By symmetry the integral of ``g`` is this value times the identity.  The
    radial integrand ``r (A1 + A2/3) / 2`` is smooth, so Gauss-Legendre is exact
    to rounding.
    """
    if alpha == 0.0:
        return radius**2 / 3.0
    t, w = gauss_legendre_01(24)
    r = radius * t
    sc = kn.eval_scalar_set(np.sqrt(alpha) * r)
    return float(radius * np.sum(w * 0.5 * r * (sc.a1 + sc.a2 / 3.0)))


def newtonian_eval(
    grid: VolumeGrid,
    f: ArrayLike,
    alpha: float,
    x: ArrayLike,
    gradient: bool = False,
) -> FieldSample:
    """Newtonian velocity ``-sum g(x - y_c) f_c w_c`` and pressure ``-sum p(x - y_c) . f_c w_c``.

    A cell whose cube contains ``x`` is replaced by the integral over the ball
    of equal volume centred at ``x``; that ball contributes nothing to the
    pressure and gradient by symmetry.
    """
    alpha = kn._check_alpha(alpha)
    X = np.ascontiguousarray(np.atleast_2d(np.asarray(x, dtype=float)))
    F = np.asarray(f, dtype=float).reshape(-1, 3)
    if len(F) != grid.n_cells:
        raise ValueError("force must have one 3-vector per cell")
    M = len(X)
    u, pi, grad = np.zeros((M, 3)), np.zeros(M), np.zeros((M, 3, 3))
    active = np.nonzero(np.any(F != 0, axis=1))[0]
    if len(active):
        w = grid.cell_volume
        ball = _ball_integral((3.0 * w / (4.0 * np.pi)) ** (1.0 / 3.0), alpha)
        centers = np.ascontiguousarray(grid.centers[active])
        forces = np.ascontiguousarray(F[active] * w)
        # the host test is inclusive with a little slack so that cell centres
        # on the lattice are always recognised as their own host
        half = 0.5 * grid.h * (1.0 + 1e-9)
        _core.newtonian_field(alpha, X, centers, forces, half, ball / w, gradient, u, pi, grad)
    return FieldSample(u, pi, grad if gradient else None, np.zeros(M, bool))


def point_force_field(
    alpha: float, pole: ArrayLike, force: ArrayLike, x: ArrayLike, gradient: bool = False
) -> FieldSample:
    """Flow ``g(x - pole) force`` of a point force, with pressure and optionally the gradient."""
    alpha = kn._check_alpha(alpha)
    d = np.atleast_2d(np.asarray(x, dtype=float)) - np.asarray(pole, dtype=float)
    b = np.asarray(force, dtype=float)
    u = kn.single_layer_velocity(d, alpha) @ b
    pi = kn.single_layer_pressure(d) @ b
    grad = np.einsum("...jkm,k->...jm", kn.single_layer_gradient(d, alpha), b) if gradient else None
    return FieldSample(u, pi, grad, np.zeros(len(d), bool))


# ---------------------------------------------------------------------------
# Debug dump


_DUMP_MAGIC = b"BIEOP001"


def dump_operator(block: BoundaryOperatorBlock, path: str | Path) -> None:
    """Write ``block`` as: 8-byte magic, int64 N, 16-byte ASCII tag, float64 alpha, row-major float64 data."""
    n_panels = block.matrix.shape[0] // 3
    tag = block.tag.encode("ascii")[:16].ljust(16, b" ")
    with open(path, "wb") as fh:
        fh.write(_DUMP_MAGIC)
        fh.write(struct.pack("<q", n_panels))
        fh.write(tag)
        fh.write(struct.pack("<d", block.alpha))
        fh.write(np.ascontiguousarray(block.matrix, dtype="<f8").tobytes())


def load_operator(path: str | Path) -> BoundaryOperatorBlock:
    """Inverse of :func:`dump_operator`."""
    raw = Path(path).read_bytes()
    if raw[:8] != _DUMP_MAGIC:
        raise ValueError("not an operator dump")
    (n_panels,) = struct.unpack("<q", raw[8:16])
    tag = raw[16:32].decode("ascii").strip()
    (alpha,) = struct.unpack("<d", raw[32:40])
    data = np.frombuffer(raw[40:], dtype="<f8").reshape(3 * n_panels, 3 * n_panels).copy()
    return BoundaryOperatorBlock(data, tag.split(":")[0], alpha)
