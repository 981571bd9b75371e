"""Closed triangulated surfaces and voxel grids.

A :class:`SurfaceMesh` is a closed, consistently oriented triangulation whose
normals point out of the bounded region it encloses.  Builders cover the
icosphere and a subdivided cube; :func:`load_mesh` reads ASCII OFF/OBJ files
and validates them.  :class:`VolumeGrid` holds voxel quadrature either inside
the surface or in a bounded shell outside it.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from numpy.typing import ArrayLike, NDArray


class MeshError(ValueError):
    """Raised for surfaces that are not closed, manifold, triangulated and orientable."""


@dataclass(frozen=True)
class SurfaceMesh:
    """Closed oriented triangulation with per-panel geometry.

    Only ``vertices`` and ``triangles`` are stored by the caller; the panel
    quantities are derived on construction.
    """

    vertices: NDArray[np.float64]
    triangles: NDArray[np.int64]
    panel_normals: NDArray[np.float64] = field(init=False, repr=False)
    panel_areas: NDArray[np.float64] = field(init=False, repr=False)
    panel_centroids: NDArray[np.float64] = field(init=False, repr=False)
    panel_diameters: NDArray[np.float64] = field(init=False, repr=False)
    panel_radii: NDArray[np.float64] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        verts = np.ascontiguousarray(self.vertices, dtype=float)
        tris = np.ascontiguousarray(self.triangles, dtype=np.int64)
        if verts.ndim != 2 or verts.shape[1] != 3:
            raise MeshError("vertices must have shape (n, 3)")
        if tris.ndim != 2 or tris.shape[1] != 3:
            raise MeshError("triangles must have shape (m, 3)")
        if tris.size and (tris.min() < 0 or tris.max() >= len(verts)):
            raise MeshError("triangle index out of range")
        verts.setflags(write=False)
        tris.setflags(write=False)
        object.__setattr__(self, "vertices", verts)
        object.__setattr__(self, "triangles", tris)
        corners = verts[tris]
        cross = np.cross(corners[:, 1] - corners[:, 0], corners[:, 2] - corners[:, 0])
        twice_area = np.linalg.norm(cross, axis=1)
        if np.any(twice_area <= 0):
            raise MeshError("degenerate triangle with zero area")
        centroids = corners.mean(axis=1)
        edges = np.stack(
            [corners[:, 1] - corners[:, 0], corners[:, 2] - corners[:, 1], corners[:, 0] - corners[:, 2]],
            axis=1,
        )
        derived = {
            "panel_normals": cross / twice_area[:, None],
            "panel_areas": 0.5 * twice_area,
            "panel_centroids": centroids,
            "panel_diameters": np.linalg.norm(edges, axis=2).max(axis=1),
            "panel_radii": np.linalg.norm(corners - centroids[:, None, :], axis=2).max(axis=1),
        }
        for name, arr in derived.items():
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n_panels(self) -> int:
        return len(self.triangles)

    @property
    def corners(self) -> NDArray[np.float64]:
        """Panel vertex coordinates, shape ``(N, 3, 3)``."""
        return self.vertices[self.triangles]

    @property
    def total_area(self) -> float:
        return float(self.panel_areas.sum())

    @property
    def mean_diameter(self) -> float:
        return float(self.panel_diameters.mean())

    def volume(self) -> float:
        """Enclosed volume from the divergence theorem (positive for outward normals)."""
        return float(np.sum(self.panel_areas * np.einsum("ij,ij->i", self.panel_centroids, self.panel_normals)) / 3.0)

    def gauss_residual(self) -> float:
        """``|sum area * normal| / total area``; zero for a closed surface."""
        vec = (self.panel_areas[:, None] * self.panel_normals).sum(axis=0)
        return float(np.linalg.norm(vec) / self.total_area)

    def bounding_box(self) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
        return self.vertices.min(axis=0), self.vertices.max(axis=0)

    def center(self) -> NDArray[np.float64]:
        """Area-weighted centroid of the surface."""
        return (self.panel_areas[:, None] * self.panel_centroids).sum(axis=0) / self.total_area

    def contains(self, points: ArrayLike) -> NDArray[np.bool_]:
        """Point-in-polyhedron test by ray parity."""
        return points_inside(self, points)

    def distance(self, points: ArrayLike) -> NDArray[np.float64]:
        """Unsigned distance from each point to the surface."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        best = np.full(len(pts), np.inf)
        corners = self.corners
        for start in range(0, len(pts), 256):
            chunk = pts[start : start + 256]
            d = point_triangle_distance(chunk[:, None, :], corners[None, :, 0], corners[None, :, 1], corners[None, :, 2])
            best[start : start + 256] = d.min(axis=1)
        return best


def _check_topology(triangles: NDArray[np.int64]) -> bool:
    """Validate closedness and manifoldness; return True if orientation is consistent."""
    undirected = Counter()
    directed = Counter()
    for a, b, c in triangles:
        for u, v in ((a, b), (b, c), (c, a)):
            if u == v:
                raise MeshError("triangle with repeated vertex")
            undirected[(min(u, v), max(u, v))] += 1
            directed[(u, v)] += 1
    counts = np.array(list(undirected.values()))
    if np.any(counts == 1):
        raise MeshError("non-closed surface: boundary edges present")
    if np.any(counts > 2):
        raise MeshError("non-manifold edge shared by more than two triangles")
    return all(n == 1 for n in directed.values())


def validated_mesh(vertices: ArrayLike, triangles: ArrayLike) -> SurfaceMesh:
    """Build a mesh after checking topology; globally flip it if it points inward."""
    tris = np.asarray(triangles, dtype=np.int64)
    if not _check_topology(tris):
        raise MeshError("inconsistent triangle orientation (cannot be fixed by a global flip)")
    mesh = SurfaceMesh(np.asarray(vertices, dtype=float), tris)
    if mesh.volume() < 0:
        mesh = SurfaceMesh(mesh.vertices, tris[:, ::-1])
    return mesh


def _icosahedron() -> tuple[NDArray[np.float64], NDArray[np.int64]]:
    t = (1.0 + np.sqrt(5.0)) / 2.0
    verts = np.array(
        [
            [-1, t, 0], [1, t, 0], [-1, -t, 0], [1, -t, 0],
            [0, -1, t], [0, 1, t], [0, -1, -t], [0, 1, -t],
            [t, 0, -1], [t, 0, 1], [-t, 0, -1], [-t, 0, 1],
        ],
        dtype=float,
    )
    faces = np.array(
        [
            [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
            [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
            [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
            [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
        ],
        dtype=np.int64,
    )
    return verts / np.linalg.norm(verts, axis=1, keepdims=True), faces


def _subdivide(verts: list, faces: NDArray[np.int64], project) -> NDArray[np.int64]:
    cache: dict[tuple[int, int], int] = {}

    def midpoint(a: int, b: int) -> int:
        key = (min(a, b), max(a, b))
        if key not in cache:
            verts.append(project(0.5 * (verts[a] + verts[b])))
            cache[key] = len(verts) - 1
        return cache[key]

    out = []
    for a, b, c in faces:
        ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
        out.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]])
    return np.array(out, dtype=np.int64)


def make_sphere(radius: float = 1.0, refinement: int = 2, center: ArrayLike = (0.0, 0.0, 0.0)) -> SurfaceMesh:
    """Icosphere with ``20 * 4**refinement`` panels and vertices on the exact sphere."""
    if refinement < 0:
        raise ValueError("refinement level must be non-negative")
    if radius <= 0:
        raise ValueError("radius must be positive")
    verts0, faces = _icosahedron()
    verts = list(verts0)
    unit = lambda v: v / np.linalg.norm(v)  # noqa: E731
    for _ in range(refinement):
        faces = _subdivide(verts, faces, unit)
    vertices = radius * np.array(verts) + np.asarray(center, dtype=float)
    return SurfaceMesh(vertices, faces)


def make_cube(edge: float = 1.0, divisions: int = 1, center: ArrayLike = (0.0, 0.0, 0.0)) -> SurfaceMesh:
    """Axis-aligned cube; each face split into ``2 * divisions**2`` triangles."""
    if edge <= 0 or divisions < 1:
        raise ValueError("edge must be positive and divisions >= 1")
    n = divisions
    index: dict[tuple[int, int, int], int] = {}
    verts: list[tuple[float, float, float]] = []

    def vid(i: int, j: int, k: int) -> int:
        key = (i, j, k)
        if key not in index:
            index[key] = len(verts)
            verts.append((i / n - 0.5, j / n - 0.5, k / n - 0.5))
        return index[key]

    faces = []
    # each face: fixed axis, value, and two in-plane axes ordered so that
    # (u x v) points outward
    for axis in range(3):
        u_ax, v_ax = (axis + 1) % 3, (axis + 2) % 3
        for side, flip in ((0, True), (n, False)):
            for a in range(n):
                for b in range(n):
                    quad = []
                    for da, db in ((0, 0), (1, 0), (1, 1), (0, 1)):
                        ijk = [0, 0, 0]
                        ijk[axis] = side
                        ijk[u_ax] = a + da
                        ijk[v_ax] = b + db
                        quad.append(vid(*ijk))
                    if flip:
                        quad = quad[::-1]
                    faces.append([quad[0], quad[1], quad[2]])
                    faces.append([quad[0], quad[2], quad[3]])
    vertices = edge * np.array(verts) + np.asarray(center, dtype=float)
    return validated_mesh(vertices, np.array(faces))


def _read_off(lines: list[str]) -> tuple[NDArray[np.float64], list[list[int]]]:
    tokens = []
    for line in lines:
        line = line.split("#", 1)[0].strip()
        if line:
            tokens.append(line.split())
    if not tokens or not tokens[0][0].upper().endswith("OFF"):
        raise MeshError("missing OFF header")
    header = tokens[0][1:] if len(tokens[0]) > 1 else tokens[1]
    body = tokens[1:] if len(tokens[0]) > 1 else tokens[2:]
    n_verts, n_faces = int(header[0]), int(header[1])
    verts = np.array([[float(v) for v in row[:3]] for row in body[:n_verts]])
    faces = []
    for row in body[n_verts : n_verts + n_faces]:
        count = int(row[0])
        faces.append([int(v) for v in row[1 : 1 + count]])
    if len(verts) != n_verts or len(faces) != n_faces:
        raise MeshError("OFF file is truncated")
    return verts, faces


def _read_obj(lines: list[str]) -> tuple[NDArray[np.float64], list[list[int]]]:
    verts, faces = [], []
    for line in lines:
        parts = line.split("#", 1)[0].split()
        if not parts:
            continue
        if parts[0] == "v":
            verts.append([float(v) for v in parts[1:4]])
        elif parts[0] == "f":
            idx = []
            for item in parts[1:]:
                i = int(item.split("/")[0])
                idx.append(i - 1 if i > 0 else len(verts) + i)
            faces.append(idx)
    return np.array(verts, dtype=float).reshape(-1, 3), faces


def load_mesh(path: str | Path) -> SurfaceMesh:
    """Read an ASCII OFF or OBJ triangle mesh and validate it.

    Raises :class:`MeshError` for non-triangle faces, open surfaces,
    non-manifold edges and inconsistent orientation.  A surface whose faces
    are all reversed is flipped to point outward.
    """
    path = Path(path)
    lines = path.read_text().splitlines()
    suffix = path.suffix.lower()
    if suffix == ".off":
        verts, faces = _read_off(lines)
    elif suffix == ".obj":
        verts, faces = _read_obj(lines)
    else:
        raise MeshError(f"unsupported mesh format {suffix!r} (expected .off or .obj)")
    if any(len(f) != 3 for f in faces):
        raise MeshError("non-triangle faces are not supported")
    if not faces:
        raise MeshError("mesh has no faces")
    return validated_mesh(verts, np.array(faces, dtype=np.int64))


def write_off(mesh: SurfaceMesh, path: str | Path) -> None:
    """Write the mesh as ASCII OFF with full float precision."""
    with open(path, "w") as fh:
        fh.write("OFF\n")
        fh.write(f"{len(mesh.vertices)} {mesh.n_panels} 0\n")
        for v in mesh.vertices:
            fh.write(" ".join(repr(float(c)) for c in v) + "\n")
        for t in mesh.triangles:
            fh.write(f"3 {t[0]} {t[1]} {t[2]}\n")


# ---------------------------------------------------------------------------
# Distances and point location


def point_triangle_distance(p, a, b, c) -> NDArray[np.float64]:
    """Distance from points ``p`` to triangles ``(a, b, c)`` (all broadcastable ``(..., 3)``).

    Region-based closest-point computation.
    """
    ab, ac, ap = b - a, c - a, p - a
    d1 = np.einsum("...i,...i->...", ab, ap)
    d2 = np.einsum("...i,...i->...", ac, ap)
    bp = p - b
    d3 = np.einsum("...i,...i->...", ab, bp)
    d4 = np.einsum("...i,...i->...", ac, bp)
    cp = p - c
    d5 = np.einsum("...i,...i->...", ab, cp)
    d6 = np.einsum("...i,...i->...", ac, cp)
    va = d3 * d6 - d5 * d4
    vb = d5 * d2 - d1 * d6
    vc = d1 * d4 - d3 * d2
    shape = np.broadcast(d1, va).shape
    s = np.zeros(shape)
    t = np.zeros(shape)
    done = np.zeros(shape, dtype=bool)

    def assign(mask, s_val, t_val):
        nonlocal done
        m = mask & ~done
        s[m] = np.broadcast_to(s_val, shape)[m]
        t[m] = np.broadcast_to(t_val, shape)[m]
        done |= m

    with np.errstate(divide="ignore", invalid="ignore"):
        assign((d1 <= 0) & (d2 <= 0), 0.0, 0.0)
        assign((d3 >= 0) & (d4 <= d3), 1.0, 0.0)
        assign((d6 >= 0) & (d5 <= d6), 0.0, 1.0)
        assign((vc <= 0) & (d1 >= 0) & (d3 <= 0), d1 / (d1 - d3), 0.0)
        assign((vb <= 0) & (d2 >= 0) & (d6 <= 0), 0.0, d2 / (d2 - d6))
        w = (d4 - d3) / ((d4 - d3) + (d5 - d6))
        assign((va <= 0) & ((d4 - d3) >= 0) & ((d5 - d6) >= 0), 1.0 - w, w)
        denom = va + vb + vc
        assign(np.ones(shape, dtype=bool), vb / denom, vc / denom)
    closest = a + s[..., None] * ab + t[..., None] * ac
    return np.linalg.norm(p - closest, axis=-1)


_RAY_DIRECTIONS = np.array(
    [
        [0.5773502691896258, 0.5773502691896258, 0.5773502691896258],
        [0.2672612419124244, -0.5345224838248488, 0.8017837257372732],
        [-0.8164965809277261, 0.4082482904638631, 0.4082482904638631],
        [0.1104315260973065, 0.9387584432302283, -0.3263127237427521],
    ]
)
_RAY_DIRECTIONS = _RAY_DIRECTIONS / np.linalg.norm(_RAY_DIRECTIONS, axis=1, keepdims=True)


def _ray_crossings(points, direction, corners, tol):
    """Crossing parity along ``direction`` and a flag for near-degenerate hits."""
    v0, v1, v2 = corners[:, 0], corners[:, 1], corners[:, 2]
    e1, e2 = v1 - v0, v2 - v0
    pvec = np.cross(direction, e2)
    det = np.einsum("ij,ij->i", e1, pvec)
    parallel = np.abs(det) < tol
    inv = np.where(parallel, 0.0, 1.0 / np.where(parallel, 1.0, det))
    tvec = points[:, None, :] - v0[None]
    u = np.einsum("mij,ij->mi", tvec, pvec) * inv
    qvec = np.cross(tvec, e1[None])
    v = np.einsum("j,mij->mi", direction, qvec) * inv
    t = np.einsum("mij,ij->mi", qvec, e2) * inv
    hit = (~parallel) & (u >= 0) & (v >= 0) & (u + v <= 1) & (t > 0)
    edge_tol = 1e-9
    near_edge = (~parallel) & (t > 0) & (
        (np.abs(u) < edge_tol) | (np.abs(v) < edge_tol) | (np.abs(1 - u - v) < edge_tol)
    ) & (u > -edge_tol) & (v > -edge_tol) & (u + v < 1 + edge_tol)
    return hit.sum(axis=1) % 2 == 1, near_edge.any(axis=1)


def points_inside(mesh: SurfaceMesh, points: ArrayLike, chunk: int = 512) -> NDArray[np.bool_]:
    """Ray-parity inside test, re-casting along a new direction when a ray grazes an edge."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    corners = mesh.corners
    scale = float(np.max(mesh.panel_diameters)) ** 2
    inside = np.zeros(len(pts), dtype=bool)
    for start in range(0, len(pts), chunk):
        block = pts[start : start + chunk]
        result = np.zeros(len(block), dtype=bool)
        pending = np.arange(len(block))
        for direction in _RAY_DIRECTIONS:
            parity, degenerate = _ray_crossings(block[pending], direction, corners, 1e-14 * scale)
            ok = ~degenerate
            result[pending[ok]] = parity[ok]
            pending = pending[~ok]
            if len(pending) == 0:
                break
        if len(pending):
            # every ray grazed an edge; fall back to majority of the attempts
            votes = np.zeros(len(pending))
            for direction in _RAY_DIRECTIONS:
                votes += _ray_crossings(block[pending], direction, corners, 1e-14 * scale)[0]
            result[pending] = votes > len(_RAY_DIRECTIONS) / 2
        inside[start : start + chunk] = result
    return inside


# ---------------------------------------------------------------------------
# Volume quadrature


@dataclass(frozen=True)
class VolumeGrid:
    """Voxel quadrature: cell centers, equal weights ``h**3``, and the region they cover.

    ``region`` is ``"interior"`` for cells inside the surface and ``"exterior"``
    for a bounded shell outside it (``outer_radius`` about ``center``).
    """

    centers: NDArray[np.float64]
    h: float
    region: str = "interior"
    center: NDArray[np.float64] = field(default_factory=lambda: np.zeros(3))
    outer_radius: float | None = None

    def __post_init__(self) -> None:
        if self.region not in ("interior", "exterior"):
            raise ValueError("region must be 'interior' or 'exterior'")
        centers = np.ascontiguousarray(self.centers, dtype=float).reshape(-1, 3)
        centers.setflags(write=False)
        object.__setattr__(self, "centers", centers)

    @property
    def n_cells(self) -> int:
        return len(self.centers)

    @property
    def weights(self) -> NDArray[np.float64]:
        return np.full(self.n_cells, self.h**3)

    @property
    def cell_volume(self) -> float:
        return self.h**3

    def total_volume(self) -> float:
        return self.n_cells * self.h**3


def _lattice(lo: NDArray[np.float64], hi: NDArray[np.float64], h: float) -> NDArray[np.float64]:
    center = 0.5 * (lo + hi)
    counts = np.ceil((hi - lo) / h).astype(int) + 1
    axes = [center[i] + (np.arange(counts[i]) - 0.5 * (counts[i] - 1)) * h for i in range(3)]
    grid = np.meshgrid(*axes, indexing="ij")
    return np.stack([g.ravel() for g in grid], axis=1)


def make_volume_grid(mesh: SurfaceMesh, h: float) -> VolumeGrid:
    """Voxel centers strictly inside ``mesh`` on a lattice of spacing ``h``."""
    if h <= 0:
        raise ValueError("cell size must be positive")
    lo, hi = mesh.bounding_box()
    if h > float(np.min(hi - lo)):
        raise ValueError("cell size exceeds the mesh bounding box")
    candidates = _lattice(lo, hi, h)
    keep = points_inside(mesh, candidates)
    centers = candidates[keep]
    if len(centers) == 0:
        raise ValueError("no voxel center falls inside the surface")
    return VolumeGrid(centers, float(h), "interior", mesh.center())


def make_shell_grid(mesh: SurfaceMesh, h: float, outer_radius: float, inner_radius: float = 0.0) -> VolumeGrid:
    """Voxel centers outside ``mesh`` with ``inner_radius <= |x - c| <= outer_radius``.

    ``c`` is the surface centroid.  This carries forces supported in a
    bounded annulus of the exterior domain.
    """
    if h <= 0:
        raise ValueError("cell size must be positive")
    center = mesh.center()
    if outer_radius <= inner_radius:
        raise ValueError("outer radius must exceed inner radius")
    lo, hi = center - outer_radius, center + outer_radius
    candidates = _lattice(lo, hi, h)
    dist = np.linalg.norm(candidates - center, axis=1)
    candidates = candidates[(dist <= outer_radius) & (dist >= inner_radius)]
    candidates = candidates[~points_inside(mesh, candidates)]
    if len(candidates) == 0:
        raise ValueError("shell grid is empty")
    return VolumeGrid(candidates, float(h), "exterior", center, float(outer_radius))
