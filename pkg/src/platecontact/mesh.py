"""Structured axis-aligned rectangular meshes and boundary bookkeeping."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

SIDES = ("bottom", "right", "top", "left")

# outward unit normals per side; tangent is (n2, -n1)
SIDE_NORMALS = {
    "bottom": (0.0, -1.0),
    "right": (1.0, 0.0),
    "top": (0.0, 1.0),
    "left": (-1.0, 0.0),
}

BC_KINDS = ("signorini", "simply_supported", "clamped", "free", "dirichlet")


def side_frame(side: str) -> tuple[np.ndarray, np.ndarray]:
    n = np.array(SIDE_NORMALS[side])
    return n, np.array([n[1], -n[0]])


@dataclass(frozen=True)
class StructuredMesh:
    origin: tuple[float, float]
    extents: tuple[float, float]
    nx: int
    ny: int

    @property
    def hx(self) -> float:
        return self.extents[0] / self.nx

    @property
    def hy(self) -> float:
        return self.extents[1] / self.ny

    @property
    def h(self) -> float:
        return max(self.hx, self.hy)

    @property
    def n_nodes(self) -> int:
        return (self.nx + 1) * (self.ny + 1)

    @property
    def n_elements(self) -> int:
        return self.nx * self.ny

    def node_id(self, i, j):
        return np.asarray(j) * (self.nx + 1) + np.asarray(i)

    @property
    def nodes(self) -> np.ndarray:
        """Node coordinates, shape (n_nodes, 2), x index running fastest."""
        x = self.origin[0] + self.hx * np.arange(self.nx + 1)
        y = self.origin[1] + self.hy * np.arange(self.ny + 1)
        X, Y = np.meshgrid(x, y)
        return np.column_stack([X.ravel(), Y.ravel()])

    @property
    def elements(self) -> np.ndarray:
        """Element connectivity (n_elements, 4), corners counterclockwise from lower-left."""
        i, j = np.meshgrid(np.arange(self.nx), np.arange(self.ny))
        i, j = i.ravel(), j.ravel()
        return np.column_stack([
            self.node_id(i, j),
            self.node_id(i + 1, j),
            self.node_id(i + 1, j + 1),
            self.node_id(i, j + 1),
        ])

    def element_origin(self, e) -> np.ndarray:
        e = np.asarray(e)
        i, j = e % self.nx, e // self.nx
        return np.stack([self.origin[0] + i * self.hx,
                         self.origin[1] + j * self.hy], axis=-1)

    @property
    def corners(self) -> np.ndarray:
        """Corner node ids, counterclockwise starting at the origin."""
        return np.array([
            self.node_id(0, 0),
            self.node_id(self.nx, 0),
            self.node_id(self.nx, self.ny),
            self.node_id(0, self.ny),
        ])

    @property
    def corner_elements(self) -> np.ndarray:
        nx, ny = self.nx, self.ny
        return np.array([0, nx - 1, nx * ny - 1, nx * (ny - 1)])

    @property
    def boundary_edges(self) -> "BoundaryEdges":
        return _boundary_edges(self)

    def side_nodes(self, side: str) -> np.ndarray:
        nx, ny = self.nx, self.ny
        if side == "bottom":
            return self.node_id(np.arange(nx + 1), 0)
        if side == "right":
            return self.node_id(nx, np.arange(ny + 1))
        if side == "top":
            return self.node_id(np.arange(nx, -1, -1), ny)
        if side == "left":
            return self.node_id(0, np.arange(ny, -1, -1))
        raise ValueError(f"unknown side {side!r}")

    def contains(self, point, tol: float = 1e-12) -> bool:
        x, y = point
        L = max(self.extents)
        return (self.origin[0] - tol * L <= x <= self.origin[0] + self.extents[0] + tol * L
                and self.origin[1] - tol * L <= y <= self.origin[1] + self.extents[1] + tol * L)

    def locate(self, point) -> tuple[int, float, float]:
        """Containing element and local coordinates; ties go to the lowest element index."""
        if not self.contains(point):
            raise OutOfDomainError(f"point {tuple(point)} lies outside the mesh domain")
        tx = (point[0] - self.origin[0]) / self.hx
        ty = (point[1] - self.origin[1]) / self.hy
        i = min(max(int(np.ceil(tx)) - 1, 0), self.nx - 1)
        j = min(max(int(np.ceil(ty)) - 1, 0), self.ny - 1)
        xi = min(max(tx - i, 0.0), 1.0)
        eta = min(max(ty - j, 0.0), 1.0)
        return j * self.nx + i, xi, eta


class OutOfDomainError(ValueError):
    pass


@dataclass(frozen=True)
class BoundaryEdges:
    """Boundary edges enumerated counterclockwise starting at the origin."""

    side: np.ndarray         # side name per edge
    element: np.ndarray
    nodes: np.ndarray        # (n_edges, 2), counterclockwise order
    start: np.ndarray        # (n_edges, 2) coordinates of the first node
    end: np.ndarray
    length: np.ndarray

    def __len__(self):
        return len(self.element)


def _boundary_edges(mesh: StructuredMesh) -> BoundaryEdges:
    nx, ny = mesh.nx, mesh.ny
    sides, elems, nodes = [], [], []
    for side in SIDES:
        ids = mesh.side_nodes(side)
        if side == "bottom":
            el = np.arange(nx)
        elif side == "right":
            el = np.arange(ny) * nx + nx - 1
        elif side == "top":
            el = (ny - 1) * nx + np.arange(nx - 1, -1, -1)
        else:
            el = np.arange(ny - 1, -1, -1) * nx
        sides += [side] * len(el)
        elems.append(el)
        nodes.append(np.column_stack([ids[:-1], ids[1:]]))
    nodes = np.vstack(nodes)
    xy = mesh.nodes
    start, end = xy[nodes[:, 0]], xy[nodes[:, 1]]
    return BoundaryEdges(
        side=np.array(sides),
        element=np.concatenate(elems),
        nodes=nodes,
        start=start,
        end=end,
        length=np.linalg.norm(end - start, axis=1),
    )


def build_mesh(origin=(0.0, 0.0), extents=(1.0, 1.0), nx: int = 1, ny: int = 1) -> StructuredMesh:
    origin = (float(origin[0]), float(origin[1]))
    extents = (float(extents[0]), float(extents[1]))
    if not (np.isfinite(extents).all() and min(extents) > 0):
        raise ValueError(f"extents must be positive, got {extents}")
    if int(nx) != nx or int(ny) != ny or nx < 1 or ny < 1:
        raise ValueError(f"element counts must be integers >= 1, got nx={nx}, ny={ny}")
    return StructuredMesh(origin, extents, int(nx), int(ny))


def refine_uniform(mesh: StructuredMesh) -> StructuredMesh:
    return StructuredMesh(mesh.origin, mesh.extents, 2 * mesh.nx, 2 * mesh.ny)


@dataclass(frozen=True)
class SideBC:
    kind: str
    g: float = 0.0

    def __post_init__(self):
        if self.kind not in BC_KINDS:
            raise ValueError(f"unknown boundary condition {self.kind!r}; expected one of {BC_KINDS}")
        if not np.isfinite(self.g):
            raise ValueError("gap value g must be finite")


@dataclass(frozen=True)
class BoundarySpec:
    """One boundary condition per side of the rectangle."""

    bottom: SideBC = field(default_factory=lambda: SideBC("signorini"))
    right: SideBC = field(default_factory=lambda: SideBC("signorini"))
    top: SideBC = field(default_factory=lambda: SideBC("signorini"))
    left: SideBC = field(default_factory=lambda: SideBC("signorini"))

    @classmethod
    def uniform(cls, kind: str, g: float = 0.0) -> "BoundarySpec":
        bc = SideBC(kind, g)
        return cls(bc, bc, bc, bc)

    def __getitem__(self, side: str) -> SideBC:
        if side not in SIDES:
            raise KeyError(side)
        return getattr(self, side)

    def sides_of(self, *kinds: str) -> list[str]:
        return [s for s in SIDES if self[s].kind in kinds]


@dataclass(frozen=True)
class BoundaryQuadrature:
    """Composite Gauss points on boundary edges (flat arrays, edge-major order)."""

    edge: np.ndarray
    side: np.ndarray
    element: np.ndarray
    points: np.ndarray      # (n, 2) physical coordinates
    local: np.ndarray       # (n, 2) reference coordinates in the element
    weights: np.ndarray
    normals: np.ndarray
    tangents: np.ndarray
    h_edge: np.ndarray
    g: np.ndarray

    def __len__(self):
        return len(self.weights)


def boundary_quadrature(mesh: StructuredMesh, spec: BoundarySpec | None = None,
                        m: int = 4, q: int = 4, kinds=None) -> BoundaryQuadrature:
    """Composite Gauss rule with ``m`` subintervals of ``q`` points on each boundary edge.

    With ``kinds`` given, only edges on sides carrying one of those tags are kept.
    """
    if m < 1 or q not in (2, 3, 4):
        raise ValueError(f"need m >= 1 and q in (2, 3, 4), got m={m}, q={q}")
    gp, gw = np.polynomial.legendre.leggauss(q)
    s = ((np.arange(m)[:, None] + 0.5 * (gp[None, :] + 1.0)) / m).ravel()
    ws = np.tile(gw / (2.0 * m), m)

    edges = mesh.boundary_edges
    keep = np.ones(len(edges), dtype=bool)
    if kinds is not None:
        if spec is None:
            raise ValueError("filtering by kind requires a BoundarySpec")
        keep = np.array([spec[sd].kind in kinds for sd in edges.side])
    idx = np.flatnonzero(keep)
    nq = len(s)

    start, end = edges.start[idx], edges.end[idx]
    pts = start[:, None, :] + s[None, :, None] * (end - start)[:, None, :]
    pts = pts.reshape(-1, 2)
    elem = np.repeat(edges.element[idx], nq)
    org = mesh.element_origin(elem)
    local = np.clip((pts - org) / np.array([mesh.hx, mesh.hy]), 0.0, 1.0)
    sides = np.repeat(edges.side[idx], nq)
    normals = np.array([SIDE_NORMALS[sd] for sd in sides]).reshape(-1, 2)
    tangents = np.column_stack([normals[:, 1], -normals[:, 0]])
    gvals = np.array([spec[sd].g if spec is not None else 0.0 for sd in edges.side[idx]])
    return BoundaryQuadrature(
        edge=np.repeat(idx, nq),
        side=sides,
        element=elem,
        points=pts,
        local=local,
        weights=(ws[None, :] * edges.length[idx][:, None]).ravel(),
        normals=normals,
        tangents=tangents,
        h_edge=np.repeat(edges.length[idx], nq),
        g=np.repeat(gvals, nq),
    )
