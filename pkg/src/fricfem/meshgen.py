"""Structured triangulations of axis-aligned rectangles with tagged boundaries.

The physical setup is a rectangular elastic body clamped on its left edge and
resting, with no gap, on a foundation along its bottom edge.  Meshes are
uniform grids of congruent right triangles, so shape regularity is identical
on every element and the nodal quadrature weights on the contact boundary are
exact for piecewise-linear integrands.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

DIRICHLET = "dirichlet"
NEUMANN = "neumann"
CONTACT = "contact"

_VALID_TAGS = (DIRICHLET, NEUMANN, CONTACT)

_MESH_HEADER = "mesh 2d v1"


@dataclass(frozen=True)
class Mesh:
    """Conforming triangulation of a rectangle.

    nodes: (n_nodes, 2) coordinates.
    triangles: (n_triangles, 3) node indices, counterclockwise.
    boundary_edges: (n_edges, 2) node indices (ascending pairs).
    boundary_tags: (n_edges,) strings from {dirichlet, neumann, contact}.
    h: nominal spatial step.
    """

    nodes: np.ndarray
    triangles: np.ndarray
    boundary_edges: np.ndarray
    boundary_tags: np.ndarray
    h: float

    @property
    def n_nodes(self) -> int:
        return self.nodes.shape[0]

    @property
    def n_triangles(self) -> int:
        return self.triangles.shape[0]

    def edges_with_tag(self, tag: str) -> np.ndarray:
        return self.boundary_edges[self.boundary_tags == tag]

    def nodes_with_tag(self, tag: str) -> np.ndarray:
        """Sorted indices of the nodes lying on edges carrying ``tag``."""
        return np.unique(self.edges_with_tag(tag))


def _subdivisions(length: float, h: float, axis: str) -> int:
    ratio = length / h
    n = int(round(ratio))
    if n < 1 or abs(ratio - n) > 0.5 * np.spacing(float(max(n, 1))):
        raise ValueError(
            f"{axis} = {length!r} is not an integer multiple of h = {h!r} "
            f"({axis}/h = {ratio!r})"
        )
    return n


def generate_rect_mesh(width: float, height: float, h: float) -> Mesh:
    """Triangulate [0, width] x [0, height] with uniform right triangles.

    Each grid cell is split along its bottom-left/top-right diagonal, giving
    (width/h + 1)*(height/h + 1) nodes and 2*(width/h)*(height/h) triangles.
    All boundary edges are initially tagged neumann; see :func:`tag_boundary`.
    """
    if width <= 0 or height <= 0 or h <= 0:
        raise ValueError("width, height and h must be positive")
    nx = _subdivisions(width, h, "width")
    ny = _subdivisions(height, h, "height")

    xs = np.linspace(0.0, width, nx + 1)
    ys = np.linspace(0.0, height, ny + 1)
    gx, gy = np.meshgrid(xs, ys)  # row j holds the nodes at height ys[j]
    nodes = np.column_stack([gx.ravel(), gy.ravel()])

    def nid(i, j):
        return j * (nx + 1) + i

    ii, jj = np.meshgrid(np.arange(nx), np.arange(ny))
    a = nid(ii, jj).ravel()
    b = nid(ii + 1, jj).ravel()
    c = nid(ii + 1, jj + 1).ravel()
    d = nid(ii, jj + 1).ravel()
    lower = np.column_stack([a, b, c])  # counterclockwise
    upper = np.column_stack([a, c, d])
    triangles = np.vstack([lower, upper]).astype(np.int64)

    edges = []
    for i in range(nx):  # bottom, y = 0
        edges.append((nid(i, 0), nid(i + 1, 0)))
    for j in range(ny):  # right, x = width
        edges.append((nid(nx, j), nid(nx, j + 1)))
    for i in range(nx):  # top, y = height
        edges.append((nid(i, ny), nid(i + 1, ny)))
    for j in range(ny):  # left, x = 0
        edges.append((nid(0, j), nid(0, j + 1)))
    boundary_edges = np.sort(np.asarray(edges, dtype=np.int64), axis=1)
    boundary_tags = np.full(len(edges), NEUMANN, dtype="<U9")

    return Mesh(nodes, triangles, boundary_edges, boundary_tags, float(h))


def tag_boundary(mesh: Mesh, tol: float = 1e-12) -> Mesh:
    """Tag the left edge dirichlet, the bottom edge contact, the rest neumann.

    Both boundary parts are nonempty by construction, so the clamped part and
    the contact part of the boundary have positive measure.
    """
    x = mesh.nodes[:, 0]
    y = mesh.nodes[:, 1]
    scale = max(float(np.max(np.abs(mesh.nodes))), 1.0)
    i, j = mesh.boundary_edges.T
    on_left = (np.abs(x[i]) <= tol * scale) & (np.abs(x[j]) <= tol * scale)
    on_bottom = (np.abs(y[i]) <= tol * scale) & (np.abs(y[j]) <= tol * scale)
    tags = np.full(len(mesh.boundary_edges), NEUMANN, dtype="<U9")
    tags[on_bottom] = CONTACT
    tags[on_left] = DIRICHLET
    return replace(mesh, boundary_tags=tags)


def contact_weights(mesh: Mesh) -> dict[int, float]:
    """Lumped quadrature weights on the contact boundary.

    The weight of a node is half the total length of the contact edges it
    belongs to (trapezoid rule per edge), so the weights sum to the measure
    of the contact boundary and nodal constraints/integrands are exact for
    piecewise-linear functions.
    """
    weights: dict[int, float] = {}
    for (i, j) in mesh.edges_with_tag(CONTACT):
        length = float(np.linalg.norm(mesh.nodes[j] - mesh.nodes[i]))
        weights[int(i)] = weights.get(int(i), 0.0) + 0.5 * length
        weights[int(j)] = weights.get(int(j), 0.0) + 0.5 * length
    return weights


def triangle_areas(mesh: Mesh) -> np.ndarray:
    """Signed areas; positive for counterclockwise triangles."""
    p = mesh.nodes[mesh.triangles]
    d1 = p[:, 1] - p[:, 0]
    d2 = p[:, 2] - p[:, 0]
    return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])


def shape_regularity(mesh: Mesh) -> np.ndarray:
    """Circumradius / inradius per triangle."""
    p = mesh.nodes[mesh.triangles]
    a = np.linalg.norm(p[:, 1] - p[:, 2], axis=1)
    b = np.linalg.norm(p[:, 2] - p[:, 0], axis=1)
    c = np.linalg.norm(p[:, 0] - p[:, 1], axis=1)
    area = np.abs(triangle_areas(mesh))
    s = 0.5 * (a + b + c)
    inradius = area / s
    circumradius = a * b * c / (4.0 * area)
    return circumradius / inradius


def write_mesh(mesh: Mesh, path) -> None:
    """Write the plain-text mesh format (nodes, triangles, tagged edges)."""
    lines = [_MESH_HEADER, f"nodes {mesh.n_nodes}"]
    lines += [f"{repr(float(x))} {repr(float(y))}" for x, y in mesh.nodes]
    lines.append(f"triangles {mesh.n_triangles}")
    lines += [f"{i} {j} {k}" for i, j, k in mesh.triangles]
    lines.append(f"edges {len(mesh.boundary_edges)}")
    lines += [
        f"{i} {j} {tag}"
        for (i, j), tag in zip(mesh.boundary_edges, mesh.boundary_tags)
    ]
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_mesh(path) -> Mesh:
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if lines[0] != _MESH_HEADER:
        raise ValueError(f"not a mesh file: bad header {lines[0]!r}")
    pos = 1

    def expect_count(keyword):
        nonlocal pos
        word, count = lines[pos].split()
        if word != keyword:
            raise ValueError(f"expected '{keyword} N', got {lines[pos]!r}")
        pos += 1
        return int(count)

    n = expect_count("nodes")
    nodes = np.array(
        [[float(v) for v in lines[pos + k].split()] for k in range(n)]
    )
    pos += n
    m = expect_count("triangles")
    triangles = np.array(
        [[int(v) for v in lines[pos + k].split()] for k in range(m)],
        dtype=np.int64,
    )
    pos += m
    nb = expect_count("edges")
    edges = np.empty((nb, 2), dtype=np.int64)
    tags = np.empty(nb, dtype="<U9")
    for k in range(nb):
        i, j, tag = lines[pos + k].split()
        if tag not in _VALID_TAGS:
            raise ValueError(f"unknown boundary tag {tag!r}")
        edges[k] = (int(i), int(j))
        tags[k] = tag
    # nominal step recovered from the shortest edge
    h = float(
        np.min(np.linalg.norm(nodes[edges[:, 1]] - nodes[edges[:, 0]], axis=1))
    )
    return Mesh(nodes, triangles, edges, tags, h)
