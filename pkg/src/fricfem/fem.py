"""Assembly of the discrete elastic operator, V-norm matrix and load vector.

Displacements use two degrees of freedom per node, interleaved as
``[u_x(0), u_y(0), u_x(1), ...]``.  Piecewise-linear elements on triangles
give constant strains per element, so the element integrals below are exact.
Clamped (dirichlet) degrees of freedom are eliminated; all assembled objects
live on the remaining free subspace, where the stiffness matrix is symmetric
positive definite.

The elasticity law is the linear plane-strain tensor

    F(w) = E*kappa/((1+kappa)(1-2*kappa)) * tr(w) * I + E/(1+kappa) * w,

whose strong-monotonicity constant on symmetric tensors is E/(1+kappa) and
whose Lipschitz constant is E/(1+kappa) + 2*E*kappa/((1+kappa)(1-2*kappa)).
The V inner product is (strain(u), strain(v)) integrated over the body, i.e.
the same assembly with F replaced by the identity on tensors.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .meshgen import CONTACT, DIRICHLET, Mesh, contact_weights, triangle_areas

#: Outward unit normal of the foundation along the bottom edge.
CONTACT_NORMAL = (0.0, -1.0)


class AssemblyError(ValueError):
    pass


class PowerIterationError(RuntimeError):
    pass


@dataclass(frozen=True)
class Material:
    """Linear elastic material: Young modulus E, Poisson ratio kappa."""

    E: float
    kappa: float

    def __post_init__(self):
        if self.E <= 0:
            raise ValueError(f"Young modulus must be positive, got {self.E}")
        if not 0 <= self.kappa < 0.5:
            raise ValueError(f"Poisson ratio must lie in [0, 1/2), got {self.kappa}")

    @property
    def lame_lambda(self) -> float:
        return self.E * self.kappa / ((1 + self.kappa) * (1 - 2 * self.kappa))

    @property
    def monotonicity_constant(self) -> float:
        """Largest m with F(w)·w >= m*|w|^2 for all symmetric w."""
        return self.E / (1 + self.kappa)

    @property
    def lipschitz_constant(self) -> float:
        """Smallest L with |F(w)| <= L*|w| for all symmetric w."""
        return self.E / (1 + self.kappa) + 2 * self.lame_lambda


def elasticity_apply(material: Material, omega: np.ndarray) -> np.ndarray:
    """Apply the plane-strain elasticity tensor to a symmetric 2x2 tensor."""
    omega = np.asarray(omega, dtype=float)
    trace = omega[0, 0] + omega[1, 1]
    return material.lame_lambda * trace * np.eye(2) + (
        material.E / (1 + material.kappa)
    ) * omega


def elasticity_dmatrix(material: Material) -> np.ndarray:
    """3x3 constitutive matrix in Voigt order (e_11, e_22, 2*e_12)."""
    lam = material.lame_lambda
    two_mu = material.E / (1 + material.kappa)
    return np.array(
        [
            [lam + two_mu, lam, 0.0],
            [lam, lam + two_mu, 0.0],
            [0.0, 0.0, 0.5 * two_mu],
        ]
    )


#: Voigt representation of the identity on symmetric tensors (w·w' integrand).
_D_IDENTITY = np.diag([1.0, 1.0, 0.5])


@dataclass(frozen=True)
class DiscreteSystem:
    """Assembled discrete problem on the free (non-clamped) subspace.

    K: stiffness matrix (elastic operator), sparse symmetric positive definite.
    M: V-norm matrix (unit-material stiffness), same sparsity.
    f: load vector from body force and boundary traction.
    free_dofs: indices of free dofs in the full 2*n_nodes numbering.
    dirichlet_dofs: eliminated dof indices.
    contact_nodes: free nodes on the contact boundary (ascending).
    contact_weights: lumped boundary quadrature weight per contact node.
    tangential_dofs / normal_dofs: free-dof index of the x / y component of
        each contact node; with the outward normal (0, -1), the normal
        displacement is u_nu = -u_y and the tangential one is u_x.
    F_b: friction bound (constant on the contact boundary).
    meas_contact: measure of the full contact boundary (including any clamped
        corner node), used for the L2 norm of the friction bound.
    """

    K: sp.csr_array
    M: sp.csr_array
    f: np.ndarray
    free_dofs: np.ndarray
    dirichlet_dofs: np.ndarray
    contact_nodes: np.ndarray
    contact_weights: np.ndarray
    tangential_dofs: np.ndarray
    normal_dofs: np.ndarray
    F_b: float
    meas_contact: float
    n_nodes: int
    normal: tuple[float, float] = CONTACT_NORMAL

    @property
    def ndof(self) -> int:
        return self.f.shape[0]


def _element_geometry(mesh: Mesh):
    """Per-element areas and strain-displacement matrices B (n_tri, 3, 6)."""
    p = mesh.nodes[mesh.triangles]  # (n_tri, 3, 2)
    areas = triangle_areas(mesh)
    if np.any(areas <= 0):
        bad = int(np.argmin(areas))
        raise AssemblyError(
            f"triangle {bad} has nonpositive area {areas[bad]!r}"
        )
    x = p[..., 0]
    y = p[..., 1]
    # gradients of the barycentric shape functions: grad phi_i = (b_i, c_i)/(2A)
    b = np.stack([y[:, 1] - y[:, 2], y[:, 2] - y[:, 0], y[:, 0] - y[:, 1]], axis=1)
    c = np.stack([x[:, 2] - x[:, 1], x[:, 0] - x[:, 2], x[:, 1] - x[:, 0]], axis=1)
    B = np.zeros((len(areas), 3, 6))
    inv2A = 1.0 / (2.0 * areas)
    for i in range(3):
        B[:, 0, 2 * i] = b[:, i] * inv2A
        B[:, 1, 2 * i + 1] = c[:, i] * inv2A
        B[:, 2, 2 * i] = c[:, i] * inv2A
        B[:, 2, 2 * i + 1] = b[:, i] * inv2A
    return areas, B


def _assemble_matrix(mesh: Mesh, D: np.ndarray) -> sp.csr_array:
    areas, B = _element_geometry(mesh)
    Ke = np.einsum("eji,jk,ekl->eil", B, D, B) * areas[:, None, None]
    dofs = np.empty((mesh.n_triangles, 6), dtype=np.int64)
    dofs[:, 0::2] = 2 * mesh.triangles
    dofs[:, 1::2] = 2 * mesh.triangles + 1
    rows = np.repeat(dofs, 6, axis=1).ravel()
    cols = np.tile(dofs, (1, 6)).ravel()
    n = 2 * mesh.n_nodes
    K = sp.coo_array((Ke.ravel(), (rows, cols)), shape=(n, n)).tocsr()
    K.sum_duplicates()
    return K


def _load_vector(mesh: Mesh, f0, f2) -> np.ndarray:
    f0 = np.asarray(f0, dtype=float)
    f2 = np.asarray(f2, dtype=float)
    n = 2 * mesh.n_nodes
    f = np.zeros(n)
    # body force: integral of f0 . v over each triangle puts A/3 per vertex
    areas = triangle_areas(mesh)
    for comp in range(2):
        np.add.at(
            f,
            2 * mesh.triangles.ravel() + comp,
            np.repeat(areas / 3.0, 3) * f0[comp],
        )
    # traction on the neumann part: |e|/2 per endpoint, exact for linear v
    if np.any(f2 != 0):
        from .meshgen import NEUMANN

        for (i, j) in mesh.edges_with_tag(NEUMANN):
            half = 0.5 * float(np.linalg.norm(mesh.nodes[j] - mesh.nodes[i]))
            for comp in range(2):
                f[2 * i + comp] += half * f2[comp]
                f[2 * j + comp] += half * f2[comp]
    return f


def assemble(
    mesh: Mesh,
    material: Material,
    f0=(0.0, 0.0),
    f2=(0.0, 0.0),
    F_b: float = 0.0,
) -> DiscreteSystem:
    """Assemble stiffness, V-norm matrix and loads; eliminate clamped dofs."""
    if F_b < 0:
        raise ValueError(f"friction bound must be nonnegative, got {F_b}")
    n = 2 * mesh.n_nodes
    K_full = _assemble_matrix(mesh, elasticity_dmatrix(material))
    M_full = _assemble_matrix(mesh, _D_IDENTITY)
    f_full = _load_vector(mesh, f0, f2)

    dirichlet_nodes = set(int(v) for v in mesh.nodes_with_tag(DIRICHLET))
    dirichlet_dofs = np.array(
        sorted(2 * v + c for v in dirichlet_nodes for c in (0, 1)), dtype=np.int64
    )
    free_mask = np.ones(n, dtype=bool)
    free_mask[dirichlet_dofs] = False
    free_dofs = np.nonzero(free_mask)[0]
    full_to_free = -np.ones(n, dtype=np.int64)
    full_to_free[free_dofs] = np.arange(free_dofs.size)

    K = K_full[free_dofs][:, free_dofs].tocsr()
    M = M_full[free_dofs][:, free_dofs].tocsr()
    f = f_full[free_dofs]

    weights = contact_weights(mesh)
    meas_contact = float(sum(weights.values()))
    contact_nodes = np.array(
        sorted(v for v in weights if v not in dirichlet_nodes), dtype=np.int64
    )
    w = np.array([weights[int(v)] for v in contact_nodes])
    tangential_dofs = full_to_free[2 * contact_nodes]
    normal_dofs = full_to_free[2 * contact_nodes + 1]

    return DiscreteSystem(
        K=K,
        M=M,
        f=f,
        free_dofs=free_dofs,
        dirichlet_dofs=dirichlet_dofs,
        contact_nodes=contact_nodes,
        contact_weights=w,
        tangential_dofs=tangential_dofs,
        normal_dofs=normal_dofs,
        F_b=float(F_b),
        meas_contact=meas_contact,
        n_nodes=mesh.n_nodes,
    )


def expand(system: DiscreteSystem, u: np.ndarray) -> np.ndarray:
    """Free-dof vector -> full interleaved vector (zeros on clamped dofs)."""
    full = np.zeros(2 * system.n_nodes)
    full[system.free_dofs] = u
    return full


def reduce(system: DiscreteSystem, u_full: np.ndarray) -> np.ndarray:
    return np.asarray(u_full, dtype=float)[system.free_dofs]


def vnorm(system: DiscreteSystem, u: np.ndarray) -> float:
    """Energy-type norm |u|_V = sqrt(u' M u) on the free subspace."""
    return float(np.sqrt(max(u @ (system.M @ u), 0.0)))


def normal_tangential(mesh: Mesh, u_full: np.ndarray, nodes=None):
    """Normal and tangential displacement components on the contact boundary.

    With the outward normal (0, -1) on the bottom edge, u_nu = -u_y (positive
    values penetrate the foundation) and the tangential component is u_x.
    Returns (nodes, u_nu, u_tau); raises if a requested node is not on the
    contact boundary.
    """
    u_full = np.asarray(u_full, dtype=float)
    if u_full.shape != (2 * mesh.n_nodes,):
        raise ValueError(
            f"displacement has {u_full.size} entries, expected {2 * mesh.n_nodes}"
        )
    on_contact = mesh.nodes_with_tag(CONTACT)
    if nodes is None:
        nodes = on_contact
    else:
        nodes = np.asarray(nodes, dtype=np.int64)
        missing = np.setdiff1d(nodes, on_contact)
        if missing.size:
            raise ValueError(f"nodes {missing.tolist()} are not on the contact boundary")
    u_nu = -u_full[2 * nodes + 1]
    u_tau = u_full[2 * nodes]
    return nodes, u_nu, u_tau


def element_strains(mesh: Mesh, u_full: np.ndarray) -> np.ndarray:
    """Constant strain per element in Voigt order (e_11, e_22, 2*e_12)."""
    _, B = _element_geometry(mesh)
    dofs = np.empty((mesh.n_triangles, 6), dtype=np.int64)
    dofs[:, 0::2] = 2 * mesh.triangles
    dofs[:, 1::2] = 2 * mesh.triangles + 1
    return np.einsum("eij,ej->ei", B, np.asarray(u_full, dtype=float)[dofs])


def boundary_mass_matrix(mesh: Mesh) -> sp.csr_array:
    """Consistent mass matrix of the whole boundary, on full dofs.

    Per edge and scalar component the element mass is |e|/6 * [[2, 1], [1, 2]].
    """
    n = 2 * mesh.n_nodes
    rows, cols, vals = [], [], []
    for (i, j) in mesh.boundary_edges:
        length = float(np.linalg.norm(mesh.nodes[j] - mesh.nodes[i]))
        for comp in range(2):
            di, dj = 2 * i + comp, 2 * j + comp
            rows += [di, dj, di, dj]
            cols += [di, dj, dj, di]
            vals += [length / 3.0, length / 3.0, length / 6.0, length / 6.0]
    B = sp.coo_array((vals, (rows, cols)), shape=(n, n)).tocsr()
    B.sum_duplicates()
    return B


def estimate_trace_constant(
    system: DiscreteSystem,
    mesh: Mesh,
    tol: float = 1e-8,
    max_iters: int = 100_000,
) -> float:
    """Best discrete constant d0 with |v|_{L2(boundary)} <= d0 |v|_V.

    d0^2 is the largest generalized eigenvalue of (boundary mass, M) on the
    free subspace, computed by power iteration on M^{-1} B to ``tol`` relative
    accuracy on the eigenvalue.
    """
    B_full = boundary_mass_matrix(mesh)
    B = B_full[system.free_dofs][:, system.free_dofs].tocsr()
    lu = spla.splu(system.M.tocsc())
    rng = np.random.default_rng(0)
    x = rng.standard_normal(system.ndof)
    x /= np.sqrt(x @ (system.M @ x))
    lam = float(x @ (B @ x))
    for _ in range(max_iters):
        y = lu.solve(B @ x)
        norm = np.sqrt(y @ (system.M @ y))
        if norm == 0.0:
            raise PowerIterationError("boundary mass annihilated the iterate")
        x = y / norm
        lam_new = float(x @ (B @ x))
        if abs(lam_new - lam) <= tol * max(abs(lam_new), 1e-300):
            return float(np.sqrt(lam_new))
        lam = lam_new
    raise PowerIterationError(
        f"power iteration did not reach {tol!r} relative accuracy "
        f"in {max_iters} iterations (last eigenvalue {lam!r})"
    )


@dataclass(frozen=True)
class SmallnessReport:
    """Verdict of the uniqueness condition d0^2 |F_b|_{L2(contact)} < m_F."""

    d0: float
    m_F: float
    friction_l2: float
    lhs: float
    passed: bool

    def __str__(self) -> str:
        verdict = "pass" if self.passed else "FAIL"
        return (
            f"smallness {verdict}: d0^2 * |F_b|_L2 = {self.lhs:.6g} "
            f"{'<' if self.passed else '>='} m_F = {self.m_F:.6g} (d0 = {self.d0:.6g})"
        )


def check_smallness(
    system: DiscreteSystem, d0: float, material: Material
) -> SmallnessReport:
    """Evaluate the smallness condition guaranteeing a unique solution.

    For a constant friction bound, |F_b|_{L2(contact)} = F_b * sqrt(meas) with
    the full geometric measure of the contact boundary.
    """
    friction_l2 = system.F_b * float(np.sqrt(system.meas_contact))
    m_F = material.monotonicity_constant
    lhs = d0 * d0 * friction_l2
    return SmallnessReport(
        d0=float(d0),
        m_F=float(m_F),
        friction_l2=friction_l2,
        lhs=float(lhs),
        passed=bool(lhs < m_F),
    )


def write_matrix_coo(matrix, path) -> None:
    """Dump a sparse matrix as 'i j value' triplet lines (debug aid)."""
    coo = sp.coo_array(matrix)
    with open(path, "w") as fh:
        for i, j, v in zip(coo.row, coo.col, coo.data):
            fh.write(f"{i} {j} {repr(float(v))}\n")
