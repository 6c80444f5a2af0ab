"""Plane linear elasticity with a mismatch strain on the composite region.

Each composite cell is a bilinear (Q1) element.  Lattice vertices are
duplicated where composite slits separate the cells around them, so the
displacement may jump across slits while staying continuous elsewhere.  Strains
use Voigt engineering notation ``(e_xx, e_yy, 2 e_xy)`` and the energy density is
``(e - e0)^T D (e - e0)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components
from scipy.sparse.linalg import spsolve

from .geometry import Configuration, require_admissible
from .surface import EnergyBreakdown, SurfaceTensions, surface_energy

FILM, SUBSTRATE = 0, 1

_GAUSS = np.array([-1.0, 1.0]) / math.sqrt(3.0)
# local node order: (i, j), (i+1, j), (i+1, j+1), (i, j+1)
_XI = np.array([-1.0, 1.0, 1.0, -1.0])
_ETA = np.array([-1.0, -1.0, 1.0, 1.0])


class ElasticityError(ValueError):
    """Invalid material data or mesh/displacement mismatch."""


class SolverError(RuntimeError):
    def __init__(self, message: str, residual: float):
        super().__init__(message)
        self.residual = residual


def isotropic_voigt(lam: float, mu: float) -> np.ndarray:
    """Plane-strain isotropic stiffness in engineering Voigt form."""
    return np.array([[lam + 2 * mu, lam, 0.0], [lam, lam + 2 * mu, 0.0], [0.0, 0.0, mu]])


_MANDEL = np.diag([1.0, 1.0, math.sqrt(2.0)])


def coercivity_constant(D: np.ndarray) -> float:
    """Largest ``c`` with ``D e : e >= 2 c |e|^2`` over symmetric strains."""
    # Voigt engineering shear is sqrt(2) times the Mandel component
    DM = _MANDEL @ D @ _MANDEL
    return float(np.linalg.eigvalsh(0.5 * (DM + DM.T)).min()) / 2.0


@dataclass(frozen=True, eq=False)
class Material:
    """Per-phase stiffness plus an affine mismatch ``u0(x) = M0 x``.

    ``e0_table`` (shape ``(nx, ny, 3)``, engineering Voigt) overrides the
    mismatch cell by cell.  With ``mismatch_everywhere`` the mismatch also
    applies inside the substrate.
    """

    lam_F: float = 1.0
    mu_F: float = 1.0
    lam_S: float = 1.0
    mu_S: float = 1.0
    M0: np.ndarray = field(default_factory=lambda: np.zeros((2, 2)))
    voigt_F: np.ndarray | None = None
    voigt_S: np.ndarray | None = None
    e0_table: np.ndarray | None = None
    mismatch_everywhere: bool = False

    def __post_init__(self):
        M0 = np.asarray(self.M0, dtype=float)
        if M0.shape != (2, 2) or not np.all(np.isfinite(M0)):
            raise ElasticityError("M0 must be a finite 2x2 matrix")
        object.__setattr__(self, "M0", M0)
        for name in ("voigt_F", "voigt_S"):
            v = getattr(self, name)
            if v is not None:
                v = np.asarray(v, dtype=float)
                if v.shape != (3, 3) or not np.allclose(v, v.T):
                    raise ElasticityError(f"{name} must be a symmetric 3x3 matrix")
                object.__setattr__(self, name, v)
        if self.e0_table is not None:
            object.__setattr__(self, "e0_table", np.asarray(self.e0_table, dtype=float))
        for phase, D in (("film", self.D(FILM)), ("substrate", self.D(SUBSTRATE))):
            if not coercivity_constant(D) > 0:
                raise ElasticityError(f"{phase} stiffness is not positive definite on symmetric strains")

    @classmethod
    def homogeneous(cls, lam: float = 1.0, mu: float = 1.0, M0=None, **kw) -> "Material":
        return cls(lam, mu, lam, mu, np.zeros((2, 2)) if M0 is None else M0, **kw)

    def D(self, phase: int) -> np.ndarray:
        if phase == FILM:
            return self.voigt_F if self.voigt_F is not None else isotropic_voigt(self.lam_F, self.mu_F)
        return self.voigt_S if self.voigt_S is not None else isotropic_voigt(self.lam_S, self.mu_S)

    def coercivity(self) -> dict:
        return {"film": coercivity_constant(self.D(FILM)), "substrate": coercivity_constant(self.D(SUBSTRATE))}

    @property
    def e0_film(self) -> np.ndarray:
        M = self.M0
        return np.array([M[0, 0], M[1, 1], M[0, 1] + M[1, 0]])

    def has_mismatch(self) -> bool:
        return self.e0_table is not None or bool(np.any(self.M0 != 0))

    def as_record(self) -> dict:
        rec = {"film": {"lam": self.lam_F, "mu": self.mu_F},
               "substrate": {"lam": self.lam_S, "mu": self.mu_S},
               "M0": self.M0.tolist()}
        if self.voigt_F is not None:
            rec["voigt_film"] = self.voigt_F.tolist()
        if self.voigt_S is not None:
            rec["voigt_substrate"] = self.voigt_S.tolist()
        if self.mismatch_everywhere:
            rec["mismatch_everywhere"] = True
        return rec

    @classmethod
    def from_record(cls, rec: dict) -> "Material":
        try:
            return cls(
                lam_F=float(rec["film"]["lam"]), mu_F=float(rec["film"]["mu"]),
                lam_S=float(rec["substrate"]["lam"]), mu_S=float(rec["substrate"]["mu"]),
                M0=np.asarray(rec.get("M0", [[0, 0], [0, 0]]), dtype=float),
                voigt_F=rec.get("voigt_film"), voigt_S=rec.get("voigt_substrate"),
                mismatch_everywhere=bool(rec.get("mismatch_everywhere", False)),
            )
        except (KeyError, TypeError) as exc:
            raise ElasticityError(f"malformed material descriptor: {exc}") from exc


@dataclass(frozen=True, eq=False)
class SplitMesh:
    nx: int
    ny: int
    hx: float
    hy: float
    cells: np.ndarray          # (ne, 2) cell indices of the elements
    elem_nodes: np.ndarray     # (ne, 4) node ids in local order
    node_vertex: np.ndarray    # (nn, 2) lattice vertex of each node
    node_xy: np.ndarray        # (nn, 2) coordinates
    phase: np.ndarray          # (ne,) FILM or SUBSTRATE
    elem_component: np.ndarray  # (ne,) mesh component label
    n_components: int

    @property
    def n_nodes(self) -> int:
        return len(self.node_vertex)

    @property
    def n_elements(self) -> int:
        return len(self.cells)

    def duplicated_vertices(self) -> int:
        """Number of lattice vertices carrying more than one node."""
        _, counts = np.unique(self.node_vertex, axis=0, return_counts=True)
        return int((counts > 1).sum())

    def node_component(self) -> np.ndarray:
        comp = np.empty(self.n_nodes, dtype=int)
        comp[self.elem_nodes.ravel()] = np.repeat(self.elem_component, 4)
        return comp


def build_mesh(cfg: Configuration, check: bool = True) -> SplitMesh:
    """Q1 mesh of the composite cells with vertices split along slits.

    At every lattice vertex the (up to four) surrounding composite cells are
    grouped by edge adjacency across incident edges that are not slits; each
    group receives its own node.  A slit chain ending inside the material
    therefore leaves its tip vertex unsplit.
    """
    if check:
        require_admissible(cfg)
    g = cfg.grid
    A = cfg.composite.cells
    slits = cfg.composite.slits
    nx, ny = g.nx, g.ny
    # node_of[(cell, corner)] -> node id; corners in local order
    node_ids = -np.ones((nx, ny, 4), dtype=np.int64)
    node_vertex = []
    for vi in range(nx + 1):
        for vj in range(ny + 1):
            # quadrant cells around the vertex and the corner index each uses
            quad = {"SW": ((vi - 1, vj - 1), 2), "SE": ((vi, vj - 1), 3),
                    "NW": ((vi - 1, vj), 1), "NE": ((vi, vj), 0)}
            present = {k: c for k, (c, _) in quad.items()
                       if 0 <= c[0] < nx and 0 <= c[1] < ny and A[c]}
            if not present:
                continue
            links = (("SW", "SE", (vi, vj - 1, 1)), ("NW", "NE", (vi, vj, 1)),
                     ("SW", "NW", (vi - 1, vj, 0)), ("SE", "NE", (vi, vj, 0)))
            parent = {k: k for k in present}

            def find(k):
                while parent[k] != k:
                    k = parent[k]
                return k

            for a, b, e in links:
                if a in present and b in present and e not in slits:
                    ra, rb = find(a), find(b)
                    if ra != rb:
                        parent[max(ra, rb)] = min(ra, rb)
            group_node = {}
            for k in ("SW", "SE", "NW", "NE"):
                if k not in present:
                    continue
                r = find(k)
                if r not in group_node:
                    group_node[r] = len(node_vertex)
                    node_vertex.append((vi, vj))
                c, corner = quad[k]
                node_ids[c[0], c[1], corner] = group_node[r]
    cells = np.argwhere(A)
    elem_nodes = node_ids[cells[:, 0], cells[:, 1]]
    node_vertex = np.asarray(node_vertex, dtype=np.int64).reshape(-1, 2)
    node_xy = np.stack([-g.l + node_vertex[:, 0] * g.hx, -g.L + node_vertex[:, 1] * g.hy], 1)
    phase = np.where(cfg.substrate.cells[cells[:, 0], cells[:, 1]], SUBSTRATE, FILM)
    ne, nn = len(cells), len(node_vertex)
    inc = sp.coo_matrix((np.ones(4 * ne), (np.repeat(np.arange(ne), 4), elem_nodes.ravel())), shape=(ne, nn))
    adj = (inc @ inc.T).tocsr()
    ncomp, labels = connected_components(adj, directed=False)
    return SplitMesh(nx, ny, g.hx, g.hy, cells, elem_nodes, node_vertex, node_xy, phase, labels, int(ncomp))


def _B_matrices(hx: float, hy: float) -> list[np.ndarray]:
    """Strain-displacement matrices (3 x 8) at the 2x2 Gauss points."""
    out = []
    for gy in _GAUSS:
        for gx in _GAUSS:
            dNdx = _XI * (1 + _ETA * gy) / 4 * (2 / hx)
            dNdy = _ETA * (1 + _XI * gx) / 4 * (2 / hy)
            B = np.zeros((3, 8))
            B[0, 0::2] = dNdx
            B[1, 1::2] = dNdy
            B[2, 0::2] = dNdy
            B[2, 1::2] = dNdx
            out.append(B)
    return out


def element_e0(mesh: SplitMesh, material: Material) -> np.ndarray:
    """Mismatch strain per element, ``(ne, 3)``."""
    if material.e0_table is not None:
        tab = material.e0_table
        if tab.shape != (mesh.nx, mesh.ny, 3):
            raise ElasticityError(f"e0 table shape {tab.shape} does not match grid ({mesh.nx}, {mesh.ny}, 3)")
        return tab[mesh.cells[:, 0], mesh.cells[:, 1]]
    e0 = np.zeros((mesh.n_elements, 3))
    mask = np.ones(mesh.n_elements, bool) if material.mismatch_everywhere else mesh.phase == FILM
    e0[mask] = material.e0_film
    return e0


@dataclass(frozen=True, eq=False)
class LinearSystem:
    K: sp.csr_matrix
    f: np.ndarray
    c: float


def assemble(mesh: SplitMesh, material: Material) -> LinearSystem:
    """Quadratic form with ``W(u) = u^T K u - 2 f^T u + c``."""
    Bs = _B_matrices(mesh.hx, mesh.hy)
    wdet = mesh.hx * mesh.hy / 4.0  # unit Gauss weights times the Jacobian
    e0 = element_e0(mesh, material)
    ne = mesh.n_elements
    dofs = np.empty((ne, 8), dtype=np.int64)
    dofs[:, 0::2] = 2 * mesh.elem_nodes
    dofs[:, 1::2] = 2 * mesh.elem_nodes + 1
    vals = np.empty((ne, 8, 8))
    f = np.zeros(2 * mesh.n_nodes)
    c = 0.0
    for phase in (FILM, SUBSTRATE):
        sel = mesh.phase == phase
        if not sel.any():
            continue
        D = material.D(phase)
        Ke = sum(B.T @ D @ B for B in Bs) * wdet
        vals[sel] = Ke
        G = sum(B.T for B in Bs) * wdet  # (8, 3)
        fe = e0[sel] @ D @ G.T           # (n, 8)
        np.add.at(f, dofs[sel].ravel(), fe.ravel())
        c += float(np.einsum("ni,ij,nj->", e0[sel], D, e0[sel])) * mesh.hx * mesh.hy
    rows = np.repeat(dofs, 8, axis=1).ravel()
    cols = np.tile(dofs, (1, 8)).ravel()
    K = sp.coo_matrix((vals.ravel(), (rows, cols)), shape=(2 * mesh.n_nodes,) * 2).tocsr()
    return LinearSystem(K, f, c)


@dataclass(frozen=True, eq=False)
class DisplacementField:
    mesh: SplitMesh
    values: np.ndarray  # (nn, 2)
    pinned: np.ndarray  # fixed dof indices
    residual: float = 0.0

    def __post_init__(self):
        if self.values.shape != (self.mesh.n_nodes, 2):
            raise ElasticityError("displacement does not match the mesh")

    def as_records(self) -> list[dict]:
        return [{"node": n, "vertex": [int(v) for v in self.mesh.node_vertex[n]],
                 "u": [float(self.values[n, 0]), float(self.values[n, 1])]}
                for n in range(self.mesh.n_nodes)]


def rigid_pins(mesh: SplitMesh) -> np.ndarray:
    """Three pinned dofs per mesh component removing its rigid motions."""
    comp = mesh.node_component()
    pins = []
    for k in range(mesh.n_components):
        nodes = np.nonzero(comp == k)[0]
        a = nodes[0]
        d = mesh.node_xy[nodes] - mesh.node_xy[a]
        b = nodes[int(np.argmax(np.hypot(d[:, 0], d[:, 1])))]
        dx, dy = mesh.node_xy[b] - mesh.node_xy[a]
        pins += [2 * a, 2 * a + 1, 2 * b + 1 if abs(dx) >= abs(dy) else 2 * b]
    return np.asarray(sorted(pins), dtype=np.int64)


def solve_equilibrium(mesh: SplitMesh, material: Material, rtol: float = 1e-10) -> DisplacementField:
    """Minimize the discrete elastic energy with rigid modes pinned per component."""
    if mesh.n_elements == 0:
        raise ElasticityError("empty mesh")
    pins = rigid_pins(mesh)
    n = 2 * mesh.n_nodes
    if not material.has_mismatch():
        return DisplacementField(mesh, np.zeros((mesh.n_nodes, 2)), pins, 0.0)
    sysm = assemble(mesh, material)
    free = np.setdiff1d(np.arange(n), pins)
    Kff = sysm.K[free][:, free].tocsc()
    rhs = sysm.f[free]
    uf = spsolve(Kff, rhs)
    norm = float(np.linalg.norm(rhs))
    res = float(np.linalg.norm(Kff @ uf - rhs)) / (norm if norm > 0 else 1.0)
    if not np.all(np.isfinite(uf)) or res > rtol:
        raise SolverError(f"equilibrium solve did not converge (relative residual {res:.3e})", res)
    u = np.zeros(n)
    u[free] = uf
    return DisplacementField(mesh, u.reshape(-1, 2), pins, res)


def _strain_errors(mesh: SplitMesh, material: Material, values: np.ndarray):
    """Strain minus mismatch at every Gauss point, ``(4, ne, 3)``."""
    ue = np.empty((mesh.n_elements, 8))
    ue[:, 0::2] = values[mesh.elem_nodes, 0]
    ue[:, 1::2] = values[mesh.elem_nodes, 1]
    e0 = element_e0(mesh, material)
    return np.stack([ue @ B.T - e0 for B in _B_matrices(mesh.hx, mesh.hy)])


def elastic_energy(cfg: Configuration | None, u: DisplacementField, material: Material) -> float:
    """Gauss-quadrature elastic energy of ``u`` (``cfg`` only cross-checks the mesh)."""
    mesh = u.mesh
    if cfg is not None and int(cfg.composite.cells.sum()) != mesh.n_elements:
        raise ElasticityError("displacement mesh does not belong to this configuration")
    err = _strain_errors(mesh, material, u.values)
    wdet = mesh.hx * mesh.hy / 4.0
    total = 0.0
    for phase in (FILM, SUBSTRATE):
        sel = mesh.phase == phase
        D = material.D(phase)
        total += float(np.einsum("gni,ij,gnj->", err[:, sel], D, err[:, sel])) * wdet
    return max(total, 0.0)


def elastic_gradient(mesh: SplitMesh, material: Material, values: np.ndarray) -> np.ndarray:
    """Gradient of the discrete elastic energy with respect to nodal values."""
    sysm = assemble(mesh, material)
    u = np.asarray(values, dtype=float).ravel()
    return (2.0 * (sysm.K @ u - sysm.f)).reshape(-1, 2)


def strain_misfit_l2(u: DisplacementField, material: Material) -> float:
    """``∫ |E(u) - E0|^2`` with the Frobenius norm of the symmetric tensor."""
    err = _strain_errors(u.mesh, material, u.values)
    sq = err[..., 0] ** 2 + err[..., 1] ** 2 + 0.5 * err[..., 2] ** 2
    return float(sq.sum()) * u.mesh.hx * u.mesh.hy / 4.0


def equilibrium_energy(cfg: Configuration, material: Material) -> float:
    if not material.has_mismatch():
        return 0.0
    mesh = build_mesh(cfg, check=False)
    return elastic_energy(None, solve_equilibrium(mesh, material), material)


def penalty_term(cfg: Configuration, lam, volumes) -> float:
    """``lam1 |area(A) - v1| + lam0 |area(S) - v0|``."""
    if lam is None or volumes is None:
        return 0.0
    lam0, lam1 = (float(v) for v in lam)
    v0, v1 = (float(v) for v in volumes)
    return lam1 * abs(cfg.area_A() - v1) + lam0 * abs(cfg.area_S() - v0)


def total_energy(cfg: Configuration, tensions: SurfaceTensions, material: Material | None = None,
                 lam=None, volumes=None, W: float | None = None) -> EnergyBreakdown:
    """Surface plus elastic energy, plus the volume penalty when requested."""
    surf = surface_energy(cfg, tensions)
    if W is None:
        W = 0.0 if material is None else equilibrium_energy(cfg, material)
    return EnergyBreakdown(surf.per_class, surf.S, float(W), penalty_term(cfg, lam, volumes))
