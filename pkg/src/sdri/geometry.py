"""Grid representation of admissible film/substrate configurations.

Regions are unions of closed grid cells plus marked lattice edges.  An edge is
identified by ``(i, j, axis)``: ``axis == 0`` is the horizontal edge from vertex
``(i, j)`` to ``(i + 1, j)``, ``axis == 1`` the vertical edge from ``(i, j)`` to
``(i, j + 1)``.  Cell ``(i, j)`` is the square with lower-left vertex ``(i, j)``.

The substrate is the subgraph of a column height profile.  Heights are stored as
integer *levels*: the number of substrate rows counted from the bottom wall, so
the admissible range ``h in [0, L]`` is ``level in [ny // 2, ny]``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Iterator, Sequence

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

Edge = tuple[int, int, int]
Cell = tuple[int, int]

# class labels in the order of the localized surface tension table
CLASSES: tuple[str, ...] = (
    "film_free",
    "exposed_substrate",
    "film_crack",
    "film_filament",
    "coherent_interface",
    "delaminated_substrate_crack",
    "exposed_substrate_filament",
    "substrate_filament_on_film_boundary",
    "bonded_substrate_crack",
    "incoherent_interface",
    "substrate_filament_in_film_crack",
)
CLASS_INDEX = {name: k for k, name in enumerate(CLASSES)}
DOMAIN_WALL = "domain_wall"

# classes whose normal is taken from the substrate side
_SUBSTRATE_NORMAL = {CLASS_INDEX["coherent_interface"], CLASS_INDEX["bonded_substrate_crack"]}


class GeometryError(ValueError):
    """Malformed geometric input such as an out-of-range edge id."""


class AdmissibilityError(ValueError):
    """Raised when an operation requires an admissible configuration."""

    def __init__(self, message: str, report: "AdmissibilityReport | None" = None):
        super().__init__(message)
        self.report = report


class ConsistencyError(RuntimeError):
    """An edge stencil reached a class combination the representation forbids."""


@dataclass(frozen=True)
class Grid:
    """Uniform grid on ``(-l, l) x (-L, L)`` with ``nx`` columns and ``ny`` rows."""

    l: float
    L: float
    nx: int
    ny: int

    def __post_init__(self):
        if not (self.l > 0 and self.L > 0):
            raise GeometryError("l and L must be positive")
        if self.nx < 1 or self.ny < 2 or self.ny % 2:
            raise GeometryError("need nx >= 1 and an even ny >= 2")

    @property
    def hx(self) -> float:
        return 2.0 * self.l / self.nx

    @property
    def hy(self) -> float:
        return 2.0 * self.L / self.ny

    @property
    def base_level(self) -> int:
        """Level of the line ``y = 0``."""
        return self.ny // 2

    @property
    def cell_area(self) -> float:
        return self.hx * self.hy

    @property
    def cell_diameter(self) -> float:
        return float(np.hypot(self.hx, self.hy))

    def x_of(self, i) -> float:
        return -self.l + i * self.hx

    def y_of(self, j) -> float:
        return -self.L + j * self.hy

    def level_of_height(self, h: float) -> int:
        return int(round((h + self.L) / self.hy))

    def height_of_level(self, level: int) -> float:
        return self.y_of(level)

    def has_cell(self, c: Cell) -> bool:
        return 0 <= c[0] < self.nx and 0 <= c[1] < self.ny

    def is_edge(self, e: Edge) -> bool:
        i, j, axis = e
        if axis == 0:
            return 0 <= i < self.nx and 0 <= j <= self.ny
        if axis == 1:
            return 0 <= i <= self.nx and 0 <= j < self.ny
        return False

    def is_interior(self, e: Edge) -> bool:
        i, j, axis = e
        if axis == 0:
            return 0 <= i < self.nx and 1 <= j <= self.ny - 1
        return 1 <= i <= self.nx - 1 and 0 <= j < self.ny

    def edge_cells(self, e: Edge) -> tuple[Cell | None, Cell | None]:
        """The two cells sharing ``e`` (below/above or left/right); None outside the box."""
        i, j, axis = e
        if axis == 0:
            lo, hi = (i, j - 1), (i, j)
        else:
            lo, hi = (i - 1, j), (i, j)
        return (lo if self.has_cell(lo) else None, hi if self.has_cell(hi) else None)

    @staticmethod
    def edge_vertices(e: Edge) -> tuple[tuple[int, int], tuple[int, int]]:
        i, j, axis = e
        return ((i, j), (i + 1, j)) if axis == 0 else ((i, j), (i, j + 1))

    def edge_length(self, e: Edge) -> float:
        return self.hx if e[2] == 0 else self.hy

    def edge_midpoint(self, e: Edge) -> tuple[float, float]:
        i, j, axis = e
        if axis == 0:
            return (self.x_of(i + 0.5), self.y_of(j))
        return (self.x_of(i), self.y_of(j + 0.5))

    @staticmethod
    def cell_edges(c: Cell) -> tuple[Edge, Edge, Edge, Edge]:
        i, j = c
        return ((i, j, 0), (i, j + 1, 0), (i, j, 1), (i + 1, j, 1))

    def cell_center(self, c: Cell) -> tuple[float, float]:
        return (self.x_of(c[0] + 0.5), self.y_of(c[1] + 0.5))

    def cell_centers(self) -> np.ndarray:
        """Cell centers as an ``(nx, ny, 2)`` array."""
        xs = -self.l + (np.arange(self.nx) + 0.5) * self.hx
        ys = -self.L + (np.arange(self.ny) + 0.5) * self.hy
        X, Y = np.meshgrid(xs, ys, indexing="ij")
        return np.stack([X, Y], axis=-1)

    def edges(self, interior_only: bool = False) -> Iterator[Edge]:
        for e in _all_edges(self.nx, self.ny):
            if not interior_only or self.is_interior(e):
                yield e

    def interior_masks(self) -> tuple[np.ndarray, np.ndarray]:
        H = np.zeros((self.nx, self.ny + 1), dtype=bool)
        H[:, 1:self.ny] = True
        V = np.zeros((self.nx + 1, self.ny), dtype=bool)
        V[1:self.nx, :] = True
        return H, V

    def edge_masks(self, edges: Iterable[Edge]) -> tuple[np.ndarray, np.ndarray]:
        """Boolean arrays ``H (nx, ny+1)`` and ``V (nx+1, ny)`` marking ``edges``."""
        H = np.zeros((self.nx, self.ny + 1), dtype=bool)
        V = np.zeros((self.nx + 1, self.ny), dtype=bool)
        for i, j, axis in edges:
            if axis == 0:
                H[i, j] = True
            else:
                V[i, j] = True
        return H, V


def _all_edges(nx: int, ny: int) -> Iterator[Edge]:
    # sorted tuple order: by i, then j, then axis
    for i in range(nx + 1):
        for j in range(ny + 1):
            if i < nx:
                yield (i, j, 0)
            if j < ny:
                yield (i, j, 1)


def masks_to_edges(H: np.ndarray, V: np.ndarray) -> list[Edge]:
    out = [(int(i), int(j), 0) for i, j in zip(*np.nonzero(H))]
    out += [(int(i), int(j), 1) for i, j in zip(*np.nonzero(V))]
    out.sort()
    return out


def neighbor_pairs(cells: np.ndarray):
    """Per-edge membership of the two adjacent cells.

    Returns ``(H_lo, H_hi, V_lo, V_hi)`` where ``H_lo[i, j]`` tells whether the
    cell below horizontal edge ``(i, j, 0)`` belongs to ``cells`` and so on.
    Cells outside the box count as outside.
    """
    cells = np.asarray(cells, dtype=bool)
    nx, ny = cells.shape
    P = np.zeros((nx, ny + 2), dtype=bool)
    P[:, 1:-1] = cells
    Q = np.zeros((nx + 2, ny), dtype=bool)
    Q[1:-1, :] = cells
    return P[:, :-1], P[:, 1:], Q[:-1, :], Q[1:, :]


def reduced_boundary_masks(cells: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Edges (walls included) with exactly one adjacent cell in ``cells``."""
    hl, hh, vl, vh = neighbor_pairs(cells)
    return hl ^ hh, vl ^ vh


# ---------------------------------------------------------------------------
# substrate


@dataclass(frozen=True)
class HeightProfile:
    """Column levels plus vertical filaments (spikes) rising above the graph.

    ``spikes`` holds ``(i, top)`` pairs: a vertical segment on grid line ``i``
    from the higher adjacent column up to level ``top``.
    """

    levels: tuple[int, ...]
    spikes: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "levels", tuple(int(v) for v in self.levels))
        spikes = tuple(sorted((int(i), int(t)) for i, t in self.spikes))
        if len({i for i, _ in spikes}) != len(spikes):
            raise GeometryError("at most one spike per grid line")
        object.__setattr__(self, "spikes", spikes)

    @classmethod
    def from_heights(cls, grid: Grid, heights: Sequence[float],
                     spikes: Sequence[tuple[int, float]] = ()) -> "HeightProfile":
        """Snap heights (length units, measured from ``y = 0``) to grid levels."""
        levels = [grid.level_of_height(h) for h in heights]
        sp = [(i, grid.level_of_height(t)) for i, t in spikes]
        return cls(tuple(levels), tuple(sp))

    def spike_base(self, i: int) -> int:
        return max(self.levels[i - 1], self.levels[i])

    def spike_edges(self) -> list[Edge]:
        out = []
        for i, top in self.spikes:
            if 1 <= i < len(self.levels):
                out += [(i, j, 1) for j in range(self.spike_base(i), top)]
        return out

    def violations(self, grid: Grid, upper_half: bool = True) -> list[str]:
        out = []
        if len(self.levels) != grid.nx:
            return [f"height profile has {len(self.levels)} columns, grid has {grid.nx}"]
        lo = grid.base_level if upper_half else 0
        for c, v in enumerate(self.levels):
            if not lo <= v <= grid.ny:
                out.append(f"height of column {c} outside [0, L] (level {v})")
        for i, top in self.spikes:
            if not 1 <= i <= grid.nx - 1:
                out.append(f"spike on grid line {i} is not interior")
                continue
            if top <= self.spike_base(i) or top > grid.ny:
                out.append(f"spike on grid line {i} with top level {top} does not rise above the graph")
        return out


@dataclass(frozen=True)
class SubstrateRegion:
    """Subgraph of ``profile`` with crack edges removed."""

    grid: Grid
    profile: HeightProfile
    cracks: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        object.__setattr__(self, "cracks", frozenset(tuple(int(x) for x in e) for e in self.cracks))

    @cached_property
    def cells(self) -> np.ndarray:
        rows = np.arange(self.grid.ny)[None, :]
        levels = np.asarray(self.profile.levels[: self.grid.nx] + (0,) * max(0, self.grid.nx - len(self.profile.levels)))
        c = rows < levels[:, None]
        c.setflags(write=False)
        return c

    @cached_property
    def spike_edges(self) -> frozenset:
        return frozenset(self.profile.spike_edges())

    @cached_property
    def masks(self):
        """``(crack_H, crack_V, spike_H, spike_V)`` edge masks."""
        cH, cV = self.grid.edge_masks(self.cracks)
        sH, sV = self.grid.edge_masks(self.spike_edges)
        return cH, cV, sH, sV

    def boundary_edges(self, interior_only: bool = True) -> list[Edge]:
        """Edges of the topological boundary: reduced boundary, cracks, spikes."""
        H, V = reduced_boundary_masks(self.cells)
        cH, cV, sH, sV = self.masks
        H = H | cH | sH
        V = V | cV | sV
        if interior_only:
            iH, iV = self.grid.interior_masks()
            H, V = H & iH, V & iV
        return masks_to_edges(H, V)


def substrate_from_height(grid: Grid, profile: HeightProfile,
                          cracks: Iterable[Edge] = ()) -> SubstrateRegion:
    """Build the cracked subgraph; every crack must touch a substrate cell."""
    region = SubstrateRegion(grid, profile, frozenset(cracks))
    bad = _crack_violations(region)
    if bad:
        raise AdmissibilityError(bad[0])
    return region


def _crack_violations(region: SubstrateRegion) -> list[str]:
    grid, cells = region.grid, region.cells
    out = []
    for e in sorted(region.cracks):
        if not grid.is_edge(e) or not grid.is_interior(e):
            out.append(f"crack edge {e} is not an interior lattice edge")
            continue
        if not any(c is not None and cells[c] for c in grid.edge_cells(e)):
            out.append(f"crack edge {e} lies outside the closed subgraph")
    return out


# ---------------------------------------------------------------------------
# composite region and configuration


@dataclass(frozen=True, eq=False)
class CompositeRegion:
    """Cells of the composite plus density-1 (slit) and density-0 (filament) edges."""

    cells: np.ndarray
    slits: frozenset = field(default_factory=frozenset)
    filaments: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        cells = np.array(self.cells, dtype=bool, copy=True)
        cells.setflags(write=False)
        object.__setattr__(self, "cells", cells)
        object.__setattr__(self, "slits", frozenset(tuple(int(x) for x in e) for e in self.slits))
        object.__setattr__(self, "filaments", frozenset(tuple(int(x) for x in e) for e in self.filaments))

    def __eq__(self, other):
        if not isinstance(other, CompositeRegion):
            return NotImplemented
        return (self.cells.shape == other.cells.shape and bool(np.array_equal(self.cells, other.cells))
                and self.slits == other.slits and self.filaments == other.filaments)

    def __hash__(self):
        return hash((self.cells.shape, self.cells.tobytes(), self.slits, self.filaments))


@dataclass(frozen=True, eq=False)
class Configuration:
    grid: Grid
    substrate: SubstrateRegion
    composite: CompositeRegion

    @classmethod
    def build(cls, grid: Grid, levels: Sequence[int], *, spikes=(), cracks=(),
              cells=None, film: Iterable[Cell] = (), slits=(), filaments=()) -> "Configuration":
        """Assemble a configuration; ``cells`` defaults to substrate cells plus ``film``."""
        sub = SubstrateRegion(grid, HeightProfile(tuple(levels), tuple(spikes)), frozenset(cracks))
        if cells is None:
            cells = np.array(sub.cells, copy=True)
        else:
            cells = np.array(cells, dtype=bool, copy=True)
        for c in film:
            cells[c] = True
        return cls(grid, sub, CompositeRegion(cells, frozenset(slits), frozenset(filaments)))

    @classmethod
    def flat(cls, grid: Grid, film: Iterable[Cell] = (), **kw) -> "Configuration":
        return cls.build(grid, [grid.base_level] * grid.nx, film=film, **kw)

    def __eq__(self, other):
        if not isinstance(other, Configuration):
            return NotImplemented
        return (self.grid == other.grid and self.substrate.profile == other.substrate.profile
                and self.substrate.cracks == other.substrate.cracks and self.composite == other.composite)

    def __hash__(self):
        return hash((self.grid, self.substrate.profile, self.substrate.cracks, self.composite))

    def replace(self, *, levels=None, spikes=None, cracks=None, cells=None,
                slits=None, filaments=None) -> "Configuration":
        prof = self.substrate.profile
        sub = SubstrateRegion(
            self.grid,
            HeightProfile(tuple(levels) if levels is not None else prof.levels,
                          tuple(spikes) if spikes is not None else prof.spikes),
            frozenset(cracks) if cracks is not None else self.substrate.cracks,
        )
        comp = CompositeRegion(
            self.composite.cells if cells is None else cells,
            self.composite.slits if slits is None else frozenset(slits),
            self.composite.filaments if filaments is None else frozenset(filaments),
        )
        return Configuration(self.grid, sub, comp)

    @property
    def A(self) -> np.ndarray:
        return self.composite.cells

    @property
    def S(self) -> np.ndarray:
        return self.substrate.cells

    @cached_property
    def film_cells(self) -> np.ndarray:
        return self.composite.cells & ~self.substrate.cells

    @cached_property
    def mark_masks(self):
        """``(slit, filament, crack, spike)`` as ``(H, V)`` mask pairs."""
        g = self.grid
        cH, cV, pH, pV = self.substrate.masks
        return (g.edge_masks(self.composite.slits), g.edge_masks(self.composite.filaments),
                (cH, cV), (pH, pV))

    def area_A(self) -> float:
        return int(self.composite.cells.sum()) * self.grid.cell_area

    def area_S(self) -> float:
        return int(self.substrate.cells.sum()) * self.grid.cell_area

    def composite_boundary(self, interior_only: bool = True) -> list[Edge]:
        H, V = reduced_boundary_masks(self.composite.cells)
        (sH, sV), (fH, fV), _, _ = self.mark_masks
        H, V = H | sH | fH, V | sV | fV
        if interior_only:
            iH, iV = self.grid.interior_masks()
            H, V = H & iH, V & iV
        return masks_to_edges(H, V)

    def substrate_boundary(self, interior_only: bool = True) -> list[Edge]:
        return self.substrate.boundary_edges(interior_only)


@dataclass(frozen=True)
class AdmissibilityReport:
    admissible: bool
    components_S: int
    components_A: int
    violations: tuple[str, ...]
    m: tuple[int, int]

    def as_record(self) -> dict:
        return {"admissible": self.admissible, "components_S": self.components_S,
                "components_A": self.components_A, "violations": list(self.violations),
                "m": list(self.m)}


def boundary_components(edges: Iterable[Edge]) -> tuple[int, dict[Edge, int]]:
    """Connected components of an edge set; edges touching at a vertex are connected.

    Labels are assigned in increasing order of each component's smallest edge.
    """
    edges = sorted(set(edges))
    parent = list(range(len(edges)))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    seen: dict[tuple[int, int], int] = {}
    for k, e in enumerate(edges):
        for v in Grid.edge_vertices(e):
            if v in seen:
                ra, rb = find(k), find(seen[v])
                if ra != rb:
                    parent[max(ra, rb)] = min(ra, rb)
            else:
                seen[v] = k
    labels: dict[Edge, int] = {}
    root_label: dict[int, int] = {}
    for k, e in enumerate(edges):
        r = find(k)
        if r not in root_label:
            root_label[r] = len(root_label)
        labels[e] = root_label[r]
    return len(root_label), labels


def count_edge_components(grid: Grid, H: np.ndarray, V: np.ndarray) -> int:
    """Fast component count for masked edges (same relation as ``boundary_components``)."""
    nvy = grid.ny + 1
    hi, hj = np.nonzero(H)
    vi, vj = np.nonzero(V)
    if hi.size + vi.size == 0:
        return 0
    a = np.concatenate([hi * nvy + hj, vi * nvy + vj])
    b = np.concatenate([(hi + 1) * nvy + hj, vi * nvy + vj + 1])
    used, inv = np.unique(np.concatenate([a, b]), return_inverse=True)
    n = used.size
    ia, ib = inv[: a.size], inv[a.size:]
    g = coo_matrix((np.ones(a.size), (ia, ib)), shape=(n, n))
    return int(connected_components(g, directed=False)[0])


def validate_configuration(cfg: Configuration, m: tuple[int, int] = (10**9, 10**9)) -> AdmissibilityReport:
    """Check every admissibility rule; violations are returned, never raised."""
    g = cfg.grid
    viol: list[str] = []
    prof = cfg.substrate.profile
    viol += prof.violations(g)
    A = cfg.composite.cells
    if A.shape != (g.nx, g.ny):
        viol.append(f"composite cell array has shape {A.shape}, expected {(g.nx, g.ny)}")
        return AdmissibilityReport(False, 0, 0, tuple(viol), tuple(m))
    if len(prof.levels) != g.nx:
        return AdmissibilityReport(False, 0, 0, tuple(viol), tuple(m))
    viol += _crack_violations(cfg.substrate)
    S = cfg.substrate.cells
    if np.any(S & ~A):
        bad = tuple(int(x) for x in np.argwhere(S & ~A)[0])
        viol.append(f"substrate cell {bad} is not in the composite region (S not in closure of A)")

    def count(c):
        return 0 if c is None else int(A[c])

    for e in sorted(cfg.composite.slits):
        if not g.is_edge(e) or not g.is_interior(e):
            viol.append(f"slit edge {e} is not an interior lattice edge")
        elif sum(count(c) for c in g.edge_cells(e)) != 2:
            viol.append(f"slit edge {e} does not have both neighbors in the composite")
        elif all(S[c] for c in g.edge_cells(e)) and e not in cfg.substrate.cracks:
            viol.append(f"slit edge {e} lies in the substrate interior: ∂A ∩ Int(S) ≠ ∅")
    fil_ok = []
    for e in sorted(cfg.composite.filaments):
        if not g.is_edge(e) or not g.is_interior(e):
            viol.append(f"filament edge {e} is not an interior lattice edge")
        elif sum(count(c) for c in g.edge_cells(e)) != 0:
            viol.append(f"filament edge {e} has a neighbor in the composite")
        else:
            fil_ok.append(e)
    if fil_ok:
        corner = np.zeros((g.nx + 1, g.ny + 1), dtype=bool)
        corner[:-1, :-1] |= A
        corner[1:, :-1] |= A
        corner[:-1, 1:] |= A
        corner[1:, 1:] |= A
        _, labels = boundary_components(fil_ok)
        attached = set()
        for e, lab in labels.items():
            if any(corner[v] for v in g.edge_vertices(e)):
                attached.add(lab)
        for e, lab in sorted(labels.items()):
            if lab not in attached:
                viol.append(f"filament edge {e} is detached from the composite")
                attached.add(lab)
    for e in sorted(cfg.substrate.spike_edges):
        if not g.is_edge(e):
            continue
        if sum(count(c) for c in g.edge_cells(e)) == 0 and e not in cfg.composite.filaments:
            viol.append(f"spike edge {e} is outside the closure of the composite")

    iH, iV = g.interior_masks()
    aH, aV = reduced_boundary_masks(A)
    (slH, slV), (fH, fV), (cH, cV), (pH, pV) = cfg.mark_masks
    nA = count_edge_components(g, (aH | slH | fH) & iH, (aV | slV | fV) & iV)
    sH, sV = reduced_boundary_masks(S)
    nS = count_edge_components(g, (sH | cH | pH) & iH, (sV | cV | pV) & iV)
    if nS > m[0]:
        viol.append(f"∂S has {nS} components, more than m0={m[0]}")
    if nA > m[1]:
        viol.append(f"∂A has {nA} components, more than m1={m[1]}")
    return AdmissibilityReport(not viol, nS, nA, tuple(viol), (int(m[0]), int(m[1])))


def require_admissible(cfg: Configuration, m=(10**9, 10**9)) -> AdmissibilityReport:
    rep = validate_configuration(cfg, m)
    if not rep.admissible:
        raise AdmissibilityError("inadmissible configuration: " + "; ".join(rep.violations), rep)
    return rep


# ---------------------------------------------------------------------------
# boundary classification


@dataclass(frozen=True)
class BoundaryEntry:
    edge: Edge
    label: str
    normal: tuple[int, int]
    length: float


@dataclass(frozen=True)
class LabeledBoundary:
    entries: tuple[BoundaryEntry, ...]

    def lengths_by_class(self) -> dict[str, float]:
        out = {name: 0.0 for name in CLASSES}
        for ent in self.entries:
            out[ent.label] += ent.length
        return out

    def total_length(self) -> float:
        return float(sum(ent.length for ent in self.entries))


def class_codes(cfg: Configuration):
    """Vectorized class code per edge.

    Returns ``(codeH, codeV, nuH, nuV)``: codes are indices into ``CLASSES``
    (-1 off the boundary, -2 on the domain wall), ``nu`` is the sign of the
    normal along the edge's axis-normal direction.
    """
    g = cfg.grid
    A, S = cfg.composite.cells, cfg.substrate.cells
    (slH, slV), (fH, fV), (cH, cV), (pH, pV) = cfg.mark_masks
    iH, iV = g.interior_masks()
    out = []
    for lo_hi_A, lo_hi_S, sl, fi, cr, sp, interior in (
        (neighbor_pairs(A)[:2], neighbor_pairs(S)[:2], slH, fH, cH, pH, iH),
        (neighbor_pairs(A)[2:], neighbor_pairs(S)[2:], slV, fV, cV, pV, iV),
    ):
        alo, ahi = lo_hi_A
        slo, shi = lo_hi_S
        a = alo.astype(np.int8) + ahi
        s = slo.astype(np.int8) + shi
        code = np.full(a.shape, -1, dtype=np.int8)
        bad = (s > a) | (sl & (a != 2)) | (fi & (a != 0))
        bad |= (a == 2) & sl & (s == 2) & ~cr
        bad |= (a == 0) & ~fi & sp
        bad &= interior
        if bad.any():
            idx = tuple(int(x) for x in np.argwhere(bad)[0])
            raise ConsistencyError(f"unreachable class combination at edge index {idx}")
        a1, a2, a0 = a == 1, a == 2, a == 0
        code[a1 & (s == 1)] = CLASS_INDEX["exposed_substrate"]
        code[a1 & (s == 0) & sp] = CLASS_INDEX["substrate_filament_on_film_boundary"]
        code[a1 & (s == 0) & ~sp] = CLASS_INDEX["film_free"]
        code[a2 & sl & (s == 2)] = CLASS_INDEX["delaminated_substrate_crack"]
        code[a2 & sl & (s == 1)] = CLASS_INDEX["incoherent_interface"]
        code[a2 & sl & (s == 0) & sp] = CLASS_INDEX["substrate_filament_in_film_crack"]
        code[a2 & sl & (s == 0) & ~sp] = CLASS_INDEX["film_crack"]
        code[a2 & ~sl & (s == 2) & cr] = CLASS_INDEX["bonded_substrate_crack"]
        code[a2 & ~sl & (s == 1)] = CLASS_INDEX["coherent_interface"]
        code[a2 & ~sl & (s == 0) & sp] = CLASS_INDEX["bonded_substrate_crack"]
        code[a0 & fi & sp] = CLASS_INDEX["exposed_substrate_filament"]
        code[a0 & fi & ~sp] = CLASS_INDEX["film_filament"]
        wall = ~interior & ((alo ^ ahi) | (slo ^ shi))
        code[~interior] = -1
        code[wall] = -2
        # outward normal sign: +1 when the region sits on the low side of the edge
        nu = np.ones(a.shape, dtype=np.int8)
        nu[a1 & ahi] = -1
        subs = np.isin(code, list(_SUBSTRATE_NORMAL)) & (s == 1)
        nu[subs & shi] = -1
        nu[subs & slo] = 1
        out.append((code, nu))
    (codeH, nuH), (codeV, nuV) = out
    return codeH, codeV, nuH, nuV


def edge_class(cfg: Configuration, e: Edge) -> int:
    """Scalar version of ``class_codes`` for one edge (-1: not a boundary edge)."""
    g = cfg.grid
    if not g.is_interior(e):
        return -1
    A, S = cfg.composite.cells, cfg.substrate.cells
    lo, hi = g.edge_cells(e)
    a = int(A[lo]) + int(A[hi])
    s = int(S[lo]) + int(S[hi])
    sl = e in cfg.composite.slits
    fi = e in cfg.composite.filaments
    cr = e in cfg.substrate.cracks
    sp = e in cfg.substrate.spike_edges
    if a == 1:
        if s == 1:
            return CLASS_INDEX["exposed_substrate"]
        return CLASS_INDEX["substrate_filament_on_film_boundary" if sp else "film_free"]
    if a == 2:
        if sl:
            if s == 2:
                return CLASS_INDEX["delaminated_substrate_crack"]
            if s == 1:
                return CLASS_INDEX["incoherent_interface"]
            return CLASS_INDEX["substrate_filament_in_film_crack" if sp else "film_crack"]
        if s == 1:
            return CLASS_INDEX["coherent_interface"]
        if (s == 2 and cr) or (s == 0 and sp):
            return CLASS_INDEX["bonded_substrate_crack"]
        return -1
    if fi:
        return CLASS_INDEX["exposed_substrate_filament" if sp else "film_filament"]
    return -1


def classify_boundary(cfg: Configuration) -> LabeledBoundary:
    """Tag every Ω-interior edge of ∂A ∪ ∂S with its surface-tension class."""
    g = cfg.grid
    codeH, codeV, nuH, nuV = class_codes(cfg)
    entries = []
    for axis, code, nu in ((0, codeH, nuH), (1, codeV, nuV)):
        for i, j in zip(*np.nonzero(code >= 0)):
            e = (int(i), int(j), axis)
            sign = int(nu[i, j])
            normal = (0, sign) if axis == 0 else (sign, 0)
            entries.append(BoundaryEntry(e, CLASSES[code[i, j]], normal, g.edge_length(e)))
    entries.sort(key=lambda t: t.edge)
    return LabeledBoundary(tuple(entries))


# ---------------------------------------------------------------------------
# pointwise variation


def pointwise_variation(profile: HeightProfile, grid: Grid) -> tuple[float, float]:
    """Return ``(Var h, H1 of the completed graph)``.

    The completed graph is the curve traversed left to right along the column
    tops, climbing every jump and going up and back down every spike; it is
    measured by enumerating its lattice edges.
    """
    lv = profile.levels
    spikes = dict(profile.spikes)
    var = 0.0
    for i in range(1, grid.nx):
        top = spikes.get(i)
        if top is None:
            var += abs(lv[i] - lv[i - 1]) * grid.hy
        else:
            var += ((top - lv[i - 1]) + (top - lv[i])) * grid.hy
    length = 0.0
    for c in range(grid.nx):
        length += grid.edge_length((c, lv[c], 0))
    for i in range(1, grid.nx):
        lo, hi = sorted((lv[i - 1], lv[i]))
        for j in range(lo, hi):
            length += grid.edge_length((i, j, 1))
    for e in profile.spike_edges():
        length += 2 * grid.edge_length(e)
    return var, length


# ---------------------------------------------------------------------------
# signed distance


def _segment_arrays(grid: Grid, edges: Sequence[Edge]) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    e = np.asarray(edges, dtype=np.int64).reshape(-1, 3)
    x0 = -grid.l + e[:, 0] * grid.hx
    y0 = -grid.L + e[:, 1] * grid.hy
    return x0, y0, e[:, 2]


def distance_to_edges(grid: Grid, edges: Sequence[Edge], points: np.ndarray) -> np.ndarray:
    """Exact Euclidean distance from each point to the union of lattice edges."""
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    x0, y0, axis = _segment_arrays(grid, edges)
    x1 = np.where(axis == 0, x0 + grid.hx, x0)
    y1 = np.where(axis == 1, y0 + grid.hy, y0)
    out = np.empty(len(pts))
    chunk = max(1, 200_000 // max(1, len(x0)))
    for s in range(0, len(pts), chunk):
        px = pts[s:s + chunk, 0:1]
        py = pts[s:s + chunk, 1:2]
        dx = np.maximum(np.maximum(x0 - px, px - x1), 0.0)
        dy = np.maximum(np.maximum(y0 - py, py - y1), 0.0)
        out[s:s + chunk] = np.hypot(dx, dy).min(axis=1)
    return out


def region_boundary(grid: Grid, cells: np.ndarray, edges: Iterable[Edge] = ()) -> list[Edge]:
    """Topological boundary in the plane: reduced boundary (walls included) plus ``edges``."""
    H, V = reduced_boundary_masks(cells)
    eH, eV = grid.edge_masks(edges)
    return masks_to_edges(H | eH, V | eV)


def sdist_field(grid: Grid, cells: np.ndarray, edges: Iterable[Edge] = ()) -> np.ndarray:
    """Signed distance from the region boundary sampled at cell centers, shape ``(nx, ny)``.

    Negative on cells of the region, positive elsewhere.
    """
    bnd = region_boundary(grid, cells, edges)
    if not bnd:
        raise GeometryError("undefined signed distance: the region has an empty boundary")
    d = distance_to_edges(grid, bnd, grid.cell_centers().reshape(-1, 2)).reshape(grid.nx, grid.ny)
    return np.where(np.asarray(cells, dtype=bool), -d, d)


def sdist_A(cfg: Configuration) -> np.ndarray:
    comp = cfg.composite
    return sdist_field(cfg.grid, comp.cells, comp.slits | comp.filaments)


def sdist_S(cfg: Configuration) -> np.ndarray:
    sub = cfg.substrate
    return sdist_field(cfg.grid, sub.cells, sub.cracks | sub.spike_edges)


# ---------------------------------------------------------------------------
# blow-up


def blowup(cfg: Configuration, y0: tuple[float, float], rho: float) -> Configuration:
    """Restrict ``cfg`` to the square of half-side ``rho`` at ``y0``, rescaled to ``(-1, 1)^2``.

    Heights in the result are window levels and may fall below the window's
    mid line; such a configuration is representable but not admissible.
    """
    g = cfg.grid
    if rho <= 0:
        raise GeometryError("rho must be positive")
    fi0 = (y0[0] - rho + g.l) / g.hx
    fi1 = (y0[0] + rho + g.l) / g.hx
    fj0 = (y0[1] - rho + g.L) / g.hy
    fj1 = (y0[1] + rho + g.L) / g.hy
    idx = [int(round(v)) for v in (fi0, fi1, fj0, fj1)]
    if any(abs(v - r) > 1e-9 for v, r in zip((fi0, fi1, fj0, fj1), idx)):
        raise GeometryError("blow-up window is not aligned with the grid")
    i0, i1, j0, j1 = idx
    if i0 < 0 or j0 < 0 or i1 > g.nx or j1 > g.ny:
        raise GeometryError("blow-up window exceeds the domain")
    ng = Grid(1.0, 1.0, i1 - i0, j1 - j0)
    levels = [min(max(v - j0, 0), ng.ny) for v in cfg.substrate.profile.levels[i0:i1]]
    spikes = []
    for i, top in cfg.substrate.profile.spikes:
        if i0 < i < i1:
            t = min(top - j0, ng.ny)
            if t > max(levels[i - i0 - 1], levels[i - i0]):
                spikes.append((i - i0, t))

    def shift(edges):
        out = set()
        for i, j, axis in edges:
            e = (i - i0, j - j0, axis)
            if ng.is_edge(e) and ng.is_interior(e):
                out.add(e)
        return out

    cells = cfg.composite.cells[i0:i1, j0:j1]
    sub = SubstrateRegion(ng, HeightProfile(tuple(levels), tuple(spikes)), frozenset(shift(cfg.substrate.cracks)))
    comp = CompositeRegion(cells, frozenset(shift(cfg.composite.slits)), frozenset(shift(cfg.composite.filaments)))
    return Configuration(ng, sub, comp)
