"""Annealed local search over admissible configurations.

Moves are elementary edits of single cells, column heights or edge marks,
plus composite edits acting on whole features.  Removing a film island also
straightens the substrate under it; the other composite edits fill a void or
debond a grain's coherent interface.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .elasticity import Material, equilibrium_energy, penalty_term
from .geometry import (
    CLASS_INDEX,
    AdmissibilityError,
    Cell,
    Configuration,
    Edge,
    Grid,
    boundary_components,
    class_codes,
    masks_to_edges,
    neighbor_pairs,
    validate_configuration,
)
from .surface import SurfaceTensions, boundary_lengths, delta_surface, surface_energy

ELEMENTARY = ("add_film_cell", "remove_film_cell", "height_step", "toggle_delamination",
              "add_crack", "remove_crack", "add_filament", "remove_filament")
COMPOSITE = ("shrink_island", "fill_void", "open_grain")
PAIRED = ("swap_film_cell", "paired_height_step")
MOVE_KINDS = ELEMENTARY + COMPOSITE + PAIRED
# kinds that change cut/mark topology and force an elastic re-solve when accepted
TOPOLOGY = {"toggle_delamination", "add_crack", "remove_crack", "add_filament", "remove_filament",
            "shrink_island", "fill_void", "open_grain"}

PENALIZED_KINDS = ELEMENTARY + COMPOSITE
CONSTRAINED_KINDS = PAIRED + ("toggle_delamination", "add_crack", "remove_crack",
                              "add_filament", "remove_filament", "open_grain")


class MoveRejected(Exception):
    """A move could not be applied; the original configuration is untouched."""


@dataclass(frozen=True)
class Move:
    kind: str
    payload: tuple

    def __post_init__(self):
        if self.kind not in MOVE_KINDS:
            raise ValueError(f"unknown move kind {self.kind!r}")

    def as_record(self) -> dict:
        return {"kind": self.kind, "payload": _plain(self.payload)}


def _plain(x):
    if isinstance(x, (tuple, list)):
        return [_plain(v) for v in x]
    if isinstance(x, np.integer):
        return int(x)
    return x


# ---------------------------------------------------------------------------
# features


def cell_components(mask: np.ndarray, blockH: np.ndarray, blockV: np.ndarray) -> tuple[int, np.ndarray]:
    """4-connected components of ``mask`` not crossing blocked edges.

    ``blockH``/``blockV`` use the edge array layout of ``Grid.edge_masks``.
    Returns ``(count, labels)`` with label -1 outside ``mask``.
    """
    nx, ny = mask.shape
    idx = np.arange(nx * ny).reshape(nx, ny)
    # vertical neighbors share horizontal edges (i, j, 0) for j = 1..ny-1
    up = mask[:, :-1] & mask[:, 1:] & ~blockH[:, 1:ny]
    right = mask[:-1, :] & mask[1:, :] & ~blockV[1:nx, :]
    a = np.concatenate([idx[:, :-1][up], idx[:-1, :][right]])
    b = np.concatenate([idx[:, 1:][up], idx[1:, :][right]])
    g = coo_matrix((np.ones(len(a)), (a, b)), shape=(nx * ny, nx * ny))
    _, lab = connected_components(g, directed=False)
    lab = lab.reshape(nx, ny)
    out = -np.ones((nx, ny), dtype=np.int64)
    seen: dict[int, int] = {}
    # relabel in row-major order of first cell so labels are deterministic
    for i, j in zip(*np.nonzero(mask)):
        r = int(lab[i, j])
        if r not in seen:
            seen[r] = len(seen)
        out[i, j] = seen[r]
    return len(seen), out


def _edges_of_class(codeH, codeV, classes) -> list[Edge]:
    cl = list(classes)
    return masks_to_edges(np.isin(codeH, cl), np.isin(codeV, cl))


def _touching(grid: Grid, edges: Sequence[Edge], region: np.ndarray) -> list[Edge]:
    out = []
    for e in edges:
        if any(c is not None and region[c] for c in grid.edge_cells(e)):
            out.append(e)
    return out


@dataclass(frozen=True)
class Feature:
    kind: str                      # "island", "void", "grain"
    cells: tuple[Cell, ...]
    edges: tuple[Edge, ...]        # interface edges it is attached through
    full: bool = False             # grain spanning the whole substrate


@dataclass(frozen=True)
class Features:
    islands: tuple[Feature, ...]
    voids: tuple[Feature, ...]
    grains: tuple[Feature, ...]


def enumerate_features(cfg: Configuration) -> Features:
    """Islands, enclosed voids and substrate grains in deterministic order."""
    g = cfg.grid
    A, S = cfg.composite.cells, cfg.substrate.cells
    codeH, codeV, _, _ = class_codes(cfg)
    (slH, slV), _, (cH, cV), _ = cfg.mark_masks
    coherent = _edges_of_class(codeH, codeV, [CLASS_INDEX["coherent_interface"]])

    islands = []
    film = A & ~S
    n, lab = cell_components(film, slH, slV)
    for k in range(n):
        region = lab == k
        contact = _touching(g, coherent, region)
        if contact and boundary_components(contact)[0] == 1:
            islands.append(Feature("island", tuple(map(tuple, np.argwhere(region).tolist())), tuple(contact)))

    voids = []
    exposed = _edges_of_class(codeH, codeV, [CLASS_INDEX["exposed_substrate"], CLASS_INDEX["exposed_substrate_filament"]])
    none = np.zeros_like(slH), np.zeros_like(slV)
    n, lab = cell_components(~A, *none)
    for k in range(n):
        region = lab == k
        if region[0, :].any() or region[-1, :].any() or region[:, 0].any() or region[:, -1].any():
            continue
        contact = _touching(g, exposed, region)
        if contact and boundary_components(contact)[0] == 1:
            voids.append(Feature("void", tuple(map(tuple, np.argwhere(region).tolist())), tuple(contact)))
    delam = _edges_of_class(codeH, codeV, [CLASS_INDEX["incoherent_interface"],
                                           CLASS_INDEX["delaminated_substrate_crack"]])
    if delam:
        m, labels = boundary_components(delam)
        for k in range(m):
            edges = tuple(e for e in delam if labels[e] == k)
            voids.append(Feature("void", (), edges))

    grains = []
    n, lab = cell_components(S, slH | cH, slV | cV)
    for k in range(n):
        region = lab == k
        contact = _touching(g, coherent, region)
        full = n == 1
        if full or (contact and boundary_components(contact)[0] == 1):
            grains.append(Feature("grain", tuple(map(tuple, np.argwhere(region).tolist())), tuple(contact), full))
    return Features(tuple(islands), tuple(voids), tuple(grains))


# ---------------------------------------------------------------------------
# moves


def _normalize(cfg: Configuration) -> Configuration:
    """Drop marks whose stencil no longer supports them."""
    g = cfg.grid
    A, S = cfg.composite.cells, cfg.substrate.cells

    def count(arr, e):
        return sum(int(arr[c]) for c in g.edge_cells(e) if c is not None)

    slits = {e for e in cfg.composite.slits if count(A, e) == 2}
    fil = {e for e in cfg.composite.filaments if count(A, e) == 0}
    cracks = {e for e in cfg.substrate.cracks if count(S, e) == 2}
    prof = cfg.substrate.profile
    spikes = [(i, t) for i, t in prof.spikes if t > prof.spike_base(i)]
    if (slits == cfg.composite.slits and fil == cfg.composite.filaments
            and cracks == cfg.substrate.cracks and len(spikes) == len(prof.spikes)):
        return cfg
    return cfg.replace(slits=slits, filaments=fil, cracks=cracks, spikes=spikes)


def _elementary(cfg: Configuration, move: Move) -> Configuration:
    g = cfg.grid
    A = np.array(cfg.composite.cells, copy=True)
    S = cfg.substrate.cells
    kind, p = move.kind, move.payload
    if kind in ("add_film_cell", "remove_film_cell"):
        c = (int(p[0]), int(p[1]))
        if not g.has_cell(c):
            raise MoveRejected(f"cell {c} outside the grid")
        if kind == "add_film_cell":
            if A[c]:
                raise MoveRejected(f"cell {c} already in the composite")
            A[c] = True
        else:
            if not A[c] or S[c]:
                raise MoveRejected(f"cell {c} is not a film cell")
            A[c] = False
        return cfg.replace(cells=A)
    if kind == "height_step":
        col, d = int(p[0]), int(p[1])
        if not 0 <= col < g.nx or d not in (1, -1):
            raise MoveRejected(f"bad height step {p}")
        levels = list(cfg.substrate.profile.levels)
        lv = levels[col]
        if d == 1:
            if lv >= g.ny or not A[col, lv]:
                raise MoveRejected(f"column {col} has no film cell to convert")
        elif lv <= g.base_level:
            raise MoveRejected(f"column {col} is already at height 0")
        levels[col] = lv + d
        return cfg.replace(levels=levels)
    e = tuple(int(v) for v in p)
    if not g.is_edge(e) or not g.is_interior(e):
        raise MoveRejected(f"edge {e} is not an interior edge")
    if kind == "toggle_delamination":
        return cfg.replace(slits=cfg.composite.slits ^ {e})
    if kind == "add_crack":
        if e in cfg.substrate.cracks:
            raise MoveRejected(f"edge {e} already a crack")
        if not all(c is not None and S[c] for c in g.edge_cells(e)):
            raise MoveRejected(f"crack edge {e} must separate two substrate cells")
        return cfg.replace(cracks=cfg.substrate.cracks | {e})
    if kind == "remove_crack":
        if e not in cfg.substrate.cracks:
            raise MoveRejected(f"edge {e} is not a crack")
        return cfg.replace(cracks=cfg.substrate.cracks - {e})
    if kind == "add_filament":
        if e in cfg.composite.filaments:
            raise MoveRejected(f"edge {e} already a filament")
        return cfg.replace(filaments=cfg.composite.filaments | {e})
    if kind == "remove_filament":
        if e not in cfg.composite.filaments:
            raise MoveRejected(f"edge {e} is not a filament")
        return cfg.replace(filaments=cfg.composite.filaments - {e})
    raise MoveRejected(f"unsupported move {kind}")


def _chord_levels(grid: Grid, levels: list[int], edges: Sequence[Edge]) -> list[int]:
    """Replace the column levels under ``edges`` by the rasterized chord
    joining the extreme vertices of the edge set."""
    verts = sorted({v for e in edges for v in Grid.edge_vertices(e)})
    left = min(verts, key=lambda v: (v[0], -v[1]))
    right = max(verts, key=lambda v: (v[0], v[1]))
    out = list(levels)
    if right[0] == left[0]:
        return out
    for c in range(left[0], right[0]):
        t = (c + 0.5 - left[0]) / (right[0] - left[0])
        out[c] = int(math.floor(left[1] + t * (right[1] - left[1]) + 0.5))
    return out


def _composite(cfg: Configuration, move: Move) -> Configuration:
    feats = enumerate_features(cfg)
    group = {"shrink_island": feats.islands, "fill_void": feats.voids, "open_grain": feats.grains}[move.kind]
    k = int(move.payload[0])
    if not 0 <= k < len(group):
        raise MoveRejected(f"no feature {k} for {move.kind}")
    f = group[k]
    g = cfg.grid
    if move.kind == "shrink_island":
        A = np.array(cfg.composite.cells, copy=True)
        for c in f.cells:
            A[c] = False
        levels = _chord_levels(g, list(cfg.substrate.profile.levels), f.edges)
        levels = [min(max(v, g.base_level), g.ny) for v in levels]
        new = cfg.replace(levels=levels, cells=A)
        S_new = new.substrate.cells
        removed = cfg.substrate.cells & ~S_new
        A = (A & ~removed) | S_new
        return cfg.replace(levels=levels, cells=A)
    if move.kind == "fill_void":
        if f.cells:
            A = np.array(cfg.composite.cells, copy=True)
            for c in f.cells:
                A[c] = True
            return cfg.replace(cells=A)
        return cfg.replace(slits=cfg.composite.slits - set(f.edges))
    if not f.edges:
        raise MoveRejected("grain has no coherent interface to open")
    return cfg.replace(slits=cfg.composite.slits | set(f.edges))


def apply_move(cfg: Configuration, move: Move, m=(10**9, 10**9)) -> Configuration:
    """Apply ``move`` and re-validate; raises ``MoveRejected`` on any violation."""
    return _apply_checked(cfg, move, m)[0]


def _apply_checked(cfg: Configuration, move: Move, m):
    if move.kind in COMPOSITE:
        new = _composite(cfg, move)
    elif move.kind == "swap_film_cell":
        new = _elementary(_elementary(cfg, Move("remove_film_cell", move.payload[0])),
                          Move("add_film_cell", move.payload[1]))
    elif move.kind == "paired_height_step":
        c_up, c_down = move.payload
        if c_up == c_down:
            raise MoveRejected("paired height step needs two columns")
        new = _elementary(_elementary(cfg, Move("height_step", (c_up, 1))), Move("height_step", (c_down, -1)))
    else:
        new = _elementary(cfg, move)
    new = _normalize(new)
    rep = validate_configuration(new, m)
    if not rep.admissible:
        raise MoveRejected("; ".join(rep.violations))
    if move.kind in ("shrink_island", "fill_void"):
        before = validate_configuration(cfg).components_S
        if rep.components_S > before:
            raise MoveRejected("move would add a substrate boundary component")
    return new, rep


# ---------------------------------------------------------------------------
# proposals


def _corner_mask(A: np.ndarray) -> np.ndarray:
    nx, ny = A.shape
    c = np.zeros((nx + 1, ny + 1), dtype=bool)
    c[:-1, :-1] |= A
    c[1:, :-1] |= A
    c[:-1, 1:] |= A
    c[1:, 1:] |= A
    return c


def candidates(cfg: Configuration, kind: str) -> list:
    """All payloads for which ``kind`` is worth proposing (may still be rejected)."""
    g = cfg.grid
    A, S = cfg.composite.cells, cfg.substrate.cells
    if kind == "add_film_cell":
        nb = np.zeros_like(A)
        nb[1:, :] |= A[:-1, :]
        nb[:-1, :] |= A[1:, :]
        nb[:, 1:] |= A[:, :-1]
        nb[:, :-1] |= A[:, 1:]
        return [tuple(c) for c in np.argwhere(nb & ~A).tolist()]
    if kind == "remove_film_cell":
        return [tuple(c) for c in np.argwhere(A & ~S).tolist()]
    if kind == "height_step":
        out = []
        for col, lv in enumerate(cfg.substrate.profile.levels):
            if lv < g.ny and A[col, lv]:
                out.append((col, 1))
            if lv > g.base_level:
                out.append((col, -1))
        return out
    iH, iV = g.interior_masks()
    if kind == "toggle_delamination":
        hl, hh, vl, vh = neighbor_pairs(A)
        sl, sh, svl, svh = neighbor_pairs(S)
        _, _, (cH, cV), _ = cfg.mark_masks
        okH = hl & hh & iH & ~(sl & sh & ~cH)
        okV = vl & vh & iV & ~(svl & svh & ~cV)
        return masks_to_edges(okH, okV)
    if kind == "add_crack":
        sl, sh, svl, svh = neighbor_pairs(S)
        _, _, (cH, cV), _ = cfg.mark_masks
        return masks_to_edges(sl & sh & iH & ~cH, svl & svh & iV & ~cV)
    if kind == "remove_crack":
        return sorted(cfg.substrate.cracks)
    if kind == "add_filament":
        hl, hh, vl, vh = neighbor_pairs(A)
        corner = _corner_mask(A)
        for e in cfg.composite.filaments:
            for v in Grid.edge_vertices(e):
                corner[v] = True
        _, (fH, fV), _, _ = cfg.mark_masks
        touchH = corner[:-1, :] | corner[1:, :]
        touchV = corner[:, :-1] | corner[:, 1:]
        return masks_to_edges(~hl & ~hh & iH & touchH & ~fH, ~vl & ~vh & iV & touchV & ~fV)
    if kind == "remove_filament":
        return sorted(cfg.composite.filaments)
    if kind in COMPOSITE:
        f = enumerate_features(cfg)
        n = {"shrink_island": len(f.islands), "fill_void": len(f.voids), "open_grain": len(f.grains)}[kind]
        return [(k,) for k in range(n)]
    raise ValueError(f"no candidate rule for {kind}")


def propose(cfg: Configuration, rng: np.random.Generator, kinds: Sequence[str],
            weights: Sequence[float] | None = None) -> Move | None:
    """Draw a move kind, then a payload uniformly among its candidates."""
    p = None if weights is None else np.asarray(weights, float) / float(np.sum(weights))
    kind = kinds[int(rng.choice(len(kinds), p=p))]
    if kind == "swap_film_cell":
        rem = candidates(cfg, "remove_film_cell")
        add = candidates(cfg, "add_film_cell")
        if not rem or not add:
            return None
        return Move(kind, (rem[int(rng.integers(len(rem)))], add[int(rng.integers(len(add)))]))
    if kind == "paired_height_step":
        steps = candidates(cfg, "height_step")
        ups = [c for c, d in steps if d == 1]
        downs = [c for c, d in steps if d == -1]
        if not ups or not downs:
            return None
        return Move(kind, (ups[int(rng.integers(len(ups)))], downs[int(rng.integers(len(downs)))]))
    cands = candidates(cfg, kind)
    if not cands:
        return None
    return Move(kind, tuple(cands[int(rng.integers(len(cands)))]))


# ---------------------------------------------------------------------------
# annealing


@dataclass(frozen=True)
class MinimizeParams:
    m: tuple[int, int] = (10**9, 10**9)
    volumes: tuple[float, float] | None = None
    lam: tuple[float, float] = (0.0, 0.0)
    T0: float = 0.05
    cooling: float = 0.999
    steps: int = 2000
    seed: int = 0
    cadence: int = 25
    debug: bool = False
    move_weights: dict | None = None

    def __post_init__(self):
        if self.volumes is not None and self.volumes[0] > self.volumes[1]:
            raise ValueError("target volumes need v0 <= v1")
        if min(self.lam) < 0:
            raise ValueError("penalty weights must be non-negative")
        if not 0 < self.cooling < 1:
            raise ValueError("cooling factor must lie in (0, 1)")
        if self.T0 < 0 or self.steps < 0 or self.cadence < 1:
            raise ValueError("need T0 >= 0, steps >= 0 and cadence >= 1")
        if self.move_weights is not None:
            unknown = set(self.move_weights) - set(MOVE_KINDS)
            if unknown:
                raise ValueError(f"unknown move kinds {sorted(unknown)}")

    def check_volumes(self, grid: Grid) -> None:
        if self.volumes is None:
            return
        area = 4 * grid.l * grid.L
        v0, v1 = self.volumes
        if not (area / 2 - 1e-12 <= v0 <= v1 < area):
            raise ValueError(f"target volumes must satisfy area/2 <= v0 <= v1 < area (area = {area})")

    def as_record(self) -> dict:
        return {"m": list(self.m), "volumes": None if self.volumes is None else list(self.volumes),
                "lambda": list(self.lam), "T0": self.T0, "cooling": self.cooling, "steps": self.steps,
                "seed": self.seed, "cadence": self.cadence, "debug": self.debug}


@dataclass
class Trajectory:
    records: list = field(default_factory=list)
    best: Configuration | None = None
    best_F: float = math.inf
    final: Configuration | None = None

    def to_jsonl(self) -> str:
        return "".join(json.dumps(r, sort_keys=True) + "\n" for r in self.records)


class CompactnessViolation(AssertionError):
    pass


def compactness_holds(cfg: Configuration, tensions: SurfaceTensions, S: float | None = None) -> tuple[float, float, bool]:
    la, ls = boundary_lengths(cfg)
    lhs = tensions.c1 * (la + ls)
    rhs = 2.0 * (surface_energy(cfg, tensions, check=False).S if S is None else S)
    return lhs, rhs, lhs <= rhs + 1e-12


def _run(cfg0: Configuration, tensions: SurfaceTensions, material: Material | None,
         params: MinimizeParams, kinds: Sequence[str], lam, volumes,
         callback: Callable[[int, Configuration], None] | None, mode: str) -> Trajectory:
    rep = validate_configuration(cfg0, params.m)
    if not rep.admissible:
        raise AdmissibilityError("initial configuration is not admissible: " + "; ".join(rep.violations), rep)
    rng = np.random.default_rng(params.seed)
    mw = params.move_weights or {}
    weights = [float(mw.get(k, 1.0)) for k in kinds]
    elastic = material is not None and material.has_mismatch()

    def W_of(c):
        return equilibrium_energy(c, material) if elastic else 0.0

    cur = cfg0
    S_cur = surface_energy(cur, tensions, check=False).S
    W_cur = W_of(cur)
    P_cur = penalty_term(cur, lam, volumes)
    F_cur = S_cur + W_cur + P_cur
    traj = Trajectory(best=cur, best_F=F_cur)

    def record(step, accepted, move, note=None):
        r = {"step": step, "accepted": accepted, "move": None if move is None else move.as_record(),
             "F": F_cur, "S": S_cur, "W": W_cur, "penalty": P_cur,
             "area_S": cur.area_S(), "area_A": cur.area_A(), "components": list(comps)}
        if note is not None:
            r["note"] = note
        traj.records.append(r)

    comps = (rep.components_S, rep.components_A)
    record(0, True, None, f"initial ({mode})")
    n_acc = 0
    for step in range(1, params.steps + 1):
        T = params.T0 * params.cooling ** step
        move = propose(cur, rng, kinds, weights)
        if move is None:
            record(step, False, None, "no candidate")
            continue
        try:
            new, new_rep = _apply_checked(cur, move, params.m)
        except MoveRejected as exc:
            record(step, False, move, "rejected: " + str(exc).split(";")[0])
            continue
        dS = delta_surface(cur, new, tensions)
        W_new = W_of(new) if (elastic and params.cadence == 1) else W_cur
        P_new = penalty_term(new, lam, volumes)
        dF = dS + (W_new - W_cur) + (P_new - P_cur)
        accept = dF <= 0 or (T > 0 and rng.random() < math.exp(-dF / T))
        if not accept:
            record(step, False, move)
            continue
        cur, W_cur, P_cur = new, W_new, P_new
        S_cur += dS
        n_acc += 1
        if n_acc % 50 == 0:
            S_cur = surface_energy(cur, tensions, check=False).S
        if elastic and params.cadence > 1 and (move.kind in TOPOLOGY or n_acc % params.cadence == 0):
            W_cur = W_of(cur)
        F_cur = S_cur + W_cur + P_cur
        rep = new_rep
        comps = (rep.components_S, rep.components_A)
        if params.debug:
            if not rep.admissible:
                raise AdmissibilityError("trajectory left the admissible set", rep)
            lhs, rhs, ok = compactness_holds(cur, tensions)
            if not ok:
                raise CompactnessViolation(f"compactness bound failed at step {step}: {lhs} > {rhs}")
            exact = surface_energy(cur, tensions, check=False).S
            if abs(exact - S_cur) > 1e-9 * max(1.0, abs(exact)):
                raise AssertionError(f"incremental surface energy drifted at step {step}")
        if F_cur < traj.best_F:
            traj.best, traj.best_F = cur, F_cur
        record(step, True, move)
        if callback is not None:
            callback(step, cur)
    traj.final = cur
    return traj


def minimize_penalized(cfg0: Configuration, tensions: SurfaceTensions, material: Material | None,
                       params: MinimizeParams, callback=None) -> Trajectory:
    """Anneal the volume-penalized energy with the full move catalog."""
    params.check_volumes(cfg0.grid)
    volumes = params.volumes if params.volumes is not None else (cfg0.area_S(), cfg0.area_A())
    return _run(cfg0, tensions, material, params, PENALIZED_KINDS, params.lam, volumes, callback, "penalized")


def minimize_constrained(cfg0: Configuration, tensions: SurfaceTensions, material: Material | None,
                         params: MinimizeParams, callback=None) -> Trajectory:
    """Anneal the energy with volume-preserving moves only."""
    params.check_volumes(cfg0.grid)
    if params.volumes is not None:
        tol = cfg0.grid.cell_area + 1e-12
        v0, v1 = params.volumes
        if abs(cfg0.area_S() - v0) > tol or abs(cfg0.area_A() - v1) > tol:
            raise ValueError(f"initial volumes ({cfg0.area_S()}, {cfg0.area_A()}) differ from targets "
                             f"({v0}, {v1}) by more than one cell")
    return _run(cfg0, tensions, material, params, CONSTRAINED_KINDS, None, None, callback, "constrained")
