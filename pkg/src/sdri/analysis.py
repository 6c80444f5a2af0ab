"""Numerical checks of the energy's structural inequalities.

* convergent sequences of configurations together with their limits,
  certified through signed-distance gaps;
* lower semicontinuity of the surface energy along those sequences;
* the length bound implied by the lower tension constant;
* lattice shortest paths never beating the straight chord of a norm.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from .geometry import (
    Configuration,
    Grid,
    HeightProfile,
    sdist_A,
    sdist_S,
    validate_configuration,
)
from .surface import (
    FinslerNorm,
    SurfaceTensions,
    boundary_lengths,
    surface_energy,
    validate_hypotheses,
)


class SequenceKind(str, Enum):
    NECKPINCH = "neckpinch"
    VANISHING_FILAMENT = "vanishing-filament"
    ISLAND_SHRINK = "island-shrink"
    WETTING_COLLAPSE = "wetting-collapse"
    DELAMINATION_CLOSING = "delamination-closing"
    SUBSTRATE_CRACK_CLOSING = "substrate-crack-closing"


class GridTooCoarse(ValueError):
    pass


@dataclass(frozen=True)
class GeneratedSequence:
    kind: SequenceKind
    members: tuple[Configuration, ...]
    limit: Configuration
    bounds: tuple[float, ...]   # certified upper bound on the sdist gap per member
    m: tuple[int, int]

    def __iter__(self):
        return iter((list(self.members), self.limit))


def _sizes(F0: int, K: int, kind: SequenceKind) -> list[int]:
    if F0 < 1:
        raise GridTooCoarse(f"grid too coarse for {kind.value}: no representable index (need a larger grid)")
    if K > F0:
        raise GridTooCoarse(f"grid too coarse for {kind.value} at k={K}: largest representable index is {F0}")
    return [math.ceil(F0 / k) for k in range(1, K + 1)]


def generate_sequence(kind: SequenceKind | str, K: int, grid: Grid) -> GeneratedSequence:
    """Configurations ``cfg_1..cfg_K`` whose feature size shrinks like ``1/k``."""
    kind = SequenceKind(kind)
    if K < 1:
        raise ValueError("K must be positive")
    g = grid
    b = g.base_level
    H = g.ny - b
    flat = [b] * g.nx
    diam = g.cell_diameter
    members, bounds = [], []

    if kind is SequenceKind.VANISHING_FILAMENT:
        if g.nx < 2:
            raise GridTooCoarse("vanishing-filament needs at least two columns")
        i = g.nx // 2
        for f in _sizes(H, K, kind):
            spike_edges = [(i, j, 1) for j in range(b, b + f)]
            members.append(Configuration.build(g, flat, spikes=[(i, b + f)], filaments=spike_edges))
            bounds.append(f * g.hy + diam)
        limit = Configuration.build(g, flat)
        m = (1, 1)
    elif kind is SequenceKind.WETTING_COLLAPSE:
        for f in _sizes(H - 1, K, kind):
            members.append(Configuration.build(g, flat, film=[(c, j) for c in range(g.nx) for j in range(b, b + f)]))
            bounds.append(f * g.hy + diam)
        limit = Configuration.build(g, flat)
        m = (1, 1)
    elif kind is SequenceKind.ISLAND_SHRINK:
        W0, H0 = g.nx // 2, H - 1
        F0 = min(W0, H0)
        for k, _ in enumerate(_sizes(F0, K, kind), start=1):
            w, h = math.ceil(W0 / k), math.ceil(H0 / k)
            c0 = (g.nx - w) // 2
            members.append(Configuration.build(g, flat, film=[(c, j) for c in range(c0, c0 + w) for j in range(b, b + h)]))
            bounds.append(math.hypot(w * g.hx, h * g.hy) + diam)
        limit = Configuration.build(g, flat)
        m = (1, 1)
    elif kind is SequenceKind.NECKPINCH:
        # one free column on each side keeps both blobs off the walls
        start = 1
        span = g.nx - 2
        wb = max(1, span // 4)
        hb = H - 2
        if hb < 2:
            raise GridTooCoarse("neckpinch needs at least four rows above the substrate")
        rows = range(b + 1, b + 1 + hb)
        r = b + 1 + hb // 2
        for ell in _sizes(span - 2 * wb, K, kind):
            film = [(c, j) for c in range(start, start + wb) for j in rows]
            film += [(c, j) for c in range(start + wb + ell, start + 2 * wb + ell) for j in rows]
            film += [(c, r) for c in range(start + wb, start + wb + ell)]
            members.append(Configuration.build(g, flat, film=film))
            bounds.append(ell * g.hx + diam)
        film = [(c, j) for c in range(start, start + 2 * wb) for j in rows]
        slits = [(start + wb, j, 1) for j in rows if j != r]
        limit = Configuration.build(g, flat, film=film, slits=slits)
        m = (1, 2)
    elif kind is SequenceKind.DELAMINATION_CLOSING:
        for gap in _sizes(H - 2, K, kind):
            members.append(Configuration.build(g, flat, film=[(c, b + gap) for c in range(g.nx)]))
            bounds.append(gap * g.hy + diam)
        limit = Configuration.build(g, flat, film=[(c, b) for c in range(g.nx)],
                                    slits=[(c, b, 0) for c in range(g.nx)])
        m = (1, 3)
    else:  # substrate crack closing
        D = H // 2
        c = g.nx // 2 + 1
        if D < 1 or c >= g.nx:
            raise GridTooCoarse("substrate-crack-closing needs at least two rows above y = 0 and three columns")
        top = [b + D] * g.nx
        for w in _sizes(g.nx - c - 1, K, kind):
            levels = [b if c <= col < c + w else b + D for col in range(g.nx)]
            members.append(Configuration.build(g, levels))
            bounds.append(w * g.hx + diam)
        crack = [(c, j, 1) for j in range(b, b + D)]
        limit = Configuration.build(g, top, cracks=crack, slits=crack)
        m = (1, 1)

    for k, cfg in enumerate(members + [limit], start=1):
        rep = validate_configuration(cfg, m)
        if not rep.admissible:
            raise AssertionError(f"{kind.value} member {k} is not admissible: {rep.violations}")
    return GeneratedSequence(kind, tuple(members), limit, tuple(bounds), m)


# ---------------------------------------------------------------------------
# convergence certification


@dataclass(frozen=True)
class ConvergenceReport:
    gaps_A: tuple[float, ...]
    gaps_S: tuple[float, ...]
    lengths_A: tuple[float, ...]
    lengths_S: tuple[float, ...]
    monotone: bool
    within_bounds: bool

    @property
    def sup_length_A(self) -> float:
        return max(self.lengths_A, default=0.0)

    @property
    def sup_length_S(self) -> float:
        return max(self.lengths_S, default=0.0)

    @property
    def certified(self) -> bool:
        finite = all(math.isfinite(v) for v in self.gaps_A + self.gaps_S + self.lengths_A + self.lengths_S)
        return finite and self.monotone and self.within_bounds

    def as_record(self) -> dict:
        return {"gaps_A": list(self.gaps_A), "gaps_S": list(self.gaps_S),
                "sup_length_A": self.sup_length_A, "sup_length_S": self.sup_length_S,
                "monotone": self.monotone, "within_bounds": self.within_bounds,
                "certified": self.certified}


def tau_convergence_report(members: Sequence[Configuration], limit: Configuration,
                           bounds: Sequence[float] | None = None) -> ConvergenceReport:
    """Sup-norm signed-distance gaps to the limit and boundary lengths per member."""
    if any(c.grid != limit.grid for c in members):
        raise ValueError("sequence members and limit must share one grid")
    dA, dS = sdist_A(limit), sdist_S(limit)
    gA, gS, lA, lS = [], [], [], []
    for cfg in members:
        gA.append(float(np.abs(sdist_A(cfg) - dA).max()))
        gS.append(float(np.abs(sdist_S(cfg) - dS).max()))
        la, ls = boundary_lengths(cfg)
        lA.append(la)
        # length of the full substrate boundary inside the domain
        lS.append(sum(cfg.grid.edge_length(e) for e in cfg.substrate_boundary()))
    slack = limit.grid.cell_diameter + 1e-12
    mono = all(b <= a + slack for gaps in (gA, gS) for a, b in zip(gaps, gaps[1:]))
    within = True
    if bounds is not None:
        within = all(max(a, s) <= bd + 1e-12 for a, s, bd in zip(gA, gS, bounds))
    return ConvergenceReport(tuple(gA), tuple(gS), tuple(lA), tuple(lS), mono, within)


# ---------------------------------------------------------------------------
# lower semicontinuity


@dataclass(frozen=True)
class LscReport:
    energies: tuple[float, ...]
    limit_energy: float
    tail_minima: tuple[float, ...]
    margin: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.margin >= -self.tolerance

    def as_record(self) -> dict:
        return {"energies": list(self.energies), "limit_energy": self.limit_energy,
                "tail_minima": list(self.tail_minima), "margin": self.margin,
                "tolerance": self.tolerance, "verdict": "pass" if self.passed else "fail"}


def lsc_check(members: Sequence[Configuration], limit: Configuration, tensions: SurfaceTensions,
              tolerance: float = 1e-9, limit_tensions: SurfaceTensions | None = None) -> LscReport:
    """Compare every tail minimum of ``S_k`` with the limit energy.

    ``limit_tensions`` prices the limit with different class weights, which is
    how a deliberately wrong weighting is exercised.
    """
    Sk = [surface_energy(c, tensions).S for c in members]
    S_inf = surface_energy(limit, limit_tensions or tensions).S
    tails = [min(Sk[k0:]) - S_inf for k0 in range(len(Sk))]
    return LscReport(tuple(Sk), S_inf, tuple(tails), min(tails) if tails else math.inf, tolerance)


def misweighted_tensions(tensions: SurfaceTensions) -> SurfaceTensions:
    """Price incoherent interfaces with the raw substrate tension instead of
    the regime tension, overpricing them whenever wetting is favorable."""
    return tensions.with_weights({"incoherent_interface": "phi_F+phi_S"})


def compactness_bound_check(cfg: Configuration, tensions: SurfaceTensions) -> tuple[float, float, bool]:
    """``lhs = c1 (H1(∂A) + H1(∂S \\ ∂A))`` against ``rhs = 2 S``."""
    la, ls = boundary_lengths(cfg)
    lhs = tensions.c1 * (la + ls)
    rhs = 2.0 * surface_energy(cfg, tensions).S
    return lhs, rhs, lhs <= rhs + 1e-12


# ---------------------------------------------------------------------------
# segment minimality


_STEPS = ((1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1))


@dataclass(frozen=True)
class SegmentReport:
    path_cost: float
    chord_cost: float
    passed: bool


def lattice_shortest_path(phi: FinslerNorm, p, q, hx: float = 1.0, hy: float = 1.0, margin: int = 2) -> float:
    """Dijkstra over axis and diagonal lattice steps weighted by ``phi``."""
    p, q = (int(p[0]), int(p[1])), (int(q[0]), int(q[1]))
    x0, x1 = min(p[0], q[0]) - margin, max(p[0], q[0]) + margin
    y0, y1 = min(p[1], q[1]) - margin, max(p[1], q[1]) + margin
    w = {s: float(phi.base(np.array([[s[0] * hx, s[1] * hy]]))[0]) for s in _STEPS}
    dist = {p: 0.0}
    heap = [(0.0, p)]
    while heap:
        d, v = heapq.heappop(heap)
        if v == q:
            return d
        if d > dist[v]:
            continue
        for s, c in w.items():
            u = (v[0] + s[0], v[1] + s[1])
            if not (x0 <= u[0] <= x1 and y0 <= u[1] <= y1):
                continue
            nd = d + c
            if nd < dist.get(u, math.inf):
                dist[u] = nd
                heapq.heappush(heap, (nd, u))
    return math.inf


def segment_minimality_check(phi: FinslerNorm, p, q, grid: Grid | None = None) -> SegmentReport:
    """Lattice path cost between ``p`` and ``q`` versus the chord ``phi(q - p)``."""
    if tuple(p) == tuple(q):
        raise ValueError("segment endpoints must differ")
    hx, hy = (grid.hx, grid.hy) if grid is not None else (1.0, 1.0)
    path = lattice_shortest_path(phi, p, q, hx, hy)
    chord = float(phi.base(np.array([[(q[0] - p[0]) * hx, (q[1] - p[1]) * hy]]))[0])
    return SegmentReport(path, chord, path >= chord - 1e-12)


# ---------------------------------------------------------------------------
# random generators


def random_norm(rng: np.random.Generator, scale: float = 1.0, modulate: bool = False) -> FinslerNorm:
    kind = ("isotropic", "weighted_axis", "elliptic", "crystalline")[int(rng.integers(4))]
    quads = tuple(rng.uniform(0.8, 1.25, 4)) if modulate and rng.random() < 0.5 else None
    if kind == "isotropic":
        return FinslerNorm.isotropic(scale * rng.uniform(0.5, 2.0), quads)
    if kind == "weighted_axis":
        return FinslerNorm.weighted_axis(*(scale * rng.uniform(0.5, 2.0, 2)), quadrants=quads)
    if kind == "elliptic":
        a, c = scale ** 2 * rng.uniform(0.3, 3.0, 2)
        bmax = 0.9 * math.sqrt(a * c)
        return FinslerNorm("elliptic", (a, rng.uniform(-bmax, bmax), c), quads)
    n = int(rng.integers(2, 5))
    ang = rng.uniform(0, np.pi, n)
    ang[1] = ang[0] + rng.uniform(0.3, np.pi - 0.3)
    r = scale * rng.uniform(0.5, 2.0, n)
    return FinslerNorm.crystalline(np.stack([r * np.cos(ang), r * np.sin(ang)], 1), quads)


def random_tensions(rng: np.random.Generator, modulate: bool = True, max_tries: int = 1000) -> SurfaceTensions:
    """Random tension triple passing the norm-bound and regime checks."""
    for _ in range(max_tries):
        t = SurfaceTensions(random_norm(rng, 1.0, modulate), random_norm(rng, 1.0, modulate),
                            random_norm(rng, 0.6, modulate))
        if validate_hypotheses(t).ok:
            return t
    raise RuntimeError("could not sample valid tensions")


def random_profile(rng: np.random.Generator, grid: Grid, spike_prob: float = 0.3) -> HeightProfile:
    b = grid.base_level
    levels = rng.integers(b, grid.ny + 1, grid.nx)
    spikes = []
    for i in range(1, grid.nx):
        base = max(levels[i - 1], levels[i])
        if base < grid.ny and rng.random() < spike_prob:
            spikes.append((i, int(rng.integers(base + 1, grid.ny + 1))))
    return HeightProfile(tuple(int(v) for v in levels), tuple(spikes))


def random_grid(rng: np.random.Generator, max_n: int = 16) -> Grid:
    nx = int(rng.integers(1, max_n + 1))
    ny = 2 * int(rng.integers(1, max_n // 2 + 1))
    return Grid(float(rng.choice([0.5, 1.0, 2.0])), float(rng.choice([0.5, 1.0, 1.5])), nx, ny)


def random_configuration(rng: np.random.Generator, grid: Grid | None = None, density: float = 0.35
                         ) -> Configuration:
    """Random admissible configuration exercising every kind of edge mark."""
    g = grid if grid is not None else random_grid(rng)
    prof = random_profile(rng, g)
    base = Configuration.build(g, prof.levels, spikes=prof.spikes)
    S = base.substrate.cells
    A = S | (rng.random(S.shape) < density)
    # cracks: interior edges touching the substrate
    cracks = set()
    for e in g.edges(interior_only=True):
        cells = [c for c in g.edge_cells(e) if c is not None]
        s = sum(int(S[c]) for c in cells)
        if s == 2 and rng.random() < 0.08:
            cracks.add(e)
    spike_edges = set(base.substrate.spike_edges)
    slits, filaments = set(), set()
    for e in g.edges(interior_only=True):
        lo, hi = g.edge_cells(e)
        a = int(A[lo]) + int(A[hi])
        s = int(S[lo]) + int(S[hi])
        if a == 2 and not (s == 2 and e not in cracks) and rng.random() < 0.15:
            slits.add(e)
    corner = np.zeros((g.nx + 1, g.ny + 1), dtype=bool)
    corner[:-1, :-1] |= A
    corner[1:, :-1] |= A
    corner[:-1, 1:] |= A
    corner[1:, 1:] |= A
    for e in g.edges(interior_only=True):
        lo, hi = g.edge_cells(e)
        if A[lo] or A[hi]:
            continue
        if e in spike_edges or (any(corner[v] for v in Grid.edge_vertices(e)) and rng.random() < 0.15):
            filaments.add(e)
    cfg = Configuration.build(g, prof.levels, spikes=prof.spikes, cracks=cracks, cells=A,
                              slits=slits, filaments=filaments)
    rep = validate_configuration(cfg)
    if not rep.admissible:
        raise AssertionError(f"random generator produced an inadmissible configuration: {rep.violations}")
    return cfg
