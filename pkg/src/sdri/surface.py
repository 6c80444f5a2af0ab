"""Anisotropic surface tensions and the composite surface energy on the grid.

A tension is a Finsler norm ``phi(x, xi)``: a direction-dependent norm with an
optional piecewise-constant multiplier per quadrant of the plane.  Every
boundary edge is priced by the weight of its interface class (see
``geometry.CLASSES``) evaluated at the edge midpoint against the edge normal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .geometry import (
    CLASSES,
    CLASS_INDEX,
    Configuration,
    Edge,
    Grid,
    class_codes,
    edge_class,
    neighbor_pairs,
    require_admissible,
)

NORM_KINDS = ("isotropic", "weighted_axis", "elliptic", "crystalline")


class TensionError(ValueError):
    """Malformed tension descriptor or a failed structural hypothesis."""


@dataclass(frozen=True)
class FinslerNorm:
    """Direction-dependent norm with optional quadrant modulation.

    ``params`` per kind:
      * isotropic: ``(c,)``, value ``c |xi|``
      * weighted_axis: ``(w1, w2)``, value ``w1 |xi_1| + w2 |xi_2|``
      * elliptic: ``(m11, m12, m22)`` of an SPD matrix, value ``sqrt(xi^T M xi)``
      * crystalline: flattened support vectors ``(v1x, v1y, v2x, ...)``,
        value ``sum_k |v_k . xi|`` (a polygonal norm; axis vectors give
        a weighted l1 norm)
    ``quadrants`` multiplies the value by ``q[0]`` on ``x >= 0, y >= 0``,
    ``q[1]`` on ``x < 0, y >= 0``, ``q[2]`` on ``x < 0, y < 0``, ``q[3]`` on
    ``x >= 0, y < 0``.
    """

    kind: str
    params: tuple[float, ...]
    quadrants: tuple[float, float, float, float] | None = None

    def __post_init__(self):
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))
        if self.quadrants is not None:
            q = tuple(float(v) for v in self.quadrants)
            if len(q) != 4 or min(q) <= 0:
                raise TensionError("quadrant multipliers must be four positive numbers")
            object.__setattr__(self, "quadrants", q)
        p = self.params
        if self.kind == "isotropic":
            ok = len(p) == 1 and p[0] > 0
        elif self.kind == "weighted_axis":
            ok = len(p) == 2 and min(p) > 0
        elif self.kind == "elliptic":
            ok = len(p) == 3 and p[0] > 0 and p[0] * p[2] - p[1] ** 2 > 0
        elif self.kind == "crystalline":
            v = np.asarray(p).reshape(-1, 2) if len(p) % 2 == 0 and p else np.zeros((0, 2))
            # positivity needs the support vectors to span the plane
            ok = len(v) >= 2 and np.linalg.matrix_rank(v) == 2
        else:
            raise TensionError(f"unknown norm kind {self.kind!r}; expected one of {NORM_KINDS}")
        if not ok:
            raise TensionError(f"invalid parameters {p} for a {self.kind} norm")

    @classmethod
    def isotropic(cls, c: float, quadrants=None) -> "FinslerNorm":
        return cls("isotropic", (c,), quadrants)

    @classmethod
    def weighted_axis(cls, w1: float, w2: float, quadrants=None) -> "FinslerNorm":
        return cls("weighted_axis", (w1, w2), quadrants)

    @classmethod
    def elliptic(cls, M, quadrants=None) -> "FinslerNorm":
        M = np.asarray(M, dtype=float)
        return cls("elliptic", (M[0, 0], M[0, 1], M[1, 1]), quadrants)

    @classmethod
    def crystalline(cls, vectors, quadrants=None) -> "FinslerNorm":
        return cls("crystalline", tuple(np.asarray(vectors, dtype=float).ravel()), quadrants)

    def scaled(self, s: float) -> "FinslerNorm":
        """The norm ``s * phi`` (``s > 0``)."""
        if self.kind == "elliptic":
            p = tuple(s * s * v for v in self.params)
        else:
            p = tuple(s * v for v in self.params)
        return FinslerNorm(self.kind, p, self.quadrants)

    def base(self, xi: np.ndarray) -> np.ndarray:
        """Unmodulated value for an ``(N, 2)`` array of directions."""
        xi = np.asarray(xi, dtype=float).reshape(-1, 2)
        p = self.params
        if self.kind == "isotropic":
            return p[0] * np.hypot(xi[:, 0], xi[:, 1])
        if self.kind == "weighted_axis":
            return p[0] * np.abs(xi[:, 0]) + p[1] * np.abs(xi[:, 1])
        if self.kind == "elliptic":
            q = p[0] * xi[:, 0] ** 2 + 2 * p[1] * xi[:, 0] * xi[:, 1] + p[2] * xi[:, 1] ** 2
            return np.sqrt(np.maximum(q, 0.0))
        v = np.asarray(p).reshape(-1, 2)
        return np.abs(xi @ v.T).sum(axis=1)

    def critical_directions(self) -> np.ndarray:
        """Unit directions where the unmodulated value on the unit circle can
        attain its extrema besides the lattice normals."""
        p = self.params
        if self.kind == "crystalline":
            v = np.asarray(p).reshape(-1, 2)
            # minima sit at the kinks; on each arc between kinks the value is
            # linear in xi, so maxima point along a signed sum of the vectors
            kinks = np.stack([-v[:, 1], v[:, 0]], 1)
            ang = np.sort(np.mod(np.arctan2(kinks[:, 1], kinks[:, 0]), np.pi))
            mid = (ang + np.append(ang[1:], ang[0] + np.pi)) / 2
            sums = np.sign(np.stack([np.cos(mid), np.sin(mid)], 1) @ v.T) @ v
            d = np.concatenate([kinks, sums[np.linalg.norm(sums, axis=1) > 0]])
        elif self.kind == "elliptic":
            d = np.linalg.eigh(np.array([[p[0], p[1]], [p[1], p[2]]]))[1].T
        elif self.kind == "weighted_axis":
            d = np.array([[p[0], p[1]], [p[0], -p[1]]])
        else:
            return np.zeros((0, 2))
        d = d / np.linalg.norm(d, axis=1, keepdims=True)
        return np.concatenate([d, -d])

    def multiplier(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float).reshape(-1, 2)
        if self.quadrants is None:
            return np.ones(len(x))
        q = np.asarray(self.quadrants)
        right = x[:, 0] >= 0
        up = x[:, 1] >= 0
        idx = np.where(up, np.where(right, 0, 1), np.where(right, 3, 2))
        return q[idx]

    def evaluate(self, x, xi) -> np.ndarray:
        """Vectorized ``phi(x, xi)`` for ``(N, 2)`` positions and directions."""
        xi = np.asarray(xi, dtype=float).reshape(-1, 2)
        x = np.broadcast_to(np.asarray(x, dtype=float).reshape(-1, 2), xi.shape)
        return self.multiplier(x) * self.base(xi)

    def __call__(self, x, xi) -> float:
        return float(self.evaluate(np.asarray(x, dtype=float)[None], np.asarray(xi, dtype=float)[None])[0])

    def discontinuity_lines(self) -> tuple[str, ...]:
        """Grid lines across which the modulation jumps (empty when continuous)."""
        if self.quadrants is None:
            return ()
        q = self.quadrants
        out = []
        if q[0] != q[1] or q[3] != q[2]:
            out.append("x = 0")
        if q[0] != q[3] or q[1] != q[2]:
            out.append("y = 0")
        return tuple(out)

    def as_record(self) -> dict:
        rec = {"kind": self.kind, "params": list(self.params)}
        if self.quadrants is not None:
            rec["quadrants"] = list(self.quadrants)
        return rec

    @classmethod
    def from_record(cls, rec) -> "FinslerNorm":
        if isinstance(rec, (int, float)):
            return cls.isotropic(float(rec))
        try:
            return cls(rec["kind"], tuple(rec["params"]), rec.get("quadrants"))
        except (KeyError, TypeError) as exc:
            raise TensionError(f"malformed norm descriptor {rec!r}") from exc


# weight formulas: sums of optionally doubled base tensions
_TERMS = ("phi_F", "phi_S", "phi_FS", "phi", "phi_prime")

DEFAULT_WEIGHTS: dict[str, str] = {
    "film_free": "phi_F",
    "exposed_substrate": "phi",
    "film_crack": "2*phi_F",
    "film_filament": "2*phi_prime",
    "coherent_interface": "phi_FS",
    "delaminated_substrate_crack": "2*phi",
    "exposed_substrate_filament": "2*phi_prime",
    "substrate_filament_on_film_boundary": "phi_F",
    "bonded_substrate_crack": "2*phi_FS",
    "incoherent_interface": "phi_F+phi",
    "substrate_filament_in_film_crack": "2*phi_F",
}

FILAMENT_ON_FILM_CHOICES = ("phi_F", "phi", "phi+phi_FS")


def parse_weight(formula: str) -> tuple[tuple[float, str], ...]:
    """Parse ``"2*phi_F+phi"`` into ``((2.0, "phi_F"), (1.0, "phi"))``."""
    terms = []
    for raw in formula.replace(" ", "").split("+"):
        coef, _, name = raw.rpartition("*")
        if name not in _TERMS:
            raise TensionError(f"unknown tension {name!r} in weight formula {formula!r}")
        try:
            c = float(coef) if coef else 1.0
        except ValueError as exc:
            raise TensionError(f"bad coefficient in weight formula {formula!r}") from exc
        terms.append((c, name))
    return tuple(terms)


@dataclass(frozen=True)
class SurfaceTensions:
    """The three tensions plus the per-class weight formulas derived from them."""

    phi_F: FinslerNorm
    phi_S: FinslerNorm
    phi_FS: FinslerNorm
    weights: Mapping[str, str] = field(default_factory=lambda: dict(DEFAULT_WEIGHTS))

    def __post_init__(self):
        w = dict(DEFAULT_WEIGHTS)
        w.update(self.weights)
        unknown = set(w) - set(CLASSES)
        if unknown:
            raise TensionError(f"unknown interface classes {sorted(unknown)}")
        for f in w.values():
            parse_weight(f)
        object.__setattr__(self, "weights", w)

    @classmethod
    def isotropic(cls, f: float, s: float, fs: float, **kw) -> "SurfaceTensions":
        return cls(FinslerNorm.isotropic(f), FinslerNorm.isotropic(s), FinslerNorm.isotropic(fs), **kw)

    def with_filament_on_film(self, choice: str) -> "SurfaceTensions":
        """Override the weight of substrate filaments lying on the film free boundary."""
        if choice not in FILAMENT_ON_FILM_CHOICES:
            raise TensionError(f"choice must be one of {FILAMENT_ON_FILM_CHOICES}")
        return self.with_weights({"substrate_filament_on_film_boundary": choice})

    def with_weights(self, overrides: Mapping[str, str]) -> "SurfaceTensions":
        w = dict(self.weights)
        w.update(overrides)
        return SurfaceTensions(self.phi_F, self.phi_S, self.phi_FS, w)

    def scaled(self, s: float) -> "SurfaceTensions":
        return SurfaceTensions(self.phi_F.scaled(s), self.phi_S.scaled(s), self.phi_FS.scaled(s), self.weights)

    def term(self, name: str, x, xi) -> np.ndarray:
        if name == "phi_F":
            return self.phi_F.evaluate(x, xi)
        if name == "phi_S":
            return self.phi_S.evaluate(x, xi)
        if name == "phi_FS":
            return self.phi_FS.evaluate(x, xi)
        if name == "phi":
            return self.phi(x, xi)
        return self.phi_prime(x, xi)

    def phi(self, x, xi) -> np.ndarray:
        """Regime tension ``min(phi_S, phi_F + phi_FS)``."""
        return np.minimum(self.phi_S.evaluate(x, xi), self.phi_F.evaluate(x, xi) + self.phi_FS.evaluate(x, xi))

    def phi_prime(self, x, xi) -> np.ndarray:
        """Regime tension ``min(phi_F, phi_S)``."""
        return np.minimum(self.phi_F.evaluate(x, xi), self.phi_S.evaluate(x, xi))

    def class_weight(self, label: str | int, x, xi) -> np.ndarray:
        name = CLASSES[label] if isinstance(label, (int, np.integer)) else label
        x = np.asarray(x, dtype=float).reshape(-1, 2)
        xi = np.asarray(xi, dtype=float).reshape(-1, 2)
        out = np.zeros(len(xi))
        for c, term in parse_weight(self.weights[name]):
            out = out + c * self.term(term, x, xi)
        return out

    @property
    def c1(self) -> float:
        return self._bounds()[0]

    @property
    def c2(self) -> float:
        return self._bounds()[1]

    def critical_directions(self) -> np.ndarray:
        return np.concatenate([n.critical_directions() for n in (self.phi_F, self.phi_S, self.phi_FS)])

    def _bounds(self) -> tuple[float, float]:
        x, xi = sample_points_directions(extra=self.critical_directions())
        lo = min(float(v.min()) for v in (self.phi_F.evaluate(x, xi), self.phi_FS.evaluate(x, xi),
                                          self.phi_S.evaluate(x, xi), self.phi(x, xi)))
        hi = max(float(v.max()) for v in (self.phi_F.evaluate(x, xi), self.phi_FS.evaluate(x, xi),
                                          self.phi_S.evaluate(x, xi)))
        return lo, hi

    def as_record(self) -> dict:
        rec = {"phi_F": self.phi_F.as_record(), "phi_S": self.phi_S.as_record(),
               "phi_FS": self.phi_FS.as_record()}
        changed = {k: v for k, v in self.weights.items() if DEFAULT_WEIGHTS[k] != v}
        if changed:
            rec["weights"] = dict(sorted(changed.items()))
        return rec

    @classmethod
    def from_record(cls, rec) -> "SurfaceTensions":
        if isinstance(rec, (list, tuple)):
            if len(rec) != 3:
                raise TensionError("isotropic shorthand needs three numbers (phi_F, phi_S, phi_FS)")
            return cls.isotropic(*[float(v) for v in rec])
        try:
            return cls(FinslerNorm.from_record(rec["phi_F"]), FinslerNorm.from_record(rec["phi_S"]),
                       FinslerNorm.from_record(rec["phi_FS"]), rec.get("weights", {}))
        except (KeyError, TypeError) as exc:
            raise TensionError(f"malformed tension descriptor: {exc}") from exc


def derive_regime_tensions(phi_F: FinslerNorm, phi_S: FinslerNorm, phi_FS: FinslerNorm
                           ) -> tuple[Callable, Callable]:
    """Return evaluators ``(phi, phi_prime)`` of the two regime tensions."""
    t = SurfaceTensions(phi_F, phi_S, phi_FS)
    return t.phi, t.phi_prime


def sample_points_directions(n_dirs: int = 64, extra=None) -> tuple[np.ndarray, np.ndarray]:
    """One representative point per quadrant crossed with the four lattice
    normals, ``n_dirs`` equally spaced unit directions and ``extra``."""
    ang = 2 * np.pi * np.arange(n_dirs) / n_dirs
    parts = [[[1, 0], [0, 1], [-1, 0], [0, -1]], np.stack([np.cos(ang), np.sin(ang)], 1)]
    if extra is not None and len(extra):
        parts.append(np.asarray(extra, dtype=float).reshape(-1, 2))
    dirs = np.concatenate(parts)
    pts = np.array([[0.5, 0.5], [-0.5, 0.5], [-0.5, -0.5], [0.5, -0.5]])
    x = np.repeat(pts, len(dirs), axis=0)
    xi = np.tile(dirs, (len(pts), 1))
    return x, xi


@dataclass(frozen=True)
class HypothesisReport:
    c1: float
    c2: float
    h1_ok: bool
    h2_ok: bool
    h2_margin: float
    h2_worst: tuple[tuple[float, float], tuple[float, float]]
    c3: dict
    discontinuities: tuple[str, ...]

    @property
    def ok(self) -> bool:
        return self.h1_ok and self.h2_ok

    def as_record(self) -> dict:
        return {"c1": self.c1, "c2": self.c2, "h1_ok": self.h1_ok, "h2_ok": self.h2_ok,
                "h2_margin": self.h2_margin, "h2_worst": [list(self.h2_worst[0]), list(self.h2_worst[1])],
                "c3": self.c3, "discontinuities": list(self.discontinuities)}


def validate_hypotheses(tensions: SurfaceTensions, material=None) -> HypothesisReport:
    """Check the norm bounds and the regime inequality, plus elastic coercivity when a material is given.

    The regime inequality ``phi >= |phi_FS - phi_F|`` is checked at the
    sampled points/directions; its worst sample is reported.  Coercivity
    constants come from ``material.coercivity()`` and a non-positive-definite
    tensor raises.
    """
    x, xi = sample_points_directions()
    c1, c2 = tensions._bounds()
    margin = tensions.phi(x, xi) - np.abs(tensions.phi_FS.evaluate(x, xi) - tensions.phi_F.evaluate(x, xi))
    k = int(np.argmin(margin))
    c3 = {}
    if material is not None:
        c3 = material.coercivity()
        bad = {k_: v for k_, v in c3.items() if not v > 0}
        if bad:
            raise TensionError(f"elasticity tensor is not positive definite: {bad}")
    disc = tuple(sorted(set(tensions.phi_F.discontinuity_lines() + tensions.phi_S.discontinuity_lines()
                            + tensions.phi_FS.discontinuity_lines())))
    return HypothesisReport(
        c1=c1, c2=c2, h1_ok=bool(c1 > 0 and np.isfinite(c2)),
        h2_ok=bool(margin[k] >= -1e-12), h2_margin=float(margin[k]),
        h2_worst=((float(x[k, 0]), float(x[k, 1])), (float(xi[k, 0]), float(xi[k, 1]))),
        c3=c3, discontinuities=disc,
    )


# ---------------------------------------------------------------------------
# energy evaluation


@dataclass(frozen=True)
class EnergyBreakdown:
    per_class: dict
    S: float
    W: float = 0.0
    penalty: float = 0.0

    @property
    def total(self) -> float:
        return self.S + self.W + self.penalty

    def as_record(self) -> dict:
        return {"per_class": dict(self.per_class), "S": self.S, "W": self.W,
                "penalty": self.penalty, "total": self.total}


def _edge_geometry(grid: Grid, axis: int, ii: np.ndarray, jj: np.ndarray, nu: np.ndarray):
    if axis == 0:
        mid = np.stack([-grid.l + (ii + 0.5) * grid.hx, -grid.L + jj * grid.hy], 1)
        normal = np.stack([np.zeros(len(ii)), nu.astype(float)], 1)
        length = grid.hx
    else:
        mid = np.stack([-grid.l + ii * grid.hx, -grid.L + (jj + 0.5) * grid.hy], 1)
        normal = np.stack([nu.astype(float), np.zeros(len(ii))], 1)
        length = grid.hy
    return mid, normal, length


def edge_energy_arrays(cfg: Configuration, tensions: SurfaceTensions):
    """Per-edge energies as ``(EH, EV, codeH, codeV)`` arrays (zero off the boundary)."""
    g = cfg.grid
    codeH, codeV, nuH, nuV = class_codes(cfg)
    outs = []
    for axis, code, nu in ((0, codeH, nuH), (1, codeV, nuV)):
        E = np.zeros(code.shape)
        for k in np.unique(code[code >= 0]):
            ii, jj = np.nonzero(code == k)
            mid, normal, length = _edge_geometry(g, axis, ii, jj, nu[ii, jj])
            E[ii, jj] = tensions.class_weight(int(k), mid, normal) * length
        outs.append(E)
    return outs[0], outs[1], codeH, codeV


def _sum_by_class(EH, EV, codeH, codeV, maskH=None, maskV=None) -> dict:
    out = {}
    for k, name in enumerate(CLASSES):
        sel_h = codeH == k
        sel_v = codeV == k
        if maskH is not None:
            sel_h &= maskH
            sel_v &= maskV
        # fixed (row-major) accumulation order keeps sums bit-reproducible
        out[name] = math.fsum(np.concatenate([EH[sel_h], EV[sel_v]]).tolist())
    return out


def surface_energy(cfg: Configuration, tensions: SurfaceTensions, check: bool = True) -> EnergyBreakdown:
    """Composite surface energy with its per-class decomposition."""
    if check:
        require_admissible(cfg)
    EH, EV, codeH, codeV = edge_energy_arrays(cfg, tensions)
    per = _sum_by_class(EH, EV, codeH, codeV)
    return EnergyBreakdown(per, math.fsum(per.values()))


def edge_energy(cfg: Configuration, tensions: SurfaceTensions, e: Edge) -> float:
    """Energy carried by a single edge (zero off the interior boundary)."""
    k = edge_class(cfg, e)
    if k < 0:
        return 0.0
    g = cfg.grid
    lo, hi = g.edge_cells(e)
    A, S = cfg.composite.cells, cfg.substrate.cells
    if k in (CLASS_INDEX["coherent_interface"], CLASS_INDEX["bonded_substrate_crack"]) and S[lo] != S[hi]:
        sign = 1 if S[lo] else -1
    elif A[lo] != A[hi]:
        sign = 1 if A[lo] else -1
    else:
        sign = 1
    normal = (0.0, float(sign)) if e[2] == 0 else (float(sign), 0.0)
    return float(tensions.class_weight(k, g.edge_midpoint(e), normal)[0]) * g.edge_length(e)


def affected_edges(old: Configuration, new: Configuration) -> set:
    """Edges whose class may differ between two configurations on one grid."""
    g = old.grid
    changed = (old.composite.cells != new.composite.cells) | (old.substrate.cells != new.substrate.cells)
    out: set = set()
    for i, j in zip(*np.nonzero(changed)):
        out.update(g.cell_edges((int(i), int(j))))
    for a, b in ((old.composite.slits, new.composite.slits),
                 (old.composite.filaments, new.composite.filaments),
                 (old.substrate.cracks, new.substrate.cracks),
                 (old.substrate.spike_edges, new.substrate.spike_edges)):
        out.update(a ^ b)
    return out


def delta_surface(old: Configuration, new: Configuration, tensions: SurfaceTensions,
                  edges: Iterable[Edge] | None = None) -> float:
    """``S(new) - S(old)`` summed over the affected edge stencil only."""
    if edges is None:
        edges = affected_edges(old, new)
    edges = sorted(edges)
    return math.fsum(edge_energy(new, tensions, e) for e in edges) - math.fsum(
        edge_energy(old, tensions, e) for e in edges)


def _window_masks(grid: Grid, window: Sequence[float]):
    x0, x1, y0, y1 = (float(v) for v in window)
    fi = [(x0 + grid.l) / grid.hx, (x1 + grid.l) / grid.hx]
    fj = [(y0 + grid.L) / grid.hy, (y1 + grid.L) / grid.hy]
    idx = [int(round(v)) for v in fi + fj]
    if any(abs(a - b) > 1e-9 for a, b in zip(fi + fj, idx)):
        raise TensionError("window is not aligned with the grid")
    i0, i1, j0, j1 = idx
    if not (0 <= i0 <= i1 <= grid.nx and 0 <= j0 <= j1 <= grid.ny):
        raise TensionError("window must lie inside the domain")
    # half-open in both directions so grid-aligned partitions are additive
    ih = np.arange(grid.nx)[:, None]
    jh = np.arange(grid.ny + 1)[None, :]
    mH = (ih >= i0) & (ih < i1) & (jh >= j0) & (jh < j1)
    iv = np.arange(grid.nx + 1)[:, None]
    jv = np.arange(grid.ny)[None, :]
    mV = (iv >= i0) & (iv < i1) & (jv >= j0) & (jv < j1)
    return mH, mV


def localized_surface_energy(cfg: Configuration, tensions: SurfaceTensions,
                             window: Sequence[float], check: bool = True) -> float:
    """Surface energy of the edges inside a grid-aligned window ``(x0, x1, y0, y1)``.

    Edges on the window's left/bottom sides belong to it, edges on the
    right/top sides belong to the neighbor, so disjoint windows add up.
    """
    if check:
        require_admissible(cfg)
    mH, mV = _window_masks(cfg.grid, window)
    EH, EV, codeH, codeV = edge_energy_arrays(cfg, tensions)
    return math.fsum(_sum_by_class(EH, EV, codeH, codeV, mH, mV).values())


def reduced_energy_Fprime(cfg: Configuration, tensions: SurfaceTensions, W_value: float = 0.0) -> float:
    """Energy with the substrate held fixed.

    Removes from ``S + W`` the substrate reduced-boundary term priced with
    ``phi_FS`` and the doubled ``phi_prime`` term of film filaments.
    """
    if cfg.substrate.cracks or cfg.substrate.profile.spikes:
        raise TensionError("F' defined only for fixed regular substrate (no cracks or spikes)")
    require_admissible(cfg)
    g = cfg.grid
    EH, EV, codeH, codeV = edge_energy_arrays(cfg, tensions)
    S = math.fsum(_sum_by_class(EH, EV, codeH, codeV).values())
    iH, iV = g.interior_masks()
    terms = []
    for axis, (lo, hi), inter in ((0, neighbor_pairs(cfg.S)[:2], iH), (1, neighbor_pairs(cfg.S)[2:], iV)):
        red = (lo ^ hi) & inter
        ii, jj = np.nonzero(red)
        nu = np.where(lo[ii, jj], 1, -1)
        mid, normal, length = _edge_geometry(g, axis, ii, jj, nu)
        terms += (tensions.phi_FS.evaluate(mid, normal) * length).tolist()
    fil = math.fsum(EH[codeH == CLASS_INDEX["film_filament"]].tolist()
                    + EV[codeV == CLASS_INDEX["film_filament"]].tolist())
    return S + float(W_value) - math.fsum(terms) - fil


def boundary_lengths(cfg: Configuration) -> tuple[float, float]:
    """``(H1(Omega ∩ ∂A), H1(Omega ∩ ∂S \\ ∂A))``."""
    g = cfg.grid
    dA = set(cfg.composite_boundary())
    dS = set(cfg.substrate_boundary())
    return (math.fsum(g.edge_length(e) for e in sorted(dA)),
            math.fsum(g.edge_length(e) for e in sorted(dS - dA)))
