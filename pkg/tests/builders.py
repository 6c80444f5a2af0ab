"""Small configuration builders shared by several test modules."""

from sdri.geometry import Configuration, Grid, validate_configuration


def film_layer(n=8, thickness=2, slits=()):
    g = Grid(1.0, 1.0, n, n)
    base = g.base_level
    film = [(i, base + t) for i in range(n) for t in range(thickness)]
    return Configuration.flat(g, film=film, slits=slits)


def interface_edges(cfg):
    """Horizontal edges with substrate below and film above."""
    S, A = cfg.substrate.cells, cfg.composite.cells
    g = cfg.grid
    return [(i, j, 0) for i in range(g.nx) for j in range(1, g.ny)
            if S[i, j - 1] and A[i, j] and not S[i, j]]


def add_random_cut(cfg, rng):
    """One extra slit on an interface or film-film edge, kept admissible."""
    S, A = cfg.substrate.cells, cfg.composite.cells
    cands = []
    for e in cfg.grid.edges(interior_only=True):
        if e in cfg.composite.slits:
            continue
        a, b = cfg.grid.edge_cells(e)
        if A[a] and A[b] and not (S[a] and S[b]):
            cands.append(e)
    rng.shuffle(cands)
    for e in cands:
        new = cfg.replace(slits=set(cfg.composite.slits) | {e})
        if validate_configuration(new).admissible:
            return new
    return None
