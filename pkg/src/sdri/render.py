"""SVG drawings of configurations."""

from __future__ import annotations

from .geometry import CLASS_INDEX, Configuration, Grid, classify_boundary

SUBSTRATE_FILL = "#555555"
FILM_FILL = "#bbbbbb"


def _seg(grid: Grid, e, scale: float, height: float) -> tuple[float, float, float, float]:
    (i0, j0), (i1, j1) = Grid.edge_vertices(e)
    return (i0 * grid.hx * scale, height - j0 * grid.hy * scale,
            i1 * grid.hx * scale, height - j1 * grid.hy * scale)


def render_svg(cfg: Configuration, px: float = 400.0) -> str:
    """Substrate in dark gray, film in light gray; coherent interfaces dashed,
    incoherent interfaces and other cuts solid."""
    g = cfg.grid
    scale = px / (2 * g.l)
    W, H = 2 * g.l * scale, 2 * g.L * scale
    cw, ch = g.hx * scale, g.hy * scale
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W:.2f}" height="{H:.2f}" '
           f'viewBox="0 0 {W:.2f} {H:.2f}">',
           f'<rect x="0" y="0" width="{W:.2f}" height="{H:.2f}" fill="white" stroke="black"/>']
    S, A = cfg.substrate.cells, cfg.composite.cells
    for i in range(g.nx):
        for j in range(g.ny):
            if A[i, j]:
                fill = SUBSTRATE_FILL if S[i, j] else FILM_FILL
                out.append(f'<rect x="{i * cw:.2f}" y="{H - (j + 1) * ch:.2f}" width="{cw:.2f}" '
                           f'height="{ch:.2f}" fill="{fill}" stroke="none"/>')
    dashed = {CLASS_INDEX["coherent_interface"]}
    for ent in classify_boundary(cfg).entries:
        x0, y0, x1, y1 = _seg(g, ent.edge, scale, H)
        k = CLASS_INDEX[ent.label]
        style = 'stroke-dasharray="4,3" ' if k in dashed else ""
        width = 2.5 if ent.label in ("incoherent_interface", "film_crack", "delaminated_substrate_crack") else 1.2
        out.append(f'<line class="{ent.label}" x1="{x0:.2f}" y1="{y0:.2f}" x2="{x1:.2f}" y2="{y1:.2f}" '
                   f'stroke="black" stroke-width="{width}" {style}/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
