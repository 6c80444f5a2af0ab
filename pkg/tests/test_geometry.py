import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sdri.analysis import random_configuration, random_profile
from sdri.geometry import (
    CLASSES,
    AdmissibilityError,
    Configuration,
    ConsistencyError,
    GeometryError,
    Grid,
    HeightProfile,
    blowup,
    boundary_components,
    class_codes,
    classify_boundary,
    count_edge_components,
    edge_class,
    pointwise_variation,
    sdist_field,
    substrate_from_height,
    validate_configuration,
)
from oracles import brute_distance, flood_components, oracle_boundary_length


def test_grid_invariants():
    with pytest.raises(GeometryError):
        Grid(1, 1, 4, 3)
    with pytest.raises(GeometryError):
        Grid(0, 1, 4, 4)
    g = Grid(1, 2, 4, 8)
    assert g.hx == 0.5 and g.hy == 0.5 and g.base_level == 4


class TestSubstrateFromHeight:
    def test_full_box_has_no_interior_boundary(self):
        g = Grid(1, 1, 4, 4)
        sub = substrate_from_height(g, HeightProfile((4, 4, 4, 4)))
        assert sub.cells.all()
        assert sub.boundary_edges() == []

    def test_flat_graph_boundary_is_the_axis(self):
        g = Grid(1, 1, 4, 4)
        edges = substrate_from_height(g, HeightProfile((2,) * 4)).boundary_edges()
        assert edges == [(i, 2, 0) for i in range(4)]
        assert sum(g.edge_length(e) for e in edges) == 2.0

    def test_jump_segments(self):
        # h = [0, 0.5, 0.25] with L = 1 and eight rows
        g = Grid(1, 1, 3, 8)
        prof = HeightProfile.from_heights(g, [0, 0.5, 0.25])
        assert prof.levels == (4, 6, 5)
        vert = [e for e in substrate_from_height(g, prof).boundary_edges() if e[2] == 1]
        assert math.isclose(sum(g.edge_length(e) for e in vert), 0.75)

    def test_crack_outside_subgraph(self):
        g = Grid(1, 1, 4, 4)
        with pytest.raises(AdmissibilityError, match=r"\(1, 3, 0\)"):
            substrate_from_height(g, HeightProfile((2,) * 4), [(1, 3, 0)])

    def test_spike_edges_join_the_boundary(self):
        g = Grid(1, 1, 4, 4)
        sub = substrate_from_height(g, HeightProfile((2,) * 4, ((2, 4),)))
        assert {(2, 2, 1), (2, 3, 1)} <= set(sub.boundary_edges())


class TestValidate:
    def test_full_box(self):
        g = Grid(1, 1, 4, 4)
        rep = validate_configuration(Configuration.build(g, [4] * 4), (1, 1))
        assert rep.admissible and (rep.components_S, rep.components_A) == (0, 0)
        assert validate_configuration(Configuration.build(g, [4] * 4), (0, 0)).admissible

    def test_detached_island_counts_against_m1(self):
        g = Grid(1, 1, 4, 6)
        cfg = Configuration.flat(g, film=[(1, 4)])
        assert validate_configuration(cfg, (1, 2)).admissible
        rep = validate_configuration(cfg, (1, 1))
        assert not rep.admissible and rep.components_A == 2
        # oracle: substrate top plus the island outline
        assert flood_components(cfg.composite_boundary()) == 2

    def test_slit_in_substrate_bulk(self):
        g = Grid(1, 1, 4, 4)
        cfg = Configuration.flat(g, slits=[(1, 1, 0)])
        rep = validate_configuration(cfg)
        assert not rep.admissible
        assert any("∂A ∩ Int(S) ≠ ∅" in v for v in rep.violations)
        ok = Configuration.flat(g, slits=[(1, 1, 0)], cracks=[(1, 1, 0)])
        assert validate_configuration(ok).admissible

    def test_substrate_outside_composite(self):
        g = Grid(1, 1, 4, 4)
        cells = np.zeros((4, 4), bool)
        rep = validate_configuration(Configuration.build(g, [2] * 4, cells=cells))
        assert not rep.admissible

    def test_detached_filament(self):
        g = Grid(1, 1, 4, 6)
        rep = validate_configuration(Configuration.flat(g, filaments=[(2, 5, 0)]))
        assert any("detached" in v for v in rep.violations)
        attached = Configuration.flat(g, filaments=[(2, 3, 1)])
        assert validate_configuration(attached).admissible

    def test_bare_spike_must_be_a_filament(self):
        g = Grid(1, 1, 4, 4)
        bare = Configuration.build(g, [2] * 4, spikes=[(2, 4)])
        assert not validate_configuration(bare).admissible
        fil = Configuration.build(g, [2] * 4, spikes=[(2, 4)], filaments=[(2, 2, 1), (2, 3, 1)])
        assert validate_configuration(fil).admissible

    def test_height_out_of_range(self):
        g = Grid(1, 1, 4, 4)
        assert not validate_configuration(Configuration.build(g, [1, 2, 2, 2])).admissible

    def test_violations_never_raise(self):
        g = Grid(1, 1, 4, 4)
        rep = validate_configuration(Configuration.build(g, [2] * 3))
        assert not rep.admissible


class TestBoundaryComponents:
    def test_empty(self):
        assert boundary_components([])[0] == 0

    def test_single_cell(self):
        assert boundary_components(Grid.cell_edges((1, 1)))[0] == 1

    def test_diagonal_cells_share_a_corner(self):
        edges = list(Grid.cell_edges((1, 1))) + list(Grid.cell_edges((2, 2)))
        n, labels = boundary_components(edges)
        assert n == 1 == flood_components(edges)
        assert set(labels.values()) == {0}

    def test_labels_follow_smallest_edge(self):
        edges = [(5, 5, 0), (0, 0, 0)]
        n, labels = boundary_components(edges)
        assert n == 2 and labels[(0, 0, 0)] == 0 and labels[(5, 5, 0)] == 1

    @given(st.lists(st.tuples(st.integers(0, 6), st.integers(0, 6), st.integers(0, 1)), max_size=30),
           st.randoms(use_true_random=False))
    @settings(max_examples=100, deadline=None)
    def test_permutation_invariant_and_matches_oracle(self, edges, rnd):
        n1, l1 = boundary_components(edges)
        shuffled = list(edges)
        rnd.shuffle(shuffled)
        n2, l2 = boundary_components(shuffled)
        assert n1 == n2 == flood_components(edges)
        assert l1 == l2
        g = Grid(1, 1, 7, 8)
        H, V = g.edge_masks(e for e in edges if g.is_edge(e))
        assert count_edge_components(g, H, V) == flood_components([e for e in edges if g.is_edge(e)])


class TestClassify:
    def test_film_free_edge(self, island_cfg):
        labels = {e.edge: e.label for e in classify_boundary(island_cfg).entries}
        assert labels[(1, 3, 0)] == "film_free"
        assert labels[(1, 2, 0)] == "coherent_interface"
        assert labels[(0, 2, 0)] == "exposed_substrate"

    def test_incoherent_interface(self, island_cfg):
        cfg = island_cfg.replace(slits={(1, 2, 0)})
        labels = {e.edge: e.label for e in classify_boundary(cfg).entries}
        assert labels[(1, 2, 0)] == "incoherent_interface"

    def test_film_crack(self, island_cfg):
        cfg = island_cfg.replace(slits={(2, 2, 1)})
        labels = {e.edge: e.label for e in classify_boundary(cfg).entries}
        assert labels[(2, 2, 1)] == "film_crack"

    def test_all_eleven_classes_reachable(self):
        seen = set()
        rng = np.random.default_rng(3)
        for _ in range(300):
            cfg = random_configuration(rng)
            seen |= {e.label for e in classify_boundary(cfg).entries}
        assert seen == set(CLASSES)

    def test_unreachable_combination_raises(self):
        g = Grid(1, 1, 4, 4)
        bad = Configuration.flat(g, slits=[(1, 1, 0)])
        with pytest.raises(ConsistencyError):
            class_codes(bad)

    def test_domain_walls_are_excluded(self, island_cfg):
        codeH, codeV, _, _ = class_codes(island_cfg)
        assert (codeV[0] == -2).any() and (codeV[-1] == -2).any()
        assert all(island_cfg.grid.is_interior(e.edge) for e in classify_boundary(island_cfg).entries)

    def test_scalar_classifier_matches_vectorized(self):
        rng = np.random.default_rng(8)
        for _ in range(40):
            cfg = random_configuration(rng)
            codeH, codeV, _, _ = class_codes(cfg)
            for e in cfg.grid.edges(interior_only=True):
                code = (codeH if e[2] == 0 else codeV)[e[0], e[1]]
                assert edge_class(cfg, e) == max(int(code), -1)

    def test_partition_lengths(self):
        rng = np.random.default_rng(9)
        for _ in range(50):
            cfg = random_configuration(rng)
            lb = classify_boundary(cfg)
            assert len({e.edge for e in lb.entries}) == len(lb.entries)
            assert math.isclose(lb.total_length(), oracle_boundary_length(cfg), rel_tol=1e-12, abs_tol=1e-12)

    def test_normals_are_unit_axes(self, island_cfg):
        for ent in classify_boundary(island_cfg).entries:
            assert ent.normal in {(0, 1), (0, -1), (1, 0), (-1, 0)}
        top = [e for e in classify_boundary(island_cfg).entries if e.edge == (1, 3, 0)][0]
        assert top.normal == (0, 1)


class TestPointwiseVariation:
    def test_constant(self):
        g = Grid(1.5, 1, 5, 4)
        assert pointwise_variation(HeightProfile((3,) * 5), g) == (0.0, 3.0)

    def test_jumps(self):
        g = Grid(1, 1, 3, 8)
        var, length = pointwise_variation(HeightProfile((4, 6, 5)), g)
        assert math.isclose(var, 0.75) and math.isclose(length, 2.75)
        assert var <= length <= 2 * g.l + 2 * var

    def test_spike_counted_up_and_down(self):
        g = Grid(1, 1, 4, 8)
        var, length = pointwise_variation(HeightProfile((4,) * 4, ((2, 7),)), g)
        s = 3 * g.hy
        assert math.isclose(var, 2 * s) and math.isclose(length, 2 * g.l + 2 * s)

    @given(st.integers(0, 10**6))
    @settings(max_examples=200, deadline=None)
    def test_sandwich(self, seed):
        rng = np.random.default_rng(seed)
        g = Grid(float(rng.uniform(0.5, 2)), 1.0, int(rng.integers(1, 17)), 2 * int(rng.integers(1, 9)))
        var, length = pointwise_variation(random_profile(rng, g), g)
        assert var <= length + 1e-12
        assert length <= 2 * g.l + 2 * var + 1e-12


class TestSdist:
    def test_zero_on_boundary_points(self):
        g = Grid(1, 1, 4, 4)
        from sdri.geometry import distance_to_edges, region_boundary
        cells = Configuration.flat(g).S
        d = distance_to_edges(g, region_boundary(g, cells), np.array([[0.1, 0.0], [-1.0, -0.3]]))
        assert np.allclose(d, 0.0)

    def test_full_box_center(self):
        g = Grid(1, 1, 4, 4)
        d = sdist_field(g, np.ones((4, 4), bool))
        # the sampled center nearest (0, 0) sits a quarter cell off the axes
        assert math.isclose(d[1, 1], -0.75) and d.max() < 0

    def test_empty_boundary(self):
        g = Grid(1, 1, 2, 2)
        with pytest.raises(GeometryError, match="undefined signed distance"):
            sdist_field(g, np.zeros((2, 2), bool))

    def test_matches_brute_force(self):
        rng = np.random.default_rng(4)
        g = Grid(1, 1, 6, 6)
        from sdri.geometry import region_boundary
        for _ in range(5):
            cells = rng.random((6, 6)) < 0.5
            cells[0, 0] = True
            edges = region_boundary(g, cells)
            segs = [((g.x_of(i), g.y_of(j)), (g.x_of(i + (a == 0)), g.y_of(j + (a == 1)))) for i, j, a in edges]
            ref = brute_distance(g.cell_centers().reshape(-1, 2), segs).reshape(6, 6)
            got = sdist_field(g, cells)
            assert np.allclose(np.abs(got), ref, atol=1e-12)
            assert np.all((got < 0) == cells) and np.all((got > 0) == ~cells)

    def test_one_cell_change_moves_sdist_by_at_most_a_cell(self):
        rng = np.random.default_rng(5)
        g = Grid(1, 1, 8, 8)
        for _ in range(20):
            cells = rng.random((8, 8)) < 0.5
            cells[0, 0], cells[7, 7] = True, False
            i, j = rng.integers(1, 7, 2)
            other = cells.copy()
            other[i, j] = not other[i, j]
            gap = np.abs(sdist_field(g, cells) - sdist_field(g, other)).max()
            assert gap <= g.cell_diameter + 1e-12


class TestBlowup:
    def test_identity(self, island_cfg):
        assert blowup(island_cfg, (0.0, 0.0), 1.0) == island_cfg

    def test_flat_interface_stays_flat(self):
        g = Grid(2, 2, 16, 16)
        cfg = Configuration.flat(g)
        for rho in (0.5, 1.0, 1.5):
            b = blowup(cfg, (0.0, 0.0), rho)
            assert set(b.substrate.profile.levels) == {b.grid.base_level}

    def test_island_fills_window_fraction(self):
        g = Grid(2, 2, 16, 16)
        film = [(i, j) for i in range(7, 9) for j in range(8, 10)]
        cfg = Configuration.flat(g, film=film)
        b = blowup(cfg, (0.0, 0.5), 0.5)
        film_frac = (b.A & ~b.S).mean()
        assert 0.2 <= film_frac <= 1.0

    def test_composition(self):
        rng = np.random.default_rng(2)
        g = Grid(1, 1, 16, 16)
        for _ in range(10):
            cfg = random_configuration(rng, g)
            assert blowup(blowup(cfg, (0, 0), 0.5), (0, 0), 0.5) == blowup(cfg, (0, 0), 0.25)

    def test_window_outside_domain(self, island_cfg):
        with pytest.raises(GeometryError):
            blowup(island_cfg, (0.5, 0.0), 1.0)
        with pytest.raises(GeometryError):
            blowup(island_cfg, (0.1, 0.0), 0.5)
