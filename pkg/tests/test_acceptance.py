"""Acceptance criteria, one test each, with their tolerances and time limits.

Each test reports a one-line verdict through the ``acceptance`` fixture; the
lines are printed together at the end of the pytest run.
"""

import io
import math
import time

import numpy as np
import pytest

from sdri.analysis import (
    SequenceKind,
    compactness_bound_check,
    generate_sequence,
    lsc_check,
    misweighted_tensions,
    random_configuration,
    random_grid,
    random_norm,
    random_profile,
    random_tensions,
    segment_minimality_check,
    tau_convergence_report,
)
from sdri.cli import run
from sdri.elasticity import (
    DisplacementField,
    Material,
    build_mesh,
    elastic_energy,
    elastic_gradient,
    equilibrium_energy,
)
from sdri.geometry import Configuration, Grid, classify_boundary, pointwise_variation
from sdri.io import save_config
from sdri.minimize import MinimizeParams, minimize_constrained, minimize_penalized
from sdri.surface import FinslerNorm, SurfaceTensions, surface_energy
from builders import add_random_cut
from oracles import interior_edges, edge_status, oracle_boundary_length, oracle_surface_energy, spike_edge_set

CORPUS_SIZE = 1000


@pytest.fixture(scope="module")
def corpus():
    rng = np.random.default_rng(20240601)
    return [(random_configuration(rng), random_tensions(rng)) for _ in range(CORPUS_SIZE)]


def test_ac1_partition_completeness(corpus, acceptance):
    started = time.perf_counter()
    worst = 0.0
    ok = True
    for cfg, _ in corpus:
        lab = classify_boundary(cfg)
        edges = [ent.edge for ent in lab.entries]
        spikes = spike_edge_set(cfg)
        expected = {e for e in interior_edges(cfg) if any(edge_status(cfg, e, spikes)[2:])}
        ok &= len(edges) == len(set(edges)) and set(edges) == expected
        total = math.fsum(lab.lengths_by_class().values())
        ref = oracle_boundary_length(cfg)
        worst = max(worst, abs(total - ref) / max(ref, 1e-300) if ref else abs(total))
    elapsed = time.perf_counter() - started
    passed = ok and worst <= 1e-12 and elapsed < 30
    acceptance(1, "partition completeness", passed, f"{len(corpus)} configs, worst rel {worst:.1e}", started)
    assert ok and worst <= 1e-12
    assert elapsed < 30


def test_ac2_energy_oracle_equivalence(corpus, acceptance, island_cfg):
    started = time.perf_counter()
    t0 = SurfaceTensions.isotropic(1.0, 1.5, 0.5)
    island = (oracle_surface_energy(island_cfg, t0), surface_energy(island_cfg, t0).S)
    delam = island_cfg.replace(slits={(1, 2, 0)})
    delaminated = (oracle_surface_energy(delam, t0), surface_energy(delam, t0).S)
    fixtures_ok = island == (4.0, 4.0) and delaminated == (5.0, 5.0)
    worst = 0.0
    for cfg, t in corpus:
        ref = oracle_surface_energy(cfg, t)
        got = surface_energy(cfg, t).S
        worst = max(worst, abs(got - ref) / ref if ref else abs(got))
    elapsed = time.perf_counter() - started
    passed = fixtures_ok and worst <= 1e-12 and elapsed < 30
    acceptance(2, "energy oracle equivalence", passed,
               f"island {island[1]}, delaminated {delaminated[1]}, worst rel {worst:.1e}", started)
    assert fixtures_ok and worst <= 1e-12
    assert elapsed < 30


def test_ac3_variation_sandwich(acceptance):
    started = time.perf_counter()
    rng = np.random.default_rng(3)
    bad = 0
    with_spikes = 0
    for _ in range(1000):
        grid = random_grid(rng)
        prof = random_profile(rng, grid, spike_prob=0.4)
        with_spikes += bool(prof.spikes)
        var, length = pointwise_variation(prof, grid)
        # independent count of the graph's lattice edges
        lv = prof.levels
        ref = grid.nx * grid.hx + sum(abs(lv[i] - lv[i - 1]) for i in range(1, grid.nx)) * grid.hy
        ref += sum(2 * (t - max(lv[i - 1], lv[i])) for i, t in prof.spikes) * grid.hy
        if not (math.isclose(length, ref, rel_tol=1e-12) and var <= length <= 2 * grid.l + 2 * var + 1e-12):
            bad += 1
    elapsed = time.perf_counter() - started
    passed = bad == 0 and elapsed < 5
    acceptance(3, "variation sandwich", passed, f"1000 profiles ({with_spikes} with spikes), {bad} failures", started)
    assert bad == 0 and with_spikes > 100
    assert elapsed < 5


def test_ac4_compactness_bound(corpus, acceptance):
    started = time.perf_counter()
    failures = sum(not compactness_bound_check(cfg, t)[2] for cfg, t in corpus)
    rng = np.random.default_rng(4)
    visited = 0

    for seed in range(8):
        cfg, t = random_configuration(rng, Grid(1, 1, 12, 12)), random_tensions(rng)

        def check(step, c, t=t):
            nonlocal visited, failures
            visited += 1
            failures += not compactness_bound_check(c, t)[2]

        # debug mode re-validates and checks the bound at every accepted state
        minimize_penalized(cfg, t, None, MinimizeParams(steps=300, seed=seed, T0=0.2, debug=True), callback=check)
    elapsed = time.perf_counter() - started
    passed = failures == 0 and elapsed < 60
    acceptance(4, "compactness bound", passed,
               f"{len(corpus)} corpus configs + {visited} trajectory states, {failures} failures", started)
    assert failures == 0 and visited > 0
    assert elapsed < 60


def test_ac5_lower_semicontinuity(acceptance):
    started = time.perf_counter()
    rng = np.random.default_rng(5)
    grid = Grid(1.0, 1.0, 16, 16)
    seqs = {}
    for kind in SequenceKind:
        seq = generate_sequence(kind, 4, grid)
        assert tau_convergence_report(seq.members, seq.limit, seq.bounds).certified, kind
        seqs[kind] = seq
    failures = []
    for n in range(50):
        t = random_tensions(rng)
        for kind, seq in seqs.items():
            rep = lsc_check(seq.members, seq.limit, t, tolerance=1e-9)
            if not rep.passed:
                failures.append((n, kind.value, rep.margin))
    wet = SurfaceTensions.isotropic(1.0, 2.0, 0.5)
    seq = seqs[SequenceKind.DELAMINATION_CLOSING]
    adversarial = lsc_check(seq.members, seq.limit, wet, limit_tensions=misweighted_tensions(wet))
    elapsed = time.perf_counter() - started
    passed = not failures and not adversarial.passed and elapsed < 120
    acceptance(5, "lower semicontinuity", passed,
               f"6 kinds x 50 tensions, {len(failures)} failures, adversarial margin {adversarial.margin:.3f}",
               started)
    assert not failures, failures[:5]
    assert not adversarial.passed
    assert elapsed < 120


def test_ac6_elasticity(acceptance):
    started = time.perf_counter()
    rng = np.random.default_rng(6)
    grid = Grid(1.0, 1.0, 32, 32)
    b = grid.base_level

    # (a) compatible mismatch: uniform mismatch everywhere, and a detached island
    compat = []
    for _ in range(3):
        cfg = random_configuration(rng, grid)
        M0 = 0.01 * rng.normal(size=(2, 2))
        m = Material.homogeneous(1.0, 1.0, M0=M0, mismatch_everywhere=True)
        compat.append(equilibrium_energy(cfg, m))
    island = Configuration.flat(grid, film=[(c, j) for c in range(10, 20) for j in range(b, b + 4)],
                                slits=[(c, b, 0) for c in range(10, 20)])
    m_island = Material(1.0, 1.0, 2.0, 1.5, M0=[[0.01, 0.002], [0.002, -0.01]])
    compat.append(equilibrium_energy(island, m_island))
    part_a = max(compat) <= 1e-10

    # (b) gradient against central differences
    m = Material(1.0, 1.0, 2.0, 1.5, M0=np.diag([0.01, 0.01]))
    cfg = random_configuration(rng, grid)
    mesh = build_mesh(cfg)
    x = 1e-3 * rng.normal(size=(mesh.n_nodes, 2))
    grad = elastic_gradient(mesh, m, x)
    no_pins = np.array([], dtype=np.int64)

    def W(v):
        return elastic_energy(None, DisplacementField(mesh, v, no_pins), m)

    worst_grad = 0.0
    for _ in range(20):
        d = rng.normal(size=x.shape)
        h = 1e-4
        fd = (W(x + h * d) - W(x - h * d)) / (2 * h)
        an = float(np.sum(grad * d))
        worst_grad = max(worst_grad, abs(fd - an) / abs(an))
    part_b = worst_grad <= 1e-5

    # (c) an extra cut never raises the equilibrium energy
    worst_cut = -math.inf
    pairs = relaxed = 0
    while pairs < 20:
        cfg = random_configuration(rng, grid)
        cut = add_random_cut(cfg, rng)
        if cut is None:
            continue
        dW = equilibrium_energy(cut, m) - equilibrium_energy(cfg, m)
        worst_cut = max(worst_cut, dW)
        relaxed += dW < 0
        pairs += 1
    part_c = worst_cut <= 1e-12
    elapsed = time.perf_counter() - started
    passed = part_a and part_b and part_c and elapsed < 120
    acceptance(6, "elasticity", passed,
               f"max compatible W {max(compat):.1e}, grad rel {worst_grad:.1e}, "
               f"max cut dW {worst_cut:.1e} ({relaxed}/20 strictly lower)", started)
    assert part_a and part_b and part_c
    assert elapsed < 120


def test_ac7_regime_behavior(acceptance):
    started = time.perf_counter()
    grid = Grid(1.0, 1.0, 16, 16)
    b = grid.base_level

    wet = SurfaceTensions.isotropic(1.0, 2.0, 0.5)  # phi_S > phi_F + phi_FS
    island = Configuration.flat(grid, film=[(c, j) for c in range(6, 10) for j in range(b, b + 4)])
    traj = minimize_constrained(island, wet, None, MinimizeParams(steps=4000, seed=0, T0=0.05, cooling=0.999))
    F0, F1 = oracle_surface_energy(island, wet), oracle_surface_energy(traj.best, wet)
    exp0 = surface_energy(island, wet).per_class["exposed_substrate"]
    exp1 = surface_energy(traj.best, wet).per_class["exposed_substrate"]
    wet_ok = F1 < F0 and exp1 < exp0

    dewet = SurfaceTensions.isotropic(1.0, 0.6, 0.5)  # phi_S equals phi' = min(phi_F, phi_S)
    layer = Configuration.flat(grid, film=[(c, b) for c in range(grid.nx)])
    traj = minimize_constrained(layer, dewet, None, MinimizeParams(steps=8000, seed=0, T0=0.5, cooling=0.9993))
    G0, G1 = oracle_surface_energy(layer, dewet), oracle_surface_energy(traj.best, dewet)
    int0 = surface_energy(layer, dewet).per_class["coherent_interface"]
    int1 = surface_energy(traj.best, dewet).per_class["coherent_interface"]
    dewet_ok = G1 < G0 and int1 < int0
    elapsed = time.perf_counter() - started
    passed = wet_ok and dewet_ok and elapsed < 180
    acceptance(7, "regime behavior", passed,
               f"wetting F {F0:.3f}->{F1:.3f} exposed {exp0:.3f}->{exp1:.3f}; "
               f"dewetting F {G0:.3f}->{G1:.3f} interface {int0:.3f}->{int1:.3f}", started)
    assert wet_ok and dewet_ok
    assert elapsed < 180


def test_ac8_penalized_volume_monotonicity(acceptance):
    started = time.perf_counter()
    grid = Grid(1.0, 1.0, 16, 16)
    b = grid.base_level
    t = SurfaceTensions.isotropic(1.0, 0.6, 0.5)
    cfg = Configuration.flat(grid, film=[(c, j) for c in range(5, 11) for j in range(b, b + 3)])
    vols = (cfg.area_S(), cfg.area_A())
    errors = []
    for lam in (1.0, 10.0, 100.0):
        traj = minimize_penalized(cfg, t, None, MinimizeParams(steps=2000, seed=0, lam=(lam, lam), volumes=vols))
        errors.append(abs(traj.best.area_S() - vols[0]) + abs(traj.best.area_A() - vols[1]))
    monotone = all(b_ <= a + 1e-12 for a, b_ in zip(errors, errors[1:]))
    elapsed = time.perf_counter() - started
    passed = monotone and elapsed < 180
    acceptance(8, "penalized-volume monotonicity", passed,
               "volume errors " + ", ".join(f"{e:.4f}" for e in errors), started)
    assert monotone
    assert elapsed < 180


def test_ac9_segment_minimality(acceptance):
    started = time.perf_counter()
    rng = np.random.default_rng(9)

    def endpoints():
        while True:
            p = tuple(int(v) for v in rng.integers(-6, 7, 2))
            q = tuple(int(v) for v in rng.integers(-6, 7, 2))
            if p != q:
                return p, q

    failures = 0
    for _ in range(100):
        rep = segment_minimality_check(random_norm(rng), *endpoints())
        failures += not rep.passed
    worst_gap = 0.0
    for _ in range(20):
        a, b_ = rng.uniform(0.3, 3.0, 2)
        rep = segment_minimality_check(FinslerNorm.crystalline([[a, 0.0], [0.0, b_]]), *endpoints())
        worst_gap = max(worst_gap, abs(rep.path_cost - rep.chord_cost))
    elapsed = time.perf_counter() - started
    passed = failures == 0 and worst_gap <= 1e-12 and elapsed < 10
    acceptance(9, "segment minimality", passed,
               f"100 random norms, {failures} failures; axis crystalline gap {worst_gap:.1e}", started)
    assert failures == 0 and worst_gap <= 1e-12
    assert elapsed < 10


def test_ac10_determinism(tmp_path, acceptance):
    started = time.perf_counter()
    rng = np.random.default_rng(10)
    cfg = random_configuration(rng, Grid(1.0, 1.0, 16, 16))
    path = tmp_path / "start.json"
    save_config(cfg, path)
    outputs = []
    for k in range(2):
        out_dir = tmp_path / f"run{k}"
        buf = io.StringIO()
        code = run(["minimize", "--config", str(path), "--seed", "11", "--steps", "400", "--deterministic",
                    "--material", '{"film": {"lam": 1, "mu": 1}, "substrate": {"lam": 2, "mu": 1.5},'
                                  ' "M0": [[0.01, 0], [0, 0.01]]}',
                    "--out", str(out_dir)], stdout=buf)
        assert code == 0
        outputs.append((buf.getvalue().encode(), (out_dir / "trajectory.jsonl").read_bytes(),
                        (out_dir / "best.json").read_bytes()))
    identical = outputs[0] == outputs[1]
    elapsed = time.perf_counter() - started
    passed = identical and elapsed < 60
    acceptance(10, "determinism", passed, f"{len(outputs[0][1])} trajectory bytes, identical={identical}", started)
    assert identical
    assert elapsed < 60
