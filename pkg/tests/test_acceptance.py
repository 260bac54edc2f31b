"""Acceptance suite: one printed verdict line per criterion (1-12).

Tolerances are pinned constants below. Each test prints its line before
asserting, so a failing criterion still reports what it measured.
"""

import numpy as np
import pytest

from conftest import demo_data, random_nilpotent_data
from oracles import ode_matrix, rational_rho, sech_rho12
from nwave_gbdt.bispectral import (BispectralOperator, bispectral_operator,
                                   bispectral_residual)
from nwave_gbdt.cli import DEMOS, _probe_centres, _sample_nodes, load_demo
from nwave_gbdt.engine import (CallableSeed, GBDTParams, SeedSpec,
                               identity_residual, propagate,
                               propagate_grid, transformed_fundamental,
                               transformed_potential)
from nwave_gbdt.linalg import fro
from nwave_gbdt.rational import build_rational_solution
from nwave_gbdt.threewave import (coupling, frame_for, real_fields, speeds,
                                  three_wave_residual)
from nwave_gbdt.verification import (conservation_residual,
                                     darboux_ode_residual, identity_drift,
                                     j_unitarity, mixed_partial_residual,
                                     nwave_residual, patched_potential,
                                     potential_grid, refine, symmetry_check,
                                     zero_curvature_residual)

IDENTITY_EXACT_TOL = 1e-10
IDENTITY_RK4_TOL = 1e-7
RK4_STEP = 1e-3
ODE_TOL = 1e-6
ORDER, ORDER_BAND = 2.0, 0.3
H_COARSE, H_FINE = 1e-2, 1e-3
NWAVE_TOL = 1e-5
CONSERVATION_TOL = 1e-12
MIXED_TOL = 1e-4
UNITARITY_TOL = 1e-10
SYMMETRY_TOL = 1e-12
RATIONAL_TOL = 1e-9
HAND_TOL = 1e-12
BISPECTRAL_TOL = 1e-10
IMAG_TOL = 1e-10
CONTROL_FACTOR = 100.0
PATCH_EXTENT = 0.05

SEED = 31337
NILPOTENT_SHAPES = [(1, 1), (1, 2), (2, 2), (2, 3), (3, 3), (3, 4), (4, 4)]


def verdict(capsys, n, title, ok, detail):
    with capsys.disabled():
        print(f"\ncriterion {n:2d} [{'PASS' if ok else 'FAIL'}] {title}: {detail}")
    assert ok, f"criterion {n} failed: {detail}"


def order_ok(order):
    return order is not None and abs(order - ORDER) <= ORDER_BAND


def control_ok(bad, good):
    return bad > 0 and bad >= CONTROL_FACTOR * good


def random_z(rng, spectrum, count, radius=5.0, gap=0.1):
    """Points in ``|z| <= radius`` at distance ``>= gap`` from ``spectrum`` and its conjugate."""
    out = []
    spec = np.concatenate([np.asarray(spectrum), np.conj(spectrum)])
    while len(out) < count:
        z = radius * np.sqrt(rng.uniform()) * np.exp(2j * np.pi * rng.uniform())
        if np.min(np.abs(spec - z), initial=np.inf) >= gap:
            out.append(complex(z))
    return out


def patch_residual(name, h, compute):
    cfg = load_demo(name)
    spec, p = demo_data(name)
    centres, ext = _probe_centres(cfg, PATCH_EXTENT)
    worst = 0.0
    for xs, ts, rho in patched_potential(p, spec, centres, h, ext, method=cfg.method,
                                         allow_negative=cfg.allow_negative_domain):
        worst = max(worst, compute(spec, rho, h))
    return worst


def order_between(name, compute, h=H_COARSE):
    r1 = patch_residual(name, h, compute)
    r2 = patch_residual(name, h / 2, compute)
    return r1, r2, float(np.log2(r1 / r2))


@pytest.fixture(scope="module")
def nilpotent_cases():
    rng = np.random.default_rng(SEED)
    return [random_nilpotent_data(rng, n, m) for n, m in NILPOTENT_SHAPES]


# -- 1 ----------------------------------------------------------------------------

def test_criterion_01_displacement_identity(capsys, nilpotent_cases):
    rng = np.random.default_rng(SEED + 1)
    exact, rk4, npts = 0.0, 0.0, 0
    for k, (spec, p) in enumerate(nilpotent_cases):
        count = 100 // len(nilpotent_cases) + (k < 100 % len(nilpotent_cases))
        for x, t in rng.uniform(0, 2, size=(count, 2)):
            exact = max(exact, identity_drift(propagate(p, spec, x, t), spec))
            npts += 1
        xs, ts = np.sort(rng.uniform(0, 2, 4)), np.sort(rng.uniform(0, 2, 4))
        Pi, S = propagate_grid(p, spec, xs, ts, method="rk4", h=RK4_STEP)
        res = np.linalg.norm(identity_residual(p.A, Pi, S, spec.B), axis=(-2, -1))
        scale = np.maximum(1.0, fro(p.A) * np.linalg.norm(S, axis=(-2, -1)))
        rk4 = max(rk4, float(np.max(res / scale)))
    # control: S(0, 0) perturbed off the identity
    spec, p = nilpotent_cases[3]
    bad = GBDTParams(p.A, p.Pi0, p.S0 + 0.1 * np.eye(p.n))
    control = identity_drift(propagate(bad, spec, 1.0, 1.0), spec)
    ok = (npts == 100 and exact <= IDENTITY_EXACT_TOL and rk4 <= IDENTITY_RK4_TOL
          and control_ok(control, exact))
    verdict(capsys, 1, "displacement identity", ok,
            f"exact {exact:.2e} <= {IDENTITY_EXACT_TOL:g} at {npts} points; "
            f"rk4 h={RK4_STEP:g} {rk4:.2e} <= {IDENTITY_RK4_TOL:g}")


# -- 2 ----------------------------------------------------------------------------

def _x_generator(spec, closed_form):
    D = spec.D

    def gen_for(z):
        def gen(s):
            r = closed_form(s)
            return 1j * z * D - (D @ r - r @ D)
        return gen
    return gen_for


def _sech_closed(x):
    r = sech_rho12(1.0, x)
    return np.array([[0.0, r], [r, 0.0]])


ODE_CASES = {"sech_soliton": _sech_closed, "rational2x2": lambda x: rational_rho(2.0, x, 0.0)}


def test_criterion_02_darboux_against_direct_ode(capsys):
    rng = np.random.default_rng(SEED + 2)
    worst, control = 0.0, np.inf
    for name, closed in ODE_CASES.items():
        spec, p = demo_data(name)
        gen_for = _x_generator(spec, closed)
        bump = np.array([[0.0, 0.05], [0.05, 0.0]])
        gen_bad = _x_generator(spec, lambda s: closed(s) + bump)
        for z in random_z(rng, np.linalg.eigvals(p.A), 10):
            x = float(rng.uniform(0, 1))
            w = transformed_fundamental(p, spec, x, z).value
            diff = fro(w - ode_matrix(gen_for(z), np.eye(2), 0.0, x))
            worst = max(worst, diff)
            control = min(control, fro(w - ode_matrix(gen_bad(z), np.eye(2), 0.0, x)) / max(x, 1e-3))
    # the control scales with x; normalize it so short intervals do not dominate
    ok = worst <= ODE_TOL and control_ok(control, worst)
    verdict(capsys, 2, "transformed fundamental solution vs direct ODE", ok,
            f"max {worst:.2e} <= {ODE_TOL:g} over 20 (z, x) samples on 2 demos; "
            f"perturbed potential >= {control:.2e}")


# -- 3 ----------------------------------------------------------------------------

def _nwave(spec, rho, h):
    return nwave_residual(rho, spec.d, spec.dhat, h).max_residual


def test_criterion_03_nwave_residual(capsys):
    parts, ok = [], True
    for name in DEMOS:
        r1, r2, order = order_between(name, _nwave)
        fine = patch_residual(name, H_FINE, _nwave)
        good = order_ok(order) and fine <= NWAVE_TOL
        ok &= good
        parts.append(f"{name} order {order:.3f} at h={H_FINE:g} {fine:.2e}")
    # control: smooth symmetric perturbation of the rational solution
    spec, _ = demo_data("rational2x2")
    _, p = demo_data("rational2x2")
    xs = ts = np.linspace(0, 0.05, 51)
    rho, _, _, _ = potential_grid(p, spec, xs, ts)
    X, T = np.meshgrid(xs, ts, indexing="ij")
    bump = 0.01 * (X * T)[..., None, None] * np.array([[0, 1], [-1, 0]])
    good_r = nwave_residual(rho, spec.d, spec.dhat, 1e-3).max_residual
    bad_r = nwave_residual(rho + bump, spec.d, spec.dhat, 1e-3).max_residual
    ok &= control_ok(bad_r, good_r)
    verdict(capsys, 3, "N-wave residual", ok,
            "; ".join(parts) + f" (order {ORDER}+/-{ORDER_BAND}, tol {NWAVE_TOL:g})")


# -- 4 ----------------------------------------------------------------------------

def test_criterion_04_darboux_ode_order(capsys):
    parts, ok = [], True
    for name in DEMOS:
        cfg = load_demo(name)
        spec, p = demo_data(name)
        xs = sorted({x for x, _ in _sample_nodes(cfg)})
        z = cfg.z_samples[0]
        neg = cfg.allow_negative_domain

        def make(h):
            return darboux_ode_residual(p, spec, xs, z, h, t=cfg.grid.t0, allow_negative=neg)
        rep = refine(make, H_COARSE)
        fine = make(H_FINE).max_residual
        good = order_ok(rep.convergence_order) and fine <= NWAVE_TOL
        ok &= good
        parts.append(f"{name} order {rep.convergence_order:.3f} at h={H_FINE:g} {fine:.2e}")
    spec, p = demo_data("sech_soliton")
    bad = GBDTParams(p.A, p.Pi0, p.S0 + 0.5)
    xs = [0.0, 0.5, 1.0]
    good_r = darboux_ode_residual(p, spec, xs, 0.4 + 0.1j, H_FINE).max_residual
    bad_r = darboux_ode_residual(bad, spec, xs, 0.4 + 0.1j, H_FINE).max_residual
    ok &= control_ok(bad_r, good_r)
    verdict(capsys, 4, "Darboux-matrix ODE residual", ok, "; ".join(parts))


# -- 5 ----------------------------------------------------------------------------

def _nonsolution_seed():
    # symmetric, but rho_x != 0 while [D, rho] and [Dhat, rho] commute: not an N-wave solution
    seed = CallableSeed(lambda x, t: np.array([[0, x], [x, 0]], dtype=complex),
                        rho_x=lambda x, t: np.array([[0, 1], [1, 0]], dtype=complex),
                        rho_t=lambda x, t: np.zeros((2, 2), dtype=complex))
    return SeedSpec([1.0, -1.0], [1.0, -0.5], [1.0, 1.0], seed)


def test_criterion_05_conservation(capsys, nilpotent_cases):
    rng = np.random.default_rng(SEED + 5)
    c1 = c2 = 0.0
    cases = nilpotent_cases + [demo_data(n) for n in DEMOS]
    for k in range(25):
        spec, p = cases[k % len(cases)]
        x, t = rng.uniform(0, 2, 2)
        r1, r2 = conservation_residual(p, spec, [(x, t)])
        c1, c2 = max(c1, r1.max_residual), max(c2, r2.max_residual)
    spec, p = demo_data("sech_soliton")
    pts = [(0.0, 0.0), (0.5, 0.25), (1.0, 0.5)]
    mixed = refine(lambda h: mixed_partial_residual(p, spec, pts, h, method="rk4"), H_COARSE)
    poly_spec, poly_p = nilpotent_cases[4]
    mixed_poly = mixed_partial_residual(poly_p, poly_spec, pts, H_COARSE, method="rk4").max_residual
    bad_spec = _nonsolution_seed()
    bad_p = GBDTParams([[1j]], [[1.0, 1.0]], [[1.0]])
    bad_c1 = conservation_residual(bad_p, bad_spec, [(0.3, 0.2), (0.5, 0.1)])[0].max_residual
    bad_mixed = mixed_partial_residual(bad_p, bad_spec, [(0.3, 0.2)], H_COARSE).max_residual
    ok = (c1 <= CONSERVATION_TOL and c2 <= CONSERVATION_TOL
          and mixed.max_residual <= MIXED_TOL and order_ok(mixed.convergence_order)
          and mixed_poly <= MIXED_TOL
          and control_ok(bad_c1, max(c1, c2)) and control_ok(bad_mixed, mixed.max_residual))
    verdict(capsys, 5, "conservation laws", ok,
            f"c1 {c1:.2e}, c2 {c2:.2e} <= {CONSERVATION_TOL:g} at 25 states; mixed partials "
            f"rk4 h={H_COARSE:g} {mixed.max_residual:.2e} order {mixed.convergence_order:.3f} "
            f"(nilpotent {mixed_poly:.1e})")


# -- 6 ----------------------------------------------------------------------------

def test_criterion_06_b_unitarity(capsys):
    rng = np.random.default_rng(SEED + 6)
    worst, control, nstates = 0.0, np.inf, 0
    for name in DEMOS:
        cfg = load_demo(name)
        spec, p = demo_data(name)
        sigma = np.linalg.eigvals(p.A)
        # shifting S alone can keep the identity (A = 0 with Pi B Pi^* = 0); rescale a column of Pi
        Pi_bad = np.array(p.Pi0, dtype=complex)
        Pi_bad[:, 0] *= 1.2
        bad = GBDTParams(p.A, Pi_bad, p.S0)
        for x, t in _sample_nodes(cfg, 3):
            zs = random_z(rng, sigma, 20)
            st = propagate(p, spec, x, t, allow_negative=cfg.allow_negative_domain)
            worst = max(worst, j_unitarity(st, spec, zs).max_residual)
            sb = propagate(bad, spec, x, t, allow_negative=cfg.allow_negative_domain)
            control = min(control, j_unitarity(sb, spec, zs).max_residual)
            nstates += 1
    ok = worst <= UNITARITY_TOL and control_ok(control, worst)
    verdict(capsys, 6, "B-unitarity of the Darboux matrix", ok,
            f"max {worst:.2e} <= {UNITARITY_TOL:g} over {nstates} states x 20 z; "
            f"perturbed Pi >= {control:.2e}")


# -- 7 ----------------------------------------------------------------------------

def test_criterion_07_symmetry(capsys, nilpotent_cases):
    worst, nodes = 0.0, 0
    for name in DEMOS:
        cfg = load_demo(name)
        spec, p = demo_data(name)
        rho, singular, _, _ = potential_grid(p, spec, cfg.grid.xs, cfg.grid.ts, method=cfg.method,
                                             allow_negative=cfg.allow_negative_domain)
        for r in rho[~singular]:
            worst = max(worst, symmetry_check(r, spec.B))
            nodes += 1
    rng = np.random.default_rng(SEED + 7)
    for spec, p in nilpotent_cases:
        for x, t in rng.uniform(0, 2, size=(10, 2)):
            r = transformed_potential(propagate(p, spec, x, t), spec)
            worst = max(worst, symmetry_check(r, spec.B))
            nodes += 1
    spec, p = demo_data("rational2x2")
    broken = transformed_potential(propagate(p, spec, 0.5, 0.5), spec)
    broken[0, 1] += 0.1
    control = symmetry_check(broken, spec.B)
    ok = worst <= SYMMETRY_TOL and control_ok(control, worst)
    verdict(capsys, 7, "symmetry of the transformed potential", ok,
            f"max relative {worst:.2e} <= {SYMMETRY_TOL:g} at {nodes} evaluations")


# -- 8 ----------------------------------------------------------------------------

def test_criterion_08_rational_extension(capsys, nilpotent_cases):
    rng = np.random.default_rng(SEED + 8)
    worst, bounds_ok, control = 0.0, True, 0.0
    sols = []
    for spec, p in nilpotent_cases:
        sol = build_rational_solution(p, spec)
        n = p.n
        bounds_ok &= sol.SPoly.degx <= 2 * n - 1 and sol.SPoly.degt <= 2 * n - 1
        bounds_ok &= sol.detS.total_degree <= n * (2 * n - 1)
        sols.append(sol)
    for k in range(25):
        i = k % len(nilpotent_cases)
        spec, p = nilpotent_cases[i]
        x, t = rng.uniform(0, 2, 2)
        num = transformed_potential(propagate(p, spec, x, t, method="rk4", h=RK4_STEP), spec)
        worst = max(worst, fro(sols[i].rho(x, t) - num) / max(1.0, fro(num)))
        bad = GBDTParams(p.A, p.Pi0, p.S0 + 0.1 * np.eye(p.n))
        num_bad = transformed_potential(propagate(bad, spec, x, t, method="rk4", h=RK4_STEP), spec)
        # max, like the report itself: the (1, 1) case has Pi = 0 and ignores S
        control = max(control, fro(sols[i].rho(x, t) - num_bad) / max(1.0, fro(num_bad)))
    hand_spec = SeedSpec([1.0, -1.0], [1.0, 0.0], [1.0, -1.0])
    hand = build_rational_solution(GBDTParams([[0.0]], [[1.0, 1.0]], [[2.0]]), hand_spec)
    hand_err = max(np.max(np.abs(hand.rho(x, t) - rational_rho(2.0, x, t)))
                   for x, t in rng.uniform(0, 2, size=(25, 2)))
    ok = worst <= RATIONAL_TOL and bounds_ok and hand_err <= HAND_TOL and control_ok(control, worst)
    verdict(capsys, 8, "rational extension", ok,
            f"exact vs rk4 {worst:.2e} <= {RATIONAL_TOL:g} at 25 points; degree bounds "
            f"{'hold' if bounds_ok else 'BROKEN'}; hand instance {hand_err:.1e} <= {HAND_TOL:g}")


# -- 9 ----------------------------------------------------------------------------

def test_criterion_09_bispectral(capsys):
    rng = np.random.default_rng(SEED + 9)
    c1 = bispectral_operator(1).coeffs
    c2 = bispectral_operator(2).coeffs
    worst, control, used = 0.0, np.inf, []
    for name in DEMOS:
        cfg = load_demo(name)
        spec, p = demo_data(name)
        sigma = np.linalg.eigvals(p.A)
        if not np.allclose(sigma, sigma[0]):
            continue
        lam = complex(np.trace(p.A) / p.n)
        op = bispectral_operator(p.n, lam)
        bad = BispectralOperator(op.lam, (op.coeffs[0] * 1.1,) + tuple(op.coeffs[1:]))
        zs = random_z(rng, [lam], 10)
        for x, t in _sample_nodes(cfg, 3):
            kw = dict(allow_negative=cfg.allow_negative_domain)
            worst = max(worst, bispectral_residual(op, p, spec, x, zs, t, **kw))
            control = min(control, bispectral_residual(bad, p, spec, x, zs, t, **kw))
        used.append(name)
    ok = (tuple(c1) == (2, 1) and tuple(c2) == (6, 6, 1) and worst <= BISPECTRAL_TOL
          and len(used) == 3 and control_ok(control, worst))
    verdict(capsys, 9, "bispectral operator", ok,
            f"n=1 {tuple(c1)}, n=2 {tuple(c2)}; residual {worst:.2e} <= {BISPECTRAL_TOL:g} "
            f"on {', '.join(used)}")


# -- 10 ---------------------------------------------------------------------------

def _r3(spec, rho, h):
    return float(np.max(three_wave_residual(frame_for(spec, rho), h)))


def _r6(spec, rho, h):
    return float(np.max(three_wave_residual(frame_for(spec, rho, True), h)))


def test_criterion_10_three_wave(capsys):
    psi = speeds([3, 2, 1], [2, 0, 1])
    eps = coupling([3, 2, 1], [2, 0, 1])
    coeff_ok = np.allclose(psi, [-2, 1, -0.5], rtol=0, atol=1e-15) and abs(eps + 3 / np.sqrt(2)) <= 1e-15
    _, _, o3 = order_between("threewave_real", _r3)
    _, _, o6 = order_between("threewave_real", _r6)
    cfg = load_demo("threewave_real")
    spec, p = demo_data("threewave_real")
    rho, singular, _, _ = potential_grid(p, spec, cfg.grid.xs, cfg.grid.ts)
    frame = frame_for(spec, rho[~singular][:, None])
    imag = float(np.max(np.abs((-1j * frame.phi).imag)))
    rotated = float(np.max(np.abs((-1j * np.exp(0.3j) * frame.phi).imag)))
    # control: corrupt phi_3 on a patch and compare with the clean residual
    xs, ts, r = next(patched_potential(p, spec, [(0.3, 0.3)], H_FINE, 0.02))
    clean = frame_for(spec, r)
    dirty = type(clean)(clean.psi, clean.eps, clean.phi + np.array([0, 0, 0.1])[:, None, None])
    good_r = float(np.max(three_wave_residual(clean, H_FINE)))
    bad_r = float(np.max(three_wave_residual(dirty, H_FINE)))
    real_fields(frame_for(spec, r, True))
    ok = (coeff_ok and order_ok(o3) and order_ok(o6) and imag <= IMAG_TOL
          and control_ok(bad_r, good_r) and control_ok(rotated, imag))
    verdict(capsys, 10, "three-wave form", ok,
            f"psi {tuple(float(v) for v in psi)}, eps {eps:.6f}; order complex {o3:.3f}, "
            f"real {o6:.3f}; max |Im| {imag:.1e} <= {IMAG_TOL:g}")


# -- 11 ---------------------------------------------------------------------------

def test_criterion_11_negative_controls(capsys):
    """Oracles not covered by a control inside another criterion."""
    spec, p = demo_data("rational2x2")
    h = 1e-3
    xs = ts = np.arange(11) * h
    rho, _, _, _ = potential_grid(p, spec, xs, ts)
    X, T = np.meshgrid(xs, ts, indexing="ij")
    bump = 0.01 * (X * T)[..., None, None] * np.array([[0, 1], [-1, 0]])
    zc_good = zero_curvature_residual(rho, spec.d, spec.dhat, 1.3, h).max_residual
    zc_bad = zero_curvature_residual(rho + bump, spec.d, spec.dhat, 1.3, h).max_residual
    # identity drift under rk4, against parameters that break the identity
    spec2, p2 = demo_data("sech_soliton")
    bad2 = GBDTParams(p2.A, p2.Pi0 * 1.2, p2.S0)
    d_good = identity_drift(propagate(p2, spec2, 0.7, 0.2, method="rk4"), spec2)
    d_bad = identity_drift(propagate(bad2, spec2, 0.7, 0.2, method="rk4"), spec2)
    ok = control_ok(zc_bad, zc_good) and control_ok(d_bad, d_good)
    verdict(capsys, 11, "negative controls", ok,
            f"zero curvature {zc_bad:.1e} vs {zc_good:.1e}; rk4 identity {d_bad:.1e} vs {d_good:.1e}; "
            f"controls for criteria 1-10 asserted inline at >= {CONTROL_FACTOR:g}x")


# -- 12 ---------------------------------------------------------------------------

def test_criterion_12_determinism(capsys, demo_runs):
    mismatches, files = [], 0
    for name, (a, b, _) in demo_runs.items():
        for f in sorted(a.iterdir()):
            files += 1
            if f.read_bytes() != (b / f.name).read_bytes():
                mismatches.append(f"{name}/{f.name}")
        if sorted(x.name for x in a.iterdir()) != sorted(x.name for x in b.iterdir()):
            mismatches.append(f"{name}: file sets differ")
    ok = not mismatches and files > 0
    verdict(capsys, 12, "determinism", ok,
            f"{files} files across {len(demo_runs)} demos, repeated runs "
            + ("byte-identical" if ok else "differ: " + ", ".join(mismatches)))
