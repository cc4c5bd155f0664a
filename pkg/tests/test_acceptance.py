"""Acceptance criteria 1-12, one PASS/FAIL line each.

Run with ``pytest tests/test_acceptance.py -v``; the criterion lines are
printed with capture disabled so they show up in the normal log. Criteria
whose stated form does not hold are strict xfails: the check still runs in
full and must keep failing for the reason given.
"""

from __future__ import annotations

import math
import subprocess
import sys
import time
from functools import lru_cache

import numpy as np
import pytest

from hreilly import charts as C
from hreilly import fields as F
from hreilly import identities as I
from hreilly.calculus import fd_crosscheck, hessian_split, horizontal_ops
from hreilly.group import dilate, group_inv, group_mul, structural_matrix
from hreilly.quadrature import QuadratureSpec, coarea_slices, domain_integral

SPEC = QuadratureSpec()
V = (1.0, -0.5)
RELL_FUNCTIONS = {
    "rho2_half": F.rho2_half(),
    "two_t": F.two_t(),
    "linear_horizontal": F.linear_horizontal(V),
    "x1^2": F.polynomial("x1^2"),
    "x1*y1*t": F.polynomial("x1*y1*t"),
    "exp_cos": F.exp_cos(),
}
TRANSCENDENTAL = {"exp_cos"}


def report_line(capsys, k: int, ok: bool, detail: str, seconds: float):
    with capsys.disabled():
        print(f"\nCRITERION {k:2d}: {'PASS' if ok else 'FAIL'}  ({seconds:.1f}s)  {detail}")


@lru_cache(maxsize=None)
def unit_ball(n: int = 1):
    return C.ball_radial(0, 1, n)


@lru_cache(maxsize=None)
def rell(name: str):
    return I.reilly_report(unit_ball(), None, RELL_FUNCTIONS[name], SPEC)


@lru_cache(maxsize=None)
def c0f(name: str):
    return I.c0f_report(unit_ball(), None, RELL_FUNCTIONS[name], SPEC)


# -- 1 -----------------------------------------------------------------------

def test_criterion_01_algebra(capsys):
    t0 = time.perf_counter()
    rng = np.random.default_rng(1)
    worst = 0.0
    for n in (1, 2):
        p, q, r = rng.uniform(-2, 2, (3, 10_000, 2 * n + 1))
        s = rng.uniform(0, 3, (8, 1))
        assoc = group_mul(group_mul(p, q), r) - group_mul(p, group_mul(q, r))
        inv = np.concatenate([group_mul(p, group_inv(p)), group_mul(group_inv(p), p)])
        # dilate takes one scalar, so the batch runs over a few fixed factors
        dil = [dilate(si, group_mul(p, q)) - group_mul(dilate(si, p), dilate(si, q))
               for si in s[:8, 0]]
        worst = max(worst, *(float(np.max(np.abs(a))) for a in (assoc, inv, *dil)))
    dt = time.perf_counter() - t0
    ok = worst <= 1e-12 and dt < 1.0
    report_line(capsys, 1, ok, f"max residual {worst:.2e}", dt)
    assert ok


# -- 2 -----------------------------------------------------------------------

def _catalog_fields(n):
    out = []
    for name, make in F.FIELD_CATALOG.items():
        field = make(*([V] if name == "linear_horizontal" and n == 1 else
                       [V * n] if name == "linear_horizontal" else []))
        if field.n is None or field.n == n:
            out.append(field)
    out += [F.polynomial("x1^2"), F.polynomial("x1*y1*t - 0.5*t^2 + y1^3")]
    if n == 2:
        out.append(F.polynomial("x1*y2 + x2^2*t"))
    return out


def test_criterion_02_fd_oracle(capsys):
    t0 = time.perf_counter()
    rng = np.random.default_rng(2)
    worst, worst_name, count = 0.0, "", 0
    for n in (1, 2):
        P = rng.uniform(-1, 1, (1000, 2 * n + 1))
        P[:, : 2 * n] += 0.1 * np.sign(P[:, : 2 * n])  # keep |z| away from the radial axis
        for field in _catalog_fields(n):
            dev = fd_crosscheck(field, P)
            count += 1
            if dev > worst:
                worst, worst_name = dev, field.label
    dt = time.perf_counter() - t0
    ok = worst <= 1e-6 and dt < 5.0
    report_line(capsys, 2, ok, f"{count} fields, max deviation {worst:.2e} ({worst_name})", dt)
    assert ok


# -- 3 -----------------------------------------------------------------------

def _random_polynomial(rng, n, terms=6, degree=4):
    names = [f"{v}{i}" for i in range(1, n + 1) for v in "xy"] + ["t"]
    mons = []
    for _ in range(terms):
        powers = rng.multinomial(int(rng.integers(1, degree + 1)), [1 / len(names)] * len(names))
        mon = "*".join(f"{v}^{k}" for v, k in zip(names, powers) if k)
        mons.append(f"{rng.normal():.6f}*{mon}")
    return F.polynomial(" + ".join(mons))


def test_criterion_03_closed_forms(capsys):
    t0 = time.perf_counter()
    rng = np.random.default_rng(3)
    exact, split_worst = True, 0.0
    for n in (1, 2, 3):
        P = rng.uniform(-2, 2, (500, 2 * n + 1))
        lap = horizontal_ops(F.rho2_half(), P).lapH
        hess = horizontal_ops(F.two_t(), P).hessH
        exact &= bool(np.all(lap == 2 * n)) and bool(np.all(hess == -structural_matrix(n)))
        for _ in range(10):
            o = horizontal_ops(_random_polynomial(rng, n), P)
            sp = hessian_split(o.hessH, o.Tphi, tol=1e-12)
            lhs = np.sum(o.hessH ** 2, axis=(-2, -1))
            rhs = sp.gramSym + 0.5 * n * o.Tphi ** 2
            split_worst = max(split_worst,
                              float(np.max(np.abs(lhs - rhs) / np.maximum(1, np.abs(lhs)))))
    dt = time.perf_counter() - t0
    ok = exact and split_worst <= 1e-12
    report_line(capsys, 3, ok, f"exact={exact}, norm split residual {split_worst:.2e}", dt)
    assert ok


# -- 4 -----------------------------------------------------------------------

def battery_surfaces():
    return {
        "sphere H1": C.sphere_chart(0, 1, 1),
        "ellipsoid H1": C.ellipsoid_chart(1.0, 1.5, 0.7, 1),
        "cylinder H1": C.cylinder_patch(1.0, -1.0, 1.0),
        "sphere H2": C.sphere_chart(0, 1, 2),
    }


def test_criterion_04_pointwise_battery(capsys):
    t0 = time.perf_counter()
    worst, where, bad = 0.0, "", []
    for label, chart in battery_surfaces().items():
        n = 2 if "H2" in label else 1
        P = I.sample_surface_points(chart, 100, seed=4)
        fns = dict(RELL_FUNCTIONS)
        if n == 2:
            fns["linear_horizontal"] = F.linear_horizontal(V * 2)
            fns["x2*y1*t"] = F.polynomial("x2*y1*t + y2^2")
        for fname, phi in fns.items():
            for r in I.pointwise_battery(chart.surface, phi, P):
                if r.relResidual > worst:
                    worst, where = r.relResidual, f"{r.name} / {label} / {fname}"
                if r.status != "pass":
                    bad.append(where)
    dt = time.perf_counter() - t0
    ok = not bad and worst <= 1e-8 and dt < 10.0
    report_line(capsys, 4, ok, f"max residual {worst:.2e} at {where}", dt)
    assert ok


# -- 5 -----------------------------------------------------------------------

def test_criterion_05_volume_oracle(capsys):
    t0 = time.perf_counter()
    res = domain_integral(unit_ball(), lambda P: np.ones(P.shape[:-1]),
                          QuadratureSpec(levels=2))
    level1 = dict(res.refinementTrail)[1]
    rel = abs(level1 - 4 * math.pi / 3) / (4 * math.pi / 3)
    dt = time.perf_counter() - t0
    ok = rel <= 1e-6 and dt < 1.0
    report_line(capsys, 5, ok, f"level-1 volume {level1:.15f}, rel err {rel:.1e}", dt)
    assert ok


# -- 6 -----------------------------------------------------------------------

def test_criterion_06_coarea(capsys):
    t0 = time.perf_counter()
    psi = F.polynomial("1 + x1^2 + 0.5*y1*t")
    cases = {
        "cylinder": (C.cylinder_family(0.0, 1.0), 0.1),
        "ellipsoid": (C.ellipsoid_family(1.0, 1.0, 0.7), 0.1),
    }
    rels = {}
    for label, (fam, eps) in cases.items():
        res = coarea_slices(fam, eps, 8, psi, QuadratureSpec(base_order=16, levels=2))
        rels[label] = abs(res.lhs.value - res.rhs.value) / max(abs(res.lhs.value), 1.0)
    dt = time.perf_counter() - t0
    ok = max(rels.values()) <= 1e-4 and dt < 30.0
    report_line(capsys, 6, ok, ", ".join(f"{k} rel {v:.1e}" for k, v in rels.items()), dt)
    assert ok


# -- 7 -----------------------------------------------------------------------

def test_criterion_07_gd2_green(capsys):
    t0 = time.perf_counter()
    S = C.sphere_chart(0, 1, 1)
    reps = [I.gd2_report(S, I.horizontal_field(x, S.surface), SPEC)
            for x in ("nu_perp", "constant(1,-0.5)", "grad(x1*y1*t)")]
    reps += I.green_report(S, F.polynomial("x1*y1*t"), F.polynomial("x1^2 + t"), SPEC)
    dt = time.perf_counter() - t0
    worst = max(r.relResidual for r in reps)
    ok = all(r.status == "pass" for r in reps) and dt < 60.0
    report_line(capsys, 7, ok, f"{len(reps)} reports, max rel {worst:.1e}, "
                f"statuses {sorted({r.status for r in reps})}", dt)
    assert ok


# -- 8 -----------------------------------------------------------------------

@pytest.mark.xfail(strict=True, reason="boundary side without the -T phi phi_perp term "
                   "misses for phi = 2t and x1*y1*t")
def test_criterion_08_reilly(capsys):
    t0 = time.perf_counter()
    parts, ok = [], True
    for name in RELL_FUNCTIONS:
        r = rell(name)
        tol = 1e-2 if name in TRANSCENDENTAL else 1e-3
        ok &= r.relResidual <= tol
        parts.append(f"{name} {r.relResidual:.1e}")
    c1 = I.c1f_report(C.sphere_chart(0, 1, 1), V, SPEC)
    same = abs(c1.meta["reillyBoundary"] - rell("linear_horizontal").rhs_value)
    ok &= same <= 1e-10
    dt = time.perf_counter() - t0
    report_line(capsys, 8, ok, "; ".join(parts) + f"; c1f path diff {same:.1e}", dt)
    assert ok and dt < 300


def test_reilly_with_vertical_term_holds_for_catalog():
    for name, phi in RELL_FUNCTIONS.items():
        r = I.reilly_report(unit_ball(), None, phi, SPEC, vertical=True)
        assert r.relResidual <= (1e-2 if name in TRANSCENDENTAL else 1e-3), (name, r.relResidual)
        assert r.status == "pass", name


def test_reilly_c1f_share_boundary_path():
    c1 = I.c1f_report(C.sphere_chart(0, 1, 1), V, SPEC)
    assert abs(c1.meta["reillyBoundary"] - rell("linear_horizontal").rhs_value) <= 1e-10


# -- 9 -----------------------------------------------------------------------

@lru_cache(maxsize=None)
def recovery(tag: str, n: int = 1):
    spec = SPEC if n == 1 else QuadratureSpec(base_order=8, orders=(8, 8, 8, 8), levels=2)
    return I.volume_recovery(unit_ball(n), None, tag, spec)


@pytest.mark.xfail(strict=True, reason="stated c2f/c3f/c4f boundary formulas do not "
                   "reproduce the volume")
def test_criterion_09_volume_formulas(capsys):
    t0 = time.perf_counter()
    reps = [recovery("c2f"), recovery("c3f"), recovery("c4f", 2)]
    c2, c3 = reps[0].rhs, reps[1].rhs
    consistent = abs(c2.value - c3.value) <= c2.errorEstimate + c3.errorEstimate + 1e-3
    ok = all(r.relResidual <= 1e-3 for r in reps) and consistent
    dt = time.perf_counter() - t0
    report_line(capsys, 9, ok, "; ".join(f"{r.name}({r.inputs.get('n', '')}) rhs "
                                         f"{r.rhs_value:.6g} vs {r.lhs_value:.6g}" for r in reps), dt)
    assert ok


def test_derived_volume_formulas_recover_volume():
    c2, c3 = recovery("c2f-derived"), recovery("c3f-derived")
    for r in (c2, c3, recovery("c4f-derived", 2)):
        assert r.status == "pass" and r.relResidual <= 1e-3, (r.name, r.relResidual)
    assert abs(c2.rhs_value - c3.rhs_value) <= c2.rhs.errorEstimate + c3.rhs.errorEstimate + 1e-6


# -- 10 ----------------------------------------------------------------------

@pytest.mark.xfail(strict=True, reason="phi = 2t gives gap -4n Vol(D); the inequality "
                   "omits the same vertical boundary term as criterion 8")
def test_criterion_10_c0f(capsys):
    t0 = time.perf_counter()
    gaps = {name: c0f(name).meta["relGap"] for name in RELL_FUNCTIONS}
    ok = min(gaps.values()) >= -1e-6 and abs(gaps["rho2_half"]) <= 1e-6
    dt = time.perf_counter() - t0
    report_line(capsys, 10, ok, "; ".join(f"{k} {v:+.2e}" for k, v in gaps.items()), dt)
    assert ok


def test_c0f_equality_case_and_nonnegative_gaps():
    assert abs(c0f("rho2_half").meta["relGap"]) <= 1e-6
    for name in ("linear_horizontal", "x1^2", "exp_cos"):
        assert c0f(name).meta["relGap"] >= -1e-6, name


def test_c0f_two_t_gap_is_minus_4n_volume():
    assert c0f("two_t").meta["gap"] == pytest.approx(-4 * 4 * math.pi / 3, rel=1e-6)


# -- 11 ----------------------------------------------------------------------

FOL_SPEC = QuadratureSpec(base_order=24, orders=(8, 24, 24), levels=2)


@lru_cache(maxsize=None)
def foliation():
    fol = I.ellipsoid_foliation(1.0, 1.0, 0.8, 1, eps=0.01)
    return {r.name: r for r in I.foliation_report(fol, FOL_SPEC, slice_count=4)}


@lru_cache(maxsize=None)
def mio():
    return I.mio_report(C.ellipsoid_chart(1.0, 1.0, 0.8, 1), SPEC)


@pytest.mark.xfail(strict=True, reason="slab integral of the Reilly density of the "
                   "normalized defining function diverges at the polar tubes")
def test_criterion_11_mio_and_slab(capsys):
    t0 = time.perf_counter()
    reps = [mio(), foliation()["pfa2"], foliation()["foliation-curvature"]]
    alphas = []
    ok = True
    for r in reps:
        fits = [s.fit for s in (r.lhs, r.rhs) if hasattr(s, "fit") and s.fit is not None]
        alphas += [f.alpha for f in fits]
        ok &= r.relResidual <= 1e-2 and all(f.converged and f.alpha > 0 for f in fits)
    dt = time.perf_counter() - t0
    report_line(capsys, 11, ok, "; ".join(f"{r.name} {r.status} rel {r.relResidual:.1e}"
                                          for r in reps)
                + f"; alphas {[round(a, 2) for a in alphas]}", dt)
    assert ok and dt < 600


def test_mio_on_ellipsoid():
    r = mio()
    assert r.status == "pass" and r.relResidual <= 1e-2
    assert r.lhs.fit.converged and r.lhs.fit.alpha > 0


def test_sliced_curvature_balance_on_thin_slab():
    r = foliation()["foliation-curvature"]
    assert r.relResidual <= 1e-2
    assert r.rhs.fit.converged and r.rhs.fit.alpha > 0


def test_normalized_defining_function_norm_identity():
    r = foliation()["foliation-jnorm"]
    assert r.status == "pass"
    assert r.meta["eikonalDeviation"]["leaf0"] <= 1e-10


# -- 12 ----------------------------------------------------------------------

SUITE_CONFIG = """\
n: 1
identities: [pointwise, reilly, reilly-vertical, gd2, green, mio, c0f, c1f-derived,
             c2f-derived, c3f-derived]
surface: sphere(0,1)
domain: ball_radial(0,1)
testFunction: [rho2_half, "x1*y1*t"]
psi: "x1^2"
vectorField: nu_perp
V: [1.0, -0.5]
quadrature: {baseOrder: 16, levels: 2}
seed: 11
workers: 4
"""


def test_criterion_12_determinism(capsys, tmp_path):
    t0 = time.perf_counter()
    cfg = tmp_path / "suite.yaml"
    cfg.write_text(SUITE_CONFIG)
    blobs = []
    for k in range(2):
        out = tmp_path / f"run{k}.json"
        subprocess.run([sys.executable, "-m", "hreilly.cli", "verify", "--config", str(cfg),
                        "--out", str(out)], check=False, capture_output=True)
        blobs.append(out.read_bytes())
    dt = time.perf_counter() - t0
    ok = blobs[0] == blobs[1] and len(blobs[0]) > 0
    report_line(capsys, 12, ok, f"{len(blobs[0])} bytes, identical={blobs[0] == blobs[1]}", dt)
    assert ok
