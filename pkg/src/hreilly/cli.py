"""Command-line front end: ``hreilly verify`` and ``hreilly list-catalog``.

Exit codes: 0 all reports pass, 1 any report fails (or an identity stage
raised), 2 some report is inconclusive and none fails, 3 configuration error.
"""

from __future__ import annotations

import argparse
import logging
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

import yaml

from . import charts as C
from . import fields as F
from . import identities as I
from .emit import FORMATS, emit_report
from .quadrature import QuadratureSpec

log = logging.getLogger("hreilly")

EXIT_PASS, EXIT_FAIL, EXIT_INCONCLUSIVE, EXIT_CONFIG = 0, 1, 2, 3

TAGS = ("pointwise", "reilly", "reilly-vertical", "gd2", "green", "mio",
        "c0f", "c1f", "c1f-derived", "c2f", "c2f-derived", "c3f", "c3f-derived",
        "c4f", "c4f-derived", "foliation")

HORIZONTAL_FIELDS = ("nu_perp", "nu", "zero", "constant(...)", "grad(<field>)")

DEFAULT_TEST_FUNCTIONS = ("rho2_half", "two_t", "linear_horizontal(1,0)", "x1^2", "x1*y1*t",
                          "exp_cos")


class ConfigError(ValueError):
    def __init__(self, message: str, field: str | None = None, line: int | None = None):
        where = ""
        if field:
            where = f"field '{field}'"
        if line is not None:
            where += f" (line {line})"
        super().__init__(f"{where}: {message}" if where else message)
        self.field = field
        self.line = line


@dataclass
class RunConfig:
    n: int = 1
    identities: list = field(default_factory=list)
    surface: str | None = None
    domain: str | None = None
    testFunction: Any = "rho2_half"
    quadrature: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=dict)
    outputPath: str | None = None
    format: str = "json"
    seed: int = 0
    points: int = 100
    vectorField: str = "nu_perp"
    V: list | None = None
    psi: str = "rho2_half"
    foliation: dict = field(default_factory=dict)
    workers: int = 1
    lines: dict = field(default_factory=dict, repr=False)

    def line(self, key: str) -> int | None:
        return self.lines.get(key)


CONFIG_KEYS = {k for k in RunConfig.__dataclass_fields__ if k != "lines"}
QUAD_KEYS = {"rule", "baseOrder", "orders", "samples", "levels", "capRadii", "workers", "chunk"}
FOLIATION_KEYS = {"ellipsoid", "eps", "slices", "orders"}


# -- config ------------------------------------------------------------------

def _key_lines(text: str) -> dict:
    try:
        node = yaml.compose(text)
    except yaml.YAMLError:
        return {}
    lines = {}
    if isinstance(node, yaml.MappingNode):
        for k, v in node.value:
            lines[str(k.value)] = k.start_mark.line + 1
            if isinstance(v, yaml.MappingNode):
                for kk, _ in v.value:
                    lines[f"{k.value}.{kk.value}"] = kk.start_mark.line + 1
    return lines


def load_config(path: str | Path | None) -> RunConfig:
    if path is None:
        return RunConfig()
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}", "config") from None
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        line = mark.line + 1 if mark is not None else None
        raise ConfigError(f"parse error: {getattr(exc, 'problem', exc)}", "config", line) from None
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError("top level must be a mapping", "config", 1)
    lines = _key_lines(text)
    unknown = sorted(set(data) - CONFIG_KEYS)
    if unknown:
        raise ConfigError(f"unknown key; expected one of {sorted(CONFIG_KEYS)}", unknown[0],
                          lines.get(unknown[0]))
    cfg = RunConfig(lines=lines)
    for k, v in data.items():
        setattr(cfg, k, v)
    return cfg


def validate(cfg: RunConfig) -> RunConfig:
    def err(msg, key):
        raise ConfigError(msg, key, cfg.line(key.split("[")[0]))

    if not isinstance(cfg.n, int) or isinstance(cfg.n, bool) or cfg.n < 1:
        err(f"must be an integer >= 1, got {cfg.n!r}", "n")
    if cfg.identities is None:
        cfg.identities = []
    if isinstance(cfg.identities, str):
        cfg.identities = [cfg.identities]
    if not isinstance(cfg.identities, list):
        err("must be a list of identity tags", "identities")
    for k, tag in enumerate(cfg.identities):
        if tag not in TAGS:
            err(f"unknown identity tag {tag!r}; available: {', '.join(TAGS)}", f"identities[{k}]")
    if cfg.format not in FORMATS:
        err(f"must be one of {FORMATS}", "format")
    if not isinstance(cfg.seed, int) or isinstance(cfg.seed, bool):
        err("must be an integer", "seed")
    if not isinstance(cfg.quadrature, dict):
        err("must be a mapping", "quadrature")
    bad = sorted(set(cfg.quadrature) - QUAD_KEYS)
    if bad:
        raise ConfigError(f"unknown key; expected one of {sorted(QUAD_KEYS)}", f"quadrature.{bad[0]}",
                          cfg.line(f"quadrature.{bad[0]}"))
    if not isinstance(cfg.tolerances, dict):
        err("must be a mapping of identity tag to tolerance", "tolerances")
    for tag, tol in cfg.tolerances.items():
        if tag not in TAGS and tag not in I.TOLERANCES:
            raise ConfigError(f"unknown identity tag {tag!r}", f"tolerances.{tag}",
                              cfg.line(f"tolerances.{tag}"))
        if not isinstance(tol, (int, float)) or tol <= 0:
            raise ConfigError("tolerance must be a positive number", f"tolerances.{tag}",
                              cfg.line(f"tolerances.{tag}"))
    if not isinstance(cfg.foliation, dict) or set(cfg.foliation) - FOLIATION_KEYS:
        err(f"must be a mapping with keys from {sorted(FOLIATION_KEYS)}", "foliation")
    if not isinstance(cfg.points, int) or cfg.points < 1:
        err("must be a positive integer", "points")
    if not isinstance(cfg.workers, int) or cfg.workers < 1:
        err("must be a positive integer", "workers")
    return cfg


def quadrature_spec(cfg: RunConfig) -> QuadratureSpec:
    q = dict(cfg.quadrature)
    kw: dict = {"seed": cfg.seed}
    rename = {"rule": "rule", "baseOrder": "base_order", "samples": "samples",
              "levels": "levels", "workers": "workers", "chunk": "chunk"}
    for src, dst in rename.items():
        if src in q:
            kw[dst] = q[src]
    if "orders" in q:
        kw["orders"] = tuple(int(o) for o in q["orders"])
    caps = q.get("capRadii") or {}
    if not isinstance(caps, dict) or set(caps) - {"delta0", "ratio", "count"}:
        raise ConfigError("expected a mapping with delta0, ratio, count", "quadrature.capRadii",
                          cfg.line("quadrature.capRadii"))
    for src, dst in (("delta0", "cap_delta0"), ("ratio", "cap_ratio"), ("count", "cap_count")):
        if src in caps:
            kw[dst] = caps[src]
    try:
        return QuadratureSpec(**kw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc), "quadrature", cfg.line("quadrature")) from None


# -- identity dispatch -------------------------------------------------------

def _resolve(kind: str, fn: Callable, spec, cfg: RunConfig, key: str):
    if spec is None:
        raise ConfigError(f"{kind} is required by the selected identities", key, cfg.line(key))
    try:
        return fn(spec)
    except F.CatalogError as exc:
        raise ConfigError(str(exc), key, cfg.line(key)) from None
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc), key, cfg.line(key)) from None


def _test_functions(cfg: RunConfig) -> list:
    specs = cfg.testFunction if isinstance(cfg.testFunction, list) else [cfg.testFunction]
    return [_resolve("test function", F.resolve_field, s, cfg, "testFunction") for s in specs]


def _domain(cfg):
    return _resolve("domain", lambda s: C.resolve_domain_chart(s, cfg.n), cfg.domain, cfg, "domain")


def _surface(cfg, required=True):
    if cfg.surface is None:
        if cfg.domain is not None:
            return _domain(cfg).boundary
        if not required:
            return None
    return _resolve("surface", lambda s: C.resolve_surface_chart(s, cfg.n), cfg.surface, cfg,
                    "surface")


def _tol(cfg, tag, default=None):
    return cfg.tolerances.get(tag, default)


def plan(cfg: RunConfig) -> list[tuple[str, Callable[[], list]]]:
    """Resolve catalog references and return one deferred job per requested tag."""
    spec = quadrature_spec(cfg)
    jobs: list[tuple[str, Callable[[], list]]] = []
    for tag in cfg.identities:
        tol = _tol(cfg, tag)
        if tag == "pointwise":
            S = _surface(cfg)
            phis = _test_functions(cfg)
            P = I.sample_surface_points(S, cfg.points, cfg.seed)
            jobs.append((tag, lambda S=S, phis=phis, P=P, tol=tol: [
                r for phi in phis for r in I.pointwise_battery(
                    S.surface, phi, P, tol if tol is not None else I.TOLERANCES["pointwise"])]))
        elif tag in ("reilly", "reilly-vertical", "c0f"):
            D, S, phis = _domain(cfg), _surface(cfg), _test_functions(cfg)
            if tag == "c0f":
                jobs.append((tag, lambda D=D, S=S, phis=phis, tol=tol: [
                    I.c0f_report(D, S, phi, spec, tol) for phi in phis]))
            else:
                v = tag == "reilly-vertical"
                jobs.append((tag, lambda D=D, S=S, phis=phis, tol=tol, v=v: [
                    I.reilly_report(D, S, phi, spec, tol, vertical=v) for phi in phis]))
        elif tag == "gd2":
            S = _surface(cfg)
            X = _resolve("vector field", lambda s: I.horizontal_field(s, S.surface, cfg.n),
                         cfg.vectorField, cfg, "vectorField")
            jobs.append((tag, lambda S=S, X=X, tol=tol: [I.gd2_report(S, X, spec, tol)]))
        elif tag == "green":
            S, phis = _surface(cfg), _test_functions(cfg)
            psi = _resolve("psi", F.resolve_field, cfg.psi, cfg, "psi")
            jobs.append((tag, lambda S=S, phis=phis, psi=psi, tol=tol: [
                r for phi in phis for r in I.green_report(S, phi, psi, spec, tol)]))
        elif tag == "mio":
            S = _surface(cfg)
            if not S.closed:
                raise ConfigError(f"mio needs a closed surface, {S.name} is not closed",
                                  "surface", cfg.line("surface"))
            jobs.append((tag, lambda S=S, tol=tol: [I.mio_report(S, spec, tol)]))
        elif tag.startswith("c1f"):
            S = _surface(cfg)
            V = cfg.V if cfg.V is not None else [1.0] + [0.0] * (2 * cfg.n - 1)
            if len(V) != 2 * cfg.n:
                raise ConfigError(f"needs {2 * cfg.n} components", "V", cfg.line("V"))
            d = tag.endswith("derived")
            jobs.append((tag, lambda S=S, V=V, d=d, tol=tol: [
                I.c1f_report(S, V, spec, tol, derived=d)]))
        elif tag[:3] in ("c2f", "c3f", "c4f"):
            if tag.startswith("c4f") and cfg.n < 2:
                raise ConfigError("c4f needs n > 1", "n", cfg.line("n"))
            D, S = _domain(cfg), _surface(cfg)
            jobs.append((tag, lambda D=D, S=S, tag=tag, tol=tol: [
                I.volume_recovery(D, S, tag, spec, tol)]))
        elif tag == "foliation":
            fc = cfg.foliation
            abc = fc.get("ellipsoid", [1.0, 1.0, 1.0])
            fol = I.ellipsoid_foliation(*abc, n=cfg.n, eps=float(fc.get("eps", 0.01)))
            fspec = spec
            if "orders" in fc:
                from dataclasses import replace
                fspec = replace(spec, orders=tuple(int(o) for o in fc["orders"]))
            slices = int(fc.get("slices", 6))
            jobs.append((tag, lambda fol=fol, fspec=fspec, slices=slices, tol=tol: I.foliation_report(
                fol, fspec, slices, tol, cfg.points, cfg.seed)))
    return jobs


@dataclass
class RunOutcome:
    reports: list
    errors: list
    code: int


def run(cfg: RunConfig) -> RunOutcome:
    """Execute all requested identities; jobs run in parallel, results keep request order."""
    jobs = plan(validate(cfg))
    errors: list[str] = []

    def execute(job):
        tag, fn = job
        start = time.perf_counter()
        try:
            out = fn()
            log.info("%s: %s in %.2fs", tag, ", ".join(f"{r.name}={r.status}" for r in out),
                     time.perf_counter() - start)
            return out
        except Exception as exc:  # reported as a failed stage, never swallowed silently
            errors.append(f"identity '{tag}' failed: {type(exc).__name__}: {exc}")
            return []

    if cfg.workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(cfg.workers) as ex:
            results = list(ex.map(execute, jobs))
    else:
        results = [execute(j) for j in jobs]
    reports = [r for rs in results for r in rs]
    statuses = {r.status for r in reports}
    if errors or "fail" in statuses:
        code = EXIT_FAIL
    elif "inconclusive" in statuses:
        code = EXIT_INCONCLUSIVE
    else:
        code = EXIT_PASS
    return RunOutcome(reports, sorted(errors), code)


# -- argument handling -------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hreilly", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    v = sub.add_parser("verify", help="run identity reports")
    v.add_argument("--config", help="YAML run configuration")
    v.add_argument("--identity", action="append", dest="identities", metavar="TAG",
                   help="identity tag (repeatable); replaces the config list")
    v.add_argument("--n", type=int)
    v.add_argument("--out", dest="outputPath")
    v.add_argument("--format", choices=FORMATS)
    v.add_argument("--seed", type=int)
    v.add_argument("--level", type=int, help="number of refinement levels")
    v.add_argument("-v", "--verbose", action="store_true")
    sub.add_parser("list-catalog", help="print catalog names")
    return p


def list_catalog() -> str:
    sections = [
        ("fields", sorted(F.FIELD_CATALOG)),
        ("surface charts", sorted(C.SURFACE_CHARTS)),
        ("domain charts", sorted(k for k in C.DOMAIN_CHARTS)),
        ("slab families", ["cylinder(t0,t1)", "ellipsoid(a,b,c)"]),
        ("horizontal fields", list(HORIZONTAL_FIELDS)),
        ("identities", list(TAGS)),
    ]
    return "".join(f"{title}:\n" + "".join(f"  {name}\n" for name in names)
                   for title, names in sections)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "list-catalog":
        sys.stdout.write(list_catalog())
        return EXIT_PASS
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config)
        for key in ("identities", "n", "outputPath", "format", "seed"):
            val = getattr(args, key)
            if val is not None:
                setattr(cfg, key, val)
        if args.level is not None:
            cfg.quadrature = {**(cfg.quadrature or {}), "levels": args.level}
        outcome = run(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    for msg in outcome.errors:
        print(msg, file=sys.stderr)
    try:
        emit_report(outcome.reports, cfg.format, cfg.outputPath)
    except OSError as exc:
        print(f"output error: field 'outputPath': {exc}", file=sys.stderr)
        return EXIT_FAIL
    return outcome.code


if __name__ == "__main__":
    sys.exit(main())
