"""Configuration-driven command line front end.

One TOML (or JSON) config file describes a space or graph, optional
bundle/potential data and run parameters; subcommands wire the library
modules into reproducible experiments.  Identical (config, seed) runs
produce byte-identical artifacts; every output file carries the config
hash, and a manifest records hash, seed and versions.

Exit codes: 0 on success, 1 on usage/config errors, 2 when a checked
contract is violated.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from dataclasses import dataclass

import numpy as np

from . import __version__, domination, geometry, kato, kernels, lattice, semigroup, stochastics

SUBCOMMANDS = ("kernel", "kato", "fk", "spectrum", "dominate", "lattice")

_TOP_KEYS = {"space", "graph", "lattice", "bundle", "potential", "run",
             "output", "control_pair"}
_SECTION_KEYS = {
    "space": {"kind", "dim", "bounds", "length"},
    "graph": {"preset", "n", "mu", "w", "vertices", "edges", "dirichlet"},
    "lattice": {"spacing", "rect", "dirichlet"},
    "bundle": {"rank", "field", "angles", "uniform_angle", "unitaries"},
    "potential": {"preset", "c", "center", "values", "scale", "cutoff", "exponent"},
    "run": {"seed", "t", "t_grid", "r_grid", "n_paths", "probes", "x0", "f",
            "tolerance", "trials", "qprime", "w2_sup"},
    "output": {"dir", "format"},
    "control_pair": {"variant", "C", "T", "b", "eps1", "eps2", "K",
                     "delta1", "delta2", "qprimes", "A", "calibrate"},
}


class ConfigError(ValueError):
    """Carries the full list of validation errors."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


@dataclass(frozen=True)
class ExperimentConfig:
    raw: dict
    config_hash: str

    def section(self, name, default=None):
        return self.raw.get(name, default)

    @property
    def seed(self):
        return int(self.raw["run"]["seed"])


def _check_keys(errors, section, table, allowed):
    for key in table:
        if key not in allowed:
            errors.append(f"unknown key {section}.{key}")


def parse_config(path, overrides=None) -> ExperimentConfig:
    """Load and fully validate a config file, reporting all errors at once."""
    text = open(path, "rb").read()
    if str(path).endswith(".json"):
        raw = json.loads(text.decode())
    else:
        try:
            import tomllib
        except ModuleNotFoundError:
            import tomli as tomllib
        raw = tomllib.loads(text.decode())
    if overrides:
        raw.setdefault("run", {})
        raw["run"].update({k: v for k, v in overrides.get("run", {}).items() if v is not None})
        raw.setdefault("output", {})
        raw["output"].update({k: v for k, v in overrides.get("output", {}).items()
                              if v is not None})

    errors = []
    for key in raw:
        if key not in _TOP_KEYS:
            errors.append(f"unknown section {key}")
    for name, allowed in _SECTION_KEYS.items():
        if name in raw:
            if not isinstance(raw[name], dict):
                errors.append(f"section {name} must be a table")
            else:
                _check_keys(errors, name, raw[name], allowed)

    if ("space" in raw) == ("graph" in raw):
        errors.append("exactly one source: give either [space] or [graph]")
    run = raw.get("run", {})
    if "seed" not in run:
        errors.append("run.seed is required (no wall-clock default)")
    if "lattice" in raw:
        spacing = raw["lattice"].get("spacing")
        if spacing is None or not spacing > 0:
            errors.append("lattice.spacing must be positive")
    if "space" in raw and isinstance(raw["space"], dict):
        kind = raw["space"].get("kind")
        if kind not in ("euclidean", "hyperbolic", "box", "interval"):
            errors.append(f"space.kind invalid: {kind!r}")
    out = raw.get("output", {})
    if out.get("format", "csv") not in ("csv", "json"):
        errors.append(f"output.format must be csv or json, got {out.get('format')!r}")
    if errors:
        raise ConfigError(errors)

    canon = json.dumps(raw, sort_keys=True, separators=(",", ":"), default=str)
    digest = hashlib.sha256(canon.encode()).hexdigest()
    return ExperimentConfig(raw, digest)


# ---------------------------------------------------------------------------
# object builders


def build_space(cfg):
    sp = cfg.section("space")
    kind = sp["kind"]
    if kind == "euclidean":
        return geometry.ModelSpace.euclidean(int(sp["dim"]))
    if kind == "hyperbolic":
        return geometry.ModelSpace.hyperbolic(int(sp["dim"]))
    if kind == "interval":
        if "length" in sp:
            return geometry.ModelSpace.interval(float(sp["length"]))
        lo, hi = sp["bounds"]
        return geometry.ModelSpace.interval(float(hi[0]) - float(lo[0]))
    lo, hi = sp["bounds"]
    return geometry.ModelSpace.box(lo, hi)


def build_graph(cfg):
    gr = cfg.section("graph")
    preset = gr.get("preset", "custom")
    if preset in ("path", "cycle", "complete"):
        n = int(gr["n"])
        mu = gr.get("mu", 1.0)
        w = gr.get("w", 1.0)
        if preset == "path":
            edges = {(i, i + 1): w for i in range(n - 1)}
        elif preset == "cycle":
            edges = {(i, (i + 1) % n): w for i in range(n)}
        else:
            edges = {(a, b): w for a in range(n) for b in range(a + 1, n)}
        mu_vec = np.full(n, mu) if np.isscalar(mu) else np.asarray(mu, dtype=float)
        graph = lattice.WeightedGraph(n, mu_vec, edges)
    else:
        verts = sorted(gr["vertices"], key=lambda v: v["id"])
        mu_vec = np.array([v["mu"] for v in verts], dtype=float)
        coords = None
        if verts and "coords" in verts[0]:
            coords = np.array([v["coords"] for v in verts], dtype=float)
        edges = {(int(e["a"]), int(e["b"])): float(e["w"]) for e in gr["edges"]}
        graph = lattice.WeightedGraph(len(verts), mu_vec, edges, coords=coords)
    mask = gr.get("dirichlet")
    return graph, (None if mask is None else list(map(int, mask)))


def build_bundle(cfg, graph):
    bd = cfg.section("bundle")
    if bd is None:
        return lattice.BundleData(graph, 1)
    field = bd.get("field", "trivial")
    rank = int(bd.get("rank", 1))
    if field == "trivial":
        return lattice.BundleData(graph, rank)
    if field == "u1_angles":
        angles = {(int(a), int(b)): float(th) for a, b, th in bd["angles"]}
        return lattice.attach_gauge(graph, 1, "u1_from_angles", angles=angles)
    if field == "u1_uniform":
        th = float(bd["uniform_angle"])
        angles = {(a, b): th for (a, b) in graph.edges}
        return lattice.attach_gauge(graph, 1, "u1_from_angles", angles=angles)
    raise ConfigError([f"bundle.field invalid: {field!r}"])


def build_lattice_potential(cfg, graph):
    pt = cfg.section("potential")
    if pt is None:
        return None
    preset = pt.get("preset", "table")
    scale = float(pt.get("scale", 1.0))
    if preset == "constant":
        return lattice.PotentialField.scalar(np.full(graph.n, scale * float(pt["c"])))
    if preset == "table":
        vals = scale * np.asarray(pt["values"], dtype=float)
        if vals.ndim == 1:
            return lattice.PotentialField.scalar(vals)
        return lattice.PotentialField(vals)
    raise ConfigError([f"potential.preset {preset!r} not usable on a graph"])


def build_space_potential(cfg, space):
    pt = cfg.section("potential")
    if pt is None:
        return None
    preset = pt.get("preset")
    scale = float(pt.get("scale", 1.0))
    center = space.point(pt["center"]) if "center" in pt else space.origin()
    if preset == "constant":
        return kato.RadialPotential.const(space, scale * float(pt["c"]))
    if preset == "coulomb":
        cut = pt.get("cutoff")
        return kato.RadialPotential(center, lambda r: scale / r, singular_exponent=1.0,
                                    cutoff=None if cut is None else float(cut),
                                    name="coulomb")
    if preset == "scaled_indicator":
        cut = float(pt["cutoff"])
        return kato.RadialPotential(center, lambda r: scale, cutoff=cut,
                                    name=f"indicator(r<{cut})")
    raise ConfigError([f"potential.preset {preset!r} not usable on a space"])


# ---------------------------------------------------------------------------
# output plumbing


def _fmt(x):
    return format(float(x), ".17g")


def _write_csv(path, header, rows, config_hash):
    lines = [f"# config_hash={config_hash}", ",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    path.write_text("\n".join(lines) + "\n")


def _write_json(path, payload, config_hash):
    payload = dict(payload)
    payload["config_hash"] = config_hash
    path.write_text(json.dumps(payload, sort_keys=True, indent=2, default=_json_default) + "\n")


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    raise TypeError(f"not serializable: {type(obj)}")


def _thread_setting():
    env = os.environ.get("SCHROKATO_THREADS")
    if env is None:
        return os.cpu_count() or 1
    n = int(env)
    if n < 1:
        raise ConfigError(["SCHROKATO_THREADS must be a positive integer"])
    return n


def _manifest(outdir, command, cfg, outputs):
    import scipy
    payload = {
        "command": command,
        "config_hash": cfg.config_hash,
        "seed": cfg.seed,
        "threads": _thread_setting(),
        "versions": {
            "schrokato": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "python": ".".join(map(str, sys.version_info[:3])),
        },
        "outputs": sorted(outputs),
    }
    (outdir / "manifest.json").write_text(
        json.dumps(payload, sort_keys=True, indent=2) + "\n")


# ---------------------------------------------------------------------------
# subcommands


def _cmd_kernel(cfg, outdir, fmt):
    space = build_space(cfg)
    k = kernels.make_kernel(space)
    run = cfg.section("run")
    x0 = space.point(run["x0"]) if "x0" in run else space.origin()
    t_grid = run.get("t_grid", [run.get("t", 1.0)])
    rows = []
    for t in t_grid:
        p = kernels.eval_kernel(k, float(t), x0, x0)
        mass = kernels.kernel_mass(k, float(t), x0)
        rows.append([t, *x0.coords, *x0.coords, p, mass])
    m = space.dim
    header = (["t"] + [f"x{i+1}" for i in range(m)] + [f"y{i+1}" for i in range(m)]
              + ["p", "mass"])
    outputs = []
    if fmt == "csv":
        _write_csv(outdir / "kernel.csv", header, rows, cfg.config_hash)
        outputs.append("kernel.csv")
    else:
        payload = {"rows": [dict(zip(header, map(float, r))) for r in rows]}
        _write_json(outdir / "kernel.json", payload, cfg.config_hash)
        outputs.append("kernel.json")

    cp = cfg.section("control_pair")
    if cp is not None:
        params = {k2: v for k2, v in cp.items()
                  if k2 in ("C", "T", "b", "eps1", "eps2", "K", "delta1", "delta2")}
        probes = [x0]
        times = [float(t) for t in t_grid]
        calibrated = None
        if cp.get("calibrate"):
            calibrated = kernels.calibrate_constant(k, cp["variant"], probes, times,
                                                    **{a: b for a, b in params.items() if a != "C"})
            params["C"] = calibrated
        pair = kernels.make_control_pair(space, cp["variant"], **params)
        res = kernels.check_control_pair(k, pair, probes, times,
                                         qprimes=cp.get("qprimes", ()), A=cp.get("A", 1.0))
        payload = {"grid": {"times": times, "probes": [list(x0.coords)]},
                   "max_violation": res["max_violation"],
                   "calibrated_C": calibrated,
                   "integrability": {str(q): v for q, v in res["integrability"].items()}}
        _write_json(outdir / "control_pair.json", payload, cfg.config_hash)
        outputs.append("control_pair.json")
    return 0, outputs


def _cmd_kato(cfg, outdir, fmt):
    run = cfg.section("run")
    if cfg.section("space") is not None:
        space = build_space(cfg)
        k = kernels.make_kernel(space)
        w = build_space_potential(cfg, space)
        probes = [space.point(p) for p in run.get("probes", [list(space.origin().coords)])]
    else:
        graph, mask = build_graph(cfg)
        op = lattice.assemble_operator(graph, dirichlet_mask=mask)
        k = kernels.make_matrix_kernel(op)
        w = np.asarray(cfg.section("potential")["values"], dtype=float)
        probes = [int(p) for p in run.get("probes", range(graph.n))]
    t_grid = run.get("t_grid", list(np.geomspace(0.001, 1.0, 7)))
    report = kato.classify_potential(k, w, probes, t_grid)
    _write_json(outdir / "kato.json", report.to_dict(), cfg.config_hash)
    return 0, ["kato.json"]


def _cmd_fk(cfg, outdir, fmt):
    run = cfg.section("run")
    graph, mask = build_graph(cfg)
    bundle = build_bundle(cfg, graph)
    pot = build_lattice_potential(cfg, graph)
    t = float(run.get("t", 1.0))
    x0 = int(run.get("x0", 0))
    n_paths = int(run.get("n_paths", 10000))
    fvec = run.get("f")
    if bundle.trivial and bundle.rank == 1:
        w = (pot.values[:, 0, 0].real if pot is not None else np.zeros(graph.n))
        f = (np.asarray(fvec, dtype=float) if fvec is not None else np.ones(graph.n))
        est = stochastics.fk_scalar(graph, w, f, t, x0, n_paths, cfg.seed, mask=mask)
        value = est.value
        stderr = est.stderr
    else:
        f = (np.asarray(fvec, dtype=float).astype(complex) if fvec is not None
             else np.ones(graph.n * bundle.rank, dtype=complex))
        est = stochastics.fk_covariant(graph, bundle, pot, f, t, x0, n_paths,
                                       cfg.seed, mask=mask)
        value = [[z.real, z.imag] for z in np.atleast_1d(est.value)]
        stderr = list(map(float, np.atleast_1d(est.stderr)))
    payload = {"value": value, "stderr": stderr, "n_paths": n_paths, "seed": cfg.seed}
    _write_json(outdir / "fk.json", payload, cfg.config_hash)
    return 0, ["fk.json"]


def _cmd_spectrum(cfg, outdir, fmt):
    graph, mask = build_graph(cfg)
    bundle = build_bundle(cfg, graph)
    pot = build_lattice_potential(cfg, graph)
    op = lattice.assemble_operator(graph, bundle, pot, dirichlet_mask=mask)
    lam, vec = semigroup.spectrum_bottom(op)
    rayleigh = op.form(vec) / float(np.real(op.inner(vec, vec)))
    payload = {"bottom": lam, "rayleigh_quotient": rayleigh,
               "certificate": [[z.real, z.imag] for z in np.asarray(vec, dtype=complex)]}
    _write_json(outdir / "spectrum.json", payload, cfg.config_hash)
    return 0, ["spectrum.json"]


def _cmd_dominate(cfg, outdir, fmt):
    run = cfg.section("run")
    graph, mask = build_graph(cfg)
    bundle = build_bundle(cfg, graph)
    pot = build_lattice_potential(cfg, graph)
    tol = float(run.get("tolerance", 1e-10))
    trials = int(run.get("trials", 100))
    t = float(run.get("t", 1.0))
    rng = np.random.default_rng(cfg.seed)
    opV = lattice.assemble_operator(graph, bundle, pot, dirichlet_mask=mask)
    wfloor = (pot.min_eigenvalues().real if pot is not None else np.zeros(graph.n))
    opw = lattice.assemble_operator(
        graph, potential=lattice.PotentialField.scalar(wfloor), dirichlet_mask=mask)
    instance = hashlib.sha256(
        json.dumps(lattice.to_json_doc(graph, bundle, pot), sort_keys=True,
                   default=_json_default).encode()).hexdigest()[:16]
    checks = [
        ("kato_simon", domination.check_kato_simon(opV, opw, t, trials, rng)),
        ("diamagnetic_bottom", -domination.check_diamagnetic_bottom(opV, opw)),
    ]
    hsu = domination.check_hsu_direction(opV, opw, [t / 4, t, 4 * t], max(trials // 4, 5), rng)
    checks.append(("hsu_pointwise", hsu["pointwise"]))
    checks.append(("hsu_bilinear", hsu["bilinear"]))
    records = []
    worst_fail = False
    for name, violation in checks:
        ok = violation <= tol
        worst_fail = worst_fail or not ok
        records.append({"check": name, "instance_hash": instance,
                        "max_violation": float(violation), "tolerance": tol, "pass": ok})
    _write_json(outdir / "dominate.json", {"verdicts": records}, cfg.config_hash)
    return (2 if worst_fail else 0), ["dominate.json"]


def _cmd_lattice(cfg, outdir, fmt):
    space = build_space(cfg)
    lt = cfg.section("lattice")
    graph = lattice.build_grid_graph(space, float(lt["spacing"]), rect=lt.get("rect"))
    mask = graph.interior if lt.get("dirichlet") else None
    bundle = build_bundle(cfg, graph)
    pot = build_lattice_potential(cfg, graph)
    op = lattice.assemble_operator(graph, bundle, pot,
                                   dirichlet_mask=None if mask is None else list(mask))
    doc = lattice.to_json_doc(graph, bundle, pot)
    _write_json(outdir / "graph.json", doc, cfg.config_hash)
    lattice.export_matrix_market(op, outdir / "operator.mtx",
                                 comment=f"config_hash={cfg.config_hash}")
    return 0, ["graph.json", "operator.mtx"]


_COMMANDS = {
    "kernel": _cmd_kernel,
    "kato": _cmd_kato,
    "fk": _cmd_fk,
    "spectrum": _cmd_spectrum,
    "dominate": _cmd_dominate,
    "lattice": _cmd_lattice,
}


def run_command(command, cfg: ExperimentConfig, outdir=None, fmt=None) -> int:
    """Run one subcommand against a validated config; returns the exit status."""
    from pathlib import Path
    if command not in _COMMANDS:
        raise ConfigError([f"unknown command {command!r}"])
    out = cfg.section("output", {}) or {}
    outdir = Path(outdir or out.get("dir", "out"))
    fmt = fmt or out.get("format", "csv")
    outdir.mkdir(parents=True, exist_ok=True)
    status, outputs = _COMMANDS[command](cfg, outdir, fmt)
    _manifest(outdir, command, cfg, outputs)
    return status


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="schrokato",
        description="heat kernels, Kato functionals, Feynman-Kac sampling and "
                    "semigroup domination checks, driven by one config file")
    parser.add_argument("command", choices=SUBCOMMANDS)
    parser.add_argument("--config", required=True, help="TOML or JSON experiment file")
    parser.add_argument("--seed", type=int, default=None, help="override run.seed")
    parser.add_argument("--out", default=None, help="output directory")
    parser.add_argument("--format", choices=("csv", "json"), default=None)
    args = parser.parse_args(argv)
    try:
        cfg = parse_config(args.config, overrides={"run": {"seed": args.seed}})
        return run_command(args.command, cfg, outdir=args.out, fmt=args.format)
    except ConfigError as exc:
        for err in exc.errors:
            print(f"config error: {err}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
