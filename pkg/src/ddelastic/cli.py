"""Command-line front end.

Subcommands: ``generate``, ``solve``, ``converge``, ``rope``, ``oracle``.
Exit codes: 0 success, 2 configuration error, 3 solver failure, 4 oracle
budget exceeded.  File layouts are described in docs/formats.md.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from importlib import resources
from pathlib import Path

from . import dataset as dsm
from .assembly import SolverConfig
from .experiments import (
    DEFAULT_RANGE_FACTOR,
    benchmark_dataset,
    compare_with_oracle,
    convergence_grid,
    load_steps,
    run_rope,
)
from .oracle import BudgetExceeded, OracleError
from .records import (
    read_json,
    run_record_to_dict,
    write_dataset_csv,
    write_json,
    write_plot_data,
    write_table,
)
from .solvers import SolverError, solve_structure
from .structure import BenchmarkSpec, load_structure, simplified_truss, structure_from_dict

log = logging.getLogger("ddelastic")

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_BUDGET = 0, 2, 3, 4


class ConfigError(Exception):
    pass


def data_path(name: str) -> Path:
    """Path of a file shipped in the package ``data`` directory."""
    return Path(str(resources.files("ddelastic") / "data" / name))


def _resolve(path, base: Path | None) -> Path:
    p = Path(path)
    if p.is_absolute() and p.exists():
        return p
    for root in ([base] if base else []) + [Path.cwd()]:
        if (root / p).exists():
            return root / p
    shipped = data_path(str(p))
    if shipped.exists():
        return shipped
    raise ConfigError(f"file not found: {path}")


def _load_config(path) -> tuple[dict, Path | None]:
    if path is None:
        return {}, None
    p = _resolve(path, None)
    try:
        return read_json(p), p.parent
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{p}: invalid JSON ({exc})") from None


# -- builders from config sections --------------------------------------------

def build_structure(spec: dict, base: Path | None):
    """Structure and, for the manufactured bar, its BenchmarkSpec."""
    if "benchmark" in spec:
        b = dict(spec["benchmark"])
        n = int(b.pop("n_elements", 8))
        bench = BenchmarkSpec(**b)
        return bench.structure(n), bench
    if "simplified_truss" in spec:
        return simplified_truss(**spec["simplified_truss"]), None
    if "file" in spec:
        st = load_structure(_resolve(spec["file"], base))
        gamma = float(spec.get("load_scale", 1.0))
        if gamma != 1.0:
            st = type(st)(st.nodes, st.elements, st.areas, st.fixed_dofs, gamma * st.nodal_loads,
                          st.distributed_load, st.meta)
        return st, None
    if "nodes" in spec:
        return structure_from_dict(spec), None
    raise ConfigError("structure needs one of: benchmark, simplified_truss, file, nodes")


def build_dataset(spec: dict, base: Path | None, bench: BenchmarkSpec | None = None,
                  seed: int | None = None) -> dsm.Dataset:
    kind = spec.get("kind")
    args = {k: v for k, v in spec.items() if k != "kind"}
    if kind == "benchmark":
        if bench is None:
            raise ConfigError("dataset kind 'benchmark' needs a benchmark structure")
        return benchmark_dataset(bench, int(args.get("n_points", 65)),
                                 float(args.get("range_factor", DEFAULT_RANGE_FACTOR)))
    if kind == "linear":
        return dsm.generate_linear(float(args["E"]), int(args["n_points"]), float(args["strain_max"]))
    if kind == "sigmoid":
        return dsm.generate_sigmoid(float(args["S_max"]), int(args["n_points"]), float(args["strain_max"]))
    if kind == "unsymmetric":
        law = args.pop("law", "sigmoid")
        return dsm.make_unsymmetric(law, int(args.pop("n_points")), float(args.pop("strain_max")),
                                    float(args.pop("fraction_positive")), **args)
    if kind == "noisy":
        source = build_dataset(args["source"], base, bench)
        s = int(args.get("seed", 0)) if seed is None else seed
        noisy = dsm.add_noise(source, float(args["sigma"]), s)
        if args.get("repair", True):
            noisy, _ = dsm.repair_noisy(noisy, source)
        return noisy
    if kind == "csv":
        return dsm.load_csv(_resolve(args["path"], base), strain=args.get("strain", "strain"),
                            stress=args.get("stress", "stress"), force=args.get("force"),
                            area=args.get("area"))
    raise ConfigError(f"unknown dataset kind {kind!r}")


def build_solver_config(cfg: dict, args) -> SolverConfig:
    fields = dict(cfg.get("solver", {}))
    if "load_factors" in fields:
        fields["load_factors"] = tuple(fields["load_factors"])
    steps = args.steps if getattr(args, "steps", None) is not None else cfg.get("steps")
    if steps is not None:
        fields["load_factors"] = load_steps(int(steps), float(cfg.get("load_factor", 1.0)))
    for name, attr in (("alpha", "alpha"), ("k_max", "kmax"), ("init_mode", "init"), ("seed", "seed")):
        v = getattr(args, attr, None)
        if v is not None:
            fields[name] = v
    return SolverConfig(**fields)


def _solver_kinds(cfg: dict, args) -> list[str]:
    if getattr(args, "solver", None):
        kinds = [args.solver]
    else:
        kinds = cfg.get("solvers", ["adm", "go-adm"])
        kinds = [kinds] if isinstance(kinds, str) else kinds
    out = []
    for k in kinds:
        k = k.replace("-", "_")
        if k not in ("adm", "go_adm"):
            raise ConfigError(f"unknown solver {k!r}")
        out.append(k)
    return out


# -- subcommands ---------------------------------------------------------------

def cmd_generate(args) -> int:
    cfg, base = _load_config(args.config)
    spec = dict(cfg.get("dataset", cfg))
    if args.kind:
        spec["kind"] = args.kind
    for key, val in (("n_points", args.n), ("strain_max", args.strain_max), ("E", args.modulus),
                     ("S_max", args.smax), ("fraction_positive", args.fraction), ("sigma", args.sigma)):
        if val is not None:
            spec[key] = val
    if spec.get("kind") == "noisy" and "source" not in spec:
        spec["source"] = dict(kind="sigmoid", S_max=spec.pop("S_max"), n_points=spec.pop("n_points"),
                              strain_max=spec.pop("strain_max"))
    d = build_dataset(spec, base, seed=args.seed)
    out = Path(args.out) / (args.name or "dataset.csv")
    write_dataset_csv(d, out)
    rep = dsm.check_consistency(d) if len(d) > 1 else None
    log.info("wrote %d points to %s (consistent: %s)", len(d), out, rep.consistent if rep else True)
    print(out)
    return EXIT_OK


def cmd_solve(args) -> int:
    cfg, base = _load_config(args.config)
    if not cfg:
        raise ConfigError("solve needs --config")
    st, bench = build_structure(cfg.get("structure", {}), base)
    sc = build_solver_config(cfg, args)
    if bench is not None and bench.alpha != sc.alpha:
        # the manufactured load depends on the strain measure
        bench = BenchmarkSpec(bench.E, bench.beta, bench.L0, sc.alpha, bench.area)
        st = bench.structure(st.n_elements)
    d = build_dataset(cfg.get("dataset", {}), base, bench)
    out = Path(args.out)
    failed = False
    for kind in _solver_kinds(cfg, args):
        rec = solve_structure(st, d, sc, kind)
        write_json(run_record_to_dict(rec, st, d), out / f"run_record_{kind}.json")
        write_plot_data(rec, st, d, out, prefix=f"{kind}_")
        if rec.ok:
            log.info("%s: final objective %.12g after %d steps", kind, rec.final.objective, len(rec.steps))
        else:
            log.error("%s failed: %s", kind, rec.error)
            failed = True
    return EXIT_SOLVER if failed else EXIT_OK


def cmd_converge(args) -> int:
    cfg, base = _load_config(args.config)
    alpha = args.alpha if args.alpha is not None else int(cfg.get("alpha", 0))
    bench = dict(cfg.get("benchmark", {}))
    bench["alpha"] = alpha
    spec = BenchmarkSpec(**bench)
    solver = (args.solver or cfg.get("solver", "adm")).replace("-", "_")
    sc = build_solver_config({"solver": cfg.get("solver_config", {})}, argparse.Namespace(
        kmax=args.kmax, init=args.init, seed=args.seed))
    grid = convergence_grid(
        n_elements=cfg.get("n_elements", (8, 16, 32, 64, 128)),
        n_points=cfg.get("n_points", (17, 33, 65, 129, 257)),
        spec=spec, solver=solver, n_steps=args.steps if args.steps is not None else cfg.get("steps"),
        range_factor=float(cfg.get("range_factor", DEFAULT_RANGE_FACTOR)), config=sc,
    )
    out = Path(args.out)
    stem = f"convergence_alpha{alpha}_{solver}"
    write_table(out / f"{stem}.csv", grid.long_form())
    write_json(dict(
        alpha=alpha, solver=solver, n_elements=grid.n_elements, n_points=grid.n_points,
        errors=grid.errors.tolist(), status=grid.status,
        increases=[dict(axis=["elements", "points"][a], i=i, j=j, before=b, after=c)
                   for a, i, j, b, c in grid.increases()],
        column_variation={str(n): grid.column_variation(n) for n in grid.n_points},
    ), out / f"{stem}.json")
    return EXIT_OK if all(s == "ok" for s in grid.status) else EXIT_SOLVER


def cmd_rope(args) -> int:
    cfg, base = _load_config(args.config)
    path = _resolve(cfg.get("csv", "rope_synthetic.csv"), base)
    names = dict(time=cfg.get("time", "time"), force=cfg.get("force", "force"),
                 strain=cfg.get("strain", "strain"))
    try:
        raw = dsm.read_columns(path, list(names.values()))
    except dsm.DatasetError as exc:
        raise ConfigError(str(exc)) from None
    cols = {k: raw[v] for k, v in names.items()}
    ranges = [tuple(r) for r in cfg.get("ranges", _shipped_rope_ranges())]
    alpha = args.alpha if args.alpha is not None else 1
    sc = SolverConfig(alpha=alpha, **({} if args.kmax is None else dict(k_max=args.kmax)))
    solver = (args.solver or cfg.get("solver", "adm")).replace("-", "_")
    try:
        res = run_rope(cols, ranges, area=cfg.get("area"), length=float(cfg.get("length", 17.010)),
                       n_elements=int(cfg.get("n_elements", 16)), config=sc, solver=solver,
                       force=args.force, steps_per_phase=args.steps)
    except ValueError as exc:
        raise ConfigError(f"{exc} (use --force to run anyway)") from None
    out = Path(args.out)
    rows = dict(phase=[], step=[], force=[], tip_displacement=[], objective=[])
    for k, p in enumerate(res.phases):
        for s, u in zip(p.record.steps, p.tip_displacement):
            rows["phase"].append(k)
            rows["step"].append(s.step)
            rows["force"].append(s.load_factor)
            rows["tip_displacement"].append(u)
            rows["objective"].append(s.objective)
    write_table(out / "load_deflection.csv", rows,
                comments=dict(deflection="axial displacement of the loaded end (m)", solver=solver))
    write_json(dict(
        solver=solver, alpha=alpha, loop_area=res.loop_area(), ok=res.ok,
        phases=[dict(name=p.name, n_points=len(p.dataset), data_consistent=p.data_consistent,
                     results_consistent=p.results_consistent, warm_started=p.warm_started,
                     record=run_record_to_dict(p.record, res.structure, p.dataset))
                for p in res.phases],
    ), out / "rope_summary.json")
    log.info("rope: %d phases, loop area %.6g", len(res.phases), res.loop_area())
    return EXIT_OK if res.ok else EXIT_SOLVER


def _shipped_rope_ranges():
    return read_json(data_path("rope.json"))["ranges"]


def cmd_oracle(args) -> int:
    cfg, base = _load_config(args.config)
    if not cfg:
        raise ConfigError("oracle needs --config")
    st, bench = build_structure(cfg.get("structure", {}), base)
    d = build_dataset(cfg.get("dataset", {}), base, bench)
    sc = build_solver_config(cfg, args)
    cmp_ = compare_with_oracle(st, d, sc, budget=int(cfg.get("budget", 10**6)))
    if not (cmp_.adm.ok and cmp_.go_adm.ok):
        log.error("solver failure: %s / %s", cmp_.adm.error, cmp_.go_adm.error)
        return EXIT_SOLVER
    o = cmp_.objectives
    out = Path(args.out)
    write_json(dict(
        objectives=o,
        assignments=dict(oracle=cmp_.oracle.best_assignment.tolist(),
                         adm=cmp_.adm.final.assignment.tolist(),
                         go_adm=cmp_.go_adm.final.assignment.tolist()),
        ties=cmp_.ties(), oracle_ties=[t.tolist() for t in cmp_.oracle.ties],
        dominance=cmp_.dominance, n_evaluated=cmp_.oracle.n_evaluated, n_failed=cmp_.oracle.n_failed,
    ), out / "oracle_comparison.json")
    write_table(out / "oracle_comparison.csv", dict(
        solver_id=[0, 1, 2], objective=[o["oracle"], o["adm"], o["go_adm"]]),
        comments=dict(solver_id="0 oracle, 1 adm, 2 go_adm"))
    return EXIT_OK


# -- entry point -----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ddelastic", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, solver=True):
        sp.add_argument("--config", help="JSON config file")
        sp.add_argument("--out", default=".", help="output directory")
        sp.add_argument("--seed", type=int)
        sp.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS)
        if solver:
            sp.add_argument("--solver", choices=["adm", "go-adm"])
            sp.add_argument("--alpha", type=int, choices=[0, 1])
            sp.add_argument("--steps", type=int)
            sp.add_argument("--kmax", type=int)
            sp.add_argument("--init", choices=["random", "stress-free", "structure-specific"])

    g = sub.add_parser("generate", help="write a dataset CSV")
    common(g, solver=False)
    g.add_argument("kind", nargs="?", choices=["linear", "sigmoid", "unsymmetric", "noisy"])
    g.add_argument("--n", type=int, help="number of points")
    g.add_argument("--strain-max", type=float)
    g.add_argument("--E", dest="modulus", type=float)
    g.add_argument("--smax", type=float)
    g.add_argument("--fraction", type=float)
    g.add_argument("--sigma", type=float)
    g.add_argument("--name", help="output file name (default dataset.csv)")
    g.set_defaults(func=cmd_generate)

    s = sub.add_parser("solve", help="run ADM and/or GO-ADM on an experiment config")
    common(s)
    s.set_defaults(func=cmd_solve)

    c = sub.add_parser("converge", help="relative L2 error grid on the manufactured bar")
    common(c)
    c.set_defaults(func=cmd_converge)

    r = sub.add_parser("rope", help="three-phase cyclic test pipeline")
    common(r)
    r.add_argument("--force", action="store_true", help="run on inconsistent data")
    r.set_defaults(func=cmd_rope)

    o = sub.add_parser("oracle", help="compare ADM and GO-ADM against full enumeration")
    common(o)
    o.set_defaults(func=cmd_oracle)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except BudgetExceeded as exc:
        log.error("%s", exc)
        return EXIT_BUDGET
    except (OracleError, SolverError) as exc:
        log.error("%s", exc)
        return EXIT_SOLVER
    except (ConfigError, KeyError, TypeError, ValueError) as exc:
        msg = f"missing key {exc}" if isinstance(exc, KeyError) else str(exc)
        log.error("configuration error: %s", msg)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
