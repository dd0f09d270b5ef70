"""Command-line front end: weights, detect, export-milp, import-solution, generate, evaluate.

Every run writes one manifest JSON next to its main output
(``<out>.manifest.json``). Exit codes: 0 success, 2 I/O or usage error,
3 domain error, 4 search bootstrap failure.
"""
import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .bench_gen import GeneratorConfig, GeneratorError, generate, write_instance
from .graph import EdgeListError, read_edge_list
from .lse import (DISJOINT_FIRST, RANDOM_ASSIGNMENT, LseBootstrapError, LseConfig,
                  diagnostics_jsonl, run_lse)
from .metrics import MetricsDomainError, evaluate
from .milp import build_f_sh_jk, build_f_sh_mod, export_lp, import_solution
from .stability import format_communities, parse_communities, validate_structure
from .weights import VARIANTS, compute_weights, format_triples

EXIT_OK, EXIT_IO, EXIT_DOMAIN, EXIT_BOOTSTRAP = 0, 2, 3, 4

FORMULATIONS = ("f-sh-jk", "f-sh-mod")
DEFAULT_WEIGHTS = {"f-sh-jk": "raw", "f-sh-mod": "exact"}
TSV_FIELDS = ("nmi", "omega", "tp", "tn", "fp", "fn", "accuracy", "tpr", "fpr",
              "auc", "precision", "f1")


class UsageError(Exception):
    pass


class Run:
    """Collects what a command read, wrote and computed for its manifest."""

    def __init__(self, command, out, params):
        self.command = command
        self.out = out
        self.manifest = {"command": command, "inputs": {}, "parameters": params,
                         "outputs": {}, "objective": None, "version": __version__}
        self.started = time.perf_counter()

    def input(self, key, path):
        self.manifest["inputs"][key] = str(path)

    def wrote(self, key, path):
        self.manifest["outputs"][key] = str(path)

    def finish(self, code, error=None):
        self.manifest["exit_code"] = code
        self.manifest["error"] = error
        self.manifest["seconds"] = time.perf_counter() - self.started
        if self.out is None:
            return
        path = manifest_path(self.out)
        try:
            Path(path).parent.mkdir(parents=True, exist_ok=True)
            with open(path, "w", encoding="utf-8") as fh:
                json.dump(self.manifest, fh, indent=2, sort_keys=True, default=str)
                fh.write("\n")
        except OSError:
            pass


def manifest_path(out):
    return f"{out}.manifest.json"


def _write_text(path, text):
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _read_text(path):
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def _load_graph(run, path):
    run.input("graph", path)
    return read_edge_list(path)


# --- commands -------------------------------------------------------------------

def cmd_weights(args, run):
    g = _load_graph(run, args.graph)
    w = compute_weights(g, args.weights)
    _write_text(args.out, format_triples(w, g.labels))
    run.wrote("weights", args.out)


def cmd_detect(args, run):
    g = _load_graph(run, args.graph)
    w = compute_weights(g, args.weights)
    relocate = {"auto": None, "on": True, "off": False}[args.relocate]
    cfg = LseConfig(t_max=args.tmax, seed=args.seed, start_strategy=args.start,
                    relocate=relocate)
    pi, value, diagnostics = run_lse(w, g, args.nc, args.p, cfg)
    problems = validate_structure(w, pi)
    _write_text(args.out, format_communities(pi, g.labels))
    run.wrote("communities", args.out)
    report = {
        "objective": value,
        "n": g.n, "m": g.m,
        "n_c": args.nc, "p": args.p, "weights": args.weights,
        "communities_found": len(pi.communities),
        "community_sizes": [len(s) for s in pi.canonical().communities],
        "bridge_nodes": [g.labels[v] for v in sorted(pi.bridge_nodes())],
        "valid": not problems,
        "violations": [str(v) for v in problems],
        "starts_failed": sum(1 for d in diagnostics if d.get("error")),
        "diagnostics": diagnostics,
    }
    report_path = f"{args.out}.report.json"
    _write_text(report_path, json.dumps(report, indent=2, sort_keys=True, default=str) + "\n")
    run.wrote("report", report_path)
    diag_path = f"{args.out}.diag.jsonl"
    _write_text(diag_path, diagnostics_jsonl(diagnostics))
    run.wrote("diagnostics", diag_path)
    run.manifest["objective"] = value
    if problems:
        raise ValueError(f"search returned an invalid structure: {problems}")


def _build_model(args, g):
    variant = args.weights or DEFAULT_WEIGHTS[args.formulation]
    w = compute_weights(g, variant)
    if args.formulation == "f-sh-jk":
        return build_f_sh_jk(w, args.nc)
    return build_f_sh_mod(w, args.nc, args.p)


def cmd_export_milp(args, run):
    g = _load_graph(run, args.graph)
    model = _build_model(args, g)
    _write_text(args.out, export_lp(model))
    run.wrote("lp", args.out)
    run.manifest["model"] = {"tag": model.tag, "variables": len(model.variables),
                             "constraints": len(model.constraints)}


def cmd_import_solution(args, run):
    g = _load_graph(run, args.graph)
    model = _build_model(args, g)
    run.input("solution", args.solution)
    result = import_solution(model, _read_text(args.solution))
    _write_text(args.out, format_communities(result.structure, g.labels))
    run.wrote("communities", args.out)
    run.manifest["objective"] = model.objective_value(result.values)
    run.manifest["violations"] = [str(v) for v in result.violations]
    if result.violations:
        raise ValueError(f"imported solution is infeasible: {result.violations}")


def _generator_config(args, seed):
    fields = {}
    if args.config:
        fields.update(json.loads(_read_text(args.config)))
    for name, flag in (("N", "N"), ("n_c", "nc"), ("p", "p"), ("N_o", "No"), ("mu", "mu"),
                       ("mu_o", "muo"), ("gamma", "gamma"), ("beta", "beta"),
                       ("k_min", "kmin"), ("k_max", "kmax"), ("s_min", "smin"),
                       ("s_max", "smax")):
        value = getattr(args, flag)
        if value is not None:
            fields[name] = value
    fields["seed"] = seed
    if "N" not in fields or "n_c" not in fields:
        raise UsageError("generate needs N and n_c (flags or --config)")
    try:
        return GeneratorConfig(**fields)
    except TypeError as exc:
        raise UsageError(f"bad generator config: {exc}") from None


def derived_seeds(seed, count):
    """Per-instance seeds for batch generation, stable for a given base seed."""
    if count == 1:
        return [seed]
    states = np.random.SeedSequence(seed).spawn(count)
    return [int(s.generate_state(1, dtype=np.uint32)[0]) for s in states]


def cmd_generate(args, run):
    if args.config:
        run.input("config", args.config)
    seeds = derived_seeds(args.seed, args.count)
    for t, seed in enumerate(seeds):
        cfg = _generator_config(args, seed)
        prefix = args.out if args.count == 1 else f"{args.out}_{t:03d}"
        Path(prefix).parent.mkdir(parents=True, exist_ok=True)
        g, truth = generate(cfg)
        paths = write_instance(g, truth, cfg, prefix)
        for key, path in paths.items():
            run.wrote(f"{key}_{t:03d}" if args.count > 1 else key, path)
    run.manifest["seeds"] = seeds


def _evaluate_one(pred_path, truth_path, bridges_path):
    truth_text = _read_text(truth_path)
    pred_text = _read_text(pred_path)
    truth_raw = parse_communities(truth_text)
    pred_raw = parse_communities(pred_text)
    if not truth_raw:
        raise UsageError(f"{truth_path}: no communities")
    if not pred_raw:
        raise UsageError(f"{pred_path}: no communities")
    labels = sorted(set().union(*truth_raw))
    index = {lab: i for i, lab in enumerate(labels)}
    extra = set().union(*pred_raw) - index.keys()
    if extra:
        raise MetricsDomainError(
            f"prediction names nodes outside the ground truth: {sorted(extra)[:5]}")
    bridges = set()
    if bridges_path is not None:
        for tok in _read_text(bridges_path).split():
            lab = int(tok)
            if lab not in index:
                raise MetricsDomainError(f"bridge node {lab} outside the ground truth")
            bridges.add(index[lab])
    truth = [{index[v] for v in c} for c in truth_raw]
    pred = [{index[v] for v in c} for c in pred_raw]
    return evaluate(pred, truth, bridges, len(labels))


def _tsv(rows):
    head = "instance\t" + "\t".join(TSV_FIELDS) + "\n"
    body = []
    for name, rep in rows:
        d = rep.to_dict()
        body.append(name + "\t" + "\t".join(repr(d[f]) for f in TSV_FIELDS) + "\n")
    if rows:
        means = [float(np.mean([r.to_dict()[f] for _, r in rows])) for f in TSV_FIELDS]
        body.append("mean\t" + "\t".join(repr(m) for m in means) + "\n")
    return head + "".join(body)


def cmd_evaluate(args, run):
    pred = Path(args.pred)
    truth = Path(args.truth)
    run.input("pred", pred)
    run.input("truth", truth)
    if pred.is_dir():
        if not truth.is_dir():
            raise UsageError("batch mode needs --truth to be a directory too")
        rows = []
        for truth_file in sorted(truth.glob("*.truth")):
            stem = truth_file.stem
            pred_file = pred / f"{stem}{args.pred_suffix}"
            bridges = truth / f"{stem}.bridges"
            if not pred_file.exists():
                raise UsageError(f"missing prediction {pred_file}")
            rows.append((stem, _evaluate_one(pred_file, truth_file,
                                             bridges if bridges.exists() else None)))
        if not rows:
            raise UsageError(f"no *.truth files in {truth}")
        summary = {"instances": {name: rep.to_dict() for name, rep in rows}}
    else:
        if args.bridges:
            run.input("bridges", args.bridges)
        rep = _evaluate_one(pred, truth, args.bridges)
        rows = [(pred.stem, rep)]
        summary = rep.to_dict()
    _write_text(args.out, json.dumps(summary, indent=2, sort_keys=True) + "\n")
    run.wrote("report", args.out)
    tsv_path = args.tsv or f"{args.out}.tsv"
    _write_text(tsv_path, _tsv(rows))
    run.wrote("tsv", tsv_path)


# --- parser ---------------------------------------------------------------------

def _positive(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return value


def build_parser():
    parser = argparse.ArgumentParser(prog="coalition",
                                     description="Stable-coalition overlapping community detection.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("weights", help="write pairwise game weights as 'i j w' lines")
    p.add_argument("--graph", required=True)
    p.add_argument("--weights", choices=VARIANTS, default="exact")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_weights)

    p = sub.add_parser("detect", help="multi-start local search for a stable cover")
    p.add_argument("--graph", required=True)
    p.add_argument("--nc", type=_positive, required=True)
    p.add_argument("--p", type=_positive, default=1)
    p.add_argument("--weights", choices=VARIANTS, default="exact")
    p.add_argument("--tmax", type=_positive, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--start", choices=(RANDOM_ASSIGNMENT, DISJOINT_FIRST),
                   default=RANDOM_ASSIGNMENT)
    p.add_argument("--relocate", choices=("auto", "on", "off"), default="auto")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_detect)

    for name, func, text in (("export-milp", cmd_export_milp, "write a MILP model as LP text"),
                             ("import-solution", cmd_import_solution,
                              "decode a solver's solution file into communities")):
        p = sub.add_parser(name, help=text)
        p.add_argument("--graph", required=True)
        p.add_argument("--formulation", choices=FORMULATIONS, required=True)
        p.add_argument("--nc", type=_positive, required=True)
        p.add_argument("--p", type=_positive, default=1)
        p.add_argument("--weights", choices=VARIANTS, default=None,
                       help="defaults to raw for f-sh-jk and exact for f-sh-mod")
        if name == "import-solution":
            p.add_argument("--solution", required=True)
        p.add_argument("--out", required=True)
        p.set_defaults(func=func)

    p = sub.add_parser("generate", help="draw overlapping benchmark graphs")
    p.add_argument("--config", help="JSON object with generator fields")
    p.add_argument("--N", type=int)
    p.add_argument("--nc", type=int)
    p.add_argument("--p", type=int)
    p.add_argument("--No", type=int)
    p.add_argument("--mu", type=float)
    p.add_argument("--muo", type=float)
    p.add_argument("--gamma", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--kmin", type=int)
    p.add_argument("--kmax", type=int)
    p.add_argument("--smin", type=int)
    p.add_argument("--smax", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--count", type=_positive, default=1)
    p.add_argument("--out", required=True, help="output prefix")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("evaluate", help="compare predicted communities with ground truth")
    p.add_argument("--pred", required=True, help="community file, or a directory for batch mode")
    p.add_argument("--truth", required=True, help="truth file, or a directory of *.truth")
    p.add_argument("--bridges")
    p.add_argument("--pred-suffix", default=".comms")
    p.add_argument("--tsv")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_evaluate)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_IO
    params = {k: v for k, v in vars(args).items() if k not in ("func", "command")}
    run = Run(args.command, getattr(args, "out", None), params)
    try:
        args.func(args, run)
    except LseBootstrapError as exc:
        return _fail(run, EXIT_BOOTSTRAP, exc)
    except (OSError, EdgeListError, UsageError, UnicodeDecodeError, json.JSONDecodeError) as exc:
        return _fail(run, EXIT_IO, exc)
    except (ValueError, KeyError, GeneratorError) as exc:
        return _fail(run, EXIT_DOMAIN, exc)
    run.finish(EXIT_OK)
    return EXIT_OK


def _fail(run, code, exc):
    message = exc.args[0] if isinstance(exc, KeyError) and exc.args else str(exc)
    print(f"coalition {run.command}: {message}", file=sys.stderr)
    run.finish(code, message)
    return code


if __name__ == "__main__":
    sys.exit(main())
