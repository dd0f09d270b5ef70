"""Mixing-parameter sweep: generate benchmarks, detect, evaluate, aggregate.

Chains the ``generate``, ``detect`` and ``evaluate`` subcommands for every
mu in ``--mus`` and writes ``summary.tsv`` (one row per mu, mean metrics)
under ``--out``.

    python scripts/sweep.py --N 500 --nc 10 --p 2 --No 50 --mus 0 0.1 0.2 --count 5 --out runs/sweep
"""
import argparse
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
import sys

from coalition._accel import thread_count
from coalition.cli import TSV_FIELDS, main as cli


def _detect(job):
    graph, out, args = job
    return graph, cli(["detect", "--graph", str(graph), "--out", str(out),
                       "--nc", str(args.nc), "--p", str(args.p), "--weights", args.weights,
                       "--tmax", str(args.tmax), "--seed", str(args.seed)])


def sweep(args):
    root = Path(args.out)
    rows = []
    for mu in args.mus:
        tag = f"mu_{mu:g}"
        inst, pred = root / tag / "instances", root / tag / "pred"
        gen = ["generate", "--N", str(args.N), "--nc", str(args.nc), "--p", str(args.p),
               "--No", str(args.No), "--mu", str(mu), "--count", str(args.count),
               "--seed", str(args.seed), "--out", str(inst / "g")]
        if args.muo is not None:
            gen += ["--muo", str(args.muo)]
        if cli(gen) != 0:
            print(f"{tag}: generation failed", file=sys.stderr)
            return 1
        jobs = [(graph, pred / f"{graph.stem}.comms", args)
                for graph in sorted(inst.glob("*.edges"))]
        workers = min(thread_count(), len(jobs))
        if workers > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                results = list(pool.map(_detect, jobs))
        else:
            results = [_detect(job) for job in jobs]
        failed = [str(graph) for graph, code in results if code != 0]
        if failed:
            print(f"{tag}: detection failed on {failed}", file=sys.stderr)
            return 1
        report = root / tag / "metrics.json"
        if cli(["evaluate", "--pred", str(pred), "--truth", str(inst), "--out", str(report)]) != 0:
            print(f"{tag}: evaluation failed", file=sys.stderr)
            return 1
        mean = Path(f"{report}.tsv").read_text(encoding="utf-8").splitlines()[-1].split("\t")
        rows.append([f"{mu:g}"] + mean[1:])
        print(f"{tag}: nmi={float(mean[1]):.3f} omega={float(mean[2]):.3f}", flush=True)
    summary = root / "summary.tsv"
    summary.parent.mkdir(parents=True, exist_ok=True)
    with open(summary, "w", encoding="utf-8") as fh:
        fh.write("mu\t" + "\t".join(TSV_FIELDS) + "\n")
        fh.writelines("\t".join(r) + "\n" for r in rows)
    return 0


def build_parser():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--N", type=int, default=500)
    ap.add_argument("--nc", type=int, default=10)
    ap.add_argument("--p", type=int, default=1)
    ap.add_argument("--No", type=int, default=0)
    ap.add_argument("--muo", type=float)
    ap.add_argument("--mus", type=float, nargs="+", default=[0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6])
    ap.add_argument("--count", type=int, default=50)
    ap.add_argument("--tmax", type=int, default=10)
    ap.add_argument("--weights", default="exact")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", required=True)
    return ap


if __name__ == "__main__":
    sys.exit(sweep(build_parser().parse_args()))
