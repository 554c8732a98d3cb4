"""Command-line interface: ``generate``, ``cluster``, ``evaluate``, ``sweep``."""

from __future__ import annotations

import argparse
import csv
import itertools
import json
import logging
import sys
import time
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .exceptions import ConvergenceError, DataFormatError, DegenerateCloudError
from .homology import build_vr_filtration, compute_barcode, local_point_set
from .knn import build_knn, max_kth_distance
from .metrics import all_metrics
from .pointcloud import BENCHMARKS, save_csv
from .pipeline import RunConfig, load_input, make_dataset, run_pipeline
from .spectral import write_embedding
from .topo_filter import write_scores_csv

log = logging.getLogger("topoclust")

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2
EXIT_INPUT = 3
EXIT_DEGENERATE = 4
EXIT_NUMERIC = 5
EXIT_OUTPUT = 6

SWEEP_COLUMNS = [
    "input", "k", "L", "M", "p", "rho", "similarity", "kernel", "seed",
    "ri", "ari", "nmi", "seconds", "status", "error",
]


class UsageError(Exception):
    pass


def parse_int_range(text: str) -> list[int]:
    """``"1:14"`` (inclusive), ``"3,5,8"`` or a mix such as ``"1,4:6"``."""
    out: list[int] = []
    for part in str(text).split(","):
        part = part.strip()
        if not part:
            continue
        if ":" in part:
            lo, hi = (int(v) for v in part.split(":", 1))
            if hi < lo:
                raise UsageError(f"empty range {part!r}")
            out.extend(range(lo, hi + 1))
        else:
            out.append(int(part))
    if not out:
        raise UsageError(f"empty range {text!r}")
    return out


def parse_list(text: str, cast=str) -> list:
    items = [cast(v.strip()) for v in str(text).split(",") if v.strip()]
    if not items:
        raise UsageError(f"empty list {text!r}")
    return items


def _read_config(path: Optional[str]) -> dict:
    if not path:
        return {}
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise FileNotFoundError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"config file {path} is not valid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise UsageError(f"config file {path} must hold a JSON object")
    return data


def _merge(args: argparse.Namespace, keys: Sequence[str], defaults: dict) -> dict:
    """defaults < config file < command-line flags."""
    merged = dict(defaults)
    merged.update({k: v for k, v in _read_config(args.config).items() if k in keys})
    merged.update({k: getattr(args, k) for k in keys if getattr(args, k, None) is not None})
    return merged


def _write_labels(labels: np.ndarray, path: Path) -> None:
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["point_index", "label"])
        for i, lab in enumerate(labels):
            w.writerow([i, int(lab)])


def _read_labels(path: str) -> np.ndarray:
    p = Path(path)
    if not p.is_file():
        raise FileNotFoundError(f"no such file: {p}")
    with p.open(newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if not rows:
        raise DataFormatError(f"{p}: empty file")
    header = [h.strip() for h in rows[0]]
    if "label" not in header:
        raise DataFormatError(f"{p}: no 'label' column in header {header}")
    li = header.index("label")
    pi = header.index("point_index") if "point_index" in header else None
    labels, order = [], []
    for line, r in enumerate(rows[1:], start=2):
        if len(r) != len(header):
            raise DataFormatError(f"{p}: row {line} has {len(r)} fields, expected {len(header)}")
        labels.append(r[li].strip())
        if pi is not None:
            try:
                order.append(int(r[pi]))
            except ValueError:
                raise DataFormatError(f"{p}: bad point_index at row {line}") from None
    if not labels:
        raise DataFormatError(f"{p}: no data rows")
    labels = np.array(labels)
    if pi is not None:
        labels = labels[np.argsort(order, kind="stable")]
    return labels


# --- subcommands -----------------------------------------------------------


def cmd_generate(args) -> int:
    if args.name not in BENCHMARKS:
        raise UsageError(f"unknown dataset {args.name!r}; valid names: {', '.join(BENCHMARKS)}")
    pc = make_dataset(args.name, args.seed, args.noise)
    out = Path(args.out or f"{args.name}.csv")
    save_csv(pc, out)
    log.info("wrote %d points to %s", pc.n, out)
    return EXIT_OK


CLUSTER_KEYS = ["input", "p", "k", "L", "M", "seed", "rho", "similarity", "kernel",
                "out", "label_column", "threads"]


def _cluster_config(args) -> RunConfig:
    merged = _merge(args, CLUSTER_KEYS, {})
    if "input" not in merged or "p" not in merged:
        raise UsageError("cluster needs --input and --p (on the command line or in --config)")
    return RunConfig(**merged).validate()


def cmd_cluster(args) -> int:
    cfg = _cluster_config(args)
    out = Path(cfg.out or "run")
    out.mkdir(parents=True, exist_ok=True)
    pc = load_input(cfg)
    result = run_pipeline(pc, cfg)

    _write_labels(result.labels, out / "labels.csv")
    if args.dump_scores:
        write_scores_csv(result.scores, out / "scores.csv")
    if args.dump_embedding:
        write_embedding(result.embedding, out / "embedding.csv", out / "eigenvalues.json")
    if args.dump_barcodes:
        _dump_barcodes(pc, cfg, out / "barcodes.jsonl")
    report = dict(result.report)
    report["outputs"] = sorted(p.name for p in out.iterdir() if p.is_file()) + ["report.json"]
    (out / "report.json").write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    msg = f"clustered {pc.n} points into {cfg.p} groups -> {out}"
    if "ari" in report:
        msg += f" (ARI {report['ari']:.4f}, NMI {report['nmi']:.4f})"
    log.info(msg)
    return EXIT_OK


def _dump_barcodes(pc, cfg: RunConfig, path: Path) -> None:
    g = build_knn(pc, cfg.k)
    D = max_kth_distance(g)
    with path.open("w", encoding="utf-8") as fh:
        for i in range(pc.n):
            f = build_vr_filtration(local_point_set(pc, g, i), cfg.M + 1, D)
            for line in compute_barcode(f, cfg.M).to_jsonl(i):
                fh.write(line + "\n")


def cmd_evaluate(args) -> int:
    pred = _read_labels(args.pred)
    truth = _read_labels(args.truth)
    if pred.size != truth.size:
        raise DataFormatError(f"point counts differ: {pred.size} predicted vs {truth.size} truth")
    metrics = all_metrics(truth, pred)
    text = json.dumps(metrics, indent=2, sort_keys=True) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    sys.stdout.write(text)
    return EXIT_OK


SWEEP_KEYS = ["input", "p", "k", "L", "M", "rho", "similarity", "kernel", "seed",
              "label_column", "threads", "out"]


def _as_list(value, parser):
    if isinstance(value, list):
        return value
    return parser(value)


def cmd_sweep(args) -> int:
    merged = _merge(args, SWEEP_KEYS, {
        "k": "10", "L": "10", "M": "1", "rho": "0", "similarity": "cosine",
        "kernel": "gaussian", "seed": 0, "label_column": "auto",
    })
    if "input" not in merged or "p" not in merged:
        raise UsageError("sweep needs --input and --p")
    ks = _as_list(merged["k"], parse_int_range)
    Ls = _as_list(merged["L"], parse_int_range)
    Ms = _as_list(merged["M"], parse_int_range)
    rhos = _as_list(merged["rho"], lambda t: parse_list(t, float))
    sims = _as_list(merged["similarity"], parse_list)
    kernels = _as_list(merged["kernel"], parse_list)
    out = Path(merged.get("out") or "sweep.csv")
    rows = sweep(
        merged["input"], int(merged["p"]), ks, Ls, Ms, rhos, sims, kernels,
        seed=int(merged["seed"]), label_column=merged["label_column"],
        threads=merged.get("threads"),
    )
    write_sweep_csv(rows, out)
    n_bad = sum(r["status"] != "ok" for r in rows)
    log.info("wrote %d sweep rows (%d failed) to %s", len(rows), n_bad, out)
    return EXIT_OK


def sweep(input_, p, ks, Ls, Ms, rhos, sims, kernels, seed=0, label_column="auto", threads=None):
    """Run the pipeline over the cartesian product of the parameter lists.

    Cells that raise are recorded with ``status="error"`` and the sweep
    carries on. Topology is cached across cells sharing (rho, k, L, M).
    """
    for name, values in (("k", ks), ("L", Ls), ("M", Ms), ("rho", rhos),
                         ("similarity", sims), ("kernel", kernels)):
        if len(values) == 0:
            raise UsageError(f"empty sweep range for {name}")
    rows = []
    for rho in rhos:
        cache: dict = {}
        try:
            pc = load_input(RunConfig(input=input_, p=p, rho=rho, seed=seed, label_column=label_column))
        except Exception as exc:  # recorded per cell, sweep continues
            pc, load_error = None, f"{type(exc).__name__}: {exc}"
        for k, L, M, sim, kernel in itertools.product(ks, Ls, Ms, sims, kernels):
            row = {"input": input_, "k": k, "L": L, "M": M, "p": p, "rho": rho,
                   "similarity": sim, "kernel": kernel, "seed": seed,
                   "ri": "", "ari": "", "nmi": "", "seconds": "", "status": "ok", "error": ""}
            t0 = time.perf_counter()
            try:
                if pc is None:
                    raise DataFormatError(load_error)
                cfg = RunConfig(input=input_, p=p, k=k, L=L, M=M, seed=seed, rho=rho,
                                similarity=sim, kernel=kernel, label_column=label_column,
                                threads=threads)
                rep = run_pipeline(pc, cfg, cache).report
                for key in ("ri", "ari", "nmi"):
                    row[key] = rep.get(key, "")
            except Exception as exc:
                row["status"] = "error"
                row["error"] = f"{type(exc).__name__}: {exc}"
                log.warning("sweep cell %s failed: %s", {"k": k, "L": L, "M": M, "rho": rho}, exc)
            row["seconds"] = round(time.perf_counter() - t0, 3)
            rows.append(row)
    return rows


def write_sweep_csv(rows, path: Path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=SWEEP_COLUMNS, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow(r)


# --- argument parsing --------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="topoclust", description=__doc__)
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a synthetic benchmark cloud as CSV")
    g.add_argument("name", help=f"one of: {', '.join(BENCHMARKS)}")
    g.add_argument("--noise", type=float, default=0.0, help="Gaussian noise std (rho)")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", help="output CSV (default: NAME.csv)")
    g.set_defaults(func=cmd_generate)

    c = sub.add_parser("cluster", help="run the clustering pipeline")
    c.add_argument("--input", help="benchmark name or CSV path")
    c.add_argument("--config", help="JSON file with run settings (flags win)")
    c.add_argument("--p", type=int, help="number of clusters")
    c.add_argument("--k", type=int, help="neighbours per point (default 10)")
    c.add_argument("--L", type=int, help="filtration length (default 10)")
    c.add_argument("--M", type=int, help="highest Betti dimension (default 1)")
    c.add_argument("--seed", type=int)
    c.add_argument("--noise", dest="rho", type=float, help="Gaussian noise std added to the input")
    c.add_argument("--similarity", choices=["cosine", "l2"])
    c.add_argument("--kernel", choices=["gaussian", "none"])
    c.add_argument("--label-column", dest="label_column",
                   help="CSV ground-truth column (default: 'label' if present)")
    c.add_argument("--threads", type=int, help="worker processes (<= 0: all cores)")
    c.add_argument("--out", help="output directory (default: run)")
    c.add_argument("--dump-scores", action="store_true", help="write per-edge similarity scores")
    c.add_argument("--dump-embedding", action="store_true", help="write spectral embedding")
    c.add_argument("--dump-barcodes", action="store_true", help="write per-point barcodes (JSON lines)")
    c.set_defaults(func=cmd_cluster)

    e = sub.add_parser("evaluate", help="score predicted labels against ground truth")
    e.add_argument("pred", help="CSV with a 'label' column (optionally 'point_index')")
    e.add_argument("truth", help="CSV with a 'label' column")
    e.add_argument("--out", help="also write the metrics JSON here")
    e.set_defaults(func=cmd_evaluate)

    s = sub.add_parser("sweep", help="grid of pipeline runs -> CSV of metrics")
    s.add_argument("--input")
    s.add_argument("--config", help="JSON file with sweep settings (flags win)")
    s.add_argument("--p", type=int)
    s.add_argument("--k", help="e.g. 1:14 or 5,10,15")
    s.add_argument("--L", help="e.g. 10 or 10,20,30")
    s.add_argument("--M", help="e.g. 0:5")
    s.add_argument("--noise", dest="rho", help="comma list of noise levels")
    s.add_argument("--similarity", help="comma list of cosine,l2")
    s.add_argument("--kernel", help="comma list of gaussian,none")
    s.add_argument("--seed", type=int)
    s.add_argument("--label-column", dest="label_column")
    s.add_argument("--threads", type=int)
    s.add_argument("--out", help="output CSV (default: sweep.csv)")
    s.set_defaults(func=cmd_sweep)
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(message)s",
        stream=sys.stderr,
    )
    try:
        return args.func(args)
    except UsageError as exc:
        log.error("%s", exc)
        return EXIT_USAGE
    except DegenerateCloudError as exc:
        log.error("%s", exc)
        return EXIT_DEGENERATE
    except (FileNotFoundError, DataFormatError) as exc:
        log.error("%s", exc)
        return EXIT_INPUT
    except ConvergenceError as exc:
        log.error("%s", exc)
        return EXIT_NUMERIC
    except ValueError as exc:
        log.error("%s", exc)
        return EXIT_USAGE
    except OSError as exc:
        log.error("cannot write output: %s", exc)
        return EXIT_OUTPUT


if __name__ == "__main__":
    sys.exit(main())
