"""Command-line surface.

Subcommands: pca, gap, peel, bootstrap, verify, prim. Every command that
accepts --seed is byte-reproducible: the same invocation writes the same
JSON (pass --no-timing to drop the one wall-clock field). Exit codes:
0 success, 1 verification failure, 2 data or runtime failure, 64 usage
error.

Set PCPEEL_THREADS to cap BLAS thread pools (needs threadpoolctl; else
export OMP_NUM_THREADS before launching).
"""

from __future__ import annotations

import argparse
import csv
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import report as rpt
from .covstats import PeelPipeline, bootstrap, cov_stats_or_sentinel, run_pipeline
from .errors import PcpeelError
from .gapsel import log_spectral_gap, naive_tail, scree_export
from .ingest import load_labeled_dataset, read_csv_matrix, split_by_label
from .matrixcore import DataMatrix, eigendecompose, project, sample_covariance
from .peel import MODE_VARIANCE, MODE_VOLUME, PrimConfig, prim_classic
from .rng import BOOTSTRAP_STREAM, RngStream
from .verify import run_suite, verify_payload

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_DATA = 2
EXIT_USAGE = 64


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage errors must exit 64, not argparse's 2
        self.print_usage(sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _add_input_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--input", help="numeric CSV matrix (rows = samples)")
    p.add_argument("--images", help="IDX image file (gzip ok)")
    p.add_argument("--labels", help="IDX label file (gzip ok)")
    p.add_argument("--label", type=int, help="class label to select from the IDX pair")


def _add_report_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--json", help="write the JSON report here")
    p.add_argument("--no-timing", action="store_true", help="omit the timing field")
    p.add_argument("--plot", action="store_true", help="render figures next to outputs")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="pcpeel", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("pca", help="eigendecompose the sample covariance")
    _add_input_flags(p)
    p.add_argument("--k", type=int, help="band width for scree tagging")
    p.add_argument("--out", required=True, help="output prefix")
    _add_report_flags(p)

    p = sub.add_parser("gap", help="band selection from a saved eigenbasis")
    p.add_argument("--basis", required=True, help="NPZ basis from the pca command")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--out", help="output prefix for the tagged scree table")
    _add_report_flags(p)

    p = sub.add_parser("peel", help="one simultaneous quantile peel")
    _add_input_flags(p)
    p.add_argument("--mode", choices=[MODE_VOLUME, MODE_VARIANCE], default=MODE_VOLUME)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--band", choices=["gap", "tail"], default="gap")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="output prefix for retained-row CSV exports")
    p.add_argument("--embedding", help="CSV with one 2-D embedding row per sample")
    _add_report_flags(p)

    p = sub.add_parser("bootstrap", help="bootstrap the peel statistics")
    _add_input_flags(p)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--band", choices=["gap", "tail"], default="gap")
    p.add_argument("--B", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    _add_report_flags(p)

    p = sub.add_parser("verify", help="run one statistical verification suite")
    p.add_argument(
        "--suite",
        required=True,
        help="theorem1 | prop2 | prop3 | corollary8 | lemma6 | nfl",
    )
    p.add_argument("--seed", type=int, default=0)
    _add_report_flags(p)

    p = sub.add_parser("prim", help="classical iterative peel/cover search")
    _add_input_flags(p)
    p.add_argument("--alpha", type=float, required=True, help="per-step peel mass")
    p.add_argument("--beta", type=float, required=True, help="minimum box support")
    p.add_argument("--covers", type=int, default=1)
    p.add_argument("--response", help="response column name (default: box density)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="output prefix for per-box row CSV exports")
    _add_report_flags(p)

    return parser


def _load_input(args) -> DataMatrix:
    if args.input:
        return read_csv_matrix(args.input)
    if args.images and args.labels and args.label is not None:
        ds = load_labeled_dataset(args.images, args.labels)
        return split_by_label(ds, args.label)
    raise ValueError("provide --input CSV or --images/--labels/--label")


def _timing(started: float, args) -> dict | None:
    if args.no_timing:
        return None
    return {"seconds": time.perf_counter() - started}


def _finish(payload: dict, args, started: float) -> None:
    timing = _timing(started, args)
    if timing is not None:
        payload["timing"] = timing
    text = rpt.dumps_report(payload)
    if args.json:
        Path(args.json).write_text(text)
    else:
        sys.stdout.write(text)


def _config_echo(args, keys) -> dict:
    return {key: getattr(args, key) for key in keys if getattr(args, key) is not None}


def _cmd_pca(args) -> int:
    started = time.perf_counter()
    x = _load_input(args)
    basis = eigendecompose(sample_covariance(x))
    selection = naive = None
    if args.k:
        selection = log_spectral_gap(basis, args.k)
        naive = naive_tail(basis, args.k)
    table = scree_export(basis, selection, naive=naive)

    out = Path(args.out)
    rpt.save_basis(basis, out.with_name(out.name + "_basis.npz"))
    scree_path = out.with_name(out.name + "_scree.csv")
    scree_path.write_text(table.to_csv())
    if args.plot:
        rpt.render_scree(
            table,
            out.with_name(out.name + "_scree.png"),
            gap_index=selection.gap_index if selection else None,
        )

    payload = {
        "version": rpt.REPORT_VERSION,
        "command": "pca",
        "config": _config_echo(args, ("input", "images", "labels", "label", "k")),
        "basis": {
            "d": basis.d,
            "clamped": basis.clamped,
            "top_eigenvalue": float(basis.eigenvalues[0]),
        },
        "outputs": {
            "basis": str(out.with_name(out.name + "_basis.npz")),
            "scree": str(scree_path),
        },
    }
    if selection is not None:
        payload["selection"] = rpt.selection_payload(selection)
        payload["naive_selection"] = rpt.selection_payload(naive)
    _finish(payload, args, started)
    return EXIT_OK


def _cmd_gap(args) -> int:
    started = time.perf_counter()
    basis = rpt.load_basis(args.basis)
    selection = log_spectral_gap(basis, args.k)
    naive = naive_tail(basis, args.k)
    payload = {
        "version": rpt.REPORT_VERSION,
        "command": "gap",
        "config": {"basis": args.basis, "k": args.k},
        "selection": rpt.selection_payload(selection),
        "naive_selection": rpt.selection_payload(naive),
    }
    if args.out:
        out = Path(args.out)
        table = scree_export(basis, selection, naive=naive)
        scree_path = out.with_name(out.name + "_scree.csv")
        scree_path.write_text(table.to_csv())
        payload["outputs"] = {"scree": str(scree_path)}
        if args.plot:
            rpt.render_scree(
                table,
                out.with_name(out.name + "_scree.png"),
                gap_index=selection.gap_index,
            )
    _finish(payload, args, started)
    return EXIT_OK


def _peeled_support_logvol(y: DataMatrix, indices) -> float:
    cols = y.values[:, [i - 1 for i in indices]]
    widths = cols.max(axis=0) - cols.min(axis=0)
    if np.any(widths <= 0):
        return -math.inf
    return float(np.sum(np.log(widths)))


def _ain(retained_fraction: float, box_logvol: float, support_logvol: float) -> float:
    if retained_fraction <= 0:
        return -math.inf
    if not (math.isfinite(box_logvol) and math.isfinite(support_logvol)):
        return math.inf if box_logvol == -math.inf else -math.inf
    return math.log(retained_fraction) - (box_logvol - support_logvol)


def _cmd_peel(args) -> int:
    started = time.perf_counter()
    if not 0.0 < args.beta <= 1.0:
        raise ValueError(f"--beta must be in (0, 1], got {args.beta}")
    x = _load_input(args)
    pettiest_run = run_pipeline(x, PeelPipeline(args.k, args.beta, MODE_VOLUME, args.band))
    principal_run = run_pipeline(x, PeelPipeline(args.k, args.beta, MODE_VARIANCE))
    primary = pettiest_run if args.mode == MODE_VOLUME else principal_run
    counterpart = principal_run if args.mode == MODE_VOLUME else pettiest_run

    full_stats = cov_stats_or_sentinel(sample_covariance(pettiest_run.projected))
    ratio = (
        pettiest_run.stats.total_variance / principal_run.stats.total_variance
        if principal_run.stats.total_variance > 0
        else math.inf
    )
    ain = _ain(
        primary.result.retained_fraction,
        primary.result.log_volume,
        _peeled_support_logvol(primary.projected, primary.result.box.indices),
    )

    payload = {
        "version": rpt.REPORT_VERSION,
        "command": "peel",
        "config": _config_echo(
            args,
            ("input", "images", "labels", "label", "mode", "k", "beta", "band", "seed"),
        ),
        "selection": rpt.selection_payload(pettiest_run.selection),
        "basis": {
            "d": pettiest_run.basis.d,
            "clamped": pettiest_run.basis.clamped,
            "top_eigenvalue": float(pettiest_run.basis.eigenvalues[0]),
        },
        "peel": rpt.peel_payload(primary.result),
        "counterpart_peel": rpt.peel_payload(counterpart.result),
        "cov_stats": {
            "full": rpt.cov_stats_payload(full_stats),
            "pettiest": rpt.cov_stats_payload(pettiest_run.stats),
            "principal": rpt.cov_stats_payload(principal_run.stats),
            "pettiest_to_principal_trace_ratio": ratio,
        },
        "active_information": ain,
    }

    if args.out:
        outputs = _export_retained(args, x, pettiest_run, principal_run)
        payload["outputs"] = outputs
    _finish(payload, args, started)
    return EXIT_OK


def _export_retained(args, x, pettiest_run, principal_run) -> dict:
    out = Path(args.out)
    embedding = None
    if args.embedding:
        emb = read_csv_matrix(args.embedding)
        if emb.n != x.n or emb.d != 2:
            raise PcpeelError(
                f"embedding must be {x.n} rows by 2 columns, got {emb.n}x{emb.d}"
            )
        embedding = emb.values
    retained_path = out.with_name(out.name + "_retained.csv")
    with open(retained_path, "w", newline="\n") as fh:
        writer = csv.writer(fh)
        header = ["row", "subset"] + (["emb_x", "emb_y"] if embedding is not None else [])
        writer.writerow(header)
        for name, run in (("principal", principal_run), ("pettiest", pettiest_run)):
            for row in run.result.retained_rows:
                record = [int(row), name]
                if embedding is not None:
                    record += [
                        format(embedding[row, 0], ".17g"),
                        format(embedding[row, 1], ".17g"),
                    ]
                writer.writerow(record)
    outputs = {"retained": str(retained_path)}
    if args.plot:
        table = scree_export(
            pettiest_run.basis,
            pettiest_run.selection,
            naive=naive_tail(pettiest_run.basis, args.k),
        )
        scree_png = out.with_name(out.name + "_scree.png")
        rpt.render_scree(table, scree_png, gap_index=pettiest_run.selection.gap_index)
        outputs["scree_plot"] = str(scree_png)
        if embedding is not None:
            emb_png = out.with_name(out.name + "_embedding.png")
            rpt.render_embedding(
                embedding,
                {
                    "principal": principal_run.result.retained_rows,
                    "pettiest": pettiest_run.result.retained_rows,
                },
                emb_png,
            )
            outputs["embedding_plot"] = str(emb_png)
    return outputs


def _cmd_bootstrap(args) -> int:
    started = time.perf_counter()
    if args.B < 2:
        raise ValueError(f"--B must be >= 2, got {args.B}")
    if not 0.0 < args.beta <= 1.0:
        raise ValueError(f"--beta must be in (0, 1], got {args.beta}")
    x = _load_input(args)
    stream = RngStream(args.seed, BOOTSTRAP_STREAM)
    # The same stream feeds both sides, so replicate r resamples the same
    # rows for the pettiest and the principal pipeline (paired comparison).
    pettiest = bootstrap(x, PeelPipeline(args.k, args.beta, MODE_VOLUME, args.band), args.B, stream)
    principal = bootstrap(x, PeelPipeline(args.k, args.beta, MODE_VARIANCE), args.B, stream)
    payload = {
        "version": rpt.REPORT_VERSION,
        "command": "bootstrap",
        "config": _config_echo(
            args,
            ("input", "images", "labels", "label", "k", "beta", "band", "B", "seed"),
        ),
        "bootstrap": {
            "pettiest": rpt.bootstrap_payload(pettiest),
            "principal": rpt.bootstrap_payload(principal),
        },
    }
    _finish(payload, args, started)
    return EXIT_OK


def _cmd_verify(args) -> int:
    started = time.perf_counter()
    try:
        result = run_suite(args.suite, args.seed)
    except KeyError as exc:
        print(exc.args[0], file=sys.stderr)
        return EXIT_USAGE
    for check in result.checks:
        status = "PASS" if check.passed else "FAIL"
        print(f"{status} {result.suite}.{check.name}: value={check.value:.6g} "
              f"threshold={check.threshold:.6g} {check.detail}")
    payload = {
        "version": rpt.REPORT_VERSION,
        "command": "verify",
        "config": {"suite": args.suite, "seed": args.seed},
        "verify": verify_payload(result),
    }
    if args.json:
        timing = _timing(started, args)
        if timing is not None:
            payload["timing"] = timing
        Path(args.json).write_text(rpt.dumps_report(payload))
    return EXIT_OK if result.passed else EXIT_VERIFY_FAILED


def _cmd_prim(args) -> int:
    started = time.perf_counter()
    x = _load_input(args)
    cfg = PrimConfig(
        alpha_peel=args.alpha,
        beta_floor=args.beta,
        max_covers=args.covers,
        response=args.response,
    )
    results = prim_classic(x, cfg)
    feature_indices = results[0].box.indices if results else ()
    support_logvol = (
        _peeled_support_logvol(x, feature_indices) if feature_indices else -math.inf
    )
    boxes = []
    for res in results:
        boxes.append(
            {
                "box": rpt.peel_payload(res),
                "active_information": _ain(
                    res.retained_fraction, res.log_volume, support_logvol
                ),
            }
        )
    payload = {
        "version": rpt.REPORT_VERSION,
        "command": "prim",
        "config": _config_echo(
            args,
            ("input", "images", "labels", "label", "alpha", "beta", "covers",
             "response", "seed"),
        ),
        "prim_boxes": boxes,
    }
    if args.out:
        out = Path(args.out)
        rows_path = out.with_name(out.name + "_boxes.csv")
        with open(rows_path, "w", newline="\n") as fh:
            writer = csv.writer(fh)
            writer.writerow(["box", "row"])
            for i, res in enumerate(results, start=1):
                for row in res.retained_rows:
                    writer.writerow([i, int(row)])
        payload["outputs"] = {"boxes": str(rows_path)}
        if args.plot and x.d == 2:
            png = out.with_name(out.name + "_boxes.png")
            rpt.render_boxes(x.values, results, png)
            payload["outputs"]["boxes_plot"] = str(png)
    _finish(payload, args, started)
    return EXIT_OK


_COMMANDS = {
    "pca": _cmd_pca,
    "gap": _cmd_gap,
    "peel": _cmd_peel,
    "bootstrap": _cmd_bootstrap,
    "verify": _cmd_verify,
    "prim": _cmd_prim,
}


def _cap_threads() -> None:
    threads = os.environ.get("PCPEEL_THREADS")
    if not threads:
        return
    try:
        from threadpoolctl import threadpool_limits

        threadpool_limits(int(threads))
    except ImportError:
        pass  # fall back to the BLAS env vars documented in the README


def main(argv: list[str] | None = None) -> int:
    _cap_threads()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_USAGE
    try:
        return _COMMANDS[args.command](args)
    except (ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (PcpeelError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
