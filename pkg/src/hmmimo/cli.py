"""Command-line front end: ``simulate``, ``validate``, ``cdf`` and ``percentiles``."""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, NetworkConfig, config_from_mapping, load_config
from .harness import DEFAULT_SCHEMES, METRICS, CampaignSamples, collect_samples, summaries
from .oracle import oracle_instance, validate

CSV_HEADER = ("scheme", "metric", "user_index", "epoch", "value")


def _fmt(value: float) -> str:
    return repr(float(value))  # shortest round-trip form, always '.' as decimal point


def build_config(args) -> NetworkConfig:
    overrides = {"rng_seed": args.seed, "epochs": args.epochs, "cbs_antennas": args.nb}
    if getattr(args, "overhead", False):
        overrides["pilot_overhead"] = True
    if args.config:
        return load_config(args.config, **overrides)
    return config_from_mapping({k: v for k, v in overrides.items() if v is not None})


def result_document(samples: CampaignSamples) -> dict:
    cfg = samples.config
    records = []
    for cdf in summaries(samples):
        rec = {"scheme": cdf.scheme, "metric": cdf.metric, "n": int(cdf.samples.size),
               "p05": cdf.p05, "p50": cdf.p50, "p95": cdf.p95}
        if cdf.metric.endswith("capacity"):
            scale = cfg.bandwidth / 1e6
            rec.update(p05_mbps=cdf.p05 * scale, p50_mbps=cdf.p50 * scale, p95_mbps=cdf.p95 * scale)
        records.append(rec)
    return {
        "config": cfg.to_dict(),
        "metadata": {
            "seed": cfg.rng_seed,
            "epochs": cfg.epochs,
            "schemes": list(samples.schemes),
            "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
            "version": __version__,
        },
        "summaries": records,
        "samples": [
            {"scheme": s, "metric": m, "values": samples.data[s][m].tolist()}
            for s in samples.schemes for m in METRICS
        ],
    }


def load_result(path) -> dict:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read result file {path}: {exc}") from exc
    for key in ("config", "metadata", "summaries", "samples"):
        if key not in doc:
            raise ConfigError(f"result file {path} lacks '{key}'")
    return doc


def csv_rows(doc: dict):
    for rec in doc["samples"]:
        values = np.asarray(rec["values"], dtype=float)
        if values.ndim == 2:
            for epoch, row in enumerate(values):
                for user, v in enumerate(row):
                    yield rec["scheme"], rec["metric"], str(user), str(epoch), _fmt(v)
        else:
            for epoch, v in enumerate(values):
                yield rec["scheme"], rec["metric"], "", str(epoch), _fmt(v)


def write_csv(rows, out) -> int:
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    n = 0
    for row in rows:
        writer.writerow(row)
        n += 1
    return n


def percentile_table(doc: dict) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(("scheme", "metric", "p05", "p50", "p95", "unit"))
    for rec in doc["summaries"]:
        unit = "bit/s/Hz"
        writer.writerow((rec["scheme"], rec["metric"], f"{rec['p05']:.4f}", f"{rec['p50']:.4f}",
                         f"{rec['p95']:.4f}", unit))
        if "p05_mbps" in rec:
            writer.writerow((rec["scheme"], rec["metric"], f"{rec['p05_mbps']:.4f}",
                             f"{rec['p50_mbps']:.4f}", f"{rec['p95_mbps']:.4f}", "Mbit/s"))
    return buf.getvalue()


def _open_out(path):
    if path in (None, "-"):
        return sys.stdout, False
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    return open(path, "w", newline=""), True


def cmd_simulate(args) -> int:
    config = build_config(args)
    schemes = [s.strip() for s in args.schemes.split(",") if s.strip()] if args.schemes else DEFAULT_SCHEMES
    workers = 1 if args.serial else (args.workers or os.cpu_count() or 1)
    samples = collect_samples(config, schemes, workers=workers)
    doc = result_document(samples)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps(doc))
    print(percentile_table(doc), end="")
    print(f"wrote {out}", file=sys.stderr)
    return 0


def cmd_validate(args) -> int:
    base = NetworkConfig(total_antennas=16, users=4, cbs_antennas=8, epochs=1)
    if args.config:
        base = load_config(args.config, total_antennas=16, users=4, cbs_antennas=8, epochs=1)
    workers = 1 if args.serial else (args.workers or 1)
    rows = validate(oracle_instance(base, seed=args.seed), trials=args.trials, seed=args.seed + 1,
                    workers=workers)
    lines = ["path,user,quantity,empirical,closed_form,rel_error,tolerance,status"]
    for r in rows:
        lines.append(",".join((r.path, str(r.user), r.quantity, _fmt(r.empirical), _fmt(r.closed_form),
                               f"{r.rel_error:.6f}", f"{r.tolerance:g}", "pass" if r.passed else "FAIL")))
    report = "\n".join(lines) + "\n"
    if args.out:
        out, _ = _open_out(args.out)
        with out:
            out.write(report)
    else:
        sys.stdout.write(report)
    failed = sum(not r.passed for r in rows)
    print(f"{len(rows) - failed}/{len(rows)} checks passed", file=sys.stderr)
    return 1 if failed else 0


def cmd_cdf(args) -> int:
    doc = load_result(args.input)
    out, close = _open_out(args.out)
    try:
        n = write_csv(csv_rows(doc), out)
    finally:
        if close:
            out.close()
    print(f"{n} rows", file=sys.stderr)
    return 0


def cmd_percentiles(args) -> int:
    doc = load_result(args.input)
    out, close = _open_out(args.out)
    try:
        out.write(percentile_table(doc))
    finally:
        if close:
            out.close()
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hmmimo", description="Heterogeneous cell-free massive MIMO simulator")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run a Monte Carlo campaign and write a JSON result file")
    sim.add_argument("--config", help="flat key = value config file")
    sim.add_argument("--seed", type=int)
    sim.add_argument("--epochs", type=int)
    sim.add_argument("--schemes", help=f"comma-separated, default {','.join(DEFAULT_SCHEMES)}")
    sim.add_argument("--nb", type=int, help="CBS antennas for the plain 'HmMIMO' scheme")
    sim.add_argument("--out", default="results.json")
    sim.add_argument("--serial", action="store_true", help="run epochs in-process")
    sim.add_argument("--workers", type=int)
    sim.add_argument("--overhead", action="store_true", help="scale SE by the pilot overhead")
    sim.set_defaults(func=cmd_simulate)

    val = sub.add_parser("validate", help="signal-level oracle vs closed forms")
    val.add_argument("--config", help="config file; antenna/user counts are forced to M=16, N_b=8, K=4")
    val.add_argument("--trials", type=int, default=100_000)
    val.add_argument("--seed", type=int, default=2024)
    val.add_argument("--out", help="report path (CSV); stdout if omitted")
    val.add_argument("--serial", action="store_true")
    val.add_argument("--workers", type=int)
    val.set_defaults(func=cmd_validate)

    cdf = sub.add_parser("cdf", help="emit plot-ready CSV samples from a result file")
    cdf.add_argument("input")
    cdf.add_argument("--out", help="CSV path; stdout if omitted")
    cdf.set_defaults(func=cmd_cdf)

    pct = sub.add_parser("percentiles", help="p05/p50/p95 table from a result file")
    pct.add_argument("input")
    pct.add_argument("--out", help="CSV path; stdout if omitted")
    pct.set_defaults(func=cmd_percentiles)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
