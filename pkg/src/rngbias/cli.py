"""Command-line front end.

Exit codes: 0 success, 2 input or validation error, 3 I/O error.

Flag to symbol mapping:

  --p11, --p00       self-transition probabilities p11, p00 of the bit source
  --n-bits           sequence length N
  --z0               envelope multiplier z0 (1.96 for 95%)
  --coverage         fraction of studies the fitted envelope (factor V) must hold
  --wp               funnel centre (most representative effect size)
  --n-threshold      study size splitting small from large studies
  --large-quantile   top size fraction used to estimate the centre
  --windows          R/S window lengths n
  --shuffles         number of randomized copies for the shuffle baseline
  --value            series variable for record input (pi or z)

"-" as a path reads stdin (inputs) or writes stdout (synth output).
Without --seed a seed is drawn from entropy and printed to stderr.
"""
from __future__ import annotations

import argparse
import json
import secrets
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import core, dataio, markov, report, svg

EXIT_OK, EXIT_INPUT, EXIT_IO = 0, 2, 3


class UsageError(ValueError):
    pass


def _seed(args) -> int:
    if args.seed is None:
        args.seed = secrets.randbits(32)
        print(f"seed: {args.seed}", file=sys.stderr)
    return args.seed


def _out_dir(path: str) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _emit_json(args, doc: dict) -> None:
    if getattr(args, "format", "text") == "json":
        sys.stdout.write(json.dumps(doc, indent=2, allow_nan=False) + "\n")


def cmd_simulate(args) -> int:
    params = markov.MarkovParams(args.p11, args.p00)
    seed = _seed(args)
    seq = markov.generate(params, args.n_bits, seed)
    out = _out_dir(args.out)
    if args.packed:
        (out / "bits.bin").write_bytes(markov.pack_bits(seq))
    else:
        (out / "bits.txt").write_text("\n".join(map(str, seq.bits.tolist())) + "\n", encoding="ascii")
    th = markov.theory(params, args.n_bits)
    sidecar = {
        "schema_version": dataio.SCHEMA_VERSION,
        "kind": "MarkovSimulation",
        "p11": args.p11,
        "p00": args.p00,
        "n_bits": args.n_bits,
        "seed": seed,
        "encoding": "packed-msb-first" if args.packed else "text-lines",
        "theory": dataio.to_jsonable(th),
        "sample_mean": dataio.to_jsonable(seq.mean()),
    }
    (out / "theory.json").write_text(json.dumps(sidecar, indent=2) + "\n", encoding="utf-8")
    _emit_json(args, sidecar)
    return EXIT_OK


def cmd_synth(args) -> int:
    censor = None
    if args.censor_band is not None:
        lo, hi = args.censor_band
        censor = dataio.CensorRule(lo, hi, args.censor_max_n)
    spec = dataio.SynthSpec(
        n_studies=args.n_studies,
        size_range=(args.size_min, args.size_max),
        markov_params=markov.MarkovParams(args.p11, args.p00),
        censoring=censor,
        seed=_seed(args),
        condition=core.Condition.parse(args.condition),
    )
    text = dataio.write_records(dataio.synthesize(spec))
    if args.out == "-":
        sys.stdout.write(text)
    else:
        Path(args.out).write_text(text, encoding="utf-8")
    return EXIT_OK


def _read(path: str):
    records = dataio.read_records(path)
    if not records:
        raise UsageError(f"{path}: no records")
    return records


def cmd_funnel(args) -> int:
    records = _read(args.records)
    d = report.funnel_diagnostics(
        records, args.z0, args.coverage, args.n_threshold, args.large_quantile, args.wp
    )
    out = _out_dir(args.out)
    bundle = report.Bundle(out)
    report._funnel_outputs(bundle, ".", records, d, args.z0, args.title)
    doc = {"schema_version": dataio.SCHEMA_VERSION, "kind": "FunnelDiagnostics"}
    doc.update(dataio.to_jsonable(d, args.full_precision))
    (out / "diagnostics.json").write_text(json.dumps(doc, indent=2, allow_nan=False) + "\n", encoding="utf-8")
    _emit_json(args, doc)
    return EXIT_OK


def _read_series(args) -> np.ndarray:
    if args.input == "-":
        text = sys.stdin.read()
    else:
        text = Path(args.input).read_text(encoding="utf-8")
    first = text.lstrip().split("\n", 1)[0]
    if "study_id" in first:
        import io

        records = dataio.read_records(io.StringIO(text))
        return dataio.records_to_series(records, args.value).values
    try:
        return np.array([float(v) for v in text.split()])
    except ValueError as exc:
        raise UsageError(f"{args.input}: {exc}") from None


def cmd_hurst(args) -> int:
    x = _read_series(args)
    windows = [int(w) for w in args.windows.split(",")] if args.windows else None
    seed = _seed(args)
    d = report.hurst_diagnostics(x, args.shuffles, seed, windows)
    rep = d["hurst"]
    base = d["randomized"]
    out = _out_dir(args.out)
    doc = {"schema_version": dataio.SCHEMA_VERSION, "kind": "HurstReport", "seed": seed}
    doc.update(dataio.to_jsonable(rep, args.full_precision))
    doc["randomized"] = dataio.to_jsonable(base, args.full_precision)
    (out / "hurst.json").write_text(json.dumps(doc, indent=2, allow_nan=False) + "\n", encoding="utf-8")
    dataio.write_report(rep, "csv", out / "rs.csv", args.full_precision)
    (out / "rs_loglog.svg").write_text(svg.render_svg("rs_loglog", rep, title=args.title), encoding="utf-8")
    _emit_json(args, doc)
    return EXIT_OK


def cmd_report(args) -> int:
    spec = None
    records = None
    if args.spec:
        spec = json.loads(Path(args.spec).read_text(encoding="utf-8"))
    if args.records:
        records = _read(args.records)
    if args.seed is None and spec is not None and "seed" in spec:
        args.seed = int(spec["seed"])
    if args.seed is None and spec is None and records is None:
        args.seed = int(report.load_demo_spec()["seed"])
    seed = _seed(args)
    bundle = report.build_report(spec, seed, args.out, records)
    _emit_json(args, dataio.to_jsonable(bundle.summary))
    for name, err in bundle.errors.items():
        print(f"section {name} failed: {err}", file=sys.stderr)
    return EXIT_INPUT if bundle.errors else EXIT_OK


def _pair(text: str) -> tuple[float, float]:
    lo, hi = (float(v) for v in text.split(","))
    return lo, hi


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="rngbias",
        description=__doc__,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, seed=True):
        if seed:
            sp.add_argument("--seed", type=int, default=None, help="random seed (drawn and printed if omitted)")
        sp.add_argument("--format", choices=["text", "json"], default="text", help="json: also print diagnostics to stdout")
        sp.add_argument("--full-precision", action="store_true", help="do not round numbers to 6 significant digits")

    s = sub.add_parser("simulate", help="simulate a two-state Markov bit source")
    s.add_argument("--p11", type=float, required=True, help="self-transition probability 1 -> 1")
    s.add_argument("--p00", type=float, required=True, help="self-transition probability 0 -> 0")
    s.add_argument("--n-bits", type=int, default=10**6)
    s.add_argument("--packed", action="store_true", help="write bits.bin (8 bits per byte, MSB first)")
    s.add_argument("--out", required=True, help="output directory")
    common(s)
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("synth", help="synthesize a study-record CSV")
    s.add_argument("--n-studies", type=int, default=380)
    s.add_argument("--p11", type=float, default=0.5)
    s.add_argument("--p00", type=float, default=0.5)
    s.add_argument("--size-min", type=int, default=100)
    s.add_argument("--size-max", type=int, default=10**6)
    s.add_argument("--censor-band", type=_pair, default=None, metavar="LO,HI", help="drop studies with pi in [LO, HI)")
    s.add_argument("--censor-max-n", type=int, default=10**5, help="censor only studies smaller than this")
    s.add_argument("--condition", default="Treatment", choices=[c.value for c in core.Condition])
    s.add_argument("--out", default="-", help="output CSV path or - for stdout")
    common(s)
    s.set_defaults(func=cmd_synth)

    s = sub.add_parser("funnel", help="funnel plot, envelopes, coverage and V fit for a record CSV")
    s.add_argument("records", help="record CSV path or - for stdin")
    s.add_argument("--z0", type=float, default=1.96)
    s.add_argument("--coverage", type=float, default=0.95, help="target coverage for the fitted envelope")
    s.add_argument("--wp", type=float, default=None, help="funnel centre (default: large-study estimate)")
    s.add_argument("--n-threshold", type=int, default=10**5, help="small/large split for asymmetry")
    s.add_argument("--large-quantile", type=float, default=0.1, help="top size fraction used for the centre estimate")
    s.add_argument("--title", default="")
    s.add_argument("--out", required=True, help="output directory")
    common(s, seed=False)
    s.set_defaults(func=cmd_funnel)

    s = sub.add_parser("hurst", help="rescaled-range analysis with a shuffle baseline")
    s.add_argument("input", help="record CSV or whitespace-separated numbers; - for stdin")
    s.add_argument("--value", choices=["pi", "z"], default="pi", help="series value for record input")
    s.add_argument("--windows", default=None, help="comma-separated window lengths (default 8, 16, ... up to n/2)")
    s.add_argument("--shuffles", type=int, default=10)
    s.add_argument("--title", default="")
    s.add_argument("--out", required=True, help="output directory")
    common(s)
    s.set_defaults(func=cmd_hurst)

    s = sub.add_parser("report", help="full analysis bundle on the demo spec, a spec file, or a record CSV")
    s.add_argument("--spec", default=None, help="JSON spec (default: bundled demo spec)")
    s.add_argument("--records", default=None, help="record CSV to analyse instead of synthetic databases")
    s.add_argument("--out", required=True, help="output directory")
    common(s)
    s.set_defaults(func=cmd_report)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ValueError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
