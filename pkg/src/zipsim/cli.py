"""Command-line entry point: ``zipsim {simulate,analyze,evaluate,compare,import}``.

Typical flow::

    zipsim simulate --scenario office --setting PA+H --seeds 0 1 2 --out runs/pah
    zipsim evaluate runs/pah
    zipsim compare runs/pa/summary.json runs/pah/summary.json --out runs/cmp
"""

from __future__ import annotations

import argparse
import json
import logging
import shutil
import sys
from pathlib import Path

from .envsim import SETTINGS
from .harness import (
    ANALYSES,
    MODALITIES,
    ExperimentConfig,
    compare_settings,
    evaluate_directory,
    run_experiment,
    simulate_to_disk,
)
from .io import SchemaError, import_dataset, save_bundle

log = logging.getLogger("zipsim")


def _seeds(args) -> tuple:
    if args.seeds:
        return tuple(args.seeds)
    return (args.seed,)


def _experiment(args, analyses=ANALYSES) -> ExperimentConfig:
    return ExperimentConfig(
        scenario=args.scenario, setting=args.setting, modalities=tuple(args.modalities),
        seeds=_seeds(args), out=args.out, overrides=tuple(args.set), analyses=tuple(analyses),
        humans=args.humans, silent=args.silent, workers=args.workers,
        save_recordings=not getattr(args, "no_recordings", False))


def _add_run_flags(p: argparse.ArgumentParser, out_required: bool) -> None:
    p.add_argument("--scenario", default="office", help="preset (home, office) or layout JSON path")
    p.add_argument("--setting", default="PA+H", choices=SETTINGS)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--seeds", type=int, nargs="+", help="several seeds (overrides --seed)")
    p.add_argument("--out", required=out_required, help="output directory")
    p.add_argument("--modalities", nargs="+", default=list(MODALITIES), choices=MODALITIES)
    p.add_argument("--humans", default="auto", choices=("auto", "none", "office_two_persons"))
    p.add_argument("--silent", action="store_true", help="near-silent ambient audio")
    p.add_argument("--workers", type=int, default=1, help="worker processes across seeds")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override a default constant (repeatable)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="zipsim", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate recordings for one setting and save them")
    _add_run_flags(p, out_required=True)

    p = sub.add_parser("analyze", help="similarity and entropy for saved recordings")
    p.add_argument("input", help="directory written by simulate or import")
    p.add_argument("--out", help="artifact directory (default: the input directory)")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")

    p = sub.add_parser("evaluate", help="analysis plus ZIP/ZIA error rates")
    p.add_argument("input", nargs="?", help="saved recordings; omit to simulate and evaluate in one go")
    p.add_argument("--no-recordings", action="store_true", help="do not keep recordings (one-go mode)")
    _add_run_flags(p, out_required=False)

    p = sub.add_parser("compare", help="side-by-side table of several summaries")
    p.add_argument("summaries", nargs="+", help="summary.json files or run directories")
    p.add_argument("--out", help="directory for comparison.csv/json")

    p = sub.add_parser("import", help="validate an external dataset and copy it into bundle form")
    p.add_argument("input", help="directory with manifest.json, WAV and CSV files")
    p.add_argument("--out", help="write a normalised copy here")
    return ap


def _print_summary(summary) -> None:
    for m, per_len in sorted(summary.similarity.items()):
        for length, s in sorted(per_len.items()):
            c, n = s["colocated"], s["noncolocated"]
            print(f"{m:6s} snippet={length:>8s}  colocated {_fmt(c)}  non-colocated {_fmt(n)}")
    for m, e in sorted(summary.entropy.items()):
        print(f"{m:6s} entropy {e['mean']:.3f} (bins={e['bins']})")
    for name, rep in sorted(summary.schemes.items()):
        extra = ""
        if name == "zip":
            extra = f"  balanced keys {rep['balanced_key_percent']:.1f}%"
        elif rep.get("enough_power_percent") is not None:
            extra = f"  enough power {rep['enough_power_percent']:.1f}%"
        eer = "n/a" if rep.get("eer") is None else f"{rep['eer']:.3f}"
        print(f"{name:6s} EER {eer}{extra}")


def _fmt(s: dict) -> str:
    if s["mean"] is None:
        return "n/a"
    return f"{s['mean']:.3f} +/- {s['sd']:.3f} (n={s['n']})"


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "simulate":
            manifests = simulate_to_disk(_experiment(args))
            for m in manifests:
                print(Path(args.out) / m)
        elif args.command == "analyze":
            summary = evaluate_directory(args.input, args.out, analyses=("similarity", "entropy"),
                                         overrides=args.set)
            _print_summary(summary)
        elif args.command == "evaluate":
            if args.input:
                summary = evaluate_directory(args.input, args.out, overrides=args.set)
            else:
                summary = run_experiment(_experiment(args))
            _print_summary(summary)
        elif args.command == "compare":
            paths = [Path(p) / "summary.json" if Path(p).is_dir() else Path(p) for p in args.summaries]
            rows = compare_settings([json.loads(p.read_text(encoding="utf-8")) for p in paths], args.out)
            for r in rows:
                ratio = "" if r["entropy_ratio"] is None else f"  entropy x{r['entropy_ratio']:.2f}"
                print(f"{r['run']:24s} {r['modality']:6s}{ratio}")
        elif args.command == "import":
            bundle = import_dataset(args.input)
            print(f"{len(bundle.recordings)} recordings, modalities {sorted(bundle.modalities())}")
            if args.out:
                if Path(args.out).resolve() == Path(args.input).resolve():
                    raise ValueError("--out must differ from the input directory")
                if Path(args.out).exists():
                    shutil.rmtree(args.out)
                save_bundle(bundle, args.out)
    except (SchemaError, ValueError, KeyError, OSError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"zipsim: error: {msg}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
