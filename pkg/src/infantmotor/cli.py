"""Command-line front end.

Every command writes its outputs plus a ``manifest.json`` describing the
resolved configuration, input hashes and outcome. Exit codes: 0 success,
1 runtime/model error, 2 usage or validation error.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import os
import sys
from pathlib import Path
from typing import Optional

from . import __version__
from .core import Band, DegenerateDatasetError, InfantMotorError, SchemaMismatchError, concat
from .ensemble import DEFAULT_GRIDS, build_ensemble, evaluate_ensemble, grid_search, spot_check
from .evaluate import EvalReport, improvement_over_baseline, render_table, weighted_random_baseline
from .export import export_tree
from .features import FeatureMask, manual_mask, run_selector, select_best_mask, selector_from_mask
from .ingest import IngestError, assign_band, census, normalize_by_awake_time, read_csv, split_age_bands, write_csv
from .learners import FAMILIES, LearnerSpec, fit
from .synth import GeneratorProfile, fig2_profile, generate, paper_census_fixture

log = logging.getLogger("infantmotor")

OUTPUT_ENV = "INFANTMOTOR_OUTPUT_DIR"
BAND_FILES = {Band.ZERO_TO_SIX: "0-6.csv", Band.SIX_TO_TWELVE: "6-12.csv"}


class UsageError(InfantMotorError, ValueError):
    pass


VALIDATION_ERRORS = (UsageError, IngestError, DegenerateDatasetError, SchemaMismatchError,
                     FileNotFoundError, json.JSONDecodeError)


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _resolve(args, config, name, default=None):
    value = getattr(args, name, None)
    if value is not None:
        return value
    return config.get(name, default)


def _out_dir(args, config, fallback: str) -> Path:
    out = _resolve(args, config, "out") or os.environ.get(OUTPUT_ENV) or fallback
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _load_band_csv(path, band: Optional[str] = None):
    ds = read_csv(path)
    if len(ds) == 0:
        raise UsageError(f"{path}: no data rows")
    ds = normalize_by_awake_time(ds)
    if band:
        ds = assign_band(ds, Band.parse(band))
    return ds


def _load_mask(path, dataset) -> FeatureMask:
    if not path:
        return manual_mask(dataset.schema.names)
    mask = FeatureMask.from_json(Path(path).read_text(encoding="utf-8"))
    try:
        return mask.validate(dataset)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _selector(mask: FeatureMask, leakage: str):
    if leakage not in ("fixed", "per-fold"):
        raise UsageError("--leakage must be 'fixed' or 'per-fold'")
    if leakage == "fixed" or mask.method == "manual":
        return None
    return selector_from_mask(mask)


def _write_report(out: Path, stem: str, report: EvalReport, title: Optional[str] = None) -> list[str]:
    (out / f"{stem}.json").write_text(report.to_json() + "\n", encoding="utf-8")
    (out / f"{stem}.txt").write_text(render_table(report, title), encoding="utf-8")
    return [f"{stem}.json", f"{stem}.txt"]


# -- commands -----------------------------------------------------------------

def cmd_preprocess(args, config, manifest):
    ds = read_csv(args.input)
    if len(ds) == 0:
        raise UsageError(f"{args.input}: no data rows")
    manifest["inputs"] = {"input": sha256_file(args.input)}
    if not _resolve(args, config, "no_normalize", False):
        ds = normalize_by_awake_time(ds)
    out = _out_dir(args, config, "preprocessed")
    band = _resolve(args, config, "band")
    summary = {}
    if band:
        banded = assign_band(ds, Band.parse(band))
        name = BAND_FILES.get(banded.band, f"{banded.band.value}.csv")
        write_csv(banded, out / name)
        summary[banded.band.value] = census(banded)
        manifest["outputs"] = [name]
    else:
        low, high, rest = split_age_bands(ds)
        write_csv(low, out / "0-6.csv")
        write_csv(high, out / "6-12.csv")
        write_csv(rest, out / "discarded.csv")
        summary = {"0-6": census(low), "6-12": census(high), "discarded": census(rest)}
        manifest["outputs"] = ["0-6.csv", "6-12.csv", "discarded.csv"]
    write_json(out / "census.json", summary)
    manifest["outputs"].append("census.json")
    manifest["census"] = summary
    return out


def cmd_select(args, config, manifest):
    ds = _load_band_csv(args.input)
    manifest["inputs"] = {"input": sha256_file(args.input)}
    method = _resolve(args, config, "method", "univariate")
    k = _resolve(args, config, "k")
    if method in ("univariate", "rfe", "best") and k is None:
        k = min(8, len(ds.schema))
    if k is not None and not 1 <= k <= len(ds.schema):
        raise UsageError(f"--k must lie in [1, {len(ds.schema)}], got {k}")
    threshold = _resolve(args, config, "corr_threshold", 0.9)
    if _resolve(args, config, "no_prune", False):
        threshold = None
    elif not 0 < threshold <= 1:
        raise UsageError("--corr-threshold must lie in (0, 1]")
    seed = _resolve(args, config, "seed", 0)
    base = LearnerSpec.create(_resolve(args, config, "base", "LogisticRegression"), seed=seed)
    direction = _resolve(args, config, "direction", "forward")

    if method == "best":
        masks = [run_selector(ds, m, k, base, direction, threshold) for m in ("univariate", "rfe", "stepwise")]
        mask, scores = select_best_mask(ds, masks, base)
        mask = FeatureMask(mask.selected, mask.method, dict(mask.params, reconciliation={
            "rule": "highest leave-one-out accuracy of the base learner", "scores": scores}), mask.seed)
    else:
        mask = run_selector(ds, method, k, base, direction, threshold)
    out = Path(_resolve(args, config, "out") or Path(os.environ.get(OUTPUT_ENV, ".")) / "mask.json")
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(mask.to_json() + "\n", encoding="utf-8")
    manifest["outputs"] = [out.name]
    manifest["mask"] = mask.to_dict()
    return out.parent


def _grids_from(args, config):
    path = _resolve(args, config, "grid")
    if path is None:
        return config.get("grids", DEFAULT_GRIDS)
    grids = json.loads(Path(path).read_text(encoding="utf-8"))
    unknown = [f for f in grids if f not in FAMILIES]
    if unknown:
        raise UsageError(f"unknown learner families in grid file: {unknown}")
    return grids


def cmd_spotcheck(args, config, manifest):
    ds = _load_band_csv(args.input, _resolve(args, config, "band"))
    mask = _load_mask(_resolve(args, config, "mask"), ds)
    seed = _resolve(args, config, "seed", 0)
    manifest["inputs"] = {"input": sha256_file(args.input)}
    selector = _selector(mask, _resolve(args, config, "leakage", "fixed"))
    out = _out_dir(args, config, "spotcheck")
    result = spot_check(ds, mask, seed=seed, selector=selector, n_jobs=args.threads)
    write_json(out / "spotcheck.json", result.to_dict())
    outputs = ["spotcheck.json"]
    for entry in result:
        if entry.ok:
            outputs += _write_report(out, f"spotcheck_{entry.spec.family}", entry.report)
    manifest["outputs"] = outputs
    return out


def cmd_baseline(args, config, manifest):
    ds = _load_band_csv(args.input, _resolve(args, config, "band"))
    manifest["inputs"] = {"input": sha256_file(args.input)}
    runs = _resolve(args, config, "runs", 10)
    if runs < 1:
        raise UsageError("--runs must be >= 1")
    out = _out_dir(args, config, "baseline")
    report = weighted_random_baseline(ds, runs, _resolve(args, config, "seed", 0))
    manifest["outputs"] = _write_report(out, "baseline", report, "Weighted Average Baseline")
    return out


def cmd_run(args, config, manifest):
    ds = _load_band_csv(args.input, _resolve(args, config, "band"))
    mask = _load_mask(_resolve(args, config, "mask"), ds)
    seed = _resolve(args, config, "seed", 0)
    leakage = _resolve(args, config, "leakage", "fixed")
    selector = _selector(mask, leakage)
    grids = _grids_from(args, config)
    ensemble_on = _resolve(args, config, "ensemble", True)
    runs = _resolve(args, config, "baseline_runs", 10)
    manifest["inputs"] = {"input": sha256_file(args.input)}
    manifest["mask"] = mask.to_dict()
    manifest["grids"] = grids
    out = _out_dir(args, config, "reports")
    outputs, tables = [], []

    grid = grid_search(ds, mask, grids, seed=seed, selector=selector, n_jobs=args.threads)
    write_json(out / "grid.json", grid.to_dict())
    outputs.append("grid.json")
    manifest["outputs"] = outputs
    if not grid.best.ok:
        raise RuntimeError("every grid configuration failed; see grid.json")

    baseline = weighted_random_baseline(ds, runs, seed)
    outputs += _write_report(out, "baseline", baseline, "Weighted Average Baseline")
    tables.append(render_table(baseline, "Weighted Average Baseline"))

    series = [("baseline", baseline.accuracy)]
    for family in FAMILIES:
        entry = grid.best_of(family)
        if entry is None:
            continue
        outputs += _write_report(out, f"report_{family}", entry.report, str(entry.spec))
        tables.append(render_table(entry.report, str(entry.spec)))
        series.append((family, entry.report.accuracy))

    improvement = {"best_single": {"spec": grid.best.spec.to_dict(),
                                   "points": improvement_over_baseline(grid.best.report, baseline)}}
    top3 = []
    if ensemble_on:
        ens = build_ensemble(grid)
        top3 = [m.family for m in ens.members]
        report = evaluate_ensemble(ds, mask, ens, selector=selector)
        outputs += _write_report(out, "ensemble", report, report.name)
        tables.append(render_table(report, report.name))
        write_json(out / "ensemble_spec.json", ens.to_dict())
        outputs.append("ensemble_spec.json")
        improvement["ensemble"] = {"members": top3, "points": improvement_over_baseline(report, baseline)}
        series.append(("ensemble", report.accuracy))
    write_json(out / "improvement.json", improvement)
    outputs.append("improvement.json")

    with open(out / "accuracy_comparison.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["model", "average_accuracy"])
        writer.writerows((name, repr(acc)) for name, acc in series)
    outputs.append("accuracy_comparison.csv")

    features = mask.selected
    tree_entry = grid.best_of("DecisionTree")
    if tree_entry is not None:
        model = fit(tree_entry.spec, ds, features)
        (out / "tree.txt").write_text(export_tree(model, "text"), encoding="utf-8")
        (out / "tree.dot").write_text(export_tree(model, "dot"), encoding="utf-8")
        outputs += ["tree.txt", "tree.dot"]
    forest_entry = grid.best_of("RandomForest")
    if forest_entry is not None and "RandomForest" in top3:
        model = fit(forest_entry.spec, ds, features)
        (out / "forest_tree0.txt").write_text(export_tree(model, "text"), encoding="utf-8")
        (out / "forest_tree0.dot").write_text(export_tree(model, "dot"), encoding="utf-8")
        outputs += ["forest_tree0.txt", "forest_tree0.dot"]

    (out / "tables.txt").write_text("\n".join(tables), encoding="utf-8")
    outputs.append("tables.txt")
    manifest["outputs"] = outputs
    manifest["leakage_mode"] = leakage
    return out


def cmd_export_tree(args, config, manifest):
    ds = _load_band_csv(args.input, _resolve(args, config, "band"))
    mask = _load_mask(_resolve(args, config, "mask"), ds)
    manifest["inputs"] = {"input": sha256_file(args.input)}
    params = _resolve(args, config, "params") or {}
    if isinstance(params, str):
        params = json.loads(params)
    try:
        spec = LearnerSpec.create("DecisionTree", seed=_resolve(args, config, "seed", 0), **params)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    model = fit(spec, ds, mask.selected)
    fmt = _resolve(args, config, "format", "text")
    text = export_tree(model, fmt)
    out = _resolve(args, config, "out")
    if out is None:
        sys.stdout.write(text)
        return None
    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(text, encoding="utf-8")
    manifest["outputs"] = [out.name]
    return out.parent


def cmd_synth(args, config, manifest):
    seed = _resolve(args, config, "seed", 0)
    profile = _resolve(args, config, "profile")
    preset = _resolve(args, config, "preset")
    if profile:
        ds = generate(GeneratorProfile.from_json(Path(profile).read_text(encoding="utf-8")))
    elif preset == "fig2":
        ds = generate(fig2_profile(seed))
    else:
        band = _resolve(args, config, "band", "all")
        sep = _resolve(args, config, "separation", 0.0)
        if sep < 0:
            raise UsageError("--separation must be >= 0")
        if band == "all":
            ds = concat([paper_census_fixture(Band.ZERO_TO_SIX, sep, seed),
                         paper_census_fixture(Band.SIX_TO_TWELVE, sep, seed + 1)])
        else:
            ds = paper_census_fixture(Band.parse(band), sep, seed)
    out = Path(_resolve(args, config, "out") or Path(os.environ.get(OUTPUT_ENV, ".")) / "synthetic.csv")
    out.parent.mkdir(parents=True, exist_ok=True)
    write_csv(ds, out)
    manifest["outputs"] = [out.name]
    manifest["census"] = census(ds)
    return out.parent


COMMANDS = {
    "preprocess": cmd_preprocess,
    "select": cmd_select,
    "spotcheck": cmd_spotcheck,
    "run": cmd_run,
    "baseline": cmd_baseline,
    "export-tree": cmd_export_tree,
    "synth": cmd_synth,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="infantmotor", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("--config", help="JSON file whose keys mirror the long options; flags override it")
    p.add_argument("--threads", type=int, default=1, help="worker processes for grid cells (results unchanged)")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def band_opt(sp):
        sp.add_argument("--band", choices=["0-6", "6-12"], help="validate that every record lies in this band")

    sp = sub.add_parser("preprocess", help="normalise counts and split into age bands")
    sp.add_argument("input")
    sp.add_argument("--out", help="output directory")
    sp.add_argument("--no-normalize", dest="no_normalize", action="store_const", const=True)
    band_opt(sp)

    sp = sub.add_parser("select", help="feature selection; writes a mask JSON")
    sp.add_argument("input")
    sp.add_argument("--method", choices=["univariate", "rfe", "stepwise", "best"])
    sp.add_argument("--k", type=int)
    sp.add_argument("--corr-threshold", dest="corr_threshold", type=float)
    sp.add_argument("--no-prune", dest="no_prune", action="store_const", const=True)
    sp.add_argument("--base", choices=FAMILIES, help="learner used by rfe/stepwise")
    sp.add_argument("--direction", choices=["forward", "backward"])
    sp.add_argument("--seed", type=int)
    sp.add_argument("--out", help="mask JSON path")

    for name, help_ in (("spotcheck", "leave-one-out of every family at default parameters"),
                        ("run", "grid search, ensemble, baseline and tree export")):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("input")
        sp.add_argument("--mask")
        sp.add_argument("--leakage", choices=["fixed", "per-fold"])
        sp.add_argument("--seed", type=int)
        sp.add_argument("--out", help="output directory")
        band_opt(sp)
        if name == "run":
            sp.add_argument("--grid", help="JSON mapping family -> {param: [values]}")
            sp.add_argument("--ensemble", dest="ensemble", action="store_const", const=True)
            sp.add_argument("--no-ensemble", dest="ensemble", action="store_const", const=False)
            sp.add_argument("--baseline-runs", dest="baseline_runs", type=int)

    sp = sub.add_parser("baseline", help="weighted random baseline")
    sp.add_argument("input")
    sp.add_argument("--runs", type=int)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--out", help="output directory")
    band_opt(sp)

    sp = sub.add_parser("export-tree", help="fit a C4.5-style tree and export it")
    sp.add_argument("input")
    sp.add_argument("--mask")
    sp.add_argument("--params", help='JSON hyperparameters, e.g. \'{"max_depth": 2}\'')
    sp.add_argument("--format", choices=["text", "dot"])
    sp.add_argument("--seed", type=int)
    sp.add_argument("--out", help="output file (default: stdout)")
    band_opt(sp)

    sp = sub.add_parser("synth", help="write a synthetic dataset")
    sp.add_argument("--band", choices=["0-6", "6-12", "all"])
    sp.add_argument("--separation", type=float, help="TD-AR mean gap in sds on the informative features")
    sp.add_argument("--profile", help="generator profile JSON")
    sp.add_argument("--preset", choices=["fig2"])
    sp.add_argument("--seed", type=int)
    sp.add_argument("--out", help="output CSV path")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    config = {}
    if args.config:
        try:
            config = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            print(f"error: cannot read config: {exc}", file=sys.stderr)
            return 2
    manifest = {"tool": "infantmotor", "version": __version__, "command": args.command,
                "arguments": {k: v for k, v in sorted(vars(args).items()) if k not in ("verbose",)},
                "config": config}
    out_dir = None
    code = 0
    try:
        out_dir = COMMANDS[args.command](args, config, manifest)
        manifest["status"] = "ok"
    except VALIDATION_ERRORS as exc:
        code = 2
        manifest.update(status="error", error=f"{type(exc).__name__}: {exc}")
        print(f"error: {exc}", file=sys.stderr)
    except Exception as exc:  # noqa: BLE001 - reported through the exit code and manifest
        code = 1
        manifest.update(status="error", error=f"{type(exc).__name__}: {exc}")
        log.debug("failure", exc_info=True)
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
    if out_dir is None:
        out = _resolve(args, config, "out")
        if out is not None:
            out_path = Path(out)
            out_dir = out_path if not out_path.suffix else out_path.parent
    if out_dir is not None:
        try:
            Path(out_dir).mkdir(parents=True, exist_ok=True)
            write_json(Path(out_dir) / "manifest.json", manifest)
        except OSError as exc:
            print(f"warning: could not write manifest: {exc}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
