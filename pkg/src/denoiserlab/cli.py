"""Command-line entry point.

Subcommands: gen-data, fit, sample, verify, report. Every command is driven
by one YAML config (sections: dataset, denoiser, sampler, verify,
output_dir) plus dotted-path ``--set`` overrides, and writes into a
self-contained output directory: the config copy, seeds, and library
versions are enough to reproduce every file byte for byte.

Exit codes: 0 on success (a FAILed hypothesis is data, not a crash),
nonzero only for errors.
"""

from __future__ import annotations

import argparse
import csv
import json
import shutil
import sys
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .config import apply_overrides, load_config, section
from .datasets import (
    Dataset,
    GmmSpec,
    default_3gmm_spec,
    gmm_cov,
    gmm_mean,
    load_dataset,
    matched_moment_specs,
    sample_gmm,
    sample_tile_images,
    save_dataset,
    shuffle_tiles,
)
from .denoisers import (
    ExactGmmDenoiser,
    exact_gaussian_denoiser,
    fit_linear,
    fit_mlp,
    fit_patchwise,
    fit_polynomial_exact,
    fit_polynomial_rf,
    fit_rank_k_linear,
    log_spaced_sigma_grid,
)
from .errors import ValidationError
from .pipeline import DEFAULT_STEPS, LINEAR_STEPS, FittedModel, fit_model, sample_model
from .plotting import line_plot, sample_figure
from .rng import derive_seed
from .sampler import cosine_schedule
from .stats import empirical_cov, empirical_mean
from .verification import (
    THRESHOLDS,
    Thresholds,
    VerificationReport,
    check_linear_gaussian,
    check_linear_matched_pair,
    check_log_polynomial_family,
    check_manifold,
    check_memorization_tradeoff,
    check_moment_dependence,
    check_rank_k,
    negative_controls,
)

LINEAR_FAMILIES = {"linear", "rank_k_linear", "exact_gaussian"}


def _versions() -> dict:
    return {"denoiserlab": __version__, "numpy": np.__version__, "scipy": scipy.__version__}


def _write_json(path: Path, doc: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)


def _prepare_out(cfg: dict, config_path: Path, command: str) -> Path:
    out = Path(cfg.get("output_dir", "runs/default"))
    out.mkdir(parents=True, exist_ok=True)
    copied = out / "config.yaml"
    if config_path.resolve() != copied.resolve():
        shutil.copyfile(config_path, copied)
    run_file = out / "run.json"
    runs = {}
    if run_file.exists():
        with open(run_file) as fh:
            runs = json.load(fh)
    runs[command] = {"versions": _versions()}
    _write_json(run_file, runs)
    return out


def cmd_gen_data(cfg: dict, out: Path) -> int:
    sec = section(cfg, "dataset")
    kind = sec.get("kind", "gmm3")
    n = int(sec.get("n", 10_000))
    seed = int(sec.get("seed", 0))
    meta: dict = {"kind": kind, "n": n, "seed": seed}

    if kind == "gmm3":
        spec = default_3gmm_spec()
        data = sample_gmm(spec, n, seed, name="gmm3")
        save_dataset(data, out / "data.csv")
        meta["spec"] = spec.to_dict()
        meta["analytic_mean"] = gmm_mean(spec).tolist()
        meta["analytic_cov"] = gmm_cov(spec).tolist()
    elif kind == "gmm":
        spec = GmmSpec.from_dict(sec["spec"])
        data = sample_gmm(spec, n, seed, name=cfg.get("name", "gmm"))
        save_dataset(data, out / "data.csv")
        meta["spec"] = spec.to_dict()
        meta["analytic_mean"] = gmm_mean(spec).tolist()
        meta["analytic_cov"] = gmm_cov(spec).tolist()
    elif kind == "matched_pair":
        spec3, spec2 = matched_moment_specs()
        ds3 = sample_gmm(spec3, n, derive_seed(seed, 0), name="matched-3gmm")
        ds2 = sample_gmm(spec2, n, derive_seed(seed, 1), name="matched-2gmm")
        save_dataset(ds3, out / "data_a.csv")
        save_dataset(ds2, out / "data_b.csv")
        mean_gap = float(np.abs(gmm_mean(spec3) - gmm_mean(spec2)).max())
        cov_gap = float(np.abs(gmm_cov(spec3) - gmm_cov(spec2)).max())
        meta.update(
            spec_a=spec3.to_dict(),
            spec_b=spec2.to_dict(),
            analytic_mean=gmm_mean(spec3).tolist(),
            analytic_cov=gmm_cov(spec3).tolist(),
            analytic_moment_gaps={"mean_max_abs": mean_gap, "cov_max_abs": cov_gap},
        )
    elif kind == "tiles":
        side = int(sec.get("side", 8))
        tile = int(sec.get("tile", 4))
        data = sample_tile_images(n, side, tile, seed, noise=float(sec.get("noise", 0.05)))
        meta.update(side=side, tile=tile)
        if sec.get("pair_shuffled", False):
            shuffled = shuffle_tiles(data, tile, derive_seed(seed, 1))
            save_dataset(data, out / "data_a.csv")
            save_dataset(shuffled, out / "data_b.csv")
            meta["pair_shuffled"] = True
        else:
            save_dataset(data, out / "data.csv")
    elif kind == "csv":
        data = load_dataset(sec["path"])
        save_dataset(data, out / "data.csv")
        meta["source"] = str(sec["path"])
    else:
        raise ValidationError(f"unknown dataset kind {kind!r}")

    _write_json(out / "dataset.json", meta)
    print(f"gen-data: wrote dataset under {out}")
    return 0


def _load_train_data(cfg: dict, out: Path) -> Dataset:
    sec = section(cfg, "denoiser", required=False)
    path = Path(sec.get("data", out / "data.csv"))
    if not path.exists():
        raise ValidationError(f"training data {path} not found; run gen-data first")
    return load_dataset(path)


def _build_fitter(cfg: dict, out: Path, data: Dataset):
    sec = section(cfg, "denoiser")
    family = sec.get("family", "linear")
    seed = int(sec.get("seed", 0))
    steps = section(cfg, "sampler", required=False).get("steps")
    steps = int(steps) if steps else (LINEAR_STEPS if family in LINEAR_FAMILIES else DEFAULT_STEPS)
    schedule = cosine_schedule(steps)

    if family == "linear":
        return fit_linear, family
    if family == "rank_k_linear":
        k = int(sec["k"])
        return (lambda d: fit_rank_k_linear(d, k)), family
    if family == "exact_gaussian":
        return (lambda d: exact_gaussian_denoiser(empirical_mean(d), empirical_cov(d))), family
    if family == "exact_gmm":
        with open(out / "dataset.json") as fh:
            meta = json.load(fh)
        if "spec" not in meta:
            raise ValidationError("exact_gmm requires a gmm dataset.json with its spec")
        spec = GmmSpec.from_dict(meta["spec"])

        def fitter(d: Dataset, spec=spec):
            from .sampler import Standardizer
            from .verification import _standardized_spec

            return ExactGmmDenoiser(_standardized_spec(spec, Standardizer.fit(data)))

        return fitter, family
    if family in ("polynomial", "polynomial_rf"):
        degree = int(sec.get("degree", 3))
        levels = int(sec.get("sigma_levels", 20))
        lo, hi = schedule.sigma_range()
        grid = log_spaced_sigma_grid(lo, hi, levels)
        ridge = sec.get("ridge")
        ridge = None if ridge is None else float(ridge)
        if family == "polynomial":
            return (
                lambda d: fit_polynomial_exact(d, degree, grid, ridge=ridge, seed=seed)
            ), family
        width = int(sec.get("width", 1024))
        return (
            lambda d: fit_polynomial_rf(d, degree, width, grid, ridge=ridge, seed=seed)
        ), family
    if family == "mlp":
        h = int(sec.get("h", 1))
        width = int(sec.get("width", 64))
        epochs = int(sec.get("epochs", 500))
        lr = float(sec.get("lr", 1e-4))
        batch = int(sec.get("batch_size", 128))
        return (
            lambda d: fit_mlp(d, h=h, width=width, epochs=epochs, lr=lr, seed=seed,
                              batch_size=batch, sigma_range=schedule.sigma_range())
        ), family
    if family == "patch_linear":
        patch = int(sec.get("patch_size", 4))
        stride = sec.get("stride")
        stride = None if stride is None else int(stride)
        return (lambda d: fit_patchwise(d, fit_linear, patch, stride=stride)), family
    raise ValidationError(f"unknown denoiser family {family!r}")


def cmd_fit(cfg: dict, out: Path) -> int:
    data = _load_train_data(cfg, out)
    fitter, family = _build_fitter(cfg, out, data)
    model = fit_model(data, fitter, diagnostics={"family": family, "train_data": data.name})
    model.save(out / "model.json")

    diag: dict = {"family": family, "descriptor": model.denoiser.descriptor}
    den = model.denoiser
    if hasattr(den, "loss_curve") and den.loss_curve:
        diag["loss_curve"] = [float(v) for v in den.loss_curve]
        line_plot(range(len(den.loss_curve)), den.loss_curve, out / "loss_curve.svg",
                  "epoch", "training loss", title=f"{family} fit", logy=True)
    if hasattr(den, "diagnostics") and den.diagnostics:
        diag["fit"] = {
            k: (list(map(float, v)) if isinstance(v, (list, tuple)) else v)
            for k, v in den.diagnostics.items()
        }
    if hasattr(den, "eig"):
        diag["eigenvalues"] = den.eig.eigenvalues.tolist()
    _write_json(out / "fit_diagnostics.json", diag)
    print(f"fit: wrote {out / 'model.json'} ({family})")
    return 0


def cmd_sample(cfg: dict, out: Path) -> int:
    model_path = out / "model.json"
    if not model_path.exists():
        raise ValidationError(f"{model_path} not found; run fit first")
    model = FittedModel.load(model_path)
    sec = section(cfg, "sampler", required=False)
    family = model.diagnostics.get("family", "linear")
    steps = sec.get("steps")
    steps = int(steps) if steps else (LINEAR_STEPS if family in LINEAR_FAMILIES else DEFAULT_STEPS)
    n = int(sec.get("n", 2000))
    seed = int(sec.get("seed", 0))

    samples, run = sample_model(model, steps, n, seed, name=f"{family}-generated")
    save_dataset(samples, out / "samples.csv")
    meta = run.to_meta()
    meta["versions"] = _versions()
    meta["standardizer"] = model.scaler.to_dict()
    _write_json(out / "sample_run.json", meta)

    target = None
    for candidate in ("data.csv", "data_a.csv"):
        if (out / candidate).exists():
            target = load_dataset(out / candidate)
            break
    if sample_figure(target, samples, out / "samples.svg", title=family):
        print(f"sample: wrote samples.csv and samples.svg under {out}")
    else:
        print(f"sample: wrote samples.csv under {out} (no figure for dim > 2)")
    return 0


def _thresholds_from_cfg(sec: dict) -> Thresholds:
    overrides = sec.get("thresholds") or {}
    if not overrides:
        return THRESHOLDS
    base = THRESHOLDS.as_dict()
    unknown = set(overrides) - set(base)
    if unknown:
        raise ValidationError(f"unknown threshold names: {sorted(unknown)}")
    base.update(overrides)
    ints = {"permutation_shuffles", "energy_test_max_points"}
    return Thresholds(**{k: (int(v) if k in ints else v) for k, v in base.items()})


def _run_one_check(name: str, params: dict, data: Dataset | None, n: int, seed: int,
                   th: Thresholds) -> list[VerificationReport]:
    def need_data() -> Dataset:
        if data is None:
            raise ValidationError(f"check {name!r} needs a dataset; run gen-data first")
        return data

    if name == "linear_gaussian":
        return [check_linear_gaussian(need_data(), n, seed, thresholds=th)]
    if name == "matched_pair":
        return [check_linear_matched_pair(seed, n, thresholds=th)]
    if name == "rank_k":
        return [check_rank_k(need_data(), int(params.get("k", 1)), n, seed, thresholds=th)]
    if name == "moment_dependence":
        from .datasets import matched_moment_pair

        pair = matched_moment_pair(derive_seed(seed, 50), int(params.get("n_train", 20_000)))
        return [check_moment_dependence(pair, int(params.get("degree", 1)), n, seed,
                                        thresholds=th)]
    if name == "log_polynomial":
        return [check_log_polynomial_family(need_data(), int(params.get("degree", 3)),
                                            n, seed, thresholds=th)]
    if name == "manifold":
        return [check_manifold(need_data(), int(params.get("h", 1)), n, seed,
                               thresholds=th, train=params.get("train"))]
    if name == "memorization":
        h_values = [int(h) for h in params.get("h_values", [100, 50, 10, 2])]
        return [check_memorization_tradeoff(need_data(), h_values, n, seed,
                                            thresholds=th, train=params.get("train"))]
    if name == "controls":
        return negative_controls(seed, thresholds=th)
    raise ValidationError(f"unknown check {name!r}")


def _summarize(out: Path) -> None:
    reports_dir = out / "reports"
    reports = []
    for path in sorted(reports_dir.glob("*.json")):
        reports.append(VerificationReport.load(path))

    lines = [
        "# Verification summary",
        "",
        "| check | kind | verdict | statistics | failed clauses |",
        "|---|---|---|---|---|",
    ]
    rows = []
    for rep in reports:
        kind = "control" if rep.name.startswith("control_") else "check"
        stats = "; ".join(f"{k}={v:.4g}" for k, v in sorted(rep.statistics.items()))
        failed = []
        ops = {"<=": "<=", ">=": ">=", "<": "<", ">": ">"}
        for clause in rep.clauses:
            stat = rep.statistics[clause["stat"]]
            bound = rep.thresholds[clause["threshold"]]
            holds = {
                "<=": stat <= bound, ">=": stat >= bound,
                "<": stat < bound, ">": stat > bound,
            }[clause["op"]]
            if not holds:
                failed.append(f"{clause['stat']} {ops[clause['op']]} {bound:.4g}")
        lines.append(
            f"| {rep.name} | {kind} | {rep.verdict} | {stats} | {'; '.join(failed)} |"
        )
        for k, v in sorted(rep.statistics.items()):
            rows.append((rep.name, kind, rep.verdict, k, v))
    lines.append("")
    (reports_dir / "summary.md").write_text("\n".join(lines))

    with open(reports_dir / "summary.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["check", "kind", "verdict", "statistic", "value"])
        for row in rows:
            writer.writerow([row[0], row[1], row[2], row[3], repr(float(row[4]))])

    # Figures derived from the report statistics.
    for rep in reports:
        if rep.name == "memorization_tradeoff":
            hs, fracs = [], []
            for key, val in rep.statistics.items():
                if key.startswith("memorized_frac_h"):
                    hs.append(int(key.removeprefix("memorized_frac_h")))
                    fracs.append(val)
            if hs:
                order = np.argsort(hs)
                line_plot(
                    np.asarray(hs)[order], np.asarray(fracs)[order],
                    reports_dir / "figures" / "memorization_tradeoff.svg",
                    "bottleneck width h", "memorized fraction",
                    title="memorization vs bottleneck",
                )
        if rep.name == "log_polynomial_family" and rep.statistics:
            line_plot(
                [rep.inputs.get("log_density_degree", 0), 2],
                [rep.statistics["kl_family"], rep.statistics["kl_gaussian"]],
                reports_dir / "figures" / "log_polynomial_kl.svg",
                "log-density degree", "grid KL (nats)",
                title="family fit vs Gaussian fit",
            )


def cmd_verify(cfg: dict, out: Path) -> int:
    sec = section(cfg, "verify")
    th = _thresholds_from_cfg(sec)
    n = int(sec.get("n", 2000))
    seed = int(sec.get("seed", 0))
    data = None
    for candidate in ("data.csv", "data_a.csv"):
        if (out / candidate).exists():
            data = load_dataset(out / candidate)
            break

    checks = sec.get("checks", [])
    if not checks:
        raise ValidationError("verify.checks is empty")
    reports_dir = out / "reports"
    reports_dir.mkdir(parents=True, exist_ok=True)
    errors = 0
    for entry in checks:
        params = dict(entry) if isinstance(entry, dict) else {"name": entry}
        name = params.pop("name")
        try:
            for rep in _run_one_check(name, params, data, n, seed, th):
                rep.save(reports_dir / f"{rep.name}.json")
                print(f"verify: {rep.name}: {rep.verdict}")
        except Exception as exc:  # errors are recorded, not hidden
            errors += 1
            doc = VerificationReport(
                name=name, claim="", inputs=params, statistics={},
                thresholds=th.as_dict(), clauses=[], verdict="ERROR", notes=str(exc),
            )
            doc.save(reports_dir / f"{name}__error.json")
            print(f"verify: {name}: ERROR ({exc})", file=sys.stderr)
    _summarize(out)
    print(f"verify: summary at {reports_dir / 'summary.md'}")
    return 1 if errors else 0


def cmd_report(cfg: dict, out: Path) -> int:
    if not (out / "reports").exists():
        raise ValidationError(f"{out / 'reports'} not found; run verify first")
    _summarize(out)
    print(f"report: summary regenerated at {out / 'reports' / 'summary.md'}")
    return 0


COMMANDS = {
    "gen-data": cmd_gen_data,
    "fit": cmd_fit,
    "sample": cmd_sample,
    "verify": cmd_verify,
    "report": cmd_report,
}


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="denoiserlab",
        description="Fit analytic denoiser families, sample with DDIM, and "
                    "verify the distribution each architecture generates.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="YAML experiment config")
        p.add_argument("--set", dest="overrides", action="append", default=[],
                       metavar="PATH=VALUE", help="dotted-path config override")
    args = parser.parse_args(argv)

    try:
        config_path = Path(args.config)
        cfg = apply_overrides(load_config(config_path), args.overrides)
        out = _prepare_out(cfg, config_path, args.command)
        return COMMANDS[args.command](cfg, out)
    except (ValidationError, FileNotFoundError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
