"""Command-line entry point: ``specbool <command> [options]``.

Every command accepts ``--config FILE`` (JSON); explicit flags override the
file, which overrides built-in defaults.  The effective configuration is
written to ``<out>/config.json`` so any run can be repeated exactly.

Exit codes: 0 success, 1 validation failure, 2 usage error.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import os
import re
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import analysis, baselines, hypercube, models, synth
from .trainer import (Dataset, TrainConfig, TrainingDiverged, mse_loss, theoretical_lambda,
                      train)

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


class CheckFailed(Exception):
    pass


# ---------------------------------------------------------------- helpers

def _grid(value, cast=float) -> list:
    if value is None:
        return []
    if isinstance(value, str):
        value = [v for v in value.split(",") if v.strip()]
    if not isinstance(value, (list, tuple)):
        value = [value]
    return [cast(v) for v in value]


def parse_lambda(value, n: int, d: int, c0: float = 1.0) -> float:
    """A number, or ``theory:<sigma>,<delta>`` for the theoretical rule."""
    if isinstance(value, (int, float)):
        return float(value)
    text = str(value)
    if text.startswith("theory:"):
        try:
            sigma, delta = (float(v) for v in text[len("theory:"):].split(","))
        except ValueError as exc:
            raise UsageError(f"bad lambda spec {text!r}; expected theory:<sigma>,<delta>") from exc
        return theoretical_lambda(sigma, d, n, delta, c0)
    try:
        return float(text)
    except ValueError as exc:
        raise UsageError(f"bad lambda value {text!r}") from exc


def _lambda_grid(value) -> list:
    """Comma-separated lambdas; a ``theory:<sigma>,<delta>`` item keeps its own comma."""
    if isinstance(value, (list, tuple)):
        return list(value)
    return re.findall(r"theory:[^,]*,[^,]*|[^,]+", str(value))


def worker_count() -> int:
    """``SPECBOOL_THREADS`` when set, else the CPU count."""
    env = os.environ.get("SPECBOOL_THREADS")
    if not env:
        return os.cpu_count() or 1
    try:
        return max(1, int(env))
    except ValueError as exc:
        raise UsageError("SPECBOOL_THREADS must be an integer") from exc


def pool_map(fn, tasks: list) -> list:
    """Map in a process pool; results come back in task order."""
    workers = min(worker_count(), len(tasks))
    if workers <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, tasks))


def _dump_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _write_csv(path: Path, header: list, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])


def _read_csv(path: Path, header: list) -> list:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != header:
        raise CheckFailed(f"{path}: expected header {','.join(header)}")
    for r in rows[1:]:
        if len(r) != len(header):
            raise CheckFailed(f"{path}: ragged row {r}")
        for v in r:
            if v not in ("", "None"):
                float(v)
    return rows[1:]


def _read_json(path: Path):
    try:
        return json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise CheckFailed(f"{path}: {exc}") from exc


def _load_dataset(path) -> Dataset:
    if not path:
        raise UsageError("--data is required")
    try:
        return synth.read_dataset_csv(path)
    except OSError as exc:
        raise UsageError(f"cannot read dataset: {exc}") from exc


# ---------------------------------------------------------------- synth

SYNTH_DEFAULTS = {
    "family": "monomial", "d": 10, "order": 3, "k": 5, "exponent": 1.0, "ratio": 0.7,
    "n": 200, "sigma": 0.1, "seed": 0, "replace": True,
}


def make_truth(family: str, d: int, params: dict, seed) -> synth.GroundTruth:
    if family == "monomial":
        return synth.gen_monomial(d, int(params.get("order", 3)), seed)
    if family == "power_law":
        return synth.gen_power_law(d, int(params.get("k", 5)), int(params.get("order", 2)),
                                   float(params.get("exponent", 1.0)), seed)
    if family == "staircase":
        return synth.gen_staircase(d, seed, float(params.get("ratio", 0.7)))
    if family == "qg_preset":
        return synth.qg_preset()
    raise UsageError(f"unknown family {family!r}")


def cmd_synth(cfg: dict, out: Path) -> list:
    gt_seed, data_seed = np.random.SeedSequence(cfg["seed"]).spawn(2)
    gt = make_truth(cfg["family"], int(cfg["d"]), cfg, gt_seed)
    data = synth.sample_dataset(gt, int(cfg["n"]), float(cfg["sigma"]), data_seed, bool(cfg["replace"]))
    hypercube.write_spectrum_json(out / "spectrum.json", gt.spectrum)
    synth.write_dataset_csv(out / "dataset.csv", data)
    orders = sorted(set(int(o) for o in gt.spectrum.orders))
    print(f"family={gt.family} d={gt.d} k={gt.k} orders={orders} n={data.n} sigma={cfg['sigma']}")
    return ["spectrum.json", "dataset.csv"]


# ---------------------------------------------------------------- train

TRAIN_DEFAULTS = {
    "data": None, "model": "poly:full", "lam": 0.0, "learning_rate": 1e-2, "epochs": 2000,
    "batch_size": None, "warmup_epochs": 0, "seed": 0, "stationarity_tol": 1e-3,
    "interpolation_delta": None, "weight_penalty": "none", "weight_penalty_strength": 0.0,
    "zero_sign_rule": "zero", "average_tail": 0.0, "log_every": 1, "c0": 1.0,
    "cv": None, "val_frac": 0.2,
}

TRAIN_KEYS = ("learning_rate", "epochs", "batch_size", "warmup_epochs", "seed", "stationarity_tol",
              "interpolation_delta", "weight_penalty", "weight_penalty_strength", "zero_sign_rule",
              "average_tail", "log_every")


def _train_config(cfg: dict, lam: float) -> TrainConfig:
    try:
        return TrainConfig(lam=lam, **{k: cfg[k] for k in TRAIN_KEYS})
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from exc


def cross_validate(spec: dict, data: Dataset, cfg: dict, grid: list) -> tuple[float, list]:
    """Pick lambda from ``grid`` by MSE on one fixed validation fold."""
    rng = np.random.default_rng(np.random.SeedSequence([int(cfg["seed"]), 1]))
    perm = rng.permutation(data.n)
    n_val = max(1, int(round(float(cfg["val_frac"]) * data.n)))
    if n_val >= data.n:
        raise UsageError("validation fold leaves no training rows")
    val, tr = data.subset(np.sort(perm[:n_val])), data.subset(np.sort(perm[n_val:]))
    scores = []
    for lam in grid:
        rep = train(models.init_model(spec, int(cfg["seed"])), tr, _train_config(cfg, lam))
        fitted = models.build_model(spec["kind"], spec["spec"], rep.theta)
        scores.append((lam, mse_loss(fitted, val)))
    best = min(scores, key=lambda s: (s[1], s[0]))[0]
    return best, scores


def cmd_train(cfg: dict, out: Path) -> list:
    data = _load_dataset(cfg["data"])
    spec = models.parse_model_spec(cfg["model"], data.d)
    files = []
    if cfg["cv"] is not None:
        grid = [parse_lambda(v, data.n, data.d, cfg["c0"]) for v in _lambda_grid(cfg["cv"])]
        if not grid:
            raise UsageError("--cv needs at least one lambda")
        lam, scores = cross_validate(spec, data, cfg, grid)
        _write_csv(out / "cv.csv", ["lambda", "val_mse"], scores)
        files.append("cv.csv")
    else:
        lam = parse_lambda(cfg["lam"], data.n, data.d, cfg["c0"])
    model = models.init_model(spec, int(cfg["seed"]))
    report = train(model, data, _train_config(cfg, lam))
    fitted = model.with_theta(report.theta)
    out_json = report.to_json()
    out_json["lam"] = lam
    _dump_json(out / "report.json", out_json)
    _write_csv(out / "trajectory.csv", ["epoch", "mse", "reg", "total"], report.trajectory)
    models.save_checkpoint(out / "model.json", fitted)
    print(f"lam={lam:.6g} mse={report.final_mse:.6g} reg={report.final_reg:.6g} "
          f"residual={report.stationarity_residual:.3g} stationary={report.is_stationary} "
          f"interpolator={report.is_interpolator}")
    return files + ["report.json", "trajectory.csv", "model.json"]


# ---------------------------------------------------------------- lasso

LASSO_DEFAULTS = {"data": None, "lam": 0.0, "max_iters": 50000, "tol": 1e-9, "c0": 1.0}


def cmd_lasso(cfg: dict, out: Path) -> list:
    data = _load_dataset(cfg["data"])
    lam = parse_lambda(cfg["lam"], data.n, data.d, cfg["c0"])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", baselines.LassoNotConverged)
        res = baselines.lasso_fista(data, baselines.LassoConfig(lam, int(cfg["max_iters"]), float(cfg["tol"])))
    kkt = baselines.kkt_residuals(data, res.coef, lam)
    hypercube.write_spectrum_json(out / "spectrum.json", res.spectrum)
    _dump_json(out / "kkt.json", {"lam": lam, "objective": res.objective, "n_iter": res.n_iter,
                                  "converged": res.converged, **kkt})
    print(f"lam={lam:.6g} objective={res.objective:.10g} iterations={res.n_iter} "
          f"support={[int(m) for m in res.spectrum.masks]}")
    print(f"kkt zero={kkt['zero']:.3g} active={kkt['active']:.3g}")
    if not res.converged:
        print(f"warning: FISTA did not converge, objective {res.objective:.10g}", file=sys.stderr)
        raise CheckFailed("lasso did not converge")
    return ["spectrum.json", "kkt.json"]


# ---------------------------------------------------------------- qg

QG_DEFAULTS = {
    "checkpoint": None, "data": None, "preset": None, "n": 1000, "K": 100,
    "sigmas": [1e-3, 1e-2, 1e-1], "seed": 0, "rsi": False,
}


def cmd_qg(cfg: dict, out: Path) -> list:
    data_seed, qg_seed = np.random.SeedSequence(cfg["seed"]).spawn(2)
    if cfg["preset"] is not None:
        if cfg["preset"] != "qg_preset":
            raise UsageError(f"unknown preset {cfg['preset']!r}")
        gt = synth.qg_preset()
        data = _load_dataset(cfg["data"]) if cfg["data"] else synth.sample_dataset(gt, int(cfg["n"]), 0.0, data_seed)
        ref = models.PolynomialModel(gt.d, gt.spectrum.masks, gt.spectrum.coeffs)
    else:
        data = _load_dataset(cfg["data"])
        ref = None
    if cfg["checkpoint"]:
        try:
            ref = models.load_checkpoint(cfg["checkpoint"])
        except (OSError, KeyError, ValueError) as exc:
            raise UsageError(f"cannot load checkpoint: {exc}") from exc
    if ref is None:
        raise UsageError("qg needs --checkpoint or --preset")
    if ref.d != data.d:
        raise UsageError(f"checkpoint dimension {ref.d} does not match data dimension {data.d}")
    sigmas = _grid(cfg["sigmas"])
    K = int(cfg["K"])
    try:
        rep = analysis.qg_estimate(ref, data, K, sigmas, qg_seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    rep.write_csv(out / "qg.csv")
    files = ["qg.csv"]
    for s, r, p, _, _, q in rep.rows():
        print(f"sigma={s:.3g} min_ratio={r:.6g} per_param={p:.6g} qg={q:.6g} K={K} M={rep.M}")
    if cfg["rsi"]:
        rsi = analysis.rsi_estimate(ref, data, K, sigmas, qg_seed)
        _write_csv(out / "rsi.csv", ["sigma", "min_ratio", "K", "M"],
                   [(s, r, rsi.K, rsi.M) for s, r in zip(rsi.sigmas, rsi.min_ratio)])
        files.append("rsi.csv")
    return files


# ---------------------------------------------------------------- phase

PHASE_DEFAULTS = {
    "family": "monomial", "family_params": {"order": 3}, "param": "order", "param_values": [3],
    "d": 10, "n_grid": [25, 50, 100, 200], "sigma": 0.0, "replace": True, "n_test": 1000,
    "model": "mlp:64,64,64", "lam_sp": 0.03,
    "train": {"learning_rate": 0.05, "epochs": 1000, "warmup_epochs": 100},
    "trials": 5, "tau": 0.45, "seed": 0,
}


def _phase_trial(task) -> tuple[float, float]:
    """Test R^2 with and without the spectral penalty; NaN marks a failed run."""
    cfg, param, n, key = task
    ss_gt, ss_tr, ss_te, ss_init = np.random.SeedSequence(int(cfg["seed"]), spawn_key=key).spawn(4)
    params = dict(cfg["family_params"])
    params[cfg["param"]] = param
    d = int(cfg["d"])
    gt = make_truth(cfg["family"], d, params, ss_gt)
    tr = synth.sample_dataset(gt, n, float(cfg["sigma"]), ss_tr, bool(cfg["replace"]))
    te = synth.sample_dataset(gt, int(cfg["n_test"]), 0.0, ss_te)
    spec = models.parse_model_spec(cfg["model"], d)
    init_seed = int(ss_init.generate_state(1)[0])
    out = []
    for lam in (float(cfg["lam_sp"]), 0.0):
        try:
            tc = TrainConfig(lam=lam, **cfg["train"])
            tc.log_every = max(tc.epochs, 1)
            model = models.init_model(spec, init_seed)
            rep = train(model, tr, tc)
            out.append(analysis.r_squared(model.with_theta(rep.theta).predict(te.X), te.y))
        except (TrainingDiverged, ValueError, FloatingPointError):
            out.append(math.nan)
    return out[0], out[1]


def run_phase(cfg: dict) -> list:
    """Rows ``(param, n, frac_sp, frac_nosp, T, tau)``."""
    T, tau = int(cfg["trials"]), float(cfg["tau"])
    if T < 1 or not 0 < tau < 1:
        raise UsageError("need trials >= 1 and 0 < tau < 1")
    params, ns = list(cfg["param_values"]), _grid(cfg["n_grid"], int)
    if not params or not ns:
        raise UsageError("phase grids must be nonempty")
    tasks = [(cfg, p, n, (pi, ni, t)) for pi, p in enumerate(params) for ni, n in enumerate(ns)
             for t in range(T)]
    results = pool_map(_phase_trial, tasks)
    rows = []
    for c in range(len(params) * len(ns)):
        cell = results[c * T:(c + 1) * T]
        sp = sum(1 for a, _ in cell if a >= tau) / T  # NaN compares False: failure
        nosp = sum(1 for _, b in cell if b >= tau) / T
        task = tasks[c * T]
        rows.append((task[1], task[2], sp, nosp, T, tau))
    return rows


def cmd_phase(cfg: dict, out: Path) -> list:
    rows = run_phase(cfg)
    _write_csv(out / "phase.csv", ["param", "n", "frac_sp", "frac_nosp", "T", "tau"], rows)
    for r in rows:
        print(f"{cfg['param']}={r[0]} n={r[1]} frac_sp={r[2]:.2f} frac_nosp={r[3]:.2f}")
    return ["phase.csv"]


# ---------------------------------------------------------------- rate

RATE_DEFAULTS = {
    "d": 8, "k": 3, "order": 2, "exponent": 1.0, "sigma": 0.1, "delta": 0.05, "c0": 1.0,
    "n_grid": [100, 200, 400, 800, 1600], "seeds": 10, "seed": 0,
    "learning_rate": 0.05, "epochs": 20000, "average_tail": 0.5,
}


def _rate_trial(task) -> float:
    cfg, n, s, ni = task
    d = int(cfg["d"])
    gt = synth.gen_power_law(d, int(cfg["k"]), int(cfg["order"]), float(cfg["exponent"]),
                             np.random.SeedSequence(int(cfg["seed"]), spawn_key=(s,)))
    data = synth.sample_dataset(gt, n, float(cfg["sigma"]),
                                np.random.SeedSequence(int(cfg["seed"]), spawn_key=(s, ni + 1)))
    sigma = float(cfg["sigma"])
    lam = theoretical_lambda(sigma, d, n, float(cfg["delta"]), float(cfg["c0"]))
    epochs = int(cfg["epochs"])
    tc = TrainConfig(lam=lam, learning_rate=float(cfg["learning_rate"]), epochs=epochs,
                     average_tail=float(cfg["average_tail"]), log_every=max(epochs, 1))
    rep = train(models.PolynomialModel(d), data, tc)
    return float(np.linalg.norm(rep.theta - gt.spectrum.to_dense()))


def log_log_slope(ns, errs) -> float:
    return float(np.polyfit(np.log(ns), np.log(errs), 1)[0])


def run_rate(cfg: dict) -> tuple[list, float | None]:
    """Median parameter error per n, and the fitted log-log slope (None when sigma = 0)."""
    ns = _grid(cfg["n_grid"], int)
    if len(ns) < 3:
        raise UsageError("rate needs at least 3 sample sizes")
    S = int(cfg["seeds"])
    if S < 1:
        raise UsageError("seeds must be >= 1")
    errs = pool_map(_rate_trial, [(cfg, n, s, ni) for ni, n in enumerate(ns) for s in range(S)])
    rows = [(n, float(np.median(errs[i * S:(i + 1) * S]))) for i, n in enumerate(ns)]
    if float(cfg["sigma"]) == 0.0:
        return rows, None
    return rows, log_log_slope([r[0] for r in rows], [r[1] for r in rows])


def cmd_rate(cfg: dict, out: Path) -> list:
    rows, slope = run_rate(cfg)
    _write_csv(out / "rate.csv", ["n", "median_error"], rows)
    _dump_json(out / "slope.json", {"slope": slope})
    for n, e in rows:
        print(f"n={n} median_error={e:.6g}")
    print("slope skipped (sigma = 0)" if slope is None else f"slope={slope:.4f}")
    return ["rate.csv", "slope.json"]


# ---------------------------------------------------------------- validate

VALIDATE_DEFAULTS = {
    "dims": [1, 2, 3, 4], "noise_d": 8, "noise_n": 200, "sigma": 1.0, "delta": 0.05,
    "trials": 2000, "c0": 1.0, "seed": 0,
}


def run_validate(cfg: dict) -> dict:
    report = {"extremum": [], "noise": None, "ok": True}
    for d in _grid(cfg["dims"], int):
        bound = (2 * d + 1) * 2 ** d
        try:
            value, arg = hypercube.hadamard_l1_extremum(d)
            entry = {"d": d, "max": value, "bound": bound, "ok": True}
        except ValueError as exc:
            entry = {"d": d, "bound": bound, "ok": False, "error": str(exc)}
        report["extremum"].append(entry)
        report["ok"] &= entry["ok"]
    nc = analysis.noise_linf_check(int(cfg["noise_d"]), int(cfg["noise_n"]), float(cfg["sigma"]),
                                   float(cfg["delta"]), int(cfg["trials"]), int(cfg["seed"]),
                                   float(cfg["c0"]))
    ok = nc.quantile <= nc.envelope
    report["noise"] = {"quantile": nc.quantile, "bound": nc.bound, "envelope": nc.envelope, "ok": ok}
    report["ok"] &= ok
    return report


def cmd_validate(cfg: dict, out: Path) -> list:
    report = run_validate(cfg)
    _dump_json(out / "validate.json", report)
    for e in report["extremum"]:
        detail = f"max={e['max']:g}" if e["ok"] else e["error"]
        print(f"hadamard_l1 d={e['d']} {detail} bound={e['bound']} {'PASS' if e['ok'] else 'FAIL'}")
    nz = report["noise"]
    print(f"noise quantile={nz['quantile']:.4g} envelope={nz['envelope']:.4g} {'PASS' if nz['ok'] else 'FAIL'}")
    if not report["ok"]:
        raise CheckFailed("bound violation")
    return ["validate.json"]


# ---------------------------------------------------------------- wht

WHT_DEFAULTS = {"input": None, "inverse": False, "prune": 1e-12}


def cmd_wht(cfg: dict, out: Path) -> list:
    if not cfg["input"]:
        raise UsageError("--input is required")
    try:
        if cfg["inverse"]:
            table = hypercube.spectrum_to_function(hypercube.read_spectrum_json(cfg["input"]))
            hypercube.write_table_csv(out / "table.csv", table)
            print(f"wrote {table.size} values")
            return ["table.csv"]
        s = hypercube.function_to_spectrum(hypercube.read_table_csv(cfg["input"]),
                                             prune=float(cfg["prune"]))
    except OSError as exc:
        raise UsageError(f"cannot read input: {exc}") from exc
    hypercube.write_spectrum_json(out / "spectrum.json", s)
    print(f"d={s.d} nonzero={len(s)}")
    return ["spectrum.json"]


# ---------------------------------------------------------------- output checks

def check_outputs(out: Path, files: list) -> None:
    """Re-parse every written file with its schema reader."""
    for name in files + ["config.json"]:
        path = out / name
        try:
            if name == "dataset.csv":
                synth.read_dataset_csv(path)
            elif name == "spectrum.json":
                hypercube.read_spectrum_json(path)
            elif name == "table.csv":
                hypercube.read_table_csv(path)
            elif name == "model.json":
                models.load_checkpoint(path)
            elif name == "trajectory.csv":
                _read_csv(path, ["epoch", "mse", "reg", "total"])
            elif name == "qg.csv":
                _read_csv(path, ["sigma", "min_ratio", "min_ratio_per_param", "K", "M", "min_qg_ratio"])
            elif name == "rsi.csv":
                _read_csv(path, ["sigma", "min_ratio", "K", "M"])
            elif name == "phase.csv":
                for r in _read_csv(path, ["param", "n", "frac_sp", "frac_nosp", "T", "tau"]):
                    if not (0 <= float(r[2]) <= 1 and 0 <= float(r[3]) <= 1):
                        raise CheckFailed(f"{path}: fraction out of range")
            elif name == "rate.csv":
                _read_csv(path, ["n", "median_error"])
            elif name == "cv.csv":
                _read_csv(path, ["lambda", "val_mse"])
            else:
                _read_json(path)
        except CheckFailed:
            raise
        except (OSError, ValueError, KeyError) as exc:
            raise CheckFailed(f"{path}: {exc}") from exc
    print(f"check: {len(files) + 1} files parsed")


# ---------------------------------------------------------------- parser

COMMANDS = {
    "synth": (cmd_synth, SYNTH_DEFAULTS),
    "train": (cmd_train, TRAIN_DEFAULTS),
    "lasso": (cmd_lasso, LASSO_DEFAULTS),
    "qg": (cmd_qg, QG_DEFAULTS),
    "phase": (cmd_phase, PHASE_DEFAULTS),
    "rate": (cmd_rate, RATE_DEFAULTS),
    "validate": (cmd_validate, VALIDATE_DEFAULTS),
    "wht": (cmd_wht, WHT_DEFAULTS),
}


def _flag(p, name, dest, **kw):
    p.add_argument(name, dest=dest, default=None, **kw)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="specbool", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(name, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--out", default="out", help="output directory (default: out)")
        p.add_argument("--check", action="store_true", help="re-parse outputs after writing")
        return p

    p = common("synth", "generate a ground truth and a noisy dataset")
    _flag(p, "--family", "family", choices=["monomial", "power_law", "staircase", "qg_preset"])
    _flag(p, "--d", "d", type=int)
    _flag(p, "--order", "order", type=int)
    _flag(p, "--k", "k", type=int)
    _flag(p, "--exponent", "exponent", type=float)
    _flag(p, "--ratio", "ratio", type=float)
    _flag(p, "--n", "n", type=int)
    _flag(p, "--sigma", "sigma", type=float)
    _flag(p, "--seed", "seed", type=int)
    p.add_argument("--no-replace", dest="replace", action="store_const", const=False, default=None)

    p = common("train", "train a model on a dataset CSV")
    _flag(p, "--data", "data")
    _flag(p, "--model", "model", help="linear | poly:full | poly:<masks> | mlp:<widths>[:softplus]")
    _flag(p, "--lambda", "lam", help="number or theory:<sigma>,<delta>")
    _flag(p, "--lr", "learning_rate", type=float)
    _flag(p, "--epochs", "epochs", type=int)
    _flag(p, "--batch-size", "batch_size", type=int)
    _flag(p, "--warmup", "warmup_epochs", type=int)
    _flag(p, "--seed", "seed", type=int)
    _flag(p, "--stationarity-tol", "stationarity_tol", type=float)
    _flag(p, "--delta", "interpolation_delta", type=float)
    _flag(p, "--weight-penalty", "weight_penalty", choices=["none", "l1_weights", "l2_weights"])
    _flag(p, "--weight-penalty-strength", "weight_penalty_strength", type=float)
    _flag(p, "--zero-sign-rule", "zero_sign_rule", choices=["zero", "positive", "negative"])
    _flag(p, "--average-tail", "average_tail", type=float)
    _flag(p, "--log-every", "log_every", type=int)
    _flag(p, "--c0", "c0", type=float)
    _flag(p, "--cv", "cv", help="comma-separated lambda grid; picks by validation MSE")
    _flag(p, "--val-frac", "val_frac", type=float)

    p = common("lasso", "LASSO on the monomial basis by FISTA")
    _flag(p, "--data", "data")
    _flag(p, "--lambda", "lam", help="number or theory:<sigma>,<delta>")
    _flag(p, "--max-iters", "max_iters", type=int)
    _flag(p, "--tol", "tol", type=float)
    _flag(p, "--c0", "c0", type=float)

    p = common("qg", "quadratic-growth estimate by random weight perturbation")
    _flag(p, "--checkpoint", "checkpoint")
    _flag(p, "--data", "data")
    _flag(p, "--preset", "preset", choices=["qg_preset"])
    _flag(p, "--n", "n", type=int)
    _flag(p, "--K", "K", type=int)
    _flag(p, "--sigmas", "sigmas", help="comma-separated perturbation scales")
    _flag(p, "--seed", "seed", type=int)
    p.add_argument("--rsi", dest="rsi", action="store_const", const=True, default=None)

    p = common("phase", "success-fraction grid with and without the spectral penalty")
    _flag(p, "--family", "family", choices=["monomial", "power_law", "staircase"])
    _flag(p, "--d", "d", type=int)
    _flag(p, "--param", "param")
    _flag(p, "--param-values", "param_values")
    _flag(p, "--n-grid", "n_grid")
    _flag(p, "--sigma", "sigma", type=float)
    _flag(p, "--model", "model")
    _flag(p, "--lam-sp", "lam_sp", type=float)
    _flag(p, "--trials", "trials", type=int)
    _flag(p, "--tau", "tau", type=float)
    _flag(p, "--n-test", "n_test", type=int)
    _flag(p, "--seed", "seed", type=int)

    p = common("rate", "parameter error against n for the convex polynomial model")
    _flag(p, "--d", "d", type=int)
    _flag(p, "--k", "k", type=int)
    _flag(p, "--order", "order", type=int)
    _flag(p, "--sigma", "sigma", type=float)
    _flag(p, "--delta", "delta", type=float)
    _flag(p, "--n-grid", "n_grid")
    _flag(p, "--seeds", "seeds", type=int)
    _flag(p, "--seed", "seed", type=int)
    _flag(p, "--lr", "learning_rate", type=float)
    _flag(p, "--epochs", "epochs", type=int)

    p = common("validate", "exhaustive and Monte-Carlo bound checks")
    _flag(p, "--dims", "dims")
    _flag(p, "--noise-d", "noise_d", type=int)
    _flag(p, "--noise-n", "noise_n", type=int)
    _flag(p, "--sigma", "sigma", type=float)
    _flag(p, "--delta", "delta", type=float)
    _flag(p, "--trials", "trials", type=int)
    _flag(p, "--c0", "c0", type=float)
    _flag(p, "--seed", "seed", type=int)

    p = common("wht", "transform a value table CSV to a spectrum JSON (or back)")
    _flag(p, "--input", "input")
    p.add_argument("--inverse", dest="inverse", action="store_const", const=True, default=None)
    _flag(p, "--prune", "prune", type=float, help="drop coefficients with |a| <= prune (default 1e-12)")
    return parser


def effective_config(command: str, args: argparse.Namespace) -> dict:
    defaults = COMMANDS[command][1]
    cfg = json.loads(json.dumps(defaults))
    if args.config:
        try:
            loaded = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config: {exc}") from exc
        if not isinstance(loaded, dict):
            raise UsageError("config must be a JSON object")
        unknown = sorted(set(loaded) - set(defaults))
        if unknown:
            raise UsageError(f"unknown config keys for {command}: {', '.join(unknown)}")
        cfg.update(loaded)
    for key in defaults:
        value = getattr(args, key, None)
        if value is not None:
            cfg[key] = value
    return cfg


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    fn = COMMANDS[args.command][0]
    try:
        cfg = effective_config(args.command, args)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        _dump_json(out / "config.json", cfg)
        files = fn(cfg, out)
        if args.check:
            check_outputs(out, files)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (CheckFailed, TrainingDiverged) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except (ValueError, KeyError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
