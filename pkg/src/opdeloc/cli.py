"""Command-line driver: ensemble data for the complexity and battery studies.

Settings come from built-in defaults, then an optional INI file (one section
per command plus ``[common]``), then command-line flags.  Every resolved
setting is written as a ``# key=value`` header line in each output file.
"""
from __future__ import annotations

import argparse
import configparser
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import battery, trends, validation
from .krylov import DEFAULT_N_MAX

log = logging.getLogger("opdeloc")

DEFAULT_MODELS = "full, ws:1:0.1, ws:1:0.9, ws:2:0.1, ws:2:0.9"

DEFAULTS = {
    "common": {"seed": "0", "realizations": "200", "threads": "1", "out": "results"},
    "ck-curves": {"L": "12", "models": DEFAULT_MODELS, "t_max": "10", "dt": "0.05",
                  "n_max": str(DEFAULT_N_MAX)},
    "ratio-scaling": {"L": "8, 10, 12, 14, 16", "models": DEFAULT_MODELS, "t_max": "2",
                      "dt": "0.05", "window": "0.5, 2.0", "n_max": str(DEFAULT_N_MAX)},
    "battery": {"L": "6, 8, 10, 12, 14, 16", "models": DEFAULT_MODELS, "axes": "x, z",
                "t_max": "10", "dt": "0.02", "perturbative_L": "8, 10",
                "bandwidth_L": "6, 8, 10, 12, 14, 16"},
}


class ConfigError(ValueError):
    pass


def _ints(text: str) -> list[int]:
    return [int(x) for x in text.replace(",", " ").split()]


def _floats(text: str) -> list[float]:
    return [float(x) for x in text.replace(",", " ").split()]


def parse_models(text: str) -> list[trends.Model]:
    """``full`` or ``ws:k:p`` entries separated by commas."""
    out = []
    for item in (s.strip() for s in text.split(",")):
        if not item:
            continue
        if item == "full":
            out.append(trends.find_model("full"))
            continue
        parts = item.split(":")
        if len(parts) != 3 or parts[0] != "ws":
            raise ValueError(f"unknown model {item!r} (use 'full' or 'ws:k:p')")
        out.append(trends.Model("ws", "ws", int(parts[1]), float(parts[2])))
    if not out:
        raise ValueError("no models given")
    return out


def _axes(text: str) -> list[str]:
    axes = [a.strip() for a in text.split(",") if a.strip()]
    if not axes or set(axes) - {"x", "z"}:
        raise ValueError(f"axes must be drawn from x, z; got {text!r}")
    return axes


PARSERS = {"seed": int, "realizations": int, "threads": int, "out": str, "L": _ints,
           "models": parse_models, "t_max": float, "dt": float, "n_max": int,
           "window": _floats, "axes": _axes, "perturbative_L": _ints, "bandwidth_L": _ints}


def _check_values(cfg: dict[str, str], command: str, origin: str) -> None:
    for key, text in cfg.items():
        section = "common" if key in DEFAULTS["common"] else command
        try:
            PARSERS[key](text)
        except ValueError as exc:
            raise ConfigError(f"{origin}: bad value for '{key}' in section [{section}]: {exc}") \
                from None


def load_config(path: str | None, command: str) -> dict[str, str]:
    """Merged ``[common]`` and ``[command]`` settings; unknown keys are errors."""
    merged = {**DEFAULTS["common"], **DEFAULTS[command]}
    if path is None:
        return merged
    cp = configparser.ConfigParser()
    cp.optionxform = str
    if not cp.read(path):
        raise ConfigError(f"{path}: cannot read config file")
    for section in cp.sections():
        if section not in DEFAULTS:
            raise ConfigError(f"{path}: unknown section [{section}]")
        for key in cp[section]:
            if key not in DEFAULTS[section]:
                raise ConfigError(f"{path}: unknown key '{key}' in section [{section}]")
    for section in ("common", command):
        if cp.has_section(section):
            merged.update(cp[section])
    _check_values(merged, command, path)
    return merged


def _resolve(args, command: str) -> dict[str, str]:
    cfg = load_config(args.config, command)
    for flag in ("seed", "realizations", "threads", "out"):
        val = getattr(args, flag, None)
        if val is not None:
            cfg[flag] = str(val)
    _check_values(cfg, command, "command line")
    return cfg


def _times(cfg) -> np.ndarray:
    t_max, dt = float(cfg["t_max"]), float(cfg["dt"])
    return np.round(np.arange(0.0, t_max + dt / 2, dt), 10)


# settings that cannot change any output value
_UNRECORDED = ("out", "threads")


def _header(cfg, command: str) -> str:
    lines = [f"# command={command}"] + [f"# {k}={cfg[k]}" for k in sorted(cfg)
                                          if k not in _UNRECORDED]
    return "\n".join(lines) + "\n"


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    log.info("wrote %s", path)


def cmd_ck_curves(cfg) -> Path:
    L = int(cfg["L"])
    times = _times(cfg)
    seed, n, threads = int(cfg["seed"]), int(cfg["realizations"]), int(cfg["threads"])
    sizes = (1, L // 2)
    rows = ["model,k,p,L,size,t,ck_mean,ck_stderr"]
    for model in parse_models(cfg["models"]):
        samples = trends.complexity_samples(model, L, sizes, n, seed, times, threads,
                                            int(cfg["n_max"]))
        mean = samples.mean(axis=0)
        err = samples.std(axis=0, ddof=1) / np.sqrt(len(samples)) if len(samples) > 1 \
            else np.zeros_like(mean)
        for i, s in enumerate(sizes):
            for t, m, e in zip(times, mean[i], err[i]):
                rows.append(f"{model.name},{model.k},{model.p},{L},{s},{t:.10g},{m:.17g},{e:.17g}")
    out = Path(cfg["out"]) / "ck_curves.csv"
    _write(out, _header(cfg, "ck-curves") + "\n".join(rows) + "\n")
    return out


def cmd_ratio_scaling(cfg) -> Path:
    times = _times(cfg)
    window = tuple(_floats(cfg["window"]))
    seed, n, threads = int(cfg["seed"]), int(cfg["realizations"]), int(cfg["threads"])
    rows = ["model,k,p,L,R,flatness,stderr"]
    for model in parse_models(cfg["models"]):
        for L in _ints(cfg["L"]):
            samples = trends.complexity_samples(model, L, (1, L // 2), n, seed, times, threads,
                                                int(cfg["n_max"]))
            R, flat, err = trends.ratio_from_samples(samples, times, window)
            rows.append(f"{model.name},{model.k},{model.p},{L},{R:.17g},{flat:.17g},{err:.17g}")
    out = Path(cfg["out"]) / "ratio_scaling.csv"
    _write(out, _header(cfg, "ratio-scaling") + "\n".join(rows) + "\n")
    return out


def cmd_battery(cfg) -> list[Path]:
    times = _times(cfg)
    seed, n, threads = int(cfg["seed"]), int(cfg["realizations"]), int(cfg["threads"])
    axes = _axes(cfg["axes"])
    header = _header(cfg, "battery")
    rows = ["model,k,p,L,axis,p_max,stderr,t_star"]
    summary = []
    pmax: dict[tuple, float] = {}
    for model in parse_models(cfg["models"]):
        for L in _ints(cfg["L"]):
            for axis in axes:
                samples = trends.power_samples(model, L, axis, n, seed, times, threads)
                pm, err, t_star = trends.pmax_from_samples(samples, times)
                pmax[(model, L, axis)] = pm
                rows.append(f"{model.name},{model.k},{model.p},{L},{axis},"
                            f"{pm:.17g},{err:.17g},{t_star:.17g}")
                summary.append({"model": model.name, "k": model.k, "p": model.p, "L": L,
                                "axis": axis, "p_max": pm, "stderr": err, "t_star": t_star})
    out = Path(cfg["out"])
    paths = [out / "battery_pmax.csv", out / "battery_pmax.json"]
    _write(paths[0], header + "\n".join(rows) + "\n")
    _write(paths[1], json.dumps({"settings": {k: cfg[k] for k in sorted(cfg) if k not in _UNRECORDED},
                                 "points": summary}, indent=2, sort_keys=True) + "\n")

    if {"x", "z"} <= set(axes):
        xz = ["model,k,p,L,pmax_x,pmax_z,ratio"]
        for (model, L, axis), pm in pmax.items():
            if axis == "x":
                pz = pmax[(model, L, "z")]
                xz.append(f"{model.name},{model.k},{model.p},{L},{pm:.17g},{pz:.17g},{pm / pz:.17g}")
        paths.append(out / "battery_xz.csv")
        _write(paths[-1], header + "\n".join(xz) + "\n")

    pert_L = _ints(cfg["perturbative_L"])
    if pert_L:
        fit = battery.bandwidth_fit(trends.bandwidth_samples(_ints(cfg["bandwidth_L"]), n, seed))
        full = trends.find_model("full")
        lines = [f"# bandwidth_fit_slope={fit.slope:.12g}",
                 f"# bandwidth_fit_intercept={fit.intercept:.12g}",
                 "L,mu,t,P_mean,P_stderr,P_series,P_series_corrected"]
        for L in pert_L:
            samples = trends.power_samples(full, L, "x", n, seed, times, threads)
            mean = samples.mean(axis=0)
            err = samples.std(axis=0, ddof=1) / np.sqrt(len(samples)) if len(samples) > 1 \
                else np.zeros_like(mean)
            mu = float(fit(L))
            reference = battery.perturbative_power(L, mu, times).power
            fixed = battery.perturbative_power(L, mu, times, corrected=True).power
            for row in zip(times, mean, err, reference, fixed):
                lines.append(f"{L},{mu:.12g},{row[0]:.10g}," + ",".join(f"{v:.17g}" for v in row[1:]))
        paths.append(out / "battery_perturbative.csv")
        _write(paths[-1], header + "\n".join(lines) + "\n")
    return paths


def cmd_validate(suite: str, realizations: int | None, seed: int, threads: int) -> int:
    ok = True
    for check in validation.run_suite(suite, realizations, seed, threads):
        print(check.line())
        ok &= check.passed
    print(f"{suite} suite: {'PASS' if ok else 'FAIL'}")
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="opdeloc", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH")
    common.add_argument("--seed", type=int)
    common.add_argument("--out", metavar="DIR")
    common.add_argument("--realizations", type=int)
    common.add_argument("--threads", type=int)
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("ck-curves", parents=[common], help="C_K(t) for sizes 1 and L/2 per model")
    sub.add_parser("ratio-scaling", parents=[common], help="large/small complexity ratio vs L")
    sub.add_parser("battery", parents=[common], help="maximum charging power vs L")
    val = sub.add_parser("validate", parents=[common], help="closed-form and oracle self-checks")
    val.add_argument("suite", choices=("star", "oracle"))
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "validate":
            if args.config:
                load_config(args.config, "ck-curves")   # key validation only
            return cmd_validate(args.suite, args.realizations, args.seed or 0, args.threads or 1)
        cfg = _resolve(args, args.command)
        start = time.perf_counter()
        {"ck-curves": cmd_ck_curves, "ratio-scaling": cmd_ratio_scaling,
         "battery": cmd_battery}[args.command](cfg)
        log.info("%s finished in %.1f s", args.command, time.perf_counter() - start)
    except (ConfigError, ValueError) as exc:
        print(f"opdeloc: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
