"""Command-line front end.

Subcommands mirror the experiment drivers: ``calibration``, ``efficiency``,
``bias-grid``, ``theorem-verify``, and ``pool-dump``.  Options can come from
a flat key=value config file (or a metadata JSON from a previous run) with
explicit flags taking precedence; every run writes result CSVs plus a
metadata JSON whose config block reproduces the run when fed back through
``--config``.

Exit codes: 0 on success, 2 for configuration problems (unknown keys, bad
values, missing seed), 1 for runtime failures.  ``theorem-verify`` also
exits 1 when a check fails, since reporting that is its purpose.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass

from . import __version__
from .allocation import allocate_blocked, allocate_holistic, allocate_segmented
from .distributions import PowerLaw
from .experiments.bias import BIAS_DEFAULTS, run_bias_grid
from .experiments.calibration import run_calibration_sweep
from .experiments.efficiency import run_efficiency_sweep
from .experiments.results import GridSpec, write_metadata_json, write_results_csv
from .experiments.theorem import report_rows, run_theorem_verify
from .population import build_pool, pool_to_csv
from .rng import STREAM_POOL, derive_stream

OUTPUT_DIR_ENV = "EVALSIM_OUTPUT_DIR"


class ConfigError(Exception):
    """A problem with options or config files (exit code 2)."""


def sig4(x: float) -> str:
    """Format a number to 4 significant figures for summaries."""
    return f"{float(x):.4g}"


# ---------------------------------------------------------------------------
# option parsing: one table per subcommand, shared string->value parsers


def _parse_int(text: str) -> int:
    return int(text)


def _parse_float(text: str) -> float:
    return float(text)


def _parse_str(text: str) -> str:
    return text


def _parse_bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("true", "yes", "1", "on"):
        return True
    if low in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _parse_int_list(text: str) -> tuple:
    return tuple(int(part) for part in text.split(",") if part.strip())


def _parse_float_list(text: str) -> tuple:
    return tuple(float(part) for part in text.split(",") if part.strip())


def _parse_axis(text: str) -> tuple:
    """Parse ``name=v1,v2,...`` into (name, values)."""
    name, _, rest = text.partition("=")
    name = name.strip()
    values = _parse_float_list(rest)
    if not name or not values:
        raise ValueError(f"expected name=v1,v2,..., got {text!r}")
    if name in ("n", "d", "evaluators"):
        values = tuple(int(v) for v in values)
    return name, values


@dataclass(frozen=True)
class Option:
    name: str  # config key; the flag is --name with underscores as hyphens
    parse: object
    default: str | None  # default in string form; None means no default
    help: str


_COMMON = (
    Option("seed", _parse_int, None, "master seed (required)"),
    Option("outdir", _parse_str, None, f"output directory (default ${OUTPUT_DIR_ENV} or .)"),
    Option("workers", _parse_int, "1", "worker processes"),
)

OPTIONS = {
    "calibration": _COMMON
    + (
        Option("runs", _parse_int, "1000", "pools per pool size"),
        Option("n_values", _parse_int_list, "5,10,20,50,100,200,500,1000", "pool sizes"),
        Option("num_bins", _parse_int, "5", "quantile bins"),
        Option("delta", _parse_float, "1.0", "power-law tail exponent"),
    ),
    "efficiency": _COMMON
    + (
        Option("runs", _parse_int, "1000", "pools per grid point"),
        Option("n", _parse_int, "200", "pool size"),
        Option("delta", _parse_float, "1.0", "power-law tail exponent"),
        Option("tau", _parse_float_list, "0.05,0.1,0.2,0.5,1.0", "screening depths"),
        Option("sigma", _parse_float_list, "0,0.5,0.9,1", "attribute correlations"),
    ),
    "bias-grid": _COMMON
    + (
        Option("runs", _parse_int, "50000", "pools per grid point"),
        Option("axis1", _parse_axis, "delta=0.2,0.6,1.0,1.5,2.0", "first grid axis, name=v1,v2,..."),
        Option("axis2", _parse_axis, "sigma=0,0.5,0.9", "second grid axis"),
        Option("n", _parse_int, None, "pool size override"),
        Option("d", _parse_int, None, "attribute count override"),
        Option("sigma", _parse_float, None, "correlation override"),
        Option("alpha", _parse_float, None, "disadvantaged fraction override"),
        Option("lambda", _parse_float, None, "protected fraction override"),
        Option("beta", _parse_float, None, "discount floor override"),
        Option("delta", _parse_float, None, "tail exponent override"),
        Option("gamma", _parse_float, None, "bias-coin probability (coin mode)"),
        Option("coin_mode", _parse_bool, "false", "independent bias coins instead of one fixed biased evaluator"),
        Option("require_delta_axis", _parse_bool, "true", "insist one axis is delta"),
    ),
    "theorem-verify": _COMMON
    + (
        Option("n", _parse_int_list, "2,20", "pool sizes for the paired checks"),
        Option("delta", _parse_float_list, "0.3,1.0", "tail exponents"),
        Option("gamma", _parse_float, "0.5", "bias-coin probability"),
        Option("runs", _parse_int, "100000", "paired runs per grid point"),
        Option("threshold_n", _parse_int, "1000", "pool size for the sign check"),
        Option("tail_group", _parse_int, "10000", "group size for the tail check"),
        Option("tail_pools", _parse_int, "10000", "pools for the tail check"),
        Option("tail_samples", _parse_int, "1000000", "samples for the tail oracle"),
    ),
    "pool-dump": _COMMON
    + (
        Option("n", _parse_int, "20", "pool size"),
        Option("d", _parse_int, "20", "attribute count"),
        Option("sigma", _parse_float, "0.5", "attribute correlation"),
        Option("alpha", _parse_float, "0.5", "disadvantaged fraction"),
        Option("lambda", _parse_float, "1.0", "protected fraction"),
        Option("delta", _parse_float, "1.0", "power-law tail exponent"),
        Option("scheme", _parse_str, None, "also write a plan: holistic, segmented, or blocked"),
        Option("evaluators", _parse_int, "2", "committee size for holistic or segmented plans"),
        Option("rows_per_eval", _parse_int, None, "rows per evaluator (blocked plans)"),
        Option("cols_per_eval", _parse_int, None, "columns per evaluator (blocked plans)"),
    ),
}


def read_config_file(path: str) -> dict:
    """Read a flat key=value file, or the config block of a metadata JSON."""
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    stripped = text.lstrip()
    if stripped.startswith("{"):
        payload = json.loads(text)
        block = payload.get("config", payload)
        return {str(k): str(v) for k, v in block.items()}
    out = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"{path}:{lineno}: expected key=value, got {line!r}")
        out[key.strip()] = value.strip()
    return out


def resolve_options(command: str, args: argparse.Namespace) -> dict:
    """Merge flags, config file, and defaults into parsed option values."""
    options = {opt.name: opt for opt in OPTIONS[command]}
    raw = {}
    if args.config:
        raw.update(read_config_file(args.config))
        for key in raw:
            if key not in options:
                raise ConfigError(f"unknown config key: {key!r}")
    for opt in options.values():
        flag_value = getattr(args, opt.name.replace("-", "_"))
        if flag_value is not None:
            raw[opt.name] = flag_value
        elif opt.name not in raw and opt.default is not None:
            raw[opt.name] = opt.default

    if "seed" not in raw:
        raise ConfigError("seed required (pass --seed or set seed in the config file)")

    resolved = {}
    for key, text in raw.items():
        try:
            resolved[key] = options[key].parse(text)
        except ValueError as exc:
            raise ConfigError(f"bad value for {key!r}: {exc}") from exc

    if "outdir" not in resolved:
        resolved["outdir"] = os.environ.get(OUTPUT_DIR_ENV, ".")
    return resolved


def _config_strings(resolved: dict) -> dict:
    """Render resolved options back to strings for the metadata config block."""
    out = {}
    for key, value in sorted(resolved.items()):
        if isinstance(value, tuple):
            if key in ("axis1", "axis2"):
                name, values = value
                out[key] = f"{name}=" + ",".join(repr(v) if isinstance(v, float) else str(v) for v in values)
            else:
                out[key] = ",".join(repr(v) if isinstance(v, float) else str(v) for v in value)
        elif isinstance(value, bool):
            out[key] = "true" if value else "false"
        elif isinstance(value, float):
            out[key] = repr(value)
        else:
            out[key] = str(value)
    return out


def _outpath(cfg: dict, filename: str) -> str:
    os.makedirs(cfg["outdir"], exist_ok=True)
    return os.path.join(cfg["outdir"], filename)


# ---------------------------------------------------------------------------
# subcommand runners


def _cmd_calibration(cfg: dict) -> int:
    sweep = run_calibration_sweep(
        n_values=cfg["n_values"],
        num_bins=cfg["num_bins"],
        runs=cfg["runs"],
        marginal_spec=("power_law", {"delta": cfg["delta"]}),
        seed=cfg["seed"],
        workers=cfg["workers"],
    )
    csv_path = _outpath(cfg, "calibration.csv")
    write_results_csv(sweep.results, ["n"], csv_path)
    write_metadata_json(
        _outpath(cfg, "calibration_metadata.json"),
        "calibration",
        cfg["seed"],
        _config_strings(cfg),
        __version__,
    )
    for res in sweep.results:
        print(
            f"n={res.params['n']}: mean bin error {sig4(res.estimate)}"
            f" (se {sig4(res.std_error)})"
        )
    print(f"log-log slope: {sig4(sweep.loglog_slope)}")
    print(f"wrote {csv_path}")
    return 0


def _cmd_efficiency(cfg: dict) -> int:
    try:
        results = run_efficiency_sweep(
            tau_values=cfg["tau"],
            sigma_values=cfg["sigma"],
            n=cfg["n"],
            delta=cfg["delta"],
            runs=cfg["runs"],
            seed=cfg["seed"],
            workers=cfg["workers"],
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    grid = GridSpec(
        axes=(("tau", cfg["tau"]), ("sigma", cfg["sigma"])),
        fixed={"n": cfg["n"], "delta": cfg["delta"]},
        runs=cfg["runs"],
    )
    csv_path = _outpath(cfg, "efficiency.csv")
    write_results_csv(results, ["tau", "sigma"], csv_path)
    write_metadata_json(
        _outpath(cfg, "efficiency_metadata.json"),
        "efficiency",
        cfg["seed"],
        _config_strings(cfg),
        __version__,
        grid=grid,
    )
    for res in results:
        if res.scheme != "holistic":
            continue
        print(
            f"tau={sig4(res.params['tau'])} sigma={sig4(res.params['sigma'])}:"
            f" accuracy {sig4(res.estimate)} (se {sig4(res.std_error)})"
        )
    print(f"wrote {csv_path}")
    return 0


def _cmd_bias_grid(cfg: dict) -> int:
    fixed = {}
    for key in ("n", "d", "sigma", "alpha", "lambda", "beta", "delta", "gamma"):
        if key in cfg:
            fixed[key] = cfg[key]
    try:
        grid = GridSpec(axes=(cfg["axis1"], cfg["axis2"]), fixed=fixed, runs=cfg["runs"])
        results = run_bias_grid(
            grid,
            seed=cfg["seed"],
            workers=cfg["workers"],
            coin_mode=cfg["coin_mode"],
            require_delta_axis=cfg["require_delta_axis"],
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    csv_path = _outpath(cfg, "bias_grid.csv")
    write_results_csv(results, list(grid.axis_names), csv_path)
    write_metadata_json(
        _outpath(cfg, "bias_grid_metadata.json"),
        "bias-grid",
        cfg["seed"],
        _config_strings(cfg),
        __version__,
        grid=grid,
    )
    for res in results:
        if res.scheme != "difference":
            continue
        labels = " ".join(f"{k}={sig4(v)}" for k, v in res.params.items())
        print(f"{labels}: seg-hol {sig4(res.estimate)} (se {sig4(res.std_error)})")
    print(f"wrote {csv_path}")
    return 0


def _cmd_theorem_verify(cfg: dict) -> int:
    try:
        report = run_theorem_verify(
            n_values=cfg["n"],
            delta_values=cfg["delta"],
            gamma=cfg["gamma"],
            runs=cfg["runs"],
            seed=cfg["seed"],
            workers=cfg["workers"],
            threshold_n=cfg["threshold_n"],
            tail_group=cfg["tail_group"],
            tail_pools=cfg["tail_pools"],
            tail_samples=cfg["tail_samples"],
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    rows = report_rows(report, cfg["seed"])
    files = {
        "part_a": (["n", "delta", "beta", "gamma"], "theorem_part_a.csv"),
        "formula": (["n", "delta", "gamma"], "theorem_formula.csv"),
        "threshold": (["n", "delta", "gamma"], "theorem_threshold.csv"),
        "tail": (["n", "delta"], "theorem_tail.csv"),
    }
    for family, (names, filename) in files.items():
        write_results_csv(rows[family], names, _outpath(cfg, filename))
    write_metadata_json(
        _outpath(cfg, "theorem_metadata.json"),
        "theorem-verify",
        cfg["seed"],
        _config_strings(cfg),
        __version__,
    )

    for c in report.part_a:
        print(
            f"part_a n={c.n} delta={sig4(c.delta)} beta={sig4(c.beta)}"
            f" gamma={sig4(c.gamma)}: err_hol {sig4(c.pair.err_hol)}"
            f" err_seg {sig4(c.pair.err_seg)}"
            f" {'PASS' if c.passed else 'FAIL'}"
        )
    for c in report.formula:
        sym = c.symmetry_hol_ok and c.symmetry_seg_ok
        print(
            f"formula n={c.n} delta={sig4(c.delta)}: diff {sig4(c.pair.diff)}"
            f" predicted {sig4(c.predicted)} (combined se {sig4(c.combined_se)},"
            f" tail {sig4(c.p_above)} vs quadrature {sig4(c.p_above_quad)})"
            f" {'PASS' if c.passed else 'FAIL'}"
            f" symmetry {'PASS' if sym else 'FAIL'}"
        )
    for c in report.threshold:
        side = "positive" if c.expect_positive else "negative"
        print(
            f"threshold n={c.n} delta={sig4(c.delta)}: diff {sig4(c.pair.diff)}"
            f" (se {sig4(c.pair.se_diff)}), expected {side}"
            f" {'PASS' if c.passed else 'FAIL'}"
        )
    for c in report.tail:
        print(
            f"tail m={c.n_per_group} delta={sig4(c.delta)}: below {sig4(c.p_below)}"
            f" predicted {sig4(c.predicted_below)} limit {sig4(c.limit_below)}"
            f" {'PASS' if c.passed else 'FAIL'}"
        )
    if report.all_passed:
        print("ALL CHECKS PASSED")
        return 0
    print("SOME CHECKS FAILED")
    return 1


def _cmd_pool_dump(cfg: dict) -> int:
    rng = derive_stream(cfg["seed"], STREAM_POOL)
    pool = build_pool(
        cfg["n"],
        cfg["d"],
        cfg["sigma"],
        cfg["alpha"],
        cfg["lambda"],
        PowerLaw(cfg["delta"]),
        rng,
    )
    pool_path = _outpath(cfg, "pool.csv")
    pool_to_csv(pool, pool_path)
    print(f"wrote {pool_path}")

    scheme = cfg.get("scheme")
    if scheme is not None:
        try:
            if scheme == "holistic":
                plan = allocate_holistic(cfg["n"], cfg["d"], cfg["evaluators"], rng)
            elif scheme == "segmented":
                plan = allocate_segmented(cfg["n"], cfg["d"], cfg["evaluators"], rng)
            elif scheme == "blocked":
                if "rows_per_eval" not in cfg or "cols_per_eval" not in cfg:
                    raise ConfigError(
                        "blocked plans need rows_per_eval and cols_per_eval"
                    )
                plan = allocate_blocked(
                    cfg["n"],
                    cfg["d"],
                    cfg["rows_per_eval"],
                    cfg["cols_per_eval"],
                    rng,
                )
            else:
                raise ConfigError(f"unknown scheme {scheme!r}")
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        plan_path = _outpath(cfg, "plan.csv")
        plan.to_csv(plan_path)
        print(f"wrote {plan_path}")

    write_metadata_json(
        _outpath(cfg, "pool_metadata.json"),
        "pool-dump",
        cfg["seed"],
        _config_strings(cfg),
        __version__,
    )
    return 0


_RUNNERS = {
    "calibration": _cmd_calibration,
    "efficiency": _cmd_efficiency,
    "bias-grid": _cmd_bias_grid,
    "theorem-verify": _cmd_theorem_verify,
    "pool-dump": _cmd_pool_dump,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="evalsim",
        description="Monte Carlo comparison of holistic and segmented evaluation",
    )
    parser.add_argument("--version", action="version", version=f"evalsim {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for command, options in OPTIONS.items():
        cmd = sub.add_parser(command, help=f"run the {command} experiment")
        cmd.add_argument("--config", help="key=value file or metadata JSON")
        for opt in options:
            flag = "--" + opt.name.replace("_", "-")
            cmd.add_argument(flag, dest=opt.name, metavar="VALUE", help=opt.help)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_options(args.command, args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        return _RUNNERS[args.command](cfg)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - the CLI boundary reports and exits
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
