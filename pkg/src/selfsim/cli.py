"""Command-line front end.

Every subcommand reads a JSON run configuration such as::

    {
      "model": "tree",
      "constants": {"k": 2, "b": 1},
      "generations": "infinite",
      "damage": [{"label": "k_{2,1}", "epsilon": 0.1},
                 {"kind": "b", "generation": 2, "branch": 1, "epsilon": 0.2}],
      "frequency": {"wmin": 0.01, "wmax": 1000, "points": 200}
    }

Exit status is 0 on success, 1 when some rows failed or validation did not
pass, and 2 for bad arguments or configuration.
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import dataclasses
import json
import math
import os
import re
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import analysis, oracle
from .errors import ConfigError, SelfSimError
from .models import ELadderConstants, get_model
from .netcore import ComponentId, DamageCase, NetworkModel, freq_fin, freq_inf, random_damage, tran_fin, tran_inf
from .polyalg import cancel_common_power

CSV_HEADER = ["omega_rad_s", "re", "im", "mag_db", "phase_deg"]
# measured: tree coefficients evaluate to 1e-8 only up to six generations
TREE_TF_WARN_ABOVE = 6
DEFAULT_GRID = {"wmin": 1e-2, "wmax": 1e3, "points": 200}


# ---------------------------------------------------------------------------
# configuration


@dataclass(frozen=True)
class FrequencyGrid:
    wmin: float = DEFAULT_GRID["wmin"]
    wmax: float = DEFAULT_GRID["wmax"]
    points: int = DEFAULT_GRID["points"]

    def omega(self) -> np.ndarray:
        return np.logspace(math.log10(self.wmin), math.log10(self.wmax), self.points)


@dataclass(frozen=True)
class RunConfig:
    """One network to analyse; ``generations`` is ``None`` for the infinite network."""

    model: NetworkModel
    constants: object
    generations: object
    damage: DamageCase
    grid: FrequencyGrid = field(default_factory=FrequencyGrid)

    @property
    def infinite(self) -> bool:
        return self.generations is None


def _line_of(text: str, key: str, nth: int = 0):
    hits = [m.start() for m in re.finditer(r'"%s"\s*:' % re.escape(key), text)]
    if len(hits) <= nth:
        return None
    return text.count("\n", 0, hits[nth]) + 1


def _positive_number(value, where, line):
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value) or value <= 0:
        raise ConfigError(f"must be a positive number, got {value!r}", field=where, line=line)
    return float(value)


def _parse_grid(raw, text) -> FrequencyGrid:
    if raw is None:
        return FrequencyGrid()
    if not isinstance(raw, dict):
        raise ConfigError("must be an object", field="frequency", line=_line_of(text, "frequency"))
    unknown = set(raw) - {"wmin", "wmax", "points"}
    if unknown:
        key = sorted(unknown)[0]
        raise ConfigError("unknown key", field=f"frequency.{key}", line=_line_of(text, key))
    values = {**DEFAULT_GRID, **raw}
    wmin = _positive_number(values["wmin"], "frequency.wmin", _line_of(text, "wmin"))
    wmax = _positive_number(values["wmax"], "frequency.wmax", _line_of(text, "wmax"))
    points = values["points"]
    if isinstance(points, bool) or not isinstance(points, int) or points < 2:
        raise ConfigError(f"must be an integer >= 2, got {points!r}", field="frequency.points", line=_line_of(text, "points"))
    if wmax < wmin:
        raise ConfigError("wmax must not be below wmin", field="frequency.wmax", line=_line_of(text, "wmax"))
    return FrequencyGrid(wmin, wmax, points)


def _parse_damage(model, raw, text) -> DamageCase:
    if raw is None:
        return DamageCase()
    if not isinstance(raw, list):
        raise ConfigError("must be a list", field="damage", line=_line_of(text, "damage"))
    entries = []
    for i, item in enumerate(raw):
        where = f"damage[{i}]"
        line = _line_of(text, "epsilon", i)
        if not isinstance(item, dict) or "epsilon" not in item:
            raise ConfigError("each entry needs an 'epsilon' and a 'label' or 'kind'/'generation'", field=where, line=line)
        try:
            if "label" in item:
                cid = model.parse_label(item["label"])
            else:
                cid = ComponentId(item["kind"], item["generation"], item.get("branch", 1))
            model.validate_id(cid)
        except KeyError as exc:
            raise ConfigError(f"missing key {exc.args[0]!r}", field=where, line=line) from None
        except (SelfSimError, TypeError, ValueError) as exc:
            raise ConfigError(str(exc), field=where, line=line) from None
        eps = _positive_number(item["epsilon"], f"{where}.epsilon", line)
        entries.append((cid, eps))
    try:
        return DamageCase(tuple(entries))
    except SelfSimError as exc:
        raise ConfigError(str(exc), field="damage", line=_line_of(text, "damage")) from None


def parse_config(text: str) -> RunConfig:
    """Validate a JSON run configuration, reporting the offending field and line."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(exc.msg, line=exc.lineno) from None
    if not isinstance(raw, dict):
        raise ConfigError("the configuration must be a JSON object", line=1)
    unknown = set(raw) - {"model", "constants", "generations", "damage", "frequency"}
    if unknown:
        key = sorted(unknown)[0]
        raise ConfigError("unknown key", field=key, line=_line_of(text, key))
    if "model" not in raw:
        raise ConfigError("required", field="model", line=1)
    try:
        model = get_model(raw["model"])
    except (SelfSimError, TypeError) as exc:
        raise ConfigError(str(exc), field="model", line=_line_of(text, "model")) from None

    given = raw.get("constants", {})
    if not isinstance(given, dict):
        raise ConfigError("must be an object", field="constants", line=_line_of(text, "constants"))
    names = {f.name for f in dataclasses.fields(model.constants_type)}
    for key in given:
        if key not in names:
            raise ConfigError(f"{model.name} has constants {sorted(names)}", field=f"constants.{key}", line=_line_of(text, key))
    try:
        constants = model.constants_type(**given)
    except (SelfSimError, TypeError) as exc:
        raise ConfigError(str(exc), field="constants", line=_line_of(text, "constants")) from None

    gen = raw.get("generations")
    gen_line = _line_of(text, "generations")
    if gen is None:
        raise ConfigError("required (a positive integer or \"infinite\")", field="generations", line=gen_line or 1)
    if isinstance(gen, str) and gen.lower() in ("infinite", "inf"):
        generations = None
    elif isinstance(gen, int) and not isinstance(gen, bool) and gen >= 1:
        generations = gen
    else:
        raise ConfigError(f"must be a positive integer or \"infinite\", got {gen!r}", field="generations", line=gen_line)

    damage = _parse_damage(model, raw.get("damage"), text)
    if generations is not None and damage.depth > generations:
        raise ConfigError(
            f"damage reaches generation {damage.depth} but the network has {generations}",
            field="damage",
            line=_line_of(text, "damage"),
        )
    grid = _parse_grid(raw.get("frequency"), text)
    return RunConfig(model, constants, generations, damage, grid)


def load_config(path: str) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    try:
        return parse_config(text)
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from None


def _override_grid(cfg: RunConfig, args) -> RunConfig:
    values = {k: getattr(args, k) for k in ("wmin", "wmax", "points") if getattr(args, k, None) is not None}
    if not values:
        return cfg
    merged = {**dataclasses.asdict(cfg.grid), **values}
    if merged["points"] < 2:
        raise ConfigError("must be an integer >= 2", field="--points")
    if merged["wmin"] <= 0 or merged["wmax"] <= 0 or not all(map(math.isfinite, (merged["wmin"], merged["wmax"]))):
        raise ConfigError("frequencies must be positive", field="--wmin/--wmax")
    if merged["wmax"] < merged["wmin"]:
        raise ConfigError("wmax must not be below wmin", field="--wmax")
    return dataclasses.replace(cfg, grid=FrequencyGrid(**merged))


# ---------------------------------------------------------------------------
# evaluation helpers


def _threads() -> int:
    raw = os.environ.get("SELFSIM_THREADS")
    if raw is None:
        return min(4, os.cpu_count() or 1)
    try:
        return max(1, int(raw))
    except ValueError:
        raise ConfigError(f"SELFSIM_THREADS must be an integer, got {raw!r}") from None


def _response_fn(cfg: RunConfig):
    if cfg.infinite:
        return lambda w: freq_inf(cfg.model, cfg.damage, cfg.constants, w)
    return lambda w: freq_fin(cfg.model, cfg.damage, cfg.constants, w, cfg.generations)


def evaluate_grid(fn, omega: np.ndarray):
    """Evaluate ``fn`` at each grid point; returns values and ``{row: message}`` for failures."""
    errors = {}

    def one(i):
        try:
            return complex(fn(omega[i]))
        except (SelfSimError, ArithmeticError) as exc:
            errors[i] = f"{type(exc).__name__}: {exc}"
            return complex(math.nan, math.nan)

    chunks = np.array_split(np.arange(omega.size), _threads())

    def block(idx):
        if idx.size == 0:
            return []
        try:
            return list(np.atleast_1d(fn(omega[idx])).astype(complex))
        except (SelfSimError, ArithmeticError):
            return [one(i) for i in idx]

    with ThreadPoolExecutor(max_workers=len(chunks)) as pool:
        parts = list(pool.map(block, chunks))
    values = np.array([v for part in parts for v in part], dtype=complex)
    return values, errors


def bode_rows(omega, values):
    """``(omega, re, im, mag_db, phase_deg)`` rows with the phase unwrapped over finite points."""
    phase = np.full(values.shape, math.nan)
    ok = np.isfinite(values)
    if np.any(ok):
        phase[ok] = np.degrees(np.unwrap(np.angle(values[ok])))
    with np.errstate(divide="ignore", invalid="ignore"):
        mag = 20 * np.log10(np.abs(values))
    return [(float(w), float(v.real), float(v.imag), float(m), float(p)) for w, v, m, p in zip(omega, values, mag, phase)]


def _fmt(x: float) -> str:
    return repr(float(x))


def write_csv(out, header, rows):
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(x) for x in row])


def _report_row_errors(omega, errors):
    for i in sorted(errors):
        print(f"row {i} (omega={_fmt(omega[i])}): {errors[i]}", file=sys.stderr)


@contextlib.contextmanager
def _output(path):
    if path in (None, "-"):
        yield sys.stdout
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            yield fh


def _dump_json(obj, path):
    with _output(path) as out:
        json.dump(obj, out, indent=2)
        out.write("\n")


def _config_summary(cfg: RunConfig) -> dict:
    return {
        "model": cfg.model.name,
        "constants": dataclasses.asdict(cfg.constants),
        "generations": "infinite" if cfg.infinite else cfg.generations,
        "damage": [
            {"label": cfg.model.format_label(cid), "epsilon": eps} for cid, eps in cfg.damage
        ],
    }


def _transfer_function(cfg: RunConfig):
    if cfg.infinite:
        return tran_inf(cfg.model, cfg.damage, cfg.constants)
    if cfg.model.n_sub > 1 and cfg.generations > TREE_TF_WARN_ABOVE:
        print(
            f"warning: {cfg.model.name} transfer functions beyond {TREE_TF_WARN_ABOVE} generations have "
            f"about 2^{cfg.generations} coefficients and lose their significant digits in double precision; "
            f"use 'freq' for responses",
            file=sys.stderr,
        )
    return tran_fin(cfg.model, cfg.damage, cfg.constants, cfg.generations)


# ---------------------------------------------------------------------------
# subcommands


def cmd_freq(args) -> int:
    cfg = _override_grid(load_config(args.config), args)
    omega = cfg.grid.omega()
    values, errors = evaluate_grid(_response_fn(cfg), omega)
    rows = bode_rows(omega, values)
    with _output(args.out) as out:
        if args.format == "json":
            json.dump({"columns": CSV_HEADER, "rows": rows}, out)
            out.write("\n")
        else:
            write_csv(out, CSV_HEADER, rows)
    _report_row_errors(omega, errors)
    return 1 if errors else 0


def cmd_tf(args) -> int:
    cfg = load_config(args.config)
    tf = cancel_common_power(_transfer_function(cfg))
    _dump_json({**_config_summary(cfg), "transfer_function": tf.to_json()}, args.out)
    return 0


def cmd_delta(args) -> int:
    if not args.config_b:
        raise ConfigError("delta needs --config-b", field="--config-b")
    cfg_a = _override_grid(load_config(args.config), args)
    cfg_b = load_config(args.config_b)
    delta = analysis.disturbance(_transfer_function(cfg_a), _transfer_function(cfg_b)).delta
    delta = cancel_common_power(delta)
    _dump_json({"a": _config_summary(cfg_a), "b": _config_summary(cfg_b), "delta": delta.to_json()}, args.out)
    status = 0
    if args.bode_out:
        omega = cfg_a.grid.omega()
        values, errors = evaluate_grid(lambda w: delta(1j * np.asarray(w)), omega)
        with _output(args.bode_out) as out:
            write_csv(out, CSV_HEADER, bode_rows(omega, values))
        _report_row_errors(omega, errors)
        status = 1 if errors else 0
    return status


def cmd_zpk(args) -> int:
    cfg = load_config(args.config)
    if cfg.infinite:
        raise ConfigError("zeros and poles need a finite network", field="generations")
    roots = analysis.zeros_poles(cancel_common_power(_transfer_function(cfg)))
    _dump_json({**_config_summary(cfg), **roots.to_json()}, args.out)
    return 0


def cmd_approx(args) -> int:
    r2, c = analysis.approx_constants(args.beta, args.gamma, args.r1)
    constants = ELadderConstants(args.r1, r2, c)
    h = analysis.build_H(args.g, constants)
    g_tf = tran_fin(get_model("electrical_ladder"), DamageCase(), constants, args.g)
    grid = FrequencyGrid(args.wmin or 1e-1, args.wmax or 1e4, args.points or 200)
    omega = grid.omega()
    err = analysis.approximation_error(h, args.beta, args.gamma, omega)
    report = {
        "beta": args.beta,
        "gamma": args.gamma,
        "r1": args.r1,
        "r2": r2,
        "c": c,
        "g": args.g,
        "G_g": g_tf.to_json(),
        "H_g": h.to_json(),
        "max_relative_error": float(np.max(err)),
    }
    _dump_json(report, args.out)
    if args.sweep_out:
        with _output(args.sweep_out) as out:
            write_csv(out, ["omega_rad_s", "relative_error"], zip(omega, err))
    return 0


def _parse_g_list(text: str):
    out = []
    for item in text.split(","):
        item = item.strip()
        if item.lower() in ("inf", "infinite"):
            out.append(math.inf)
            continue
        try:
            g = int(item)
        except ValueError:
            raise ConfigError(f"not a generation count: {item!r}", field="--g-list") from None
        if g < 1:
            raise ConfigError(f"generation counts must be positive, got {g}", field="--g-list")
        out.append(g)
    return out


def cmd_converge(args) -> int:
    cfg = _override_grid(load_config(args.config), args)
    g_list = _parse_g_list(args.g_list)
    if any(g != math.inf and g < cfg.damage.depth for g in g_list):
        raise ConfigError(f"every g must reach the deepest damage (generation {cfg.damage.depth})", field="--g-list")
    table = analysis.convergence_sweep(cfg.model, cfg.damage, cfg.constants, g_list, cfg.grid.omega())
    header = ["omega_rad_s"] + [f"err_g{'inf' if g == math.inf else g}" for g in g_list]
    rows = [(w, *col) for w, col in zip(table.omega, table.error.T)]
    with _output(args.out) as out:
        if args.format == "json":
            json.dump({"columns": header, "rows": [[float(x) for x in r] for r in rows]}, out)
            out.write("\n")
        else:
            write_csv(out, header, rows)
    return 0


def cmd_validate(args) -> int:
    cfg = _override_grid(load_config(args.config), args)
    g = args.g if args.g is not None else cfg.generations
    if g is None:
        raise ConfigError("validation needs a finite generation count (--g)", field="--g")
    rng = np.random.default_rng(args.seed)
    omega = cfg.grid.omega() if args.points else np.logspace(-2, 3, 10)
    failures = 0
    lines = []
    for trial in range(args.trials):
        damage = random_damage(cfg.model, rng, max_depth=min(4, g))
        ours = np.atleast_1d(freq_fin(cfg.model, damage, cfg.constants, omega, g))
        ref = np.atleast_1d(oracle.direct_freq(cfg.model, damage, cfg.constants, g, omega))
        err = float(np.max(np.abs(ours - ref) / np.abs(ref)))
        ok = err <= args.tol
        failures += not ok
        lines.append(f"trial {trial + 1}: {'PASS' if ok else 'FAIL'} max_rel_err={err:.3e} damage={damage.label(cfg.model)}")
    lines.append(f"{args.trials - failures}/{args.trials} trials within {args.tol:g} of the direct solve")
    with _output(args.out) as out:
        out.write("\n".join(lines) + "\n")
    return 1 if failures else 0


# ---------------------------------------------------------------------------
# argument parsing


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="selfsim",
        description="Frequency responses and transfer functions of self-similar networks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config=True, grid=True, fmt=False):
        if config:
            p.add_argument("--config", required=True, help="JSON run configuration")
        if grid:
            p.add_argument("--wmin", type=float, help="lowest angular frequency (rad/s)")
            p.add_argument("--wmax", type=float, help="highest angular frequency (rad/s)")
            p.add_argument("--points", type=int, help="number of log-spaced grid points")
        p.add_argument("--out", help="output file (default stdout)")
        if fmt:
            p.add_argument("--format", choices=("csv", "json"), default="csv")
        return p

    p = common(sub.add_parser("freq", help="Bode data over a frequency grid"), fmt=True)
    p.set_defaults(func=cmd_freq)

    p = common(sub.add_parser("tf", help="transfer function coefficients as JSON"), grid=False)
    p.set_defaults(func=cmd_tf)

    p = common(sub.add_parser("delta", help="multiplicative disturbance between two configurations"))
    p.add_argument("--config-b", help="configuration of the changed network")
    p.add_argument("--bode-out", help="also write Bode CSV of the disturbance here")
    p.set_defaults(func=cmd_delta)

    p = common(sub.add_parser("zpk", help="zeros and poles of a finite network"), grid=False)
    p.set_defaults(func=cmd_zpk)

    p = common(sub.add_parser("approx", help="rational approximation of sqrt(s^2 + beta s + gamma)"), config=False)
    p.add_argument("beta", type=float)
    p.add_argument("gamma", type=float)
    p.add_argument("r1", type=float)
    p.add_argument("g", type=int)
    p.add_argument("--sweep-out", help="write the relative-error sweep as CSV here")
    p.set_defaults(func=cmd_approx)

    p = common(sub.add_parser("converge", help="distance of finite responses from the infinite one"), fmt=True)
    p.add_argument("--g-list", default="5,10,15", help="comma-separated generation counts, 'inf' allowed")
    p.set_defaults(func=cmd_converge)

    p = common(sub.add_parser("validate", help="compare the recursion with a direct nodal solve"))
    p.add_argument("--g", type=int, help="generation count (default: from the configuration)")
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except SelfSimError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
