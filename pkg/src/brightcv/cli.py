"""Command-line front end: sweeps, thresholds, optimizers and oracle validation.

Configuration is flat ``key = value`` text (``#`` comments); command-line
flags override file values.  Every output file embeds the fully resolved
parameter set as ``# key = value`` header lines (CSV) or a metadata object
(JSON), and ``brightcv replay`` re-executes a run from that header alone.
Identical invocations produce byte-identical output.

Exit codes: 0 success, 1 usage/config error, 2 numerical/physicality
error, 3 oracle validation failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .channel import ChannelParams, attenuation_db, distance_km, eta_from_db
from .detector import (
    DetectorConfig,
    ModeStatistics,
    balanced_variance,
    squeezing_vanish_threshold,
    unbalanced_variance,
)
from .gaussian import NumericalDomainError, PhysicalityError, log_negativity
from .oracle import ModeSpec, OracleConfig, oracle_normalized_variance
from .protocols import (
    SchemeKind,
    SourceParams,
    entanglement_break_threshold,
    entanglement_break_threshold_numeric,
    shared_cm,
)
from .qkd import key_rate, max_tolerable_attenuation, optimal_photon_number

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NUMERICAL = 2
EXIT_ORACLE = 3


class ConfigError(ValueError):
    """Invalid configuration value or combination; message names the field."""


# Canonical parameter set; config files, flags and output metadata all use
# these keys.  None means "not set" and triggers the documented default.
PARAM_TYPES: dict[str, type] = {
    "n_bar": float,
    "n_bar_unmatched": float,
    "m": int,
    "n": int,
    "alpha": float,
    "epsilon": float,
    "eps_tot": float,
    "t_a": float,
    "t_b": float,
    "phi": float,
    "eta": float,
    "attenuation_db": float,
    "chi": float,
    "beta": float,
    "v_s": float,
    "scheme": str,
    "photon_statistics": str,
    "include_channel_noise_photons": bool,
    "sweep": str,
    "start": float,
    "stop": float,
    "points": int,
    "spacing": str,
    "samples": int,
    "batches": int,
    "seed": int,
    "n_bar_values": str,
    "epsilon_values": str,
    "m_values": str,
    "n_values": str,
    "include_unbalanced": bool,
    "n_min": float,
    "n_max": float,
    "max_db": float,
}

DEFAULTS: dict[str, object] = {
    "n_bar": 1.0,
    "m": 500,
    "n": 500,
    "alpha": 10.0,
    "t_a": 0.5,
    "t_b": 0.5,
    "phi": 0.0,
    "chi": 0.0,
    "beta": 0.97,
    "photon_statistics": "thermal",
    "include_channel_noise_photons": False,
    "points": 61,
    "spacing": "linear",
    "samples": 1_000_000,
    "batches": 100,
    "max_db": 60.0,
}

SWEEPABLE = ("attenuation_db", "n_bar", "n_tot", "eps_tot", "chi")

CONVENTION_NOTE = (
    "chi referred to channel input (Bob sees eta*chi); detector mismatch noise "
    "attributed to the untrusted channel at Bob; channel excess-noise photons "
    "excluded from detector brightness unless include_channel_noise_photons"
)


def _coerce(key: str, raw: str):
    if key not in PARAM_TYPES:
        raise ConfigError(f"unknown configuration key '{key}'")
    kind = PARAM_TYPES[key]
    try:
        if kind is bool:
            lowered = raw.strip().lower()
            if lowered in ("true", "1", "yes"):
                return True
            if lowered in ("false", "0", "no"):
                return False
            raise ValueError(raw)
        return kind(raw)
    except ValueError:
        raise ConfigError(f"invalid value {raw!r} for key '{key}'") from None


def read_config(path: str) -> dict:
    """Parse a flat key = value configuration file."""
    params: dict[str, object] = {}
    try:
        with open(path) as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    for lineno, line in enumerate(lines, 1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {stripped!r}")
        key, raw = (part.strip() for part in stripped.split("=", 1))
        params[key] = _coerce(key, raw)
    return params


def merge_params(args: argparse.Namespace) -> dict:
    """defaults < config file < explicit flags."""
    params = dict(DEFAULTS)
    config_path = getattr(args, "config", None)
    if config_path:
        params.update(read_config(config_path))
    for key in PARAM_TYPES:
        value = getattr(args, key, None)
        if value is not None:
            params[key] = value
    return params


def resolve_params(params: dict) -> dict:
    """Fill in derived quantities and check cross-field consistency.

    eta/attenuation_db and epsilon/eps_tot are paired views of one quantity:
    either member may be given; both together must agree (as happens when
    replaying metadata, which records both).  When a target eps_tot cannot
    be realized with the configured LO amplitude, alpha is shrunk so the
    per-mode epsilon stays within [0, 1].
    """
    p = dict(params)
    eta, db = p.get("eta"), p.get("attenuation_db")
    if eta is not None and (not 0.0 < eta <= 1.0):
        raise ConfigError(f"'eta' must lie in (0, 1], got {eta}")
    if db is not None and db < 0.0:
        raise ConfigError(f"'attenuation_db' must be non-negative, got {db}")
    if eta is not None and db is not None:
        if abs(eta - eta_from_db(db)) > 1e-9 * eta:
            raise ConfigError("conflicting 'eta' and 'attenuation_db'")
    elif db is not None:
        p["eta"] = eta_from_db(db)
    elif eta is not None:
        p["attenuation_db"] = attenuation_db(eta)
    else:
        p["eta"], p["attenuation_db"] = 1.0, 0.0

    if p.get("eps_tot") is not None:
        if p["n"] < 1:
            raise ConfigError("'eps_tot' requires at least one unmatched mode ('n')")
        ratio = math.sqrt(p["m"] / p["n"])
        epsilon = p["eps_tot"] * p["alpha"] * ratio
        if epsilon > 1.0:
            p["alpha"] = 0.9 / (p["eps_tot"] * ratio)
            epsilon = 0.9
        if p.get("epsilon") is not None:
            if abs(p["epsilon"] - epsilon) > 1e-9:
                raise ConfigError("conflicting 'epsilon' and 'eps_tot'")
        else:
            p["epsilon"] = epsilon
    elif p.get("epsilon") is None:
        p["epsilon"] = 0.0

    p.setdefault("scheme", "pm")
    if p["scheme"] not in ("pm", "epr"):
        raise ConfigError(f"'scheme' must be 'pm' or 'epr', got {p['scheme']!r}")
    if p["photon_statistics"] not in ("thermal", "coherent"):
        raise ConfigError(f"'photon_statistics' must be 'thermal' or 'coherent'")
    if p.get("spacing") not in ("linear", "log"):
        raise ConfigError(f"'spacing' must be 'linear' or 'log', got {p.get('spacing')!r}")
    return p


def build_objects(p: dict):
    try:
        det = DetectorConfig(
            m=p["m"], n=p["n"], epsilon=p["epsilon"], alpha=p["alpha"],
            phi=p["phi"], t_a=p["t_a"], t_b=p["t_b"],
        )
        source = SourceParams(
            n_bar=p["n_bar"], m=p["m"], n=p["n"],
            n_bar_unmatched=p.get("n_bar_unmatched"),
        )
        ch = ChannelParams(eta=p["eta"], chi=p["chi"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    scheme = SchemeKind.PREPARE_AND_MEASURE if p["scheme"] == "pm" else SchemeKind.EPR_BASED
    return source, ch, det, scheme


def sweep_grid(p: dict) -> np.ndarray:
    name = p.get("sweep")
    if name not in SWEEPABLE:
        raise ConfigError(f"'sweep' must be one of {SWEEPABLE}, got {name!r}")
    if p.get("start") is None or p.get("stop") is None:
        raise ConfigError("sweep needs 'start' and 'stop'")
    points = p["points"]
    if points < 2:
        raise ConfigError(f"'points' must be >= 2, got {points}")
    if p["spacing"] == "log":
        if p["start"] <= 0 or p["stop"] <= 0:
            raise ConfigError("'spacing' = log requires positive 'start' and 'stop'")
        return np.geomspace(p["start"], p["stop"], points)
    return np.linspace(p["start"], p["stop"], points)


def apply_sweep_value(p: dict, name: str, value: float) -> dict:
    q = dict(p)
    if name == "n_tot":
        q["n_bar"] = value / (q["m"] + q["n"])
    elif name == "attenuation_db":
        q["attenuation_db"] = value
        q.pop("eta", None)
    elif name == "eps_tot":
        q["eps_tot"] = value
        q.pop("epsilon", None)
    else:
        q[name] = value
    return resolve_params(q)


def _eval_key_rate_point(task):
    p, name, value = task
    q = apply_sweep_value(p, name, value)
    source, ch, det, _ = build_objects(q)
    result = key_rate(
        source, ch, det, q["beta"],
        include_channel_noise_photons=q["include_channel_noise_photons"],
        photon_statistics=q["photon_statistics"],
    )
    row = [value]
    if name == "attenuation_db":
        row.append(distance_km(value))
    row += [result.i_ab, result.chi_be, result.key_rate]
    return row


def _eval_entanglement_point(task):
    p, name, value = task
    q = apply_sweep_value(p, name, value)
    source, ch, det, scheme = build_objects(q)
    cm = shared_cm(
        source, ch, det, scheme,
        include_channel_noise_photons=q["include_channel_noise_photons"],
        photon_statistics=q["photon_statistics"],
    )
    return [value, log_negativity(cm)]


def _run_points(func, tasks, jobs: int):
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(func, tasks))
    return [func(task) for task in tasks]


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return f"{value:.12g}"
    return str(value)


def write_output(out_path: str | None, metadata: dict, columns: list[str], rows, fmt: str):
    if fmt == "csv":
        lines = [f"# {key} = {_fmt(value)}" for key, value in metadata.items()]
        lines.append(",".join(columns))
        for row in rows:
            lines.append(",".join(_fmt(value) for value in row))
        text = "\n".join(lines) + "\n"
    else:
        payload = {"metadata": metadata, "columns": columns, "rows": [list(r) for r in rows]}
        text = json.dumps(payload, indent=2, default=_fmt) + "\n"
    if out_path:
        with open(out_path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _metadata(command: str, p: dict, extra: dict | None = None) -> dict:
    meta: dict[str, object] = {"command": command}
    for key in PARAM_TYPES:
        if key in p and p[key] is not None:
            meta[key] = p[key]
    if extra:
        meta.update(extra)
    meta["convention"] = CONVENTION_NOTE
    return meta


# --- commands ---------------------------------------------------------------


def cmd_sweep_key_rate(args) -> int:
    p = resolve_params(merge_params(args))
    p.setdefault("sweep", "attenuation_db")
    if p.get("start") is None:
        p["start"], p["stop"] = 0.0, p["max_db"]
    grid = sweep_grid(p)
    name = p["sweep"]
    rows = _run_points(_eval_key_rate_point, [(p, name, float(v)) for v in grid], args.jobs)
    columns = [name] + (["distance_km"] if name == "attenuation_db" else [])
    columns += ["i_ab", "chi_be", "key_rate"]
    write_output(args.out, _metadata("sweep-key-rate", p), columns, rows, args.format)
    return EXIT_OK


def cmd_sweep_entanglement(args) -> int:
    p = merge_params(args)
    p.setdefault("scheme", "epr")
    p = resolve_params(p)
    p.setdefault("sweep", "n_tot")
    if p.get("start") is None:
        p["start"], p["stop"], p["spacing"] = 1.0, 1e7, "log"
    grid = sweep_grid(p)
    name = p["sweep"]
    rows = _run_points(_eval_entanglement_point, [(p, name, float(v)) for v in grid], args.jobs)
    columns = [name, "log_negativity"]
    write_output(args.out, _metadata("sweep-entanglement", p), columns, rows, args.format)
    return EXIT_OK


def cmd_threshold(args) -> int:
    p = resolve_params(merge_params(args))
    source, ch, det, _ = build_objects(p)
    kind = args.kind
    if kind == "squeezing":
        v_s = p.get("v_s", source.v_s)
        n_thr = squeezing_vanish_threshold(v_s, det.eps_tot)
        check = balanced_variance(ModeStatistics.thermal(v_s, n_thr), det.eps_tot)
        columns = ["kind", "v_s", "eps_tot", "n_bar_threshold", "variance_at_threshold"]
        rows = [["squeezing", v_s, det.eps_tot, n_thr, check]]
    elif kind == "entanglement":
        closed = entanglement_break_threshold(det.eps_tot)
        numeric = entanglement_break_threshold_numeric(det, eta=p["eta"])
        columns = ["kind", "eps_tot", "closed_form", "bisection"]
        rows = [["entanglement", det.eps_tot, closed, numeric]]
    elif kind == "attenuation":
        result = max_tolerable_attenuation(
            source, det, p["chi"], p["beta"], max_db=p["max_db"],
            include_channel_noise_photons=p["include_channel_noise_photons"],
            photon_statistics=p["photon_statistics"],
        )
        columns = ["kind", "status", "attenuation_db", "distance_km"]
        if result.attenuation_db is None:
            rows = [["attenuation", result.status, "nan", "nan"]]
        else:
            rows = [["attenuation", result.status, result.attenuation_db,
                     distance_km(result.attenuation_db)]]
    else:  # pragma: no cover - argparse restricts choices
        raise ConfigError(f"unknown threshold kind {kind!r}")
    write_output(args.out, _metadata(f"threshold-{kind}", p), columns, rows, args.format)
    return EXIT_OK


def cmd_optimize_n(args) -> int:
    p = resolve_params(merge_params(args))
    _, ch, det, _ = build_objects(p)
    n_range = (p.get("n_min") or 1e-2, p.get("n_max") or 1e6)
    result = optimal_photon_number(
        ch, det, p["beta"], n_range=n_range,
        include_channel_noise_photons=p["include_channel_noise_photons"],
        photon_statistics=p["photon_statistics"],
    )
    columns = ["n_bar_opt", "n_tot_opt", "key_rate_opt", "grid_fallback"]
    rows = [[result.n_bar, result.n_bar * (p["m"] + p["n"]), result.key_rate,
             result.from_grid_fallback]]
    write_output(args.out, _metadata("optimize-n", p), columns, rows, args.format)
    return EXIT_OK


def _analytic_normalized_variance(det: DetectorConfig, matched: ModeSpec, unmatched: ModeSpec) -> float:
    stats = ModeStatistics(
        var_x=matched.var_x,
        n_bar=unmatched.mean_photons,
        var_n=unmatched.photon_number_variance,
    )
    return unbalanced_variance(stats, det)


def _parse_values(raw: str, kind):
    return [kind(item) for item in raw.split(",") if item.strip()]


def cmd_oracle_validate(args) -> int:
    p = resolve_params(merge_params(args))
    if "seed" not in p:
        raise ConfigError("oracle commands require an explicit '--seed'")
    seed = p["seed"]
    samples = p["samples"]
    alpha = p["alpha"]
    n_bars = _parse_values(p.get("n_bar_values", "0,1,10"), float)
    epsilons = _parse_values(p.get("epsilon_values", "0.1,1.0"), float)
    ms = _parse_values(p.get("m_values", "1,2"), int)
    ns = _parse_values(p.get("n_values", "1,2"), int)

    grid = [
        (DetectorConfig(m=m, n=n, epsilon=epsilon, alpha=alpha), n_bar)
        for n_bar in n_bars for epsilon in epsilons for m in ms for n in ns
    ]
    if p.get("include_unbalanced", True):
        det_u = DetectorConfig(m=1, n=1, epsilon=0.5, alpha=5.0, t_a=0.51, t_b=0.49)
        grid.append((det_u, 100.0))

    columns = ["m", "n", "epsilon", "t_a", "t_b", "n_bar", "analytic", "oracle",
               "stderr", "z", "status"]
    rows = []
    failed = False
    for det, n_bar in grid:
        matched = ModeSpec.thermal(n_bar)
        unmatched = ModeSpec.thermal(n_bar)
        cfg = OracleConfig(det, matched, unmatched, samples=samples, seed=seed,
                           batches=p["batches"])
        est = oracle_normalized_variance(cfg, jobs=args.jobs)
        analytic = _analytic_normalized_variance(det, matched, unmatched)
        z = (est.value - analytic) / est.stderr if est.stderr > 0 else 0.0
        status = "pass"
        noise_term = analytic - matched.var_x
        if noise_term > 0 and est.stderr > 0.1 * noise_term:
            status = "warn-samples"
        if abs(z) > 3.0:
            status = "fail"
            failed = True
        rows.append([det.m, det.n, det.epsilon, det.t_a, det.t_b, n_bar,
                     analytic, est.value, est.stderr, z, status])

    meta = _metadata("oracle-validate", p, {"seed": seed, "samples": samples})
    write_output(args.out, meta, columns, rows, args.format)
    return EXIT_ORACLE if failed else EXIT_OK


def read_metadata(path: str) -> dict:
    """Recover the resolved parameter set from an output file's header."""
    with open(path) as fh:
        first = fh.read(1)
        fh.seek(0)
        if first == "{":
            meta = json.load(fh)["metadata"]
            return {k: (_coerce(k, str(v)) if k in PARAM_TYPES else v) for k, v in meta.items()}
        meta = {}
        for line in fh:
            if not line.startswith("#"):
                break
            body = line[1:].strip()
            if "=" not in body:
                continue
            key, raw = (part.strip() for part in body.split("=", 1))
            if key in PARAM_TYPES:
                meta[key] = _coerce(key, raw)
            else:
                meta[key] = raw
        return meta


def cmd_replay(args) -> int:
    meta = read_metadata(args.input)
    command = meta.get("command")
    handlers = {
        "sweep-key-rate": cmd_sweep_key_rate,
        "sweep-entanglement": cmd_sweep_entanglement,
        "threshold-squeezing": cmd_threshold,
        "threshold-entanglement": cmd_threshold,
        "threshold-attenuation": cmd_threshold,
        "optimize-n": cmd_optimize_n,
        "oracle-validate": cmd_oracle_validate,
    }
    if command not in handlers:
        raise ConfigError(f"cannot replay command {command!r} from {args.input}")
    replay_args = argparse.Namespace(**{key: None for key in PARAM_TYPES})
    replay_args.config = None
    replay_args.jobs = args.jobs
    replay_args.out = args.out
    replay_args.format = args.format
    for key, value in meta.items():
        if key in PARAM_TYPES:
            setattr(replay_args, key, value)
    if command.startswith("threshold-"):
        replay_args.kind = command.split("-", 1)[1]
    replay_args.seed = meta.get("seed")
    return handlers[command](replay_args)


# --- argument parsing -------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # exit 1 on usage errors, not argparse's 2
        self.print_usage(sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _add_common(sub):
    sub.add_argument("--config", help="flat key = value configuration file")
    sub.add_argument("--format", choices=("csv", "json"), default="csv")
    sub.add_argument("--out", help="output path (default: stdout)")
    sub.add_argument("--jobs", type=int, default=1)
    for key, kind in PARAM_TYPES.items():
        flag = "--" + key.replace("_", "-")
        if kind is bool:
            sub.add_argument(flag, dest=key, action="store_const", const=True, default=None)
        else:
            sub.add_argument(flag, dest=key, type=kind, default=None)


def build_parser() -> _Parser:
    parser = _Parser(prog="brightcv", description=__doc__)
    subs = parser.add_subparsers(dest="command", required=True)

    for name, func in (
        ("sweep-key-rate", cmd_sweep_key_rate),
        ("sweep-entanglement", cmd_sweep_entanglement),
        ("optimize-n", cmd_optimize_n),
        ("oracle-validate", cmd_oracle_validate),
    ):
        sub = subs.add_parser(name)
        _add_common(sub)
        sub.set_defaults(func=func)

    sub = subs.add_parser("threshold")
    sub.add_argument("kind", choices=("squeezing", "entanglement", "attenuation"))
    _add_common(sub)
    sub.set_defaults(func=cmd_threshold)

    sub = subs.add_parser("replay")
    sub.add_argument("input", help="output file of a previous run")
    sub.add_argument("--format", choices=("csv", "json"), default="csv")
    sub.add_argument("--out", help="output path (default: stdout)")
    sub.add_argument("--jobs", type=int, default=1)
    sub.set_defaults(func=cmd_replay)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (PhysicalityError, NumericalDomainError, ZeroDivisionError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    raise SystemExit(main())
