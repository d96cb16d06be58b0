"""Command-line interface: ``cabm <subcommand> [flags]``.

Settings resolve as flags > config file (``--config``) > defaults; the
default seed comes from ``$CABM_SEED`` when set.  Exit status is 0 when every
requested check passes, 1 when a check fails and 2 for invalid usage.
"""

from __future__ import annotations

import argparse
import configparser
import io
import json
import os
import sys

import numpy as np

from . import data as D
from . import kernel as Kmod
from . import sim as S
from . import verify as V
from ._backend import BACKEND

SEED_ENV = "CABM_SEED"
EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# value parsers


def _floats(text: str) -> list:
    try:
        return [float(v) for v in str(text).split(",") if v.strip()]
    except ValueError as e:
        raise UsageError(f"expected comma-separated numbers, got {text!r}") from e


def _grid(text: str) -> list:
    """``lo:hi:step`` inclusive of ``hi`` up to rounding."""
    try:
        lo, hi, step = (float(v) for v in str(text).split(":"))
    except ValueError as e:
        raise UsageError(f"grid must be lo:hi:step, got {text!r}") from e
    if not (step > 0 and hi > lo):
        raise UsageError("grid needs hi > lo and step > 0")
    n = int(round((hi - lo) / step))
    return [float(f"{lo + i * step:.12g}") for i in range(n + 1)]


def _pairs(text: str) -> list:
    out = []
    for item in str(text).split(","):
        if item.strip():
            try:
                i, j = item.split("-")
                out.append((int(i), int(j)))
            except ValueError as e:
                raise UsageError(f"pairs look like 3-7,4-9; got {text!r}") from e
    return out


def _step_function(text: str) -> D.StepFunction:
    """``b1,b2,...|v0,v1,...`` or JSON ``{"breakpoints": [...], "values": [...]}``."""
    text = str(text).strip()
    try:
        if text.startswith("{"):
            obj = json.loads(text)
            return D.StepFunction(tuple(obj["breakpoints"]), tuple(obj["values"]))
        bp, vals = text.split("|")
        return D.StepFunction(tuple(_floats(bp)), tuple(_floats(vals)))
    except (ValueError, KeyError) as e:
        raise UsageError(f"bad step function {text!r}: {e}") from e


def _bool(text) -> bool:
    if isinstance(text, bool):
        return text
    v = str(text).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise UsageError(f"expected a boolean, got {text!r}")


# option name -> (parser, default, help)
OPTIONS = {
    "theta": (float, 0.0, "reaction parameter in [0, 1]"),
    "t": (float, 1.0, "observation time"),
    "dt": (float, S.DEFAULT_DT, "time step"),
    "reps": (int, 10_000, "Monte Carlo replicas"),
    "seed": (int, None, f"RNG seed (default ${SEED_ENV} or 0)"),
    "workers": (int, 1, "threads for replica batches"),
    "data": (str, "empty", "initial data: maximal | empty | points:x1,x2,... | JSON | path"),
    "format": (str, None, "csv or json"),
    "out": (str, "-", "output path, - for stdout"),
    "grid": (_grid, None, "lo:hi:step"),
    "points": (_floats, None, "comma-separated points"),
    "record_every": (int, 0, "record every k steps (0: final configurations only)"),
    "pairs": (_pairs, [], "two-point bin pairs, e.g. 3-7,4-9"),
    "phi": (_step_function, None, "step function b1,b2|v0,v1,v2"),
    "tol": (float, 1e-6, "Fredholm tail tolerance"),
    "mc": (_bool, True, "also run the Monte Carlo side"),
    "k": (int, 3, "cluster size"),
    "eps": (float, 1e-3, "cluster spacing"),
    "f": (_step_function, None, "step function to approximate"),
    "n": (int, 40, "approximation level"),
    "quick": (_bool, False, "reduced acceptance sizes"),
    "method": (str, "auto", "auto | closed | quadrature"),
}

COMMON = ("theta", "t", "dt", "reps", "seed", "workers", "data", "format", "out")
SUBCOMMANDS = {
    "simulate": (COMMON + ("record_every",), "csv", "dump simulated configurations"),
    "kernel": (("theta", "t", "data", "grid", "method", "format", "out"), "csv",
               "tabulate K and its derivatives on a grid"),
    "duality-check": (COMMON + ("points",), "json", "Pfaffian duality vs Monte Carlo"),
    "intensity-check": (COMMON + ("grid", "pairs"), "json", "intensities vs histograms"),
    "laplace": (COMMON + ("phi", "tol", "mc"), "json", "Fredholm series Laplace functional"),
    "mixture-check": (COMMON + ("k", "eps", "points"), "json", "clustered-start identities"),
    "approx": (("f", "n", "format", "out"), "json", "spin approximation of product data"),
    "selftest": (("quick", "seed", "format", "out"), "json", "run the acceptance suite"),
}
REQUIRED = {"kernel": ("grid",), "duality-check": ("points",), "intensity-check": ("grid",),
            "laplace": ("phi",), "approx": ("f",)}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="cabm", description="Coalescing/annihilating Brownian motions: "
                "simulation and Pfaffian checks.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, (opts, _, helptext) in SUBCOMMANDS.items():
        sp = sub.add_parser(name, help=helptext, description=helptext)
        sp.add_argument("--config", default=None, help="key = value settings file")
        for o in opts:
            _, default, h = OPTIONS[o]
            flag = "--" + o.replace("_", "-")
            if OPTIONS[o][0] is _bool:
                sp.add_argument(flag, dest=o, nargs="?", const="true", default=argparse.SUPPRESS,
                                help=h)
            else:
                sp.add_argument(flag, dest=o, default=argparse.SUPPRESS, help=h)
    return p


def read_config(path: str) -> dict:
    """``key = value`` lines; ``#`` comments; keys may use dashes or underscores."""
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",))
    try:
        with open(path) as fh:
            cp.read_string("[cabm]\n" + fh.read())
    except (OSError, configparser.Error) as e:
        raise UsageError(f"cannot read config {path}: {e}") from e
    out = {}
    for k, v in cp["cabm"].items():
        out[k.replace("-", "_")] = v.strip().strip('"').strip("'")
    return out


def resolve(command: str, flags: dict, env=None) -> dict:
    env = os.environ if env is None else env
    opts, fmt_default, _ = SUBCOMMANDS[command]
    raw = {}
    if flags.get("config"):
        for k, v in read_config(flags["config"]).items():
            if k not in opts:
                raise UsageError(f"config key {k!r} does not apply to {command}")
            raw[k] = v
    raw.update({k: v for k, v in flags.items() if k in opts})
    cfg = {}
    for o in opts:
        conv, default, _ = OPTIONS[o]
        if o in raw:
            v = raw[o]
            try:
                cfg[o] = conv(v) if isinstance(v, str) else v
            except (ValueError, TypeError) as e:
                raise UsageError(f"bad value for --{o}: {v!r}") from e
        else:
            cfg[o] = default
    if "seed" in opts and cfg["seed"] is None:
        try:
            cfg["seed"] = int(env.get(SEED_ENV, "0"))
        except ValueError as e:
            raise UsageError(f"${SEED_ENV} must be an integer") from e
    if "seed" in cfg:
        cfg["seed"] = S.normalize_seed(cfg["seed"])
    if cfg.get("format") is None:
        cfg["format"] = fmt_default
    if cfg["format"] not in ("csv", "json"):
        raise UsageError("--format must be csv or json")
    for o in REQUIRED.get(command, ()):
        if cfg.get(o) is None:
            raise UsageError(f"{command} needs --{o.replace('_', '-')}")
    if "theta" in cfg and not 0.0 <= cfg["theta"] <= 1.0:
        raise UsageError("--theta must lie in [0, 1]")
    if "t" in cfg and not cfg["t"] > 0:
        raise UsageError("--t must be positive")
    if "reps" in cfg and cfg["reps"] < 1:
        raise UsageError("--reps must be >= 1")
    return cfg


def _config_record(command: str, cfg: dict) -> dict:
    rec = {"command": command, "backend": BACKEND}
    for k, v in cfg.items():
        if isinstance(v, D.StepFunction):
            v = {"breakpoints": list(v.breakpoints), "values": list(v.values)}
        elif isinstance(v, list):
            v = [list(x) if isinstance(x, tuple) else x for x in v]
        rec[k] = v
    return rec


def _csv_preamble(record: dict) -> str:
    return "".join(f"# {k}={json.dumps(record[k], sort_keys=True)}\n" for k in sorted(record))


def _sim_config(cfg: dict) -> S.SimConfig:
    return S.SimConfig(theta=cfg["theta"], t_end=cfg["t"], dt=min(cfg["dt"], cfg["t"]),
                       seed=cfg["seed"], reps=cfg["reps"], workers=cfg["workers"])


def _data(cfg: dict):
    try:
        f = D.parse_descriptor(cfg["data"])
    except (OSError, ValueError, KeyError) as e:
        raise UsageError(f"bad --data: {e}") from e
    try:
        f.validate(cfg["theta"])
    except ValueError as e:
        raise UsageError(str(e)) from e
    return f


# ---------------------------------------------------------------------------
# subcommands: each returns (text, exit_code)


def _emit_reports(reports, cfg, record):
    ok = all(r.passed for r in reports)
    if cfg["format"] == "json":
        text = V.reports_json(reports, config=record, all_pass=ok) + "\n"
    else:
        text = _csv_preamble(record) + V.reports_csv(reports)
    return text, EXIT_OK if ok else EXIT_FAIL


def cmd_simulate(cfg, record):
    f = _data(cfg)
    sc = _sim_config(cfg)
    real = V.realize_initial(f, cfg["theta"], cfg["t"])
    sc = V._sim_for(real, sc, cfg["theta"], cfg["t"])
    if cfg["record_every"] > 0:
        trajs = [S.simulate_trajectory(real.config, sc, r, cfg["record_every"])
                 for r in range(cfg["reps"])]
        rows = [row for tr in trajs for row in S.trajectory_rows(tr)]
    else:
        batch = S.simulate_batch(real.config, sc)
        rows = list(S.batch_rows(batch))
    if cfg["format"] == "csv":
        s = io.StringIO()
        s.write(_csv_preamble(record))
        S.write_samples_csv(rows, s)
        return s.getvalue(), EXIT_OK
    counts = np.array([len(p) for _, _, p in rows])
    body = {"config": record, "realization": real.note,
            "samples": [{"replicate": r, "t": t, "positions": list(map(float, p))}
                        for r, t, p in rows],
            "summary": {"mean_count": float(counts.mean()), "snapshots": len(rows)}}
    return json.dumps(body, sort_keys=True) + "\n", EXIT_OK


def cmd_kernel(cfg, record):
    f = _data(cfg)
    g = np.array(cfg["grid"])
    iu, ju = np.triu_indices(g.size)
    x, y = g[iu], g[ju]
    try:
        K, DxK, DyK, DxyK = Kmod.kernel_arrays(f, cfg["theta"], cfg["t"], x, y, method=cfg["method"])
    except ValueError as e:
        raise UsageError(str(e)) from e
    if cfg["format"] == "csv":
        s = io.StringIO()
        s.write(_csv_preamble(record))
        s.write("x,y,K,DxK,DyK,DxyK\n")
        for row in zip(x, y, K, DxK, DyK, DxyK):
            s.write(",".join(S.fmt12(v) for v in row) + "\n")
        return s.getvalue(), EXIT_OK
    body = {"config": record, "x": x.tolist(), "y": y.tolist(), "K": K.tolist(),
            "DxK": DxK.tolist(), "DyK": DyK.tolist(), "DxyK": DxyK.tolist()}
    return json.dumps(body, sort_keys=True) + "\n", EXIT_OK


def cmd_duality(cfg, record):
    f = _data(cfg)
    pts = cfg["points"]
    if len(pts) < 2 or len(pts) % 2 or any(b <= a for a, b in zip(pts, pts[1:])):
        raise UsageError("--points needs an even number of increasing values")
    rep = V.duality_check(f, cfg["theta"], cfg["t"], pts, _sim_config(cfg))
    return _emit_reports([rep], cfg, record)


def cmd_intensity(cfg, record):
    f = _data(cfg)
    nb = len(cfg["grid"]) - 1
    if any(not (0 <= i < nb and 0 <= j < nb) for i, j in cfg["pairs"]):
        raise UsageError("--pairs index out of range")
    rep = V.intensity_check(f, cfg["theta"], cfg["t"], cfg["grid"], _sim_config(cfg),
                            pairs=cfg["pairs"])
    return _emit_reports([rep], cfg, record)


def cmd_laplace(cfg, record):
    f = _data(cfg)
    phi = cfg["phi"]
    try:
        S._check_phi(phi)
    except ValueError as e:
        raise UsageError(str(e)) from e
    if cfg["mc"]:
        rep = V.laplace_check(f, cfg["theta"], cfg["t"], phi, _sim_config(cfg), tol=cfg["tol"])
        return _emit_reports([rep], cfg, record)
    fr = V.laplace_fredholm(f, cfg["theta"], cfg["t"], phi, tol=cfg["tol"])
    rep = V.CheckReport("laplace_series", fr.value, None, 0.0, cfg["tol"], fr.converged,
                        {"data": f.to_dict(), "theta": cfg["theta"], "t": cfg["t"]},
                        {"fredholm": fr.to_dict()})
    return _emit_reports([rep], cfg, record)


def cmd_mixture(cfg, record):
    if cfg["k"] < 2:
        raise UsageError("--k must be >= 2")
    pts = cfg["points"] or [-0.5, 0.5]
    reps = V.mixture_check(cfg["theta"], cfg["k"], cfg["t"], pts, _sim_config(cfg),
                           eps=cfg["eps"])
    return _emit_reports(reps, cfg, record)


def cmd_approx(cfg, record):
    if cfg["n"] < 1:
        raise UsageError("--n must be >= 1")
    mu = D.approx_product(cfg["f"], cfg["n"])
    pos = mu.positions
    if cfg["format"] == "csv":
        s = io.StringIO()
        s.write(_csv_preamble(record))
        s.write("index,position\n")
        for i, p in enumerate(pos):
            s.write(f"{i},{S.fmt12(p)}\n")
        return s.getvalue(), EXIT_OK
    body = {"config": record, "points": pos.tolist(), "count": int(pos.size)}
    return json.dumps(body, sort_keys=True) + "\n", EXIT_OK


def cmd_selftest(cfg, record, echo=None):
    from . import acceptance

    results = acceptance.run_all(quick=cfg["quick"], seed=cfg["seed"], echo=echo)
    ok = all(r.passed for r in results)
    if cfg["format"] == "csv":
        s = io.StringIO()
        s.write(_csv_preamble(record))
        s.write("criterion,name,pass,summary\n")
        for r in results:
            s.write(f"{r.number},{r.name},{'true' if r.passed else 'false'},\"{r.summary}\"\n")
        text = s.getvalue()
    else:
        body = {"schema_version": V.SCHEMA_VERSION, "config": record, "all_pass": ok,
                "criteria": [r.to_dict() for r in results]}
        text = json.dumps(body, sort_keys=True, indent=2) + "\n"
    return text, EXIT_OK if ok else EXIT_FAIL


HANDLERS = {"simulate": cmd_simulate, "kernel": cmd_kernel, "duality-check": cmd_duality,
            "intensity-check": cmd_intensity, "laplace": cmd_laplace,
            "mixture-check": cmd_mixture, "approx": cmd_approx, "selftest": cmd_selftest}


def _glue_negative_values(argv: list) -> list:
    """Rewrite ``--grid -3:3:0.1`` as ``--grid=-3:3:0.1`` so argparse accepts it."""
    valued = {"--" + o.replace("_", "-") for o, spec in OPTIONS.items() if spec[0] is not _bool}
    valued.add("--config")
    out, i = [], 0
    while i < len(argv):
        a = argv[i]
        if a in valued and i + 1 < len(argv) and argv[i + 1].startswith("-") \
                and not argv[i + 1].startswith("--") and len(argv[i + 1]) > 1:
            out.append(f"{a}={argv[i + 1]}")
            i += 2
            continue
        out.append(a)
        i += 1
    return out


def run(argv=None, env=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    argv = _glue_negative_values(list(sys.argv[1:] if argv is None else argv))
    try:
        ns = parser.parse_args(argv)
        command = ns.command
        cfg = resolve(command, {k: v for k, v in vars(ns).items() if k != "command"}, env)
        record = _config_record(command, cfg)
        if command == "selftest":
            text, code = cmd_selftest(cfg, record, echo=lambda s: print(s, file=stderr))
        else:
            text, code = HANDLERS[command](cfg, record)
    except (UsageError, ValueError) as e:
        parser.print_usage(stderr)
        print(f"cabm: error: {e}", file=stderr)
        return EXIT_USAGE
    if cfg["out"] == "-":
        stdout.write(text)
    else:
        with open(cfg["out"], "w", newline="") as fh:
            fh.write(text)
    return code


def main() -> None:
    try:
        code = run()
        sys.stdout.flush()
    except BrokenPipeError:
        # downstream closed early, e.g. piping into head
        os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
        code = EXIT_OK
    sys.exit(code)


if __name__ == "__main__":
    main()
