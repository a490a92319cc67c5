"""Command-line front end: one JSON configuration in, CSV and key=value text out.

    optoscatter <command> --config <path> [--out <path>] [--workers N]

Commands are fc, joint-spectrum, transient, g2scan and validate.  The CSV
goes to --out (or stdout); any key=value report goes to stdout, or to stderr
when the CSV already occupies stdout.  Exit status is 0 on success, 2 when the
configuration or a parameter is rejected and 3 when a numerical method fails
to converge or a truncation falls short.

Configuration keys (all blocks optional except the physical parameters)::

    {"g0": 0.3, "gamma_c": 0.1, "epsilon": 0.01,
     "delta1": "-nu", "delta2": "-nu",
     "mirror": {"kind": "fock", "n0": 0},
     "truncation": {"n_ph": 6, "tol": 1e-8, "k_window": null, "quad_tol": 1e-6},
     "order": "exact",
     "grid": {"lo": -2.5, "hi": 1.5, "n": 241},
     "times": {"start": 0, "stop": 200, "num": 401},
     "t_probe": 50,
     "scan": {"start": 0.05, "stop": 1.4, "step": 0.01},
     "oracle": {"n_ph": 3, "n_k": 801, "w": 6, "t_end": 100, "num_times": 51,
                "rtol": 1e-6, "atol": 1e-8, "factors": [0.5, 0.75, 1], "threshold": 0.01},
     "fc": {"beta": 0.4, "dim": 6, "order": "exact"}}

``"-nu"`` in a detuning resolves to -g0^2.  ``"g0": "scan"`` marks a g2scan
config whose coupling runs over the scan block.  ``"n_ph": "auto"`` picks the
smallest truncation whose Franck-Condon tail is below ``tol``.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass, field, replace

import numpy as np

from .core import (ConvergenceError, Fock, InvalidParameterError, MirrorInit, OptoscatterError,
                   PhotonPacket, SystemParams, Truncation, TruncationError, mirror_from_dict,
                   n_ph_for_tail)
from .franck_condon import ORDERS, fc_table
from .spectrum import GridSpec

COMMANDS = ("fc", "joint-spectrum", "transient", "g2scan", "validate")
EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL = 0, 2, 3
NU_TOKEN = "-nu"
SCAN_TOKEN = "scan"
AUTO_TOKEN = "auto"


class ConfigError(InvalidParameterError):
    """A configuration document that cannot be turned into a RunConfig."""


# ---------------------------------------------------------------- value checks


def _is_number(x) -> bool:
    return isinstance(x, (int, float)) and not isinstance(x, bool)


def _num(d: dict, key: str, where: str, default=None, integer: bool = False):
    if key not in d:
        if default is None:
            raise ConfigError(f"{where}{key}", "required")
        return default
    x = d[key]
    if integer:
        if isinstance(x, bool) or not isinstance(x, int):
            raise ConfigError(f"{where}{key}", f"must be an integer, got {x!r}")
        return x
    if not _is_number(x) or not math.isfinite(x):
        raise ConfigError(f"{where}{key}", f"must be a finite number, got {x!r}")
    return float(x)


def _strict(d, allowed, where: str) -> dict:
    if not isinstance(d, dict):
        raise ConfigError(where.rstrip(".") or "config", f"must be a JSON object, got {type(d).__name__}")
    extra = sorted(set(d) - set(allowed))
    if extra:
        raise ConfigError(where + extra[0], f"unknown key (allowed: {sorted(allowed)})")
    return d


def _order(x, where: str) -> str:
    if x not in ORDERS:
        raise ConfigError(where, f"expected one of {list(ORDERS)}, got {x!r}")
    return x


# ---------------------------------------------------------------- config blocks


@dataclass(frozen=True)
class TimeSpec:
    start: float = 0.0
    stop: float = 200.0
    num: int = 401

    def __post_init__(self):
        if not 0 <= self.start <= self.stop:
            raise ConfigError("times", f"need 0 <= start <= stop, got [{self.start}, {self.stop}]")
        if self.num < 1:
            raise ConfigError("times.num", "must be >= 1")

    @property
    def values(self) -> np.ndarray:
        return np.linspace(self.start, self.stop, self.num)


@dataclass(frozen=True)
class ScanSpec:
    start: float = 0.05
    stop: float = 1.4
    step: float = 0.01

    def __post_init__(self):
        if not (self.start >= 0 and self.stop >= self.start and self.step > 0):
            raise ConfigError("scan", f"need 0 <= start <= stop and step > 0, got "
                              f"({self.start}, {self.stop}, {self.step})")

    @property
    def values(self) -> np.ndarray:
        n = int(math.floor((self.stop - self.start) / self.step + 1e-9)) + 1
        return np.round(self.start + self.step * np.arange(n), 12)


@dataclass(frozen=True)
class OracleSpec:
    n_ph: int = 3
    n_k: int = 801
    w: float = 6.0
    t_end: float = 100.0
    num_times: int = 51
    rtol: float = 1e-6
    atol: float = 1e-8
    factors: tuple = (0.5, 0.75, 1.0)
    threshold: float = 1e-2

    def __post_init__(self):
        if self.n_ph < 0 or self.n_k < 3 or self.num_times < 2:
            raise ConfigError("oracle", "need n_ph >= 0, n_k >= 3 and num_times >= 2")
        for name in ("w", "t_end", "rtol", "atol", "threshold"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"oracle.{name}", "must be > 0")
        f = self.factors
        if len(f) < 2 or any(b <= a for a, b in zip(f, f[1:])) or f[-1] != 1.0 or f[0] <= 0:
            raise ConfigError("oracle.factors", f"need >= 2 increasing positive values ending at 1, got {list(f)}")


@dataclass(frozen=True)
class FcSpec:
    beta: float = 0.4
    dim: int = 6
    order: str = "exact"

    def __post_init__(self):
        if self.dim < 1:
            raise ConfigError("fc.dim", "must be >= 1")
        _order(self.order, "fc.order")


@dataclass(frozen=True)
class RunConfig:
    """Validated and resolved inputs of one CLI run.

    ``g0`` is a float, or the string "scan" for a g2scan configuration, in
    which case both detunings stay at the "-nu" token and are resolved per
    scan point.
    """

    g0: float | str
    gamma_c: float
    epsilon: float
    delta1: float | str
    delta2: float | str
    mirror: MirrorInit = field(default_factory=Fock)
    truncation: Truncation = field(default_factory=Truncation)
    order: str = "exact"
    grid: GridSpec = field(default_factory=GridSpec)
    times: TimeSpec = field(default_factory=TimeSpec)
    t_probe: float = 50.0
    scan: ScanSpec = field(default_factory=ScanSpec)
    oracle: OracleSpec = field(default_factory=OracleSpec)
    fc: FcSpec = field(default_factory=FcSpec)

    @property
    def is_scan(self) -> bool:
        return self.g0 == SCAN_TOKEN

    @property
    def params(self) -> SystemParams:
        if self.is_scan:
            raise ConfigError("g0", "a scan configuration has no single coupling")
        return SystemParams(self.g0, self.gamma_c)

    @property
    def packet(self) -> PhotonPacket:
        if self.is_scan:
            raise ConfigError("g0", "a scan configuration has no single packet")
        return PhotonPacket(self.delta1, self.delta2, self.epsilon)

    def to_dict(self) -> dict:
        tr = self.truncation
        return {
            "g0": self.g0, "gamma_c": self.gamma_c, "epsilon": self.epsilon,
            "delta1": self.delta1, "delta2": self.delta2,
            "mirror": self.mirror.to_dict(),
            "truncation": {"n_ph": tr.n_ph, "tol": tr.tol, "k_window": tr.k_window,
                           "quad_tol": tr.quad_tol},
            "order": self.order,
            "grid": {"lo": self.grid.lo, "hi": self.grid.hi, "n": self.grid.n},
            "times": {"start": self.times.start, "stop": self.times.stop, "num": self.times.num},
            "t_probe": self.t_probe,
            "scan": {"start": self.scan.start, "stop": self.scan.stop, "step": self.scan.step},
            "oracle": {"n_ph": self.oracle.n_ph, "n_k": self.oracle.n_k, "w": self.oracle.w,
                       "t_end": self.oracle.t_end, "num_times": self.oracle.num_times,
                       "rtol": self.oracle.rtol, "atol": self.oracle.atol,
                       "factors": list(self.oracle.factors), "threshold": self.oracle.threshold},
            "fc": {"beta": self.fc.beta, "dim": self.fc.dim, "order": self.fc.order},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))


_TOP_KEYS = ("g0", "gamma_c", "epsilon", "delta1", "delta2", "mirror", "truncation", "order",
             "grid", "times", "t_probe", "scan", "oracle", "fc")


def _parse_truncation(d, params_for_auto, mirror) -> Truncation:
    d = _strict(d, ("n_ph", "tol", "k_window", "quad_tol"), "truncation.")
    tol = _num(d, "tol", "truncation.", 1e-8)
    quad_tol = _num(d, "quad_tol", "truncation.", 1e-6)
    kw = d.get("k_window")
    if kw is not None:
        kw = _num(d, "k_window", "truncation.")
    n_ph = d.get("n_ph", 6)
    if n_ph == AUTO_TOKEN:
        n0_max = mirror.n0_max(tol)
        n_ph = n_ph_for_tail(params_for_auto, n0_max, tol)
    else:
        n_ph = _num(d, "n_ph", "truncation.", 6, integer=True)
    return Truncation(n_ph, tol, kw, quad_tol)


def _from_dict(doc) -> RunConfig:
    doc = _strict(doc, _TOP_KEYS, "")
    gamma_c = _num(doc, "gamma_c", "")
    epsilon = _num(doc, "epsilon", "")
    if not epsilon > 0:
        raise ConfigError("epsilon", f"must be > 0, got {epsilon}")
    scan = ScanSpec()
    if "scan" in doc:
        sd = _strict(doc["scan"], ("start", "stop", "step"), "scan.")
        scan = ScanSpec(_num(sd, "start", "scan.", 0.05), _num(sd, "stop", "scan.", 1.4),
                        _num(sd, "step", "scan.", 0.01))
    g0 = doc.get("g0")
    if g0 == SCAN_TOKEN:
        for key in ("delta1", "delta2"):
            if doc.get(key, NU_TOKEN) != NU_TOKEN:
                raise ConfigError(key, 'a g0 scan keeps both photons at the "-nu" resonance')
        deltas = (NU_TOKEN, NU_TOKEN)
        auto_params = SystemParams(float(scan.values.max()), gamma_c)
    else:
        g0 = _num(doc, "g0", "")
        auto_params = SystemParams(g0, gamma_c)
        deltas = []
        for key in ("delta1", "delta2"):
            v = doc.get(key)
            deltas.append(-g0**2 if v == NU_TOKEN else _num(doc, key, ""))
        PhotonPacket(deltas[0], deltas[1], epsilon)
    mirror = mirror_from_dict(doc.get("mirror", {"kind": "fock", "n0": 0}))
    trunc = _parse_truncation(doc.get("truncation", {}), auto_params, mirror)
    order = _order(doc.get("order", "exact"), "order")
    grid = GridSpec()
    if "grid" in doc:
        gd = _strict(doc["grid"], ("lo", "hi", "n"), "grid.")
        grid = GridSpec(_num(gd, "lo", "grid.", -2.5), _num(gd, "hi", "grid.", 1.5),
                        _num(gd, "n", "grid.", 241, integer=True))
    times = TimeSpec()
    if "times" in doc:
        td = _strict(doc["times"], ("start", "stop", "num"), "times.")
        times = TimeSpec(_num(td, "start", "times.", 0.0), _num(td, "stop", "times.", 200.0),
                         _num(td, "num", "times.", 401, integer=True))
    t_probe = _num(doc, "t_probe", "", 50.0)
    if not t_probe > 0:
        raise ConfigError("t_probe", "must be > 0")
    oracle = OracleSpec()
    if "oracle" in doc:
        od = _strict(doc["oracle"], [f for f in OracleSpec.__dataclass_fields__], "oracle.")
        kw = {}
        for k, f in OracleSpec.__dataclass_fields__.items():
            if k not in od:
                continue
            if k == "factors":
                if not isinstance(od[k], list) or not all(_is_number(x) for x in od[k]):
                    raise ConfigError("oracle.factors", "must be a list of numbers")
                kw[k] = tuple(float(x) for x in od[k])
            else:
                kw[k] = _num(od, k, "oracle.", integer=f.type == "int")
        oracle = OracleSpec(**kw)
    fc = FcSpec()
    if "fc" in doc:
        fd = _strict(doc["fc"], ("beta", "dim", "order"), "fc.")
        fc = FcSpec(_num(fd, "beta", "fc.", 0.4), _num(fd, "dim", "fc.", 6, integer=True),
                    _order(fd.get("order", "exact"), "fc.order"))
    return RunConfig(g0, gamma_c, epsilon, deltas[0], deltas[1], mirror, trunc, order, grid,
                     times, t_probe, scan, oracle, fc)


def parse_config(text: str) -> RunConfig:
    """Parse and validate a JSON configuration document."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("config", f"not valid JSON: {exc}") from None
    try:
        return _from_dict(doc)
    except InvalidParameterError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError("config", str(exc)) from None


# ---------------------------------------------------------------- output


def fmt(x) -> str:
    """17 significant digits with a lowercase exponent; ``nan`` for undefined values."""
    x = float(x)
    if math.isnan(x):
        return "nan"
    return format(x, ".16e")


def csv_text(command: str, config_json: str, columns, rows) -> str:
    lines = [f"# optoscatter {command} config={config_json}", ",".join(columns)]
    lines.extend(",".join(fmt(v) if not isinstance(v, str) else v for v in row) for row in rows)
    return "\n".join(lines) + "\n"


@dataclass
class Result:
    csv: str | None = None
    report: str | None = None
    status: int = EXIT_OK


# ---------------------------------------------------------------- commands


def cmd_fc(cfg: RunConfig | None, beta=None, dim=None, workers: int = 1) -> Result:
    spec = cfg.fc if cfg is not None else FcSpec()
    spec = FcSpec(spec.beta if beta is None else float(beta), spec.dim if dim is None else int(dim),
                  spec.order)
    table = fc_table(spec.beta, spec.dim, spec.order).values
    echo = (replace(cfg, fc=spec).to_json() if cfg is not None
            else json.dumps({"fc": {"beta": spec.beta, "dim": spec.dim, "order": spec.order}},
                            sort_keys=True, separators=(",", ":")))
    cols = ["m"] + [f"n{n}" for n in range(spec.dim)]
    rows = [[str(m)] + list(table[m]) for m in range(spec.dim)]
    return Result(csv=csv_text("fc", echo, cols, rows))


def cmd_joint_spectrum(cfg: RunConfig, workers: int = 1) -> Result:
    from .longtime import AmplitudeContext
    from .spectrum import joint_spectrum, spectrum_stats

    ctx = AmplitudeContext(cfg.params, cfg.packet, cfg.truncation, 0, cfg.order)
    grid = joint_spectrum(ctx, cfg.mirror, cfg.grid, workers=workers)
    stats = spectrum_stats(grid)
    rows = [(p, q, s) for p, q, s in grid.rows()]
    return Result(csv=csv_text("joint-spectrum", cfg.to_json(), ("dp", "dq", "S"), rows),
                  report=stats.as_text())


def cmd_transient(cfg: RunConfig, workers: int = 1) -> Result:
    from .transient import probabilities

    tr = probabilities(cfg.mirror, cfg.params, cfg.packet, cfg.truncation, cfg.times.values, cfg.order)
    rows = zip(tr.times, tr.p1, tr.p2, tr.g2)
    return Result(csv=csv_text("transient", cfg.to_json(), ("t", "p1", "p2", "g2"), rows))


def cmd_g2scan(cfg: RunConfig, workers: int = 1) -> Result:
    from .transient import g2_scan

    if not cfg.is_scan:
        raise ConfigError("g0", 'g2scan needs "g0": "scan" and a scan block')
    pts = g2_scan(cfg.scan.values, cfg.t_probe, cfg.mirror, cfg.gamma_c, cfg.epsilon,
                  cfg.truncation, cfg.order, workers=workers)
    return Result(csv=csv_text("g2scan", cfg.to_json(), ("g0", "g2"), pts))


def cmd_validate(cfg: RunConfig, workers: int = 1) -> Result:
    from .oracle import OracleGrid, build_initial, convergence_sweep
    from .transient import probabilities

    if not isinstance(cfg.mirror, Fock):
        raise ConfigError("mirror", "validate compares a single Fock initial state")
    o = cfg.oracle
    n0 = cfg.mirror.n0
    grid = OracleGrid(cfg.params, o.n_ph, o.n_k, o.w)
    sys0 = build_initial(cfg.packet, n0, grid)
    times = np.linspace(0.0, o.t_end, o.num_times)
    sweep = convergence_sweep(grid, cfg.packet, n0, o.t_end, o.factors, "n_k", times, o.rtol, o.atol)
    desk = sweep.trajectories[-1]
    ana = probabilities(cfg.mirror, cfg.params, cfg.packet, replace(cfg.truncation, n_ph=o.n_ph),
                        times, cfg.order)
    d1 = float(np.max(np.abs(ana.p1 - desk.p1)))
    d2 = float(np.max(np.abs(ana.p2 - desk.p2)))
    certified = max(sweep.max_diff_p1[-1], sweep.max_diff_p2[-1]) < o.threshold
    ok = certified and max(d1, d2) < o.threshold
    lines = [
        "command=validate", f"n_ph={o.n_ph}", f"n_k={o.n_k}", f"w={o.w:.17g}", f"dk={grid.dk:.17g}",
        f"revival_time={grid.revival_time:.17g}", f"norm_deficit={sys0.norm_deficit:.17g}",
        f"window_deficit={sys0.window_deficit:.17g}", f"norm_drift={desk.norm_drift:.17g}",
        f"n_rhs={desk.n_rhs}", sweep.as_text(), f"certified={'yes' if certified else 'no'}",
        f"max_dp1={d1:.17g}", f"max_dp2={d2:.17g}", f"threshold={o.threshold:.17g}",
        f"result={'PASS' if ok else 'FAIL'}",
    ]
    csv = csv_text("validate", cfg.to_json(), ("t", "p1", "p2"), zip(desk.times, desk.p1, desk.p2))
    return Result(csv=csv, report="\n".join(lines), status=EXIT_OK if ok else EXIT_NUMERICAL)


_DISPATCH = {"joint-spectrum": cmd_joint_spectrum, "transient": cmd_transient,
             "g2scan": cmd_g2scan, "validate": cmd_validate}


def run_command(cmd: str, cfg: RunConfig | None, workers: int = 1, **fc_args) -> Result:
    if cmd not in COMMANDS:
        raise ConfigError("command", f"expected one of {list(COMMANDS)}, got {cmd!r}")
    if cmd == "fc":
        return cmd_fc(cfg, workers=workers, **fc_args)
    if cfg is None:
        raise ConfigError("config", f"{cmd} needs --config")
    return _DISPATCH[cmd](cfg, workers=workers)


# ---------------------------------------------------------------- entry point


def _describe(exc: Exception) -> str:
    module = type(exc).__module__.rsplit(".", 1)[-1]
    return f"optoscatter: {module}: {type(exc).__name__}: {exc}"


def exit_status(exc: Exception) -> int:
    from .oracle import CoverageError

    if isinstance(exc, (InvalidParameterError, CoverageError)):
        return EXIT_INVALID
    if isinstance(exc, (ConvergenceError, TruncationError, OptoscatterError)):
        return EXIT_NUMERICAL
    if isinstance(exc, (ValueError, OSError)):
        return EXIT_INVALID
    raise exc


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="optoscatter",
                                 description="Two-photon scattering off an optomechanical cavity.")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", help="JSON configuration file")
    ap.add_argument("--out", help="CSV output path (default: stdout)")
    ap.add_argument("--workers", type=int, default=1, help="cap on worker processes")
    ap.add_argument("--beta", type=float, help="fc: displacement")
    ap.add_argument("--dim", type=int, help="fc: table dimension")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.workers < 1:
            raise ConfigError("workers", "must be >= 1")
        cfg = None
        if args.config is not None:
            with open(args.config, encoding="utf-8") as fh:
                cfg = parse_config(fh.read())
        fc_args = {"beta": args.beta, "dim": args.dim} if args.command == "fc" else {}
        res = run_command(args.command, cfg, workers=args.workers, **fc_args)
    except Exception as exc:  # noqa: BLE001 - mapped to exit codes below
        status = exit_status(exc)
        print(_describe(exc), file=sys.stderr)
        return status
    report_stream = sys.stdout
    if res.csv is not None:
        if args.out:
            with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(res.csv)
        else:
            sys.stdout.write(res.csv)
            report_stream = sys.stderr
    if res.report is not None:
        print(res.report, file=report_stream)
    return res.status


if __name__ == "__main__":
    sys.exit(main())
