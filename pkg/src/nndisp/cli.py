"""Command-line front end.

Every command produces a table (columns, rows, metadata) written as CSV or
JSON. Errors go to stderr as ``error[<category>]: <message>`` with a
nonzero exit status.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .analytics import (dispersion_report, interference_curves, normal_approx_log_m,
                        scenario_dispersion, shell_vs_iid_interference_ordering)
from .delta_method import clt_check, delta_variance, fit_loglog_slope, interference_spec, ks_critical, p2p_spec
from .errors import DomainError, GuardError, NNDispError, UnsupportedError, UsageError
from .montecarlo import (BRUTE_FORCE_MAX_M, Scenario, StatisticSampler, q_violation_envelope,
                         semi_analytic_curve, simulate_brute_force, typical_set_diagnostic)
from .noise import NoiseModel
from .sampling import CodebookKind, CodebookType

LN2 = math.log(2.0)
SWEEP_VARIABLES = ("n", "eps", "power", "num_interferers")


@dataclass
class SweepTable:
    command: str
    columns: list[str]
    rows: list[list] = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    def add(self, **values):
        missing = set(values) - set(self.columns)
        if missing:
            raise KeyError(f"unknown columns {sorted(missing)}")
        self.rows.append([values.get(c) for c in self.columns])

    def column(self, name: str) -> list:
        i = self.columns.index(name)
        return [r[i] for r in self.rows]

    def to_json(self) -> dict:
        return {"command": self.command, "metadata": self.metadata,
                "columns": list(self.columns), "rows": [list(r) for r in self.rows]}

    def dumps_json(self) -> str:
        return json.dumps(self.to_json(), indent=2, allow_nan=False) + "\n"

    def dumps_csv(self) -> str:
        buf = io.StringIO()
        buf.write(f"# command: {json.dumps(self.command)}\n")
        for k, v in self.metadata.items():
            buf.write(f"# {k}: {json.dumps(v, allow_nan=False)}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for r in self.rows:
            w.writerow([_csv_cell(v) for v in r])
        return buf.getvalue()

    @classmethod
    def from_json(cls, data) -> SweepTable:
        if isinstance(data, str):
            data = json.loads(data)
        return cls(data["command"], list(data["columns"]), [list(r) for r in data["rows"]],
                   dict(data["metadata"]))

    @classmethod
    def from_csv(cls, text: str) -> SweepTable:
        meta = {}
        body = []
        for line in text.splitlines():
            if line.startswith("# "):
                key, _, value = line[2:].partition(": ")
                meta[key] = json.loads(value)
            else:
                body.append(line)
        reader = csv.reader(body)
        columns = next(reader)
        rows = [[_parse_cell(c) for c in r] for r in reader]
        command = meta.pop("command")
        return cls(command, columns, rows, meta)


def _csv_cell(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "%.17g" % v
    return str(v)


def _parse_cell(s: str):
    if s == "":
        return None
    if s in ("true", "false"):
        return s == "true"
    try:
        return int(s)
    except ValueError:
        pass
    try:
        return float(s)
    except ValueError:
        return s


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def parse_values(text: str, integer: bool = False) -> list:
    """Sweep values from ``"v1,v2,..."`` or an inclusive range ``"a:b[:step]"``."""
    conv = int if integer else float
    text = text.strip()
    try:
        if ":" in text:
            parts = [float(p) for p in text.split(":")]
            if len(parts) not in (2, 3):
                raise UsageError(f"range must be a:b or a:b:step, got {text!r}")
            a, b = parts[0], parts[1]
            step = parts[2] if len(parts) == 3 else 1.0
            if step <= 0:
                raise UsageError("range step must be positive")
            count = int(math.floor((b - a) / step + 1e-9)) + 1
            vals = [a + k * step for k in range(max(count, 0))]
            if integer:
                vals = [int(round(v)) for v in vals]
        else:
            vals = [conv(p) for p in text.split(",") if p.strip()]
    except ValueError:
        raise UsageError(f"cannot parse values {text!r}") from None
    if not vals:
        raise DomainError(f"empty sweep range {text!r}")
    return vals


def _powers(text: str | None) -> list[float]:
    if not text:
        return []
    try:
        return [float(p) for p in text.split(",") if p.strip()]
    except ValueError:
        raise UsageError(f"cannot parse interferer powers {text!r}") from None


def _noise(args) -> NoiseModel:
    if args.noise_table and args.noise:
        raise UsageError("--noise and --noise-table are mutually exclusive")
    if args.noise_table:
        return NoiseModel.from_json(args.noise_table)
    return NoiseModel.from_name(args.noise or "gaussian")


def _codebooks(args) -> list[CodebookType]:
    if args.codebook == "both":
        return [CodebookType.SHELL, CodebookType.IID]
    return [CodebookType(args.codebook)]


def _scenario(P1, powers, kind, args, noise) -> Scenario:
    icb = CodebookType(args.interferer_codebook)
    return Scenario(CodebookKind(kind, P1), tuple(CodebookKind(icb, p) for p in powers), noise)


def _require(args, *names):
    for name in names:
        if getattr(args, name) is None:
            raise UsageError(f"--{name.replace('_', '-')} is required for {args.command}")


def _unit(args) -> float:
    return LN2 if args.bits else 1.0


def _resolve_log_m(args, n, cap, v) -> tuple[float, str]:
    """log M in nats from --logm, --rate or the normal approximation at --eps."""
    if args.logm is not None:
        return args.logm * _unit(args), "logm"
    if args.rate is not None:
        return args.rate * _unit(args) * n, "rate"
    if args.eps is not None:
        return normal_approx_log_m(n, args.eps, cap, v), "normal_approx"
    raise UsageError(f"{args.command} needs --logm, --rate or --eps")


def _metadata(args, noise, powers) -> dict:
    return {
        "version": __version__,
        "power": args.power,
        "interferers": powers,
        "codebook": args.codebook,
        "interferer_codebook": args.interferer_codebook if powers else None,
        "noise": noise.to_json(),
        "xi": noise.xi,
        "units": "bits" if args.bits else "nats",
    }


def cmd_approx(args) -> SweepTable:
    _require(args, "n", "eps")
    noise = _noise(args)
    powers = _powers(args.interferers)
    u = _unit(args)
    t = SweepTable("approx", ["codebook", "interferer_codebook", "sinr", "xi_effective", "capacity",
                              "dispersion", "log_m_approx", "rate", "n", "epsilon"],
                   metadata=_metadata(args, noise, powers))
    for cb in _codebooks(args):
        r = dispersion_report(args.power, powers, noise.xi, args.n, args.eps, cb, args.interferer_codebook)
        t.add(codebook=r.codebook, interferer_codebook=r.interferer_codebook, sinr=r.sinr,
              xi_effective=r.xi_effective, capacity=r.capacity_nats_per_use / u,
              dispersion=r.dispersion_nats2_per_use / (u * u), log_m_approx=r.log_m_approx / u,
              rate=r.log_m_approx / r.n / u, n=r.n, epsilon=r.epsilon)
    t.metadata["third_order_term"] = 0.0
    return t


def _simulate_one(args, scenario, n, log_m):
    if args.method == "semi":
        return semi_analytic_curve(scenario, n, [log_m], args.trials, args.seed)[0], None
    if log_m > math.log(BRUTE_FORCE_MAX_M) + 1.0:
        raise GuardError(f"log M = {log_m:.6g} nats exceeds the brute-force limit M <= {BRUTE_FORCE_MAX_M}")
    M = max(int(round(math.exp(log_m))), 1)
    return simulate_brute_force(scenario, n, M, args.trials, args.seed), M


def cmd_simulate(args) -> SweepTable:
    _require(args, "n")
    noise = _noise(args)
    powers = _powers(args.interferers)
    if args.command == "interfere" and not powers:
        raise UsageError("interfere needs --interferers")
    u = _unit(args)
    t = SweepTable(args.command, ["codebook", "n", "log_m", "M", "log_m_source", "estimate",
                                  "std_error", "method"],
                   metadata=_metadata(args, noise, powers))
    t.metadata.update(trials=args.trials, seed=args.seed)
    for cb in _codebooks(args):
        cap, v, _ = scenario_dispersion(args.power, powers, noise.xi, cb, args.interferer_codebook)
        log_m, source = _resolve_log_m(args, args.n, cap, v)
        est, M = _simulate_one(args, _scenario(args.power, powers, cb, args, noise), args.n, log_m)
        t.add(codebook=cb.value, n=args.n, log_m=log_m / u, M=M, log_m_source=source,
              estimate=est.estimate, std_error=est.std_error, method=est.method.value)
    return t


def cmd_sweep(args) -> SweepTable:
    var = args.variable
    noise = _noise(args)
    base_powers = _powers(args.interferers)
    u = _unit(args)
    if args.values is None:
        raise UsageError("sweep needs --values")
    values = parse_values(args.values, integer=var in ("n", "num_interferers"))
    with_log_m = var != "num_interferers" or (args.n is not None and args.eps is not None)
    if var != "n" and with_log_m:
        _require(args, "n")
    if var != "eps" and with_log_m:
        _require(args, "eps")
    if args.simulate and not with_log_m:
        raise UsageError("sweep --simulate needs --n and --eps")
    columns = [var, "codebook", "capacity", "dispersion"]
    if var == "num_interferers":
        columns += ["p_bar", "v_shell_interference", "v_iid_sinr", "v_shell_sinr"]
    if with_log_m:
        columns += ["log_m_approx", "rate"]
    if args.simulate:
        columns += ["log_m_sim", "estimate", "std_error"]
    t = SweepTable("sweep", columns, metadata=_metadata(args, noise, base_powers))
    t.metadata.update(variable=var, n=args.n, eps=args.eps)
    if args.simulate:
        t.metadata.update(trials=args.trials, seed=args.seed, method=args.method)
    if var == "num_interferers":
        if any(k < 0 for k in values):
            raise DomainError("number of interferers must be >= 0")
        t.metadata["interferer_power"] = args.interferer_power
        curves = {r["num_interferers"]: r for r in
                  interference_curves(args.power, values, args.interferer_power, noise.xi)}
    for x in values:
        n, eps, P1, powers = args.n, args.eps, args.power, base_powers
        if var == "n":
            n = x
        elif var == "eps":
            eps = x
        elif var == "power":
            P1 = x
        else:
            powers = [args.interferer_power] * x
        for cb in _codebooks(args):
            cap, v, _ = scenario_dispersion(P1, powers, noise.xi, cb, args.interferer_codebook)
            row = {var: x, "codebook": cb.value, "capacity": cap / u, "dispersion": v / (u * u)}
            if var == "num_interferers":
                c = curves[x]
                row.update(p_bar=c["p_bar"], v_shell_interference=c["v_shell_interference"] / (u * u),
                           v_iid_sinr=c["v_iid_sinr"] / (u * u), v_shell_sinr=c["v_shell_sinr"] / (u * u))
            if with_log_m:
                if not 0.0 < eps < 1.0:
                    raise DomainError(f"epsilon must lie in (0, 1), got {eps}")
                lm = normal_approx_log_m(n, eps, cap, v)
                row.update(log_m_approx=lm / u, rate=lm / n / u)
            if args.simulate:
                if args.logm is not None or args.rate is not None:
                    lm_sim, _ = _resolve_log_m(args, n, cap, v)
                else:
                    lm_sim = lm
                est, _ = _simulate_one(args, _scenario(P1, powers, cb, args, noise), n, lm_sim)
                row.update(log_m_sim=lm_sim / u, estimate=est.estimate, std_error=est.std_error)
            t.add(**row)
    if var == "num_interferers":
        t.metadata["ordering"] = shell_vs_iid_interference_ordering(list(curves.values()))
    return t


def cmd_clt_check(args) -> SweepTable:
    noise = _noise(args)
    powers = _powers(args.interferers)
    if powers and CodebookType(args.interferer_codebook) is not CodebookType.SHELL:
        raise UnsupportedError("clt-check covers shell interferers only")
    spec = interference_spec(args.power, powers, noise.xi) if powers else p2p_spec(args.power, noise.xi)
    sigma2 = delta_variance(spec)
    n_values = parse_values(args.values or "100,1000,10000", integer=True)
    scenario = _scenario(args.power, powers, CodebookType.SHELL, args, noise)
    res = clt_check(StatisticSampler(scenario), sigma2, n_values, args.trials, args.seed)
    crit = ks_critical(args.trials)
    t = SweepTable("clt-check", ["n", "ks_distance", "ks_critical_1pct"],
                   metadata=_metadata(args, noise, powers))
    t.metadata.update(trials=args.trials, seed=args.seed, sigma2=sigma2, slope=res.slope)
    for n, d in zip(res.n_values, res.distances):
        t.add(n=n, ks_distance=d, ks_critical_1pct=crit)
    return t


def cmd_diag_typical(args) -> SweepTable:
    noise = _noise(args)
    if args.values is not None:
        n_values = parse_values(args.values, integer=True)
    elif args.n is not None:
        n_values = [args.n]
    else:
        raise UsageError("diag-typical needs --n or --values")
    eta = args.power if args.eta is None else args.eta
    cols = ["n", "eta", "p_y_violation", "p_z_violation", "q_violation", "total_violation",
            "total_std_error", "q_envelope", "p_y_radius", "p_z_radius"]
    t = SweepTable("diag-typical", cols, metadata=_metadata(args, noise, []))
    t.metadata.update(trials=args.trials, seed=args.seed, eta=eta, c_prime=1.0)
    for n in n_values:
        r = typical_set_diagnostic(args.power, noise, n, eta, args.trials, args.seed)
        t.add(n=n, eta=eta, p_y_violation=r.p_y_violation, p_z_violation=r.p_z_violation,
              q_violation=r.q_violation, total_violation=r.total_violation,
              total_std_error=r.std_error(r.total_violation),
              q_envelope=q_violation_envelope(args.power, eta, n), p_y_radius=r.p_y_radius,
              p_z_radius=r.p_z_radius)
    totals = t.column("total_violation")
    if len(n_values) > 1 and all(v > 0 for v in totals):
        t.metadata["total_slope"] = fit_loglog_slope(n_values, totals)
    return t


COMMANDS = {
    "approx": cmd_approx,
    "simulate": cmd_simulate,
    "interfere": cmd_simulate,
    "sweep": cmd_sweep,
    "clt-check": cmd_clt_check,
    "diag-typical": cmd_diag_typical,
}


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--power", type=float, default=1.0, help="intended sender power P (P1)")
    common.add_argument("--interferers", help='interferer powers, e.g. "1,1"')
    common.add_argument("--codebook", choices=["shell", "iid", "both"], default="shell")
    common.add_argument("--interferer-codebook", choices=["shell", "iid"], default="shell")
    common.add_argument("--noise", choices=["gaussian", "laplace", "rademacher", "uniform"])
    common.add_argument("--noise-table", metavar="FILE.json", help="finite noise table")
    common.add_argument("--n", type=int)
    common.add_argument("--eps", type=float)
    rate = common.add_mutually_exclusive_group()
    rate.add_argument("--logm", type=float, help="log M (nats, or bits with --bits)")
    rate.add_argument("--rate", type=float, help="log M / n")
    common.add_argument("--bits", action="store_true", help="rates and log M in bits")
    common.add_argument("--trials", type=int, default=10_000)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--method", choices=["semi", "brute"], default="semi")
    common.add_argument("--out", type=Path)
    common.add_argument("--format", choices=["csv", "json"], default="csv")

    p = _Parser(prog="nndisp", description="Dispersion of nearest-neighbor decoding with Gaussian codebooks.")
    p.add_argument("--version", action="version", version=f"nndisp {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("approx", parents=[common], help="normal approximation report")
    sub.add_parser("simulate", parents=[common], help="Monte Carlo error probability")
    sub.add_parser("interfere", parents=[common], help="simulate with --interferers")
    sw = sub.add_parser("sweep", parents=[common], help="table over one variable")
    sw.add_argument("variable", choices=SWEEP_VARIABLES)
    sw.add_argument("--values", help="v1,v2,... or a:b[:step]")
    sw.add_argument("--interferer-power", type=float, default=1.0)
    sw.add_argument("--simulate", action="store_true", help="add semi-analytic or brute-force estimates")
    clt = sub.add_parser("clt-check", parents=[common], help="KS distance of the standardized statistic")
    clt.add_argument("--values", help="blocklengths (default 100,1000,10000)")
    dg = sub.add_parser("diag-typical", parents=[common], help="typical-set violation frequencies")
    dg.add_argument("--values", help="blocklengths")
    dg.add_argument("--eta", type=float, help="threshold in (0, 2P); default P")
    return p


def execute(args) -> SweepTable:
    if args.trials < 1:
        raise UsageError("--trials must be >= 1")
    if args.eps is not None and not 0.0 < args.eps < 1.0:
        raise DomainError(f"--eps must lie in (0, 1), got {args.eps}")
    return COMMANDS[args.command](args)


def run(argv=None) -> SweepTable:
    return execute(build_parser().parse_args(argv))


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        table = execute(args)
    except NNDispError as e:
        print(f"error[{e.category}]: {e}", file=sys.stderr)
        return 2 if isinstance(e, UsageError) else 1
    except (OSError, json.JSONDecodeError) as e:
        print(f"error[io_error]: {e}", file=sys.stderr)
        return 1
    text = table.dumps_json() if args.format == "json" else table.dumps_csv()
    if args.out:
        with open(args.out, "w", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
