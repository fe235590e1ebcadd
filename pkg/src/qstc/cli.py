"""Command line front end: ``qstc {certify,region,simulate,compare}``.

Exit codes: 0 ok, 1 verification failure, 2 precondition or infeasibility,
3 I/O error.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from typing import Optional

import numpy as np

from . import __version__
from .analysis import linear_fit, relative_error, stabilizable_region, window
from .certify import Certificate
from .config import ConfigError, ExperimentConfig, bundled_config
from .errors import AssumptionViolation, CertificationError, QstcError
from .report import line_chart, write_csv, write_text
from .simulate import run_ideal, run_log, run_many, run_zoom

EXIT_OK, EXIT_VERIFY, EXIT_PRECONDITION, EXIT_IO = 0, 1, 2, 3


class _Fail(Exception):
    def __init__(self, code, message):
        super().__init__(message)
        self.code = code


def _load(args) -> ExperimentConfig:
    path = args.config or bundled_config("two_tank.cfg")
    try:
        cfg = ExperimentConfig.load(path)
    except OSError as exc:
        raise _Fail(EXIT_IO, f"cannot read config {path}: {exc}") from None
    if args.seed is not None:
        cfg.seed = args.seed
    return cfg


def _cert(cfg: ExperimentConfig, args) -> Certificate:
    if getattr(args, "cert", None):
        try:
            with open(args.cert) as fh:
                return Certificate.from_json(fh.read())
        except OSError as exc:
            raise _Fail(EXIT_IO, f"cannot read certificate {args.cert}: {exc}") from None
    return cfg.certificate()


def _out(cfg, args, name):
    d = args.out or cfg.out
    return os.path.join(d, name)


# ------------------------------------------------------------------ certify

def cmd_certify(args) -> int:
    cfg = _load(args)
    cert = cfg.certificate()
    text = cert.summary(4)
    slack = (f"worst slack closed loop {cert.slack_cl.min():.4e}, "
             f"open loop {cert.slack_op.min():.4e}")
    print(text)
    print(slack)
    d = cert.to_dict()
    d["config_hash"] = cfg.config_hash
    path = _out(cfg, args, "certificate.json")
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", newline="\n") as fh:
        fh.write(json.dumps(d, indent=2, sort_keys=True) + "\n")
    write_text(_out(cfg, args, "certificate.txt"), cfg.config_hash, text + "\n" + slack)
    return EXIT_OK


# ------------------------------------------------------------------ region

def cmd_region(args) -> int:
    cfg = _load(args)
    cert = _cert(cfg, args)
    tab = stabilizable_region(cfg.region_grid(), cert)
    write_csv(_out(cfg, args, "region.csv"), cfg.config_hash,
              ["rho", "sigma_lower", "sigma_upper", "feasible"], tab.rows)
    rho = [r[0] for r in tab.rows]
    line_chart(_out(cfg, args, "region.svg"), cfg.config_hash,
               [("lower bound", rho, [r[1] for r in tab.rows]),
                ("upper bound", rho, [r[2] for r in tab.rows])],
               title="Stabilizable region of (rho, sigma)", xlabel="rho", ylabel="sigma",
               fill_between=(0, 1))
    print(f"rho_min = {tab.rho_min:.4f}  sigma at crossing = {tab.crossing:.4f}  "
          f"upper bound at rho = 1: {tab.upper_at_one:.4f}")
    return EXIT_OK


# ------------------------------------------------------------------ simulate

def _simulate(cfg: ExperimentConfig, cert: Certificate, scheme: str, x0=None, strict=True):
    p = cfg.plant()
    x0 = cfg.x0 if x0 is None else x0
    if scheme == "log":
        quant, stm, consts = cfg.log_setup(cert)
        return run_log(p, cert, quant, stm, x0, cfg.horizon, cfg.dt, cfg.dt_pred, strict), consts
    quant, stm, consts = cfg.zoom_setup(cert)
    return run_zoom(p, cert, quant, stm, x0, cfg.horizon, cfg.dt, cfg.dt_pred, strict), consts


def _emit_run(cfg, args, sim, scheme):
    h = cfg.config_hash
    X, U, t = sim.trajectory.states, sim.inputs, sim.trajectory.times
    n, m = X.shape[1], U.shape[1]
    idx = np.arange(0, X.shape[0], cfg.output_stride)
    Uf = np.vstack([U, U[-1:]])  # input on the last grid point repeats the held value
    write_csv(_out(cfg, args, f"run_{scheme}.csv"), h,
              ["t"] + [f"x{i + 1}" for i in range(n)] + [f"u{i + 1}" for i in range(m)],
              (np.concatenate([[t[i]], X[i], Uf[i]]) for i in idx))
    cols = (["k", "t_k"] + [f"q{i + 1}" for i in range(n)]
            + ["tau" if scheme == "log" else "ell", "mu_k", "trigger_cause", "truncated"])
    write_csv(_out(cfg, args, f"samples_{scheme}.csv"), h, cols,
              ([r.k, r.t_k, *r.q_k, r.tau_or_ell, "" if r.mu_k is None else r.mu_k,
                r.cause.value, r.truncated] for r in sim.records))
    write_text(_out(cfg, args, f"verification_{scheme}.txt"), h, "\n".join(sim.verification.lines()))
    label = "logarithmic" if scheme == "log" else "zooming"
    line_chart(_out(cfg, args, f"state_{scheme}.svg"), h,
               [(f"x{i + 1}", t[idx], X[idx, i]) for i in range(n)],
               title=f"State under {label} quantization", xlabel="t", ylabel="x")
    ts = sim.sample_times
    if len(ts) > 1:
        line_chart(_out(cfg, args, f"intervals_{scheme}.svg"), h,
                   [("t_(k+1) - t_k", ts[:-1], np.diff(ts))],
                   title=f"Inter-sampling times under {label} quantization", xlabel="t",
                   ylabel="interval", markers=True)


def _sweep_job(task):
    path, scheme, x0, cert_dict = task
    cfg = ExperimentConfig.load(path)
    cert = Certificate.from_dict(cert_dict)
    sim, _ = _simulate(cfg, cert, scheme, np.asarray(x0))
    rep = sim.verification
    return [*x0, rep.samples, rep.min_interval, rep.passed] + [c.margin for c in rep.checks], \
        [c.name for c in rep.checks]


def _sweep(cfg, args, cert, scheme, count):
    rng = np.random.default_rng(cfg.seed)
    if scheme == "log":
        radius = cert.R / cert.L_cl
    else:
        radius = cfg.raw["zoom"]["M"] * cfg.raw["zoom"].get("mu0", 1.0)
    # uniform in the weighted box, shrunk slightly so the open ball condition holds
    starts = [(0.99 * radius * rng.uniform(-1.0, 1.0, cfg.x0.size) / cert.theta_cl).tolist()
              for _ in range(count)]
    tasks = [(os.path.abspath(cfg.path), scheme, s, cert.to_dict()) for s in starts]
    results = run_many(_sweep_job, tasks, args.jobs)
    names = results[0][1] if results else []
    cols = [f"x0_{i + 1}" for i in range(cfg.x0.size)] + ["samples", "min_interval", "passed"] \
        + [f"margin_{n}" for n in names]
    write_csv(_out(cfg, args, f"sweep_{scheme}.csv"), cfg.config_hash, cols, [r[0] for r in results])
    failed = sum(1 for r in results if not r[0][cfg.x0.size + 2])
    print(f"sweep: {len(results)} runs, {failed} failed verification")
    return failed == 0


def cmd_simulate(args) -> int:
    cfg = _load(args)
    cert = _cert(cfg, args)
    scheme = args.scheme or cfg.scheme
    if args.sweep:
        return EXIT_OK if _sweep(cfg, args, cert, scheme, args.sweep) else EXIT_VERIFY
    cfg.check_start(cert, scheme)
    sim, consts = _simulate(cfg, cert, scheme)
    _emit_run(cfg, args, sim, scheme)
    for line in sim.verification.lines():
        print(line)
    return EXIT_OK if sim.verification.passed else EXIT_VERIFY


# ------------------------------------------------------------------ compare

def _compare_job(task):
    path, which, cert_dict = task
    cfg = ExperimentConfig.load(path)
    cert = Certificate.from_dict(cert_dict)
    if which == "ideal":
        return run_ideal(cfg.plant(), cfg.x0, cfg.horizon, cfg.dt, cert)
    return _simulate(cfg, cert, which)[0]


def cmd_compare(args) -> int:
    cfg = _load(args)
    cert = _cert(cfg, args)
    cfg.check_start(cert, "log")
    cfg.check_start(cert, "zoom")
    tasks = [(os.path.abspath(cfg.path), w, cert.to_dict()) for w in ("ideal", "log", "zoom")]
    ideal, slog, szoom = run_many(_compare_job, tasks, args.jobs)
    e_log = relative_error(slog, ideal)
    e_zo = relative_error(szoom, ideal)
    t = ideal.trajectory.times
    idx = np.arange(0, t.size, cfg.output_stride)
    write_csv(_out(cfg, args, "relative_error.csv"), cfg.config_hash, ["t", "e_log", "e_zo"],
              zip(t[idx], e_log[idx], e_zo[idx]))
    line_chart(_out(cfg, args, "relative_error.svg"), cfg.config_hash,
               [("e_log", t[idx], e_log[idx]), ("e_zo", t[idx], e_zo[idx])],
               title="Comparison of relative errors", xlabel="t", ylabel="relative error")
    _, _, r2 = linear_fit(*window(t, e_log, 0.5, 6.0))
    _, a = window(t, e_log, 3.0, 4.0)
    _, b = window(t, e_zo, 3.0, 4.0)
    ratio = float(np.nanmax(b / a))
    lines = [f"e_log linear fit on [0.5, 6]: R^2 = {r2:.4f}",
             f"max e_zo / e_log on [3, 4]: {ratio:.3f}"]
    for s in (slog, szoom):
        lines += s.verification.lines()
    write_text(_out(cfg, args, "compare.txt"), cfg.config_hash, "\n".join(lines))
    print("\n".join(lines))
    ok = slog.verification.passed and szoom.verification.passed and ideal.verification.passed
    return EXIT_OK if ok else EXIT_VERIFY


# ------------------------------------------------------------------ entry

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qstc", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"qstc {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, cert=True):
        p.add_argument("--config", help="experiment config (default: bundled two_tank.cfg)")
        p.add_argument("--out", help="output directory (default: run.out from the config)")
        p.add_argument("--jobs", type=int, default=1, help="worker processes")
        p.add_argument("--seed", type=int, default=None, help="seed for random sweeps")
        if cert:
            p.add_argument("--cert", help="certificate JSON written by 'certify'")

    common(sub.add_parser("certify", help="compute and print the certificate"), cert=False)
    common(sub.add_parser("region", help="stabilizable (rho, sigma) region"))
    p = sub.add_parser("simulate", help="closed-loop run with verification")
    common(p)
    p.add_argument("--scheme", choices=("log", "zoom"), help="override the config's scheme")
    p.add_argument("--sweep", type=int, default=0, metavar="N",
                   help="instead run N random initial states in the admissible ball")
    common(sub.add_parser("compare", help="ideal vs. both quantized schemes"))
    return ap


COMMANDS = {"certify": cmd_certify, "region": cmd_region, "simulate": cmd_simulate,
            "compare": cmd_compare}


def main(argv: Optional[list] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except _Fail as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except CertificationError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    except AssumptionViolation as exc:
        print(f"precondition violated: {exc} (margin {exc.margin:.4g})",
              file=sys.stderr)
        return EXIT_PRECONDITION
    except (ConfigError, QstcError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
