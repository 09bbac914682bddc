"""Command-line front end emitting plot data for spectra, echoes and sections.

Every command is a pure function of its configuration and seed: floats are
written with ``repr`` and JSON with sorted keys, so reruns are byte-identical.
Options may also come from a JSON file given with ``--config``; explicit
flags win over the file.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import classical as cl
from . import echo, meanfield, quantum, spectral
from .errors import DickeChaosError
from .model import AncillaState, ModelParams, effective_params

log = logging.getLogger("dickechaos")

COMMON_DEFAULTS = {
    "Omega": 1.0, "omega": 1.0, "lambda": [0.3], "g": 0.23, "n": [0], "N": 20,
    "seed": 0, "out": "out", "format": "csv",
}

COMMAND_DEFAULTS = {
    "spectrum": {"sector": ["even", "odd"], "K": 1000, "tol": 1e-8, "M_max": 4000,
                 "no_cache": False, "check_cache": False, "cache_dir": None},
    "eta": {"K": 1000, "tol": 1e-8, "M_max": 4000, "degree": 6, "trim": 0.05,
            "bin_width": 0.1, "no_cache": False, "check_cache": False, "cache_dir": None,
            "goe": None, "poisson": None},
    "echo": {"N": 40, "delta_tilde": 0.001, "t_max": 100.0, "dt": 0.5, "G": "exact",
             "M": None, "alpha": 1 / math.sqrt(2), "variance": "closed", "tail_tol": 1e-10},
    "echo-sweep": {"N": 40, "delta_tilde": 0.001, "t_eval": 100.0, "G": "exact", "M": None,
                   "lambda_min": 0.02, "lambda_max": 0.6, "lambda_step": 0.02,
                   "lambda": None, "n": [0, 1], "workers": 1, "tail_tol": 1e-10},
    "poincare": {"E": -1.0, "count": 20, "t_max": 10000.0, "direction": 0, "bins": 100,
                 "rtol": None, "atol": None, "workers": 1},
    "lyapunov": {"E": -1.0, "count": 20, "t_max": 2000.0, "renorm": 1.0,
                 "rtol": None, "atol": None, "workers": 1},
    "meanfield": {},
}


@dataclass
class RunConfig:
    """Fully resolved options of one command invocation."""

    command: str
    model: ModelParams
    lambdas: list
    ns: list
    seed: int
    output_dir: Path
    format: str
    options: dict = field(default_factory=dict)

    def ancilla(self, n: int) -> AncillaState:
        return AncillaState.from_net(n)

    def effective(self, lam: float, n: int):
        return effective_params(self.model.with_lambda(lam), self.ancilla(n))

    def as_dict(self) -> dict:
        d = {"command": self.command, "model": asdict(self.model), "lambda": self.lambdas,
             "n": self.ns, "seed": self.seed, "format": self.format}
        d.update({k: v for k, v in self.options.items() if k not in ("out",)})
        return d


# -- parsing -----------------------------------------------------------------


def _common(p: argparse.ArgumentParser):
    S = argparse.SUPPRESS
    p.add_argument("--Omega", type=float, default=S, help="qubit splitting")
    p.add_argument("--omega", type=float, default=S, help="field frequency")
    p.add_argument("--lambda", dest="lambda", type=float, nargs="+", default=S,
                   help="collective coupling(s)")
    p.add_argument("--g", type=float, default=S, help="quadratic optomechanical coupling")
    p.add_argument("--n", type=int, nargs="+", default=S, help="net ancilla photon number(s)")
    p.add_argument("--N", type=int, default=S, help="number of qubits")
    p.add_argument("--seed", type=int, default=S)
    p.add_argument("--out", default=S, help="output directory")
    p.add_argument("--format", choices=("csv", "json"), default=S, help="table format")
    p.add_argument("--config", default=S, help="JSON file of option values")
    p.add_argument("-v", "--verbose", action="store_true", default=S)


def build_parser() -> argparse.ArgumentParser:
    S = argparse.SUPPRESS
    parser = argparse.ArgumentParser(prog="dickechaos", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def cache_flags(p):
        p.add_argument("--K", type=int, default=S, help="converged levels requested per sector")
        p.add_argument("--tol", type=float, default=S, help="level convergence tolerance")
        p.add_argument("--M-max", dest="M_max", type=int, default=S)
        p.add_argument("--no-cache", dest="no_cache", action="store_true", default=S)
        p.add_argument("--check-cache", dest="check_cache", action="store_true", default=S,
                       help="recompute and compare with the cached files byte for byte")
        p.add_argument("--cache-dir", dest="cache_dir", default=S)

    p = sub.add_parser("spectrum", help="converged parity-sector spectra")
    _common(p)
    cache_flags(p)
    p.add_argument("--sector", nargs="+", choices=("even", "odd"), default=S)

    p = sub.add_parser("eta", help="spacing statistics and the eta discriminator")
    _common(p)
    cache_flags(p)
    p.add_argument("--degree", type=int, default=S)
    p.add_argument("--trim", type=float, default=S)
    p.add_argument("--bin-width", dest="bin_width", type=float, default=S)
    p.add_argument("--goe", type=int, default=S, metavar="SIZE",
                   help="self-test on a seeded GOE matrix of this size")
    p.add_argument("--poisson", type=int, default=S, metavar="COUNT",
                   help="self-test on this many seeded Poisson levels")

    def echo_flags(p):
        p.add_argument("--delta-tilde", dest="delta_tilde", type=float, default=S)
        p.add_argument("--G", choices=echo.G_CHOICES, default=S, help="initial state")
        p.add_argument("--M", type=int, default=S, help="fixed Fock cutoff (default: automatic)")
        p.add_argument("--tail-tol", dest="tail_tol", type=float, default=S)

    p = sub.add_parser("echo", help="Loschmidt echo time series")
    _common(p)
    echo_flags(p)
    p.add_argument("--t-max", dest="t_max", type=float, default=S)
    p.add_argument("--dt", type=float, default=S)
    p.add_argument("--alpha", type=float, default=S, help="real probe amplitude on |v>")
    p.add_argument("--variance", choices=echo.VARIANCE_FORMS, default=S)

    p = sub.add_parser("echo-sweep", help="L(t_eval) against lambda")
    _common(p)
    echo_flags(p)
    p.add_argument("--t-eval", dest="t_eval", type=float, default=S)
    p.add_argument("--lambda-min", dest="lambda_min", type=float, default=S)
    p.add_argument("--lambda-max", dest="lambda_max", type=float, default=S)
    p.add_argument("--lambda-step", dest="lambda_step", type=float, default=S)
    p.add_argument("--workers", type=int, default=S)

    for name, helptext in (("poincare", "Poincare sections at p2 = 0, q2 > 0"),
                           ("lyapunov", "largest Lyapunov exponents")):
        p = sub.add_parser(name, help=helptext)
        _common(p)
        p.add_argument("--E", type=float, default=S, help="shell energy (H_cl, constants included)")
        p.add_argument("--count", type=int, default=S, help="initial conditions per point")
        p.add_argument("--t-max", dest="t_max", type=float, default=S)
        p.add_argument("--rtol", type=float, default=S)
        p.add_argument("--atol", type=float, default=S)
        p.add_argument("--workers", type=int, default=S)
        if name == "poincare":
            p.add_argument("--direction", type=int, choices=(-1, 0, 1), default=S)
            p.add_argument("--bins", type=int, default=S)
        else:
            p.add_argument("--renorm", type=float, default=S, help="renormalisation interval")

    p = sub.add_parser("meanfield", help="Bogoliubov frames and phases")
    _common(p)
    return parser


def resolve(args: argparse.Namespace) -> RunConfig:
    given = {k: v for k, v in vars(args).items() if k not in ("command", "verbose")}
    merged = dict(COMMON_DEFAULTS)
    merged.update(COMMAND_DEFAULTS[args.command])
    if "config" in given:
        raw = json.loads(Path(given.pop("config")).read_text())
        merged.update({k.replace("-", "_"): v for k, v in raw.items()})
    merged.update(given)
    for key in ("lambda", "n"):
        if merged[key] is not None and not isinstance(merged[key], list):
            merged[key] = [merged[key]]
    model = ModelParams(Omega=float(merged["Omega"]), omega=float(merged["omega"]),
                        lam=0.0, g=float(merged["g"]), N=int(merged["N"]))
    core = {"Omega", "omega", "lambda", "g", "n", "N", "seed", "out", "format"}
    options = {k: v for k, v in merged.items() if k not in core}
    return RunConfig(args.command, model, merged["lambda"], merged["n"], int(merged["seed"]),
                     Path(merged["out"]), merged["format"], options)


# -- output helpers ----------------------------------------------------------


def _tag(lam: float, n: int) -> str:
    return f"n{n}_lam{lam!r}"


def _write(path: Path, text: str) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(text)
    return path


def _dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _table(header, rows, fmt: str) -> str:
    if fmt == "json":
        return _dump_json([dict(zip(header, r)) for r in rows])
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(v) if isinstance(v, float) else v for v in r])
    return buf.getvalue()


# -- spectra with cache ------------------------------------------------------


def _spectrum_files(cfg: RunConfig, lam: float, n: int, sector: str):
    """CSV and JSON text of one converged sector spectrum, via the cache."""
    opt = cfg.options
    eff = cfg.effective(lam, n)
    key = quantum.params_hash(eff, sector=sector, tol=opt["tol"], K_request=opt["K"],
                              M_max=opt["M_max"])
    cache = Path(opt["cache_dir"]) if opt.get("cache_dir") else cfg.output_dir / ".cache"
    stem = cache / key

    def fresh():
        spec = quantum.converged_spectrum(eff, sector=sector, tol=opt["tol"],
                                          K_request=opt["K"], M_max=opt["M_max"])
        meta = quantum.spectrum_metadata(spec, eff)
        return quantum.spectrum_csv(spec), _dump_json(meta), meta

    have = stem.with_suffix(".csv").exists() and stem.with_suffix(".json").exists()
    if have and not opt.get("no_cache"):
        csv_text = stem.with_suffix(".csv").read_text()
        json_text = stem.with_suffix(".json").read_text()
        if opt.get("check_cache"):
            c2, j2, _ = fresh()
            if c2 != csv_text or j2 != json_text:
                raise DickeChaosError(f"cache entry {key} differs from a fresh computation")
            log.info("cache entry %s matches a fresh computation", key)
        return csv_text, json_text, json.loads(json_text)
    csv_text, json_text, meta = fresh()
    if not opt.get("no_cache"):
        _write(stem.with_suffix(".csv"), csv_text)
        _write(stem.with_suffix(".json"), json_text)
    return csv_text, json_text, meta


def _levels(csv_text: str) -> np.ndarray:
    rows = list(csv.DictReader(io.StringIO(csv_text)))
    return np.array([float(r["energy"]) for r in rows])


def cmd_spectrum(cfg: RunConfig) -> int:
    for n in cfg.ns:
        for lam in cfg.lambdas:
            for sector in cfg.options["sector"]:
                c, j, meta = _spectrum_files(cfg, lam, n, sector)
                stem = f"spectrum_{_tag(lam, n)}_{sector}"
                _write(cfg.output_dir / f"{stem}.csv", c)
                _write(cfg.output_dir / f"{stem}.json", j)
                print(f"n={n} lambda={lam} {sector}: converged_count={meta['converged_count']} "
                      f"M={meta['M']}")
    return 0


def _selftest(cfg: RunConfig) -> int:
    opt = cfg.options
    rng = np.random.default_rng(cfg.seed)
    report = {"seed": cfg.seed}
    if opt.get("goe"):
        s = spectral.unfold(spectral.goe_levels(int(opt["goe"]), rng), opt["degree"], opt["trim"])
        report["goe"] = {"size": int(opt["goe"]), "eta": spectral.eta(s),
                         "ks": spectral.ks_distance(s, lambda x: spectral.reference_cdfs(x)[1])}
    if opt.get("poisson"):
        s = spectral.unfold(spectral.poisson_levels(int(opt["poisson"]), rng), opt["degree"],
                            opt["trim"])
        report["poisson"] = {"count": int(opt["poisson"]), "eta": spectral.eta(s),
                             "ks": spectral.ks_distance(s, lambda x: spectral.reference_cdfs(x)[0])}
    _write(cfg.output_dir / "eta_selftest.json", _dump_json(report))
    for name in ("goe", "poisson"):
        if name in report:
            print(f"{name}: eta={report[name]['eta']:.4f} ks={report[name]['ks']:.4f}")
    return 0


def cmd_eta(cfg: RunConfig) -> int:
    opt = cfg.options
    if opt.get("goe") or opt.get("poisson"):
        return _selftest(cfg)
    rows = []
    for n in cfg.ns:
        for lam in cfg.lambdas:
            sectors = [_levels(_spectrum_files(cfg, lam, n, s)[0]) for s in ("even", "odd")]
            st = spectral.spacing_stats(sectors, opt["degree"], opt["trim"], opt["bin_width"])
            tag = _tag(lam, n)
            _write(cfg.output_dir / f"hist_{tag}.csv", st.histogram_csv())
            _write(cfg.output_dir / f"eta_{tag}.json", st.result_json())
            rows.append((float(lam), int(n), st.eta, st.count))
            print(f"n={n} lambda={lam}: eta={st.eta:.4f} ({st.count} spacings)")
    _write(cfg.output_dir / f"eta_table.{cfg.format}",
           _table(["lambda", "n", "eta", "count"], rows, cfg.format))
    return 0


# -- echo --------------------------------------------------------------------


def _echo_params(cfg: RunConfig, times) -> echo.EchoParams:
    opt = cfg.options
    alpha = float(opt.get("alpha", 1 / math.sqrt(2)))
    beta = math.sqrt(max(1.0 - alpha * alpha, 0.0))
    M = opt.get("M")
    return echo.EchoParams(delta_tilde=float(opt["delta_tilde"]), alpha=alpha, beta=beta,
                           N=cfg.model.N, M=None if M is None else int(M), times=tuple(times))


def cmd_echo(cfg: RunConfig) -> int:
    opt = cfg.options
    steps = int(round(opt["t_max"] / opt["dt"]))
    times = [i * opt["dt"] for i in range(steps + 1)]
    params = _echo_params(cfg, times)
    for n in cfg.ns:
        for lam in cfg.lambdas:
            s = echo.echo_series(cfg.effective(lam, n), params, opt["G"],
                                 tail_tol=opt["tail_tol"], variance=opt["variance"])
            stem = f"echo_{_tag(lam, n)}"
            _write(cfg.output_dir / f"{stem}.csv", s.to_csv())
            _write(cfg.output_dir / f"{stem}.json", s.metadata_json())
            print(f"n={n} lambda={lam}: L(t_max)={s.L[-1]:.6f} M={s.meta['M']}")
    return 0


def _lambda_grid(opt) -> list:
    if opt.get("lambda"):
        return [float(v) for v in opt["lambda"]]
    lo, hi, step = opt["lambda_min"], opt["lambda_max"], opt["lambda_step"]
    count = int(math.floor((hi - lo) / step + 1e-9)) + 1
    return [round(lo + i * step, 12) for i in range(count)]


def cmd_echo_sweep(cfg: RunConfig) -> int:
    opt = cfg.options
    lambdas = [float(v) for v in cfg.lambdas] if cfg.lambdas else _lambda_grid(opt)
    params = _echo_params(cfg, [opt["t_eval"]])
    pts = echo.echo_sweep(cfg.model, lambdas, cfg.ns, opt["t_eval"], params, opt["G"],
                          tail_tol=opt["tail_tol"], workers=int(opt["workers"]))
    rows = [(p.lam, p.n, p.L) for p in pts]
    _write(cfg.output_dir / f"echo_sweep.{cfg.format}",
           _table(["lambda", "n", "L_at_t_eval"], rows, cfg.format))
    meta = cfg.as_dict()
    meta["points"] = [{"lambda": p.lam, "n": p.n, "M": p.M, "error": p.error} for p in pts]
    _write(cfg.output_dir / "echo_sweep.json", _dump_json(meta))
    failed = [p for p in pts if p.error]
    for p in failed:
        print(f"failed: n={p.n} lambda={p.lam}: {p.error}", file=sys.stderr)
    return 1 if failed else 0


# -- classical ---------------------------------------------------------------


def _initials(cfg: RunConfig, fp):
    return cl.sample_energy_shell(cfg.options["E"], int(cfg.options["count"]), cfg.seed, fp)


def cmd_poincare(cfg: RunConfig) -> int:
    opt = cfg.options
    summary = []
    for n in cfg.ns:
        for lam in cfg.lambdas:
            fp = cl.flow_params(cfg.effective(lam, n))
            ics = _initials(cfg, fp)
            secs = cl.poincare_section(ics, opt["E"], opt["t_max"], fp, int(opt["direction"]),
                                       opt["rtol"], opt["atol"], workers=int(opt["workers"]))
            tag = _tag(lam, n)
            if cfg.format == "json":
                body = _dump_json([{"traj_id": s.trajectory_id,
                                    "q1": s.crossings[:, 0].tolist(),
                                    "p1": s.crossings[:, 1].tolist(),
                                    "direction": s.directions.astype(int).tolist()} for s in secs])
            else:
                body = cl.section_csv(secs)
            _write(cfg.output_dir / f"section_{tag}.{cfg.format}", body)
            total = sum(len(s) for s in secs)
            cells = []
            if total:
                b = cl.section_bounds(secs)
                cells = [cl.occupied_cells(s.crossings, b, int(opt["bins"])) for s in secs]
            summary.append({"lambda": lam, "n": n, "crossings": total,
                            "mean_cells": float(np.mean(cells)) if cells else 0.0,
                            "cells": cells})
            print(f"n={n} lambda={lam}: {total} crossings, mean occupied cells "
                  f"{summary[-1]['mean_cells']:.1f}")
    meta = cfg.as_dict()
    meta["points"] = summary
    _write(cfg.output_dir / "poincare_summary.json", _dump_json(meta))
    return 0


def cmd_lyapunov(cfg: RunConfig) -> int:
    opt = cfg.options
    for n in cfg.ns:
        for lam in cfg.lambdas:
            fp = cl.flow_params(cfg.effective(lam, n))
            ics = _initials(cfg, fp)
            vals = cl.lyapunov_ensemble(ics, opt["t_max"], fp, opt["renorm"],
                                        workers=int(opt["workers"]))
            text = cl.lyapunov_json(vals, **{"lambda": lam, "n": n, "N": cfg.model.N,
                                             "E": opt["E"], "t_max": opt["t_max"],
                                             "renorm_interval": opt["renorm"], "seed": cfg.seed})
            _write(cfg.output_dir / f"lyapunov_{_tag(lam, n)}.json", text)
            print(f"n={n} lambda={lam}: median lyapunov {np.median(vals):.5f}")
    return 0


def cmd_meanfield(cfg: RunConfig) -> int:
    header = ["lambda", "n", "lambda_n", "omega_n", "lambda_nc", "lambda_crit_bare", "phase",
              "omega_minus", "omega_plus", "nu", "gamma_b", "gamma_d", "Omega_tilde",
              "E_ground", "norm_b", "norm_d"]
    rows = []
    for n in cfg.ns:
        for lam in cfg.lambdas:
            eff = cfg.effective(lam, n)
            try:
                fr = meanfield.frame_for(eff)
                nb, nd = fr.symplectic_norms()
                vals = [fr.phase, fr.omega_minus, fr.omega_plus, fr.nu, fr.gamma_b,
                        fr.gamma_d, fr.Omega_tilde, fr.E_ground, nb, nd]
            except DickeChaosError:
                vals = ["critical"] + [float("nan")] * 9
            rows.append([float(lam), int(n), eff.lambda_n, eff.omega_n, eff.lambda_nc,
                         eff.lambda_crit_bare] + vals)
    _write(cfg.output_dir / f"meanfield.{cfg.format}", _table(header, rows, cfg.format))
    for r in rows:
        print(f"n={r[1]} lambda={r[0]}: {r[6]}")
    return 0


COMMANDS = {
    "spectrum": cmd_spectrum, "eta": cmd_eta, "echo": cmd_echo, "echo-sweep": cmd_echo_sweep,
    "poincare": cmd_poincare, "lyapunov": cmd_lyapunov, "meanfield": cmd_meanfield,
}


def main(argv: Optional[list] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    try:
        cfg = resolve(args)
        return COMMANDS[cfg.command](cfg)
    except DickeChaosError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
