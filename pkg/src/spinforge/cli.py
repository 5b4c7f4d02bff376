"""Batch command-line front end.

Subcommands reproduce the package's main data products as plot-ready CSV
(and JSON) files.  Every output file starts with a metadata header line
carrying the tool version, configuration hash, and seed, and identical
(config, seed) pairs produce byte-identical outputs.

Exit codes: 0 success, 1 numerical failure, 2 configuration error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np


def _cap_threads() -> None:
    cap = os.environ.get("SPINFORGE_THREADS")
    if cap:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS",
                    "MKL_NUM_THREADS"):
            os.environ.setdefault(var, cap)


_cap_threads()

from . import __version__  # noqa: E402
from . import channels as ch  # noqa: E402
from . import environment as env  # noqa: E402
from . import hyperfine as hf  # noqa: E402
from . import locate as lc  # noqa: E402
from . import sequences as sq  # noqa: E402
from .config import ConfigError, ExperimentConfig  # noqa: E402
from .qmat import DomainError  # noqa: E402

_KHZ = 2 * np.pi * 1e3


def _header(cfg: ExperimentConfig, seed: int) -> list[str]:
    return [f"spinforge {__version__} config={cfg.hash()} seed={seed}"]


def _meta(cfg: ExperimentConfig, seed: int) -> dict:
    return {"tool": f"spinforge {__version__}", "config": cfg.hash(),
            "seed": seed}


def _out_path(args, name: str) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out / name


def cmd_spectrum(args, cfg: ExperimentConfig, seed: int) -> list[Path]:
    p = cfg.hyperfine_params()
    grid = np.linspace(args.two_tau_min * 1e-6, args.two_tau_max * 1e-6,
                       args.points)
    trace = sq.xyn_spectrum(p, grid, n_pulses=args.n_pulses,
                            dephasing_t2=cfg.electron_t2())
    path = _out_path(args, f"spectrum_xy{args.n_pulses}.csv")
    trace.to_csv(path, _header(cfg, seed))
    return [path]


def cmd_ramsey(args, cfg: ExperimentConfig, seed: int) -> list[Path]:
    p = cfg.hyperfine_params()
    grid = np.arange(0.0, args.t_max * 1e-6, args.step * 1e-6)
    fn = sq.ramsey_s0 if args.mode == "s0" else sq.ramsey_sdelta
    trace = fn(p, grid, exact=args.exact)
    spec = sq.fft_spectrum(trace)
    paths = [_out_path(args, f"ramsey_{args.mode}.csv"),
             _out_path(args, f"ramsey_{args.mode}_fft.csv")]
    trace.to_csv(paths[0], _header(cfg, seed))
    spec.to_csv(paths[1], _header(cfg, seed))
    return paths


def cmd_echo(args, cfg: ExperimentConfig, seed: int) -> list[Path]:
    p = cfg.hyperfine_params()
    grid = np.linspace(0.0, args.t_max * 1e-3, args.points)
    sigma = sq.calibrate_ou_sigma(args.t2_target * 1e-3,
                                  args.tau_corr * 1e-3)
    noise = sq.OUNoise(sigma, args.tau_corr * 1e-3)
    trace = sq.nuclear_echo(p, args.kind, grid, noise, k=args.k,
                            n_trajectories=args.trajectories, seed=seed)
    path = _out_path(args, f"echo_{args.kind}.csv")
    trace.to_csv(path, _header(cfg, seed))
    return [path]


def cmd_swap(args, cfg: ExperimentConfig, seed: int) -> list[Path]:
    p = cfg.hyperfine_params()
    opt = cfg.optical_params()
    ens = cfg.ensemble()
    result = ch.swap_experiment(p, opt, ens, n_loops=args.n_loops, seed=seed,
                                control=args.control,
                                dephasing_t2=cfg.electron_t2())
    name = "swap_control.json" if args.control else "swap.json"
    path = _out_path(args, name)
    result.to_json(path, _meta(cfg, seed))
    return [path]


def cmd_locate(args, cfg: ExperimentConfig, seed: int) -> list[Path]:
    obs = lc.load_observations(args.obs_file)
    settings = lc.load_field_settings(args.settings_file)
    tensors = lc.load_g_tensors(args.g_file)
    report = {"metadata": _meta(cfg, seed), "branches": {}}
    paths = []
    for sign in ((+1, -1) if args.sign == "both" else
                 ((+1,) if args.sign == "+" else (-1,))):
        res = lc.localize(obs, settings, tensors["ground"], sign,
                          seed=seed, n_mc=args.n_mc)
        report["branches"]["positive" if sign > 0 else "negative"] = {
            "r_angstrom": res.position.r_angstrom,
            "theta_deg": res.position.theta_deg,
            "phi_deg": res.position.phi_deg,
            "chi2": res.chi2_min,
            "reduced_chi2": res.reduced_chi2,
            "converged": res.converged,
        }
        # iso-ratio contours through the fit, one polyline per setting
        for i, s in enumerate(settings):
            params = lc.dipolar_hyperfine(res.position, tensors["ground"], s)
            contour = lc.iso_ratio_contour(tensors["ground"], s,
                                           params.a_par / params.a_perp)
            cpath = _out_path(
                args, f"contour_sign{'p' if sign > 0 else 'm'}_set{i+1}.csv")
            with open(cpath, "w") as f:
                f.write(f"# {_header(cfg, seed)[0]}\n")
                f.write("theta_deg,phi_deg\n")
                for th, ph in contour:
                    f.write(f"{th:.6f},{ph:.6f}\n")
            paths.append(cpath)
    path = _out_path(args, "locate_report.json")
    with open(path, "w") as f:
        json.dump(report, f, indent=1)
    return [path] + paths


def cmd_darkspins(args, cfg: ExperimentConfig, seed: int) -> list[Path]:
    p = cfg.hyperfine_params()
    dark = cfg.dark_spin_model()
    tau0 = 0.5 * hf.resonance_times(p, 0, refine=True)[0]
    if args.subtask == "branches":
        grid = np.arange(0.0, args.t_max * 1e-6, args.step * 1e-6)
        paths = []
        for d1 in (+1, -1):
            for d2 in (+1, -1):
                tr = env.four_body_ramsey(p, dark, (d1, d2), grid,
                                          exact=False)
                path = _out_path(
                    args, f"branch_d1{'p' if d1 > 0 else 'm'}"
                          f"_d2{'p' if d2 > 0 else 'm'}.csv")
                tr.to_csv(path, _header(cfg, seed))
                paths.append(path)
        return paths
    if args.subtask == "readout_points":
        rp = env.readout_points(dark, tau0, hyperfine_params=p)
        path = _out_path(args, "readout_points.json")
        with open(path, "w") as f:
            json.dump({"metadata": _meta(cfg, seed),
                       "d2_insensitive_time_s": rp.d2_insensitive_time,
                       "d1_readout_times_s": list(rp.d1_readout_times),
                       "d2_readout_time_s": rp.d2_readout_time,
                       "details": {k: (list(v) if isinstance(v, list) else v)
                                   for k, v in rp.metadata.items()}},
                      f, indent=1)
        return [path]
    if args.subtask == "jumps":
        rp = env.readout_points(dark, tau0, hyperfine_params=p)
        trace = env.jump_trace(p, dark, rp.d1_readout_times[0],
                               args.n_samples, args.period, seed=seed,
                               tau0=tau0)
        est = env.estimate_lifetime(trace)
        paths = [_out_path(args, "jump_trace.csv"),
                 _out_path(args, "jump_lifetime.json")]
        trace.to_csv(paths[0], _header(cfg, seed))
        with open(paths[1], "w") as f:
            json.dump({"metadata": _meta(cfg, seed), "t1_s": est.t1,
                       "ci68_s": list(est.ci68), "n_jumps": est.n_jumps,
                       "confident": est.confident,
                       "threshold": est.threshold}, f, indent=1)
        return paths
    raise DomainError(f"unknown darkspins subtask {args.subtask!r}")


def cmd_concentration(args, cfg: ExperimentConfig, seed: int) -> list[Path]:
    post = env.concentration_posterior(args.n, args.m, args.r_obs)
    paths = [_out_path(args, "concentration_posterior.csv"),
             _out_path(args, "concentration_summary.json")]
    post.to_csv(paths[0], _header(cfg, seed))
    post.to_json(paths[1], _meta(cfg, seed))
    return paths


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="spinforge",
        description="Electron-nuclear spin register simulations")
    ap.add_argument("--config", help="JSON or TOML configuration file")
    ap.add_argument("--seed", type=int, help="override the config seed")
    ap.add_argument("--out", default=".", help="output directory")
    ap.add_argument("--format", choices=("csv", "json"), default="csv",
                    help="preferred tabular format (JSON always available)")
    sub = ap.add_subparsers(dest="command", required=True)

    s = sub.add_parser("spectrum", help="decoupling spectrum versus spacing")
    s.add_argument("--n-pulses", type=int, default=16)
    s.add_argument("--two-tau-min", type=float, default=0.6,
                   help="microseconds")
    s.add_argument("--two-tau-max", type=float, default=1.2)
    s.add_argument("--points", type=int, default=121)
    s.set_defaults(fn=cmd_spectrum)

    s = sub.add_parser("ramsey", help="precession fringe and its spectrum")
    s.add_argument("--mode", choices=("s0", "sdelta"), default="s0")
    s.add_argument("--t-max", type=float, default=2000.0,
                   help="microseconds")
    s.add_argument("--step", type=float, default=0.4, help="microseconds")
    s.add_argument("--exact", action="store_true",
                   help="full engine instead of the closed form")
    s.set_defaults(fn=cmd_ramsey)

    s = sub.add_parser("echo", help="nuclear echo decay")
    s.add_argument("--kind", choices=("hahn", "cpmg"), default="hahn")
    s.add_argument("--k", type=int, default=2, help="cpmg pulse count")
    s.add_argument("--t-max", type=float, default=6.0, help="milliseconds")
    s.add_argument("--points", type=int, default=25)
    s.add_argument("--t2-target", type=float, default=1.9,
                   help="Hahn 1/e time used to calibrate the noise (ms)")
    s.add_argument("--tau-corr", type=float, default=3.0,
                   help="noise correlation time (ms)")
    s.add_argument("--trajectories", type=int, default=400)
    s.set_defaults(fn=cmd_echo)

    s = sub.add_parser("swap", help="looped state-transfer experiment")
    s.add_argument("--n-loops", type=int, default=1500)
    s.add_argument("--control", action="store_true",
                   help="replace the transfer gate by the identity")
    s.set_defaults(fn=cmd_swap)

    s = sub.add_parser("locate", help="position fit from observations")
    s.add_argument("--obs-file", help="observations JSON (default packaged)")
    s.add_argument("--settings-file", help="field settings JSON")
    s.add_argument("--g-file", help="g-tensor JSON")
    s.add_argument("--sign", choices=("+", "-", "both"), default="+")
    s.add_argument("--n-mc", type=int, default=10000)
    s.set_defaults(fn=cmd_locate)

    s = sub.add_parser("darkspins", help="dark-spin branch analyses")
    s.add_argument("--subtask",
                   choices=("branches", "readout_points", "jumps"),
                   default="branches")
    s.add_argument("--t-max", type=float, default=200.0,
                   help="microseconds (branches)")
    s.add_argument("--step", type=float, default=0.5)
    s.add_argument("--n-samples", type=int, default=1490)
    s.add_argument("--period", type=float, default=29.0,
                   help="seconds between records (jumps)")
    s.set_defaults(fn=cmd_darkspins)

    s = sub.add_parser("concentration", help="impurity concentration posterior")
    s.add_argument("n", type=int, help="number of detections")
    s.add_argument("m", type=int, help="number of probed ions")
    s.add_argument("r_obs", type=float, help="observable radius in meters")
    s.set_defaults(fn=cmd_concentration)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = (ExperimentConfig.from_file(args.config) if args.config
               else ExperimentConfig.default())
    except (ConfigError, OSError) as exc:
        key = getattr(exc, "key", "<config>")
        print(json.dumps({"error": "config", "key": key,
                          "message": str(exc)}), file=sys.stderr)
        return 2
    seed = args.seed if args.seed is not None else cfg.seed
    try:
        paths = args.fn(args, cfg, seed)
    except ConfigError as exc:
        print(json.dumps({"error": "config", "key": exc.key,
                          "message": str(exc)}), file=sys.stderr)
        return 2
    except Exception as exc:  # numerical / model failure
        print(json.dumps({"error": "numerical", "type": type(exc).__name__,
                          "message": str(exc)}), file=sys.stderr)
        return 1
    for p in paths:
        print(p)
    return 0


if __name__ == "__main__":
    sys.exit(main())
