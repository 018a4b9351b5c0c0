"""Command line entry point.

Subcommands: sweep, construct, fourier-diag, discrete, verify.
Configs are TOML or JSON files mapping to ExperimentConfig fields.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np


def _load_config(path):
    text = Path(path).read_text()
    if str(path).endswith(".toml"):
        import tomllib

        return tomllib.loads(text)
    return json.loads(text)


def cmd_sweep(args):
    from mslab import harness

    raw = _load_config(args.config)
    sweeps = raw.get("sweeps", [raw])
    all_rows = []
    fits = {}
    for entry in sweeps:
        cfg = harness.ExperimentConfig(**entry)
        rows, fit = harness.run_sweep(cfg)
        all_rows.extend(rows)
        fits[cfg.experiment_id] = fit
        print(f"{cfg.experiment_id}: slope={fit.slope:.4f} r2={fit.r2:.5f} "
              f"predicted={fit.predicted} pass={fit.passed}")
    out_json = args.json or (str(Path(args.out).with_suffix(".json")))
    harness.emit_report(all_rows, fits, args.out, out_json, force=args.force)
    print(f"wrote {args.out} and {out_json}")


def cmd_construct(args):
    from mslab import wells as wl
    from mslab.constructions import optimize_construction

    nu = np.array([float(x) for x in args.nu.split(",")])
    params, comp, total = optimize_construction(
        args.kind, args.eps, nu, alpha=args.alpha
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    pf = comp.phase_field(args.grid_n)
    pf.save(out / "chi")
    u = comp.deformation_field(args.grid_n)
    np.save(out / "u_nodes.npy", u.nodes)
    manifest = {
        "kind": args.kind,
        "eps": args.eps,
        "nu": nu.tolist(),
        "alpha": args.alpha,
        "N": params.N,
        "theta": params.theta,
        "j0": params.j0,
        "degenerate": params.degenerate,
        "formula_value": comp.formula_value,
        "energy_elastic": comp.elastic(),
        "energy_surface": comp.tv(nu),
        "energy_total": total,
        "grid_n": args.grid_n,
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2))
    print(json.dumps(manifest, indent=2))


def cmd_fourier_diag(args):
    from mslab import fourier
    from mslab.fields import load_phase_field

    chi = load_phase_field(args.field)
    nu = np.array([float(x) for x in args.nu.split(",")])
    rec = fourier.high_low_freq_check(chi, nu, args.lam, args.lam_bar)
    payload = rec.to_json()
    if args.out:
        Path(args.out).write_text(payload)
        spec = fourier.dft_periodic(chi)
        np.save(Path(args.out).with_suffix(".power.npy"), spec.mode_power())
    print(payload)


def cmd_discrete(args):
    from mslab import harness
    from mslab import wells as wl
    from mslab.discrete import discrete_h_sweep

    W = wl.make_well_set(args.wells, 2)
    F = np.array(json.loads(args.F))
    hs = [float(x) for x in args.h_list.split(",")]
    rows = discrete_h_sweep(W, F, args.R_deg, hs, strategy=args.strategy)
    fit = harness.fit_loglog([(r["h"], r["energy"]) for r in rows])
    print(json.dumps({"rows": rows, "slope": fit.slope, "r2": fit.r2}, indent=2,
                     default=float))


def cmd_verify_comparison(args):
    from mslab import comparison, energies, fields
    from mslab.fields import load_phase_field

    chi = load_phase_field(args.field)
    U = chi.values().astype(float)
    nu = np.array([float(x) for x in args.nu.split(",")])
    spec = energies.EnergySpec(
        energies.Kind.DIFFUSE, [nu], epsilon=args.eps, q=args.q
    )
    rep = comparison.verify_comparison_bounds(U, chi, spec)
    rep.pop("chi_tilde", None)
    print(json.dumps(rep, indent=2, default=float))


def main(argv=None):
    parser = argparse.ArgumentParser(prog="mslab")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sweep", help="run configured sweeps and fit exponents")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--json", default=None)
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("construct", help="emit one optimized competitor")
    p.add_argument("--kind", default="two_well_branching")
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--nu", default="1,0")
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--grid-n", type=int, default=512, dest="grid_n")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_construct)

    p = sub.add_parser("fourier-diag", help="frequency-control diagnostics")
    p.add_argument("--field", required=True)
    p.add_argument("--nu", default="1,0")
    p.add_argument("--lam", type=float, default=16.0)
    p.add_argument("--lam-bar", type=float, default=8.0, dest="lam_bar")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_fourier_diag)

    p = sub.add_parser("discrete", help="mesh-size sweep of the discrete energy")
    p.add_argument("--wells", default="lorent_k3")
    p.add_argument("--F", required=True, help="JSON 2x2 matrix")
    p.add_argument("--R-deg", type=float, default=0.0, dest="R_deg")
    p.add_argument("--h-list", required=True, dest="h_list")
    p.add_argument("--strategy", default="interpolated-construction")
    p.set_defaults(func=cmd_discrete)

    p = sub.add_parser("verify", help="verification utilities")
    vsub = p.add_subparsers(dest="what", required=True)
    pc = vsub.add_parser("comparison", help="diffuse/sharp bridge certificates")
    pc.add_argument("--field", required=True)
    pc.add_argument("--nu", default="1,0")
    pc.add_argument("--eps", type=float, default=0.01)
    pc.add_argument("--q", type=float, default=2.0)
    pc.set_defaults(func=cmd_verify_comparison)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
