"""Command-line front end.

Subcommands: ``reduce`` (netlist -> reduced one-port model JSON), ``poles``
(branch-tracked pole loci CSV), ``impulse`` (impulse-response matrix CSV with
an analytic cross-check), ``simulate`` (reduced model vs ladder oracle
trajectories). Outputs are deterministic: identical invocations produce
byte-identical files.

Exit codes: 0 success, 2 input error, 3 model invariant violation,
4 numerical precondition violation.
"""
from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import __version__
from .errors import (LineportError, NetlistParseError, NumericalPreconditionError,
                     ValidationError)
from .inversion import impulse_response_table, residues
from .netlist import (derive_reduced_model, invariant_report, parse_netlist_file,
                      potential_gradient, stiffness_matrix)
from .reduced_dynamics import ReducedState, assemble_rhs, integrate, ladder_oracle
from .signals import FLOAT_FMT
from .spectral import find_poles, pole_locus, transfer_matrix
from .tline import LineInitialState, line_params, thevenin_source

OUT_DIR_ENV = "LINEPORT_OUT"
INVARIANT_TOL = 1e-9


def _out_dir(args):
    out = args.out or os.environ.get(OUT_DIR_ENV) or "."
    os.makedirs(out, exist_ok=True)
    return out


def _write(path, text):
    with open(path, "w", newline="") as fh:
        fh.write(text)
    print(f"wrote {path}")


def cmd_reduce(args):
    topology = parse_netlist_file(args.netlist)
    model = derive_reduced_model(topology, args.z_c)
    report = invariant_report(model)
    payload = model.to_json_dict()
    payload["invariants"] = report
    payload["warnings"] = list(model.warnings)
    text = json.dumps(payload, indent=2, sort_keys=True)
    print(text)
    out = _out_dir(args)
    _write(os.path.join(out, "reduced_model.json"), text + "\n")
    worst = max(report.values())
    if worst > INVARIANT_TOL:
        print(f"invariant residual {worst:.3g} exceeds {INVARIANT_TOL:g}",
              file=sys.stderr)
        return 3
    return 0


def cmd_poles(args):
    alphas = args.alpha if args.alpha else [0.5, 1.0, 2.0]
    g_grid = np.arange(args.g_start, args.g_stop + 0.5 * args.g_step, args.g_step)
    g_grid = g_grid[(g_grid > 0.0) & (g_grid < 1.0)]
    out = _out_dir(args)
    files = []
    for alpha in alphas:
        locus = pole_locus(alpha, g_grid)
        path = os.path.join(out, f"poles_alpha{alpha:g}.csv")
        locus.to_csv(path)
        print(f"wrote {path}")
        files.append({"alpha": alpha, "file": os.path.basename(path),
                      "transitions": {str(k): v for k, v in locus.transitions.items()}})
    echo = {"alphas": alphas, "g_start": args.g_start, "g_stop": args.g_stop,
            "g_step": args.g_step, "normalized": True, "files": files}
    _write(os.path.join(out, "poles_params.json"),
           json.dumps(echo, indent=2, sort_keys=True) + "\n")
    return 0


def _round_up_pow2(n):
    p = 1
    while p < n:
        p <<= 1
    return p


def cmd_impulse(args):
    omega_r = 1.0 if args.normalized else args.omega_r
    gs = args.g if args.g else [0.3, 0.8]
    n = args.n
    if n & (n - 1):
        n = _round_up_pow2(n)
        print(f"warning: n rounded up to the next power of two: {n}", file=sys.stderr)
    t_max = args.t_max if args.t_max is not None else 10.0 * 2.0 * np.pi / omega_r
    out = _out_dir(args)
    for g in gs:
        spec = transfer_matrix(g, args.alpha, omega_r)
        t_ref, table, discrepancy = impulse_response_table(spec, t_max, n_samples=n)
        stem = f"impulse_g{g:g}_alpha{args.alpha:g}"
        for suffix, col in (("", 0), ("_pf", 1)):
            rows = ["t,h11,h12,h21,h22"]
            series = [table[e][col].samples for e in ("h11", "h12", "h21", "h22")]
            for k, t in enumerate(t_ref):
                rows.append(",".join(FLOAT_FMT % v
                                     for v in (t, *(s[k] for s in series))))
            _write(os.path.join(out, f"{stem}{suffix}.csv"), "\n".join(rows) + "\n")
        ps = find_poles(spec.den, omega_r)
        sidecar = {
            "g": g, "alpha": args.alpha, "omega_r": omega_r, "t_max": t_max,
            "n_samples": n,
            "sigma": table["h11"][0].meta["sigma"],
            "alias_bound": max(table[e][0].meta["alias_bound"] for e in table),
            "max_ifft_vs_partial_fractions": discrepancy,
            "poles": [[s.real, s.imag] for s in ps.poles],
            "pole_flags": list(ps.flags),
            "residues": {e: [[r.real, r.imag] for r in residues(spec, e)[1]]
                         for e in table},
        }
        _write(os.path.join(out, f"{stem}.json"),
               json.dumps(sidecar, indent=2, sort_keys=True) + "\n")
    return 0


def _parse_vector(text, n, what):
    if text is None:
        return np.zeros(n)
    try:
        vals = [float(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise NetlistParseError(f"bad {what} vector {text!r}")
    if len(vals) > n:
        raise ValidationError(f"{what} vector longer than the {n} circuit nodes")
    out = np.zeros(n)
    out[:len(vals)] = vals
    return out


def cmd_simulate(args):
    topology = parse_netlist_file(args.netlist)
    line = line_params(args.ell, args.c_per_len)
    model = derive_reduced_model(topology, line.z_c)
    n = topology.node_count
    phi = _parse_vector(args.phi, n, "phi")
    if args.phi is None and args.q is None and args.q0 == 0.0 \
            and args.phi0_csv is None and args.q0_csv is None:
        phi[0] = 1.0  # default excitation: displace node 1
    q = _parse_vector(args.q, n, "q")
    initial = ReducedState(phi=phi, q=q, q0=args.q0)

    t_max = args.t_max
    t_grid = np.linspace(0.0, t_max, args.samples)
    length = args.length if args.length is not None else 1.12 * line.v_p * t_max / 2.0

    line_initial = None
    e0 = None
    if args.phi0_csv or args.q0_csv:
        line_initial = LineInitialState.from_csv(args.phi0_csv, args.q0_csv,
                                                 extend="zero")
        e0 = thevenin_source(line_initial, line, t_grid)

    if topology.is_linear:
        grad_u = stiffness_matrix(topology)
    else:
        def grad_u(p):
            return potential_gradient(topology, p)
    rhs = assemble_rhs(model, grad_u, e0=e0)
    reduced = integrate(rhs, initial, t_grid)
    ladder = ladder_oracle(line, args.n_sections, length, topology, initial,
                           t_grid, line_initial=line_initial)
    out = _out_dir(args)
    reduced_path = os.path.join(out, "trajectory_reduced.csv")
    ladder_path = os.path.join(out, "trajectory_ladder.csv")
    reduced.to_csv(reduced_path)
    print(f"wrote {reduced_path}")
    ladder.to_csv(ladder_path)
    print(f"wrote {ladder_path}")
    scale = np.linalg.norm(reduced.phi[:, 0])
    l2 = float(np.linalg.norm(ladder.phi[:, 0] - reduced.phi[:, 0]) / scale) \
        if scale > 0 else float(np.linalg.norm(ladder.phi[:, 0]))
    sidecar = {
        "model": model.to_json_dict(),
        "line": {"ell": line.ell, "c_per_len": line.c_per_len,
                 "v_p": line.v_p, "z_c": line.z_c},
        "n_sections": args.n_sections, "length": length,
        "t_max": t_max, "dt_output": float(t_grid[1] - t_grid[0]),
        "integrators": {"reduced": reduced.meta["integrator"],
                        "ladder": ladder.meta["integrator"]},
        "ladder_dt": ladder.meta["dt"],
        "ladder_energy_drift": ladder.meta["energy_drift"],
        "phi1_l2_discrepancy": l2,
    }
    _write(os.path.join(out, "simulate_summary.json"),
           json.dumps(sidecar, indent=2, sort_keys=True) + "\n")
    print(f"phi1 L2 discrepancy (ladder vs reduced): {l2:.6g}")
    return 0


def _positive_float(text):
    value = float(text)
    if value <= 0:
        raise argparse.ArgumentTypeError(f"must be positive, got {text}")
    return value


def build_parser():
    parser = argparse.ArgumentParser(
        prog="lineport",
        description="Semi-infinite transmission line coupled to a lumped "
                    "circuit: reduction, simulation, and Laplace analysis.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("reduce", help="netlist -> reduced one-port model JSON")
    p.add_argument("netlist")
    p.add_argument("--z-c", type=_positive_float, default=50.0,
                   help="line characteristic impedance [ohm] (default 50)")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_reduce)

    p = sub.add_parser("poles", help="pole loci over g for given alpha values")
    p.add_argument("--alpha", type=_positive_float, action="append",
                   help="repeatable; default 0.5 1.0 2.0")
    p.add_argument("--g-start", type=float, default=0.001)
    p.add_argument("--g-stop", type=float, default=0.999)
    p.add_argument("--g-step", type=_positive_float, default=0.001)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_poles)

    p = sub.add_parser("impulse", help="impulse-response matrix with oracle cross-check")
    p.add_argument("--g", type=float, action="append",
                   help="repeatable; default 0.3 0.8")
    p.add_argument("--alpha", type=_positive_float, default=2.0)
    p.add_argument("--omega-r", type=_positive_float, default=1.0)
    p.add_argument("--normalized", action="store_true",
                   help="force omega_r = 1 normalized units")
    p.add_argument("--t-max", type=_positive_float, default=None,
                   help="default 10 T_r")
    p.add_argument("--n", type=int, default=16384)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_impulse)

    p = sub.add_parser("simulate", help="reduced model vs LC-ladder oracle")
    p.add_argument("netlist")
    p.add_argument("--ell", type=_positive_float, required=True,
                   help="line inductance per length [H/m]")
    p.add_argument("--c-per-len", type=_positive_float, required=True,
                   help="line capacitance per length [F/m]")
    p.add_argument("--t-max", type=_positive_float, required=True)
    p.add_argument("--samples", type=int, default=1001)
    p.add_argument("--n-sections", type=int, default=1000)
    p.add_argument("--length", type=_positive_float, default=None,
                   help="line length [m]; default sized to the no-echo window")
    p.add_argument("--phi", default=None, help="comma-separated initial node fluxes")
    p.add_argument("--q", default=None, help="comma-separated initial node charges")
    p.add_argument("--q0", type=float, default=0.0, help="initial port momentum Q0")
    p.add_argument("--phi0-csv", default=None, help="initial line flux profile (x,value)")
    p.add_argument("--q0-csv", default=None,
                   help="initial line charge-density profile (x,value)")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    for name in ("g", "g_start", "g_stop"):
        if hasattr(args, name):
            vals = getattr(args, name)
            vals = vals if isinstance(vals, list) else [vals]
            for v in vals:
                if v is not None and not (0.0 < v < 1.0) and args.command in ("poles", "impulse"):
                    print(f"error: g values must lie in (0, 1), got {v}", file=sys.stderr)
                    return 2
    try:
        return args.func(args)
    except NetlistParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalPreconditionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except LineportError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
