"""Command-line front end.

Subcommands: verify, solve, potential, simulate, gig1. Every command
emits one machine-readable JSON report (stdout, or --out FILE) carrying
an echo of its inputs, all computed quantities, and a pass/fail entry
per assertion. Reports are bit-faithful: floats carry 17 significant
digits, and Monte Carlo results embed their master seed, so re-running
a command with the echoed inputs reproduces the report byte for byte.

Exit codes: 0 all assertions passed, 1 an assertion failed or a domain
error was reported, 2 the inputs could not be parsed.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import bounds as _bounds
from . import gig1 as _gig1
from .certify import verify_bundle, verify_potential
from .chain import cyclic_decomposition, stationary
from .errors import SpecFileError, ToolkitError
from .mc import build_sampler, estimate_gstar, estimate_pif
from .potential import truncated_potential, verify_truncation_gap
from .specfile import dumps_canonical, load_chain_spec
from .split import canonical_solution, cycle_values, marginal_curve, occupation_measure

TOL_ASSERT = 1e-10
TOL_IDENTITY = 1e-8


class _Assertions:
    def __init__(self):
        self.items = []

    def check(self, name: str, passed: bool, detail=None):
        entry = {"name": name, "passed": bool(passed)}
        if detail is not None:
            entry["detail"] = detail
        self.items.append(entry)

    @property
    def all_passed(self) -> bool:
        return all(item["passed"] for item in self.items)


def _bundle_from_spec(spec):
    f = spec.function("f")
    v1 = spec.function("v1")
    v2 = spec.function("v2")
    if spec.small is None:
        raise SpecFileError("this command needs a 'small_set' declaration")
    small = spec.small
    return verify_bundle(
        spec.chain, f, v1, v2, small["C"], small["m"], small["lam"], small["phi"]
    )


def cmd_verify(args) -> dict:
    spec = load_chain_spec(args.spec)
    report = {"command": "verify", "inputs": {"spec": spec.document}}
    checks = _Assertions()
    try:
        bundle = _bundle_from_spec(spec)
        certs = {
            "b1": bundle.b1,
            "b2": bundle.b2,
            "lambda": bundle.lam,
            "m": bundle.m,
            "C": list(bundle.C),
            "phi": bundle.phi.mass,
        }
        checks.check("drift_minorization_certificate", True)
        if "v3" in spec.functions and "v4" in spec.functions:
            pot = verify_potential(
                spec.chain, bundle, spec.function("v3"), spec.function("v4")
            )
            certs["b3"] = pot.b3
            certs["b4"] = pot.b4
            checks.check("second_level_certificate", True)
        report["certificates"] = certs
    except ToolkitError as err:
        report["error"] = {"code": err.code, "message": str(err)}
        checks.check("drift_minorization_certificate", False, str(err))
    report["assertions"] = checks.items
    report["passed"] = checks.all_passed
    return report


def cmd_solve(args) -> dict:
    spec = load_chain_spec(args.spec)
    report = {"command": "solve", "inputs": {"spec": spec.document}}
    checks = _Assertions()
    try:
        _solve_body(spec, report, checks)
    except ToolkitError as err:
        report["error"] = {"code": err.code, "message": str(err)}
        checks.check("solve_completed", False, str(err))
    report["assertions"] = checks.items
    report["passed"] = checks.all_passed
    return report


def _solve_body(spec, report, checks):
    chain = spec.chain
    f = spec.function("f")
    bundle = _bundle_from_spec(spec)
    pi = stationary(chain).mass
    pi_f = float(pi @ f)
    f_c = f - pi_f
    g = canonical_solution(chain, bundle, f).values
    nu = occupation_measure(chain, bundle).mass
    cyc_f = cycle_values(chain, bundle, f)
    s_charge = np.zeros(chain.n)
    s_charge[list(bundle.C)] = bundle.b1
    cyc_s = cycle_values(chain, bundle, s_charge)

    pot_cert = None
    period = cyclic_decomposition(chain).period
    if "v3" in spec.functions and "v4" in spec.functions:
        pot_cert = verify_potential(chain, bundle, spec.function("v3"), spec.function("v4"))
    breport = _bounds.finite_bound_report(bundle, pot_cert, period)

    ratio = bundle.m / bundle.lam
    poisson_residual = float(np.max(np.abs(chain.kernel @ g - g + f_c)))
    checks.check("poisson_residual", poisson_residual <= 1e-9, poisson_residual)
    l1 = float(np.abs(nu - pi).sum())
    checks.check("occupation_matches_stationary", l1 <= TOL_ASSERT, l1)
    checks.check(
        "cycle_f_bound",
        bool(np.all(cyc_f.values <= bundle.v1 + bundle.b1 * ratio + TOL_ASSERT)),
    )
    checks.check(
        "cycle_tau_bound",
        bool(np.all(cyc_f.tau <= bundle.v2 + bundle.b2 * ratio + TOL_ASSERT)),
    )
    checks.check("cycle_f_phi_bound", cyc_f.at_phi <= breport.delta1 + TOL_ASSERT)
    checks.check("cycle_tau_phi_bound", cyc_f.tau_at_phi <= breport.delta2 + TOL_ASSERT)
    checks.check(
        "solution_envelope",
        bool(
            np.all(g <= breport.envelope_upper + TOL_ASSERT)
            and np.all(g >= breport.envelope_lower - TOL_ASSERT)
            and np.all(np.abs(g) <= breport.envelope_abs + TOL_ASSERT)
        ),
    )
    checks.check(
        "comparison_inequality",
        bool(np.all(cyc_f.values <= bundle.v1 + cyc_s.values + 1e-9)),
    )
    checks.check("pi_f_le_b1", pi_f <= bundle.b1 + TOL_ASSERT, pi_f)
    if bundle.m == 1:
        phi_g = float(bundle.phi.mass @ g)
        checks.check("phi_gstar_zero", abs(phi_g) <= TOL_ASSERT, phi_g)

    marg = marginal_curve(chain, f, 200)
    worst_marg = float(np.max(marg - breport.marginal_bound[None, :]))
    checks.check("uniform_marginal_bound", worst_marg <= TOL_ASSERT, worst_marg)

    mart = marginal_curve(chain, g, 50)
    partial = np.cumsum(np.vstack([np.zeros(chain.n), marginal_curve(chain, f_c, 49)]), axis=0)
    mart_res = float(np.max(np.abs(mart + partial - g[None, :])))
    checks.check("martingale_identity", mart_res <= TOL_IDENTITY, mart_res)

    ok = True
    for v, b in ((bundle.v1, bundle.b1), (bundle.v2, bundle.b2)):
        curve = marginal_curve(chain, v, 100)
        steps = np.arange(101)[:, None]
        ok &= bool(np.all(curve <= v[None, :] + steps * b + TOL_IDENTITY))
    checks.check("power_drift_bound", ok)

    certs = {
        "b1": bundle.b1,
        "b2": bundle.b2,
        "lambda": bundle.lam,
        "m": bundle.m,
        "C": list(bundle.C),
        "phi": bundle.phi.mass,
    }
    if pot_cert is not None:
        certs["b3"] = pot_cert.b3
        certs["b4"] = pot_cert.b4
    report["certificates"] = certs
    report["period"] = period
    report["pi"] = pi
    report["pi_f"] = pi_f
    report["tables"] = {
        "g_star": g,
        "expected_tau": cyc_f.tau,
        "cycle_f": cyc_f.values,
        "nu": nu,
        "envelope_slack_upper": breport.envelope_upper - g,
        "envelope_slack_lower": g - breport.envelope_lower,
    }
    report["bounds"] = breport.as_dict()
    report["diagnostics"] = {
        "phi_g_star": float(bundle.phi.mass @ g),
        "poisson_residual": poisson_residual,
        "cycle_f_at_phi": cyc_f.at_phi,
        "expected_tau_at_phi": cyc_f.tau_at_phi,
    }


def cmd_potential(args) -> dict:
    spec = load_chain_spec(args.spec)
    report = {
        "command": "potential",
        "inputs": {"spec": spec.document, "tol": args.tol, "max_blocks": args.max_blocks},
    }
    checks = _Assertions()
    try:
        _potential_body(spec, args, report, checks)
    except ToolkitError as err:
        report["error"] = {"code": err.code, "message": str(err)}
        checks.check("potential_converged", False, str(err))
    report["assertions"] = checks.items
    report["passed"] = checks.all_passed
    return report


def _potential_body(spec, args, report, checks):
    chain = spec.chain
    f = spec.function("f")
    decomp = cyclic_decomposition(chain)
    p = decomp.period
    result = truncated_potential(chain, f, p, tol=args.tol, max_blocks=args.max_blocks)
    g_t = result.g_tilde.values
    pi = stationary(chain).mass
    f_c = f - float(pi @ f)
    one_step = float(np.max(np.abs(chain.kernel @ g_t - g_t + f_c)))
    checks.check("potential_converged", result.residual <= args.tol, result.residual)
    report["period"] = p
    report["blocks"] = result.terms
    report["block_residual"] = result.residual
    report["tables"] = {"g_tilde": g_t}
    report["diagnostics"] = {"one_step_poisson_residual": one_step}
    if p == 1:
        checks.check("poisson_residual_aperiodic", one_step <= TOL_IDENTITY, one_step)

    if spec.small is not None and {"f", "v1", "v2"} <= set(spec.functions):
        bundle = _bundle_from_spec(spec)
        g = canonical_solution(chain, bundle, f).values
        gap = g_t - g
        report["tables"]["g_star"] = g
        report["tables"]["gap"] = gap
        spread = max(
            float(np.ptp(gap[list(cls)])) if len(cls) > 1 else 0.0
            for cls in decomp.classes
        )
        checks.check("gap_constant_per_class", spread <= TOL_IDENTITY, spread)
        if p == 1:
            expected = -float(pi @ g)
            dev = float(np.max(np.abs(gap - expected)))
            checks.check("gap_equals_minus_pi_gstar", dev <= TOL_IDENTITY, dev)
        if {"v3", "v4"} <= set(spec.functions):
            pot_cert = verify_potential(
                chain, bundle, spec.function("v3"), spec.function("v4")
            )
            try:
                truncation_gap = verify_truncation_gap(chain, bundle, pot_cert, g, result, p)
                checks.check("truncation_gap_bounds", True)
                report["bounds"] = {
                    "gap_lower": truncation_gap["bound_lower"],
                    "gap_upper": truncation_gap["bound_upper"],
                    "gap_abs": truncation_gap["bound_abs"],
                }
                report["tables"]["gap_slack_upper"] = truncation_gap["slack_upper"]
                report["tables"]["gap_slack_lower"] = truncation_gap["slack_lower"]
            except ToolkitError as err:
                checks.check("truncation_gap_bounds", False, str(err))


def cmd_simulate(args) -> dict:
    if (args.spec is None) == (not args.gig1):
        raise SpecFileError("simulate needs exactly one of --spec or --gig1")
    if args.gig1:
        return _simulate_gig1(args)
    spec = load_chain_spec(args.spec)
    report = {
        "command": "simulate",
        "inputs": {
            "spec": spec.document,
            "x0": args.x0,
            "cycles": args.cycles,
            "seed": args.seed,
            "workers": args.workers,
        },
    }
    checks = _Assertions()
    try:
        chain = spec.chain
        f = spec.function("f")
        if spec.small is None:
            raise SpecFileError("simulate needs a 'small_set' declaration")
        small = _bundle_from_spec(spec).small if "v1" in spec.functions else None
        if small is None:
            from .certify import SmallSetCertificate, minorize
            from .chain import Distribution

            s = spec.small
            if s["lam"] is None:
                small = minorize(chain, s["C"], s["m"])
            else:
                small = SmallSetCertificate(
                    C=s["C"], m=s["m"], lam=s["lam"], phi=Distribution(mass=s["phi"])
                )
                small.verify(chain)
        x0 = int(args.x0)
        pi = stationary(chain).mass
        pi_f = float(pi @ f)
        g_exact = canonical_solution(chain, small, f).values
        sc = build_sampler(chain, small, f)
        pif_est = estimate_pif(sc, args.cycles, args.seed, workers=args.workers)
        g_est = estimate_gstar(
            sc, x0, pi_f, args.cycles, args.seed,
            workers=args.workers, stream_offset=args.cycles,
        )
        report["estimates"] = {
            "pi_f": {"point": pif_est.point, "std_error": pif_est.std_error},
            "g_star_x0": {"point": g_est.point, "std_error": g_est.std_error},
            "exact": {"pi_f": pi_f, "g_star_x0": float(g_exact[x0])},
            "n_cycles": args.cycles,
            "seed": args.seed,
        }
        checks.check(
            "mc_matches_exact_gstar",
            abs(g_est.point - g_exact[x0]) <= 3.0 * max(g_est.std_error, 1e-15),
            g_est.point - float(g_exact[x0]),
        )
        checks.check(
            "mc_matches_exact_pif",
            abs(pif_est.point - pi_f) <= 3.0 * max(pif_est.std_error, 1e-15),
            pif_est.point - pi_f,
        )
    except ToolkitError as err:
        report["error"] = {"code": err.code, "message": str(err)}
        checks.check("simulation_completed", False, str(err))
    report["assertions"] = checks.items
    report["passed"] = checks.all_passed
    return report


def _simulate_gig1(args) -> dict:
    report = {
        "command": "simulate",
        "inputs": {
            "gig1": {"family": args.family, "mu": args.mu, "sigma": args.sigma,
                     "kappa": args.kappa, "grid_step": args.grid_step},
            "x0": args.x0,
            "cycles": args.cycles,
            "seed": args.seed,
            "workers": args.workers,
            "max_steps": args.max_steps,
        },
    }
    checks = _Assertions()
    try:
        model = _gig1.GIG1Model(
            increment=_gig1.increment_family(args.family, args.mu, args.sigma),
            kappa=args.kappa,
            step=args.grid_step,
        )
        cert = _gig1.build_certificate(model)
        result = _gig1.mc_validate(
            model, cert, [float(args.x0)], args.cycles, args.seed,
            workers=args.workers, max_steps=args.max_steps,
        )
        report["certificate"] = {
            "x0": cert.x0, "lambda": cert.lam, "b1": cert.b1, "c1": cert.c1,
        }
        report["estimates"] = result
        checks.check("estimates_inside_envelope", result["all_inside"])
    except ToolkitError as err:
        report["error"] = {"code": err.code, "message": str(err)}
        checks.check("simulation_completed", False, str(err))
    report["assertions"] = checks.items
    report["passed"] = checks.all_passed
    return report


def cmd_gig1(args) -> dict:
    report = {
        "command": "gig1",
        "inputs": {
            "family": args.family, "mu": args.mu, "sigma": args.sigma,
            "kappa": args.kappa, "grid_step": args.grid_step,
            "tail_sigmas": args.tail_sigmas, "x_max": args.x_max,
            "x_points": args.x_points, "seed": args.seed,
        },
    }
    checks = _Assertions()
    try:
        model = _gig1.GIG1Model(
            increment=_gig1.increment_family(args.family, args.mu, args.sigma),
            kappa=args.kappa,
            step=args.grid_step,
            tail_sigmas=args.tail_sigmas,
        )
        cert = _gig1.build_certificate(model)
        xs = np.linspace(0.0, args.x_max, args.x_points)
        curves = _gig1.bound_curves(cert, xs)
        worst = _gig1.drift_spot_check(model, cert, 100, np.random.default_rng(args.seed))
        report["certificate"] = {
            "x0": cert.x0,
            "lambda": cert.lam,
            "b1": cert.b1,
            "b2": cert.b2,
            "c1": cert.c1,
            "phi_atom": cert.phi_atom(),
            "phi_v1": cert.phi_v1,
        }
        report["comparison"] = {
            "a": curves["comparison_a"],
            "competing_asymptotic_coeff": curves["competing_asymptotic_coeff"],
            "ours_asymptotic_coeff": curves["ours_asymptotic_coeff"],
        }
        checks.check("certificate_positive", 0.0 < cert.lam < 1.0 and cert.b1 > 0.0)
        checks.check("drift_spot_check", worst <= 1e-6, worst)
        checks.check(
            "ours_coeff_le_competing_coeff",
            curves["ours_asymptotic_coeff"] <= curves["competing_asymptotic_coeff"] + 1e-12,
        )
        report["comparison"]["strictly_tighter"] = bool(
            curves["ours_asymptotic_coeff"] < curves["competing_asymptotic_coeff"]
        )
        if args.curves:
            table = np.column_stack(
                [xs, curves["ours_upper"], curves["ours_lower"], curves["ours_abs"], curves["competing"]]
            )
            np.savetxt(
                args.curves,
                table,
                fmt="%.17g",
                header="x ours_upper ours_lower ours_abs competing",
            )
            report["curve_file"] = args.curves
    except ToolkitError as err:
        report["error"] = {"code": err.code, "message": str(err)}
        checks.check("certificate_built", False, str(err))
    report["assertions"] = checks.items
    report["passed"] = checks.all_passed
    return report


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="markov-poisson",
        description="Certificates, exact solutions, bounds, and regenerative "
        "Monte Carlo for Poisson's equation on Markov chains.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_out(p):
        p.add_argument("--out", default=None, help="write the JSON report here instead of stdout")

    p = sub.add_parser("verify", help="check certificates declared in a chain-spec")
    p.add_argument("--spec", required=True, help="chain-spec JSON file")
    add_out(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("solve", help="exact solution, occupation law, and all bounds")
    p.add_argument("--spec", required=True)
    add_out(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("potential", help="block-truncated potential sum and its gap")
    p.add_argument("--spec", required=True)
    p.add_argument("--tol", type=float, default=1e-10, help="block-sum stopping tolerance")
    p.add_argument("--max-blocks", type=int, default=10**6)
    add_out(p)
    p.set_defaults(func=cmd_potential)

    p = sub.add_parser("simulate", help="regenerative Monte Carlo estimates")
    p.add_argument("--spec", default=None, help="finite-chain spec file")
    p.add_argument("--gig1", action="store_true", help="simulate the queueing example instead")
    p.add_argument("--x0", required=True, help="starting state (index, or waiting time with --gig1)")
    p.add_argument("--cycles", type=int, default=10000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--max-steps", type=int, default=10**8)
    p.add_argument("--family", choices=_gig1.FAMILIES, default="normal",
                   help="increment family (--gig1)")
    p.add_argument("--mu", type=float, default=-0.5, help="increment location (--gig1)")
    p.add_argument("--sigma", type=float, default=1.0, help="increment scale (--gig1)")
    p.add_argument("--kappa", type=float, default=2.0, help="drift margin parameter (--gig1)")
    p.add_argument("--grid-step", type=float, default=0.01)
    add_out(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("gig1", help="queueing-example certificate, curves, comparison")
    p.add_argument("--family", choices=_gig1.FAMILIES, default="normal")
    p.add_argument("--mu", type=float, default=-0.5)
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--kappa", type=float, default=1.1)
    p.add_argument("--grid-step", type=float, default=0.01)
    p.add_argument("--tail-sigmas", type=float, default=15.0)
    p.add_argument("--x-max", type=float, default=20.0)
    p.add_argument("--x-points", type=int, default=201)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--curves", default=None, help="write bound curves as columnar text here")
    add_out(p)
    p.set_defaults(func=cmd_gig1)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        report = args.func(args)
    except SpecFileError as err:
        sys.stdout.write(
            dumps_canonical(
                {"command": args.command, "error": {"code": err.code, "message": str(err)},
                 "passed": False}
            )
            + "\n"
        )
        return 2
    text = dumps_canonical(report) + "\n"
    if getattr(args, "out", None):
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0 if report["passed"] else 1


if __name__ == "__main__":
    sys.exit(main())
