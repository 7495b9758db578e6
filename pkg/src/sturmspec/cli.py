"""Command-line front end.

Every subcommand prints one JSON document (stdout or --out) embedding the
resolved configuration and package version, so runs are reproducible and
byte-identical for identical inputs.  Domain failures exit 1 with a JSON
diagnostic on stderr; argparse usage errors exit 2.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction

import numpy as np

from . import __version__
from .cf import RotationNumber, convergents, from_periodic, from_rational
from .errors import SturmspecError
from .gordon import find_square, half_word_trace, local_growth_report, reproduction_residual
from .subordinacy import fit_exponents, holder_check, m_half_line, mobius_sup, weyl_point
from .traces import approximate_spectrum, band_measure, estimate_C_lambda, trace_orbit
from .transfer import evolve, norm_U, norm_u
from .words import (
    OrbitPhase,
    canonical_word,
    n_partition,
    potential_window,
    validate_partition,
    verify_concat_identity,
)


def _parse_theta(args) -> tuple[RotationNumber, dict]:
    given = [
        x is not None
        for x in (args.theta_cf, args.theta_cf_periodic, args.theta_rational)
    ]
    if sum(given) != 1:
        raise ValueError(
            "give exactly one of --theta-cf, --theta-cf-periodic, --theta-rational"
        )
    if args.theta_cf is not None:
        coeffs = tuple(int(t) for t in args.theta_cf.split(",") if t)
        r = convergents(coeffs)
        desc = {"cf": list(coeffs)}
    elif args.theta_cf_periodic is not None:
        pre_s, _, per_s = args.theta_cf_periodic.partition(":")
        pre = tuple(int(t) for t in pre_s.split(",") if t)
        per = tuple(int(t) for t in per_s.split(",") if t)
        r = from_periodic(pre, per, args.cf_depth)
        desc = {"cf_preperiod": list(pre), "cf_period": list(per), "depth": args.cf_depth}
    else:
        p_s, _, q_s = args.theta_rational.partition("/")
        r = from_rational(int(p_s), int(q_s))
        desc = {"rational": args.theta_rational}
    return r, desc


def _parse_beta(text: str):
    if text.startswith("orbit:"):
        return OrbitPhase(int(text[6:]))
    return Fraction(text)


def _beta_desc(beta) -> str:
    if isinstance(beta, OrbitPhase):
        return f"orbit:{beta.k}"
    return str(beta)


def _jsonable(x):
    if isinstance(x, np.ndarray):
        return [_jsonable(v) for v in x.tolist()]
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, complex):
        return {"re": x.real, "im": x.imag}
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    return x


def _emit(args, payload: dict) -> None:
    text = json.dumps(_jsonable(payload), sort_keys=True, indent=2) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _config(args, r_desc, **extra) -> dict:
    cfg = {"version": __version__, "theta": r_desc}
    cfg.update(extra)
    if getattr(args, "seed", None) is not None:
        cfg["seed"] = args.seed
    return cfg


def _cmd_words(args) -> None:
    r, desc = _parse_theta(args)
    beta = _parse_beta(args.beta)
    out = {
        "config": _config(args, desc, level=args.level, beta=_beta_desc(beta)),
        "denominators": list(r.denominators[: args.level + 2]),
    }
    w = canonical_word(r, args.level)
    out["word_length"] = len(w)
    if len(w) <= 10_000:
        out["word"] = str(w)
    if 2 <= args.level < r.depth:
        out["concat_identity"] = verify_concat_identity(r, args.level)
    if args.window:
        lo_s, _, hi_s = args.window.partition(":")
        lo, hi = int(lo_s), int(hi_s)
        part = n_partition(r, beta, args.level, (lo, hi))
        report = validate_partition(part, r)
        out["window"] = [lo, hi]
        out["potential"] = str(part.potential) if len(part.potential) <= 10_000 else None
        out["blocks"] = [
            {
                "j": part.j_index(i),
                "start": b.start,
                "stop": b.stop,
                "label": b.label,
                "fragment": b.fragment,
            }
            for i, b in enumerate(part.blocks)
        ]
        out["validation"] = {
            "passed": report.passed,
            "failures": list(report.failures),
            "inconclusive": list(report.inconclusive),
        }
    _emit(args, out)


def _cmd_evolve(args) -> None:
    r, desc = _parse_theta(args)
    beta = _parse_beta(args.beta)
    n_sites = int(args.length) + 1
    w = potential_window(r, beta, 1, n_sites)
    traj = evolve(w, args.lam, args.energy, args.phi)
    out = {
        "config": _config(
            args, desc, beta=_beta_desc(beta), **{"lambda": args.lam},
            energy=args.energy, phi=args.phi, length=args.length,
        ),
        "norm_u": norm_u(traj, args.length),
        "norm_U": norm_U(traj, args.length),
        "final_U": [float(traj.u[n_sites + 1]), float(traj.u[n_sites])],
    }
    _emit(args, out)


def _cmd_spectrum(args) -> None:
    r, desc = _parse_theta(args)
    bands = approximate_spectrum(r, args.lam, args.level)
    orbit_info = {}
    if args.energy is not None:
        orb = trace_orbit(r, args.lam, args.energy, min(args.level, r.depth))
        orbit_info = {
            "trace_orbit": {
                "x": orb.x,
                "y": orb.y,
                "z": orb.z,
                "escaped_at": orb.escaped_at,
            }
        }
    est = estimate_C_lambda(r, args.lam, min(args.level, 8))
    out = {
        "config": _config(args, desc, **{"lambda": args.lam}, level=args.level),
        "bands": [[a, b] for a, b in bands],
        "band_count": len(bands),
        "band_measure": band_measure(bands),
        "trace_bound_estimate": {
            "value": est.value,
            "spectrum_level": est.spectrum_level,
            "trace_level": est.trace_level,
            "energy": est.energy,
            "which": est.which,
        },
        **orbit_info,
    }
    _emit(args, out)


def _cmd_gordon(args) -> None:
    r, desc = _parse_theta(args)
    beta = _parse_beta(args.beta)
    wit = find_square(r, beta, args.level)
    out = {
        "config": _config(
            args, desc, beta=_beta_desc(beta), **{"lambda": args.lam},
            level=args.level,
        ),
        "case": wit.case,
        "ell": wit.ell,
        "k": wit.k,
        "reach": wit.reach,
        "class_word": str(wit.word_class) if wit.k <= 10_000 else None,
    }
    if args.energy is not None:
        c_est = max(1.0, estimate_C_lambda(r, args.lam, min(args.level, 8)).value)
        rep = local_growth_report(r, beta, wit, args.lam, args.energy, args.phi, c_est)
        residuals = [
            reproduction_residual(r, beta, wit, args.lam, args.energy, args.phi, j)
            for j in range(1, min(wit.ell, 8) + 1)
        ]
        out.update(
            energy=args.energy,
            trace=half_word_trace(wit, args.lam, args.energy),
            trace_bound=c_est,
            growth={
                "ok": rep.ok,
                "min_ratio": rep.min_ratio,
                "required": rep.required,
                "worst_j": rep.worst_j,
                "trace_bounded": rep.trace_bounded,
            },
            max_reproduction_residual=max(residuals),
        )
    _emit(args, out)


def _cmd_alpha(args) -> None:
    r, desc = _parse_theta(args)
    beta = _parse_beta(args.beta)
    fit = fit_exponents(r, beta, args.lam, args.energy)
    out = {
        "config": _config(
            args, desc, beta=_beta_desc(beta), **{"lambda": args.lam},
            energy=args.energy,
        ),
        "gamma1": fit.gamma1,
        "gamma2": fit.gamma2,
        "alpha": fit.alpha,
        "fit_residuals": [fit.residual1, fit.residual2],
    }
    _emit(args, out)


def _cmd_mfunction(args) -> None:
    r, desc = _parse_theta(args)
    beta = _parse_beta(args.beta)
    z = complex(args.energy, args.eps)
    mp = m_half_line(r, beta, args.lam, z, tol=args.tol)
    mm = m_half_line(r, beta, args.lam, z, side="left", tol=args.tol)
    tr = complex(weyl_point(mp.value, mm.value))
    out = {
        "config": _config(
            args, desc, beta=_beta_desc(beta), **{"lambda": args.lam},
            energy=args.energy, eps=args.eps, tol=args.tol,
        ),
        "m_plus": mp.value,
        "m_minus": mm.value,
        "m_whole": tr,
        "mobius_sup": mobius_sup(mp.value),
        "sites": [mp.sites, mm.sites],
        "truncation_bound": [mp.bound, mm.bound],
        "capped": [mp.capped, mm.capped],
    }
    _emit(args, out)


def _cmd_holder(args) -> None:
    r, desc = _parse_theta(args)
    beta = _parse_beta(args.beta)
    if args.alpha is None:
        fit = fit_exponents(r, beta, args.lam, args.energy)
        alpha = fit.alpha
    else:
        alpha = args.alpha
    rep = holder_check(r, beta, args.lam, args.energy, alpha)
    out = {
        "config": _config(
            args, desc, beta=_beta_desc(beta), **{"lambda": args.lam},
            energy=args.energy, alpha=alpha,
        ),
        "c3": rep.c3,
        "eps": rep.eps,
        "m_abs": rep.m_abs,
        "measure": rep.measure,
        "bound": rep.bound,
        "violations": list(rep.violations),
        "oracle_gap": rep.oracle_gap,
    }
    _emit(args, out)


def _add_theta_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--theta-cf", help="comma-separated partial quotients, e.g. 1,1,1,2")
    p.add_argument("--theta-cf-periodic", help="PRE:PERIOD partial quotients, e.g. :1 or 2:1,2")
    p.add_argument("--theta-rational", help="rational rotation number p/q")
    p.add_argument("--cf-depth", type=int, default=40, help="coefficients to unroll")
    p.add_argument("--out", help="write the JSON document here instead of stdout")
    p.add_argument("--seed", type=int, default=None, help="recorded in the config echo")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="sturmspec",
        description="Spectral numerics for Sturmian Schrodinger operators",
    )
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("words", help="canonical words and window partitions")
    _add_theta_args(p)
    p.add_argument("--level", type=int, required=True)
    p.add_argument("--beta", default="0")
    p.add_argument("--window", help="LO:HI sites for the partition")
    p.set_defaults(func=_cmd_words)

    p = sub.add_parser("evolve", help="propagate a solution and report norms")
    _add_theta_args(p)
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--beta", default="0")
    p.add_argument("--energy", type=float, required=True)
    p.add_argument("--phi", type=float, default=0.0)
    p.add_argument("--length", type=float, required=True)
    p.set_defaults(func=_cmd_evolve)

    p = sub.add_parser("spectrum", help="approximate bands and trace data")
    _add_theta_args(p)
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--level", type=int, required=True)
    p.add_argument("--energy", type=float, help="also report the trace orbit here")
    p.set_defaults(func=_cmd_spectrum)

    p = sub.add_parser("gordon", help="square witnesses and local growth")
    _add_theta_args(p)
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--beta", default="0")
    p.add_argument("--level", type=int, required=True)
    p.add_argument("--energy", type=float)
    p.add_argument("--phi", type=float, default=0.0)
    p.set_defaults(func=_cmd_gordon)

    p = sub.add_parser("alpha", help="power-law exponents of solution norms")
    _add_theta_args(p)
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--beta", default="0")
    p.add_argument("--energy", type=float, required=True)
    p.set_defaults(func=_cmd_alpha)

    p = sub.add_parser("mfunction", help="half- and whole-line m-functions")
    _add_theta_args(p)
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--beta", default="0")
    p.add_argument("--energy", type=float, required=True)
    p.add_argument("--eps", type=float, required=True, help="imaginary part of z")
    p.add_argument("--tol", type=float, default=1e-8)
    p.set_defaults(func=_cmd_mfunction)

    p = sub.add_parser("holder", help="spectral-measure Holder test")
    _add_theta_args(p)
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--beta", default="0")
    p.add_argument("--energy", type=float, required=True)
    p.add_argument("--alpha", type=float, help="exponent; fitted when omitted")
    p.set_defaults(func=_cmd_holder)

    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except (SturmspecError, ValueError, OverflowError) as exc:
        diag = {"error": type(exc).__name__, "message": str(exc)}
        sys.stderr.write(json.dumps(diag, sort_keys=True) + "\n")
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
