"""Command line entry point: ``qaxiom verify`` and ``qaxiom export-traj``."""
from __future__ import annotations

import argparse
import re
import sys
from typing import Dict, List, Optional

from .autonomize import ClassicalState, autonomize, extend_state, integrate_classical
from .errors import InvalidConfig, QaxiomError, UnknownSuite
from .report import SUITE_NAMES, SuiteConfig, load_config, run_suite
from .symbolic import PhaseSpace, parse_expr
from .symbolic.expr import ENERGY, FUNCTIONS, TIME

EXIT_OK, EXIT_FAILED, EXIT_CONFIG = 0, 1, 2

_IDENT = re.compile(r"[A-Za-z][A-Za-z0-9_]*")
_CANONICAL = re.compile(r"([qp])([1-9][0-9]*)\Z")


def infer_space(text: str) -> PhaseSpace:
    """Phase space implied by the identifiers of an expression.

    ``q<r>``/``p<r>`` fix the number of degrees of freedom (the largest index),
    ``t`` switches on the time symbol, and any other identifier except the
    function names becomes a parameter.
    """
    dof, has_time, params = 0, False, []
    for name in _IDENT.findall(text):
        m = _CANONICAL.match(name)
        if m:
            dof = max(dof, int(m.group(2)))
        elif name == TIME:
            has_time = True
        elif name in FUNCTIONS:
            continue
        elif name == ENERGY:
            raise InvalidConfig("the Hamiltonian must not contain E")
        elif name not in params:
            params.append(name)
    if dof == 0:
        raise InvalidConfig("the Hamiltonian mentions no q<r> or p<r> coordinates")
    return PhaseSpace(dof, has_time=has_time, parameters=tuple(sorted(params)))


def _assignments(items: Optional[List[str]], what: str) -> Dict[str, float]:
    out = {}
    for item in items or []:
        key, sep, value = item.partition("=")
        if not sep:
            raise InvalidConfig(f"{what} must look like name=value, got {item!r}")
        try:
            out[key.strip()] = float(value)
        except ValueError:
            raise InvalidConfig(f"{what} {key.strip()!r} has a non-numeric value {value!r}") from None
    return out


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qaxiom", description="Canonical quantization verification tools.")
    sub = parser.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", help="run a verification suite and write a JSON report")
    v.add_argument("--suite", help=f"one of {', '.join(SUITE_NAMES)} (default: all)")
    v.add_argument("--config", help="flat 'key = value' config file")
    v.add_argument("--out", help="report path (default: stdout)")
    v.add_argument("--seed", type=int, help="random seed (overrides the config file)")
    v.add_argument("--no-timings", action="store_true", help="omit runtime_ms so reports are byte-identical")

    e = sub.add_parser("export-traj", help="integrate Hamilton's equations and write a CSV trajectory")
    e.add_argument("--hamiltonian", required=True, help='expression such as "p1^2/(2*m) + q1^2/2"')
    e.add_argument("--t-end", type=float, required=True)
    e.add_argument("--step", type=float, required=True)
    e.add_argument("--out", required=True)
    e.add_argument("--t0", type=float, default=0.0, help="initial time (default 0)")
    e.add_argument("--init", action="append", metavar="NAME=VALUE",
                   help="initial value of a coordinate or momentum, e.g. q1=1.0 (default 0)")
    e.add_argument("--param", action="append", metavar="NAME=VALUE", help="parameter value, e.g. m=1")
    e.add_argument("--extended", action="store_true",
                   help="integrate in extended phase space and append the E column")
    return parser


def _verify(args) -> int:
    settings = load_config(args.config) if args.config else {}
    if args.suite is not None:
        settings["suite"] = args.suite
    if args.seed is not None:
        settings["seed"] = args.seed
    if args.out is not None:
        settings["out"] = args.out
    config = SuiteConfig(**settings)
    report = run_suite(config)
    text = report.to_json(timings=not args.no_timings)
    if config.out:
        with open(config.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    print(f"{report.passed} passed, {report.failed} failed", file=sys.stderr)
    return report.exit_code


def _export(args) -> int:
    space = infer_space(args.hamiltonian)
    H = parse_expr(args.hamiltonian, space)
    params = _assignments(args.param, "--param")
    missing = sorted(set(space.parameters) - set(params))
    if missing:
        raise InvalidConfig(f"missing --param for {', '.join(missing)}")
    init = _assignments(args.init, "--init")
    names = list(space.coordinates) + list(space.momenta)
    unknown = sorted(set(init) - set(names))
    if unknown:
        raise InvalidConfig(f"--init names {', '.join(unknown)} are not coordinates or momenta of the Hamiltonian")
    s0 = ClassicalState([init.get(n, 0.0) for n in names], args.t0)
    if args.extended:
        system = autonomize(H)
        traj = integrate_classical(system, extend_state(system, s0, params), args.t_end, args.step, params)
    else:
        traj = integrate_classical(H, s0, args.t_end, args.step, params)
    traj.to_csv(args.out)
    return EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "verify":
            return _verify(args)
        return _export(args)
    except (UnknownSuite, InvalidConfig) as exc:
        print(f"qaxiom: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (QaxiomError, ValueError) as exc:
        print(f"qaxiom: {exc}", file=sys.stderr)
        return EXIT_FAILED if args.command == "verify" else EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
