"""Command-line front end.

Exit codes: 0 success, 2 invalid arguments or inputs, 3 numerical escalation failure.
"""

from __future__ import annotations

import argparse
import datetime
import sys
from dataclasses import dataclass, field

import mpmath
import numpy as np

from . import __version__, builders, floquet, gaps, gordon, io, periodic, precision
from .errors import NumericalEscalationError
from .floquet import FiniteVector
from .odometer import Potential, SamplingFunction, make_chain

VERBS = (
    "bands",
    "density",
    "mass",
    "open-gaps",
    "build-cantor",
    "build-ac",
    "build-gordon",
    "check-gordon",
    "ltnorm",
)

EXIT_OK, EXIT_USAGE, EXIT_NUMERICAL = 0, 2, 3


class UsageError(ValueError):
    pass


@dataclass
class Command:
    verb: str
    input: str | None = None
    output: str | None = None
    cert: str | None = None
    values_out: str | None = None
    eps: float | None = None
    t: float | None = None
    u: str | None = None
    stages: int | None = None
    tol: float = periodic.TOL_GAP
    precision_bits: int | None = None
    grid: int = 200
    qs: list[int] = field(default_factory=list)
    periods: list[int] = field(default_factory=list)
    seed: int = 0
    no_meta: bool = False
    omega: int = 0


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="limitperiodic", description="Periodic and limit-periodic Schroedinger operators.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="verb", required=True, parser_class=_Parser)

    def common(p, needs_input=True):
        p.add_argument("-i", "--input", required=needs_input, help="sampling function JSON or potential CSV")
        p.add_argument("-o", "--out", "--output", dest="output", help="output path (stdout if omitted)")
        p.add_argument("--tol", type=float, default=periodic.TOL_GAP, help="gap closure tolerance")
        p.add_argument("--precision-bits", type=int, help="extended precision (default: $FLOQUET_PRECISION_BITS or 128)")
        p.add_argument("--no-meta", action="store_true", help="omit the metadata block")
        p.add_argument("--omega", type=int, default=0, help="hull point: start the potential at this residue")

    p = sub.add_parser("bands", help="band edges and gaps")
    common(p)
    p = sub.add_parser("density", help="spectral density table (CSV: E,k,g)")
    common(p)
    p.add_argument("--u", required=True, help='finite vector, e.g. "0:1,1:-0.5"')
    p.add_argument("--t", type=float, help="also report the L^t norm of the density")
    p.add_argument("--grid", type=int, default=200, help="samples per band")
    p = sub.add_parser("mass", help="total spectral mass of u")
    common(p)
    p.add_argument("--u", required=True)
    p = sub.add_parser("open-gaps", help="open every gap by a one-site perturbation")
    common(p)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--cert", help="certificate JSON path")
    p = sub.add_parser("build-cantor", help="staged Cantor-spectrum construction")
    common(p)
    p.add_argument("--eps", type=float, default=0.5)
    p.add_argument("--stages", type=int, default=2)
    p = sub.add_parser("build-ac", help="staged construction with L^t density control")
    common(p)
    p.add_argument("--eps", type=float, default=0.5)
    p.add_argument("--stages", type=int, default=2)
    p.add_argument("--u", default="0:1")
    p.add_argument("--t", type=float, default=1.5)
    p = sub.add_parser("build-gordon", help="Gordon potential synthesis")
    common(p, needs_input=False)
    p.add_argument("--stages", type=int, default=2)
    p.add_argument("--periods", type=_int_list, help="chain periods (default 2,4,...,2^(stages+1))")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--values-out", help="CSV of V(n) over the checked window")
    p = sub.add_parser("check-gordon", help="measure Gordon deviations of a potential")
    common(p)
    p.add_argument("--qs", type=_int_list, required=True)
    p = sub.add_parser("ltnorm", help="L^t norm of |dk/dE| or of the density of u")
    common(p)
    p.add_argument("--t", type=float, default=1.5)
    p.add_argument("--u", help="use the density of this vector instead of |dk/dE|")
    return parser


def _validate(cmd: Command):
    if cmd.t is not None and not 1.0 < cmd.t < 2.0:
        raise UsageError(f"--t: t must be in (1,2), got {cmd.t}")
    if cmd.eps is not None and not cmd.eps > 0:
        raise UsageError(f"--eps: eps must be > 0, got {cmd.eps}")
    if cmd.stages is not None and cmd.stages < 0:
        raise UsageError(f"--stages: stages must be >= 0, got {cmd.stages}")
    if cmd.verb == "build-gordon" and cmd.stages < 1:
        raise UsageError(f"--stages: build-gordon needs stages >= 1, got {cmd.stages}")
    if not cmd.tol > 0:
        raise UsageError(f"--tol: tolerance must be > 0, got {cmd.tol}")
    if cmd.precision_bits is not None and cmd.precision_bits < 53:
        raise UsageError(f"--precision-bits: must be >= 53, got {cmd.precision_bits}")
    if cmd.grid < 1:
        raise UsageError(f"--grid: must be >= 1, got {cmd.grid}")
    if cmd.u is not None:
        try:
            FiniteVector.from_spec(cmd.u)
        except ValueError as exc:
            raise UsageError(f"--u: {exc}") from None
    if cmd.verb == "check-gordon" and (not cmd.qs or any(a >= b for a, b in zip(cmd.qs, cmd.qs[1:]))):
        raise UsageError(f"--qs: expected a strictly increasing list, got {cmd.qs}")
    if cmd.periods:
        try:
            make_chain(cmd.periods)
        except ValueError as exc:
            raise UsageError(f"--periods: {exc}") from None


def parse(args: list[str]) -> Command:
    ns = _parser().parse_args(args)
    d = vars(ns)
    cmd = Command(
        verb=ns.verb,
        input=d.get("input"),
        output=d.get("output"),
        cert=d.get("cert"),
        values_out=d.get("values_out"),
        eps=d.get("eps"),
        t=d.get("t"),
        u=d.get("u"),
        stages=d.get("stages"),
        tol=ns.tol,
        precision_bits=ns.precision_bits,
        grid=d.get("grid") or 200,
        qs=d.get("qs") or [],
        periods=d.get("periods") or [],
        seed=d.get("seed") or 0,
        no_meta=ns.no_meta,
        omega=ns.omega,
    )
    _validate(cmd)
    if cmd.verb == "build-gordon":
        if not cmd.periods:
            cmd.periods = [2**i for i in range(1, cmd.stages + 2)]
        chain = make_chain(cmd.periods)
        if chain.depth < cmd.stages:
            raise UsageError(f"--periods: {cmd.stages} stages need at least {cmd.stages} periods")
        need = gordon.required_bits(chain, cmd.stages, scale=2.0)
        if cmd.precision_bits is None:
            cmd.precision_bits = 53 if need <= 53 else max(precision.default_bits(), need)
        elif cmd.precision_bits < need:
            raise UsageError(f"--precision-bits: {cmd.stages} stages need at least {need} bits")
    return cmd


def _meta(cmd: Command) -> dict:
    if cmd.no_meta:
        return {}
    stamp = datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds")
    return {"meta": {"version": __version__, "verb": cmd.verb, "created": stamp}}


def _load(cmd: Command) -> SamplingFunction:
    f = io.load_function(cmd.input)
    if cmd.omega:
        f = SamplingFunction(f.chain, f.level, np.roll(f.values, -cmd.omega))
    return f


def _bands(cmd: Command) -> int:
    f = _load(cmd)
    if cmd.precision_bits and cmd.precision_bits > 53:
        bs = periodic.band_structure_mp(f.values, cmd.precision_bits, cmd.tol)
        out = bs.to_dict()
        out["exact_gap_lengths"] = [precision.to_string(x, cmd.precision_bits) for x in bs.exact_gap_lengths]
    else:
        out = periodic.band_structure(f.values, cmd.tol).to_dict()
    io.write_json(cmd.output, {**out, **_meta(cmd)})
    return EXIT_OK


def _density(cmd: Command) -> int:
    f = _load(cmd)
    u = FiniteVector.from_spec(cmd.u)
    prof = floquet.density_profile(f.values, u, cmd.grid)
    io.write_density_csv(cmd.output, prof)
    if cmd.t is not None:
        val = floquet.lt_norm_density(f.values, u, cmd.t)
        print(f"L^{cmd.t} norm of g: {io.format_float(val)}", file=sys.stderr if cmd.output in (None, "-") else sys.stdout)
    return EXIT_OK


def _mass(cmd: Command) -> int:
    f = _load(cmd)
    mass = floquet.spectral_mass(f.values, FiniteVector.from_spec(cmd.u))
    print(f"{mass:.6f}")
    return EXIT_OK


def _open_gaps(cmd: Command) -> int:
    f = io.load_function(cmd.input)
    f_tilde, cert = gaps.open_all_gaps(f, cmd.eps, cmd.tol, bits=cmd.precision_bits)
    io.write_json(cmd.output, f_tilde.to_dict())
    if cmd.cert:
        io.write_json(cmd.cert, {**cert.to_dict(), **_meta(cmd)})
    return EXIT_OK


def _build_cantor(cmd: Command) -> int:
    f0 = io.load_function(cmd.input)
    state = builders.build_cantor(f0, cmd.eps, cmd.stages, cmd.tol)
    audit = builders.audit_state(state)
    persist = builders.gap_persistence_check(state)
    log = state.to_dict()
    log["audit"] = {"passed": audit.passed, "rows": [list(r) for r in audit.rows]}
    log["persistence"] = {"passed": persist.passed, "checked": persist.checked}
    io.write_json(cmd.output, {**log, **_meta(cmd)})
    return EXIT_OK


def _build_ac(cmd: Command) -> int:
    f0 = io.load_function(cmd.input)
    state, summary = builders.build_ac(f0, cmd.eps, FiniteVector.from_spec(cmd.u), cmd.t, cmd.stages, cmd.tol)
    audit = builders.audit_state(state)
    log = state.to_dict()
    log["audit"] = {"passed": audit.passed, "rows": [list(r) for r in audit.rows]}
    log["Q"] = summary.Q
    log["exponent"] = summary.exponent
    log["stage_norms"] = list(summary.norms)
    io.write_json(cmd.output, {**log, **_meta(cmd)})
    return EXIT_OK


def _build_gordon(cmd: Command) -> int:
    chain = make_chain(cmd.periods)
    f0 = None
    if cmd.input:
        f0 = io.load_function(cmd.input)
        f0 = SamplingFunction(chain, 1, f0.values)
    funcs, cert = gordon.build_gordon(chain, cmd.stages, f0, cmd.seed, cmd.precision_bits)
    io.write_json(cmd.output, {**cert.to_dict(), "periods": cmd.periods, **_meta(cmd)})
    if cmd.values_out:
        qK = cert.qs[-1]
        vals, start = gordon.periodic_values(funcs[-1].values, 1 - qK, 2 * qK)
        with mpmath.workprec(cert.precision_bits):
            io.write_potential_csv(cmd.values_out, vals, start)
    print("PASS" if cert.passed else "FAIL")
    return EXIT_OK


def _check_gordon(cmd: Command) -> int:
    if cmd.input.lower().endswith(".csv"):
        vals, start = io.read_potential_csv(cmd.input)
        V = (vals, start)
    else:
        V = Potential(io.load_function(cmd.input).values)
    cert = gordon.check_gordon(V, cmd.qs, cmd.precision_bits)
    io.write_json(cmd.output, {**cert.to_dict(), **_meta(cmd)})
    print("PASS" if cert.passed else "FAIL", file=sys.stderr if cmd.output in (None, "-") else sys.stdout)
    return EXIT_OK


def _ltnorm(cmd: Command) -> int:
    f = _load(cmd)
    if cmd.u:
        val = floquet.lt_norm_density(f.values, FiniteVector.from_spec(cmd.u), cmd.t)
    else:
        val = floquet.lt_norm_dkdE(f.values, cmd.t)
    print(io.format_float(val))
    return EXIT_OK


HANDLERS = {
    "bands": _bands,
    "density": _density,
    "mass": _mass,
    "open-gaps": _open_gaps,
    "build-cantor": _build_cantor,
    "build-ac": _build_ac,
    "build-gordon": _build_gordon,
    "check-gordon": _check_gordon,
    "ltnorm": _ltnorm,
}


def execute(cmd: Command) -> int:
    try:
        return HANDLERS[cmd.verb](cmd)
    except NumericalEscalationError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ValueError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        cmd = parse(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    return execute(cmd)


if __name__ == "__main__":
    sys.exit(main())
