"""Command-line front end.

Exit status is 0 on success, 1 on a domain error (a JSON error object is
written to stderr) and 2 on a usage error. Axis numbers on the command line
and in files are 1-based.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from contextlib import nullcontext
from typing import Sequence

import numpy as np
from threadpoolctl import threadpool_limits

from . import io as qio
from . import phase_space as ps
from .errors import QJSDError
from .qjsd import DiscreteQJSD, alpha_hashing, build_qjsd, parse_complex
from .spectral import eigendecompose
from .stats import (
    CONDITIONING_THRESHOLD,
    antisymmetric_covariance,
    conditional_expectation,
    quantum_covariance,
    symmetric_covariance,
    two_state_value,
    weak_value,
)
from .transform import faithfulness_rank, quantise, quasi_classicalise, verify_adjointness
from .verify import SUITES, run_suite


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _pair(z: complex) -> list[float]:
    return [float(np.real(z)), float(np.imag(z))]


def _emit_json(data, out: str) -> None:
    with qio.open_output(out) as fh:
        fh.write(json.dumps(data, indent=2) + "\n")


def _domain(text: str) -> tuple[float, float]:
    try:
        lo, hi = (float(x) for x in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"domain must look like LO:HI, got {text!r}") from None
    if not hi > lo:
        raise argparse.ArgumentTypeError("domain upper bound must exceed the lower bound")
    return lo, hi


def _complex_arg(text: str) -> complex:
    try:
        return parse_complex(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a complex number: {text!r}") from None


def _hashing(args):
    if getattr(args, "alpha", None) is not None:
        return alpha_hashing(args.alpha)
    return qio.resolve_hashing(args.hash)


def _observables(args):
    return [qio.load_operator(p) for p in args.obs]


def _qjsd(args):
    observables = _observables(args)
    if len(observables) == 1:
        return DiscreteQJSD.from_spectral_measure(eigendecompose(observables[0]))
    return build_qjsd(_hashing(args), observables)


def _state(args):
    return qio.load_state(args.state, renormalize=args.renormalize)


def _pair_observables(args):
    if len(args.obs) != 2:
        raise UsageError(f"{args.command}: exactly two --obs files (A then B) are required")
    return _observables(args)


def _outcome_function(args):
    if args.function is None:
        return lambda a: a
    return {k[0]: v for k, v in qio.load_tabulated(args.function).items()}


# handlers

def cmd_spectra(args) -> None:
    rho = _state(args) if args.state else None
    measures = [eigendecompose(obs) for obs in _observables(args)]
    header = ["axis", "eigenvalue", "multiplicity"] + (["probability"] if rho is not None else [])
    with qio.open_output(args.out) as out:
        out.write(",".join(header) + "\n")
        for axis, E in enumerate(measures, start=1):
            for value, proj in E.atoms:
                row = [str(axis), qio.fmt(value), str(int(round(np.trace(proj).real)))]
                if rho is not None:
                    row.append(qio.fmt(np.trace(proj @ rho.entries).real))
                out.write(",".join(row) + "\n")


def cmd_qjp(args) -> None:
    Q = build_qjsd(_hashing(args), _observables(args))
    P = quasi_classicalise(Q, _state(args))
    with qio.open_output(args.out) as out:
        qio.write_qjp_csv(P, out)


def cmd_quantise(args) -> None:
    Q = _qjsd(args)
    _emit_json(qio.operator_to_json(quantise(qio.load_tabulated(args.function), Q)), args.out)


def cmd_verify_adjoint(args) -> None:
    Q = _qjsd(args)
    residual = verify_adjointness(qio.load_tabulated(args.function), Q, _state(args))
    _emit_json({"residual": residual, "tol": 1e-9, "passed": residual <= 1e-9}, args.out)


def cmd_faithfulness(args) -> None:
    Q = _qjsd(args)
    rank = faithfulness_rank(Q)
    _emit_json({"rank": rank, "dim_squared": Q.dim**2, "faithful": rank == Q.dim**2}, args.out)


def _wigner_input(args) -> ps.PhaseSpaceGrid:
    if args.grid is not None:
        return qio.read_grid(args.grid)
    if args.state is None:
        raise UsageError(f"{args.command}: one of --state or --grid is required")
    return ps.wigner(qio.load_wavefunction(args.state, args.n, args.domain))


def cmd_wigner(args) -> None:
    qio.write_grid(ps.wigner(qio.load_wavefunction(args.state, args.n, args.domain)), args.out)


def cmd_cohen(args) -> None:
    if args.kernel_file:
        table = qio.load_tabulated(args.kernel_file)
        omega = [k[0] for k in table]
        kernel = ps.CohenKernel.tabulated(omega, list(table.values()))
    else:
        kernel = ps.cohen_kernel(args.kernel)
    qio.write_grid(ps.cohen_transform(_wigner_input(args), kernel), args.out)


def cmd_husimi(args) -> None:
    qio.write_grid(ps.husimi(_wigner_input(args), args.variance), args.out)


def cmd_gs(args) -> None:
    qio.write_grid(ps.glauber_sudarshan(_wigner_input(args), args.eps, args.variance), args.out)


def cmd_weak_value(args) -> None:
    A, B = _pair_observables(args)
    rho = _state(args)
    aw = weak_value(A, B, args.post_select, rho, args.threshold)
    result = {"post_select": args.post_select, "weak_value": _pair(aw)}
    if args.alpha is not None:
        result["alpha"] = _pair(args.alpha)
        result["two_state_value"] = _pair(two_state_value(A, B, args.post_select, rho, args.alpha, args.threshold))
    _emit_json(result, args.out)


def cmd_cond_exp(args) -> None:
    A, B = _pair_observables(args)
    Q = build_qjsd(_hashing(args), [A, B])
    ce = conditional_expectation(_outcome_function(args), Q, _state(args), args.threshold)
    atoms = [{"b": b, "value": _pair(v), "probability": ce.probabilities[b]} for b, v in ce.values.items()]
    if args.post_select is not None:
        atoms = [a for a in atoms if abs(a["b"] - args.post_select) <= 1e-9 * (1 + abs(args.post_select))]
    _emit_json(
        {
            "atoms": atoms,
            "excluded": [{"b": b, "probability": p} for b, p in ce.excluded.items()],
            "operator": qio.operator_to_json(ce.operator_form)["matrix"],
        },
        args.out,
    )


def cmd_covariance(args) -> None:
    A, B = _pair_observables(args)
    rho = _state(args)
    cv = quantum_covariance(lambda a: a, lambda b: b, build_qjsd(_hashing(args), [A, B]), rho)
    _emit_json(
        {
            "covariance": _pair(cv),
            "symmetric": symmetric_covariance(A, B, rho),
            "antisymmetric": antisymmetric_covariance(A, B, rho),
        },
        args.out,
    )


def cmd_verify(args) -> int:
    results = run_suite(args.suite, args.seed)
    with qio.open_output(args.out) as out:
        for r in results:
            out.write(r.line() + "\n")
        failed = sum(not r.passed for r in results)
        out.write(f"{len(results) - failed}/{len(results)} properties passed\n")
    return 0 if failed == 0 else 1


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="qjsd", description="Quasi-joint-spectral distributions and phase-space tools.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def command(name, func, help_):
        p = sub.add_parser(name, help=help_)
        p.set_defaults(func=func)
        p.add_argument("--out", default="-", help="output path, '-' for stdout")
        p.add_argument("--seed", type=int, default=0)
        return p

    def operators(p, state=True, state_required=True):
        p.add_argument("--obs", action="append", required=True, help="operator file, repeat per axis")
        p.add_argument("--hash", default="kd", help="preset (kd, anti-kd, mh, alpha:V, kappa:V) or file")
        p.add_argument("--alpha", type=_complex_arg, help="alpha-family parameter; overrides --hash")
        if state:
            p.add_argument("--state", required=state_required)
            p.add_argument("--renormalize", action="store_true")

    def grid_input(p):
        p.add_argument("--state", help="wave-function file")
        p.add_argument("--grid", help="grid CSV with sidecar metadata")
        p.add_argument("--n", type=int, default=None)
        p.add_argument("--domain", type=_domain, default=None)

    p = command("spectra", cmd_spectra, "eigenvalues, multiplicities and Born probabilities")
    p.add_argument("--obs", action="append", required=True)
    p.add_argument("--state")
    p.add_argument("--renormalize", action="store_true")

    for name in ("qjp", "classicalise"):
        operators(command(name, cmd_qjp, "quasi-joint-probability distribution as CSV"))

    p = command("quantise", cmd_quantise, "operator of a tabulated function")
    operators(p, state=False)
    p.add_argument("--function", required=True)

    p = command("verify-adjoint", cmd_verify_adjoint, "adjointness residual")
    operators(p)
    p.add_argument("--function", required=True)

    operators(command("faithfulness", cmd_faithfulness, "rank of the quasi-classicalisation map"), state=False)

    p = command("wigner", cmd_wigner, "Wigner function grid")
    p.add_argument("--state", required=True)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--domain", type=_domain, default=None)

    p = command("cohen", cmd_cohen, "Cohen-class transform of a Wigner grid")
    grid_input(p)
    p.add_argument("--kernel", default="wigner")
    p.add_argument("--kernel-file", help="tabulated kernel: [{point: [omega], value: [re, im]}]")

    p = command("husimi", cmd_husimi, "Husimi smoothing")
    grid_input(p)
    p.add_argument("--variance", type=float, default=ps.HUSIMI_VARIANCE)

    p = command("gs", cmd_gs, "regularized Glauber-Sudarshan deconvolution")
    grid_input(p)
    p.add_argument("--eps", type=float, default=1e-8)
    p.add_argument("--variance", type=float, default=ps.HUSIMI_VARIANCE)

    for name, func, help_ in (
        ("weak-value", cmd_weak_value, "weak and two-state values"),
        ("cond-exp", cmd_cond_exp, "quantum conditional expectation"),
        ("covariance", cmd_covariance, "quantum covariance and its parts"),
    ):
        p = command(name, func, help_)
        operators(p)
        p.add_argument("--post-select", type=float, required=name == "weak-value")
        p.add_argument("--threshold", type=float, default=CONDITIONING_THRESHOLD)
        if name == "cond-exp":
            p.add_argument("--function", help="tabulated f(a); identity if omitted")

    p = command("verify", cmd_verify, "run the invariant battery")
    p.add_argument("--suite", default="all", choices=["all", *SUITES])
    return parser


def _join_negative_values(argv: Sequence[str]) -> list[str]:
    """Let ``--domain -10:10`` through argparse's option detection."""
    out = list(argv)
    for i, tok in enumerate(out[:-1]):
        if tok in ("--domain", "--post-select", "--alpha") and out[i + 1].startswith("-"):
            out[i : i + 2] = [f"{tok}={out[i + 1]}", ""]
    return [tok for tok in out if tok != ""]


def _thread_limit():
    value = os.environ.get("QJSD_NUM_THREADS")
    if not value:
        return nullcontext()
    try:
        limit = int(value)
    except ValueError:
        raise UsageError(f"QJSD_NUM_THREADS must be a positive integer, got {value!r}") from None
    if limit < 1:
        raise UsageError("QJSD_NUM_THREADS must be a positive integer")
    return threadpool_limits(limits=limit)


def _fail(code: str, message: str, status: int, **extra) -> int:
    sys.stderr.write(json.dumps({"error": code, "message": message, **extra}) + "\n")
    return status


def run(argv: Sequence[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = build_parser().parse_args(_join_negative_values(argv))
        with _thread_limit():
            status = args.func(args)
    except UsageError as exc:
        return _fail("usage", str(exc), 2)
    except QJSDError as exc:
        sys.stderr.write(json.dumps(exc.to_dict(), default=str) + "\n")
        return 1
    except ValueError as exc:
        return _fail("invalid-argument", str(exc), 1)
    return 0 if status is None else int(status)


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
