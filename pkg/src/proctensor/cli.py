"""``proctensor`` command-line front end.

Exit status: 0 on success, 2 when inputs fail validation, 3 on numerical failure.
"""
from __future__ import annotations

import argparse
import itertools
import os
import sys
import warnings

import numpy as np

from . import io
from .bases import (
    OpBasis,
    full_op_basis,
    in_span,
    projective_basis,
    projective_basis_qubit,
    random_unitary_basis,
    state_basis,
    unitary_basis_qubit,
)
from .choi import ChoiMap, identity_map
from .decoupling import search
from .process_tensor import (
    apply,
    positivity_report,
    reconstruct_scenario,
    span_residual,
)
from .simulator import run_sequence, unitary_scenario
from .witnesses import (
    correlation_memory,
    cptp_consistency,
    markov_test,
    overcomplete_breaks,
)

EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL = 0, 2, 3


class ValidationFailure(Exception):
    pass


def make_basis(name: str, d: int, seed: int = 0):
    if name == "full":
        return full_op_basis(d)
    if name == "unitary":
        return unitary_basis_qubit() if d == 2 else random_unitary_basis(d, seed)
    if name == "projective":
        return projective_basis_qubit() if d == 2 else projective_basis(d, seed)
    if os.path.exists(name):
        return io.basis_from_json(io.read_json(name), name)
    raise ValidationFailure(f"--basis: expected full, unitary, projective or a basis file, got {name!r}")


def _scenario(args):
    if not args.scenario:
        raise ValidationFailure("--scenario is required")
    return io.scenario_from_json(io.read_json(args.scenario))


def _finite(x, what: str):
    if not np.all(np.isfinite(x)):
        raise FloatingPointError(f"{what} contains non-finite values")
    return x


def _emit(args, obj, summary: str):
    if getattr(args, "out", None):
        io.write_json(args.out, obj)
        summary += f"\nwrote {args.out}"
    print(summary)


# --- subcommands ------------------------------------------------------------------


def cmd_reconstruct(args):
    sc = _scenario(args)
    steps = args.steps or sc.n_steps
    if steps > sc.n_steps:
        raise ValidationFailure(f"--steps {steps} exceeds the scenario's {sc.n_steps} steps")
    sc = sc.truncated(steps)
    basis = make_basis(args.basis, sc.d_sys, args.seed)
    pt = reconstruct_scenario(sc, basis, threads=args.threads)
    _finite(pt.choi, "reconstructed tensor")
    lo, pos = positivity_report(pt)
    _emit(args, io.tensor_to_json(pt),
          f"reconstructed {steps}-step {pt.basis_label} tensor from "
          f"{pt.meta['oracle_calls']} sequences; min eigenvalue {lo:.6g} "
          f"({'positive' if pos else 'not positive'})")


def _read_sequence(path, pt):
    obj = io.read_json(path)
    if "choi" in obj:
        return io.cmatrix_from_json(obj["choi"], "sequence.choi")
    ops = obj.get("ops")
    if not isinstance(ops, list) or len(ops) != pt.n_steps:
        raise ValidationFailure(f"sequence: 'ops' must list {pt.n_steps} matrices in time order")
    maps = []
    for k, (m, b) in enumerate(zip(ops, pt.step_bases)):
        maps.append(ChoiMap(io.cmatrix_from_json(m, f"sequence.ops[{k}]"), b.d_in, b.d_out))
    return maps


def cmd_apply(args):
    if not args.tensor or not args.sequence:
        raise ValidationFailure("apply needs --tensor and --sequence")
    pt = io.tensor_from_json(io.read_json(args.tensor))
    _finite(pt.choi, "tensor")
    seq = _read_sequence(args.sequence, pt)
    try:
        residual = span_residual(pt, seq)
    except ValueError as exc:
        raise ValidationFailure(str(exc)) from exc
    note = ""
    if residual > args.tol:
        if not args.allow_out_of_span:
            raise ValidationFailure(
                f"sequence lies outside the tensor's span (residual {residual:.3g}); "
                "pass --allow-out-of-span to apply anyway")
        note = f"\nwarning: out-of-span input, span residual {residual:.6g}"
    out = apply(pt, seq)
    _emit(args, {"state": io.cmatrix_to_json(out), "span_residual": residual},
          f"output trace {np.trace(out).real:.12g}{note}")


def cmd_witness(args):
    sc = _scenario(args).truncated(1)
    basis = make_basis(args.basis, sc.d_sys, args.seed)
    t = reconstruct_scenario(sc, basis, threads=args.threads)
    l = reconstruct_scenario(sc.product_version(), basis, threads=args.threads)
    w = correlation_memory(t, l, args.tol)
    report = io.correlation_report(w)
    summary = f"correlation memory ({w.basis_label}): norm {w.norm:.6g}, detected={w.detected}"
    if len(basis) > sc.d_sys ** 2:
        try:
            res, det = cptp_consistency(t, sc.rho_s)
            report["cptp"] = io.cptp_report(res, det, basis.label)
            summary += f"\ncptp consistency residual {res:.6g}, detected={det}"
        except ValueError as exc:
            summary += f"\ncptp consistency skipped: {exc}"
    _emit(args, report, summary)


def cmd_markov(args):
    sc = _scenario(args)
    basis = make_basis(args.basis, sc.d_sys, args.seed)
    pt = reconstruct_scenario(sc, basis, threads=args.threads)
    breaks = [c for c in overcomplete_breaks(sc.d_sys) if in_span(c.choi, basis)]
    if not breaks:
        raise ValidationFailure("no causal break lies in the span of the chosen basis")
    hist = itertools.product(basis.elements, repeat=sc.n_steps - 1)
    histories = [list(reversed(h)) for h in itertools.islice(hist, args.max_histories)]
    r = markov_test(pt, histories, breaks, args.tol)
    _emit(args, io.markov_report(r, basis.label),
          f"markov test: {len(r.violations)} violations over {r.n_comparisons} comparisons "
          f"(max discrepancy {r.max_discrepancy:.6g}); "
          f"{'Markovian within test' if r.is_markovian_within_test else 'memory detected'}")


def cmd_decouple(args):
    sc = _scenario(args)
    if sc.n_steps < 2:
        raise ValidationFailure("decoupling needs at least two time steps")
    interior = make_basis(args.basis or "unitary", sc.d_sys, args.seed)
    pt = reconstruct_scenario(sc, [state_basis(sc.d_sys)] + [interior] * (sc.n_steps - 1),
                              threads=args.threads)
    _finite(pt.choi, "reconstructed tensor")
    res = search(pt, budget=args.budget, seed=args.seed, method=args.method)
    _emit(args, io.decouple_to_json(res),
          f"best unitarity distance {res.best_score:.6g} after {res.evaluations} evaluations")


def cmd_validate(args):
    paths = list(args.files)
    if args.scenario:
        paths.append(args.scenario)
    if args.tensor:
        paths.append(args.tensor)
    if not paths:
        raise ValidationFailure("validate needs at least one file")
    for p in paths:
        obj = io.read_json(p)
        if "env" in obj:
            sc = io.scenario_from_json(obj)
            print(f"{p}: valid scenario ({sc.env.variant}, {sc.n_steps} steps)")
        elif "choi" in obj and "step_bases" in obj:
            pt = io.tensor_from_json(obj)
            herm = np.abs(pt.choi - pt.choi.conj().T).max()
            if herm > 1e-10:
                raise ValidationFailure(f"{p}: tensor Choi matrix is not Hermitian ({herm:.3g})")
            print(f"{p}: valid {pt.n_steps}-step {pt.basis_label} tensor")
        elif "elements" in obj:
            b = io.basis_from_json(obj, p)
            print(f"{p}: valid basis with {len(b)} elements")
        elif "rows" in obj:
            io.cmatrix_from_json(obj, p)
            print(f"{p}: valid matrix")
        else:
            raise ValidationFailure(f"{p}: unrecognized document")


def cmd_demo(args):
    """Restricted z-basis view of two Hadamard gates (qualitative)."""
    h = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
    sc = unitary_scenario(np.diag([1.0, 0.0]), [h, h], 2, 1)  # no environment
    e = np.eye(2)
    zmaps = [ChoiMap(np.kron(np.diag(e[i]), np.diag(e[j])), 2, 2) for i in range(2) for j in range(2)]
    zbasis = OpBasis.from_elements(zmaps, "custom", [f"P{i}|M{j}" for i in range(2) for j in range(2)])
    pt = reconstruct_scenario(sc, zbasis)
    prep0 = ChoiMap(np.kron(np.diag([1, 0]), np.eye(2)), 2, 2)
    restricted = apply(pt, [prep0, identity_map(2)]).real
    actual = run_sequence(sc, [prep0, identity_map(2)]).real
    print("Two Hadamard gates, observed only through z-basis measure-and-prepare maps.")
    print(f"  one step alone randomizes z: p(0) = {abs(h[0, 0]) ** 2:.3f}")
    print(f"  restricted tensor, 'do nothing' in between: p(0) = {restricted[0, 0]:.3f}")
    print(f"  actual process, 'do nothing' in between:    p(0) = {actual[0, 0]:.3f}")
    print("The identity lies outside the z-basis span, so the restricted tensor cannot")
    print("predict it. Reading the mismatch as memory would be a false positive.")


COMMANDS = {
    "reconstruct": cmd_reconstruct,
    "apply": cmd_apply,
    "witness": cmd_witness,
    "markov": cmd_markov,
    "decouple": cmd_decouple,
    "validate": cmd_validate,
    "demo": cmd_demo,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="proctensor", description=__doc__.splitlines()[0])
    p.add_argument("--config", help="JSON file with option values (flags override it)")
    p.add_argument("--threads", type=int, default=None,
                   help="cap on worker threads (default: $PROCTENSOR_THREADS or 1)")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, scenario=True, basis="full"):
        if scenario:
            sp.add_argument("--scenario", help="scenario JSON file")
        sp.add_argument("--basis", default=basis,
                        help="full | unitary | projective | path to a basis JSON file")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--tol", type=float, default=1e-9)
        sp.add_argument("--out", help="output JSON path")

    sp = sub.add_parser("reconstruct", help="tomographically reconstruct a process tensor")
    common(sp)
    sp.add_argument("--steps", type=int, default=None)
    sp = sub.add_parser("apply", help="apply a stored tensor to an operation sequence")
    common(sp, scenario=False)
    sp.add_argument("--tensor")
    sp.add_argument("--sequence")
    sp.add_argument("--allow-out-of-span", action="store_true")
    sp = sub.add_parser("witness", help="correlation-memory witness")
    common(sp, basis="unitary")
    sp = sub.add_parser("markov", help="causal-break Markovianity test")
    common(sp)
    sp.add_argument("--max-histories", type=int, default=64)
    sp = sub.add_parser("decouple", help="search a decoupling sequence")
    common(sp, basis="unitary")
    sp.add_argument("--budget", type=int, default=2000)
    sp.add_argument("--method", default="coordinate_descent",
                    choices=["random", "grid", "coordinate_descent"])
    sp = sub.add_parser("validate", help="check JSON inputs against their schemas")
    sp.add_argument("files", nargs="*")
    sp.add_argument("--scenario")
    sp.add_argument("--tensor")
    sub.add_parser("demo", help="restricted-view false-positive anecdote")
    return p


def _merge_config(parser, argv):
    args = parser.parse_args(argv)
    if args.config:
        cfg = io.read_json(args.config)
        if not isinstance(cfg, dict):
            raise ValidationFailure(f"{args.config}: config must be a JSON object")
        defaults = vars(parser.parse_args([args.command] if args.command else []))
        for key, val in cfg.items():
            key = key.replace("-", "_")
            if key == "command":
                continue
            if not hasattr(args, key):
                raise ValidationFailure(f"{args.config}: unknown field {key!r}")
            if getattr(args, key) == defaults.get(key):
                setattr(args, key, val)
    return args


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = _merge_config(parser, argv)
        if args.threads is not None:
            if args.threads < 1:
                raise ValidationFailure("--threads must be at least 1")
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            COMMANDS[args.command](args)
        return EXIT_OK
    except SystemExit as exc:  # argparse usage errors
        return EXIT_INVALID if exc.code else EXIT_OK
    except (ValidationFailure, io.SchemaError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (np.linalg.LinAlgError, FloatingPointError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
