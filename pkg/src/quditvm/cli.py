"""Command-line entry point: ``quditvm <subcommand> ...``.

Exit codes: 0 success or relation holds, 1 refuted or failed, 2 search
incomplete, 3 usage error.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

EXIT_OK, EXIT_REFUTED, EXIT_INCOMPLETE, EXIT_USAGE = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# -- helpers ------------------------------------------------------------------


def _read(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise UsageError(f"cannot read {path}: {e.strerror}") from None


def _library(args):
    from .gates import load_library

    return load_library([_read(p) for p in args.prelude or ()])


def _definitions(path: str, name: str | None = None):
    """Named expression matrices from a QGL file, optionally just one."""
    from .qgl import load_qgl_file

    defs = load_qgl_file(_read(path))
    if name is None:
        return defs
    if name not in defs:
        raise UsageError(f"{path} defines no unitary named {name!r}; found {sorted(defs)}")
    return {name: defs[name]}


def _operand(spec: str, args):
    """``file.qgl``, ``file.qgl:Name`` or a library gate name."""
    path, _, name = spec.partition(":") if not os.path.exists(spec) else (spec, "", "")
    if os.path.exists(path):
        defs = _definitions(path, name or None)
        return next(iter(defs.values()))
    lib = _library(args)
    if spec in lib:
        return lib[spec]
    raise UsageError(f"{spec!r} is neither a readable QGL file nor a library gate")


def _limits(args):
    from .esat import DEFAULT_LIMITS, SaturationLimits

    return SaturationLimits(
        max_iterations=args.max_iterations or DEFAULT_LIMITS.max_iterations,
        max_nodes=args.max_nodes or DEFAULT_LIMITS.max_nodes,
        time_limit=args.time_limit or DEFAULT_LIMITS.time_limit,
    )


def _rules(args):
    from .esat import load_rules

    return load_rules(args.rules) if args.rules else None


def _load_circuit(path: str, args):
    from .qcir import loads

    return loads(_read(path), _library(args))


def _parse_params(text: str) -> list[float]:
    if os.path.exists(text):
        text = _read(text)
    fields = [f for f in text.replace(",", " ").split() if f]
    try:
        return [float(f) for f in fields]
    except ValueError as e:
        raise UsageError(f"bad parameter list: {e}") from None


def _matrix_json(m: np.ndarray) -> list:
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def _emit(obj) -> None:
    print(json.dumps(obj))


# -- subcommands --------------------------------------------------------------


def cmd_parse(args) -> int:
    from .qgl import format_unitary, lower_to_symbolic, parse_file, to_qgl

    for d in parse_file(_read(args.file)):
        if args.dump_ast:
            print(format_unitary(d))
        elif args.dump_matrix:
            print(to_qgl(lower_to_symbolic(d), d.name))
        else:
            u = lower_to_symbolic(d)
            print(f"{d.name} radices={list(u.radices)} params={list(u.params)} dim={u.dim}")
    return EXIT_OK


def cmd_simplify(args) -> int:
    from .esat import cost_of, simplify_matrices
    from .qgl import to_qgl

    limits, rules = _limits(args), _rules(args)
    for name, u in _definitions(args.file, args.name).items():
        (s,), rep = simplify_matrices([u], rules, limits)
        before = sum(cost_of(e) for e in u.roots())
        after = sum(cost_of(e) for e in s.roots())
        print(to_qgl(s, name))
        print(f"# {name}: cost {before:g} -> {after:g}, stop={rep.stop_reason} "
              f"iterations={rep.iterations} nodes={rep.nodes}", file=sys.stderr)
    return EXIT_OK


def cmd_diff(args) -> int:
    from .esat import simplify_matrices
    from .qgl import to_qgl
    from .symbolic import differentiate

    for name, u in _definitions(args.file, args.name).items():
        grads = differentiate(u)
        if not args.no_simplify and grads:
            grads, _ = simplify_matrices(grads, _rules(args), _limits(args))
        for p, g in zip(u.params, grads):
            print(to_qgl(g, f"d{name}_d{p}"))
    return EXIT_OK


def cmd_check(args) -> int:
    from .congruence import (
        CongruenceSearchConfig, check_equal, check_phase_congruent, find_congruence, numeric_phase_congruent,
    )
    from .congruence import _numeric_max_diff, _sample_points

    a, b = _operand(args.a, args), _operand(args.b, args)
    if a.radices != b.radices:
        print("refuted: dimensions differ")
        return EXIT_REFUTED
    limits, rules = _limits(args), _rules(args)
    if args.mode in ("equal", "phase") and a.num_params != b.num_params:
        print("refuted: parameter counts differ")
        return EXIT_REFUTED
    if args.mode == "equal":
        if check_equal(a, b, rules=rules, limits=limits):
            print("equal")
            return EXIT_OK
        pts = _sample_points(a.num_params, 8, 1)
        if _numeric_max_diff(a, b, pts) > 1e-7:
            print("refuted")
            return EXIT_REFUTED
        print("incomplete: numerically equal but not proven")
        return EXIT_INCOMPLETE
    if args.mode == "phase":
        res = check_phase_congruent(a, b, rules=rules, limits=limits)
        if res is not None:
            print(f"phase := {res.phase}")
            return EXIT_OK
        if not numeric_phase_congruent(a, b, _sample_points(a.num_params, 8, 1), 1e-7):
            print("refuted")
            return EXIT_REFUTED
        print("incomplete: numerically congruent but no phase proven")
        return EXIT_INCOMPLETE
    cfg = CongruenceSearchConfig(budget=args.budget, limits=limits)
    res = find_congruence(a, b, cfg, rules)
    if res.found:
        for p, m in zip(b.params, res.witness.mappings):
            print(f"{p} := {m}")
        print(f"phase := {res.witness.phase}")
        return EXIT_OK
    print(f"{res.status} after {res.tried} candidates")
    return EXIT_INCOMPLETE if res.status == "incomplete" else EXIT_REFUTED


def cmd_circuit(args) -> int:
    from .qcir import dumps, gen_brickwall, gen_qft

    if args.kind == "qft":
        if len(args.args) != 1:
            raise UsageError("usage: circuit qft N")
        c = gen_qft(_int(args.args[0]))
    else:
        if len(args.args) != 2 or args.args[0] not in ("thin", "thick"):
            raise UsageError("usage: circuit brickwall {thin|thick} N")
        c = gen_brickwall(args.args[0], _int(args.args[1]))
    text = dumps(c, _library(args))
    if args.output:
        Path(args.output).write_text(text + "\n", encoding="utf-8")
    else:
        print(text)
    return EXIT_OK


def _int(s: str) -> int:
    try:
        return int(s)
    except ValueError:
        raise UsageError(f"expected an integer, got {s!r}") from None


def _compile(args, c):
    from .qvmc import compile_circuit

    return compile_circuit(
        c, fuse=not args.no_fuse, sectioning=not args.no_sectioning,
        precision=args.precision, backend=args.backend,
    )


def cmd_compile(args) -> int:
    from .qvmc import Frpr, KronOp, MatMulOp, Write, format_tree, tree_cost

    c = _load_circuit(args.circuit, args)
    prog = _compile(args, c)
    if args.dump_tree:
        print(format_tree(prog.tree))
    if args.dump_bytecode:
        print(prog.bytecode)
    bc = prog.bytecode
    summary = {
        "qudits": c.num_qudits, "params": prog.num_params, "kernels": len(prog.module),
        "buffers": len(bc.buffers), "static": len(bc.static), "dynamic": len(bc.dynamic),
        "write": bc.count(Write), "frpr": bc.count(Frpr), "matmul": bc.count(MatMulOp),
        "kron": bc.count(KronOp), "flops": tree_cost(prog.tree),
    }
    print(json.dumps(summary), file=sys.stderr if (args.dump_tree or args.dump_bytecode) else sys.stdout)
    return EXIT_OK


def cmd_eval(args) -> int:
    from .bench import time_call
    from .qvm import QVM

    c = _load_circuit(args.circuit, args)
    p = _parse_params(args.params) if args.params is not None else []
    if len(p) != c.num_params:
        raise UsageError(f"circuit has {c.num_params} parameters, got {len(p)}")
    vm = QVM(_compile(args, c), gradients=args.grad)
    vm.warmup()
    run = vm.run_unitary_and_grad if args.grad else vm.run_unitary
    if args.bench:
        mean = time_call(lambda: run(p), args.repeat)
        _emit({"circuit": args.circuit, "grad": args.grad, "precision": args.precision,
               "repeat": args.repeat, "mean_ns": mean * 1e9})
        return EXIT_OK
    for _ in range(max(0, args.repeat - 1)):
        run(p)
    out = run(p)
    if args.grad:
        u, grads = out
        _emit({"unitary": _matrix_json(u), "gradients": [_matrix_json(g) for g in grads]})
    else:
        _emit(_matrix_json(out))
    if vm.domain_error:
        print("domain error: some kernel produced NaN", file=sys.stderr)
        return EXIT_REFUTED
    return EXIT_OK


def cmd_kernels(args) -> int:
    from .bench import time_call
    from .kernels import ExpressionModule, format_program

    module = ExpressionModule(precision=args.precision, backend=args.backend, simplify=not args.no_simplify)
    for name, u in _definitions(args.file, args.name).items():
        kid = module.add(u)
        entry = module[kid]
        if args.action == "dump":
            print(f"; {name} unitary")
            print(format_program(entry.unitary))
            if args.grad:
                for p, g in zip(u.params, entry.gradients):
                    print(f"; {name} d/d{p}")
                    print(format_program(g))
            continue
        buf = module.new_unitary_buffer(kid)
        view = buf.reshape(-1).view(module.float_dtype)
        gbufs = [np.zeros(entry.dim**2, dtype=module.dtype).view(module.float_dtype) for _ in entry.gradients]
        p = list(np.random.default_rng(0).uniform(-math.pi, math.pi, entry.num_params))

        def grads():
            for k, v in enumerate(gbufs):
                entry.write_grad(k, p, v)

        _emit({
            "gate": name, "backend": args.backend, "precision": args.precision, "iters": args.iters,
            "unitary_ns": time_call(lambda: entry.write(p, view), args.iters) * 1e9,
            "gradient_ns": time_call(grads, args.iters) * 1e9 if gbufs else 0.0,
        })
    return EXIT_OK


def cmd_bench(args) -> int:
    from .bench import QFT_SIZES, bench_circuit, bench_expr, bench_qft_build

    if args.suite == "expr":
        rows = bench_expr(args.iters, args.precision, args.backend)
    elif args.suite == "circuit":
        rows = bench_circuit(args.iters, args.precision, tuple(args.sizes or (3, 4, 5)))
    else:
        rows = bench_qft_build(tuple(args.sizes or QFT_SIZES))
    for r in rows:
        _emit(r)
        sys.stdout.flush()
    return EXIT_OK


# -- argument parsing ---------------------------------------------------------


def _add_limits(p) -> None:
    p.add_argument("--rules", help="rewrite rule file replacing the built-in rules")
    p.add_argument("--max-iterations", type=int)
    p.add_argument("--max-nodes", type=int)
    p.add_argument("--time-limit", type=float, help="saturation time limit in seconds")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="quditvm", description="Qudit gate expression compiler and circuit VM.")
    ap.add_argument("--prelude", action="append", metavar="FILE", help="extra QGL gate library (repeatable)")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("parse", help="parse a QGL file")
    p.add_argument("file")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--dump-ast", action="store_true")
    g.add_argument("--dump-matrix", action="store_true")
    p.set_defaults(func=cmd_parse)

    p = sub.add_parser("simplify", help="simplify unitary expressions by equality saturation")
    p.add_argument("file")
    p.add_argument("--name")
    _add_limits(p)
    p.set_defaults(func=cmd_simplify)

    p = sub.add_parser("diff", help="symbolic partial derivatives")
    p.add_argument("file")
    p.add_argument("--name")
    p.add_argument("--no-simplify", action="store_true")
    _add_limits(p)
    p.set_defaults(func=cmd_diff)

    p = sub.add_parser("check", help="equality, phase congruence or parameter-mapping congruence")
    p.add_argument("--mode", choices=("equal", "phase", "congruent"), required=True)
    p.add_argument("a", help="QGL file, file.qgl:Name, or library gate name")
    p.add_argument("b")
    p.add_argument("--budget", type=float, default=10.0, help="congruence search budget in seconds")
    _add_limits(p)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("circuit", help="generate benchmark circuits as JSON")
    p.add_argument("kind", choices=("qft", "brickwall"))
    p.add_argument("args", nargs="+")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_circuit)

    def common_compile(p):
        p.add_argument("circuit")
        p.add_argument("--no-fuse", action="store_true")
        p.add_argument("--no-sectioning", action="store_true")
        p.add_argument("--precision", type=int, choices=(32, 64), default=64)
        p.add_argument("--backend", choices=("codegen", "interp"), default="codegen")

    p = sub.add_parser("compile", help="compile a circuit to VM bytecode")
    common_compile(p)
    p.add_argument("--dump-tree", action="store_true")
    p.add_argument("--dump-bytecode", action="store_true")
    p.set_defaults(func=cmd_compile)

    p = sub.add_parser("eval", help="evaluate a circuit unitary (and gradients)")
    common_compile(p)
    p.add_argument("--params", help="comma/space separated values, or a file containing them")
    p.add_argument("--grad", action="store_true")
    p.add_argument("--repeat", type=int, default=1)
    p.add_argument("--bench", action="store_true", help="print mean ns per evaluation instead of the matrix")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("kernels", help="inspect or time compiled gate kernels")
    p.add_argument("action", choices=("dump", "bench"))
    p.add_argument("file")
    p.add_argument("--name")
    p.add_argument("--grad", action="store_true", help="also dump gradient programs")
    p.add_argument("--iters", type=int, default=1000)
    p.add_argument("--precision", type=int, choices=(32, 64), default=64)
    p.add_argument("--backend", choices=("codegen", "interp"), default="codegen")
    p.add_argument("--no-simplify", action="store_true")
    p.set_defaults(func=cmd_kernels)

    p = sub.add_parser("bench", help="benchmark suites, one JSON object per line")
    p.add_argument("suite", choices=("expr", "circuit", "qft-build"))
    p.add_argument("--iters", type=int, default=1000)
    p.add_argument("--precision", type=int, choices=(32, 64), default=64)
    p.add_argument("--backend", choices=("codegen", "interp"), default="codegen")
    p.add_argument("--sizes", type=int, nargs="+")
    p.set_defaults(func=cmd_bench)
    return ap


def main(argv=None) -> int:
    from .qcir import CircuitError
    from .qgl import ParseError

    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:  # usage errors and --help
        return e.code if isinstance(e.code, int) else EXIT_USAGE
    try:
        return args.func(args)
    except UsageError as e:
        print(f"quditvm: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (ParseError, CircuitError, ValueError, KeyError) as e:
        print(f"quditvm: {e}", file=sys.stderr)
        return EXIT_REFUTED


if __name__ == "__main__":
    sys.exit(main())
