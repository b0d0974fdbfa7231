"""Command-line pipeline: one verb per stage, file handoff between stages.

Exit codes: 0 success, 2 usage, 3 failed verdict (not lumpable / not
symmetric), 4 document parse error, 5 validation or analysis error,
6 state-space cap exceeded.
"""

from __future__ import annotations

import argparse
import sys
from typing import List, Optional

from . import analysis, chain as chainmod, lumping, sim, symmetry
from .errors import (AnalysisError, CapExceededError, DocumentParseError,
                     NotLumpableError, ValidationError)
from .model import load_model
from .space import ConfigSpace, default_cap

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_VERDICT = 3
EXIT_PARSE = 4
EXIT_VALIDATION = 5
EXIT_CAP = 6


def _cap(args) -> Optional[int]:
    return args.cap if getattr(args, "cap", None) is not None else default_cap()


def _out(args):
    if getattr(args, "output", None):
        return open(args.output, "w", encoding="utf-8")
    return sys.stdout


def _write(args, text: str) -> None:
    fh = _out(args)
    try:
        fh.write(text)
        if not text.endswith("\n"):
            fh.write("\n")
    finally:
        if fh is not sys.stdout:
            fh.close()


def cmd_compile(args) -> int:
    spec = load_model(args.model)
    mc = chainmod.build_micro_chain(spec, cap=_cap(args))
    fh = _out(args)
    try:
        chainmod.write_sparse(mc.rows, fh)
    finally:
        if fh is not sys.stdout:
            fh.close()
    print(f"states={mc.n_states} nnz={mc.nnz()}", file=sys.stderr)
    return EXIT_OK


def cmd_maps(args) -> int:
    spec = load_model(args.model)
    maps = chainmod.enumerate_maps(spec)
    lines = []
    space = None
    if args.table:
        space = ConfigSpace(spec.n_agents, spec.delta,
                            labels=spec.alphabet.symbols, cap=_cap(args))
    for z, m in enumerate(maps, start=1):
        agents = ",".join(str(a + 1) for a in m.agents)
        head = (f"z={z} agents=({agents}) option={m.option_label} "
                f"p={m.probability.numerator}/{m.probability.denominator}")
        if space is not None:
            action = " ".join(str(t) for t in m.materialize(space))
            head += f" action: {action}"
        lines.append(head)
    _write(args, "\n".join(lines))
    return EXIT_OK


def _generators(args, spec):
    n, delta = spec.n_agents, spec.delta
    if args.gens_file:
        with open(args.gens_file, "r", encoding="utf-8") as fh:
            return symmetry.parse_generator_file(fh.read(), n, delta)
    return symmetry.parse_presets(args.gens, n, delta)


def cmd_orbits(args) -> int:
    spec = load_model(args.model)
    gens = _generators(args, spec)
    space = ConfigSpace(spec.n_agents, spec.delta,
                        labels=spec.alphabet.symbols, cap=_cap(args))
    part = symmetry.orbits(space, gens)
    fh = _out(args)
    try:
        lumping.write_partition(part, fh)
    finally:
        if fh is not sys.stdout:
            fh.close()
    print(f"blocks={part.n_blocks}", file=sys.stderr)
    return EXIT_OK


def cmd_check_sym(args) -> int:
    spec = load_model(args.model)
    gens = _generators(args, spec)
    mc = chainmod.build_micro_chain(spec, cap=_cap(args))
    verdict = symmetry.is_chain_symmetric(mc, gens)
    if verdict:
        print(f"symmetric under {gens.name}")
        return EXIT_OK
    w = verdict.witness
    print(f"not symmetric under {gens.name}")
    print(f"witness: {w}")
    print(f"  states: {mc.space.format_index(w.x)} -> {mc.space.format_index(w.y)}")
    return EXIT_VERDICT


def cmd_check_lump(args) -> int:
    imported = chainmod.load_chain(args.chain)
    part = lumping.load_partition(args.partition)
    verdict = lumping.check_lumpable(imported, part, tol=args.tol,
                                     exhaustive=args.exhaustive)
    if verdict:
        print(f"lumpable: {part.n_blocks} blocks")
        return EXIT_OK
    print("not lumpable")
    for v in verdict.violations:
        print(f"witness: {v}")
    return EXIT_VERDICT


def cmd_lump(args) -> int:
    imported = chainmod.load_chain(args.chain)
    part = lumping.load_partition(args.partition)
    try:
        macro = lumping.lump(imported, part, tol=args.tol)
    except NotLumpableError as exc:
        print("not lumpable")
        print(f"witness: {exc.witness}")
        return EXIT_VERDICT
    fh = _out(args)
    try:
        chainmod.write_sparse(macro.rows, fh)
    finally:
        if fh is not sys.stdout:
            fh.close()
    for k, label in enumerate(part.labels):
        print(f"block {k} {label} size={len(part.blocks[k])}", file=sys.stderr)
    return EXIT_OK


def cmd_analyze(args) -> int:
    imported = chainmod.load_chain(args.chain)
    cls = analysis.classify_states(imported)
    report = analysis.absorption_analysis(imported)
    if args.format == "kv":
        text = analysis.absorption_kv(report)
    else:
        classes = " ".join("{" + " ".join(map(str, c)) + "}"
                           for c in cls.recurrent_classes)
        text = f"recurrent classes: {classes}\n" + analysis.absorption_text(report)
    _write(args, text)
    return EXIT_OK


def cmd_propagate(args) -> int:
    imported = chainmod.load_chain(args.chain)
    if args.start is not None:
        mu = analysis.point_mass(imported.n_states, args.start)
    else:
        with open(args.mu0, "r", encoding="utf-8") as fh:
            mu = analysis.read_distribution(fh.read(), imported.n_states)
    mu = analysis.propagate(imported, mu, args.steps)
    fh = _out(args)
    try:
        analysis.write_distribution(mu, fh)
    finally:
        if fh is not sys.stdout:
            fh.close()
    return EXIT_OK


def _parse_start(raw: str, space: ConfigSpace):
    if raw.isdigit():
        return space.config_of(int(raw))
    labels = [tok.strip() for tok in raw.strip("()").split(",")]
    try:
        return tuple(space.labels.index(lab) for lab in labels)
    except ValueError:
        raise ValidationError(f"bad start configuration {raw!r}")


def cmd_simulate(args) -> int:
    spec = load_model(args.model)
    space = ConfigSpace(spec.n_agents, spec.delta,
                        labels=spec.alphabet.symbols, cap=_cap(args))
    start = _parse_start(args.start, space)
    run = sim.simulate(spec, start, args.steps, args.seed, cap=_cap(args))
    part = lumping.load_partition(args.partition) if args.partition else None
    fh = _out(args)
    try:
        sim.write_trajectory(run, space, fh, part)
    finally:
        if fh is not sys.stdout:
            fh.close()
    return EXIT_OK


def cmd_estimate(args) -> int:
    spec = load_model(args.model)
    report, _ = sim.estimate_matrix(spec, args.samples, args.seed, cap=_cap(args))
    _write(args, sim.estimate_text(report))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="microlump",
        description="exact chains for sequential agent models: compile, "
                    "reduce, analyze, simulate")
    sub = parser.add_subparsers(dest="verb", required=True)

    def add(name, fn, help_):
        p = sub.add_parser(name, help=help_)
        p.set_defaults(fn=fn)
        return p

    p = add("compile", cmd_compile, "build the exact transition matrix of a model")
    p.add_argument("model")
    p.add_argument("-o", "--output")
    p.add_argument("--cap", type=int)

    p = add("maps", cmd_maps, "list the deterministic maps the model draws from")
    p.add_argument("model")
    p.add_argument("-o", "--output")
    p.add_argument("--table", action="store_true",
                   help="materialize each map's full action (cap-guarded)")
    p.add_argument("--cap", type=int)

    p = add("orbits", cmd_orbits, "orbit partition of a generator set")
    p.add_argument("model")
    p.add_argument("--gens", default="SN")
    p.add_argument("--gens-file")
    p.add_argument("-o", "--output")
    p.add_argument("--cap", type=int)

    p = add("check-sym", cmd_check_sym, "test generators as chain symmetries")
    p.add_argument("model")
    p.add_argument("--gens", default="SN")
    p.add_argument("--gens-file")
    p.add_argument("--cap", type=int)

    p = add("check-lump", cmd_check_lump, "block-sum lumpability test")
    p.add_argument("chain")
    p.add_argument("partition")
    p.add_argument("--tol", type=float, nargs="?", const=1e-12, default=None,
                   help="absolute tolerance for imported float chains "
                        "(bare flag means 1e-12)")
    p.add_argument("--exhaustive", action="store_true",
                   help="report every violation, not just the first")

    p = add("lump", cmd_lump, "build the reduced chain over a partition")
    p.add_argument("chain")
    p.add_argument("partition")
    p.add_argument("-o", "--output")
    p.add_argument("--tol", type=float, nargs="?", const=1e-12, default=None)

    p = add("analyze", cmd_analyze, "state classification and absorption solve")
    p.add_argument("chain")
    p.add_argument("--format", choices=("text", "kv"), default="text")
    p.add_argument("-o", "--output")

    p = add("propagate", cmd_propagate, "push a distribution t steps, exactly")
    p.add_argument("chain")
    p.add_argument("-t", "--steps", type=int, required=True)
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--start", type=int, help="point mass on this state")
    group.add_argument("--mu0", help="distribution file, `index prob` lines")
    p.add_argument("-o", "--output")

    p = add("simulate", cmd_simulate, "sample one trajectory")
    p.add_argument("model")
    p.add_argument("--start", required=True,
                   help="state index or label tuple like (black,white,white)")
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--partition", help="project the trajectory onto blocks")
    p.add_argument("-o", "--output")
    p.add_argument("--cap", type=int)

    p = add("estimate", cmd_estimate, "empirical one-step frequencies vs the matrix")
    p.add_argument("model")
    p.add_argument("--samples", type=int, default=100000)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("-o", "--output")
    p.add_argument("--cap", type=int)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        return args.fn(args)
    except DocumentParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except CapExceededError as exc:
        print(f"cap exceeded: {exc}", file=sys.stderr)
        return EXIT_CAP
    except (ValidationError, AnalysisError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except NotLumpableError as exc:
        print(f"not lumpable: {exc.witness}", file=sys.stderr)
        return EXIT_VERDICT
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


def entry() -> None:
    sys.exit(main())
