"""Command-line interface: ``psslab <command> ...``.

Exit codes: 0 success, 1 checked and false, 2 bad input, 3 budget exceeded.
Machine output goes to stdout, diagnostics to stderr.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from . import budget
from .export import dumps, emit_dot, emit_matrix
from .field import FieldError, format_state, parse_state
from .formats import FormatError, emit_pss_file, format_fraction, load_hom, load_pss, parse_probs_file
from .functor import FunctorError, compare_complements, decompose, functor_arrow, functor_object
from .model import (
    ModelError,
    complement,
    count_update_functions,
    duplicate_groups,
    full_enumeration,
    validate_pss,
)
from .morphism import (
    MorphismError,
    SearchLimits,
    check_pss_hom,
    epsilon_table,
    hom_search,
    image_pss,
    is_simulation,
    mt_power_diff,
)
from .statespace import (
    build_state_space,
    matrix_power,
    recurrent_classes,
    sample_trajectory,
    stationary,
    transition_matrix,
)

OK, FALSE, BAD_INPUT, OVER_BUDGET = 0, 1, 2, 3


class _Usage(Exception):
    pass


def _out(text: str) -> None:
    sys.stdout.write(text)


def _err(text: str) -> None:
    sys.stderr.write(text.rstrip("\n") + "\n")


def _states(states, p):
    return [format_state(x, p) for x in sorted(states)]


# -- PSS commands ------------------------------------------------------------


def cmd_validate(args) -> int:
    pss = load_pss(args.pss, validate=False)
    report = validate_pss(pss)
    if not report.ok:
        for v in report.violations:
            _err(str(v))
        return BAD_INPUT
    _out(
        dumps(
            {
                "name": pss.name,
                "p": pss.p,
                "vertices": pss.n,
                "update_functions": len(pss.functions),
                "support": [f.label for f in pss.support],
                "valid": True,
            }
        )
    )
    return OK


def cmd_functions(args) -> int:
    pss = load_pss(args.pss)
    full = full_enumeration(pss)
    declared = {f.key for f in pss.functions}
    rows = []
    for f in pss.functions:
        rows.append(
            {
                "label": f.label,
                "schedule": f.schedule.label,
                "selection": list(f.selection_labels),
                "prob": format_fraction(pss.prob(f.label)),
            }
        )
    _out(
        dumps(
            {
                "declared": len(pss.functions),
                "possible": count_update_functions(pss.families, pss.schedules),
                "undeclared": [f.label for f in full if f.key not in declared],
                "functions": rows,
                "duplicates": duplicate_groups(pss),
            }
        )
    )
    return OK


def cmd_statespace(args) -> int:
    pss = load_pss(args.pss)
    text = emit_dot(build_state_space(pss), show_labels=args.labels, name=pss.name)
    if args.dot in (None, "-"):
        _out(text)
    else:
        Path(args.dot).write_text(text)
    return OK


def cmd_matrix(args) -> int:
    _out(emit_matrix(transition_matrix(load_pss(args.pss)), args.format))
    return OK


def cmd_power(args) -> int:
    if args.m < 1:
        raise _Usage("--m must be at least 1")
    P = matrix_power(transition_matrix(load_pss(args.pss)), args.m)
    _out("".join(",".join(repr(float(x)) for x in row) + "\n" for row in P))
    return OK


def cmd_stationary(args) -> int:
    T = transition_matrix(load_pss(args.pss))
    res = stationary(T, tol=args.tol)
    _out(
        dumps(
            {
                "states": T.state_labels(),
                "pi": [float(x) for x in res.pi],
                "converged": res.converged,
                "iterations": res.iterations,
                "residual": res.residual,
            }
        )
    )
    if not res.converged:
        _err(f"not converged after {res.iterations} iterations (residual {res.residual:.3g})")
        return FALSE
    return OK


def cmd_classes(args) -> int:
    pss = load_pss(args.pss)
    rc = recurrent_classes(build_state_space(pss))
    _out(dumps({"recurrent": [_states(c, pss.p) for c in rc.recurrent], "transient": _states(rc.transient, pss.p)}))
    return OK


def cmd_sample(args) -> int:
    pss = load_pss(args.pss)
    start = parse_state(args.start, pss.n, pss.p)
    traj = sample_trajectory(pss, start, args.steps, args.seed)
    lines = [f"0\t-\t{format_state(traj.start, pss.p)}\n"]
    for t, (label, x) in enumerate(traj.steps, start=1):
        lines.append(f"{t}\t{label}\t{format_state(x, pss.p)}\n")
    _out("".join(lines))
    return OK


def cmd_complement(args) -> int:
    pss = load_pss(args.pss)
    comp = complement(pss, parse_probs_file(Path(args.probs).read_text(), args.probs))
    if args.compare:
        other = complement(pss, parse_probs_file(Path(args.compare).read_text(), args.compare))
        report = compare_complements(comp, other)
        _out(dumps(report.to_json()))
        return OK if report.valid else FALSE
    _out(emit_pss_file(comp))
    return OK


# -- homomorphism commands ---------------------------------------------------


def _checked(args):
    _, cand = load_hom(args.hom)
    return check_pss_hom(cand, orderings=args.orderings)


def _report_failures(report) -> None:
    for fl in report.failures:
        where = f" ({fl.f} -> {fl.g})" if fl.f else ""
        states = [format_state(x, report.candidate.source.p) for x in fl.counterexamples]
        tail = f"; counterexamples: {' '.join(states)}" if states else ""
        _err(f"{fl.kind}{where}: {fl.message}{tail}")


def cmd_hom_check(args) -> int:
    report = _checked(args)
    _out(dumps(report.to_json()))
    if not report.valid:
        _report_failures(report)
        return FALSE
    return OK


def _need_valid(report) -> int | None:
    if report.valid:
        return None
    _report_failures(report)
    _err("candidate is not a homomorphism")
    return FALSE


def cmd_hom_epsilon(args) -> int:
    report = _checked(args)
    if (code := _need_valid(report)) is not None:
        return code
    rows = [{"f": f, "g": g, "gap": str(gap)} for f, g, gap in epsilon_table(report)]
    _out(dumps({"epsilon_min": str(report.epsilon_min), "pairs": rows}))
    return OK


def cmd_hom_classify(args) -> int:
    report = _checked(args)
    if (code := _need_valid(report)) is not None:
        return code
    _out(dumps({"class": report.classes}))
    return OK


def cmd_hom_image(args) -> int:
    report = _checked(args)
    if (code := _need_valid(report)) is not None:
        return code
    _out(emit_pss_file(image_pss(report)))
    return OK


def _limits(args) -> SearchLimits:
    limits = SearchLimits.default()
    changes = {k: getattr(args, k) for k in ("max_vertices", "max_p", "max_pairs", "max_candidates")}
    return replace(limits, **{k: v for k, v in changes.items() if v is not None})


def cmd_hom_search(args) -> int:
    d1, d2 = load_pss(args.pss1), load_pss(args.pss2)
    found = hom_search(d1, d2, _limits(args), args.orderings, want=args.want)
    _out(dumps({"count": len(found), "homomorphisms": [r.to_json() for r in found]}))
    return OK


def cmd_hom_mtdiff(args) -> int:
    report = _checked(args)
    if (code := _need_valid(report)) is not None:
        return code
    diff = mt_power_diff(report, args.m)
    _out(dumps({"d": diff.d, "k": diff.k}))
    return OK


def cmd_simulate(args) -> int:
    F, G = load_pss(args.pss1), load_pss(args.pss2)
    res = is_simulation(F, G, _limits(args), args.orderings)
    _out(
        dumps(
            {
                "result": res.result,
                "monomorphism": res.monomorphism.to_json() if res.monomorphism else None,
                "epimorphism": res.epimorphism.to_json() if res.epimorphism else None,
                "notes": list(res.notes),
            }
        )
    )
    for note in res.notes:
        _err(note)
    if res.result == "unknown":
        return OVER_BUDGET
    return OK if res.result else FALSE


def cmd_functor(args) -> int:
    report = _checked(args)
    if (code := _need_valid(report)) is not None:
        return code
    H = functor_arrow(report)
    src, tgt = report.candidate.source, report.candidate.target

    def obj(pss, basis):
        dec = decompose(pss)
        return {
            "name": pss.name,
            "modulus": basis.p,
            "rank": basis.rank,
            "basis": list(basis.labels),
            "complement_basis": list(dec.rest.labels),
            "full_rank": dec.full.rank,
        }

    _out(
        dumps(
            {
                "source": obj(src, functor_object(src)),
                "target": obj(tgt, functor_object(tgt)),
                "basis_map": dict(H.basis_map),
                "matrix": H.matrix(),
            }
        )
    )
    return OK


# -- parser ------------------------------------------------------------------


def _search_opts(p: argparse.ArgumentParser) -> None:
    p.add_argument("--max-vertices", type=int)
    p.add_argument("--max-p", type=int)
    p.add_argument("--max-pairs", type=int)
    p.add_argument("--max-candidates", type=int)


def _orderings(p: argparse.ArgumentParser) -> None:
    p.add_argument(
        "--orderings",
        choices=("schedule", "any"),
        default="schedule",
        help="order of the preimage composite in step squares",
    )


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="psslab", description="Probabilistic sequential systems toolkit.")
    sub = ap.add_subparsers(dest="command", required=True)

    def pss_cmd(name, func, help):
        p = sub.add_parser(name, help=help)
        p.add_argument("pss")
        p.set_defaults(func=func)
        return p

    pss_cmd("validate", cmd_validate, "check a PSS file")
    pss_cmd("functions", cmd_functions, "list update functions and duplicates")
    p = pss_cmd("statespace", cmd_statespace, "state space as Graphviz DOT")
    p.add_argument("--dot", help="output file (default stdout)")
    p.add_argument("--labels", action="store_true", help="add function labels to edges")
    p = pss_cmd("matrix", cmd_matrix, "exact transition matrix")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p = pss_cmd("power", cmd_power, "float matrix power T^m")
    p.add_argument("--m", type=int, required=True)
    p = pss_cmd("stationary", cmd_stationary, "long-run distribution from the uniform start")
    p.add_argument("--tol", type=float, default=1e-9)
    pss_cmd("classes", cmd_classes, "recurrent classes and transient states")
    p = pss_cmd("sample", cmd_sample, "seeded trajectory")
    p.add_argument("--start", required=True)
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p = pss_cmd("complement", cmd_complement, "complement system on the unselected functions")
    p.add_argument("--probs", required=True, help="probabilities for the complement functions")
    p.add_argument("--compare", help="second probability file; report epsilon between the two complements")

    hom = sub.add_parser("hom", help="homomorphism tools").add_subparsers(dest="hom_command", required=True)
    for name, func, help in (
        ("check", cmd_hom_check, "verify a candidate"),
        ("epsilon", cmd_hom_epsilon, "per-pair probability gaps"),
        ("classify", cmd_hom_classify, "class flags"),
        ("image", cmd_hom_image, "image PSS on the paired target functions"),
        ("mtdiff", cmd_hom_mtdiff, "matrix-power gap diagnostic"),
    ):
        p = hom.add_parser(name, help=help)
        p.add_argument("hom")
        _orderings(p)
        p.set_defaults(func=func)
        if name == "mtdiff":
            p.add_argument("--m", type=int, required=True)
    p = hom.add_parser("search", help="enumerate homomorphisms")
    p.add_argument("pss1")
    p.add_argument("pss2")
    p.add_argument("--want", help="keep only this class flag")
    _search_opts(p)
    _orderings(p)
    p.set_defaults(func=cmd_hom_search)

    p = sub.add_parser("simulate-check", help="is the second system simulated by the first?")
    p.add_argument("pss1")
    p.add_argument("pss2")
    _search_opts(p)
    _orderings(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("functor", help="free Z_p-modules and the induced map of a homomorphism")
    p.add_argument("hom")
    _orderings(p)
    p.set_defaults(func=cmd_functor)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except budget.BudgetExceeded as exc:
        _err(f"budget exceeded: {exc} (raise PSSLAB_BUDGET to allow more)")
        return OVER_BUDGET
    except (FormatError, ModelError, MorphismError, FunctorError, FieldError, _Usage, ValueError) as exc:
        _err(f"error: {exc}")
        return BAD_INPUT
    except OSError as exc:
        _err(f"error: {exc}")
        return BAD_INPUT


if __name__ == "__main__":
    sys.exit(main())
