"""Command-line surface for the knowledge-space engine.

One state file holds everything (network, space, concepts, lexicon, problems,
anomaly rules); its path comes from --state or the KSENGINE_STATE environment
variable. Mutating commands rewrite the file atomically. Exit codes: 0 on
success, 1 for usage problems, 2 for data errors, 3 when verification rejects
a candidate or an analogy finds no mapping.
"""

from __future__ import annotations

import argparse
import os
import sys
from typing import Dict, List, Optional, Sequence, Tuple

from .discovery import (
    ability_report,
    analogize,
    detect_co_occurrence,
    find_problem,
    find_solution,
    recommend,
    verify_knowledge,
)
from .concepts import read_text
from .errors import KsError, MalformedPattern
from .ksif import (
    export_space_fragment,
    export_state,
    fragment_to_increment,
    import_state,
    merge_lexicon_fragment,
    parse_anomaly_rules,
    parse_candidates,
)
from .rules import derive_fixpoint, explain
from .sln import parse_pattern
from .space import can_hold, join_spaces
from .state import EngineState, new_state


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        raise _UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="ksengine", description=__doc__)
    common = _Parser(add_help=False)
    common.add_argument("--state", help="state file path (or set KSENGINE_STATE)")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")

    p = sub.add_parser("import", parents=[common], help="replace the state from a KSIF file")
    p.add_argument("file")

    sub.add_parser("export", parents=[common], help="print the state as canonical KSIF")

    sub.add_parser("derive", parents=[common], help="run rules to the fixpoint")

    p = sub.add_parser("query", parents=[common], help="answer a one-hole pattern")
    p.add_argument("pattern", help='e.g. "(N_1, ?, N_2)" or "(?, L_4, N_5)"')

    p = sub.add_parser("explain", parents=[common], help="print a link's derivation tree")
    p.add_argument("link_id")

    p = sub.add_parser("place", parents=[common], help="place a resource at a point")
    p.add_argument("resource")
    p.add_argument("coords", nargs="+", metavar="DIM=CAT")
    p.add_argument("--replace", action="store_true", help="overwrite an existing placement")

    p = sub.add_parser("locate", parents=[common], help="find resources by coordinates")
    p.add_argument("coords", nargs="+", metavar="DIM=CAT")
    p.add_argument("--mode", choices=("exact", "subtree"), default="exact")

    sub.add_parser("nf-check", parents=[common], help="report normal-form violations")

    p = sub.add_parser("split", parents=[common],
                       help="split dimensions off into a printed fragment")
    p.add_argument("dims", help="comma-separated dimension ids or names")

    p = sub.add_parser("join", parents=[common], help="join a space fragment file in")
    p.add_argument("file")

    p = sub.add_parser("merge-dims", parents=[common], help="merge two dimensions into one")
    p.add_argument("dim1")
    p.add_argument("dim2")

    p = sub.add_parser("read", parents=[common], help="read text into the concept network")
    p.add_argument("text", help="whitespace-separated tokens")
    p.add_argument("--lexicon", help="KSIF fragment with CONCEPT/LEXEME records")
    p.add_argument("--goals", default="", help="comma-separated goal concept ids")
    p.add_argument("--radius", type=int, default=2)

    p = sub.add_parser("verify", parents=[common], help="verify candidate links and rules")
    p.add_argument("file", help="KSIF fragment with LINK/RULE candidate records")
    p.add_argument("--mode", choices=("literal", "consistency"), default="literal")
    p.add_argument("--exclusive", default="",
                   help="contradiction pairs for consistency mode, e.g. T1:T2,T3:T4")

    p = sub.add_parser("co-occur", parents=[common],
                       help="raise co-occurrence problems from an events file")
    p.add_argument("file", help="text file: one record id plus entities per line")
    p.add_argument("--min-support", type=int, default=2)

    p = sub.add_parser("find-problem", parents=[common],
                       help="evaluate anomaly rules over the stored links")
    p.add_argument("--rules", help="KSIF file with ANOMALYRULE records "
                                   "(default: rules stored in the state)")

    p = sub.add_parser("solve", parents=[common], help="find solution concepts for a problem")
    p.add_argument("problem_id")
    p.add_argument("--solution-types", default="",
                   help="comma-separated relation labels to follow")

    p = sub.add_parser("recommend", parents=[common],
                       help="rank stored problems with their solutions")
    p.add_argument("--solution-types", default="")

    p = sub.add_parser("analogy", parents=[common],
                       help="map a source network onto a target network")
    p.add_argument("--source", required=True, help="KSIF file for the solved domain")
    p.add_argument("--target", required=True, help="KSIF file for the new domain")
    p.add_argument("--solution-links", default="",
                   help="comma-separated link ids marking the source's solution")
    p.add_argument("--max-nodes", type=int, default=10)

    p = sub.add_parser("ability", parents=[common],
                       help="measure question answering across data increments")
    p.add_argument("--questions", required=True,
                   help="text file with one query pattern per line")
    p.add_argument("--increments", nargs="*", default=[],
                   help="KSIF network fragments, applied in order")

    p = sub.add_parser("capacity", parents=[common],
                       help="check whether n branches can hold an x-branch tree")
    p.add_argument("x", type=float)
    p.add_argument("n", type=int)

    return parser


# ===== state handling =====

def _state_path(args: argparse.Namespace) -> str:
    path = getattr(args, "state", None) or os.environ.get("KSENGINE_STATE")
    if not path:
        raise _UsageError("no state file: pass --state or set KSENGINE_STATE")
    return path


def _load_state(args: argparse.Namespace) -> Tuple[EngineState, str]:
    path = _state_path(args)
    if os.path.exists(path):
        with open(path, "r", encoding="utf-8") as handle:
            return import_state(handle.read()), path
    return new_state(), path


def _save_state(state: EngineState, path: str) -> None:
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8") as handle:
        handle.write(export_state(state))
    os.replace(tmp, path)


def _read_file(path: str) -> str:
    with open(path, "r", encoding="utf-8") as handle:
        return handle.read()


def _parse_coords(tokens: Sequence[str]) -> Dict[str, str]:
    point: Dict[str, str] = {}
    for token in tokens:
        dim, sep, cat = token.partition("=")
        if not sep or not dim or not cat:
            raise _UsageError(f"coordinate {token!r} must look like DIM=CAT")
        point[dim] = cat
    return point


def _split_csv(text: str) -> List[str]:
    return [piece for piece in text.split(",") if piece]


# ===== commands =====

def _cmd_import(args) -> int:
    path = _state_path(args)
    state = import_state(_read_file(args.file))
    _save_state(state, path)
    return 0


def _cmd_export(args) -> int:
    state, _path = _load_state(args)
    sys.stdout.write(export_state(state))
    return 0


def _cmd_derive(args) -> int:
    state, path = _load_state(args)
    new_links, _derivations = derive_fixpoint(state.network)
    _save_state(state, path)
    print(f"{len(new_links)} new links")
    for link in sorted(new_links, key=lambda l: l.id):
        print(f"{link.id}\t{link.source}\t{link.type}\t{link.target}\t{link.weight!r}")
    return 0


def _cmd_query(args) -> int:
    state, _path = _load_state(args)
    pattern = parse_pattern(args.pattern)
    try:
        bindings = state.network.answer_query(pattern)
    except KsError:
        return 0  # unknown constants bind nothing
    for binding in bindings:
        print(binding)
    return 0


def _print_explanation(node, depth: int = 0) -> None:
    indent = "  " * depth
    s, t, o = node.triple
    if node.kind == "explicit":
        print(f"{indent}{node.link_id} ({s}, {t}, {o}) explicit")
        return
    env = node.substitution or {}
    bound = " ".join(f"{k}={env[k]}" for k in sorted(env))
    print(f"{indent}{node.link_id} ({s}, {t}, {o}) by {node.rule_id} [{bound}]")
    for child in node.children:
        _print_explanation(child, depth + 1)


def _cmd_explain(args) -> int:
    state, _path = _load_state(args)
    tree = explain(state.network, args.link_id)
    _print_explanation(tree)
    return 0


def _cmd_place(args) -> int:
    state, path = _load_state(args)
    point_by_token = _parse_coords(args.coords)
    point = {
        state.space.resolve_dimension(token).id: cat
        for token, cat in point_by_token.items()
    }
    state.space.place(args.resource, point, replace=args.replace)
    _save_state(state, path)
    return 0


def _cmd_locate(args) -> int:
    state, _path = _load_state(args)
    spec_by_token = _parse_coords(args.coords)
    spec = {
        state.space.resolve_dimension(token).id: cat
        for token, cat in spec_by_token.items()
    }
    for resource in state.space.locate(spec, mode=args.mode):
        print(resource)
    return 0


def _cmd_nf_check(args) -> int:
    state, _path = _load_state(args)
    report = state.space.check_normal_forms()
    if report.clean:
        print("clean")
        return 0
    for dim, parent, name in report.duplicate_names:
        print(f"duplicate-name\t{dim}\t{parent}\t{name}")
    for di, dj in report.dependent_dimensions:
        print(f"dependent\t{di}\t{dj}")
    for dim in report.trivial_dimensions:
        print(f"trivial\t{dim}")
    return 0


def _cmd_split(args) -> int:
    state, path = _load_state(args)
    selected, rest = state.space.split(_split_csv(args.dims))
    state.space = rest
    _save_state(state, path)
    sys.stdout.write(export_space_fragment(selected))
    return 0


def _cmd_join(args) -> int:
    state, path = _load_state(args)
    other = import_state(_read_file(args.file)).space
    joined, warnings = join_spaces(state.space, other)
    state.space = joined
    _save_state(state, path)
    for warning in warnings:
        print(warning, file=sys.stderr)
    return 0


def _cmd_merge_dims(args) -> int:
    state, path = _load_state(args)
    merged = state.space.merge_dimensions(args.dim1, args.dim2)
    _save_state(state, path)
    print(merged)
    return 0


def _cmd_read(args) -> int:
    state, path = _load_state(args)
    if args.lexicon:
        merge_lexicon_fragment(state, _read_file(args.lexicon))
    tokens = args.text.split()
    trace = read_text(
        state.concepts, tokens, state.lexicon,
        goals=_split_csv(args.goals), radius=args.radius,
    )
    _save_state(state, path)
    s = trace.summary
    print(
        f"tokens={s.tokens} resolved={s.resolved} skipped={s.skipped} "
        f"relations={s.relations_created} cooccur={s.cooccurrence_updates}"
    )
    for event in trace.events:
        concept = event.concept or "-"
        print(f"{event.position}\t{event.token}\t{event.action}\t{concept}\t{event.detail}")
    return 0


def _cmd_verify(args) -> int:
    state, _path = _load_state(args)
    pairs = []
    for item in _split_csv(args.exclusive):
        first, sep, second = item.partition(":")
        if not sep or not first or not second:
            raise _UsageError(f"exclusive pair {item!r} must look like T1:T2")
        pairs.append((first, second))
    candidates = parse_candidates(_read_file(args.file))
    any_rejected = False
    for index, candidate in enumerate(candidates, start=1):
        verdict = verify_knowledge(
            state.network, candidate, mode=args.mode,
            concepts=state.concepts, exclusive_pairs=pairs,
        )
        status = "accepted" if verdict.accepted else "rejected"
        any_rejected = any_rejected or not verdict.accepted
        print(f"{index}\t{candidate.kind}\t{status}\t{verdict.reason or '-'}")
    return 3 if any_rejected else 0


def _cmd_co_occur(args) -> int:
    state, path = _load_state(args)
    events = []
    for raw in _read_file(args.file).split("\n"):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tokens = line.split()
        events.append((tokens[0], tokens[1:]))
    problems = detect_co_occurrence(events, args.min_support)
    for problem in problems:
        state.problems[problem.id] = problem
    _save_state(state, path)
    for problem in problems:
        print(f"{problem.id}\t{problem.statement}")
    return 0


def _cmd_find_problem(args) -> int:
    state, path = _load_state(args)
    if args.rules:
        rules = parse_anomaly_rules(_read_file(args.rules))
    else:
        rules = state.anomaly_rules
    links = [state.network.links[lid] for lid in sorted(state.network.links)]
    problems = find_problem(links, rules.values())
    for problem in problems:
        state.problems[problem.id] = problem
    _save_state(state, path)
    for problem in problems:
        print(f"{problem.id}\t{problem.kind}\t{problem.statement}")
    return 0


def _cmd_solve(args) -> int:
    state, _path = _load_state(args)
    problem = state.problems.get(args.problem_id)
    if problem is None:
        print(f"error: problem {args.problem_id!r} not found", file=sys.stderr)
        return 2
    for solution in find_solution(
        state.concepts, problem, _split_csv(args.solution_types)
    ):
        print(solution)
    return 0


def _cmd_recommend(args) -> int:
    state, _path = _load_state(args)
    types = _split_csv(args.solution_types)
    pairs = [
        (problem, find_solution(state.concepts, problem, types))
        for _pid, problem in sorted(state.problems.items())
    ]
    for rec in recommend(pairs):
        solutions = ",".join(rec.solutions) if rec.solutions else "-"
        flag = "unsolved" if rec.unsolved else "solved"
        print(f"{rec.problem_id}\t{flag}\t{solutions}")
    return 0


def _cmd_analogy(args) -> int:
    source = import_state(_read_file(args.source)).network
    target = import_state(_read_file(args.target)).network
    result = analogize(
        source, _split_csv(args.solution_links), target, max_nodes=args.max_nodes
    )
    print(f"outcome\t{result.outcome}")
    if result.node_map:
        for src in sorted(result.node_map):
            print(f"map\t{src}\t{result.node_map[src]}")
    for tid in sorted(result.generalization):
        print(f"lift\t{tid}\t{result.generalization[tid]}")
    for s, t, o in result.mapped_solution:
        print(f"solution\t{s}\t{t}\t{o}")
    for entry in result.problem_relations + result.solution_relations:
        s, t, o = entry.triple
        print(f"relation\t{entry.status}\t{s}\t{t}\t{o}")
    for s, t, o in result.impact:
        print(f"impact\t{s}\t{t}\t{o}")
    return 3 if result.outcome == "none" else 0


def _cmd_ability(args) -> int:
    state, _path = _load_state(args)
    questions = []
    for raw in _read_file(args.questions).split("\n"):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        questions.append(parse_pattern(line))
    increments = [fragment_to_increment(_read_file(f)) for f in args.increments]
    report = ability_report(
        state.copy().network, questions, increments, state.anomaly_rules.values()
    )
    for entry in report.entries:
        print(f"{entry.increment}\t{entry.answered}\t{entry.questions}\t{entry.problems}")
    return 0


def _cmd_capacity(args) -> int:
    print("true" if can_hold(args.x, args.n) else "false")
    return 0


_COMMANDS = {
    "import": _cmd_import,
    "export": _cmd_export,
    "derive": _cmd_derive,
    "query": _cmd_query,
    "explain": _cmd_explain,
    "place": _cmd_place,
    "locate": _cmd_locate,
    "nf-check": _cmd_nf_check,
    "split": _cmd_split,
    "join": _cmd_join,
    "merge-dims": _cmd_merge_dims,
    "read": _cmd_read,
    "verify": _cmd_verify,
    "co-occur": _cmd_co_occur,
    "find-problem": _cmd_find_problem,
    "solve": _cmd_solve,
    "recommend": _cmd_recommend,
    "analogy": _cmd_analogy,
    "ability": _cmd_ability,
    "capacity": _cmd_capacity,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    if args.command is None:
        parser.print_usage(sys.stderr)
        return 1
    try:
        return _COMMANDS[args.command](args)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except MalformedPattern as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except KsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
