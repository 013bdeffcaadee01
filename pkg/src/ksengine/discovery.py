"""Discovery loop: verification, problem finding, analogy, and ability reports.

Everything here is deterministic: candidate decisions re-derive on scratch
copies, problems come out in sorted order, the analogy search visits nodes in
a fixed order, and ability reports replay the same measurements per increment.
"""

from __future__ import annotations

import copy
import itertools
from dataclasses import dataclass, field, replace
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple

from .concepts import ConceptStore
from .errors import (
    AlreadyAtRoot,
    EmptySource,
    EmptyTypeSet,
    InvalidCandidate,
    InvalidRule,
    TooLarge,
    UncategorizedProblem,
    UnknownCategory,
    UnknownLink,
    UnknownLinkType,
    UnknownNode,
    NonPositiveInput,
)
from .rules import (
    PatternAtom,
    Rule,
    derive_fixpoint,
    match_atoms,
    rows_from_links,
    rows_from_network,
    validate_rule,
)
from .sln import LinkType, Network, QueryPattern, RepBundle, SemanticLink, SemanticNode
from .taxonomy import CategoryTree

PROBLEM_KINDS = ("anomaly", "relationship", "generalized", "specialized", "limitation")


# ===== verification =====

@dataclass(frozen=True)
class LinkCandidate:
    source: str
    type: str
    target: str
    weight: float = 1.0


@dataclass
class Candidate:
    kind: str  # link | rule | concept
    payload: object
    source: str = ""  # free-text provenance note


@dataclass(frozen=True)
class Verdict:
    accepted: bool
    reason: Optional[str]
    mode: str  # which mode produced the decision


def _contradiction(network: Network, pairs: Iterable[Tuple[str, str]]) -> Optional[str]:
    for t1, t2 in pairs:
        if t1 not in network.link_types or t2 not in network.link_types:
            continue
        for s, t, _lid in network.type_facts(t1):
            if network.has_fact(s, t2, t):
                return f"{t1}({s},{t}) conflicts with {t2}({s},{t})"
    return None


def verify_knowledge(
    network: Network,
    candidate: Candidate,
    mode: str = "literal",
    concepts: Optional[ConceptStore] = None,
    exclusive_pairs: Iterable[Tuple[str, str]] = (),
) -> Verdict:
    """Accept a candidate only when existing knowledge supports it.

    literal: a link must be in the derived fixpoint, a rule's every head
    instantiation must already be derivable, a concept's classes must exist.
    consistency: additionally accept when adding the candidate and re-deriving
    produces no contradiction against the configured exclusivity pairs.
    """
    if mode not in ("literal", "consistency"):
        raise ValueError(f"mode must be 'literal' or 'consistency', got {mode!r}")
    pairs = list(exclusive_pairs)
    if candidate.kind == "link":
        payload = candidate.payload
        if not isinstance(payload, LinkCandidate):
            raise InvalidCandidate(f"link candidate payload is {type(payload).__name__}")
        if not payload.weight >= 0:
            raise InvalidCandidate(f"negative candidate weight {payload.weight!r}")
        for endpoint in (payload.source, payload.target):
            if endpoint not in network.nodes:
                return Verdict(False, f"unknown endpoint {endpoint!r}", mode)
        if payload.type not in network.link_types:
            return Verdict(False, f"unknown link type {payload.type!r}", mode)
        work = copy.deepcopy(network)
        derive_fixpoint(work)
        if work.has_fact(payload.source, payload.type, payload.target):
            return Verdict(True, None, "literal")
        if mode == "literal":
            return Verdict(False, "not derivable from current knowledge", "literal")
        work = copy.deepcopy(network)
        work.assert_link(payload.source, payload.type, payload.target, payload.weight)
        derive_fixpoint(work)
        conflict = _contradiction(work, pairs)
        if conflict:
            return Verdict(False, conflict, "consistency")
        return Verdict(True, None, "consistency")
    if candidate.kind == "rule":
        payload = candidate.payload
        if not isinstance(payload, Rule):
            raise InvalidCandidate(f"rule candidate payload is {type(payload).__name__}")
        structural = validate_rule(payload)
        if structural:
            raise InvalidCandidate("; ".join(structural))
        semantic = validate_rule(payload, network)
        if semantic:
            return Verdict(False, "; ".join(semantic), mode)
        work = copy.deepcopy(network)
        derive_fixpoint(work)
        rows = rows_from_network(work)
        missing: List[Tuple[str, str, str]] = []
        for env, _premises in match_atoms(rows, payload.body):
            for head in payload.head:
                triple = head.substituted(env)
                if not work.has_fact(*triple) and triple not in missing:
                    missing.append(triple)
        if not missing:
            return Verdict(True, None, "literal")
        if mode == "literal":
            s, tid, t = missing[0]
            return Verdict(False, f"head {tid}({s},{t}) is not derivable", "literal")
        work = copy.deepcopy(network)
        work.rules[payload.id] = payload
        derive_fixpoint(work)
        conflict = _contradiction(work, pairs)
        if conflict:
            return Verdict(False, conflict, "consistency")
        return Verdict(True, None, "consistency")
    if candidate.kind == "concept":
        payload = candidate.payload
        if not hasattr(payload, "structure"):
            raise InvalidCandidate(
                f"concept candidate payload is {type(payload).__name__}"
            )
        if concepts is None:
            return Verdict(False, "no concept store to verify against", mode)
        for class_id in payload.structure.classes:
            if class_id not in concepts:
                return Verdict(False, f"unknown class {class_id!r}", mode)
        return Verdict(True, None, "literal")
    raise InvalidCandidate(f"unknown candidate kind {candidate.kind!r}")


# ===== cause-effect tracing =====

@dataclass(frozen=True)
class CauseEffectEdge:
    source: str
    label: str
    target: str
    weight: float
    directions: Tuple[str, ...]  # subset of ("backward", "forward")


@dataclass
class CauseEffectTrace:
    nodes: List[str]
    edges: List[CauseEffectEdge]


def trace_cause_effect(
    store: ConceptStore, goals: Iterable[str], cause_effect_types: Iterable[str]
) -> CauseEffectTrace:
    """Bidirectional reachability over typed concept relations.

    Follows the selected relation labels forward (causes to effects) and
    backward (effects to causes) from the goals; edges carry the directions
    they were traversed in.
    """
    goal_list = sorted(set(goals))
    types = set(cause_effect_types)
    if not types:
        raise EmptyTypeSet("cause_effect_types must be non-empty")
    for goal in goal_list:
        store.get(goal)
    edges: List[Tuple[str, str, str, float]] = []
    for cid in store.ids():
        relations = store.concepts[cid].structure.relations
        for (label, target) in sorted(relations):
            if label in types:
                edges.append((cid, label, target, relations[(label, target)]))
    forward: Dict[str, List[int]] = {}
    backward: Dict[str, List[int]] = {}
    for idx, (src, _label, tgt, _w) in enumerate(edges):
        forward.setdefault(src, []).append(idx)
        backward.setdefault(tgt, []).append(idx)
    reached_f = set(goal_list)
    frontier = list(goal_list)
    while frontier:
        cur = frontier.pop()
        for idx in forward.get(cur, ()):
            nxt = edges[idx][2]
            if nxt not in reached_f:
                reached_f.add(nxt)
                frontier.append(nxt)
    reached_b = set(goal_list)
    frontier = list(goal_list)
    while frontier:
        cur = frontier.pop()
        for idx in backward.get(cur, ()):
            nxt = edges[idx][0]
            if nxt not in reached_b:
                reached_b.add(nxt)
                frontier.append(nxt)
    out_edges: List[CauseEffectEdge] = []
    for src, label, tgt, weight in edges:
        directions = []
        if tgt in reached_b:
            directions.append("backward")
        if src in reached_f:
            directions.append("forward")
        if directions:
            out_edges.append(CauseEffectEdge(src, label, tgt, weight, tuple(directions)))
    nodes = sorted(reached_f | reached_b)
    out_edges.sort(key=lambda e: (e.source, e.label, e.target))
    return CauseEffectTrace(nodes, out_edges)


# ===== problems =====

@dataclass
class Problem:
    id: str
    kind: str
    statement: str
    evidence: Tuple[str, ...] = ()
    category: Optional[str] = None
    concepts: Tuple[str, ...] = ()  # the entities the problem is about


def detect_co_occurrence(
    events: Sequence[Tuple[str, Iterable[str]]], min_support: int
) -> List[Problem]:
    """Pair entities that appear together in at least min_support records."""
    if not isinstance(min_support, int) or min_support < 1:
        raise NonPositiveInput(f"min_support must be an integer >= 1, got {min_support!r}")
    witnesses: Dict[Tuple[str, str], List[str]] = {}
    for record_id, entities in events:
        unique = sorted(set(entities))
        for a, b in itertools.combinations(unique, 2):
            witnesses.setdefault((a, b), []).append(record_id)
    problems = []
    for (a, b) in sorted(witnesses):
        records = witnesses[(a, b)]
        if len(records) < min_support:
            continue
        problems.append(
            Problem(
                id=f"co.{a}.{b}",
                kind="relationship",
                statement=f"{a} and {b} co-occur in {len(records)} of {len(events)} records",
                evidence=tuple(sorted(set(records))),
                concepts=(a, b),
            )
        )
    return problems


def generalize_problem(problem: Problem, hierarchy: CategoryTree) -> Problem:
    if problem.category is None:
        raise UncategorizedProblem(f"problem {problem.id!r} has no category")
    if problem.category not in hierarchy:
        raise UnknownCategory(f"category {problem.category!r} not in hierarchy")
    parent = hierarchy.parent(problem.category)
    if parent is None:
        raise AlreadyAtRoot(f"category {problem.category!r} is the root")
    return replace(problem, id=f"{problem.id}.up", kind="generalized", category=parent)


def specialize_problem(problem: Problem, hierarchy: CategoryTree) -> List[Problem]:
    if problem.category is None:
        raise UncategorizedProblem(f"problem {problem.id!r} has no category")
    if problem.category not in hierarchy:
        raise UnknownCategory(f"category {problem.category!r} not in hierarchy")
    return [
        replace(problem, id=f"{problem.id}.down.{child}", kind="specialized",
                category=child)
        for child in hierarchy.children(problem.category)
    ]


def detect_limitation(rule: Rule, observations: Sequence[SemanticLink]) -> List[Problem]:
    """One limitation problem per body match whose head instance is missing."""
    structural = validate_rule(rule)
    if structural:
        raise InvalidRule(f"rule {rule.id!r}: " + "; ".join(structural))
    rows = rows_from_links(observations)
    present = {link.triple() for link in observations}
    by_id = {link.id: link for link in observations}
    matches = match_atoms(rows, rule.body)
    matches.sort(key=lambda m: tuple(sorted(m[0].items())))
    problems = []
    seen_envs = set()
    for env, premises in matches:
        key = tuple(sorted(env.items()))
        if key in seen_envs:
            continue
        seen_envs.add(key)
        missing = [h.substituted(env) for h in rule.head if h.substituted(env) not in present]
        if not missing:
            continue
        entities = sorted(
            {by_id[p].source for p in premises} | {by_id[p].target for p in premises}
        )
        missing_text = "; ".join(f"{tid}({s},{t})" for s, tid, t in missing)
        problems.append(
            Problem(
                id=f"lim.{rule.id}.{len(problems):04d}",
                kind="limitation",
                statement=f"premises hold but {missing_text} is absent",
                evidence=tuple(sorted(set(premises))),
                concepts=tuple(entities),
            )
        )
    return problems


@dataclass
class AnomalyRule:
    """Human-assigned pattern + threshold that turns observations into a Problem."""

    id: str
    atoms: Tuple[PatternAtom, ...]
    metric: str  # count | freq
    op: str  # ge | gt | le | lt | eq
    threshold: float
    template: str


_OPS = {
    "ge": lambda v, t: v >= t,
    "gt": lambda v, t: v > t,
    "le": lambda v, t: v <= t,
    "lt": lambda v, t: v < t,
    "eq": lambda v, t: v == t,
}


def validate_anomaly_rule(rule: AnomalyRule) -> List[str]:
    problems = []
    if not 1 <= len(rule.atoms) <= 4:
        problems.append(f"condition must have 1..4 atoms, found {len(rule.atoms)}")
    if rule.metric not in ("count", "freq"):
        problems.append(f"metric must be count or freq, got {rule.metric!r}")
    if rule.op not in _OPS:
        problems.append(f"op must be one of {sorted(_OPS)}, got {rule.op!r}")
    if not isinstance(rule.threshold, (int, float)) or isinstance(rule.threshold, bool):
        problems.append(f"threshold must be numeric, got {rule.threshold!r}")
    return problems


class _Defaulting(dict):
    def __missing__(self, key: str) -> str:
        return "{" + key + "}"


def find_problem(
    observations: Sequence[SemanticLink], anomaly_rules: Iterable[AnomalyRule]
) -> List[Problem]:
    """Evaluate each anomaly rule over the observations; one Problem per hit.

    Rules whose predicate holds vacuously with zero matching links emit
    nothing (anomaly problems must carry evidence).
    """
    rows = rows_from_links(observations)
    by_id = {link.id: link for link in observations}
    total = len(observations)
    out: List[Problem] = []
    for rule in sorted(anomaly_rules, key=lambda r: r.id):
        bad = validate_anomaly_rule(rule)
        if bad:
            raise InvalidRule(f"anomaly rule {rule.id!r}: " + "; ".join(bad))
        matches = match_atoms(rows, rule.atoms)
        envs = {tuple(sorted(env.items())) for env, _p in matches}
        count = len(envs)
        evidence = sorted({pid for _env, premises in matches for pid in premises})
        share = count / total if total else 0.0
        value = count if rule.metric == "count" else share
        if not _OPS[rule.op](value, rule.threshold) or not evidence:
            continue
        statement = rule.template.format_map(
            _Defaulting(count=count, share=share, total=total)
        )
        entities = sorted(
            {by_id[p].source for p in evidence} | {by_id[p].target for p in evidence}
        )
        out.append(
            Problem(
                id=f"anom.{rule.id}",
                kind="anomaly",
                statement=statement,
                evidence=tuple(evidence),
                concepts=tuple(entities),
            )
        )
    return out


def find_solution(
    store: ConceptStore, problem: Problem, solution_types: Iterable[str]
) -> List[str]:
    """Concepts reached from the problem's concepts along solution relations."""
    types = set(solution_types)
    goals = [c for c in problem.concepts if c in store]
    if not goals or not types:
        return []
    trace = trace_cause_effect(store, goals, types)
    return sorted(set(trace.nodes) - set(goals))


@dataclass(frozen=True)
class Recommendation:
    problem_id: str
    solutions: Tuple[str, ...]
    unsolved: bool


def recommend(pairs: Sequence[Tuple[Problem, Iterable[str]]]) -> List[Recommendation]:
    """Order ⟨problem, solution⟩ pairs by evidence count (desc), then id."""
    ranked = sorted(pairs, key=lambda p: (-len(p[0].evidence), p[0].id))
    return [
        Recommendation(prob.id, tuple(sorted(set(sols))), not set(sols))
        for prob, sols in ranked
    ]


# ===== analogy =====

@dataclass
class RelationStatus:
    triple: Tuple[str, str, str]
    status: str  # present | derivable | conjectured


@dataclass
class AnalogyResult:
    outcome: str  # exact | generalized | conjecture | none
    node_map: Optional[Dict[str, str]] = None
    mapped_solution: List[Tuple[str, str, str]] = field(default_factory=list)
    generalization: Dict[str, str] = field(default_factory=dict)
    problem_relations: List[RelationStatus] = field(default_factory=list)
    solution_relations: List[RelationStatus] = field(default_factory=list)
    impact: List[Tuple[str, str, str]] = field(default_factory=list)


def _degree_tables(nodes, triples):
    out: Dict[str, Dict[str, int]] = {n: {} for n in nodes}
    inn: Dict[str, Dict[str, int]] = {n: {} for n in nodes}
    for s, tid, t in triples:
        out[s][tid] = out[s].get(tid, 0) + 1
        inn[t][tid] = inn[t].get(tid, 0) + 1
    return out, inn


def _search_injection(
    s_nodes: List[str],
    s_triples: List[Tuple[str, str, str]],
    t_nodes: List[str],
    t_triple_set: Set[Tuple[str, str, str]],
    t_out,
    t_in,
) -> Optional[Dict[str, str]]:
    """First injective node map preserving every source triple, or None."""
    if len(s_nodes) > len(t_nodes):
        return None
    s_out, s_in = _degree_tables(s_nodes, s_triples)
    order = sorted(
        s_nodes,
        key=lambda n: (-(sum(s_out[n].values()) + sum(s_in[n].values())), n),
    )
    assignment: Dict[str, str] = {}
    used: Set[str] = set()

    def feasible(sn: str, tn: str) -> bool:
        for tid, need in s_out[sn].items():
            if t_out[tn].get(tid, 0) < need:
                return False
        for tid, need in s_in[sn].items():
            if t_in[tn].get(tid, 0) < need:
                return False
        for s, tid, t in s_triples:
            ms = tn if s == sn else assignment.get(s)
            mt = tn if t == sn else assignment.get(t)
            if ms is not None and mt is not None and (ms, tid, mt) not in t_triple_set:
                return False
        return True

    def walk(idx: int) -> bool:
        if idx == len(order):
            return True
        sn = order[idx]
        for tn in t_nodes:
            if tn in used or not feasible(sn, tn):
                continue
            assignment[sn] = tn
            used.add(tn)
            if walk(idx + 1):
                return True
            del assignment[sn]
            used.discard(tn)
        return False

    return dict(assignment) if walk(0) else None


def _best_partial_map(
    s_nodes: List[str],
    s_triples: List[Tuple[str, str, str]],
    t_nodes: List[str],
    t_triple_set: Set[Tuple[str, str, str]],
) -> Tuple[Optional[Dict[str, str]], int]:
    """Injective map maximizing preserved source triples (first best wins)."""
    if len(s_nodes) > len(t_nodes):
        return None, 0
    order = sorted(s_nodes)
    best: Dict[str, str] = {}
    best_count = -1
    assignment: Dict[str, str] = {}
    used: Set[str] = set()

    def preserved() -> int:
        count = 0
        for s, tid, t in s_triples:
            ms, mt = assignment.get(s), assignment.get(t)
            if ms is not None and mt is not None and (ms, tid, mt) in t_triple_set:
                count += 1
        return count

    def walk(idx: int) -> None:
        nonlocal best, best_count
        if idx == len(order):
            count = preserved()
            if count > best_count:
                best, best_count = dict(assignment), count
            return
        if best_count >= len(s_triples):
            return  # cannot improve on total preservation
        sn = order[idx]
        for tn in t_nodes:
            if tn in used:
                continue
            assignment[sn] = tn
            used.add(tn)
            walk(idx + 1)
            del assignment[sn]
            used.discard(tn)
        return

    walk(0)
    if best_count < 0:
        return None, 0
    return best, best_count


def analogize(
    source: Network,
    solution_links: Iterable[str],
    target: Network,
    max_nodes: int = 10,
) -> AnalogyResult:
    """Map the source's solution into the target by isomorphism, generalized
    types, or conjecture–verification (in that order)."""
    s_nodes = sorted(source.nodes)
    t_nodes = sorted(target.nodes)
    if not s_nodes:
        raise EmptySource("source network has no nodes")
    if len(s_nodes) > max_nodes or len(t_nodes) > max_nodes:
        raise TooLarge(
            f"node counts {len(s_nodes)}/{len(t_nodes)} exceed max_nodes={max_nodes}"
        )
    solution_ids = sorted(set(solution_links))
    for lid in solution_ids:
        if lid not in source.links:
            raise UnknownLink(f"solution link {lid!r} not in source")
    s_links = [source.links[lid] for lid in sorted(source.links)]
    s_triples = [l.triple() for l in s_links]
    t_triples = [target.links[lid].triple() for lid in sorted(target.links)]
    t_triple_set = set(t_triples)
    t_out, t_in = _degree_tables(t_nodes, t_triples)

    # Stage 1: exact, label-preserving.
    node_map = _search_injection(s_nodes, s_triples, t_nodes, t_triple_set, t_out, t_in)
    if node_map is not None:
        mapped = [
            (node_map[source.links[lid].source], source.links[lid].type,
             node_map[source.links[lid].target])
            for lid in solution_ids
        ]
        return AnalogyResult("exact", node_map, mapped)

    # Stage 2: lift source link types one hierarchy level per round.
    type_map = {tid: tid for tid in sorted({t for _s, t, _t in s_triples})}
    while True:
        lifted = {
            tid: (source.link_types[cur].parent or cur)
            if cur in source.link_types else cur
            for tid, cur in type_map.items()
        }
        if lifted == type_map:
            break
        type_map = lifted
        lifted_triples = [(s, type_map[tid], t) for s, tid, t in s_triples]
        node_map = _search_injection(
            s_nodes, lifted_triples, t_nodes, t_triple_set, t_out, t_in
        )
        if node_map is not None:
            generalization = {
                tid: new for tid, new in sorted(type_map.items()) if tid != new
            }
            mapped = [
                (node_map[source.links[lid].source],
                 type_map[source.links[lid].type],
                 node_map[source.links[lid].target])
                for lid in solution_ids
            ]
            return AnalogyResult("generalized", node_map, mapped,
                                 generalization=generalization)

    # Stage 3: conjecture and verify.
    node_map, _count = _best_partial_map(s_nodes, s_triples, t_nodes, t_triple_set)
    if node_map is None:
        return AnalogyResult("none")
    fix = copy.deepcopy(target)
    derive_fixpoint(fix)

    def status_of(triple: Tuple[str, str, str]) -> str:
        if triple in t_triple_set:
            return "present"
        if triple[1] in fix.link_types and fix.has_fact(*triple):
            return "derivable"
        return "conjectured"

    solution_set = set(solution_ids)
    problem_relations: List[RelationStatus] = []
    solution_relations: List[RelationStatus] = []
    for link in s_links:
        mapped_triple = (node_map[link.source], link.type, node_map[link.target])
        entry = RelationStatus(mapped_triple, status_of(mapped_triple))
        if link.id in solution_set:
            solution_relations.append(entry)
        else:
            problem_relations.append(entry)
    conjectured = sorted(
        {
            rs.triple
            for rs in problem_relations + solution_relations
            if rs.status == "conjectured"
        }
    )
    impact: List[Tuple[str, str, str]] = []
    if conjectured:
        scratch = copy.deepcopy(target)
        conjecture_ids: Set[str] = set()
        for s, tid, t in conjectured:
            if tid not in scratch.link_types:
                src_type = source.link_types[tid]
                scratch.add_link_type(
                    src_type.rep, src_type.transitive, src_type.symmetric,
                    parent=None, type_id=tid,
                )
            if not scratch.has_fact(s, tid, t):
                conjecture_ids.add(scratch.assert_link(s, tid, t))
        derive_fixpoint(scratch)
        dependent: Set[str] = set(conjecture_ids)
        changed = True
        while changed:
            changed = False
            for link in scratch.links.values():
                if link.id in dependent or link.is_explicit:
                    continue
                if any(p in dependent for p in link.provenance.premises):
                    dependent.add(link.id)
                    changed = True
        impact = sorted(
            scratch.links[lid].triple()
            for lid in dependent - conjecture_ids
        )
    mapped = [rs.triple for rs in solution_relations]
    return AnalogyResult(
        "conjecture",
        node_map,
        mapped,
        problem_relations=problem_relations,
        solution_relations=solution_relations,
        impact=impact,
    )


# ===== ability reports =====

@dataclass
class IncrementFragment:
    """Network additions: new types, nodes, rules, and explicit links."""

    link_types: List[LinkType] = field(default_factory=list)
    nodes: List[SemanticNode] = field(default_factory=list)
    rules: List[Rule] = field(default_factory=list)
    links: List[SemanticLink] = field(default_factory=list)


def ingest_fragment(network: Network, fragment: IncrementFragment) -> None:
    for lt in sorted(fragment.link_types, key=lambda x: x.id):
        network.add_link_type(lt.rep, lt.transitive, lt.symmetric,
                              parent=None, type_id=lt.id)
    for lt in sorted(fragment.link_types, key=lambda x: x.id):
        if lt.parent is not None:
            network.set_type_parent(lt.id, lt.parent)
    for node in sorted(fragment.nodes, key=lambda x: x.id):
        network.add_node(node.rep, dict(node.attributes), node_id=node.id)
    for rule in sorted(fragment.rules, key=lambda x: x.id):
        if rule.id in network.rules:
            raise InvalidRule(f"rule {rule.id!r} already present")
        network.rules[rule.id] = rule
    for link in sorted(fragment.links, key=lambda x: x.id):
        network.assert_link(link.source, link.type, link.target, link.weight,
                            link_id=link.id)


@dataclass(frozen=True)
class AbilityEntry:
    increment: int  # 0 is the state before any increment
    answered: int
    questions: int
    problems: int


@dataclass
class AbilityReport:
    entries: List[AbilityEntry]


def ability_report(
    network: Network,
    questions: Sequence[QueryPattern],
    increments: Sequence[IncrementFragment],
    anomaly_rules: Iterable[AnomalyRule] = (),
) -> AbilityReport:
    """Measure answerable questions (and raised problems) per data increment.

    Mutates the given network; pass a copy to keep the original. Counts are
    non-decreasing when the increments only add data.
    """
    rules = list(anomaly_rules)
    entries: List[AbilityEntry] = []

    def measure(index: int) -> None:
        derive_fixpoint(network)
        answered = 0
        for question in questions:
            try:
                if network.answer_query(question):
                    answered += 1
            except (UnknownNode, UnknownLinkType):
                pass
        problem_count = 0
        if rules:
            links = [network.links[lid] for lid in sorted(network.links)]
            problem_count = len(find_problem(links, rules))
        entries.append(AbilityEntry(index, answered, len(questions), problem_count))

    measure(0)
    for index, fragment in enumerate(increments, start=1):
        ingest_fragment(network, fragment)
        measure(index)
    return AbilityReport(entries)
