"""Forward-chaining inference over semantic link networks.

Rules are safe conjunctive patterns: one to four body atoms, one or two head
atoms, every head variable bound in the body, and heads never introduce new
nodes or link types. Evaluation is delta-driven (each round only joins against
facts discovered in the previous round), runs to the least fixpoint, and is
deterministic: rules, types, and fact rows are always visited in sorted order.

Derived links record one provenance (rule id plus premise link ids, in body
order). Retraction over-deletes the provenance closure of the retracted link
and re-derives, which restores anything with surviving alternate support.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from .errors import InvalidId, InvalidRule, UnknownLink
from .sln import (
    Derived,
    ID_PATTERN,
    Network,
    RepBundle,
    SemanticLink,
)


def is_variable(term: str) -> bool:
    return isinstance(term, str) and term.startswith("?")


def _check_term(term: str) -> Optional[str]:
    if not isinstance(term, str) or term == "":
        return f"empty term {term!r}"
    if term.startswith("?"):
        if not ID_PATTERN.match(term[1:] or " "):
            return f"bad variable {term!r}"
    elif not ID_PATTERN.match(term):
        return f"bad identifier {term!r}"
    return None


@dataclass(frozen=True)
class PatternAtom:
    """One triple pattern; each field is a variable ("?x") or an id."""

    source: str
    type: str
    target: str

    def variables(self) -> Tuple[str, ...]:
        return tuple(t for t in (self.source, self.type, self.target) if is_variable(t))

    def substituted(self, env: Dict[str, str]) -> Tuple[str, str, str]:
        return (
            env.get(self.source, self.source),
            env.get(self.type, self.type),
            env.get(self.target, self.target),
        )


@dataclass
class Rule:
    id: str
    rep: RepBundle
    body: Tuple[PatternAtom, ...]
    head: Tuple[PatternAtom, ...]


@dataclass
class Derivation:
    """One recorded firing: rule, substitution, and premise links in body order."""

    link_id: str
    rule_id: str
    substitution: Dict[str, str]
    premises: Tuple[str, ...]


@dataclass
class Explanation:
    """Why a link holds: an explicit leaf, or a rule step over premises."""

    link_id: str
    triple: Tuple[str, str, str]
    kind: str  # "explicit" | "derived"
    rule_id: Optional[str] = None
    substitution: Optional[Dict[str, str]] = None
    premises: Tuple[str, ...] = ()
    children: List["Explanation"] = field(default_factory=list)


def validate_rule(rule: Rule, network: Optional[Network] = None) -> List[str]:
    """Collect contract violations; an empty list means the rule is valid."""
    problems: List[str] = []
    if not 1 <= len(rule.body) <= 4:
        problems.append(f"body must have 1..4 atoms, found {len(rule.body)}")
    if not 1 <= len(rule.head) <= 2:
        problems.append(f"head must have 1..2 atoms, found {len(rule.head)}")
    for where, atoms in (("body", rule.body), ("head", rule.head)):
        for atom in atoms:
            for term in (atom.source, atom.type, atom.target):
                bad = _check_term(term)
                if bad:
                    problems.append(f"{where}: {bad}")
    body_vars = {v for atom in rule.body for v in atom.variables()}
    for atom in rule.head:
        for v in atom.variables():
            if v not in body_vars:
                problems.append(f"unsafe variable {v} in head")
    if network is not None:
        for atom in rule.head:
            for term in (atom.source, atom.target):
                if not is_variable(term) and term not in network.nodes:
                    problems.append(f"unknown node {term!r} in head")
            if not is_variable(atom.type) and atom.type not in network.link_types:
                problems.append(f"unknown link type {atom.type!r} in head")
    return problems


# ===== pattern matching =====

FactRows = Dict[str, List[Tuple[str, str, str]]]  # type id -> (source, target, link id)


def rows_from_network(network: Network) -> FactRows:
    """Per-type fact rows with the symmetric completion applied."""
    return {tid: network.type_facts(tid) for tid in sorted(network.link_types)}


def rows_from_links(links: Iterable[SemanticLink]) -> FactRows:
    """Raw per-type rows over a loose link collection (no symmetric view)."""
    rows: FactRows = {}
    for link in links:
        rows.setdefault(link.type, []).append((link.source, link.target, link.id))
    for bucket in rows.values():
        bucket.sort()
    return rows


def _unify(term: str, value: str, env: Dict[str, str]) -> Optional[Dict[str, str]]:
    if is_variable(term):
        bound = env.get(term)
        if bound is None:
            out = dict(env)
            out[term] = value
            return out
        return env if bound == value else None
    return env if term == value else None


def match_atoms(
    rows: FactRows,
    atoms: Sequence[PatternAtom],
    delta_rows: Optional[FactRows] = None,
    delta_pos: Optional[int] = None,
) -> List[Tuple[Dict[str, str], Tuple[str, ...]]]:
    """All substitutions satisfying the atom conjunction, in deterministic order.

    When delta_rows/delta_pos are given, the atom at delta_pos only matches
    delta facts (the semi-naive restriction). Premises come back in atom order.
    """
    results: List[Tuple[Dict[str, str], Tuple[str, ...]]] = []

    def walk(idx: int, env: Dict[str, str], premises: List[str]) -> None:
        if idx == len(atoms):
            results.append((env, tuple(premises)))
            return
        atom = atoms[idx]
        table = delta_rows if (delta_rows is not None and idx == delta_pos) else rows
        t_term = atom.type
        if is_variable(t_term) and t_term in env:
            type_candidates = [env[t_term]]
        elif is_variable(t_term):
            type_candidates = sorted(table)
        else:
            type_candidates = [t_term]
        for tid in type_candidates:
            env_t = _unify(t_term, tid, env)
            if env_t is None:
                continue
            for s, t, lid in table.get(tid, ()):
                env_s = _unify(atom.source, s, env_t)
                if env_s is None:
                    continue
                env_st = _unify(atom.target, t, env_s)
                if env_st is None:
                    continue
                premises.append(lid)
                walk(idx + 1, env_st, premises)
                premises.pop()

    walk(0, {}, [])
    return results


# ===== synthesized flag rules =====

TRANSITIVE_PREFIX = "sys.transitive."


def _transitive_rule(type_id: str) -> Rule:
    return Rule(
        id=f"{TRANSITIVE_PREFIX}{type_id}",
        rep=RepBundle(word=f"transitive closure of {type_id}"),
        body=(
            PatternAtom("?x", type_id, "?y"),
            PatternAtom("?y", type_id, "?z"),
        ),
        head=(PatternAtom("?x", type_id, "?z"),),
    )


def get_rule(network: Network, rule_id: str) -> Rule:
    """Resolve a user rule or a synthesized transitive-flag rule."""
    rule = network.rules.get(rule_id)
    if rule is not None:
        return rule
    if rule_id.startswith(TRANSITIVE_PREFIX):
        tid = rule_id[len(TRANSITIVE_PREFIX):]
        lt = network.link_types.get(tid)
        if lt is not None and lt.transitive:
            return _transitive_rule(tid)
    raise InvalidRule(f"rule {rule_id!r} not found")


def effective_rules(network: Network) -> List[Rule]:
    rules = [network.rules[rid] for rid in sorted(network.rules)]
    rules.extend(
        _transitive_rule(tid)
        for tid in sorted(network.link_types)
        if network.link_types[tid].transitive
    )
    return rules


# ===== fixpoint =====

def _derivation_known(
    network: Network, link: SemanticLink, rule_id: str, premises: Tuple[str, ...]
) -> bool:
    """Whether this (rule, premises) support for the link is already on file."""
    prov = link.provenance
    if isinstance(prov, Derived) and (prov.rule_id, prov.premises) == (rule_id, premises):
        return True
    return any(
        (d.rule_id, d.premises) == (rule_id, premises)
        for d in network.derivation_index.get(link.id, ())
    )


def derive_fixpoint(network: Network) -> Tuple[List[SemanticLink], List[Derivation]]:
    """Run every rule to the least fixpoint; returns (new links, new derivations).

    The result set is independent of rule order and link insertion order; the
    ids and provenance assigned to new links follow the engine's own sorted
    iteration, so identical inputs give identical outputs.
    """
    for rid in sorted(network.rules):
        problems = validate_rule(network.rules[rid], network)
        if problems:
            raise InvalidRule(f"rule {rid!r}: " + "; ".join(problems))
    rules = effective_rules(network)
    new_links: List[SemanticLink] = []
    new_derivations: List[Derivation] = []
    if not rules:
        return new_links, new_derivations
    seen_firings = set()
    delta_ids = set(network.links)
    while delta_ids:
        rows = rows_from_network(network)
        delta_rows: FactRows = {
            tid: [row for row in bucket if row[2] in delta_ids]
            for tid, bucket in rows.items()
        }
        round_new: set = set()
        for rule in rules:
            for pos in range(len(rule.body)):
                for env, premises in match_atoms(rows, rule.body, delta_rows, pos):
                    key = (rule.id, tuple(sorted(env.items())))
                    if key in seen_firings:
                        continue
                    seen_firings.add(key)
                    weight = min(network.links[p].weight for p in premises)
                    for head in rule.head:
                        s, tid, t = head.substituted(env)
                        existing = network._find_stored(s, tid, t)
                        if existing is not None:
                            if not existing.is_explicit and not _derivation_known(
                                network, existing, rule.id, premises
                            ):
                                d = Derivation(existing.id, rule.id, dict(env), premises)
                                network.derivation_index.setdefault(
                                    existing.id, []
                                ).append(d)
                                new_derivations.append(d)
                            continue
                        lid = network.add_derived(
                            s, tid, t, weight, Derived(rule.id, premises)
                        )
                        d = Derivation(lid, rule.id, dict(env), premises)
                        network.derivation_index.setdefault(lid, []).append(d)
                        new_derivations.append(d)
                        new_links.append(network.links[lid])
                        round_new.add(lid)
        delta_ids = round_new
    return new_links, new_derivations


# ===== explanation =====

def _reconstruct_substitution(
    network: Network,
    rule: Rule,
    premises: Tuple[str, ...],
    triple: Tuple[str, str, str],
) -> Dict[str, str]:
    """Rebuild the substitution by unifying body atoms with premise triples.

    A premise of a symmetric type may have matched in reverse orientation,
    and one premise tuple can satisfy a body in more than one way, so the
    search backtracks until some head atom reproduces the derived triple.
    """

    def walk(idx: int, env: Dict[str, str]) -> Optional[Dict[str, str]]:
        if idx == len(rule.body):
            if any(head.substituted(env) == triple for head in rule.head):
                return env
            return None
        atom = rule.body[idx]
        link = network.link(premises[idx])
        orientations = [(link.source, link.type, link.target)]
        if network.link_types[link.type].symmetric and link.source != link.target:
            orientations.append((link.target, link.type, link.source))
        for s, tid, t in orientations:
            env_t = _unify(atom.type, tid, env)
            if env_t is None:
                continue
            env_s = _unify(atom.source, s, env_t)
            if env_s is None:
                continue
            env_st = _unify(atom.target, t, env_s)
            if env_st is None:
                continue
            out = walk(idx + 1, env_st)
            if out is not None:
                return out
        return None

    env = walk(0, {})
    if env is None:
        raise InvalidRule(
            f"premises {premises} do not satisfy the body of rule {rule.id!r}"
        )
    return env


def explain(network: Network, link_id: str) -> Explanation:
    """Explanation tree for a link; leaves are explicit links."""
    link = network.link(link_id)
    if link.is_explicit:
        return Explanation(link.id, link.triple(), "explicit")
    prov = link.provenance
    rule = get_rule(network, prov.rule_id)
    env = _reconstruct_substitution(network, rule, prov.premises, link.triple())
    children = [explain(network, pid) for pid in prov.premises]
    return Explanation(
        link.id,
        link.triple(),
        "derived",
        rule_id=prov.rule_id,
        substitution=env,
        premises=prov.premises,
        children=children,
    )


def verify_explanation(network: Network, node: Explanation) -> bool:
    """Replay an explanation: every step must reproduce its link exactly."""
    if node.kind == "explicit":
        link = network.links.get(node.link_id)
        return link is not None and link.is_explicit and link.triple() == node.triple
    rule = get_rule(network, node.rule_id)
    env = node.substitution or {}
    if len(node.premises) != len(rule.body):
        return False
    for atom, pid in zip(rule.body, node.premises):
        s, tid, t = atom.substituted(env)
        link = network.links.get(pid)
        if link is None or link.type != tid:
            return False
        forward = (link.source, link.target) == (s, t)
        backward = (
            network.link_types[tid].symmetric and (link.target, link.source) == (s, t)
        )
        if not (forward or backward):
            return False
    if all(head.substituted(env) != node.triple for head in rule.head):
        return False
    return all(verify_explanation(network, child) for child in node.children)


# ===== truth maintenance =====

def retract_with_maintenance(network: Network, link_id: str) -> List[str]:
    """Retract an explicit link, then restore alternately supported facts.

    Returns the link ids that are gone after maintenance (some over-deleted
    links may come back under fresh ids when another derivation survives).
    """
    removed = network.retract_link(link_id)
    derive_fixpoint(network)
    return [rid for rid in removed if rid not in network.links]
