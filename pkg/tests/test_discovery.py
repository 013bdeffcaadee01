"""Verification, problem discovery, analogy, and ability reporting."""

import copy
import random

import pytest

from ksengine.concepts import ConceptStore
from ksengine.discovery import (
    AnomalyRule,
    Candidate,
    IncrementFragment,
    LinkCandidate,
    Problem,
    ability_report,
    analogize,
    detect_co_occurrence,
    detect_limitation,
    find_problem,
    find_solution,
    generalize_problem,
    ingest_fragment,
    recommend,
    specialize_problem,
    trace_cause_effect,
    verify_knowledge,
)
from ksengine.errors import (
    AlreadyAtRoot,
    EmptySource,
    EmptyTypeSet,
    InvalidCandidate,
    InvalidRule,
    NonPositiveInput,
    TooLarge,
    UncategorizedProblem,
    UnknownCategory,
    UnknownConcept,
    UnknownLink,
)
from ksengine.rules import PatternAtom, Rule, derive_fixpoint
from ksengine.sln import Explicit, Network, QueryPattern, RepBundle, SemanticLink
from ksengine.taxonomy import CategoryTree

import oracles
from generators import random_network


def net_from_triples(triples, type_flags=None, type_parents=None):
    """Assemble a network from plain (source, type, target) rows."""
    net = Network()
    flags = type_flags or {}
    for s, tid, t in triples:
        for n in (s, t):
            if n not in net.nodes:
                net.add_node(RepBundle(word=n), node_id=n)
        if tid not in net.link_types:
            transitive, symmetric = flags.get(tid, (False, False))
            net.add_link_type(RepBundle(word=tid), transitive, symmetric, type_id=tid)
        net.assert_link(s, tid, t)
    for tid, parent in (type_parents or {}).items():
        if parent not in net.link_types:
            net.add_link_type(RepBundle(word=parent), type_id=parent)
        net.set_type_parent(tid, parent)
    return net


def chain_rule_net():
    net = net_from_triples([("a", "t", "b"), ("b", "t", "c")])
    net.add_link_type(RepBundle(word="u"), type_id="u")
    net.rules["compose"] = Rule(
        "compose", RepBundle(word="compose"),
        (PatternAtom("?x", "t", "?y"), PatternAtom("?y", "t", "?z")),
        (PatternAtom("?x", "u", "?z"),),
    )
    return net


# ----- candidate verification -----

def test_verify_link_literal_accepts_derivable():
    net = chain_rule_net()
    candidate = Candidate("link", LinkCandidate("a", "u", "c"))
    verdict = verify_knowledge(net, candidate, mode="literal")
    assert verdict.accepted
    assert verdict.mode == "literal"
    # the check ran on a scratch copy
    assert not net.has_fact("a", "u", "c")


def test_verify_link_literal_rejects_underivable():
    net = chain_rule_net()
    verdict = verify_knowledge(net, Candidate("link", LinkCandidate("c", "u", "a")))
    assert not verdict.accepted
    assert "not derivable" in verdict.reason


def test_verify_link_structural_unknowns_are_rejections():
    net = chain_rule_net()
    for payload in (
        LinkCandidate("ghost", "t", "a"),
        LinkCandidate("a", "ghost", "b"),
        LinkCandidate("a", "t", "ghost"),
    ):
        for mode in ("literal", "consistency"):
            verdict = verify_knowledge(net, Candidate("link", payload), mode=mode)
            assert not verdict.accepted
            assert "unknown" in verdict.reason


def test_verify_link_bad_payload_raises():
    net = chain_rule_net()
    with pytest.raises(InvalidCandidate):
        verify_knowledge(net, Candidate("link", "not a link"))
    with pytest.raises(InvalidCandidate):
        verify_knowledge(net, Candidate("link", LinkCandidate("a", "t", "b", -1.0)))
    with pytest.raises(ValueError):
        verify_knowledge(net, Candidate("link", LinkCandidate("a", "t", "b")),
                         mode="vibes")
    with pytest.raises(InvalidCandidate):
        verify_knowledge(net, Candidate("spell", "abracadabra"))


def test_verify_link_consistency_checks_exclusive_pairs():
    net = net_from_triples([("a", "hot", "b")])
    net.add_link_type(RepBundle(word="cold"), type_id="cold")
    clash = Candidate("link", LinkCandidate("a", "cold", "b"))
    verdict = verify_knowledge(net, clash, mode="consistency",
                               exclusive_pairs=[("hot", "cold")])
    assert not verdict.accepted
    assert "conflicts" in verdict.reason
    elsewhere = Candidate("link", LinkCandidate("b", "cold", "a"))
    verdict = verify_knowledge(net, elsewhere, mode="consistency",
                               exclusive_pairs=[("hot", "cold")])
    assert verdict.accepted
    assert verdict.mode == "consistency"


def test_verify_rule_literal_requires_all_heads():
    net = chain_rule_net()
    derive_fixpoint(net)
    held = Rule(
        "held", RepBundle(word="held"),
        (PatternAtom("?x", "t", "?y"), PatternAtom("?y", "t", "?z")),
        (PatternAtom("?x", "u", "?z"),),
    )
    assert verify_knowledge(net, Candidate("rule", held)).accepted
    novel = Rule(
        "novel", RepBundle(word="novel"),
        (PatternAtom("?x", "t", "?y"),),
        (PatternAtom("?y", "u", "?x"),),
    )
    verdict = verify_knowledge(net, Candidate("rule", novel))
    assert not verdict.accepted
    assert "not derivable" in verdict.reason
    # consistency mode tolerates the new conclusions absent contradictions
    assert verify_knowledge(net, Candidate("rule", novel), mode="consistency").accepted


def test_verify_rule_structural_problems_raise():
    net = chain_rule_net()
    broken = Rule("broken", RepBundle(word="broken"), (),
                  (PatternAtom("?x", "u", "?x"),))
    with pytest.raises(InvalidCandidate):
        verify_knowledge(net, Candidate("rule", broken))
    ghost_type = Rule(
        "ghost", RepBundle(word="ghost"),
        (PatternAtom("?x", "t", "?y"),),
        (PatternAtom("?x", "seven", "?y"),),
    )
    verdict = verify_knowledge(net, Candidate("rule", ghost_type))
    assert not verdict.accepted
    assert "unknown link type" in verdict.reason


def test_verify_concept_candidate():
    net = chain_rule_net()
    store = ConceptStore()
    base = store.add_concept("base")
    orphan = store.add_concept("orphan")
    orphan.structure.classes.append("missing")
    child = store.add_concept("child")
    child.structure.classes.append(base.id)
    assert verify_knowledge(net, Candidate("concept", child), concepts=store).accepted
    verdict = verify_knowledge(net, Candidate("concept", orphan), concepts=store)
    assert not verdict.accepted
    assert "unknown class" in verdict.reason
    verdict = verify_knowledge(net, Candidate("concept", child))
    assert not verdict.accepted


# ----- cause-effect tracing -----

def cause_store():
    store = ConceptStore()
    for name in ("rain", "wet", "slip", "mop"):
        store.add_concept(name, concept_id=name)
    store.add_relation("rain", "causes", "wet", 1.0)
    store.add_relation("wet", "causes", "slip", 0.5)
    store.add_relation("mop", "prevents", "wet", 1.0)
    return store


def test_trace_follows_both_directions():
    store = cause_store()
    trace = trace_cause_effect(store, ["wet"], ["causes"])
    assert trace.nodes == ["rain", "slip", "wet"]
    by_triple = {(e.source, e.label, e.target): e for e in trace.edges}
    assert by_triple[("rain", "causes", "wet")].directions == ("backward",)
    assert by_triple[("wet", "causes", "slip")].directions == ("forward",)
    assert ("mop", "prevents", "wet") not in by_triple


def test_trace_requires_types_and_known_goals():
    store = cause_store()
    with pytest.raises(EmptyTypeSet):
        trace_cause_effect(store, ["wet"], [])
    with pytest.raises(UnknownConcept):
        trace_cause_effect(store, ["storm"], ["causes"])


def test_trace_edge_weights_and_multi_types():
    store = cause_store()
    trace = trace_cause_effect(store, ["wet"], ["causes", "prevents"])
    weights = {(e.source, e.target): e.weight for e in trace.edges}
    assert weights[("wet", "slip")] == 0.5
    assert ("mop", "wet") in weights


# ----- co-occurrence problems -----

def test_detect_co_occurrence_thresholds():
    events = [
        ("r1", ["x", "y", "x"]),
        ("r2", ["y", "x"]),
        ("r3", ["x", "z"]),
    ]
    problems = detect_co_occurrence(events, min_support=2)
    assert [p.id for p in problems] == ["co.x.y"]
    problem = problems[0]
    assert problem.kind == "relationship"
    assert problem.evidence == ("r1", "r2")
    assert problem.concepts == ("x", "y")
    assert "2 of 3" in problem.statement
    assert detect_co_occurrence(events, min_support=3) == []
    with pytest.raises(NonPositiveInput):
        detect_co_occurrence(events, min_support=0)


# ----- generalize / specialize -----

def category_tree():
    tree = CategoryTree()
    tree.add("root", "everything", None)
    tree.add("mid", "middle", "root")
    tree.add("leaf1", "one", "mid")
    tree.add("leaf2", "two", "mid")
    return tree


def test_generalize_problem_moves_up():
    tree = category_tree()
    problem = Problem("p1", "anomaly", "odd", evidence=("e",), category="leaf1")
    up = generalize_problem(problem, tree)
    assert up.id == "p1.up"
    assert up.kind == "generalized"
    assert up.category == "mid"
    assert up.statement == problem.statement
    with pytest.raises(AlreadyAtRoot):
        generalize_problem(Problem("p", "anomaly", "s", ("e",), category="root"), tree)
    with pytest.raises(UncategorizedProblem):
        generalize_problem(Problem("p", "anomaly", "s", ("e",)), tree)
    with pytest.raises(UnknownCategory):
        generalize_problem(Problem("p", "anomaly", "s", ("e",), category="zzz"), tree)


def test_specialize_problem_fans_out():
    tree = category_tree()
    problem = Problem("p1", "anomaly", "odd", evidence=("e",), category="mid")
    downs = specialize_problem(problem, tree)
    assert [p.id for p in downs] == ["p1.down.leaf1", "p1.down.leaf2"]
    assert all(p.kind == "specialized" for p in downs)
    assert [p.category for p in downs] == ["leaf1", "leaf2"]
    assert specialize_problem(
        Problem("p", "anomaly", "s", ("e",), category="leaf1"), tree) == []


# ----- limitations -----

def test_detect_limitation_lists_unmet_heads():
    net = chain_rule_net()
    rule = net.rules["compose"]
    observations = [net.links[lid] for lid in sorted(net.links)]
    problems = detect_limitation(rule, observations)
    assert len(problems) == 1
    problem = problems[0]
    assert problem.id == "lim.compose.0000"
    assert problem.kind == "limitation"
    assert "u(a,c)" in problem.statement
    assert problem.evidence == tuple(sorted(l.id for l in observations))
    assert problem.concepts == ("a", "b", "c")
    derive_fixpoint(net)
    observations = [net.links[lid] for lid in sorted(net.links)]
    assert detect_limitation(rule, observations) == []


def test_detect_limitation_rejects_bad_rule():
    with pytest.raises(InvalidRule):
        detect_limitation(
            Rule("r", RepBundle(word="r"), (), (PatternAtom("?x", "t", "?x"),)), []
        )


# ----- anomaly rules -----

def observations_net():
    return net_from_triples([
        ("a", "cites", "b"),
        ("b", "cites", "c"),
        ("c", "cites", "a"),
        ("a", "likes", "b"),
    ])


def test_find_problem_count_metric():
    net = observations_net()
    links = [net.links[lid] for lid in sorted(net.links)]
    rule = AnomalyRule(
        id="many.cites",
        atoms=(PatternAtom("?x", "cites", "?y"),),
        metric="count",
        op="ge",
        threshold=3,
        template="{count} citation pairs among {total} links",
    )
    problems = find_problem(links, [rule])
    assert len(problems) == 1
    problem = problems[0]
    assert problem.id == "anom.many.cites"
    assert problem.kind == "anomaly"
    assert problem.statement == "3 citation pairs among 4 links"
    assert len(problem.evidence) == 3
    assert problem.concepts == ("a", "b", "c")


def test_find_problem_freq_metric_and_unknown_placeholder():
    net = observations_net()
    links = [net.links[lid] for lid in sorted(net.links)]
    rule = AnomalyRule(
        id="like.rate",
        atoms=(PatternAtom("?x", "likes", "?y"),),
        metric="freq",
        op="le",
        threshold=0.5,
        template="share {share} with {mystery}",
    )
    problems = find_problem(links, [rule])
    assert len(problems) == 1
    assert problems[0].statement == "share 0.25 with {mystery}"


def test_find_problem_suppresses_evidence_free_hits():
    net = observations_net()
    links = [net.links[lid] for lid in sorted(net.links)]
    net.add_link_type(RepBundle(word="hates"), type_id="hates")
    vacuous = AnomalyRule(
        id="no.hate",
        atoms=(PatternAtom("?x", "hates", "?y"),),
        metric="count",
        op="le",
        threshold=5,
        template="{count} hate links",
    )
    assert find_problem(links, [vacuous]) == []


def test_find_problem_sorts_by_rule_id_and_validates():
    net = observations_net()
    links = [net.links[lid] for lid in sorted(net.links)]
    r1 = AnomalyRule("b.rule", (PatternAtom("?x", "cites", "?y"),),
                     "count", "ge", 1, "cites {count}")
    r2 = AnomalyRule("a.rule", (PatternAtom("?x", "likes", "?y"),),
                     "count", "ge", 1, "likes {count}")
    problems = find_problem(links, [r1, r2])
    assert [p.id for p in problems] == ["anom.a.rule", "anom.b.rule"]
    bad = AnomalyRule("bad", (), "count", "ge", 1, "x")
    with pytest.raises(InvalidRule):
        find_problem(links, [bad])
    worse = AnomalyRule("worse", (PatternAtom("?x", "cites", "?y"),),
                        "median", "ge", 1, "x")
    with pytest.raises(InvalidRule):
        find_problem(links, [worse])


# ----- solutions and recommendations -----

def test_find_solution_walks_solution_relations():
    store = cause_store()
    problem = Problem("p", "anomaly", "wet floor", ("e",), concepts=("wet",))
    solutions = find_solution(store, problem, ["prevents"])
    assert solutions == ["mop"]
    assert find_solution(store, problem, []) == []
    stranger = Problem("q", "anomaly", "unknown entity", ("e",), concepts=("alien",))
    assert find_solution(store, stranger, ["prevents"]) == []


def test_recommend_orders_by_evidence_then_id():
    p1 = Problem("p1", "anomaly", "s", evidence=("a",))
    p2 = Problem("p2", "anomaly", "s", evidence=("a", "b"))
    p3 = Problem("a0", "anomaly", "s", evidence=("a",))
    recs = recommend([(p1, ["x"]), (p2, []), (p3, ["y", "x", "y"])])
    assert [r.problem_id for r in recs] == ["p2", "a0", "p1"]
    assert recs[0].unsolved
    assert not recs[1].unsolved
    assert recs[1].solutions == ("x", "y")


# ----- analogy -----

def test_analogize_exact_on_relabeled_target():
    source = net_from_triples([
        ("p1", "cites", "p2"),
        ("p2", "cites", "p3"),
        ("p1", "solves", "p3"),
    ])
    target = net_from_triples([
        ("q1", "cites", "q2"),
        ("q2", "cites", "q3"),
        ("q1", "solves", "q3"),
        ("q3", "cites", "q1"),
    ])
    solution = [lid for lid, l in source.links.items() if l.type == "solves"]
    result = analogize(source, solution, target)
    assert result.outcome == "exact"
    assert oracles.replay_map(
        result.node_map,
        [l.triple() for l in source.links.values()],
        [l.triple() for l in target.links.values()],
    )
    assert result.mapped_solution == [
        (result.node_map["p1"], "solves", result.node_map["p3"])
    ]


def test_analogize_generalizes_types_one_level():
    source = net_from_triples(
        [("p1", "tweaks", "p2")],
        type_parents={"tweaks": "changes"},
    )
    target = net_from_triples([("q1", "changes", "q2")])
    solution = sorted(source.links)
    result = analogize(source, solution, target)
    assert result.outcome == "generalized"
    assert result.generalization == {"tweaks": "changes"}
    assert result.mapped_solution == [("q1", "changes", "q2")]


def test_analogize_conjectures_and_measures_impact():
    source = net_from_triples([
        ("p1", "cites", "p2"),
        ("p2", "cites", "p3"),
        ("p1", "solves", "p3"),
    ])
    target = net_from_triples([
        ("q1", "cites", "q2"),
        ("q2", "cites", "q3"),
    ])
    target.add_link_type(RepBundle(word="solves"), type_id="solves")
    target.add_link_type(RepBundle(word="closed"), type_id="closed")
    target.rules["closure"] = Rule(
        "closure", RepBundle(word="closure"),
        (PatternAtom("?x", "solves", "?y"),),
        (PatternAtom("?x", "closed", "?y"),),
    )
    solution = [lid for lid, l in source.links.items() if l.type == "solves"]
    result = analogize(source, solution, target)
    assert result.outcome == "conjecture"
    statuses = {rs.triple: rs.status for rs in result.problem_relations}
    assert statuses[(result.node_map["p1"], "cites", result.node_map["p2"])] == "present"
    conjectured = [rs for rs in result.solution_relations if rs.status == "conjectured"]
    assert len(conjectured) == 1
    q_solve = conjectured[0].triple
    assert q_solve[1] == "solves"
    assert (q_solve[0], "closed", q_solve[2]) in result.impact


def test_analogize_error_paths():
    source = net_from_triples([("p1", "t", "p2")])
    target = net_from_triples([("q1", "t", "q2")])
    with pytest.raises(EmptySource):
        analogize(Network(), [], target)
    with pytest.raises(TooLarge):
        analogize(source, [], target, max_nodes=1)
    with pytest.raises(UnknownLink):
        analogize(source, ["k999999"], target)


def test_analogize_none_when_target_too_small():
    source = net_from_triples([("p1", "t", "p2"), ("p2", "t", "p3")])
    target = net_from_triples([("q1", "t", "q1")])
    result = analogize(source, [], target)
    assert result.outcome == "none"
    assert result.node_map is None


def test_stage_one_matches_permutation_search():
    rng = random.Random(808)
    for _ in range(30):
        source = random_network(rng, max_nodes=4, max_types=2, max_rules=0)
        target = random_network(rng, max_nodes=5, max_types=2, max_rules=0)
        # share the type vocabulary so embeddings are possible at all
        for tid in source.link_types:
            if tid not in target.link_types:
                target.add_link_type(RepBundle(word=tid), type_id=tid)
        s_triples = [l.triple() for l in source.links.values()]
        t_triples = [l.triple() for l in target.links.values()]
        want = oracles.iso_search(
            sorted(source.nodes), s_triples, sorted(target.nodes), t_triples
        )
        result = analogize(source, [], target)
        if want is None:
            assert result.outcome != "exact"
        else:
            assert result.outcome == "exact"
            assert oracles.replay_map(result.node_map, s_triples, t_triples)


# ----- ability over increments -----

def test_ability_report_counts_growth():
    net = net_from_triples([("a", "t", "b")])
    net.add_node(RepBundle(word="c"), node_id="c")
    questions = [
        QueryPattern("a", "t", None),
        QueryPattern("a", None, "c"),
        QueryPattern("ghost", "t", None),
    ]
    fragment = IncrementFragment(
        links=[SemanticLink("kx00001", "a", "t", "c", 1.0, Explicit())]
    )
    report = ability_report(copy.deepcopy(net), questions, [fragment])
    assert [e.increment for e in report.entries] == [0, 1]
    assert report.entries[0].answered == 1
    assert report.entries[1].answered == 2
    assert all(e.questions == 3 for e in report.entries)


def test_ability_report_counts_problems():
    net = net_from_triples([("a", "t", "b")])
    rule = AnomalyRule("watch", (PatternAtom("?x", "t", "?y"),),
                       "count", "ge", 2, "{count} hits")
    fragment = IncrementFragment(
        links=[SemanticLink("kx00001", "b", "t", "a", 1.0, Explicit())]
    )
    report = ability_report(copy.deepcopy(net), [], [fragment], anomaly_rules=[rule])
    assert report.entries[0].problems == 0
    assert report.entries[1].problems == 1


def test_ingest_fragment_rejects_duplicate_rule():
    net = chain_rule_net()
    fragment = IncrementFragment(rules=[net.rules["compose"]])
    with pytest.raises(InvalidRule):
        ingest_fragment(net, fragment)
