"""Canonical text persistence: export shape, import checks, round trips."""

import random

import pytest

from ksengine.errors import (
    BadHeader,
    DanglingReference,
    DuplicateId,
    MalformedRecord,
    UnknownKind,
)
from ksengine.fixtures import build_reference_state
from ksengine.ksif import (
    HEADER,
    KIND_ORDER,
    escape_field,
    export_space_fragment,
    export_state,
    fragment_to_increment,
    import_state,
    merge_lexicon_fragment,
    parse_anomaly_rules,
    parse_candidates,
    records_from_text,
    unescape_field,
)
from ksengine.rules import derive_fixpoint
from ksengine.sln import RepBundle
from ksengine.state import new_state

from generators import NASTY_TEXT, random_space, random_state


def minimal_state():
    state = new_state()
    net = state.network
    net.add_node(RepBundle(word="a"), node_id="a")
    net.add_node(RepBundle(word="b"), node_id="b")
    net.add_link_type(RepBundle(word="t"), type_id="t")
    net.assert_link("a", "t", "b", link_id="k1")
    return state


def swap(text: str, old: str, new: str) -> str:
    assert text.count(old) == 1, f"{old!r} is not unique in the document"
    return text.replace(old, new)


# ----- lexical layer -----

def test_header_is_mandatory():
    with pytest.raises(BadHeader):
        import_state("")
    with pytest.raises(BadHeader):
        import_state("KSIF 2\n")
    with pytest.raises(BadHeader):
        import_state("ksif 1\n")
    state = import_state(HEADER + "\n")
    assert state.network.nodes == {}
    assert state.space.dimensions() == []


def test_comments_and_blank_lines_are_ignored():
    doc = export_state(minimal_state())
    lines = doc.split("\n")
    lines.insert(1, "# a remark")
    lines.insert(3, "")
    state = import_state("\n".join(lines))
    assert export_state(state) == doc


def test_export_never_emits_comments_or_blanks():
    doc = export_state(build_reference_state())
    for line in doc.split("\n")[:-1]:
        assert line != ""
        assert not line.startswith("#")


def test_escape_round_trip():
    for text in NASTY_TEXT + ("", "plain", "\t\n\\", "a\tb\nc\\d"):
        assert unescape_field(escape_field(text), 1) == text


def test_escape_is_minimal():
    assert escape_field("a\tb") == "a\\tb"
    assert escape_field("a\nb") == "a\\nb"
    assert escape_field("a\\b") == "a\\\\b"
    assert escape_field("a\rb") == "a\rb"  # raw, not escaped


def test_unescape_rejects_unknown_escape():
    with pytest.raises(MalformedRecord) as err:
        unescape_field("a\\x", 7)
    assert "line 7" in str(err.value)
    with pytest.raises(MalformedRecord):
        unescape_field("trailing\\", 3)


def test_records_carry_line_numbers():
    doc = HEADER + "\n\n# skip me\nNODE\ta\t0.0\tS\t\ta\t\t0\t0\n"
    records = records_from_text(doc)
    assert len(records) == 1
    line, kind, fields = records[0]
    assert line == 4
    assert kind == "NODE"
    assert fields[0] == "a"


# ----- canonical export shape -----

def test_record_kinds_appear_in_canonical_order():
    state = random_state(random.Random(42))
    doc = export_state(state)
    kinds = [line.split("\t", 1)[0] for line in doc.split("\n")[1:] if line]
    rank = {kind: i for i, kind in enumerate(KIND_ORDER)}
    assert kinds == sorted(kinds, key=lambda k: rank[k])
    for kind in ("LINKTYPE", "NODE", "LINK", "RULE"):
        ids = [line.split("\t")[1] for line in doc.split("\n") if line.startswith(kind + "\t")]
        assert ids == sorted(ids)


def test_export_is_deterministic():
    state = random_state(random.Random(99))
    assert export_state(state) == export_state(state)


# ----- round trips -----

def test_reference_state_round_trips_exactly():
    state = build_reference_state()
    derive_fixpoint(state.network)
    state.network.recompute_ranks()
    doc = export_state(state)
    again = export_state(import_state(doc))
    assert again == doc


def test_random_states_round_trip_exactly():
    rng = random.Random(2024)
    for i in range(12):
        state = random_state(rng, torture=(i % 2 == 0))
        doc = export_state(state)
        rebuilt = import_state(doc)
        assert export_state(rebuilt) == doc


def test_carriage_return_survives_fields():
    state = new_state()
    state.network.add_node(RepBundle(word="line\rnoise", rep_h="a\rb"), node_id="n1")
    doc = export_state(state)
    rebuilt = import_state(doc)
    node = rebuilt.network.nodes["n1"]
    assert node.rep.word == "line\rnoise"
    assert node.rep.rep_h == "a\rb"


def test_import_accepts_any_record_order():
    state = build_reference_state()
    derive_fixpoint(state.network)
    doc = export_state(state)
    lines = doc.split("\n")
    body = [l for l in lines[1:] if l]
    scrambled = HEADER + "\n" + "\n".join(reversed(body)) + "\n"
    assert export_state(import_state(scrambled)) == doc


def test_transitive_derivations_round_trip():
    state = new_state()
    net = state.network
    for n in ("x", "y", "z"):
        net.add_node(RepBundle(word=n), node_id=n)
    net.add_link_type(RepBundle(word="before"), transitive=True, type_id="before")
    net.assert_link("x", "before", "y")
    net.assert_link("y", "before", "z")
    derive_fixpoint(net)
    doc = export_state(state)
    rebuilt = import_state(doc)
    assert rebuilt.network.has_fact("x", "before", "z")
    derived = [l for l in rebuilt.network.derived_links()]
    assert derived and derived[0].provenance.rule_id == "sys.transitive.before"
    assert export_state(rebuilt) == doc


# ----- import errors -----

def test_duplicate_node_reports_line():
    doc = export_state(minimal_state())
    node_line = next(l for l in doc.split("\n") if l.startswith("NODE\ta\t"))
    broken = doc + node_line + "\n"
    with pytest.raises(DuplicateId) as err:
        import_state(broken)
    assert "line" in str(err.value)
    assert "'a'" in str(err.value)


def test_unknown_kind_reports_line():
    doc = export_state(minimal_state()) + "BLOB\tx\n"
    with pytest.raises(UnknownKind) as err:
        import_state(doc)
    assert err.value.kind == "BLOB"


def test_link_with_missing_endpoint():
    doc = export_state(minimal_state())
    broken = swap(doc, "LINK\tk1\ta\tt\tb", "LINK\tk1\ta\tt\tghost")
    with pytest.raises(DanglingReference) as err:
        import_state(broken)
    assert err.value.ref == "ghost"


def test_link_with_missing_type():
    doc = export_state(minimal_state())
    broken = swap(doc, "LINK\tk1\ta\tt\tb", "LINK\tk1\ta\tnosuch\tb")
    with pytest.raises(DanglingReference):
        import_state(broken)


def test_linktype_with_missing_parent():
    doc = export_state(minimal_state())
    broken = swap(doc, "LINKTYPE\tt\t0\t0\t\t", "LINKTYPE\tt\t0\t0\tmissing\t")
    with pytest.raises(DanglingReference) as err:
        import_state(broken)
    assert err.value.ref == "missing"


def test_derived_link_premise_must_exist():
    state = minimal_state()
    net = state.network
    net.add_link_type(RepBundle(word="u"), type_id="u")
    from ksengine.rules import PatternAtom, Rule

    net.rules["r"] = Rule(
        "r", RepBundle(word="r"),
        (PatternAtom("?x", "t", "?y"),),
        (PatternAtom("?x", "u", "?y"),),
    )
    derive_fixpoint(net)
    doc = export_state(state)
    broken = "\n".join(
        l for l in doc.split("\n") if not l.startswith("LINK\tk1\t")
    )
    with pytest.raises(DanglingReference) as err:
        import_state(broken)
    assert err.value.ref == "k1"


def test_derived_link_rule_must_resolve():
    state = minimal_state()
    net = state.network
    net.add_link_type(RepBundle(word="u"), type_id="u")
    from ksengine.rules import PatternAtom, Rule

    net.rules["r"] = Rule(
        "r", RepBundle(word="r"),
        (PatternAtom("?x", "t", "?y"),),
        (PatternAtom("?x", "u", "?y"),),
    )
    derive_fixpoint(net)
    doc = export_state(state)
    broken = swap(doc, "\tD\tr\t", "\tD\tvanished\t")
    with pytest.raises(DanglingReference):
        import_state(broken)


def test_malformed_records():
    base = HEADER + "\n"
    with pytest.raises(MalformedRecord):
        import_state(base + "NODE\tonlyid\n")
    with pytest.raises(MalformedRecord):
        import_state(base + "NODE\ta\tnotafloat\tS\t\ta\t\t0\t0\n")
    with pytest.raises(MalformedRecord):
        import_state(base + "LINKTYPE\tt\t2\t0\t\tS\t\tt\t\t0\n")
    with pytest.raises(MalformedRecord):
        import_state(base + "DIM\td1\tname\textra\n")


def test_category_owner_must_exist():
    doc = HEADER + "\nCAT\tc1\td9\t\tname\n"
    with pytest.raises(DanglingReference):
        import_state(doc)


def test_dimension_needs_categories():
    doc = HEADER + "\nDIM\td1\taxis\n"
    with pytest.raises(MalformedRecord) as err:
        import_state(doc)
    assert "no categories" in err.value.reason


def test_place_checks_references():
    good = (
        HEADER + "\n"
        "DIM\td1\taxis\n"
        "CAT\tc1\td1\t\troot\n"
    )
    with pytest.raises(DanglingReference):
        import_state(good + "PLACE\tr1\t1\td9\tc1\n")
    with pytest.raises(DanglingReference):
        import_state(good + "PLACE\tr1\t1\td1\tc9\n")
    with pytest.raises(DuplicateId):
        import_state(good + "PLACE\tr1\t1\td1\tc1\nPLACE\tr1\t1\td1\tc1\n")
    with pytest.raises(MalformedRecord):
        import_state(good + "PLACE\tr1\t0\n")  # missing the d1 coordinate


def test_lexeme_candidates_must_exist():
    doc = HEADER + "\nLEXEME\tword\t1\tc999\n"
    with pytest.raises(DanglingReference):
        import_state(doc)


def test_problem_kind_and_evidence_rules():
    base = HEADER + "\n"
    with pytest.raises(MalformedRecord):
        import_state(base + "PROBLEM\tp1\tmystery\ts\t\t0\t0\n")
    with pytest.raises(MalformedRecord) as err:
        import_state(base + "PROBLEM\tp1\tanomaly\ts\t\t0\t0\n")
    assert "evidence" in err.value.reason
    state = import_state(base + "PROBLEM\tp1\tanomaly\ts\t\t1\te1\t0\n")
    assert state.problems["p1"].evidence == ("e1",)


def test_anchor_must_resolve_to_category_or_concept():
    doc = export_state(minimal_state())
    broken = swap(doc, "NODE\ta\t0.0\tS\t\ta\t\t0\t0",
                  "NODE\ta\t0.0\tS\t\ta\t\t1\tnowhere\t0")
    with pytest.raises(DanglingReference) as err:
        import_state(broken)
    assert err.value.ref == "nowhere"


def test_anchor_may_point_at_concept():
    state = minimal_state()
    state.concepts.add_concept("idea", concept_id="idea")
    node = state.network.nodes["a"]
    node.rep = RepBundle(word="a", rep_k=("idea",))
    doc = export_state(state)
    rebuilt = import_state(doc)
    assert rebuilt.network.nodes["a"].rep.rep_k == ("idea",)


# ----- fragment parsers -----

def test_fragment_to_increment_parses_network_records():
    doc = (
        HEADER + "\n"
        "LINKTYPE\tt\t0\t0\t\tS\t\tt\t\t0\n"
        "NODE\ta\t0.0\tS\t\ta\t\t0\t0\n"
        "NODE\tb\t0.0\tS\t\tb\t\t0\t0\n"
        "LINK\tk1\ta\tt\tb\t1.0\tE\n"
        "RULE\tr1\tS\t\tr1\t\t0\t1\t?x\tt\t?y\t1\t?y\tt\t?x\n"
    )
    fragment = fragment_to_increment(doc)
    assert [lt.id for lt in fragment.link_types] == ["t"]
    assert [n.id for n in fragment.nodes] == ["a", "b"]
    assert [l.id for l in fragment.links] == ["k1"]
    assert [r.id for r in fragment.rules] == ["r1"]


def test_fragment_to_increment_rejects_foreign_kinds():
    doc = HEADER + "\nDIM\td1\taxis\n"
    with pytest.raises(MalformedRecord):
        fragment_to_increment(doc)


def test_fragment_to_increment_rejects_derived_links():
    doc = HEADER + "\nLINK\tk1\ta\tt\tb\t1.0\tD\tr\t0\n"
    with pytest.raises(MalformedRecord) as err:
        fragment_to_increment(doc)
    assert "explicit" in err.value.reason


def test_parse_candidates_in_file_order():
    doc = (
        HEADER + "\n"
        "LINK\tk1\ta\tt\tb\t1.0\tE\n"
        "RULE\tr1\tS\t\tr1\t\t0\t1\t?x\tt\t?y\t1\t?y\tt\t?x\n"
        "LINK\tk2\tb\tt\ta\t0.5\tE\n"
    )
    candidates = parse_candidates(doc)
    assert [c.kind for c in candidates] == ["link", "rule", "link"]
    assert candidates[0].payload.source == "a"
    assert candidates[2].payload.weight == 0.5
    with pytest.raises(MalformedRecord):
        parse_candidates(HEADER + "\nNODE\ta\t0.0\tS\t\ta\t\t0\t0\n")


def test_parse_anomaly_rules_round_trip():
    state = new_state()
    net = state.network
    net.add_node(RepBundle(word="a"), node_id="a")
    net.add_link_type(RepBundle(word="t"), type_id="t")
    from ksengine.discovery import AnomalyRule
    from ksengine.rules import PatternAtom

    rule = AnomalyRule("w1", (PatternAtom("?x", "t", "?y"),),
                       "count", "ge", 2.0, "{count} hits")
    state.anomaly_rules[rule.id] = rule
    doc = export_state(state)
    rule_lines = [l for l in doc.split("\n") if l.startswith("ANOMALYRULE\t")]
    fragment = HEADER + "\n" + "\n".join(rule_lines) + "\n"
    parsed = parse_anomaly_rules(fragment)
    assert parsed["w1"] == rule
    with pytest.raises(MalformedRecord):
        parse_anomaly_rules(HEADER + "\nDIM\td\tx\n")
    with pytest.raises(DuplicateId):
        parse_anomaly_rules(fragment + rule_lines[0] + "\n")


def concept_record(concept_id: str, name: str) -> str:
    scratch = new_state()
    scratch.concepts.add_concept(name, concept_id=concept_id)
    doc = export_state(scratch)
    return next(l for l in doc.split("\n") if l.startswith("CONCEPT\t"))


def test_merge_lexicon_fragment_adds_and_validates():
    state = new_state()
    state.concepts.add_concept("old", concept_id="old")
    fragment = (
        HEADER + "\n"
        + concept_record("fresh", "new idea") + "\n"
        + "LEXEME\tidea\t2\tfresh\told\n"
    )
    added = merge_lexicon_fragment(state, fragment)
    assert added == (1, 1)
    assert "fresh" in state.concepts
    assert state.lexicon.candidates("idea") == ["fresh", "old"]
    with pytest.raises(MalformedRecord):
        merge_lexicon_fragment(state, HEADER + "\nDIM\td\tx\n")
    with pytest.raises(DanglingReference):
        merge_lexicon_fragment(state, HEADER + "\nLEXEME\tword\t1\tghost\n")
    with pytest.raises(DuplicateId):
        merge_lexicon_fragment(
            state, HEADER + "\n" + concept_record("old", "again") + "\n"
        )


def test_space_fragment_round_trip():
    rng = random.Random(7)
    for _ in range(8):
        space = random_space(rng, max_resources=10, torture=True)
        doc = export_space_fragment(space)
        rebuilt = import_state(doc)
        assert export_space_fragment(rebuilt.space) == doc
