"""Concept networks grown from category imports and active text reading.

A concept bundles five compartments: structure (attributes, classes,
instances, relations), services (interfaces, processes), experiences
(use cases, objects, events), rules, and sense (media, language). Reading a
token stream resolves words through a lexicon, disambiguating by connectivity
to recently active concepts and to the reader's goals; relation words create
typed links between neighboring entity concepts while plain mentions
strengthen windowed co-occurrence links.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple, Union

from .errors import (
    CyclicHierarchy,
    DuplicateId,
    TooFewConcepts,
    UnknownCompartment,
    UnknownConcept,
)
from .sln import Scalar, check_id
from .taxonomy import CategoryTree

COOCCUR_LABEL = "co-occur"


@dataclass
class ConceptStructure:
    attributes: Dict[str, Scalar] = field(default_factory=dict)
    classes: List[str] = field(default_factory=list)
    instances: List[str] = field(default_factory=list)
    relations: Dict[Tuple[str, str], float] = field(default_factory=dict)


@dataclass
class ConceptServices:
    interfaces: List[str] = field(default_factory=list)
    processes: List[Tuple[str, ...]] = field(default_factory=list)


@dataclass
class ConceptExperiences:
    use_cases: List[str] = field(default_factory=list)
    objects: List[str] = field(default_factory=list)
    events: List[str] = field(default_factory=list)


@dataclass
class ConceptSense:
    media: List[str] = field(default_factory=list)
    language: List[str] = field(default_factory=list)


@dataclass
class Concept:
    id: str
    name: str
    priori: bool = False
    link_type: Optional[str] = None  # set when this word denotes a relation
    structure: ConceptStructure = field(default_factory=ConceptStructure)
    services: ConceptServices = field(default_factory=ConceptServices)
    experiences: ConceptExperiences = field(default_factory=ConceptExperiences)
    rules: List[str] = field(default_factory=list)
    sense: ConceptSense = field(default_factory=ConceptSense)


class Lexicon:
    """word -> ordered candidate concept ids; order is the tie-break priority."""

    def __init__(self) -> None:
        self._entries: Dict[str, List[str]] = {}

    def add(self, word: str, concept_id: str) -> None:
        if not word:
            raise ValueError("lexicon words must be non-empty")
        check_id(concept_id, "concept id")
        bucket = self._entries.setdefault(word, [])
        if concept_id not in bucket:
            bucket.append(concept_id)

    def set_candidates(self, word: str, candidates: Sequence[str]) -> None:
        if not candidates:
            raise ValueError(f"candidate list for {word!r} must be non-empty")
        self._entries[word] = list(dict.fromkeys(candidates))

    def candidates(self, word: str) -> List[str]:
        return list(self._entries.get(word, ()))

    def words(self) -> List[str]:
        return sorted(self._entries)

    def __contains__(self, word: str) -> bool:
        return word in self._entries

    def __len__(self) -> int:
        return len(self._entries)


class Scale(Enum):
    SMALL = "small"    # the sliding window around the current token
    MIDDLE = "middle"  # the text being read
    LARGE = "large"    # everything read so far (the concept network)


@dataclass
class ObservationScope:
    """The reading window [center - radius, center + radius], clipped."""

    center: int
    radius: int
    length: int

    def __post_init__(self) -> None:
        if self.radius < 1:
            raise ValueError("radius must be >= 1")

    @property
    def window(self) -> range:
        lo = max(0, self.center - self.radius)
        hi = min(self.length - 1, self.center + self.radius)
        return range(lo, hi + 1)


@dataclass
class TraceEvent:
    position: int
    token: str
    action: str  # resolved | skipped | relation | relation-dropped
    concept: Optional[str] = None
    detail: str = ""


@dataclass
class ReadSummary:
    tokens: int = 0
    resolved: int = 0
    skipped: int = 0
    relations_created: int = 0
    cooccurrence_updates: int = 0


@dataclass
class ReadTrace:
    events: List[TraceEvent] = field(default_factory=list)
    summary: ReadSummary = field(default_factory=ReadSummary)


class ConceptStore:
    """All concepts known to the engine, with class and relation links."""

    def __init__(self) -> None:
        self.concepts: Dict[str, Concept] = {}
        self._counter = 1

    def __contains__(self, concept_id: str) -> bool:
        return concept_id in self.concepts

    def __len__(self) -> int:
        return len(self.concepts)

    def get(self, concept_id: str) -> Concept:
        try:
            return self.concepts[concept_id]
        except KeyError:
            raise UnknownConcept(f"concept {concept_id!r} not found") from None

    def ids(self) -> List[str]:
        return sorted(self.concepts)

    def add_concept(
        self,
        name: str,
        concept_id: Optional[str] = None,
        priori: bool = False,
        link_type: Optional[str] = None,
    ) -> Concept:
        if concept_id is None:
            while f"c{self._counter:06d}" in self.concepts:
                self._counter += 1
            concept_id = f"c{self._counter:06d}"
            self._counter += 1
        else:
            check_id(concept_id, "concept id")
            if concept_id in self.concepts:
                raise DuplicateId(f"concept {concept_id!r} already exists")
        concept = Concept(concept_id, name, priori=priori, link_type=link_type)
        self.concepts[concept_id] = concept
        return concept

    def add_class_link(self, child_id: str, parent_id: str) -> None:
        child = self.get(child_id)
        self.get(parent_id)
        if parent_id in child.structure.classes:
            return
        if self.is_class_ancestor(child_id, parent_id):
            raise CyclicHierarchy(
                f"{parent_id!r} already specializes {child_id!r}; link would loop"
            )
        child.structure.classes.append(parent_id)

    def is_class_ancestor(self, ancestor: str, concept_id: str) -> bool:
        """True when ancestor is reachable from concept_id via class links."""
        seen: Set[str] = set()
        stack = [concept_id]
        while stack:
            cur = stack.pop()
            if cur == ancestor:
                return True
            if cur in seen:
                continue
            seen.add(cur)
            stack.extend(self.concepts[cur].structure.classes)
        return False

    def add_relation(
        self, source: str, label: str, target: str, increment: float = 1.0
    ) -> float:
        src = self.get(source)
        self.get(target)
        key = (label, target)
        src.structure.relations[key] = src.structure.relations.get(key, 0.0) + increment
        return src.structure.relations[key]

    def relation_weight(self, source: str, label: str, target: str) -> float:
        return self.get(source).structure.relations.get((label, target), 0.0)

    def link_count_to(self, concept_id: str, others: Set[str]) -> int:
        """Number of class/relation edges joining concept_id to any of others."""
        if not others or concept_id not in self.concepts:
            return 0
        concept = self.concepts[concept_id]
        count = 0
        for parent in concept.structure.classes:
            if parent in others:
                count += 1
        for (_label, target) in concept.structure.relations:
            if target in others:
                count += 1
        for other_id in others:
            other = self.concepts.get(other_id)
            if other is None or other_id == concept_id:
                continue
            if concept_id in other.structure.classes:
                count += 1
            for (_label, target) in other.structure.relations:
                if target == concept_id:
                    count += 1
        return count

    def copy(self) -> "ConceptStore":
        return copy.deepcopy(self)


def import_category_hierarchy(
    store: ConceptStore, rows: Iterable[Tuple[str, Optional[str], str]]
) -> List[str]:
    """Create one concept per category row (id, parent_or_None, name).

    Child concepts get a class link to their parent's concept; the root is
    marked priori. Returns the created concept ids in creation order.
    """
    tree = CategoryTree.from_rows(rows)
    created: List[str] = []
    for cat_id in tree.topological_ids():
        node = tree.get(cat_id)
        store.add_concept(node.name, concept_id=cat_id, priori=node.parent is None)
        created.append(cat_id)
    for cat_id in tree.topological_ids():
        parent = tree.get(cat_id).parent
        if parent is not None:
            store.add_class_link(cat_id, parent)
    return created


def read_text(
    store: ConceptStore,
    tokens: Sequence[str],
    lexicon: Lexicon,
    goals: Iterable[str] = (),
    radius: int = 2,
) -> ReadTrace:
    """Scan tokens left to right, growing the concept network.

    Each token with lexicon candidates resolves to the candidate with the most
    links to concepts active in the observation scope plus the goal set (ties
    fall back to lexicon order). Relation-word concepts open a pending typed
    relation from the nearest preceding entity concept, completed by the next
    entity concept; entity mentions strengthen co-occurrence links with the
    distinct entity concepts resolved inside the window. Deterministic.
    """
    goal_set = set(goals)
    trace = ReadTrace()
    trace.summary.tokens = len(tokens)
    resolved: List[Tuple[int, str, bool]] = []  # (position, concept, is_relation)
    pending: List[Tuple[int, str, Optional[str]]] = []  # (pos, label, source)
    for position, token in enumerate(tokens):
        scope = ObservationScope(position, radius, len(tokens))
        candidates = [c for c in lexicon.candidates(token) if c in store]
        if not candidates:
            reason = "no lexicon entry" if token not in lexicon else "no known candidate"
            trace.events.append(TraceEvent(position, token, "skipped", detail=reason))
            trace.summary.skipped += 1
            continue
        active = {
            cid for (pos, cid, _rel) in resolved
            if pos in scope.window and pos < position
        }
        context = active | goal_set
        best = candidates[0]
        best_score = store.link_count_to(best, context)
        for candidate in candidates[1:]:
            score = store.link_count_to(candidate, context)
            if score > best_score:
                best, best_score = candidate, score
        concept = store.get(best)
        trace.events.append(
            TraceEvent(position, token, "resolved", concept=best,
                       detail=f"score={best_score}")
        )
        trace.summary.resolved += 1
        if concept.link_type is not None:
            source = next(
                (cid for (pos, cid, rel) in reversed(resolved) if not rel), None
            )
            pending.append((position, concept.link_type, source))
            resolved.append((position, best, True))
            continue
        partners = sorted(
            {
                cid for (pos, cid, rel) in resolved
                if pos in scope.window and pos < position and not rel and cid != best
            }
        )
        for partner in partners:
            lo, hi = sorted((best, partner))
            store.add_relation(lo, COOCCUR_LABEL, hi, 1.0)
            trace.summary.cooccurrence_updates += 1
        for (rel_pos, label, source) in pending:
            if source is None:
                trace.events.append(
                    TraceEvent(rel_pos, tokens[rel_pos], "relation-dropped",
                               detail=f"no preceding entity for {label!r}")
                )
                continue
            store.add_relation(source, label, best, 1.0)
            trace.summary.relations_created += 1
            trace.events.append(
                TraceEvent(rel_pos, tokens[rel_pos], "relation",
                           concept=best, detail=f"{source} -{label}-> {best}")
            )
        pending.clear()
        resolved.append((position, best, False))
    for (rel_pos, label, _source) in pending:
        trace.events.append(
            TraceEvent(rel_pos, tokens[rel_pos], "relation-dropped",
                       detail=f"no following entity for {label!r}")
        )
    return trace


def generalize_concepts(store: ConceptStore, concept_ids: Sequence[str]) -> Concept:
    """Create a common parent holding the shared attributes of the inputs."""
    ids = list(concept_ids)
    if len(ids) < 2:
        raise TooFewConcepts(f"need at least two concepts, got {len(ids)}")
    members = [store.get(cid) for cid in ids]
    shared: Dict[str, Scalar] = {}
    first = members[0]
    for label, value in first.structure.attributes.items():
        if all(m.structure.attributes.get(label) == value for m in members[1:]):
            shared[label] = value
    parent = store.add_concept("+".join(sorted(m.name for m in members)))
    parent.structure.attributes = dict(shared)
    for cid in ids:
        store.add_class_link(cid, parent.id)
    return parent


_LIST_COMPARTMENTS = {
    "instance": lambda c: c.structure.instances,
    "interface": lambda c: c.services.interfaces,
    "use_case": lambda c: c.experiences.use_cases,
    "object": lambda c: c.experiences.objects,
    "event": lambda c: c.experiences.events,
    "rule": lambda c: c.rules,
    "media": lambda c: c.sense.media,
    "language": lambda c: c.sense.language,
}


def enrich_concept(
    store: ConceptStore,
    concept_id: str,
    records: Iterable[Tuple[str, object]],
) -> Concept:
    """Append entries to a concept's compartments, collapsing duplicates.

    Records are (compartment, payload) pairs: "attribute" takes (label, value),
    "process" takes a step sequence, "relation" takes (label, target), and the
    list compartments (instance, interface, use_case, object, event, rule,
    media, language) take one text entry each.
    """
    concept = store.get(concept_id)
    for compartment, payload in records:
        if compartment == "attribute":
            label, value = payload  # type: ignore[misc]
            concept.structure.attributes[str(label)] = value  # type: ignore[assignment]
        elif compartment == "process":
            steps = tuple(str(s) for s in payload)  # type: ignore[arg-type]
            if steps not in concept.services.processes:
                concept.services.processes.append(steps)
        elif compartment == "relation":
            label, target = payload  # type: ignore[misc]
            key = (str(label), str(target))
            store.get(key[1])
            if key not in concept.structure.relations:
                concept.structure.relations[key] = 1.0
        elif compartment in _LIST_COMPARTMENTS:
            bucket = _LIST_COMPARTMENTS[compartment](concept)
            entry = str(payload)
            if entry not in bucket:
                bucket.append(entry)
        else:
            raise UnknownCompartment(f"no compartment named {compartment!r}")
    return concept
