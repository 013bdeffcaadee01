"""Typed semantic link networks.

Nodes and link types carry a three-level representation bundle: a machine
scalar, a natural-language word and sentence, and a set of anchor ids tying the
entry into a category hierarchy. Links are explicit (asserted) or derived
(recorded by the rule engine with their provenance). Symmetric link types are
stored once and completed at query time; transitive types behave like an
implicit chain rule (the rule engine synthesizes it).

All mutation goes through the public methods so the connection index stays a
pure function of the link set, and identical operation sequences on empty
networks produce identical canonical exports.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Set, Tuple, Union

from .errors import (
    CannotRetractDerived,
    CyclicHierarchy,
    DuplicateExplicitLink,
    DuplicateId,
    InvalidId,
    InvalidRep,
    MalformedPattern,
    NegativeWeight,
    UnknownLink,
    UnknownLinkType,
    UnknownNode,
)
from .taxonomy import CategoryTree

ID_PATTERN = re.compile(r"^[A-Za-z0-9_.\-]+$")

Scalar = Union[str, int, float]


def check_id(token: str, what: str = "id") -> str:
    if not isinstance(token, str) or not ID_PATTERN.match(token):
        raise InvalidId(f"{what} {token!r} must match [A-Za-z0-9_.-]+")
    return token


@dataclass(frozen=True)
class FileRef:
    """Machine representation pointing at an external file."""

    path: str


@dataclass(frozen=True)
class ClassRef:
    """Machine representation naming a class of entities."""

    name: str


RepValue = Union[str, int, float, FileRef, ClassRef]


@dataclass
class RepBundle:
    """Three-level representation: machine scalar, words, and anchor ids.

    word must be non-empty; rep_k anchors are kept in first-seen order with
    duplicates dropped. Anchor resolution (to categories or concepts) is a
    validation-time concern, not a construction-time one.
    """

    word: str
    rep_c: RepValue = ""
    rep_h: str = ""
    rep_k: Tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if not isinstance(self.word, str) or self.word == "":
            raise InvalidRep("word must be a non-empty string")
        if not isinstance(self.rep_c, (str, int, float, FileRef, ClassRef)) or isinstance(
            self.rep_c, bool
        ):
            raise InvalidRep(f"unsupported machine scalar {self.rep_c!r}")
        seen = []
        for anchor in self.rep_k:
            check_id(anchor, "anchor")
            if anchor not in seen:
                seen.append(anchor)
        object.__setattr__(self, "rep_k", tuple(seen))


def _check_scalar(value: Scalar, what: str) -> Scalar:
    if isinstance(value, bool) or not isinstance(value, (str, int, float)):
        raise InvalidRep(f"{what} must be text, integer, or real, got {value!r}")
    return value


@dataclass
class SemanticNode:
    id: str
    rep: RepBundle
    attributes: Dict[str, Scalar] = field(default_factory=dict)
    rank: float = 0.0


@dataclass
class LinkType:
    id: str
    rep: RepBundle
    transitive: bool = False
    symmetric: bool = False
    parent: Optional[str] = None


@dataclass(frozen=True)
class Explicit:
    """Provenance of an asserted link."""


@dataclass(frozen=True)
class Derived:
    """Provenance of a rule-derived link."""

    rule_id: str
    premises: Tuple[str, ...]


Provenance = Union[Explicit, Derived]


@dataclass
class SemanticLink:
    id: str
    source: str
    type: str
    target: str
    weight: float
    provenance: Provenance

    @property
    def is_explicit(self) -> bool:
        return isinstance(self.provenance, Explicit)

    def triple(self) -> Tuple[str, str, str]:
        return (self.source, self.type, self.target)


@dataclass(frozen=True)
class QueryPattern:
    """A link query with exactly one hole (None) among the three fields."""

    source: Optional[str]
    type: Optional[str]
    target: Optional[str]

    def __post_init__(self) -> None:
        holes = [self.source, self.type, self.target].count(None)
        if holes != 1:
            raise MalformedPattern(
                f"pattern must have exactly one hole, found {holes}"
            )


_PATTERN_RE = re.compile(r"^\(\s*([^\s,()]+)\s*,\s*([^\s,()]+)\s*,\s*([^\s,()]+)\s*\)$")


def parse_pattern(text: str) -> QueryPattern:
    """Parse "(a, T, ?)" style pattern text; "?" marks the single hole."""
    m = _PATTERN_RE.match(text.strip())
    if not m:
        raise MalformedPattern(f"cannot parse pattern {text!r}")
    parts: List[Optional[str]] = []
    for piece in m.groups():
        if piece == "?":
            parts.append(None)
        elif ID_PATTERN.match(piece):
            parts.append(piece)
        else:
            raise MalformedPattern(f"bad pattern field {piece!r}")
    return QueryPattern(parts[0], parts[1], parts[2])


class Network:
    """A semantic link network with nodes, typed links, and attached rules."""

    def __init__(self) -> None:
        self.nodes: Dict[str, SemanticNode] = {}
        self.link_types: Dict[str, LinkType] = {}
        self.links: Dict[str, SemanticLink] = {}
        self.categories = CategoryTree()
        self.rules: Dict[str, object] = {}  # rule id -> rules.Rule
        self.derivation_index: Dict[str, list] = {}  # link id -> [Derivation]
        self._index: Dict[Tuple[str, str], Set[str]] = {}
        self._counters: Dict[str, int] = {}

    # ===== id management =====

    def _fresh_id(self, prefix: str, taken: Dict[str, object]) -> str:
        n = self._counters.get(prefix, 1)
        while f"{prefix}{n:06d}" in taken:
            n += 1
        self._counters[prefix] = n + 1
        return f"{prefix}{n:06d}"

    # ===== nodes and types =====

    def add_node(
        self,
        rep: RepBundle,
        attributes: Optional[Dict[str, Scalar]] = None,
        node_id: Optional[str] = None,
    ) -> str:
        if node_id is None:
            node_id = self._fresh_id("n", self.nodes)
        else:
            check_id(node_id, "node id")
            if node_id in self.nodes:
                raise DuplicateId(f"node {node_id!r} already exists")
        attrs: Dict[str, Scalar] = {}
        for label, value in (attributes or {}).items():
            if not isinstance(label, str) or label == "":
                raise InvalidRep(f"attribute label {label!r} must be non-empty text")
            attrs[label] = _check_scalar(value, f"attribute {label!r}")
        self.nodes[node_id] = SemanticNode(node_id, rep, attrs, 0.0)
        return node_id

    def add_link_type(
        self,
        rep: RepBundle,
        transitive: bool = False,
        symmetric: bool = False,
        parent: Optional[str] = None,
        type_id: Optional[str] = None,
    ) -> str:
        if type_id is None:
            type_id = self._fresh_id("t", self.link_types)
        else:
            check_id(type_id, "link-type id")
            if type_id in self.link_types:
                raise DuplicateId(f"link type {type_id!r} already exists")
        if parent is not None and parent not in self.link_types:
            raise UnknownLinkType(f"parent link type {parent!r} not found")
        self.link_types[type_id] = LinkType(type_id, rep, transitive, symmetric, parent)
        return type_id

    def set_type_parent(self, type_id: str, parent: Optional[str]) -> None:
        """Re-wire a type's parent, keeping the parent chain acyclic."""
        lt = self.link_type(type_id)
        if parent is not None:
            if parent not in self.link_types:
                raise UnknownLinkType(f"parent link type {parent!r} not found")
            cur: Optional[str] = parent
            while cur is not None:
                if cur == type_id:
                    raise CyclicHierarchy(
                        f"setting parent of {type_id!r} to {parent!r} creates a cycle"
                    )
                cur = self.link_types[cur].parent
        lt.parent = parent

    def node(self, node_id: str) -> SemanticNode:
        try:
            return self.nodes[node_id]
        except KeyError:
            raise UnknownNode(f"node {node_id!r} not found") from None

    def link_type(self, type_id: str) -> LinkType:
        try:
            return self.link_types[type_id]
        except KeyError:
            raise UnknownLinkType(f"link type {type_id!r} not found") from None

    def link(self, link_id: str) -> SemanticLink:
        try:
            return self.links[link_id]
        except KeyError:
            raise UnknownLink(f"link {link_id!r} not found") from None

    # ===== link store =====

    def _index_add(self, link: SemanticLink) -> None:
        self._index.setdefault((link.source, link.target), set()).add(link.id)

    def _index_remove(self, link: SemanticLink) -> None:
        key = (link.source, link.target)
        bucket = self._index.get(key)
        if bucket is not None:
            bucket.discard(link.id)
            if not bucket:
                del self._index[key]

    def _find_stored(self, source: str, type_id: str, target: str) -> Optional[SemanticLink]:
        """Stored link answering the triple, honoring symmetric completion."""
        for lid in self._index.get((source, target), ()):
            link = self.links[lid]
            if link.type == type_id:
                return link
        if self.link_types[type_id].symmetric:
            for lid in self._index.get((target, source), ()):
                link = self.links[lid]
                if link.type == type_id:
                    return link
        return None

    def assert_link(
        self,
        source: str,
        type_id: str,
        target: str,
        weight: float = 1.0,
        link_id: Optional[str] = None,
    ) -> str:
        """Assert an explicit link; returns the link id.

        If the triple already exists as a derived link, that link is upgraded
        to explicit in place (same id) so provenance references stay valid.
        """
        if source not in self.nodes:
            raise UnknownNode(f"node {source!r} not found")
        if target not in self.nodes:
            raise UnknownNode(f"node {target!r} not found")
        if type_id not in self.link_types:
            raise UnknownLinkType(f"link type {type_id!r} not found")
        if not (isinstance(weight, (int, float)) and not isinstance(weight, bool) and weight >= 0):
            raise NegativeWeight(f"weight must be >= 0, got {weight!r}")
        weight = float(weight)
        existing = self._find_stored(source, type_id, target)
        if existing is not None:
            if existing.is_explicit:
                raise DuplicateExplicitLink(
                    f"explicit {existing.triple()} already stored as {existing.id!r}"
                )
            # Upgrade the derived link in place.
            if link_id is not None and link_id != existing.id:
                raise DuplicateId(
                    f"triple already stored as {existing.id!r}, cannot use {link_id!r}"
                )
            existing.provenance = Explicit()
            existing.weight = weight
            self.derivation_index.pop(existing.id, None)
            return existing.id
        if link_id is None:
            link_id = self._fresh_id("k", self.links)
        else:
            check_id(link_id, "link id")
            if link_id in self.links:
                raise DuplicateId(f"link {link_id!r} already exists")
        link = SemanticLink(link_id, source, type_id, target, weight, Explicit())
        self.links[link_id] = link
        self._index_add(link)
        return link_id

    def add_derived(
        self,
        source: str,
        type_id: str,
        target: str,
        weight: float,
        provenance: Derived,
        link_id: Optional[str] = None,
    ) -> str:
        """Record a rule-derived link (used by the rule engine and import)."""
        if source not in self.nodes or target not in self.nodes:
            raise UnknownNode(f"derived link endpoint missing: {source!r}/{target!r}")
        if type_id not in self.link_types:
            raise UnknownLinkType(f"link type {type_id!r} not found")
        if self._find_stored(source, type_id, target) is not None:
            raise DuplicateId(f"triple ({source}, {type_id}, {target}) already stored")
        if link_id is None:
            link_id = self._fresh_id("k", self.links)
        else:
            check_id(link_id, "link id")
            if link_id in self.links:
                raise DuplicateId(f"link {link_id!r} already exists")
        link = SemanticLink(link_id, source, type_id, target, float(weight), provenance)
        self.links[link_id] = link
        self._index_add(link)
        return link_id

    def retract_link(self, link_id: str) -> List[str]:
        """Remove an explicit link plus every derived link leaning on it.

        Returns the removed link ids (the retracted one first). Re-derivation
        of alternately supported facts is the rule engine's job; see
        rules.retract_with_maintenance for the maintained variant.
        """
        link = self.link(link_id)
        if not link.is_explicit:
            raise CannotRetractDerived(f"link {link_id!r} is derived")
        removed = {link_id}
        # Over-delete: walk the stored-provenance dependency closure.
        changed = True
        while changed:
            changed = False
            for other in self.links.values():
                if other.id in removed or other.is_explicit:
                    continue
                if any(p in removed for p in other.provenance.premises):
                    removed.add(other.id)
                    changed = True
        for rid in removed:
            gone = self.links.pop(rid)
            self._index_remove(gone)
            self.derivation_index.pop(rid, None)
        # Drop recorded alternate derivations that referenced removed links.
        for lid, derivations in list(self.derivation_index.items()):
            kept = [d for d in derivations if not (set(d.premises) & removed)]
            if kept:
                self.derivation_index[lid] = kept
            else:
                del self.derivation_index[lid]
        return sorted(removed, key=lambda r: (r != link_id, r))

    # ===== queries =====

    def links_between(self, source: str, target: str) -> List[SemanticLink]:
        self.node(source)
        self.node(target)
        found: Dict[str, SemanticLink] = {}
        for lid in self._index.get((source, target), ()):
            found[lid] = self.links[lid]
        for lid in self._index.get((target, source), ()):
            link = self.links[lid]
            if self.link_types[link.type].symmetric:
                found[lid] = link
        return [found[lid] for lid in sorted(found)]

    def has_fact(self, source: str, type_id: str, target: str) -> bool:
        if type_id not in self.link_types:
            return False
        return self._find_stored(source, type_id, target) is not None

    def type_facts(self, type_id: str) -> List[Tuple[str, str, str]]:
        """(source, target, link id) rows for one type, symmetric view included."""
        rows = []
        symmetric = self.link_types[type_id].symmetric
        for link in self.links.values():
            if link.type != type_id:
                continue
            rows.append((link.source, link.target, link.id))
            if symmetric and link.source != link.target:
                rows.append((link.target, link.source, link.id))
        rows.sort()
        return rows

    def answer_query(self, pattern: QueryPattern) -> List[str]:
        """Bindings for the pattern's hole, ascending, duplicates removed."""
        if pattern.source is not None:
            self.node(pattern.source)
        if pattern.target is not None:
            self.node(pattern.target)
        if pattern.type is not None:
            self.link_type(pattern.type)
        out: Set[str] = set()
        if pattern.type is None:
            assert pattern.source is not None and pattern.target is not None
            for link in self.links_between(pattern.source, pattern.target):
                out.add(link.type)
        else:
            for s, t, _lid in self.type_facts(pattern.type):
                if pattern.source is None and t == pattern.target:
                    out.add(s)
                elif pattern.target is None and s == pattern.source:
                    out.add(t)
        return sorted(out)

    # ===== ranks =====

    def recompute_ranks(self) -> Dict[str, float]:
        """Rank nodes by normalized weighted in-degree over stored links.

        Falls back to the uniform distribution when the total incoming weight
        is zero; ranks always sum to 1 on a non-empty network.
        """
        incoming = {nid: 0.0 for nid in self.nodes}
        for link in self.links.values():
            incoming[link.target] += link.weight
        total = sum(incoming.values())
        ranks: Dict[str, float] = {}
        for nid in sorted(self.nodes):
            if total > 0:
                ranks[nid] = incoming[nid] / total
            else:
                ranks[nid] = 1.0 / len(self.nodes)
            self.nodes[nid].rank = ranks[nid]
        return ranks

    # ===== maintenance helpers =====

    def explicit_links(self) -> List[SemanticLink]:
        return [self.links[lid] for lid in sorted(self.links) if self.links[lid].is_explicit]

    def derived_links(self) -> List[SemanticLink]:
        return [
            self.links[lid] for lid in sorted(self.links) if not self.links[lid].is_explicit
        ]

    def brute_index(self) -> Dict[Tuple[str, str], Set[str]]:
        """Reference grouping of link ids by endpoint pair (for index checks)."""
        grouped: Dict[Tuple[str, str], Set[str]] = {}
        for link in self.links.values():
            grouped.setdefault((link.source, link.target), set()).add(link.id)
        return grouped


def iter_anchor_ids(network: Network) -> Iterable[str]:
    """All anchor ids referenced by node and type bundles (for validation)."""
    for node in network.nodes.values():
        yield from node.rep.rep_k
    for lt in network.link_types.values():
        yield from lt.rep.rep_k
