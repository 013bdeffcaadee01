"""Rooted category trees, shared by the semantic network and the space module."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

from .errors import (
    DanglingReference,
    DuplicateId,
    MalformedTree,
    MultipleRoots,
)


@dataclass
class CategoryNode:
    id: str
    name: str
    parent: Optional[str]  # None marks the root


class CategoryTree:
    """A single-rooted tree of named categories.

    Sibling name uniqueness is deliberately NOT enforced here: duplicate
    sibling names are a reportable normal-form violation, not a construction
    error.
    """

    def __init__(self) -> None:
        self._nodes: Dict[str, CategoryNode] = {}
        self.root: Optional[str] = None

    def __contains__(self, cat_id: str) -> bool:
        return cat_id in self._nodes

    def __len__(self) -> int:
        return len(self._nodes)

    def get(self, cat_id: str) -> CategoryNode:
        return self._nodes[cat_id]

    def ids(self) -> List[str]:
        return sorted(self._nodes)

    def add(self, cat_id: str, name: str, parent: Optional[str]) -> CategoryNode:
        if cat_id in self._nodes:
            raise DuplicateId(f"category {cat_id!r} already exists")
        if parent is None:
            if self.root is not None:
                raise MultipleRoots(
                    f"tree already rooted at {self.root!r}, cannot add root {cat_id!r}"
                )
            self.root = cat_id
        elif parent not in self._nodes:
            raise DanglingReference(parent, f"parent of category {cat_id!r}")
        node = CategoryNode(cat_id, name, parent)
        self._nodes[cat_id] = node
        return node

    def parent(self, cat_id: str) -> Optional[str]:
        return self._nodes[cat_id].parent

    def children(self, cat_id: str) -> List[str]:
        return sorted(c.id for c in self._nodes.values() if c.parent == cat_id)

    def is_within(self, cat_id: str, ancestor: str) -> bool:
        """True when cat_id equals ancestor or sits below it."""
        cur: Optional[str] = cat_id
        while cur is not None:
            if cur == ancestor:
                return True
            cur = self._nodes[cur].parent
        return False

    def depth(self, cat_id: str) -> int:
        d = 0
        cur = self._nodes[cat_id].parent
        while cur is not None:
            d += 1
            cur = self._nodes[cur].parent
        return d

    def topological_ids(self) -> List[str]:
        """Ids in parent-before-child order (root first, siblings sorted)."""
        if self.root is None:
            return []
        out: List[str] = []
        stack = [self.root]
        while stack:
            cur = stack.pop()
            out.append(cur)
            stack.extend(reversed(self.children(cur)))
        return out

    def to_rows(self) -> List[Tuple[str, Optional[str], str]]:
        return [
            (n.id, n.parent, n.name)
            for n in sorted(self._nodes.values(), key=lambda n: n.id)
        ]

    @classmethod
    def from_rows(
        cls,
        rows,
        missing_parent_error=MalformedTree,
    ) -> "CategoryTree":
        """Build a tree from (id, parent_or_None, name) rows in any order.

        Raises MultipleRoots for a second root, MalformedTree for an empty or
        disconnected structure, and missing_parent_error for an absent parent.
        """
        rows = list(rows)
        if not rows:
            return cls()
        by_id = {}
        root = None
        for cat_id, parent, name in rows:
            if cat_id in by_id:
                raise DuplicateId(f"category {cat_id!r} defined twice")
            by_id[cat_id] = (parent, name)
            if parent is None:
                if root is not None:
                    raise MultipleRoots(f"both {root!r} and {cat_id!r} are roots")
                root = cat_id
        if root is None:
            raise MalformedTree("no root category (every node has a parent)")
        for cat_id, (parent, _name) in by_id.items():
            if parent is not None and parent not in by_id:
                if missing_parent_error is DanglingReference:
                    raise DanglingReference(parent, f"parent of category {cat_id!r}")
                raise missing_parent_error(
                    f"category {cat_id!r} references missing parent {parent!r}"
                )
        # Everything must hang off the root; a stray cycle is unreachable.
        reachable = {root}
        frontier = [root]
        children: Dict[str, List[str]] = {}
        for cat_id, (parent, _name) in by_id.items():
            if parent is not None:
                children.setdefault(parent, []).append(cat_id)
        while frontier:
            cur = frontier.pop()
            for child in children.get(cur, ()):
                if child not in reachable:
                    reachable.add(child)
                    frontier.append(child)
        if len(reachable) != len(by_id):
            stray = sorted(set(by_id) - reachable)
            raise MalformedTree(f"categories not reachable from root: {stray}")
        tree = cls()
        tree.add(root, by_id[root][1], None)
        pending = sorted(set(by_id) - {root})
        while pending:
            progressed = []
            for cat_id in pending:
                parent, name = by_id[cat_id]
                if parent in tree:
                    tree.add(cat_id, name, parent)
                    progressed.append(cat_id)
            pending = [c for c in pending if c not in set(progressed)]
        return tree
