"""Interned, append-only label sequences.

Beam hypotheses share long prefixes and must support O(1) "same
sentence?" and "is X my prefix?" checks across tens of thousands of
steps. Sentences are therefore hash-consed cons cells: every distinct
label sequence is represented by exactly one live node, so content
equality is object identity and extending by one label never copies.

Children are cached through weak references; sequences dropped by every
beam are garbage collected together with their cache entries.
"""

from __future__ import annotations

import weakref


class Sentence:
    """One label sequence; create children via :meth:`child` only."""

    __slots__ = ("label", "parent", "length", "_children", "__weakref__")

    def __init__(self, label: int, parent: "Sentence | None", length: int):
        self.label = label
        self.parent = parent
        self.length = length
        self._children: dict[int, weakref.ref] = {}

    def child(self, label: int) -> "Sentence":
        ref = self._children.get(label)
        if ref is not None:
            node = ref()
            if node is not None:
                return node
        node = Sentence(label, self, self.length + 1)
        self._children[label] = weakref.ref(node)
        return node

    def last_label(self) -> int:
        """Final label id, 0 for the empty sentence."""
        return self.label

    def to_labels(self) -> list[int]:
        out = []
        node = self
        while node.parent is not None:
            out.append(node.label)
            node = node.parent
        out.reverse()
        return out

    def __repr__(self):
        return f"Sentence({self.to_labels()})"


EMPTY = Sentence(0, None, 0)


def from_labels(labels) -> Sentence:
    node = EMPTY
    for label in labels:
        node = node.child(label)
    return node
