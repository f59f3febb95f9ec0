"""Transition queries against a compiled dictionary.

Given the trie address of the last consumed character of the current
partial word (``dict_ptr``, root = "between words"), one sibling-chain
walk yields, for every label, whether appending it keeps the sentence
inside the dictionary, and if so the successor address.

The walk reads at most K-1 records: either the pointed-at node flags
its only child as the separator, or the chain of char children is
scanned in ascending label order, advancing by the stored relative
offsets. A chain ending in 0 forbids the separator; a chain ending in
the sentinel allows it (the partial word is complete). Allowing the
separator always hands back the root address, which is how decoding
wraps around to the next word.
"""

from __future__ import annotations

from dataclasses import dataclass

from .dictionary import CompiledDict, MalformedBlob

ROOT_PTR = 0


class InvalidPointer(ValueError):
    """The dictionary pointer is the invalid marker or out of range."""


@dataclass(frozen=True)
class ExtensionVerdict:
    """Per-label transition permissions from one dictionary pointer.

    ``allowed[k-1]`` is the 0/1 transition probability for label id k;
    ``next_ptr[k-1]`` is the successor address (invalid marker where
    disallowed, root for the separator). ``records_read`` counts blob
    accesses, bounding the walk cost.
    """

    allowed: tuple[bool, ...]
    next_ptr: tuple[int, ...]
    records_read: int


def extend_probs(d: CompiledDict, dict_ptr: int) -> ExtensionVerdict:
    """One chain walk producing the verdict for all K labels."""
    inv = d.invalid_ptr
    if dict_ptr == inv:
        raise InvalidPointer("dictionary pointer is the invalid marker")
    if not 0 <= dict_ptr < d.node_count:
        raise InvalidPointer(f"dictionary pointer {dict_ptr} out of range")

    k_labels = d.k
    allowed = [False] * k_labels
    next_ptr = [inv] * k_labels

    _, blank_left, _ = d.record(dict_ptr)
    reads = 1
    # flag: 0 = scanning the chain, 1 = chain exhausted without a
    # separator, 2 = separator reached (word may end here)
    if blank_left:
        flag = 2
        cur_char = cur_rel = 0
        addr = dict_ptr
    else:
        flag = 0
        addr = dict_ptr + 1
        cur_char, _, cur_rel = d.record(addr)
        reads += 1

    for k in range(1, k_labels):
        if flag == 0 and cur_char == k:
            allowed[k - 1] = True
            next_ptr[k - 1] = addr
            if cur_rel == 0:
                flag = 1
            elif cur_rel == d.rel_sentinel:
                flag = 2
            else:
                addr += cur_rel
                cur_char, _, cur_rel = d.record(addr)
                reads += 1

    if flag == 0:
        # unreachable on well-formed blobs: chains are sorted and every
        # chain node carries a char in 1..K-1, so the last node sets the flag
        raise MalformedBlob(f"sibling chain from {dict_ptr} never terminated")
    if flag == 2:
        allowed[k_labels - 1] = True
        next_ptr[k_labels - 1] = ROOT_PTR
    return ExtensionVerdict(tuple(allowed), tuple(next_ptr), reads)


def resolve_prefix(d: CompiledDict, label_ids) -> int | None:
    """Walk a label-id sequence from the root; None when it leaves the trie."""
    ptr = ROOT_PTR
    for label_id in label_ids:
        verdict = extend_probs(d, ptr)
        if not verdict.allowed[label_id - 1]:
            return None
        ptr = verdict.next_ptr[label_id - 1]
    return ptr
