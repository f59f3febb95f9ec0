"""Word-list compilation into a bit-packed binary trie.

The storage pipeline is: word list -> multi-branch trie -> left-child /
right-sibling binary trie -> preorder-packed records.

Each stored record is ``char_bits + 1 + rel_bits`` wide (22 bits with
defaults) laid out MSB-first as char | blank_left | rel_right:

* records are stored in preorder, so a node's first char child always
  sits at its own address + 1; that address never needs storing,
* blank_left = 1 means the node's only child in the original trie is
  the word separator: the partial word ends here and has no extensions,
* rel_right encodes the distance to the next sibling; 0 means "no more
  siblings", the all-ones sentinel means "the next sibling is the
  separator" (the parent's word may end after this chain).

Word separators are never materialized as records; the separator's
"address" is the root, which is what lets decoding walk the tree
circularly across word boundaries.
"""

from __future__ import annotations

import string
import struct
import sys
from dataclasses import dataclass

DEFAULT_CHAR_BITS = 5
DEFAULT_REL_BITS = 16
DEFAULT_ADDR_BITS = 19

MAGIC = b"CDIC"
FORMAT_VERSION = 1
HEADER_SIZE = 16


class DictionaryError(ValueError):
    """Invalid word list or alphabet."""


class RelativeAddressOverflow(DictionaryError):
    """A right-sibling distance does not fit rel_bits (or hits the sentinel)."""


class AddressSpaceExceeded(DictionaryError):
    """The node count does not fit addr_bits (top address is reserved)."""


class MalformedBlob(ValueError):
    """A compiled dictionary blob fails structural validation."""


@dataclass(frozen=True)
class Alphabet:
    """Ordered label set; ids are 1-based, the separator is always last.

    Word characters use ids 1..K-1, the separator id is K and the CTC
    blank is implicitly K+1 (it never appears in the dictionary).
    """

    labels: tuple[str, ...]

    def __post_init__(self):
        if len(self.labels) < 2:
            raise DictionaryError("alphabet needs at least one char plus separator")
        if len(set(self.labels)) != len(self.labels):
            raise DictionaryError("alphabet labels must be unique")

    @classmethod
    def english(cls) -> "Alphabet":
        return cls(tuple(string.ascii_lowercase) + ("_",))

    @classmethod
    def english_with_apostrophe(cls) -> "Alphabet":
        return cls(tuple(string.ascii_lowercase) + ("'", "_"))

    @property
    def k(self) -> int:
        return len(self.labels)

    @property
    def separator_id(self) -> int:
        return len(self.labels)

    @property
    def blank_id(self) -> int:
        return len(self.labels) + 1

    @property
    def label_bits(self) -> int:
        return (self.k - 1).bit_length()

    def id_of(self, char: str) -> int:
        try:
            return self.labels.index(char) + 1
        except ValueError:
            raise DictionaryError(f"label {char!r} not in alphabet") from None

    def char_of(self, label_id: int) -> str:
        if not 1 <= label_id <= self.k:
            raise DictionaryError(f"label id {label_id} out of range")
        return self.labels[label_id - 1]

    def word_to_ids(self, word: str) -> tuple[int, ...]:
        ids = tuple(self.id_of(c) for c in word)
        if self.separator_id in ids:
            raise DictionaryError(f"word {word!r} contains the separator")
        return ids


class TrieNode:
    """One character of the multi-branch trie.

    ``word_end`` stands in for the separator child; it is ordered after
    every char child, which is what the sentinel encoding relies on.
    """

    __slots__ = ("children", "word_end")

    def __init__(self):
        self.children: dict[int, TrieNode] = {}
        self.word_end = False


def build_trie(words, alphabet: Alphabet) -> TrieNode:
    """Insert the (deduplicated) word set; rejects invalid words."""
    root = TrieNode()
    count = 0
    for word in words:
        if not word:
            raise DictionaryError("empty words are not allowed")
        node = root
        for label_id in alphabet.word_to_ids(word):
            node = node.children.setdefault(label_id, TrieNode())
        node.word_end = True
        count += 1
    if count == 0:
        raise DictionaryError("empty word list")
    return root


class BinaryNode:
    """Left-child / right-sibling view of a trie node."""

    __slots__ = ("char_id", "blank_left", "first_child", "next_sibling",
                 "sibling_is_separator", "address")

    def __init__(self, char_id: int):
        self.char_id = char_id
        self.blank_left = False
        self.first_child: BinaryNode | None = None
        self.next_sibling: BinaryNode | None = None
        self.sibling_is_separator = False
        self.address = -1


def to_binary_trie(root: TrieNode) -> BinaryNode:
    """Rewire a trie into its binary form, eliminating separator nodes."""
    broot = BinaryNode(0)
    stack = [(root, broot)]
    while stack:
        node, bnode = stack.pop()
        if not node.children:
            # a leaf char node always ends a word (build_trie guarantees it)
            bnode.blank_left = node.word_end
            continue
        chain = []
        for char_id in sorted(node.children):
            child = BinaryNode(char_id)
            chain.append((child, node.children[char_id]))
        bnode.first_child = chain[0][0]
        for (cur, _), (nxt, _) in zip(chain, chain[1:]):
            cur.next_sibling = nxt
        chain[-1][0].sibling_is_separator = node.word_end
        stack.extend((tnode, bchild) for bchild, tnode in chain)
    return broot


def _preorder(broot: BinaryNode) -> list[BinaryNode]:
    """Preorder of the binary trie (node, left subtree, right subtree)."""
    order = []
    stack = [broot]
    while stack:
        node = stack.pop()
        node.address = len(order)
        order.append(node)
        if node.next_sibling is not None:
            stack.append(node.next_sibling)
        if node.first_child is not None:
            stack.append(node.first_child)
    return order


@dataclass(frozen=True)
class CompiledDict:
    """Immutable preorder-packed dictionary blob."""

    node_count: int
    k: int
    char_bits: int = DEFAULT_CHAR_BITS
    rel_bits: int = DEFAULT_REL_BITS
    addr_bits: int = DEFAULT_ADDR_BITS
    payload: bytes = b""

    def __post_init__(self):
        expected = (self.node_count * self.record_bits + 7) // 8
        if len(self.payload) != expected:
            raise MalformedBlob(
                f"payload is {len(self.payload)} bytes, expected {expected}"
            )

    @property
    def record_bits(self) -> int:
        return self.char_bits + 1 + self.rel_bits

    @property
    def rel_sentinel(self) -> int:
        return (1 << self.rel_bits) - 1

    @property
    def invalid_ptr(self) -> int:
        return (1 << self.addr_bits) - 1

    def record(self, address: int) -> tuple[int, int, int]:
        """Return (char_id, blank_left, rel_right) of one stored node."""
        if not 0 <= address < self.node_count:
            raise MalformedBlob(f"address {address} outside 0..{self.node_count - 1}")
        width = self.record_bits
        start = address * width
        end = start + width
        window = int.from_bytes(self.payload[start // 8:(end + 7) // 8], "big")
        rec = (window >> (-end % 8)) & ((1 << width) - 1)
        rel = rec & ((1 << self.rel_bits) - 1)
        blank_left = (rec >> self.rel_bits) & 1
        char_id = rec >> (self.rel_bits + 1)
        return char_id, blank_left, rel


def emit_compiled(broot: BinaryNode, alphabet: Alphabet,
                  char_bits: int = DEFAULT_CHAR_BITS,
                  rel_bits: int = DEFAULT_REL_BITS,
                  addr_bits: int = DEFAULT_ADDR_BITS) -> CompiledDict:
    """Pack the binary trie into its preorder record stream."""
    if alphabet.k - 1 > (1 << char_bits) - 1:
        raise DictionaryError(
            f"{char_bits} char bits cannot hold {alphabet.k - 1} characters"
        )
    order = _preorder(broot)
    if len(order) >= (1 << addr_bits) - 1:
        raise AddressSpaceExceeded(
            f"{len(order)} nodes do not fit {addr_bits} address bits"
        )
    sentinel = (1 << rel_bits) - 1
    width = char_bits + 1 + rel_bits
    out = bytearray()
    bitbuf = 0
    nbits = 0
    for node in order:
        if node.next_sibling is not None:
            rel = node.next_sibling.address - node.address
            if rel >= sentinel:
                raise RelativeAddressOverflow(
                    f"sibling distance {rel} exceeds {rel_bits}-bit encoding"
                )
        else:
            rel = sentinel if node.sibling_is_separator else 0
        rec = (node.char_id << (rel_bits + 1)) \
            | (int(node.blank_left) << rel_bits) | rel
        bitbuf = (bitbuf << width) | rec
        nbits += width
        while nbits >= 8:
            nbits -= 8
            out.append((bitbuf >> nbits) & 0xFF)
        bitbuf &= (1 << nbits) - 1
    if nbits:
        out.append((bitbuf << (8 - nbits)) & 0xFF)
    payload = bytes(out)
    return CompiledDict(node_count=len(order), k=alphabet.k,
                        char_bits=char_bits, rel_bits=rel_bits,
                        addr_bits=addr_bits, payload=payload)


def compile_words(words, alphabet: Alphabet, **widths) -> CompiledDict:
    """Full pipeline: word list to packed blob."""
    return emit_compiled(to_binary_trie(build_trie(words, alphabet)),
                         alphabet, **widths)


def enumerate_words(d: CompiledDict, alphabet: Alphabet) -> list[str]:
    """Reconstruct the sorted word set by walking the packed records."""
    if alphabet.k != d.k:
        raise DictionaryError("alphabet size does not match the blob header")
    root_char, root_blank, _ = d.record(0)
    if root_char != 0 or root_blank:
        raise MalformedBlob("root record must have char 0 and blank_left 0")
    if d.node_count == 1:
        return []
    words: list[str] = []

    def chain(addr: int, prefix: str) -> bool:
        """Walk one sibling chain; True when it ends at the separator."""
        while True:
            char_id, blank_left, rel = d.record(addr)
            if not 1 <= char_id <= d.k - 1:
                raise MalformedBlob(f"record {addr} has char id {char_id}")
            word = prefix + alphabet.char_of(char_id)
            if blank_left:
                words.append(word)
            else:
                if chain(addr + 1, word):
                    words.append(word)
            if rel == 0:
                return False
            if rel == d.rel_sentinel:
                return True
            addr += rel

    # recursion depth tracks word length, not node count
    old_limit = sys.getrecursionlimit()
    sys.setrecursionlimit(max(old_limit, d.node_count + 100))
    try:
        ends_at_separator = chain(1, "")
    finally:
        sys.setrecursionlimit(old_limit)
    if ends_at_separator:
        raise MalformedBlob("root sibling chain ends at a separator (empty word)")
    return sorted(words)


def save_blob(d: CompiledDict, path) -> None:
    header = struct.pack("<4sHBBBBI2x", MAGIC, FORMAT_VERSION, d.char_bits,
                         d.rel_bits, d.addr_bits, d.k, d.node_count)
    assert len(header) == HEADER_SIZE
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(d.payload)


def load_blob(path) -> CompiledDict:
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < HEADER_SIZE:
        raise MalformedBlob("file shorter than the header")
    magic, version, char_bits, rel_bits, addr_bits, k, node_count = \
        struct.unpack("<4sHBBBBI2x", data[:HEADER_SIZE])
    if magic != MAGIC:
        raise MalformedBlob(f"bad magic {magic!r}")
    if version != FORMAT_VERSION:
        raise MalformedBlob(f"unsupported format version {version}")
    payload = data[HEADER_SIZE:]
    try:
        return CompiledDict(node_count=node_count, k=k, char_bits=char_bits,
                            rel_bits=rel_bits, addr_bits=addr_bits,
                            payload=payload)
    except MalformedBlob:
        raise
    except ValueError as exc:
        raise MalformedBlob(str(exc)) from exc


@dataclass(frozen=True)
class SizeReport:
    """Storage footprint of the same dictionary in four representations."""

    node_count: int
    k: int
    list_bits: int
    matrix_trie_bits: int
    binary_trie_bits: int
    compressed_bits: int

    @staticmethod
    def _mb(bits: int) -> float:
        return bits / 8 / (1 << 20)

    @property
    def matrix_trie_mb(self) -> float:
        return self._mb(self.matrix_trie_bits)

    @property
    def binary_trie_mb(self) -> float:
        return self._mb(self.binary_trie_bits)

    @property
    def compressed_mb(self) -> float:
        return self._mb(self.compressed_bits)


def size_formulas(node_count: int, k: int, label_bits: int | None = None,
                  char_bits: int = DEFAULT_CHAR_BITS,
                  rel_bits: int = DEFAULT_REL_BITS,
                  addr_bits: int = DEFAULT_ADDR_BITS,
                  list_chars: int = 0) -> SizeReport:
    """Per-representation bit counts for a given stored-node count.

    matrix: node_count x K successor addresses of addr_bits each;
    binary trie: char + two absolute child addresses per node;
    compressed: char + blank_left flag + relative right address.
    """
    if label_bits is None:
        label_bits = (k - 1).bit_length()
    return SizeReport(
        node_count=node_count,
        k=k,
        list_bits=list_chars * label_bits,
        matrix_trie_bits=node_count * k * addr_bits,
        binary_trie_bits=node_count * (char_bits + 2 * addr_bits),
        compressed_bits=node_count * (char_bits + 1 + rel_bits),
    )


def report_sizes(words, alphabet: Alphabet,
                 char_bits: int = DEFAULT_CHAR_BITS,
                 rel_bits: int = DEFAULT_REL_BITS,
                 addr_bits: int = DEFAULT_ADDR_BITS) -> SizeReport:
    """Compile-free storage report for a word list (counts trie nodes)."""
    unique = set(words)
    root = build_trie(unique, alphabet)
    count = 0
    stack = [root]
    while stack:
        node = stack.pop()
        count += 1
        stack.extend(node.children.values())
    list_chars = sum(len(w) + 1 for w in unique)  # separator terminates each word
    return size_formulas(count, alphabet.k, alphabet.label_bits,
                         char_bits, rel_bits, addr_bits, list_chars)
