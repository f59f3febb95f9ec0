"""Correctness baselines kept independent of the production decoder.

``decode_reference`` is the textbook prefix beam search: the candidate
set grows to (K+1)*W entries per step and is pruned to the W most
probable at the start of the next step; the word constraint is checked
against a plain word list (prefix sets), never against the compiled
blob. ``best_labelling_bruteforce`` enumerates every alignment path of
a tiny instance and sums per labelling, which is the definitionally
correct answer the decoders must reproduce when nothing is pruned.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from itertools import product

from .dictionary import Alphabet
from .sentences import EMPTY, Sentence


class NaiveLexicon:
    """Word-list membership oracle over label-id tuples."""

    def __init__(self, words, alphabet: Alphabet):
        self.separator_id = alphabet.separator_id
        self.words: set[tuple[int, ...]] = set()
        self.prefixes: set[tuple[int, ...]] = set()
        for word in words:
            ids = alphabet.word_to_ids(word)
            if not ids:
                raise ValueError("empty words are not allowed")
            self.words.add(ids)
            for n in range(1, len(ids) + 1):
                self.prefixes.add(ids[:n])

    def allowed(self, partial_word: tuple[int, ...], label_id: int) -> bool:
        if label_id == self.separator_id:
            return partial_word in self.words
        return partial_word + (label_id,) in self.prefixes


@dataclass
class _Entry:
    pr_blank: float
    pr_nonblank: float
    pr_total: float
    partial: tuple[int, ...]


def decode_reference(prob_rows, k_labels: int, w: int,
                     lexicon: NaiveLexicon | None = None) -> list[int]:
    """Floating-point baseline beam search; returns the best label list."""
    beam: dict[Sentence, _Entry] = {EMPTY: _Entry(1.0, 0.0, 1.0, ())}
    steps = 0
    for row in prob_rows:
        steps += 1
        p_row = list(row)
        if len(p_row) != k_labels + 1:
            raise ValueError(f"expected {k_labels + 1} probabilities")
        blank_p = p_row[k_labels]
        if len(beam) > w:
            kept = heapq.nlargest(w, beam.items(), key=lambda kv: kv[1].pr_total)
            beam = dict(kept)
        nxt: dict[Sentence, _Entry] = {}

        # extensions; sentences that already survive are handled by the
        # carry-over below, which folds this same score in
        for sent, entry in beam.items():
            last = sent.label
            for pos in range(k_labels):
                label = pos + 1
                if lexicon is not None and not lexicon.allowed(entry.partial, label):
                    continue
                src = entry.pr_blank if label == last else entry.pr_total
                ext = p_row[pos] * src
                if ext <= 0.0:
                    continue
                child = sent.child(label)
                if child in beam:
                    continue
                if lexicon is None:
                    partial = ()
                elif label == lexicon.separator_id:
                    partial = ()
                else:
                    partial = entry.partial + (label,)
                nxt[child] = _Entry(0.0, ext, ext, partial)

        # carry-overs
        for sent, entry in beam.items():
            tminus = entry.pr_total * blank_p
            tplus = 0.0
            last = sent.label
            if last:
                tplus = entry.pr_nonblank * p_row[last - 1]
                parent = beam.get(sent.parent)
                if parent is not None:
                    src = parent.pr_blank if parent_repeats(sent) else parent.pr_total
                    tplus = tplus + p_row[last - 1] * src
            total = tminus + tplus
            nxt[sent] = _Entry(tminus, tplus, total, entry.partial)

        beam = nxt
    if steps == 0:
        raise ValueError("cannot decode an empty stream")
    best = max(beam.items(), key=lambda kv: kv[1].pr_total)
    return best[0].to_labels()


def parent_repeats(sent: Sentence) -> bool:
    """True when the sentence's last label repeats its prefix's last label."""
    return sent.parent.label == sent.label


@dataclass(frozen=True)
class PathScore:
    labelling: tuple[int, ...]
    probability: float


def collapse_path(path, blank_id: int) -> tuple[int, ...]:
    """Remove repeated labels, then blanks."""
    out = []
    prev = None
    for s in path:
        if s != prev and s != blank_id:
            out.append(s)
        prev = s
    return tuple(out)


def labelling_distribution(prob_rows, path_limit: int = 10_000_000) -> dict:
    """Exact labelling probabilities by full path enumeration."""
    rows = [list(r) for r in prob_rows]
    if not rows:
        raise ValueError("cannot enumerate an empty stream")
    width = len(rows[0])
    blank_id = width  # labels are 1..K, blank is K+1
    if width ** len(rows) > path_limit:
        raise ValueError("instance too large for path enumeration")
    dist: dict[tuple[int, ...], float] = {}
    for path in product(range(1, width + 1), repeat=len(rows)):
        p = 1.0
        for t, s in enumerate(path):
            p *= rows[t][s - 1]
        lab = collapse_path(path, blank_id)
        dist[lab] = dist.get(lab, 0.0) + p
    return dist


def best_labelling_bruteforce(prob_rows, path_limit: int = 10_000_000) -> PathScore:
    """Argmax labelling of the exhaustive distribution.

    Ties break toward the shorter, then lexicographically smaller
    labelling so results stay deterministic.
    """
    dist = labelling_distribution(prob_rows, path_limit)
    best = max(dist.items(),
               key=lambda kv: (kv[1], -len(kv[0]), tuple(-x for x in kv[0])))
    return PathScore(best[0], best[1])
