"""Bounded-storage CTC beam search.

The decoder keeps exactly W surviving hypotheses and W candidate
records; per step it runs four phases:

1. extension: every (hypothesis, label) pair is scored and competes for
   a candidate slot by replacing the current minimum. Extension scores
   that a longer surviving hypothesis will need again are parked in a
   side array keyed by the (prefix slot, last label) relation computed
   up front.
2. carry-over: every hypothesis is re-scored for "stay on the same
   sentence" (blank, repeated label, plus the parked extension mass).
   If the matching extension candidate is still alive its record is
   overwritten with the merged probabilities, otherwise the merged
   score competes via min-replacement like everything else.
3. rebuild: candidate records are copied back into the hypothesis
   slots without ever storing candidate sentences. Candidates whose
   source slot is unclaimed are fixed in place (appends deferred so
   later copies read unmodified base sentences); the rest relocate to
   free slots found by a leading-zero scan.
4. rescale: if the best total probability fell below the power-of-two
   floor, every stored probability is shifted left by the gap, keeping
   fixed-point decoding away from underflow without changing the
   argmax (scores scale by a common per-step factor).

Arithmetic runs either on 30-bit fixed-point raws ("fixed") or on
plain floats ("float"); both share this control flow exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .dictionary import CompiledDict
from .fixedpoint import PROB_FRAC, PROB_MAX_RAW, SatCounter, mul_raw
from .lexicon import extend_probs
from .sentences import EMPTY, Sentence

MODES = ("fixed", "float")
TIE_BREAKS = ("incumbent-stays",)


class BeamCollapse(RuntimeError):
    """Every hypothesis probability reached zero.

    In fixed point this signals underflow: either the fractional width
    is too small or rescaling is disabled.
    """


@dataclass
class DecodeConfig:
    """Decoding parameters; defaults follow the reference configuration."""

    k: int
    w: int = 8
    q: int = PROB_FRAC
    t_max: int | None = None
    mode: str = "fixed"
    adjust_enabled: bool = True
    use_lm: bool = True
    pl_exponent: int | None = None
    tie_break: str = "incumbent-stays"

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("need at least one label")
        if self.w < 1:
            raise ValueError("beam width must be positive")
        if self.q < 1:
            raise ValueError("q must be positive")
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.tie_break not in TIE_BREAKS:
            raise ValueError(f"unknown tie break rule {self.tie_break!r}")
        if self.pl_exponent is None:
            # unique n with 1/(4W) < 2**n <= 1/(2W)
            self.pl_exponent = -((2 * self.w - 1).bit_length())
        n = self.pl_exponent
        if n > -1 or 2 * self.w > (1 << -n) or (1 << -n) >= 4 * self.w:
            raise ValueError(
                f"pl_exponent {n} violates 1/(4W) < 2**n <= 1/(2W) for W={self.w}"
            )


@dataclass(frozen=True)
class BeamSlot:
    """Read-only view of one hypothesis slot."""

    occupied: bool
    pr_total: float | int
    pr_nonblank: float | int
    pr_blank: float | int
    dict_ptr: int
    labels: tuple[int, ...]


@dataclass(frozen=True)
class RebuildDiag:
    """Flag snapshots taken between the two rebuild loops."""

    claimed_after_fix: tuple[bool, ...]
    placed_after_fix: tuple[bool, ...]


@dataclass
class DecodeDiagnostics:
    steps: int = 0
    shifts: list[int] = field(default_factory=list)
    saturation: SatCounter = field(default_factory=SatCounter)

    @property
    def total_shift(self) -> int:
        return sum(self.shifts)


@dataclass(frozen=True)
class DecodeResult:
    labels: list[int]
    score: float
    slot: int
    diagnostics: DecodeDiagnostics


class BeamState:
    """W hypothesis slots plus the per-step candidate records.

    The only unbounded storage is one sentence per hypothesis slot;
    candidates are described by (source slot, appended label) pairs.
    """

    __slots__ = (
        "w", "occupied", "pr_total", "pr_nonblank", "pr_blank", "dict_ptr",
        "sent", "prefix_src", "prefix_label", "saved_ext",
        "cand_occupied", "cand_pr_total", "cand_pr_nonblank", "cand_pr_blank",
        "cand_dict_ptr", "cand_src_slot", "cand_ext_label",
        "last_rebuild", "last_shift", "t",
    )

    def __init__(self, w: int, zero):
        self.w = w
        self.occupied = [False] * w
        self.pr_total = [zero] * w
        self.pr_nonblank = [zero] * w
        self.pr_blank = [zero] * w
        self.dict_ptr = [0] * w
        self.sent: list[Sentence] = [EMPTY] * w
        self.prefix_src: list[int | None] = [None] * w
        self.prefix_label = [0] * w
        self.saved_ext = [zero] * w
        self.cand_occupied = [False] * w
        self.cand_pr_total = [zero] * w
        self.cand_pr_nonblank = [zero] * w
        self.cand_pr_blank = [zero] * w
        self.cand_dict_ptr = [0] * w
        self.cand_src_slot = [0] * w
        self.cand_ext_label = [0] * w
        self.last_rebuild: RebuildDiag | None = None
        self.last_shift = 0
        self.t = 0

    def slots(self) -> list[BeamSlot]:
        return [
            BeamSlot(self.occupied[i], self.pr_total[i], self.pr_nonblank[i],
                     self.pr_blank[i], self.dict_ptr[i],
                     tuple(self.sent[i].to_labels()))
            for i in range(self.w)
        ]


def extension_probability(label_id: int, slot: BeamSlot, p_label,
                          lm_allowed: bool = True, *, mode: str = "float",
                          q: int = PROB_FRAC,
                          counter: SatCounter | None = None):
    """Score of extending one hypothesis by one label at this frame.

    Repeating the hypothesis' final label draws only on the mass of
    paths that end in blank (everything else would collapse into the
    unextended sentence); any other label draws on the full mass. The
    empty sentence always takes the second branch.
    """
    if not lm_allowed:
        return 0 if mode == "fixed" else 0.0
    if slot.labels and slot.labels[-1] == label_id:
        src = slot.pr_blank
    else:
        src = slot.pr_total
    if mode == "fixed":
        return mul_raw(p_label, src, q, counter)
    return p_label * src


class BeamDecoder:
    """One decoding session configuration bound to an optional lexicon."""

    def __init__(self, config: DecodeConfig, lexicon: CompiledDict | None = None):
        if lexicon is not None and lexicon.k != config.k:
            raise ValueError("lexicon alphabet size does not match config")
        self.cfg = config
        self.lexicon = lexicon if config.use_lm else None
        self._fixed = config.mode == "fixed"
        self._zero = 0 if self._fixed else 0.0
        self._one = (1 << config.q) if self._fixed else 1.0
        self._sat = SatCounter()

    def new_state(self) -> BeamState:
        state = BeamState(self.cfg.w, self._zero)
        state.occupied[0] = True
        state.pr_blank[0] = self._one
        state.pr_total[0] = self._one
        return state

    # ------------------------------------------------------------------
    # step phases
    # ------------------------------------------------------------------

    def scan_prefixes(self, state: BeamState) -> None:
        """Link each hypothesis to the slot holding its one-shorter prefix."""
        index: dict[Sentence, int] = {}
        for i in range(state.w):
            if state.occupied[i]:
                index[state.sent[i]] = i
        for i in range(state.w):
            state.prefix_src[i] = None
            state.prefix_label[i] = 0
            if not state.occupied[i]:
                continue
            sent = state.sent[i]
            if sent.length == 0:
                continue
            j = index.get(sent.parent)
            if j is not None:
                state.prefix_src[i] = j
                state.prefix_label[i] = sent.label

    def step(self, state: BeamState, probs) -> None:
        """Advance one frame. ``probs`` has K+1 entries, blank last."""
        cfg = self.cfg
        w = cfg.w
        k_labels = cfg.k
        q = cfg.q
        fixed = self._fixed
        zero = self._zero
        if len(probs) != k_labels + 1:
            raise ValueError(f"expected {k_labels + 1} probabilities")
        p_row = list(probs)

        self.scan_prefixes(state)
        prefix_src = state.prefix_src
        prefix_label = state.prefix_label

        saved_ext = state.saved_ext
        for i in range(w):
            saved_ext[i] = zero
        # (source slot, label) -> hypothesis slot wanting that score parked
        park: dict[int, dict[int, int]] = {}
        for j in range(w):
            src = prefix_src[j]
            if src is not None:
                park.setdefault(src, {})[prefix_label[j]] = j

        verdicts: list = [None] * w
        if self.lexicon is not None:
            by_ptr: dict[int, object] = {}
            for i in range(w):
                if state.occupied[i]:
                    ptr = state.dict_ptr[i]
                    v = by_ptr.get(ptr)
                    if v is None:
                        v = extend_probs(self.lexicon, ptr)
                        by_ptr[ptr] = v
                    verdicts[i] = v

        c_occ = state.cand_occupied
        c_pt = state.cand_pr_total
        c_pnb = state.cand_pr_nonblank
        c_pb = state.cand_pr_blank
        c_ptr = state.cand_dict_ptr
        c_src = state.cand_src_slot
        c_lab = state.cand_ext_label
        for j in range(w):
            c_occ[j] = False
            c_pt[j] = zero
            c_pnb[j] = zero
            c_pb[j] = zero
        cand_key: dict[tuple[int, int], int] = {}
        bmin_val = zero
        bmin_idx = 0

        # phase 1: extensions compete by raw score
        for i in range(w):
            if not state.occupied[i]:
                continue
            pt_i = state.pr_total[i]
            pb_i = state.pr_blank[i]
            last = state.sent[i].label
            v = verdicts[i]
            v_allowed = v.allowed if v is not None else None
            v_next = v.next_ptr if v is not None else None
            kmap = park.get(i)
            for pos in range(k_labels):
                label = pos + 1
                p = p_row[pos]
                src_val = pb_i if label == last else pt_i
                if v_allowed is not None and not v_allowed[pos]:
                    temp = zero
                elif fixed:
                    temp = (p * src_val) >> q
                    if temp > PROB_MAX_RAW:
                        temp = PROB_MAX_RAW
                        self._sat.mul += 1
                else:
                    temp = p * src_val
                if kmap is not None:
                    j = kmap.get(label)
                    if j is not None:
                        saved_ext[j] = temp
                if temp > bmin_val:
                    mi = bmin_idx
                    if c_occ[mi]:
                        del cand_key[(c_src[mi], c_lab[mi])]
                    c_occ[mi] = True
                    c_pt[mi] = temp
                    c_pnb[mi] = temp
                    c_pb[mi] = zero
                    c_ptr[mi] = v_next[pos] if v_next is not None else 0
                    c_src[mi] = i
                    c_lab[mi] = label
                    cand_key[(i, label)] = mi
                    bmin_val = min(c_pt)
                    bmin_idx = c_pt.index(bmin_val)

        # phase 2: carry-overs merge into their extension record or
        # compete with the merged score
        blank_p = p_row[k_labels]
        for i in range(w):
            if not state.occupied[i]:
                continue
            last = state.sent[i].label
            if fixed:
                tminus = (state.pr_total[i] * blank_p) >> q
                if tminus > PROB_MAX_RAW:
                    tminus = PROB_MAX_RAW
                    self._sat.mul += 1
                tplus = saved_ext[i]
                if last:
                    rep = (state.pr_nonblank[i] * p_row[last - 1]) >> q
                    if rep > PROB_MAX_RAW:
                        rep = PROB_MAX_RAW
                        self._sat.mul += 1
                    tplus = rep + tplus
                    if tplus > PROB_MAX_RAW:
                        tplus = PROB_MAX_RAW
                        self._sat.add += 1
                temp = tminus + tplus
                if temp > PROB_MAX_RAW:
                    temp = PROB_MAX_RAW
                    self._sat.add += 1
            else:
                tminus = state.pr_total[i] * blank_p
                tplus = saved_ext[i]
                if last:
                    tplus = state.pr_nonblank[i] * p_row[last - 1] + tplus
                temp = tminus + tplus
            j = cand_key.get((prefix_src[i], prefix_label[i]))
            if j is not None:
                c_pb[j] = tminus
                c_pnb[j] = tplus
                c_pt[j] = temp
                c_ptr[j] = state.dict_ptr[i]
                if j == bmin_idx:
                    bmin_val = min(c_pt)
                    bmin_idx = c_pt.index(bmin_val)
            elif temp > bmin_val:
                mi = bmin_idx
                if c_occ[mi]:
                    del cand_key[(c_src[mi], c_lab[mi])]
                c_occ[mi] = True
                c_pt[mi] = temp
                c_pnb[mi] = tplus
                c_pb[mi] = tminus
                c_ptr[mi] = state.dict_ptr[i]
                c_src[mi] = i
                c_lab[mi] = 0
                cand_key[(i, 0)] = mi
                bmin_val = min(c_pt)
                bmin_idx = c_pt.index(bmin_val)

        self.rebuild_beam(state)

        alive = False
        for i in range(state.w):
            if state.occupied[i] and state.pr_total[i] > zero:
                alive = True
                break
        if not alive:
            raise BeamCollapse(
                "all hypothesis probabilities are zero "
                "(fractional width too small or rescaling disabled)"
            )

        state.last_shift = self.rescale_probs(state) if cfg.adjust_enabled else 0
        state.t += 1

    def rebuild_beam(self, state: BeamState) -> RebuildDiag:
        """Copy candidates back into hypothesis slots (no candidate sentences).

        First pass fixes candidates whose source slot is still free,
        deferring label appends so that the second pass can copy
        unmodified base sentences into slots freed by a leading-zero
        scan. Unclaimed slots become unoccupied.
        """
        w = state.w
        zero = self._zero
        claimed = [False] * w
        placed = [False] * w
        pending = [0] * w

        for j in range(w):
            if not state.cand_occupied[j]:
                continue
            p = state.cand_src_slot[j]
            if not claimed[p]:
                state.pr_total[p] = state.cand_pr_total[j]
                state.pr_nonblank[p] = state.cand_pr_nonblank[j]
                state.pr_blank[p] = state.cand_pr_blank[j]
                state.dict_ptr[p] = state.cand_dict_ptr[j]
                pending[p] = state.cand_ext_label[j]
                claimed[p] = True
                placed[j] = True
        diag = RebuildDiag(tuple(claimed), tuple(placed))

        for j in range(w):
            if not state.cand_occupied[j] or placed[j]:
                continue
            tgt = claimed.index(False)
            state.pr_total[tgt] = state.cand_pr_total[j]
            state.pr_nonblank[tgt] = state.cand_pr_nonblank[j]
            state.pr_blank[tgt] = state.cand_pr_blank[j]
            state.dict_ptr[tgt] = state.cand_dict_ptr[j]
            base = state.sent[state.cand_src_slot[j]]
            label = state.cand_ext_label[j]
            state.sent[tgt] = base.child(label) if label else base
            claimed[tgt] = True

        for p in range(w):
            if pending[p]:
                state.sent[p] = state.sent[p].child(pending[p])

        for s in range(w):
            state.occupied[s] = claimed[s]
            if not claimed[s]:
                state.pr_total[s] = zero
                state.pr_nonblank[s] = zero
                state.pr_blank[s] = zero
                state.dict_ptr[s] = 0
                state.sent[s] = EMPTY
        state.last_rebuild = diag
        return diag

    def rescale_probs(self, state: BeamState) -> int:
        """Shift all probabilities up when max(Pr) fell below the floor.

        Returns the applied shift. Afterwards max(Pr) lies in
        [2**pl_exponent, 2**(pl_exponent+1)) and the W totals sum below 1.
        """
        zero = self._zero
        best = zero
        for i in range(state.w):
            if state.occupied[i] and state.pr_total[i] > best:
                best = state.pr_total[i]
        if best <= zero:
            raise BeamCollapse("cannot rescale an all-zero beam")
        if self._fixed:
            pos = best.bit_length() - 1 - self.cfg.q
        else:
            pos = math.frexp(best)[1] - 1
        n = self.cfg.pl_exponent
        if pos >= n:
            return 0
        s = n - pos
        if self._fixed:
            for i in range(state.w):
                if state.occupied[i]:
                    state.pr_total[i] <<= s
                    state.pr_nonblank[i] <<= s
                    state.pr_blank[i] <<= s
        else:
            factor = 2.0 ** s
            for i in range(state.w):
                if state.occupied[i]:
                    state.pr_total[i] *= factor
                    state.pr_nonblank[i] *= factor
                    state.pr_blank[i] *= factor
        return s

    # ------------------------------------------------------------------
    # session driver
    # ------------------------------------------------------------------

    def decode(self, prob_rows, trace=None) -> DecodeResult:
        """Run all frames and return the most probable hypothesis.

        ``prob_rows`` iterates over per-frame probability vectors of
        length K+1 (blank last): fixed-point raws in fixed mode, floats
        in float mode. ``trace(t, state)`` is invoked after each step.
        """
        cfg = self.cfg
        self._sat = SatCounter()
        diag = DecodeDiagnostics(saturation=self._sat)
        state = self.new_state()
        t = 0
        for row in prob_rows:
            if cfg.t_max is not None and t >= cfg.t_max:
                raise ValueError(f"stream exceeds t_max={cfg.t_max}")
            self.step(state, row)
            diag.shifts.append(state.last_shift)
            if trace is not None:
                trace(t, state)
            t += 1
        if t == 0:
            raise ValueError("cannot decode an empty stream")
        diag.steps = t

        best_i = -1
        best = self._zero
        for i in range(state.w):
            if state.occupied[i] and (best_i < 0 or state.pr_total[i] > best):
                best_i = i
                best = state.pr_total[i]
        labels = state.sent[best_i].to_labels()
        score = best / (1 << cfg.q) if self._fixed else best
        return DecodeResult(labels=labels, score=score, slot=best_i,
                            diagnostics=diag)


def quantize_prob_rows(rows, q: int = PROB_FRAC) -> list[list[int]]:
    """Floor-quantize float probability rows to fixed-point raws."""
    one = 1 << q
    out = []
    for row in rows:
        out.append([min(int(p * one), PROB_MAX_RAW) for p in row])
    return out
