"""Command-line front end.

Exit codes: 0 success, 1 usage error, 2 malformed data or config,
3 beam collapse during decoding.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import accounting
from .decoder import BeamCollapse, BeamDecoder, DecodeConfig, quantize_prob_rows
from .dictionary import (
    Alphabet,
    DictionaryError,
    MalformedBlob,
    compile_words,
    enumerate_words,
    load_blob,
    report_sizes,
    save_blob,
    size_formulas,
)
from .fileio import (
    ConfigError,
    DTYPE_QLOGIT,
    FileFormatError,
    RunConfig,
    TraceWriter,
    read_alphabet,
    read_config,
    read_logits,
)
from .lexicon import InvalidPointer, extend_probs, resolve_prefix
from .reference import NaiveLexicon, decode_reference
from .softmax import (
    asr_default_params,
    quantize_logits,
    softmax_approx,
    softmax_exact,
    softmax_approx_values,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_COLLAPSE = 3


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="ctcbeam", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("compile-dict", help="compile a word list into a blob")
    p.add_argument("--words", required=True)
    p.add_argument("--alphabet")
    p.add_argument("--out", required=True)

    p = sub.add_parser("inspect-dict", help="show blob header and sizes")
    p.add_argument("blob")
    p.add_argument("--alphabet")
    p.add_argument("--enumerate", action="store_true", dest="enumerate_words")
    p.add_argument("--probe", help="prefix whose transition verdict to print")

    p = sub.add_parser("decode", help="decode a logits file")
    p.add_argument("--logits", required=True)
    p.add_argument("--dict", dest="blob")
    p.add_argument("--alphabet")
    p.add_argument("--config")
    p.add_argument("--trace", help="write a per-step beam CSV here")

    p = sub.add_parser("softmax", help="exact vs approximate softmax CSV")
    p.add_argument("--logits", required=True)
    p.add_argument("--config")
    p.add_argument("--out", required=True)

    p = sub.add_parser("compare", help="agreement between decoders")
    p.add_argument("--logits")
    p.add_argument("--random", type=int, metavar="N",
                   help="number of seeded random instances")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--t", type=int, default=30)
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--w", type=int, default=4)
    p.add_argument("--dict", dest="words", help="word list for the LM")
    p.add_argument("--alphabet")

    p = sub.add_parser("report-memory", help="storage accounting")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--w", type=int, required=True)
    p.add_argument("--t", type=int, required=True)
    p.add_argument("--prob-bits", type=int, default=30)
    p.add_argument("--sl-bits", type=int, default=19)
    p.add_argument("--as-built", action="store_true")

    p = sub.add_parser("bench", help="timing comparison on synthetic frames")
    p.add_argument("--frames", type=int, required=True)
    p.add_argument("--k", type=int, default=28)
    p.add_argument("--w", type=int, default=8)
    p.add_argument("--seed", type=int, default=0)
    return parser


def _default_alphabet(k: int) -> Alphabet | None:
    if k == 27:
        return Alphabet.english()
    if k == 28:
        return Alphabet.english_with_apostrophe()
    return None


def _load_alphabet(path: str | None, k: int | None = None) -> Alphabet | None:
    if path:
        return read_alphabet(path)
    if k is not None:
        return _default_alphabet(k)
    return None


def _read_words(path: str) -> list[str]:
    with open(path, "r", encoding="utf-8") as fh:
        return [line.strip() for line in fh if line.strip()]


def _cmd_compile_dict(args) -> int:
    words = _read_words(args.words)
    alphabet = _load_alphabet(args.alphabet) or Alphabet.english_with_apostrophe()
    blob = compile_words(words, alphabet)
    save_blob(blob, args.out)
    report = report_sizes(words, alphabet)
    print(f"words: {len(set(words))}")
    print(f"stored nodes: {blob.node_count}")
    print(f"compressed: {report.compressed_bits} bits "
          f"({report.compressed_mb:.2f} MB)")
    return EXIT_OK


def _cmd_inspect_dict(args) -> int:
    blob = load_blob(args.blob)
    print(f"nodes: {blob.node_count}  K: {blob.k}  "
          f"char/rel/addr bits: {blob.char_bits}/{blob.rel_bits}/{blob.addr_bits}")
    report = size_formulas(blob.node_count, blob.k,
                           char_bits=blob.char_bits, rel_bits=blob.rel_bits,
                           addr_bits=blob.addr_bits)
    print(f"matrix trie: {report.matrix_trie_bits} bits "
          f"({report.matrix_trie_mb:.2f} MB)")
    print(f"binary trie: {report.binary_trie_bits} bits "
          f"({report.binary_trie_mb:.2f} MB)")
    print(f"compressed:  {report.compressed_bits} bits "
          f"({report.compressed_mb:.2f} MB)")
    alphabet = _load_alphabet(args.alphabet, blob.k)
    if args.probe is not None:
        if alphabet is None:
            raise FileFormatError("--probe needs --alphabet for this K")
        ptr = resolve_prefix(blob, [alphabet.id_of(c) for c in args.probe])
        if ptr is None:
            print(f"probe {args.probe!r}: not a dictionary prefix")
        else:
            verdict = extend_probs(blob, ptr)
            allowed = [alphabet.char_of(i + 1)
                       for i in range(blob.k) if verdict.allowed[i]]
            print(f"probe {args.probe!r}: node {ptr}, allowed: {' '.join(allowed)}")
    if args.enumerate_words:
        if alphabet is None:
            raise FileFormatError("--enumerate needs --alphabet for this K")
        for word in enumerate_words(blob, alphabet):
            print(word)
    return EXIT_OK


def _frames_to_probs(matrix: np.ndarray, dtype: int, run: RunConfig):
    """Turn a logits matrix into per-frame probability rows per mode."""
    mode = run.decode.get("mode", "fixed")
    raw = matrix if dtype == DTYPE_QLOGIT else quantize_logits(matrix)
    if mode == "fixed":
        return [softmax_approx(frame, run.softmax) for frame in raw]
    return [softmax_exact(frame).tolist() for frame in raw]


def _cmd_decode(args) -> int:
    matrix, dtype = read_logits(args.logits)
    if matrix.shape[0] == 0:
        raise FileFormatError("logits file contains no frames")
    run = read_config(args.config) if args.config else RunConfig(
        decode={}, softmax=asr_default_params())
    k = matrix.shape[1] - 1
    config = DecodeConfig(k=k, **run.decode)
    lexicon = load_blob(args.blob) if args.blob else None
    rows = _frames_to_probs(matrix, dtype, run)
    decoder = BeamDecoder(config, lexicon)
    alphabet = _load_alphabet(args.alphabet, k)
    trace = None
    trace_fh = None
    if args.trace:
        trace_fh = open(args.trace, "w", newline="", encoding="utf-8")
        q = config.q if config.mode == "fixed" else None
        trace = TraceWriter(trace_fh, q=q, alphabet=alphabet)
    try:
        result = decoder.decode(rows, trace=trace)
    finally:
        if trace_fh is not None:
            trace_fh.close()
    if alphabet is not None:
        print("".join(alphabet.char_of(l) for l in result.labels))
    else:
        print(" ".join(str(l) for l in result.labels))
    print(f"# slot {result.slot}  score {result.score:.6g}  "
          f"shifts {result.diagnostics.total_shift}", file=sys.stderr)
    return EXIT_OK


def _cmd_softmax(args) -> int:
    matrix, dtype = read_logits(args.logits)
    if matrix.shape[0] == 0:
        raise FileFormatError("logits file contains no frames")
    run = read_config(args.config) if args.config else RunConfig(
        decode={}, softmax=asr_default_params())
    raw = matrix if dtype == DTYPE_QLOGIT else quantize_logits(matrix)
    worst = 0.0
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write("frame,index,exact,approx,abs_error\n")
        for t, frame in enumerate(raw):
            exact = softmax_exact(frame)
            approx = softmax_approx_values(frame, run.softmax)
            for i in range(len(exact)):
                err = abs(float(approx[i]) - float(exact[i]))
                worst = max(worst, err)
                fh.write(f"{t},{i},{exact[i]:.9f},{approx[i]:.9f},{err:.9f}\n")
    print(f"frames: {len(raw)}  max abs error: {worst:.6f}")
    return EXIT_OK


def _cmd_compare(args) -> int:
    if (args.logits is None) == (args.random is None):
        raise _UsageError("compare needs exactly one of --logits / --random")

    alphabet = None
    words = None
    if args.words:
        words = _read_words(args.words)
        alphabet = _load_alphabet(args.alphabet, args.k) or \
            Alphabet.english_with_apostrophe()

    if args.logits is not None:
        matrix, dtype = read_logits(args.logits)
        if matrix.shape[0] == 0:
            raise FileFormatError("logits file contains no frames")
        raw = matrix if dtype == DTYPE_QLOGIT else quantize_logits(matrix)
        params = asr_default_params()
        instances = [(
            [softmax_exact(f).tolist() for f in raw],
            [softmax_approx(f, params) for f in raw],
        )]
    else:
        k = alphabet.k if alphabet is not None else args.k
        rng = np.random.default_rng(args.seed)
        instances = []
        for _ in range(args.random):
            t = int(rng.integers(1, args.t + 1))
            mat = rng.random((t, k + 1)) + 1e-9
            mat /= mat.sum(axis=1, keepdims=True)
            rows = mat.tolist()
            instances.append((rows, quantize_prob_rows(rows)))

    k = len(instances[0][0][0]) - 1
    blob = compile_words(words, alphabet) if words else None
    naive = NaiveLexicon(words, alphabet) if words else None

    exact_agree = 0
    fixed_agree = 0
    for float_rows, fixed_rows in instances:
        exact = BeamDecoder(DecodeConfig(k=k, w=args.w, mode="float"),
                            blob).decode(float_rows).labels
        fixed = BeamDecoder(DecodeConfig(k=k, w=args.w, mode="fixed"),
                            blob).decode(fixed_rows).labels
        ref = decode_reference(float_rows, k, args.w, naive)
        exact_agree += (exact == ref)
        fixed_agree += (fixed == ref)
    n = len(instances)
    print(f"exact vs reference: {exact_agree}/{n} agree")
    print(f"fixed vs reference: {fixed_agree}/{n} agree")
    return EXIT_OK if exact_agree == n else EXIT_DATA


def _cmd_report_memory(args) -> int:
    p = accounting.StorageParams(k=args.k, w=args.w, t=args.t,
                                 prob_bits=args.prob_bits, sl_bits=args.sl_bits)
    orig = accounting.bits_original(p)
    improved = accounting.bits_improved(p)
    print(f"original layout:     {orig} bits")
    print(f"intermediate layout: {accounting.bits_intermediate(p)} bits")
    print(f"improved layout:     {improved} bits")
    print(f"compression ratio:   {accounting.compression_ratio(p):.2f}")
    if args.as_built:
        print(f"as built:            {accounting.bits_as_built(p)} bits")
    return EXIT_OK


def _cmd_bench(args) -> int:
    result = accounting.timing_harness(args.frames, k=args.k, w=args.w,
                                       seed=args.seed)
    print(f"frames: {result.frames}")
    print(f"tau reference: {result.tau_original:.3f} s")
    print(f"tau improved:  {result.tau_improved:.3f} s")
    print(f"outputs agree: {result.outputs_agree}")
    return EXIT_OK


_COMMANDS = {
    "compile-dict": _cmd_compile_dict,
    "inspect-dict": _cmd_inspect_dict,
    "decode": _cmd_decode,
    "softmax": _cmd_softmax,
    "compare": _cmd_compare,
    "report-memory": _cmd_report_memory,
    "bench": _cmd_bench,
}


def run(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except BeamCollapse as exc:
        print(f"beam collapse: {exc}", file=sys.stderr)
        return EXIT_COLLAPSE
    except (FileFormatError, ConfigError, DictionaryError, MalformedBlob,
            InvalidPointer, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
