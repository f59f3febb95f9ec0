"""Fixed-point, memory-efficient CTC beam-search decoding.

Label convention used across the package: label ids are 1-based
(1..K-1 word characters, K the word separator, K+1 the CTC blank);
probability vectors are positional, so index k-1 holds label k and the
blank sits last.
"""

from .decoder import (
    BeamCollapse,
    BeamDecoder,
    BeamSlot,
    BeamState,
    DecodeConfig,
    DecodeResult,
    extension_probability,
    quantize_prob_rows,
)
from .dictionary import (
    Alphabet,
    CompiledDict,
    DictionaryError,
    MalformedBlob,
    build_trie,
    compile_words,
    emit_compiled,
    enumerate_words,
    load_blob,
    report_sizes,
    save_blob,
    size_formulas,
    to_binary_trie,
)
from .fixedpoint import (
    QConst,
    QLogit,
    QProb,
    SatCounter,
    leading_one_position,
    qadd,
    qmul,
    shift_value,
)
from .lexicon import ExtensionVerdict, InvalidPointer, extend_probs, resolve_prefix
from .reference import (
    NaiveLexicon,
    PathScore,
    best_labelling_bruteforce,
    collapse_path,
    decode_reference,
    labelling_distribution,
)
from .softmax import (
    SoftmaxParams,
    asr_default_params,
    best_bias_pair,
    bias_candidates,
    quantize_logits,
    softmax_approx,
    softmax_approx_values,
    softmax_exact,
    str_default_params,
    sweep_bias_params,
    synthetic_frames,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
