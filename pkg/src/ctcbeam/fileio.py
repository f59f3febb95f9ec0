"""Deterministic, bit-exact file formats and the textual run config.

Logits files carry a little-endian 17-byte header (magic ``CTCL``,
version, frame count, vector width, element type) followed by the
row-major payload: 32-bit IEEE floats (dtype 0) or 8-bit quantized
logits (dtype 1).

The run config is a flat ``key = value`` document; unknown keys are
rejected so typos cannot silently fall back to defaults. Slope
constants are decimal (and must be exactly representable at 4
fractional bits); bias constants are binary fraction strings, which
pins their exact bit patterns.
"""

from __future__ import annotations

import csv
import struct
from dataclasses import dataclass

import numpy as np

from .dictionary import Alphabet, DictionaryError
from .fixedpoint import QConst
from .softmax import SoftmaxParams, VARIANTS, asr_default_params

LOGITS_MAGIC = b"CTCL"
LOGITS_VERSION = 1
LOGITS_HEADER = struct.Struct("<4sIIIB")

DTYPE_FLOAT32 = 0
DTYPE_QLOGIT = 1


class FileFormatError(ValueError):
    """Malformed header or payload in a data file."""


class ConfigError(ValueError):
    """Invalid key or value in a run config document."""


def write_logits(path, matrix, dtype: int = DTYPE_FLOAT32) -> None:
    arr = np.asarray(matrix)
    if arr.ndim != 2:
        raise FileFormatError("logits must be a (T, K+1) matrix")
    t, width = arr.shape
    if dtype == DTYPE_FLOAT32:
        payload = arr.astype("<f4").tobytes()
    elif dtype == DTYPE_QLOGIT:
        payload = arr.astype(np.int8).tobytes()
    else:
        raise FileFormatError(f"unknown dtype {dtype}")
    with open(path, "wb") as fh:
        fh.write(LOGITS_HEADER.pack(LOGITS_MAGIC, LOGITS_VERSION, t, width, dtype))
        fh.write(payload)


def read_logits(path) -> tuple[np.ndarray, int]:
    """Return (matrix, dtype); dtype 1 surfaces int8 raws unconverted."""
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < LOGITS_HEADER.size:
        raise FileFormatError("logits file shorter than its header")
    magic, version, t, width, dtype = LOGITS_HEADER.unpack_from(data)
    if magic != LOGITS_MAGIC:
        raise FileFormatError(f"bad magic {magic!r}")
    if version != LOGITS_VERSION:
        raise FileFormatError(f"unsupported version {version}")
    if dtype not in (DTYPE_FLOAT32, DTYPE_QLOGIT):
        raise FileFormatError(f"unknown dtype {dtype}")
    element = 4 if dtype == DTYPE_FLOAT32 else 1
    expected = t * width * element
    payload = data[LOGITS_HEADER.size:]
    if len(payload) != expected:
        raise FileFormatError(
            f"payload is {len(payload)} bytes, expected {expected}"
        )
    if dtype == DTYPE_FLOAT32:
        matrix = np.frombuffer(payload, dtype="<f4").reshape(t, width)
        return matrix.astype(np.float64), dtype
    matrix = np.frombuffer(payload, dtype=np.int8).reshape(t, width)
    return matrix.copy(), dtype


def read_alphabet(path) -> Alphabet:
    """One label per line; order defines ids, the last line is the separator."""
    with open(path, "r", encoding="utf-8") as fh:
        labels = [line.rstrip("\n") for line in fh if line.rstrip("\n")]
    try:
        return Alphabet(tuple(labels))
    except DictionaryError as exc:
        raise FileFormatError(str(exc)) from exc


@dataclass(frozen=True)
class RunConfig:
    """Decode parameters (minus K, which comes from the data) plus the
    softmax constants."""

    decode: dict
    softmax: SoftmaxParams


_DECODE_KEYS = {
    "w": int,
    "q": int,
    "t_max": int,
    "pl_exponent": int,
    "mode": str,
    "tie_break": str,
    "adjust_enabled": bool,
    "use_lm": bool,
}
_SOFTMAX_KEYS = ("lambda", "inv_lambda", "d1", "d2", "variant")


def _parse_bool(value: str) -> bool:
    lowered = value.lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {value!r}")


def parse_config(text: str) -> RunConfig:
    decode: dict = {}
    softmax_kw = {}
    for lineno, raw_line in enumerate(text.splitlines(), 1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        if key in _DECODE_KEYS:
            kind = _DECODE_KEYS[key]
            try:
                decode[key] = _parse_bool(value) if kind is bool else kind(value)
            except ValueError as exc:
                raise ConfigError(f"line {lineno}: {exc}") from exc
        elif key in _SOFTMAX_KEYS:
            softmax_kw[key] = value
        else:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")

    base = asr_default_params()
    try:
        lam = QConst.from_float(float(softmax_kw["lambda"]), 4) \
            if "lambda" in softmax_kw else base.lam
        inv_lam = QConst.from_float(float(softmax_kw["inv_lambda"]), 4) \
            if "inv_lambda" in softmax_kw else base.inv_lam
        d1 = QConst.from_binary(softmax_kw["d1"]) if "d1" in softmax_kw else base.d1
        d2 = QConst.from_binary(softmax_kw["d2"]) if "d2" in softmax_kw else base.d2
        variant = softmax_kw.get("variant", base.variant)
        if variant not in VARIANTS:
            raise ValueError(f"unknown variant {variant!r}")
        params = SoftmaxParams(lam=lam, inv_lam=inv_lam, d1=d1, d2=d2,
                               variant=variant)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return RunConfig(decode=decode, softmax=params)


def read_config(path) -> RunConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())


def default_config_text() -> str:
    return (
        "# decoding\n"
        "w = 8\n"
        "q = 30\n"
        "mode = fixed\n"
        "adjust_enabled = true\n"
        "use_lm = true\n"
        "tie_break = incumbent-stays\n"
        "\n"
        "# softmax constants\n"
        "lambda = 1.5\n"
        "inv_lambda = 0.625\n"
        "d1 = 0.10111110111\n"
        "d2 = 0.1111110010\n"
        "variant = paper-faithful\n"
    )


class TraceWriter:
    """CSV dump of the beam after every step, for debugging and diffing."""

    COLUMNS = ("t", "slot", "pr_total", "pr_nonblank", "pr_blank",
               "dict_ptr", "sentence")

    def __init__(self, fh, q: int | None = None, alphabet: Alphabet | None = None):
        self._writer = csv.writer(fh)
        self._writer.writerow(self.COLUMNS)
        self._scale = float(1 << q) if q is not None else None
        self._alphabet = alphabet

    def _value(self, x):
        return x / self._scale if self._scale is not None else x

    def __call__(self, t: int, state) -> None:
        for i in range(state.w):
            if not state.occupied[i]:
                continue
            labels = state.sent[i].to_labels()
            if self._alphabet is not None:
                sent = "".join(self._alphabet.char_of(l) for l in labels)
            else:
                sent = " ".join(str(l) for l in labels)
            self._writer.writerow([
                t, i, repr(self._value(state.pr_total[i])),
                repr(self._value(state.pr_nonblank[i])),
                repr(self._value(state.pr_blank[i])),
                state.dict_ptr[i], sent,
            ])
