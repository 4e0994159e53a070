"""Text normalization, character/word n-grams and hashed count features.

Every n-gram is tagged with its kind and order (``c4|``, ``w1|``, ...),
hashed with 64-bit FNV-1a over its UTF-8 bytes and folded into
``num_buckets`` buckets.  Two code paths produce identical buckets:

* :func:`featurize` handles one text with a memoized scalar hash; it is the
  inference path.
* :func:`featurize_batch` hashes a whole corpus at once with numpy and
  returns a CSR count matrix; it is the training path.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

from . import _kernels

FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3
_MASK64 = (1 << 64) - 1

# type alias: bucket index -> positive count
FeatureVector = dict


@dataclass(frozen=True)
class FeatureConfig:
    char_orders: tuple[int, ...] = (2, 4, 6)
    word_orders: tuple[int, ...] = (1, 2)
    num_buckets: int = 1 << 20
    lowercase: bool = True

    def __post_init__(self):
        object.__setattr__(self, "char_orders", tuple(sorted(set(self.char_orders))))
        object.__setattr__(self, "word_orders", tuple(sorted(set(self.word_orders))))
        for n in self.char_orders + self.word_orders:
            if int(n) != n or n < 1:
                raise ValueError(f"n-gram orders must be integers >= 1, got {n!r}")
        b = self.num_buckets
        if b < 2 or b & (b - 1):
            raise ValueError(f"num_buckets must be a power of two >= 2, got {b}")

    def to_dict(self) -> dict:
        return {
            "char_orders": list(self.char_orders),
            "word_orders": list(self.word_orders),
            "num_buckets": self.num_buckets,
            "lowercase": self.lowercase,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FeatureConfig":
        return cls(tuple(d["char_orders"]), tuple(d["word_orders"]),
                   int(d["num_buckets"]), bool(d["lowercase"]))


def normalize(text: str, config: FeatureConfig = FeatureConfig()) -> str:
    if config.lowercase:
        text = text.lower()
    return " ".join(text.split())


def char_ngrams(text: str, n: int) -> Counter:
    """Character n-grams of an already-normalized text, spaces included."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return Counter(text[i:i + n] for i in range(len(text) - n + 1))


def word_ngrams(text: str, n: int) -> Counter:
    if n < 1:
        raise ValueError("n must be >= 1")
    tokens = text.split()
    return Counter(" ".join(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def fnv1a_64(data: bytes, h: int = FNV_OFFSET) -> int:
    for byte in data:
        h = ((h ^ byte) * FNV_PRIME) & _MASK64
    return h


def tag(kind: str, n: int) -> str:
    return f"{kind}{n}|"


@lru_cache(maxsize=1 << 20)
def _hash_tagged(tagged: str) -> int:
    return fnv1a_64(tagged.encode("utf-8"))


def tagged_ngrams(norm: str, config: FeatureConfig) -> list[str]:
    """All tagged n-grams of a normalized text, in featurization order."""
    grams: list[str] = []
    L = len(norm)
    for n in config.char_orders:
        prefix = f"c{n}|"
        grams += [prefix + norm[i:i + n] for i in range(L - n + 1)]
    if config.word_orders and norm:
        tokens = norm.split(" ")
        for n in config.word_orders:
            prefix = f"w{n}|"
            if n == 1:
                grams += [prefix + t for t in tokens]
            else:
                grams += [prefix + " ".join(tokens[i:i + n]) for i in range(len(tokens) - n + 1)]
    return grams


def featurize_normalized(norm: str, config: FeatureConfig) -> FeatureVector:
    mask = config.num_buckets - 1
    return Counter([h & mask for h in map(_hash_tagged, tagged_ngrams(norm, config))])


def featurize(text: str, config: FeatureConfig = FeatureConfig()) -> FeatureVector:
    """Hashed n-gram counts for one text, as ``{bucket: count}``."""
    return featurize_normalized(normalize(text, config), config)


@lru_cache(maxsize=64)
def _kernel_args(config: FeatureConfig):
    return (np.array(config.char_orders, dtype=np.int64),
            np.array([_tag_seed("c", n) for n in config.char_orders], dtype=np.uint64),
            np.array(config.word_orders, dtype=np.int64),
            np.array([_tag_seed("w", n) for n in config.word_orders], dtype=np.uint64),
            np.uint64(config.num_buckets - 1))


def featurize_arrays(norm: str, config: FeatureConfig) -> tuple[np.ndarray, np.ndarray]:
    """``(buckets, counts)`` arrays for a normalized text, in first-occurrence order.

    Same content and order as :func:`featurize_normalized`; uses the compiled
    kernel when numba is available.
    """
    if _kernels.HAVE_NUMBA:
        return _kernels.bucket_counts(np.frombuffer(norm.encode("utf-8"), dtype=np.uint8),
                                      *_kernel_args(config))
    return fv_arrays(featurize_normalized(norm, config))


def fv_arrays(fv: FeatureVector) -> tuple[np.ndarray, np.ndarray]:
    n = len(fv)
    return (np.fromiter(fv.keys(), dtype=np.int64, count=n),
            np.fromiter(fv.values(), dtype=np.float64, count=n))


def _fnv_spans(buf: np.ndarray, starts: np.ndarray, lengths: np.ndarray, seed: int) -> np.ndarray:
    """FNV-1a of ``buf[start:start+length]`` for every span, continuing from ``seed``."""
    out = np.full(len(starts), seed, dtype=np.uint64)
    if len(starts) == 0:
        return out
    order = np.argsort(-lengths, kind="stable")
    s = starts[order]
    ln = lengths[order]
    h = out.copy()
    prime = np.uint64(FNV_PRIME)
    # sorted longest first, so the spans still active at byte k form a prefix
    longer_than = np.bincount(ln, minlength=int(ln[0]) + 1)[::-1].cumsum()[::-1]
    for k in range(int(ln[0])):
        m = int(longer_than[k + 1])
        if m == 0:
            break
        h[:m] = (h[:m] ^ buf[s[:m] + k]) * prime
    out[order] = h
    return out


def _tag_seed(kind: str, n: int) -> int:
    return fnv1a_64(tag(kind, n).encode("ascii"))


def _join_utf8(texts: Sequence[str]):
    encoded = [t.encode("utf-8") for t in texts]
    byte_len = np.fromiter((len(b) for b in encoded), dtype=np.int64, count=len(encoded))
    doc_start = np.zeros(len(encoded) + 1, dtype=np.int64)
    np.cumsum(byte_len, out=doc_start[1:])
    buf = np.frombuffer(b"".join(encoded) + b"\0", dtype=np.uint8)
    return buf, doc_start, byte_len


def featurize_batch(texts: Iterable[str], config: FeatureConfig = FeatureConfig()) -> sp.csr_matrix:
    """Hashed count matrix (``len(texts) x num_buckets``) for many texts."""
    norm = [normalize(t, config) for t in texts]
    buf, doc_start, byte_len = _join_utf8(norm)
    ndocs = len(norm)
    total = int(doc_start[-1])
    body = buf[:total]
    mask = np.uint64(config.num_buckets - 1)
    rows, cols = [], []

    if config.char_orders:
        # UTF-8 lead bytes mark character starts; the trailing sentinel closes the last char
        char_pos = np.flatnonzero((body & 0xC0) != 0x80)
        char_ext = np.append(char_pos, total)
        first_char = np.searchsorted(char_pos, doc_start[:-1])
        nchars = np.searchsorted(char_pos, doc_start[1:]) - first_char
        doc_of_char = np.repeat(np.arange(ndocs), nchars)
        local = np.arange(len(char_pos)) - first_char[doc_of_char]
        for n in config.char_orders:
            ok = np.flatnonzero(local <= nchars[doc_of_char] - n)
            starts = char_ext[ok]
            lengths = char_ext[ok + n] - starts
            h = _fnv_spans(buf, starts, lengths, _tag_seed("c", n))
            rows.append(doc_of_char[ok])
            cols.append((h & mask).astype(np.int64))

    if config.word_orders:
        is_space = body == 0x20
        at_doc_start = np.zeros(total, dtype=bool)
        at_doc_start[doc_start[:-1][byte_len > 0]] = True
        at_doc_end = np.zeros(total, dtype=bool)
        at_doc_end[doc_start[1:][byte_len > 0] - 1] = True
        prev_space = np.concatenate([[True], is_space[:-1]]) if total else is_space
        next_space = np.concatenate([is_space[1:], [True]]) if total else is_space
        tok_start = np.flatnonzero(~is_space & (at_doc_start | prev_space))
        tok_end = np.flatnonzero(~is_space & (at_doc_end | next_space)) + 1
        doc_of_tok = np.searchsorted(doc_start, tok_start, side="right") - 1
        for n in config.word_orders:
            if len(tok_start) < n:
                continue
            ok = np.flatnonzero(doc_of_tok[: len(tok_start) - n + 1] == doc_of_tok[n - 1:])
            starts = tok_start[ok]
            lengths = tok_end[ok + n - 1] - starts
            h = _fnv_spans(buf, starts, lengths, _tag_seed("w", n))
            rows.append(doc_of_tok[ok])
            cols.append((h & mask).astype(np.int64))

    if rows:
        r = np.concatenate(rows)
        c = np.concatenate(cols)
    else:
        r = c = np.zeros(0, dtype=np.int64)
    m = sp.coo_matrix((np.ones(len(r), dtype=np.int64), (r, c)),
                      shape=(ndocs, config.num_buckets))
    m = m.tocsr()
    m.sum_duplicates()
    return m


def csr_row_to_fv(matrix: sp.csr_matrix, i: int) -> FeatureVector:
    lo, hi = matrix.indptr[i], matrix.indptr[i + 1]
    return dict(zip(matrix.indices[lo:hi].tolist(), matrix.data[lo:hi].tolist()))
