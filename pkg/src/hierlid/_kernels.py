"""Compiled inner loops for single-text inference.

``bucket_counts`` fuses n-gram enumeration, FNV-1a hashing and counting
over the UTF-8 bytes of a normalized text; it yields the same buckets, in
the same first-occurrence order, as :func:`hierlid.features.featurize`.
``accumulate`` is the naive Bayes scoring loop shared by every scoring
entry point so that all of them agree bit for bit.

Without numba both fall back to plain Python implementations.
"""

from __future__ import annotations

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover - exercised only without numba
    numba = None

HAVE_NUMBA = numba is not None

_PRIME = np.uint64(0x100000001B3)


def _accumulate(keys, counts, buckets, table, default, log_prior):
    s = log_prior.copy()
    nb = buckets.shape[0]
    ncls = s.shape[0]
    unseen = 0.0
    for i in range(keys.shape[0]):
        k = keys[i]
        r = np.searchsorted(buckets, k)
        if r < nb and buckets[r] == k:
            c = counts[i]
            for j in range(ncls):
                s[j] += c * table[r, j]
        else:
            unseen += counts[i]
    if unseen != 0.0:
        for j in range(ncls):
            s[j] += unseen * default[j]
    return s


def _accumulate_numpy(keys, counts, buckets, table, default, log_prior):
    s = log_prior.copy()
    if keys.shape[0] == 0:
        return s
    pos = np.searchsorted(buckets, keys)
    pos[pos == len(buckets)] = 0
    hit = buckets[pos] == keys if len(buckets) else np.zeros(len(keys), dtype=bool)
    for r, c in zip(pos[hit].tolist(), counts[hit].tolist()):
        s += c * table[r]
    unseen = counts[~hit].sum()
    if unseen != 0.0:
        s += unseen * default
    return s


def _bucket_counts(buf, char_orders, char_seeds, word_orders, word_seeds, mask):
    n = buf.shape[0]
    starts = np.empty(n + 1, dtype=np.int64)
    m = 0
    for i in range(n):
        if (buf[i] & 0xC0) != 0x80:
            starts[m] = i
            m += 1
    starts[m] = n

    tok_s = np.empty(n + 1, dtype=np.int64)
    tok_e = np.empty(n + 1, dtype=np.int64)
    t = 0
    if n > 0:
        tok_s[0] = 0
        for i in range(n):
            if buf[i] == 0x20:
                tok_e[t] = i
                t += 1
                tok_s[t] = i + 1
        tok_e[t] = n
        t += 1

    total = max(m * char_orders.shape[0] + t * word_orders.shape[0], 1)
    keys = np.empty(total, dtype=np.int64)
    counts = np.zeros(total, dtype=np.float64)
    used = 0
    # open addressing on the low bits of the bucket id
    cap = 16
    while cap < 2 * total:
        cap *= 2
    probe_mask = cap - 1
    table_key = np.full(cap, -1, dtype=np.int64)
    table_slot = np.empty(cap, dtype=np.int64)

    for oi in range(char_orders.shape[0] + word_orders.shape[0]):
        if oi < char_orders.shape[0]:
            order = char_orders[oi]
            seed = char_seeds[oi]
            ngrams = m - order + 1
        else:
            order = word_orders[oi - char_orders.shape[0]]
            seed = word_seeds[oi - char_orders.shape[0]]
            ngrams = t - order + 1
        for j in range(ngrams):
            if oi < char_orders.shape[0]:
                a = starts[j]
                b = starts[j + order]
            else:
                a = tok_s[j]
                b = tok_e[j + order - 1]
            h = seed
            for k in range(a, b):
                h = (h ^ np.uint64(buf[k])) * _PRIME
            key = np.int64(h & mask)
            p = key & probe_mask
            while table_key[p] != -1 and table_key[p] != key:
                p = (p + 1) & probe_mask
            if table_key[p] == key:
                counts[table_slot[p]] += 1.0
            else:
                table_key[p] = key
                table_slot[p] = used
                keys[used] = key
                counts[used] = 1.0
                used += 1
    return keys[:used], counts[:used]


def _route(scores, group_of_class, n_groups, use_sum):
    """Index of the winning group: posterior mass (SUM) or top class (MAX)."""
    best = 0
    top = scores[0]
    for i in range(1, scores.shape[0]):
        if scores[i] > top:
            top = scores[i]
            best = i
    if not use_sum:
        return group_of_class[best]
    # unnormalized posterior mass; the common softmax denominator cannot change the winner
    mass = np.zeros(n_groups)
    for i in range(scores.shape[0]):
        mass[group_of_class[i]] += np.exp(scores[i] - top)
    g = 0
    for i in range(1, n_groups):
        if mass[i] > mass[g]:
            g = i
    return g


if HAVE_NUMBA:
    accumulate = numba.njit(cache=True, nogil=True)(_accumulate)
    bucket_counts = numba.njit(cache=True, nogil=True)(_bucket_counts)
    route = numba.njit(cache=True, nogil=True)(_route)
else:  # pragma: no cover
    accumulate = _accumulate_numpy
    bucket_counts = None
    route = _route
