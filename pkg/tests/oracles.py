"""Independent reference implementations the tests compare the package against.

Written from the definitions, not from the package code: plain Python sets,
dense numpy permutation matrices and exhaustive sorting.
"""

from itertools import permutations

import numpy as np

from chaincheck.backends.base import CompletionRequest, LinkResult, Mention

PERSON, PLACE, THING = "Person", "Place", "Thing"
ALL_TYPES = (PERSON, PLACE, THING)


def penalty_oracle(pairs):
    """pairs: list of (set_in, set_out). One point for every adjacent pair without overlap."""
    total = 0
    for k in range(len(pairs) - 1):
        out_k = set(pairs[k][1])
        in_next = set(pairs[k + 1][0])
        if len(out_k & in_next) == 0:
            total += 1
    return total


def cost_oracle(mapping):
    n = len(mapping)
    m = np.zeros((n, n), dtype=int)
    for row, col in enumerate(mapping):
        m[row, col] = 1
    return n - int(np.trace(m))


def repair_oracle(pairs, anchor=None):
    """Sort every ordering by (anchor miss, penalty, cost, mapping) and take the first."""
    rows = []
    for mapping in permutations(range(len(pairs))):
        reordered = [pairs[i] for i in mapping]
        miss = 0
        if anchor is not None and anchor not in reordered[0][0]:
            miss = 1
        rows.append((miss, penalty_oracle(reordered), cost_oracle(mapping), mapping))
    rows.sort()
    miss, penalty, cost, mapping = rows[0]
    return mapping, penalty, cost, miss


def cosine(a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return float(a.dot(b) / (np.sqrt(a.dot(a)) * np.sqrt(b.dot(b))))


class TableEmbedder:
    """Embedder with hand-set vectors; unknown text is an error."""

    thread_safe = True

    def __init__(self, table):
        self.table = {k: np.asarray(v, dtype=float) for k, v in table.items()}

    def embed(self, text):
        vec = self.table[text]
        return vec / np.linalg.norm(vec)


class RecordingLLM:
    """Answers from a callable and keeps every request."""

    thread_safe = True

    def __init__(self, fn):
        self.fn = fn
        self.calls = []

    def complete(self, req: CompletionRequest) -> str:
        self.calls.append(req)
        return self.fn(req)


class NoMentionLinker:
    thread_safe = True

    def link(self, mention):
        return LinkResult(mention, False, 0.0)

    def find_mentions(self, text):
        return []


def mention(text, start, canonical=None, is_person=False):
    return Mention(text, start, LinkResult(canonical or text, is_person, 1.0))
