"""Pure-Python repair search, used when the compiled kernel is unavailable.

Type sets arrive as bitmasks (Person=1, Place=2, Thing=4). Permutations are
visited in lexicographic order and only a strictly better
``(anchor_miss, penalty, cost)`` key replaces the incumbent, so ties resolve
to the lexicographically smallest mapping.
"""

from itertools import permutations


def chain_penalty(in_masks, out_masks):
    n = len(in_masks)
    return sum(1 for k in range(n - 1) if not (out_masks[k] & in_masks[k + 1]))


def search(in_masks, out_masks, anchor_mask=0):
    n = len(in_masks)
    best = None
    best_key = None
    for mapping in permutations(range(n)):
        miss = 1 if anchor_mask and not (in_masks[mapping[0]] & anchor_mask) else 0
        penalty = 0
        for k in range(n - 1):
            if not (out_masks[mapping[k]] & in_masks[mapping[k + 1]]):
                penalty += 1
        cost = 0
        for k in range(n):
            if mapping[k] != k:
                cost += 1
        key = (miss, penalty, cost)
        if best_key is None or key < best_key:
            best_key = key
            best = mapping
            # identity is visited first; any other permutation displaces >= 2 rows
            if key == (0, 0, 0) or key == (0, 0, 2):
                break
    return tuple(best), best_key[1], best_key[2], best_key[0]
