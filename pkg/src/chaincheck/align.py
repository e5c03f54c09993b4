"""Alignment penalties over type chains and minimal-cost permutation repair.

The permutation search is the only hot loop in the pipeline. A compiled
kernel (``_repair_cy``) is used when it was built; otherwise the pure-Python
kernel in ``_repair_py`` takes over. ``CHAINCHECK_KERNEL=python`` forces the
fallback.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Optional

from chaincheck.errors import ChainTooLongError, InvalidArgumentError
from chaincheck.types import (
    EntityType,
    Permutation,
    RelationChain,
    TypeChain,
    apply_permutation,
)
from chaincheck import _repair_py

MAX_CHAIN_LENGTH = 8

if os.environ.get("CHAINCHECK_KERNEL", "").lower() == "python":
    _kernel = _repair_py
    KERNEL = "python"
else:
    try:
        from chaincheck import _repair_cy as _kernel  # type: ignore[no-redef]

        KERNEL = "cython"
    except ImportError:
        _kernel = _repair_py
        KERNEL = "python"


def available_kernels():
    """Map of kernel name to search function for every kernel importable here."""
    kernels = {"python": _repair_py.search}
    try:
        from chaincheck import _repair_cy

        kernels["cython"] = _repair_cy.search
    except ImportError:
        pass
    return kernels


@dataclass(frozen=True)
class RepairResult:
    permutation: Permutation
    repaired_types: TypeChain
    repaired_relations: RelationChain
    penalty: int
    cost: int
    fully_aligned: bool
    anchor_satisfied: bool = True


def alignment_penalty(chain: TypeChain) -> int:
    """Count adjacent hops whose output types share nothing with the next hop's input types."""
    pairs = chain.pairs
    return sum(1 for k in range(len(pairs) - 1) if not pairs[k][1].overlaps(pairs[k + 1][0]))


def permutation_cost(p: Permutation) -> int:
    """Number of displaced rows, i.e. N minus the trace of the permutation matrix."""
    return sum(1 for k, src in enumerate(p.mapping) if k != src)


def repair_chain(
    types: TypeChain,
    relations: RelationChain,
    *,
    anchor: Optional[EntityType] = None,
    max_length: int = MAX_CHAIN_LENGTH,
    search=None,
) -> RepairResult:
    """Reorder a chain so neighbouring hops type-check, displacing as few hops as possible.

    Among all orderings the winner minimises ``(penalty, cost)`` and then the
    mapping itself lexicographically. With ``anchor`` set, orderings whose
    first hop cannot accept an entity of that type rank after every ordering
    that can.
    """
    n = len(types)
    if n != len(relations):
        raise InvalidArgumentError(
            f"type chain length {n} does not match relation chain length {len(relations)}"
        )
    if n > max_length:
        raise ChainTooLongError(n, max_length)
    search = search or _kernel.search
    in_masks = [p[0].mask for p in types.pairs]
    out_masks = [p[1].mask for p in types.pairs]
    mapping, penalty, cost, miss = search(in_masks, out_masks, anchor.bit if anchor else 0)
    perm = Permutation(tuple(mapping))
    return RepairResult(
        permutation=perm,
        repaired_types=TypeChain(tuple(apply_permutation(perm, types.pairs))),
        repaired_relations=RelationChain(
            tuple(apply_permutation(perm, relations.relations)), relations.surface_order_raw
        ),
        penalty=int(penalty),
        cost=int(cost),
        fully_aligned=penalty == 0,
        anchor_satisfied=not miss,
    )


def identity_repair(types: TypeChain, relations: RelationChain) -> RepairResult:
    """Best-effort result for chains too long to enumerate: keep the extracted order."""
    perm = Permutation.identity(len(types))
    penalty = alignment_penalty(types)
    return RepairResult(perm, types, relations, penalty, 0, penalty == 0)
