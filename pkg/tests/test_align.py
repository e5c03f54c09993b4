import random
from itertools import permutations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chaincheck import align
from chaincheck.align import (
    MAX_CHAIN_LENGTH,
    alignment_penalty,
    available_kernels,
    identity_repair,
    permutation_cost,
    repair_chain,
)
from chaincheck.errors import ChainTooLongError, InvalidArgumentError
from chaincheck.types import EntityType, Permutation, RelationChain, TypeChain, TypeSet

from oracles import cost_oracle, penalty_oracle, repair_oracle

PERSON, PLACE, THING = EntityType.PERSON, EntityType.PLACE, EntityType.THING
KERNELS = sorted(available_kernels())


def ts(*types):
    return TypeSet.of(*types)


def chain_of(pairs):
    return TypeChain(tuple(pairs)), RelationChain(tuple(f"r{i}" for i in range(len(pairs))))


def as_sets(tc):
    return [({t.value for t in i}, {t.value for t in o}) for i, o in tc]


masks = st.integers(min_value=1, max_value=7)


@st.composite
def type_chains(draw, min_size=1, max_size=6):
    n = draw(st.integers(min_size, max_size))
    return TypeChain.from_masks([(draw(masks), draw(masks)) for _ in range(n)])


def test_compiled_kernel_is_built():
    # the extension is optional at install time, but this checkout is expected to build it
    assert "cython" in KERNELS
    assert align.KERNEL in KERNELS


@pytest.mark.parametrize(
    "pairs, expected",
    [
        ([(ts(THING), ts(PERSON)), (ts(PERSON), ts(PLACE))], 0),
        ([(ts(PERSON), ts(PLACE)), (ts(THING), ts(PERSON))], 1),
        ([(ts(PERSON), ts(PLACE, THING)), (ts(THING), ts(PERSON)), (ts(PLACE), ts(PLACE))], 1),
    ],
)
def test_alignment_penalty_examples(pairs, expected):
    assert alignment_penalty(TypeChain(tuple(pairs))) == expected


@given(type_chains(max_size=8))
def test_penalty_bounds_and_oracle(tc):
    p = alignment_penalty(tc)
    assert 0 <= p <= len(tc) - 1
    assert p == penalty_oracle(as_sets(tc))


@pytest.mark.parametrize(
    "mapping, expected", [((0, 1, 2, 3), 0), ((1, 0), 2), ((0, 2, 1, 3), 2)]
)
def test_permutation_cost_examples(mapping, expected):
    assert permutation_cost(Permutation(mapping)) == expected
    assert cost_oracle(mapping) == expected


@given(st.integers(1, 8).flatmap(lambda n: st.permutations(list(range(n)))))
def test_cost_zero_iff_identity(mapping):
    p = Permutation(tuple(mapping))
    assert (permutation_cost(p) == 0) == p.is_identity()
    assert permutation_cost(p) == cost_oracle(mapping)


@pytest.mark.parametrize("kernel", KERNELS)
def test_already_aligned_is_identity(kernel):
    tc, rc = chain_of([(ts(THING), ts(PERSON)), (ts(PERSON), ts(PLACE))])
    r = repair_chain(tc, rc, search=available_kernels()[kernel])
    assert r.permutation.is_identity() and r.penalty == 0 and r.cost == 0 and r.fully_aligned


@pytest.mark.parametrize("kernel", KERNELS)
def test_two_relation_swap(kernel):
    tc = TypeChain(((ts(PERSON), ts(PLACE)), (ts(THING), ts(PERSON))))
    rc = RelationChain(("born in", "creator of"))
    assert alignment_penalty(tc) == 1
    r = repair_chain(tc, rc, search=available_kernels()[kernel])
    assert r.permutation.mapping == (1, 0)
    assert r.repaired_types.pairs == ((ts(THING), ts(PERSON)), (ts(PERSON), ts(PLACE)))
    assert r.repaired_relations.relations == ("creator of", "born in")
    assert (r.penalty, r.cost, r.fully_aligned) == (0, 2, True)


@pytest.mark.parametrize("kernel", KERNELS)
def test_unrepairable_keeps_identity(kernel):
    tc, rc = chain_of([(ts(PERSON), ts(PLACE))] * 3)
    brute = {perm: alignment_penalty(TypeChain(tuple(tc.pairs[i] for i in perm))) for perm in permutations(range(3))}
    assert set(brute.values()) == {2}
    r = repair_chain(tc, rc, search=available_kernels()[kernel])
    assert r.permutation.is_identity() and r.penalty == 2 and not r.fully_aligned


@pytest.mark.parametrize("kernel", KERNELS)
@settings(max_examples=300, deadline=None)
@given(tc=type_chains(max_size=6), anchor=st.sampled_from([None, PERSON, PLACE, THING]))
def test_repair_matches_brute_force(kernel, tc, anchor):
    rc = RelationChain(tuple(f"r{i}" for i in range(len(tc))))
    r = repair_chain(tc, rc, anchor=anchor, search=available_kernels()[kernel])
    mapping, penalty, cost, miss = repair_oracle(as_sets(tc), anchor.value if anchor else None)
    assert r.permutation.mapping == mapping
    assert (r.penalty, r.cost, r.anchor_satisfied) == (penalty, cost, not miss)
    assert r.penalty == alignment_penalty(r.repaired_types)
    if anchor is None:
        # the anchor filter ranks first, so only unanchored repair is bounded by the identity
        assert r.penalty <= alignment_penalty(tc)


def test_kernels_agree_on_random_chains_up_to_eight():
    kernels = available_kernels()
    rng = random.Random(11)
    for _ in range(150):
        n = rng.randint(1, 8)
        ins = [rng.randint(1, 7) for _ in range(n)]
        outs = [rng.randint(1, 7) for _ in range(n)]
        anchor = rng.choice([0, 1, 2, 4])
        results = {name: tuple(fn(ins, outs, anchor)) for name, fn in kernels.items()}
        assert len({(tuple(m), p, c, x) for m, p, c, x in results.values()}) == 1


def test_anchor_prefers_orderings_that_accept_the_entity():
    # both orders align; only the swapped one starts from a Thing
    tc = TypeChain(((ts(PERSON), ts(THING)), (ts(THING), ts(PERSON))))
    rc = RelationChain(("employer of", "founder of"))
    assert repair_chain(tc, rc).permutation.is_identity()
    r = repair_chain(tc, rc, anchor=THING)
    assert r.permutation.mapping == (1, 0) and r.anchor_satisfied and r.fully_aligned


def test_too_long_chain_raises_and_identity_fallback():
    n = MAX_CHAIN_LENGTH + 1
    tc, rc = chain_of([(ts(PERSON), ts(PLACE))] * n)
    with pytest.raises(ChainTooLongError):
        repair_chain(tc, rc)
    r = identity_repair(tc, rc)
    assert r.permutation.is_identity() and r.penalty == n - 1 and r.cost == 0


def test_length_mismatch_rejected():
    tc, _ = chain_of([(ts(PERSON), ts(PLACE))] * 2)
    with pytest.raises(InvalidArgumentError):
        repair_chain(tc, RelationChain(("a",)))


def test_python_kernel_forced_by_environment():
    import os
    import subprocess
    import sys

    env = dict(os.environ, CHAINCHECK_KERNEL="python")
    out = subprocess.run(
        [sys.executable, "-c", "import chaincheck.align as a; print(a.KERNEL)"],
        env=env, capture_output=True, text=True, check=True,
    )
    assert out.stdout.strip() == "python"
