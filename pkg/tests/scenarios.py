"""Scripted mock worlds shared by the decomposition, resolver and acceptance tests."""

from chaincheck import prompts
from chaincheck.backends.base import Backends
from chaincheck.backends.mock import MockEmbedder, MockLinker, MockLLM
from chaincheck.decompose import TEMPERATURES
from chaincheck.typelib import build_library, default_template_labels

DRAGONBALL = "Where is the birthplace of the creator of Dragonball?"

ALIGNED = "| born in | creator of |"  # executes creator of (Thing->Person), born in (Person->Place)
SWAPPED = "| creator of | born in |"  # repairable by one swap
BROKEN = "| born in | born in |"  # Person->Place twice, penalty 1 under every order
WORSE = "| born in | born in | born in |"  # penalty 2 under every order


def library(embedder=None):
    return build_library(default_template_labels(), embedder or MockEmbedder())


def backends(question, entity, chains, *, entity_kind="thing", aliases=None):
    """Backends whose extraction prompt answers ``chains[t]`` (or ``chains`` at every t)."""
    llm = MockLLM()
    if isinstance(chains, str):
        llm.script(prompts.extract_chain(question), chains)
    else:
        for t, response in chains.items():
            llm.script(prompts.extract_chain(question), response, temperature=t)
    linker = MockLinker(aliases or {})
    if entity is not None:
        linker.add(entity, entity, entity_kind == "person")
        if entity_kind != "person":
            llm.script(prompts.entity_type(entity), entity_kind, temperature=0.0)
    return Backends(llm, MockEmbedder(), linker)


def per_temperature(default, **overrides):
    """Response table over all eleven temperatures; overrides keyed like t03=..."""
    table = {t: default for t in TEMPERATURES}
    for key, value in overrides.items():
        table[int(key[1:]) / 10] = value
    return table


def extraction_calls(llm, question):
    prompt = prompts.extract_chain(question)
    return [c for c in llm.calls if c.prompt == prompt]


def dragonball_world(extra_aliases=None):
    """Unedited facts: Dragonball was created by Toriyama, who was born in Japan."""
    aliases = {
        "Toriyama": ("Akira Toriyama", True),
        "Akira Toriyama": ("Akira Toriyama", True),
    }
    aliases.update(extra_aliases or {})
    b = backends(DRAGONBALL, "Dragonball", ALIGNED, aliases=aliases)
    script_fact(b.llm, "Dragonball", "creator of", "Who is the creator of Dragonball?", "Toriyama")
    script_fact(b.llm, "Toriyama", "born in", "Where was Toriyama born?", "Answer: Japan.")
    return b


def script_fact(llm, entity, relation, question, answer):
    llm.script(prompts.question_gen(entity, relation), f" {question}\n")
    llm.script(prompts.answer(question), f" {answer}")
