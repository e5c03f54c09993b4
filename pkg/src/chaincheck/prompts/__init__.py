"""In-context prompts, shipped verbatim as text resources, and their query suffixes."""

from functools import lru_cache
from importlib import resources


@lru_cache(maxsize=None)
def load(name: str) -> str:
    return resources.files(__name__).joinpath(f"{name}.txt").read_text(encoding="utf-8")


def extract_chain(question: str) -> str:
    return f"{load('extract_chain')}\n\nQuestion: {question.strip()}\nSRO:"


def entity_type(entity: str) -> str:
    return (
        f"{load('entity_type')}\n\n"
        f"Choose between place, thing to describe the following entity:\nEntity: {entity.strip()}\nType:"
    )


def question_gen(entity: str, relation: str) -> str:
    return (
        f"{load('question_gen')}\n\nRephrase the following triple as a question:\n"
        f"Triple: | {entity.strip()} | {relation.strip()} |\nQuestion:"
    )


def answer(question: str) -> str:
    return f"{load('answer')}\n\nQuestion: {question.strip()}\nAnswer:"
