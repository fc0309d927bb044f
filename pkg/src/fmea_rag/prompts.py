"""Fixed prompt templates.

These strings are part of the artifact's contract: golden tests pin
their exact bytes, and the scripted model client recognizes prompts by
their instruction header. Change them only together with those tests
and bump PROMPT_VERSION.
"""

from __future__ import annotations

PROMPT_VERSION = 1

QUERY_INSTRUCTION = (
    "You translate one question about failure analysis data into one graph query.\n"
    "Use exactly this grammar, nothing else:\n"
    "\n"
    "  MATCH pattern (WHERE cond (AND cond)*)? RETURN item (, item)*\n"
    "        (ORDER BY item (ASC|DESC)?)? (LIMIT n)?\n"
    "  pattern: (var:Label {name: \"...\"}) chained with -[:relType]-> or <-[:relType]-\n"
    "  item:    var | var.property | count(...) | sum(...) | avg(...) | min(...) | max(...)\n"
    "  cond:    var.property (= | <> | < | <= | > | >=) value\n"
    "\n"
    "Reply with exactly one query and no commentary. If no query in this\n"
    "grammar can help with the question, reply with the single token NONE."
)

ANSWER_INSTRUCTION = (
    "Answer the question using only the context lines below. Quote numbers\n"
    "exactly as they appear. If the context does not contain the answer,\n"
    "say so and name what is missing."
)

CONTEXT_HEADER = "Context:"
QUESTION_HEADER = "Question:"


def build_query_prompt(schema: str, question: str) -> str:
    """Prompt for query generation: instruction, schema, then the question."""
    return f"{QUERY_INSTRUCTION}\n\n{schema}\n\n{QUESTION_HEADER} {question}"


def build_answer_prompt(contexts: list[str], question: str) -> str:
    """Prompt for answer generation: contexts verbatim, in order."""
    block = "\n".join(contexts)
    return f"{ANSWER_INSTRUCTION}\n\n{CONTEXT_HEADER}\n{block}\n\n{QUESTION_HEADER} {question}"
