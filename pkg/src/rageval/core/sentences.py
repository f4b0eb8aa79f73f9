"""
Rule-based sentence splitting.

The number of sentences returned by `split_sentences` is the denominator of the
context relevance score, so any change here changes reported scores. The golden
tests in tests/test_sentences.py pin its behaviour.
"""

import re
from typing import List

ABBREVIATIONS = frozenset(
    {
        "mr.", "mrs.", "ms.", "dr.", "prof.", "sr.", "jr.", "st.", "mt.",
        "gen.", "col.", "lt.", "sgt.", "capt.", "gov.", "sen.", "rep.",
        "inc.", "ltd.", "co.", "corp.", "no.", "vs.", "etc.", "approx.",
        "e.g.", "i.e.", "u.s.", "u.k.", "u.n.", "a.m.", "p.m.",
        "jan.", "feb.", "mar.", "apr.", "jun.", "jul.", "aug.", "sep.",
        "sept.", "oct.", "nov.", "dec.", "fig.", "vol.", "ed.", "est.",
    }
)

# Terminal punctuation, optional closing quotes/brackets, whitespace, then
# something that can open a sentence.
_BOUNDARY = re.compile(
    r"([.!?][\"'”’)\]]*)\s+(?=[\"'“‘(\[]?[A-Z0-9])"
)
_INITIAL = re.compile(r"^[A-Z]\.$")
_WHITESPACE = re.compile(r"\s+")


def normalize_whitespace(text: str) -> str:
    return _WHITESPACE.sub(" ", text).strip()


def _ends_with_abbreviation(chunk: str) -> bool:
    words = chunk.split()
    if not words:
        return False
    last = words[-1].lstrip("(\"'“")
    return last.lower() in ABBREVIATIONS or bool(_INITIAL.match(last))


def split_sentences(text: str) -> List[str]:
    """Splits text into whitespace-normalized sentences, in order."""
    sentences: List[str] = []
    start = 0
    for match in _BOUNDARY.finditer(text):
        end = match.end(1)
        chunk = text[start:end]
        if match.group(1).startswith(".") and _ends_with_abbreviation(chunk):
            continue
        chunk = normalize_whitespace(chunk)
        if chunk:
            sentences.append(chunk)
        start = match.end()

    tail = normalize_whitespace(text[start:])
    if tail:
        sentences.append(tail)
    return sentences
