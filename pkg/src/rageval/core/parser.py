"""Parsers turning free-text LLM responses into structured values."""

import logging
import re
from dataclasses import dataclass
from enum import Enum
from typing import List, Tuple

from rageval.core.sentences import normalize_whitespace, split_sentences
from rageval.models.records import StatementSet
from rageval.utils.enumerators import Preference
from rageval.utils.exceptions import (
    EmptyQuestion,
    NoStatementsFound,
    OutOfRange,
    UnparseableRanking,
    UnparseableScore,
    UnparseableVerdict,
    VerdictCountMismatch,
)

logger = logging.getLogger(__name__)

INSUFFICIENT_INFORMATION = "insufficient information"

_BULLET = re.compile(r"^\s*(?:\(?\d+[.):]|[-*•])\s+")
_STATEMENT_PREFIX = re.compile(r"^\s*statement\s*\d*\s*:\s*", re.IGNORECASE)
_LABEL_LINE = re.compile(
    r"^\s*(?:statements?|sentences?|answer|output|extracted sentences)\s*:\s*$",
    re.IGNORECASE,
)
_QUESTION_LABEL = re.compile(
    r"^\s*(?:generated\s+)?(?:q|question)\s*\d*\s*[:.)\-]\s*", re.IGNORECASE
)
_QUOTES = "\"'“”‘’"

_FINAL_BLOCK = re.compile(r"final\s+verdicts?", re.IGNORECASE)
_LABELED_VERDICT = re.compile(r"verdict\s*[:=\-]?\s*\**\s*(yes|no)\b", re.IGNORECASE)
_BARE_VERDICT = re.compile(r"\b(yes|no)\b", re.IGNORECASE)

_INTEGER = re.compile(r"(?<![\w.,])(-?\d+)(?![.,]?\d)")
# scale mentions such as "0-10", "1 to 10", "/10", "out of 10", "scale of 10"
_SCALE = re.compile(
    r"(?<![\w.])\d+\s*(?:-|–|to)\s*\d+(?![\w.])"
    r"|/\s*\d+(?![\w.])"
    r"|\b(?:out\s+of|scale\s+of)\s+\d+(?:\s*(?:-|–|to)\s*\d+)?(?![\w.])",
    re.IGNORECASE,
)
_SCORE_CUE = re.compile(r"\b(?:score|rate|rating|grade|give)\b", re.IGNORECASE)

_REF = r"(?:answer|context|candidate|option)\s*(?:#|no\.?)?\s*([12])\b"
_RANKED = re.compile(r"\b" + _REF, re.IGNORECASE)
_DECISION_CUES = (
    # "Answer 2 is more relevant", "Context 1 is the better one"
    re.compile(
        r"\b" + _REF + r"\s+(?:is|was|seems|appears)\s+(?:the\s+|clearly\s+|much\s+)?"
        r"(?:better|best|more|preferred|superior|stronger|winner)\b",
        re.IGNORECASE,
    ),
    # "I prefer answer 2", "Winner: Answer 1", "ranked first: Context 2"
    re.compile(
        r"\b(?:prefer|preferred|choose|chosen|select|selected|pick|winner|best|better"
        r"|ranked\s+first|rank\s+first)\b\W+(?:is\s+|would\s+be\s+)?(?:the\s+)?" + _REF,
        re.IGNORECASE,
    ),
    # first item of a ranked list: "1. Answer 2"
    re.compile(r"^\s*\(?1[.):]\s*" + _REF, re.IGNORECASE | re.MULTILINE),
)
_LEADING_INDEX = re.compile(r"^\s*\(?([12])\)?\s*(?:$|[.:)\-])")


class VerdictLabel(Enum):
    YES = "Yes"
    NO = "No"


@dataclass(frozen=True)
class ParsedVerdict:
    verdict: VerdictLabel
    explanation: str = ""

    @property
    def supported(self) -> bool:
        return self.verdict is VerdictLabel.YES


@dataclass(frozen=True)
class ParsedVerdicts:
    verdicts: Tuple[ParsedVerdict, ...]

    def __len__(self):
        return len(self.verdicts)


def _clean_line(line: str) -> str:
    line = _BULLET.sub("", line, count=1)
    return line.strip()


def _strip_quote_pair(text: str) -> str:
    if len(text) >= 2 and text[0] in _QUOTES and text[-1] in _QUOTES:
        return text[1:-1].strip()
    return text


def parse_statements(raw: str) -> StatementSet:
    """
    One statement per response line or list item, numbering and bullets removed.

    When the response holds list items, only those are statements and any prose
    around them (a preamble such as "Here are the statements:") is ignored.
    Without list items, prose lines ending in a colon are dropped.
    """
    items: List[str] = []
    prose: List[str] = []
    for line in (raw or "").splitlines():
        if _LABEL_LINE.match(line):
            continue
        cleaned = _clean_line(line)
        is_item = bool(_BULLET.match(line) or _STATEMENT_PREFIX.match(cleaned))
        text = _STATEMENT_PREFIX.sub("", cleaned)
        if text:
            (items if is_item else prose).append(text)

    statements = items or [line for line in prose if not line.endswith(":")]
    if len(statements) < len(items) + len(prose):
        logger.debug("Ignored %d non-statement lines.", len(items) + len(prose) - len(statements))
    if not statements:
        raise NoStatementsFound("The response contained no statements.")
    return StatementSet(statements=tuple(statements))


def _verdict_tokens(raw: str) -> List[List[str]]:
    """Candidate verdict sequences, most trusted first."""
    candidates: List[List[str]] = []

    final_blocks = list(_FINAL_BLOCK.finditer(raw))
    if final_blocks:
        block = raw[final_blocks[-1].end():]
        candidates.append([m.group(1) for m in _BARE_VERDICT.finditer(block)])

    candidates.append([m.group(1) for m in _LABELED_VERDICT.finditer(raw)])
    candidates.append([m.group(1) for m in _BARE_VERDICT.finditer(raw)])
    return candidates


def _explanations(raw: str) -> List[str]:
    explanations = []
    for line in raw.splitlines():
        match = _LABELED_VERDICT.search(line)
        if match:
            explanations.append(_clean_line(line[: match.start()]).rstrip(" .:-"))
    return explanations


def parse_verdicts(raw: str, expected_count: int) -> ParsedVerdicts:
    """
    Reads the per-statement Yes/No verdicts from a verification response.

    The final verdict block is preferred; labelled "Verdict: X" markers and then
    bare yes/no tokens are fallbacks, each accepted only when it yields exactly
    `expected_count` verdicts.
    """
    if expected_count < 1:
        raise ValueError("expected_count must be at least 1.")

    candidates = _verdict_tokens(raw or "")
    for tokens in candidates:
        if len(tokens) == expected_count:
            break
    else:
        found = next((tokens for tokens in candidates if tokens), None)
        if found is None:
            raise UnparseableVerdict("No Yes/No verdicts found in the response.")
        raise VerdictCountMismatch(expected_count, len(found))

    explanations = _explanations(raw)
    if len(explanations) != expected_count:
        explanations = [""] * expected_count

    return ParsedVerdicts(
        verdicts=tuple(
            ParsedVerdict(
                verdict=VerdictLabel.YES if token.lower() == "yes" else VerdictLabel.NO,
                explanation=explanation,
            )
            for token, explanation in zip(tokens, explanations)
        )
    )


def parse_generated_question(raw: str) -> str:
    """Keeps the first interrogative line, with labels and quotes stripped."""
    lines = []
    for line in (raw or "").splitlines():
        line = _strip_quote_pair(_QUESTION_LABEL.sub("", _clean_line(line), count=1))
        if line:
            lines.append(line)

    if not lines:
        raise EmptyQuestion("The response contained no question.")

    for line in lines:
        if line.endswith("?"):
            return line
    return lines[0]


def parse_extracted_sentences(raw: str, context: str) -> Tuple[List[str], bool]:
    """
    Returns the context sentences the model extracted, and whether it answered
    "Insufficient Information". Candidates that are not verbatim context
    sentences (after whitespace normalization) are dropped.
    """
    raw = raw or ""
    if INSUFFICIENT_INFORMATION in raw.lower():
        return [], True

    context_sentences = set(split_sentences(context))
    extracted: List[str] = []
    dropped = 0
    for line in raw.splitlines():
        if _LABEL_LINE.match(line):
            continue
        line = _strip_quote_pair(_clean_line(line))
        for candidate in split_sentences(line):
            candidate = normalize_whitespace(candidate)
            if candidate in context_sentences:
                if candidate not in extracted:
                    extracted.append(candidate)
            else:
                dropped += 1
                logger.debug("Dropped non-verbatim extracted sentence: %r", candidate)

    if dropped:
        logger.info("Dropped %d extracted sentences not found verbatim in the context.", dropped)
    return extracted, False


def parse_score_0_10(raw: str) -> int:
    """
    Reads the 0-10 score. Echoed scale mentions ("0-10", "/10", "out of 10")
    are ignored, and the first integer after a cue such as "score" or "rate"
    wins over an earlier one.
    """
    text = _SCALE.sub(lambda m: " " * len(m.group(0)), raw or "")
    match = None
    for cue in _SCORE_CUE.finditer(text):
        match = _INTEGER.search(text, cue.end())
        if match:
            break
    match = match or _INTEGER.search(text)
    if not match:
        raise UnparseableScore(f"No integer score found in {raw!r}.")
    score = int(match.group(1))
    if not 0 <= score <= 10:
        raise OutOfRange(f"Score {score} is outside 0-10.")
    return score


def _side(index: str) -> Preference:
    return Preference.A if index == "1" else Preference.B


def parse_ranking(raw: str) -> Preference:
    """
    Maps 'Answer 1' / 'Context 1' to A and 'Answer 2' / 'Context 2' to B.

    A decision cue ("Answer 2 is better", "I prefer answer 1", the first item
    of a ranked list) decides; without one, the reply must mention a single
    index. Mentions of both indices without a cue, or cues that disagree, are
    unparseable.
    """
    raw = raw or ""
    decided = {m.group(1) for cue in _DECISION_CUES for m in cue.finditer(raw)}
    if len(decided) == 1:
        return _side(decided.pop())
    if len(decided) > 1:
        raise UnparseableRanking(f"Conflicting rankings in {raw!r}.")

    mentioned = {m.group(1) for m in _RANKED.finditer(raw)}
    if len(mentioned) > 1:
        raise UnparseableRanking(f"Both answers mentioned without a decision in {raw!r}.")
    if mentioned:
        return _side(mentioned.pop())

    match = _LEADING_INDEX.match(raw)
    if not match:
        raise UnparseableRanking(f"No answer index found in {raw!r}.")
    return _side(match.group(1))
