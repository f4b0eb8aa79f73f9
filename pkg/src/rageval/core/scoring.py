"""Pure score arithmetic shared by the metric pipelines."""

import math
from fractions import Fraction
from typing import Sequence

import numpy as np

from rageval.models.records import VerdictSet
from rageval.utils.exceptions import (
    CountExceedsTotal,
    DimensionMismatch,
    EmptyList,
    EmptyVerdicts,
    ZeroVector,
)


def faithfulness_score(verdicts: VerdictSet) -> Fraction:
    """Fraction of statements the judge found supported by the context."""
    if not len(verdicts):
        raise EmptyVerdicts("Cannot score faithfulness without verdicts.")
    return Fraction(verdicts.supported_count, len(verdicts))


def mean_similarity(sims: Sequence[float]) -> float:
    if not sims:
        raise EmptyList("Cannot average an empty list of similarities.")
    return math.fsum(sims) / len(sims)


def context_relevance_score(
    extracted_count: int, total_sentences: int, insufficient: bool
) -> Fraction:
    if total_sentences < 1:
        raise CountExceedsTotal("A context must have at least one sentence.")
    if extracted_count < 0 or extracted_count > total_sentences:
        raise CountExceedsTotal(
            f"Extracted {extracted_count} sentences out of {total_sentences}."
        )
    if insufficient:
        return Fraction(0)
    return Fraction(extracted_count, total_sentences)


def cosine_similarity(u: Sequence[float], v: Sequence[float]) -> float:
    """Cosine of the angle between two embeddings, clamped to [-1, 1]."""
    va = np.asarray(u, dtype=float)
    vb = np.asarray(v, dtype=float)
    if va.ndim != 1 or va.shape != vb.shape or va.size == 0:
        raise DimensionMismatch(
            f"Cannot compare vectors of shape {va.shape} and {vb.shape}."
        )

    norm_a = np.linalg.norm(va)
    norm_b = np.linalg.norm(vb)
    if norm_a == 0 or norm_b == 0:
        raise ZeroVector("Cosine similarity is undefined for an all-zero vector.")

    return float(np.clip(np.dot(va, vb) / (norm_a * norm_b), -1.0, 1.0))
