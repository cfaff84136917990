"""Canonical error patterns, ternary labels, and labeled samples."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Mapping, Tuple

from .errors import InvalidInputError
from .motion import Trajectory


@dataclass(frozen=True)
class ErrorPattern:
    id: str
    description: str


CANONICAL_PATTERNS: Tuple[ErrorPattern, ...] = (
    ErrorPattern("arched_neck", "neck hyperextended or craned during the movement"),
    ErrorPattern("feet_distance_not_sufficient", "stance too narrow"),
    ErrorPattern("hips_do_not_initiate_movement", "knees start bending before the hips flex"),
    ErrorPattern("hollow_back", "exaggerated lumbar arch while descending"),
    ErrorPattern("incorrect_weight_distribution", "weight shifted too far to the front"),
    ErrorPattern("knees_tremble_sideways", "lateral knee oscillation during descent/ascent"),
    ErrorPattern("legs_extended_at_end", "knees locked out fully at the end"),
    ErrorPattern("not_symmetric", "left/right sides move asymmetrically"),
    ErrorPattern("too_deep", "squat goes below the intended depth band"),
    ErrorPattern("wrong_dynamics", "phases rushed or uneven, bouncing at the bottom"),
)

PATTERN_IDS: Tuple[str, ...] = tuple(p.id for p in CANONICAL_PATTERNS)
_BY_ID = {p.id: p for p in CANONICAL_PATTERNS}


def pattern_by_id(pattern_id: str) -> ErrorPattern:
    try:
        return _BY_ID[pattern_id]
    except KeyError:
        raise InvalidInputError(f"unknown error pattern: {pattern_id!r}") from None


class PatternLabel(str, Enum):
    PRESENT = "present"
    ABSENT = "absent"
    UNLABELED = "unlabeled"


@dataclass(frozen=True)
class LabeledSample:
    """A trajectory plus one ternary annotation per error pattern."""

    trajectory: Trajectory
    labels: Mapping[str, PatternLabel]

    def __post_init__(self):
        labels = dict(self.labels)
        for pid in labels:
            pattern_by_id(pid)
        if not any(v is not PatternLabel.UNLABELED for v in labels.values()):
            raise InvalidInputError("a labeled sample needs at least one non-unlabeled entry")
        object.__setattr__(self, "labels", labels)

    @property
    def subject_id(self) -> str:
        return self.trajectory.subject_id

    @property
    def sample_id(self) -> str:
        return self.trajectory.sample_id

    def label(self, pattern_id: str) -> PatternLabel:
        return self.labels.get(pattern_id, PatternLabel.UNLABELED)
