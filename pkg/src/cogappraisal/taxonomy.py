"""Canonical appraisal dimensions and cognitive distortion classes.

Index order of both lists is fixed; every grid, vector and output column in the
package follows it.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping

from .errors import DataValidationError


@dataclass(frozen=True)
class AppraisalDimension:
    id: int
    name: str
    label: str
    definition: str


@dataclass(frozen=True)
class DistortionClass:
    id: int
    name: str
    definition: str
    is_no_distortion: bool = False


_DIMENSIONS = [
    ("suddenness", "Suddenness", "The event was sudden or abrupt"),
    ("familiarity", "Familiarity", "The event was familiar"),
    ("event_predictability", "Event predictability",
     "I could have predicted the occurrence of the event"),
    ("pleasantness", "Pleasantness", "The event was pleasant"),
    ("unpleasantness", "Unpleasantness", "The event was unpleasant"),
    ("goal_relevance", "Goal relevance",
     "I expected the event to have important consequences for me"),
    ("situational_responsibility", "Situational responsibility",
     "The event was caused by chance, special circumstances, or natural forces"),
    ("self_responsibility", "Self responsibility", "The event was caused by my own behavior"),
    ("others_responsibility", "Others responsibility",
     "The event was caused by somebody else's behavior"),
    ("anticipated_consequence", "Anticipated consequence",
     "I anticipated the consequences of the event"),
    ("goal_support", "Goal support", "I expected positive consequences for me"),
    ("urgency", "Urgency", "The event required an immediate response"),
    ("self_control", "Self control",
     "I was able to influence what was going on during the event"),
    ("others_control", "Others control",
     "Someone other than me was influencing what was going on"),
    ("chance_control", "Chance control",
     "The situation was the result of outside influences of which nobody had control"),
    ("consequence_acceptance", "Consequence acceptance",
     "I anticipated that I would easily live with the unavoidable consequences of the event"),
    ("internal_standards", "Internal standards",
     "The event clashed with my standards and ideals"),
    ("external_standards", "External standards",
     "The actions that produced the event violated laws or socially accepted norms"),
    ("attention", "Attention", "I had to pay attention to the situation"),
    ("not_consider", "Not consider", "I tried to shut the situation out of my mind"),
    ("effort", "Effort",
     "The situation required me a great deal of energy to deal with it"),
]

DIMENSIONS: tuple[AppraisalDimension, ...] = tuple(
    AppraisalDimension(i, name, label, definition)
    for i, (name, label, definition) in enumerate(_DIMENSIONS)
)
DIMENSION_NAMES: tuple[str, ...] = tuple(d.name for d in DIMENSIONS)
N_DIMENSIONS = len(DIMENSIONS)

NO_DISTORTION = "Not distorted"

_DISTORTIONS = [
    ("All-or-nothing thinking", "Thinking in extremes."),
    ("Blaming", "Giving away your own power to other people."),
    ("Catastrophizing", "Focusing on the worst/case scenario."),
    ("Comparing and Despairing", "Comparing your worst to someone else's best."),
    ("Disqualifying the Positive",
     "When something good happens, you ignore it or think it does not count."),
    ("Emotional reasoning", "Treating your feelings like facts."),
    ("Fortune telling",
     "Trying to predict the future. Focusing on one possibility and ignoring the "
     "other, more likely outcome"),
    ("Labeling", "Defining a person based on one action or characteristic."),
    ("Magnification",
     "Exaggerating certain aspects of yourself, other people, or a situation while "
     "often simultaneously downplaying others."),
    ("Mind reading", "Assuming that you know what someone else is thinking."),
    ("Negative feeling or emotion",
     'Getting "stuck" on a distressing thought, emotion, or belief.'),
    ("Overgeneralization", "Jumping to conclusions based on one experience."),
    ("Personalization", "Taking things personally, or making them about you"),
    ("Should statements", "Setting unrealistic expectations of yourself."),
]

DISTORTION_CLASSES: tuple[DistortionClass, ...] = tuple(
    DistortionClass(i, name, definition) for i, (name, definition) in enumerate(_DISTORTIONS)
) + (DistortionClass(len(_DISTORTIONS), NO_DISTORTION, "No cognitive distortion.", True),)
CLASS_NAMES: tuple[str, ...] = tuple(c.name for c in DISTORTION_CLASSES)
DISTORTION_NAMES: tuple[str, ...] = CLASS_NAMES[:-1]
N_DISTORTIONS = len(DISTORTION_NAMES)

# Label counts of the expanded Thinking Trap corpus (1036 rows in total).
REFERENCE_CLASS_COUNTS: dict[str, int] = {
    "All-or-nothing thinking": 99,
    "Blaming": 34,
    "Catastrophizing": 68,
    "Comparing and Despairing": 12,
    "Disqualifying the Positive": 40,
    "Emotional reasoning": 43,
    "Fortune telling": 78,
    "Labeling": 102,
    "Magnification": 15,
    "Mind reading": 71,
    "Negative feeling or emotion": 151,
    "Overgeneralization": 107,
    "Personalization": 98,
    "Should statements": 22,
    NO_DISTORTION: 96,
}

DEFAULT_CLASS_ALIASES: dict[str, str] = {
    "all or nothing thinking": "All-or-nothing thinking",
    "all-or-nothing": "All-or-nothing thinking",
    "black-and-white thinking": "All-or-nothing thinking",
    "catastrophising": "Catastrophizing",
    "comparing and despairing": "Comparing and Despairing",
    "comparing": "Comparing and Despairing",
    "disqualifying the positive": "Disqualifying the Positive",
    "fortune-telling": "Fortune telling",
    "labelling": "Labeling",
    "mind-reading": "Mind reading",
    "negative feeling and emotion": "Negative feeling or emotion",
    "negative feelings or emotions": "Negative feeling or emotion",
    "overgeneralizing": "Overgeneralization",
    "overgeneralising": "Overgeneralization",
    "overgeneralisation": "Overgeneralization",
    "personalizing": "Personalization",
    "personalising": "Personalization",
    "personalisation": "Personalization",
    "should statement": "Should statements",
    "no distortion": NO_DISTORTION,
    "not distorted": NO_DISTORTION,
    "none": NO_DISTORTION,
}


class TaxonomyError(DataValidationError):
    pass


def normalize_name(name: str) -> str:
    """Lowercase, trim and collapse internal whitespace."""
    return " ".join(str(name).strip().lower().split())


class Taxonomy:
    """Resolves free-form label strings to canonical class / dimension names."""

    def __init__(self, class_aliases: Mapping[str, str] | None = None,
                 dimension_aliases: Mapping[str, str] | None = None):
        self._classes: dict[str, str] = {}
        for name in CLASS_NAMES:
            self._classes[normalize_name(name)] = name
        for alias, target in {**DEFAULT_CLASS_ALIASES, **(class_aliases or {})}.items():
            self._classes[normalize_name(alias)] = self._canonical_target(target, CLASS_NAMES)

        self._dimensions: dict[str, str] = {}
        for dim in DIMENSIONS:
            self._dimensions[normalize_name(dim.name)] = dim.name
            self._dimensions[normalize_name(dim.label)] = dim.name
            self._dimensions[normalize_name(dim.name.replace("_", " "))] = dim.name
        for alias, target in (dimension_aliases or {}).items():
            self._dimensions[normalize_name(alias)] = self._canonical_target(
                target, DIMENSION_NAMES, self._dimensions)

    @staticmethod
    def _canonical_target(target: str, names: Iterable[str], lookup=None) -> str:
        if target in names:
            return target
        key = normalize_name(target)
        for name in names:
            if normalize_name(name) == key:
                return name
        if lookup and key in lookup:
            return lookup[key]
        raise TaxonomyError(f"alias target {target!r} is not a canonical name")

    def distortion(self, label: str) -> str:
        try:
            return self._classes[normalize_name(label)]
        except KeyError:
            raise TaxonomyError(
                f"unknown distortion label {label!r}; accepted labels: "
                + ", ".join(CLASS_NAMES)
            ) from None

    def dimension(self, label: str) -> str:
        try:
            return self._dimensions[normalize_name(label)]
        except KeyError:
            raise TaxonomyError(
                f"unknown appraisal dimension {label!r}; accepted: " + ", ".join(DIMENSION_NAMES)
            ) from None


def class_index(name: str) -> int:
    return CLASS_NAMES.index(name)


def dimension_index(name: str) -> int:
    return DIMENSION_NAMES.index(name)
