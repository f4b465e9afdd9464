"""Duration and inter-part feature families: density, rhythm, texture."""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache
from itertools import combinations

import numpy as np

from ..model import Part, Score, merged_durations, note_count, sounding_measures

_DURATION_CLASSES = (
    ("whole", Fraction(4)),
    ("half", Fraction(2)),
    ("quarter", Fraction(1)),
    ("eighth", Fraction(1, 2)),
    ("sixteenth", Fraction(1, 4)),
)
DURATION_CLASS_NAMES = tuple(name for name, _ in _DURATION_CLASSES) + ("other",)

_DOT_FACTORS = {0: Fraction(1), 1: Fraction(3, 2), 2: Fraction(7, 4)}


def density_features(part: Part, score: Score) -> dict:
    """Note counts against measure counts and sounding span."""
    notes = note_count(part)
    sounding = len(sounding_measures(part))
    out = {"NotesPerMeasure": notes / score.num_measures}
    if sounding:
        out["NotesPerSoundingMeasure"] = notes / sounding
    total = score.total_quarters()
    if total > 0:
        sounded = sum((d for _, d in merged_durations(part)), Fraction(0))
        out["SoundingDensity"] = float(sounded / total)
    return out


@lru_cache(maxsize=4096)
def duration_class(duration: Fraction, dots: int) -> str:
    """Nominal class of a notated duration: dots are undone and simple triplet
    members class by their notated value; anything else is "other"."""
    nominal = duration / _DOT_FACTORS[dots]
    for name, value in _DURATION_CLASSES:
        if nominal == value or nominal == value * Fraction(2, 3):
            return name
    return "other"


def rhythm_features(part: Part) -> dict:
    """Average/spread of durations (tie chains merged) plus figure fractions."""
    merged = merged_durations(part)
    if not merged:
        return {}
    n = len(merged)
    durations = np.array([float(d) for _, d in merged])
    out = {
        "AvgDuration": float(durations.mean()),
        "DurationStd": float(durations.std()),  # population
        "DottedFrac": sum(1 for e, _ in merged if e.dots == 1) / n,
        "DoubleDottedFrac": sum(1 for e, _ in merged if e.dots == 2) / n,
    }
    histogram = dict.fromkeys(DURATION_CLASS_NAMES, 0)
    for event, _ in merged:
        histogram[duration_class(event.duration, event.dots)] += 1
    for name in DURATION_CLASS_NAMES:
        out[f"Duration_{name}_Frac"] = histogram[name] / n
    return out


def texture_features(score: Score) -> dict:
    """Note-count ratio for every unordered part pair, earlier part on top."""
    out = {}
    counts = [(part.part_id, note_count(part)) for part in score.parts]
    for (id_a, n_a), (id_b, n_b) in combinations(counts, 2):
        if n_b > 0:
            out[f"Texture_{id_a}_{id_b}_Ratio"] = n_a / n_b
    return out
