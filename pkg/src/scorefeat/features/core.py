"""Bookkeeping feature families: core counts, scoring, tempo, dynamics, lyrics."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Optional

from ..instruments import camel_case
from ..model import FAMILIES, Part, Score, counted_notes, note_count, sounding_measures

# Engraver-default-style intensity levels on a 0-127 scale. Accent marks
# (sfz and friends) sound at forte; extreme markings clamp to the ends.
CANONICAL_DYNAMICS = ("ppp", "pp", "p", "mp", "mf", "f", "ff", "fff")
DEFAULT_DYNAMIC_LEVELS = {
    "ppp": 16, "pp": 33, "p": 49, "mp": 64, "mf": 80, "f": 96, "ff": 112, "fff": 126,
    "pppp": 16, "ffff": 126,
    "sf": 96, "sfz": 96, "sffz": 96, "fz": 96, "rf": 96, "rfz": 96,
    "fp": 96, "sfp": 96, "pf": 96,
}


@dataclass(frozen=True)
class DynamicsMap:
    """Marking-to-intensity table; the canonical series must strictly increase."""

    levels: Mapping[str, int]

    def __post_init__(self):
        series = [self.levels[t] for t in CANONICAL_DYNAMICS if t in self.levels]
        if series != sorted(set(series)):
            raise ValueError("dynamic levels must strictly increase from ppp to fff")

    def level(self, token: str) -> Optional[int]:
        return self.levels.get(token)


DEFAULT_DYNAMICS = DynamicsMap(levels=DEFAULT_DYNAMIC_LEVELS)


def nearest_dynamic_token(velocity: int) -> str:
    """Canonical marking whose level is closest to a MIDI velocity."""
    return min(
        CANONICAL_DYNAMICS,
        key=lambda t: (abs(DEFAULT_DYNAMIC_LEVELS[t] - velocity), DEFAULT_DYNAMIC_LEVELS[t]),
    )


def _group_parts(score: Score, attr: str) -> dict[str, list[Part]]:
    groups: dict[str, list[Part]] = {}
    for part in score.parts:
        groups.setdefault(getattr(part, attr), []).append(part)
    return groups


def core_part(part: Part, score: Score, upstream) -> dict:
    return {
        "NumNotes": note_count(part),
        "SoundingMeasures": len(sounding_measures(part)),
    }


def core_score(score: Score, part_values, upstream) -> dict:
    num, den = score.time_signatures[0][1:]
    out = {
        "FileName": score.source_id,
        "NumMeasures": score.num_measures,
        "TimeSignature": f"{num}/{den}",
        "KeySignature": score.key_signature,
    }

    def counts(parts: list[Part]) -> list[int]:
        return [
            part_values.get(p.part_id, {}).get("NumNotes", note_count(p)) for p in parts
        ]

    for label, attr in (("Sound", "instrument_sound"), ("Family", "family")):
        for group_name, members in _group_parts(score, attr).items():
            values = counts(members)
            prefix = f"{label}{camel_case(group_name)}"
            out[f"{prefix}_NumNotes"] = sum(values)
            out[f"{prefix}_NumNotesMean"] = sum(values) / len(values)
    return out


def core_features(score: Score) -> dict:
    """Whole core family for one score, part names already prefixed."""
    part_values = {p.part_id: core_part(p, score, {}) for p in score.parts}
    out = {}
    for pid, values in part_values.items():
        for name, value in values.items():
            out[f"Part{pid}_{name}"] = value
    out.update(core_score(score, part_values, {}))
    return out


def scoring_features(score: Score) -> dict:
    sounds_in_order: list[str] = []
    for part in score.parts:
        if part.instrument_sound not in sounds_in_order:
            sounds_in_order.append(part.instrument_sound)
    vocal = []
    for part in score.parts:
        if part.is_vocal and part.instrument_sound not in vocal:
            vocal.append(part.instrument_sound)

    out = {
        "Instrumentation": ",".join(sounds_in_order),
        "NumParts": len(score.parts),
    }
    if vocal:
        out["Voices"] = ",".join(vocal)
    for sound, members in _group_parts(score, "instrument_sound").items():
        out[f"Sound{camel_case(sound)}_NumParts"] = len(members)
    family_counts = {f: len(m) for f, m in _group_parts(score, "family").items()}
    for family in FAMILIES:
        n = family_counts.get(family, 0)
        out[f"Family{camel_case(family)}_Present"] = int(n > 0)
        out[f"Family{camel_case(family)}_NumParts"] = n
    return out


def tempo_features(score: Score) -> dict:
    out = {}
    for mark in score.tempo_marks:
        if mark.text:
            out["TempoMarking"] = mark.text.lower()
            break
    for mark in score.tempo_marks:
        if mark.bpm is not None:
            out["TempoBPM"] = mark.bpm
            break
    out["NumTempoChanges"] = max(len(score.tempo_marks) - 1, 0)
    return out


def dynamics_features(part: Part, dmap: DynamicsMap = DEFAULT_DYNAMICS) -> dict:
    """Duration-weighted dynamics, each marking effective until the next.

    Parts with no markings emit nothing (missing, not zero).
    """
    marks = [(pos, tok) for pos, tok in part.dynamic_marks if dmap.level(tok) is not None]
    if not marks:
        return {}

    weights: dict[int, Fraction] = {}
    boundaries = [pos for pos, _ in marks]
    levels = [dmap.level(tok) for _, tok in marks]
    for event in counted_notes(part):
        idx = None
        for i, pos in enumerate(boundaries):
            if pos <= event.onset:
                idx = i
            else:
                break
        if idx is None:
            continue  # sounding before the first marking: no level in force
        weights[idx] = weights.get(idx, Fraction(0)) + event.duration

    total = sum(weights.values(), Fraction(0))
    if total > 0:
        mean = float(sum(levels[i] * w for i, w in weights.items()) / total)
    else:
        mean = sum(levels) / len(levels)  # marks without governed notes

    out = {
        "DynMean": mean,
        "DynRange": max(levels) - min(levels),
    }
    for _, tok in marks:
        out[f"Dyn_{tok}_Count"] = out.get(f"Dyn_{tok}_Count", 0) + 1
    return out


def lyrics_features(part: Part) -> dict:
    """Syllable-alignment features; only vocal parts emit anything."""
    if not part.is_vocal:
        return {}
    counted = counted_notes(part)
    out = {}
    if part.measure_count > 0:
        out["SoundingMeasuresRatio"] = len(sounding_measures(part)) / part.measure_count
    syllables = sum(
        1 for e in counted if e.lyric is not None and e.lyric.syllabic in ("single", "begin")
    )
    if syllables == 0:
        return out
    out["NumSyllables"] = syllables
    out["NotesPerSyllable"] = len(counted) / syllables
    out["MelismaRatio"] = (len(counted) - syllables) / len(counted)
    return out
