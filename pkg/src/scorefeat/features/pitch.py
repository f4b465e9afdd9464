"""Pitch-content feature families: key estimation, scale degrees, ambitus, melody.

Key finding correlates a duration-weighted pitch-class profile against the
major/minor probe-tone profiles from Krumhansl's *Cognitive Foundations of
Musical Pitch* (1990), rotated through all 24 candidate keys.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from ..harmony import key_mode, key_tonic_pc
from ..model import (
    STEP_ORDER,
    NoteEvent,
    Part,
    Score,
    counted_notes,
    melodic_line,
    merged_durations,
    midi_number,
)

KRUMHANSL_MAJOR = (6.35, 2.23, 3.48, 2.33, 4.38, 4.09, 2.52, 5.19, 2.39, 3.66, 2.29, 2.88)
KRUMHANSL_MINOR = (6.33, 2.68, 3.52, 5.38, 2.60, 3.53, 2.54, 4.75, 3.98, 2.69, 3.34, 3.17)

KEY_PROFILES = {
    "krumhansl": (KRUMHANSL_MAJOR, KRUMHANSL_MINOR),
}

_MAJOR_NAMES = ("C", "Db", "D", "Eb", "E", "F", "F#", "G", "Ab", "A", "Bb", "B")
_MINOR_NAMES = ("c", "c#", "d", "d#", "e", "f", "f#", "g", "g#", "a", "bb", "b")

_MAJOR_FIFTHS = {(7 * f) % 12: f for f in range(-5, 7)}
_MINOR_FIFTHS = {(7 * f + 9) % 12: f for f in range(-5, 7)}

_MAJOR_DEGREES = {0: 1, 2: 2, 4: 3, 5: 4, 7: 5, 9: 6, 11: 7}
# Both the natural subtonic and the raised leading tone count as degree 7.
_MINOR_DEGREES = {0: 1, 2: 2, 3: 3, 5: 4, 7: 5, 8: 6, 10: 7, 11: 7}

_PERFECT_BASE = {1: 0, 4: 5, 5: 7}
_MAJOR_BASE = {2: 2, 3: 4, 6: 9, 7: 11}


@dataclass(frozen=True)
class PitchClassProfile:
    """Duration-weighted pitch-class histogram (index 0 = C)."""

    weights: tuple[float, ...]

    def __post_init__(self):
        if len(self.weights) != 12:
            raise ValueError("profile needs exactly 12 weights")
        if any(w < 0 for w in self.weights):
            raise ValueError("profile weights must be non-negative")

    @property
    def total(self) -> float:
        return sum(self.weights)


@dataclass(frozen=True)
class KeyEstimate:
    tonic: int  # pitch class 0..11
    mode: str  # "major" | "minor"
    score: Optional[float]  # Pearson correlation of the winner
    runner_up_margin: float

    @property
    def name(self) -> str:
        return _MAJOR_NAMES[self.tonic] if self.mode == "major" else _MINOR_NAMES[self.tonic]


def _pitched(part: Part) -> bool:
    return part.family != "percussion"


def profile_from_score(score: Score) -> PitchClassProfile:
    weights = [0.0] * 12
    for part in score.parts:
        if not _pitched(part):
            continue
        for head, duration in merged_durations(part):
            weights[head.pitch.pitch_class] += float(duration)
    return PitchClassProfile(weights=tuple(weights))


def estimate_key_ks(
    profile: PitchClassProfile, profiles: str = "krumhansl"
) -> KeyEstimate:
    """Best of 24 candidate keys by Pearson correlation against rotated
    reference profiles. Ties prefer major, then the lower tonic."""
    if profile.total <= 0:
        raise ValueError("key estimation needs at least one positive weight")
    weights = np.asarray(profile.weights, dtype=float)
    if np.ptp(weights) == 0 or np.count_nonzero(weights) == 1:
        tonic = int(np.argmax(weights))
        return KeyEstimate(tonic=tonic, mode="major", score=None, runner_up_margin=0.0)

    major_ref, minor_ref = KEY_PROFILES[profiles]
    correlations = []
    for mode, ref in (("major", np.asarray(major_ref)), ("minor", np.asarray(minor_ref))):
        for tonic in range(12):
            candidate = np.roll(ref, tonic)
            r = float(np.corrcoef(weights, candidate)[0, 1])
            correlations.append((r, mode, tonic))
    best = max(correlations, key=lambda c: c[0])  # stable: major/low tonic first
    others = sorted((c[0] for c in correlations if c is not best), reverse=True)
    margin = best[0] - others[0] if others else 0.0
    return KeyEstimate(tonic=best[2], mode=best[1], score=best[0], runner_up_margin=margin)


def key_features(score: Score) -> dict:
    profile = profile_from_score(score)
    if profile.total <= 0:
        return {}
    est = estimate_key_ks(profile)
    implied = (_MAJOR_FIFTHS if est.mode == "major" else _MINOR_FIFTHS)[est.tonic]
    out = {
        "Key": est.name,
        "KeyMode": est.mode,
        "KeySignature": score.key_signature,
        "KeySignatureMatchesEstimate": int(score.key_signature == implied),
    }
    if est.score is not None:
        out["KS_Correlation"] = est.score
    return out


def _ambitus_over(events: Iterable[NoteEvent]) -> dict:
    notes = [e for e in events]
    if not notes:
        return {}
    lowest = min(notes, key=lambda e: midi_number(e.pitch))
    highest = max(notes, key=lambda e: midi_number(e.pitch))
    lo, hi = midi_number(lowest.pitch), midi_number(highest.pitch)
    return {
        "LowestMidi": lo,
        "HighestMidi": hi,
        "LowestName": lowest.pitch.name,
        "HighestName": highest.pitch.name,
        "AmbitusSemitones": hi - lo,
    }


def ambitus_features(unit) -> dict:
    """Melodic range of a Part or a whole Score (percussion excluded)."""
    if isinstance(unit, Part):
        if not _pitched(unit):
            return {}
        return _ambitus_over(counted_notes(unit))
    notes = [e for p in unit.parts if _pitched(p) for e in counted_notes(p)]
    return _ambitus_over(notes)


def interval_name(a, b) -> tuple[int, str]:
    """(signed semitones, quality+size name) between two spelled pitches.

    The name is unsigned; direction lives in the semitone sign. Spelling
    matters: C4->F#4 is A4 while C4->Gb4 is d5.
    """
    semis = midi_number(b) - midi_number(a)
    dn = (STEP_ORDER.index(b.step) + 7 * b.octave) - (STEP_ORDER.index(a.step) + 7 * a.octave)
    if dn == 0 and semis == 0:
        return 0, "P1"
    direction = 1 if dn > 0 else (-1 if dn < 0 else (1 if semis > 0 else -1))
    size = abs(dn) + 1
    asemis = semis * direction
    simple = ((size - 1) % 7) + 1
    octaves = (size - 1) // 7
    if simple in _PERFECT_BASE:
        delta = asemis - (_PERFECT_BASE[simple] + 12 * octaves)
        if delta == 0:
            quality = "P"
        elif delta > 0:
            quality = "A" * delta
        else:
            quality = "d" * -delta
    else:
        delta = asemis - (_MAJOR_BASE[simple] + 12 * octaves)
        if delta == 0:
            quality = "M"
        elif delta == -1:
            quality = "m"
        elif delta > 0:
            quality = "A" * delta
        else:
            quality = "d" * (-delta - 1)
    return semis, f"{quality}{size}"


def interval_sequence(
    part: Part, break_at_rests: bool = False, chord: str = "top"
) -> list[tuple[int, str]]:
    """Melodic intervals between consecutive counted notes (chord tops by
    default). Rests do not break the line unless ``break_at_rests`` is set."""
    line = melodic_line(part, chord=chord)
    if not break_at_rests:
        return [interval_name(a.pitch, b.pitch) for a, b in zip(line, line[1:])]

    rest_onsets = sorted(e.onset for e in part.events if e.kind == "rest")
    out = []
    for a, b in zip(line, line[1:]):
        lo, hi = a.onset, b.onset
        interrupted = any(lo < r < hi for r in rest_onsets)
        if not interrupted:
            out.append(interval_name(a.pitch, b.pitch))
    return out


def melody_from_intervals(intervals: Sequence[tuple[int, str]]) -> dict:
    if not intervals:
        return {}
    n = len(intervals)
    out: dict = {}
    by_name: dict[str, int] = {}
    for _, name in intervals:
        by_name[name] = by_name.get(name, 0) + 1
    for name in sorted(by_name):
        out[f"Interval_{name}_Count"] = by_name[name]
        out[f"Interval_{name}_Frac"] = by_name[name] / n

    semis = [s for s, _ in intervals]
    ascending = sum(1 for s in semis if s > 0)
    descending = sum(1 for s in semis if s < 0)
    out["AscendingFrac"] = ascending / n
    out["DescendingFrac"] = descending / n
    out["RepeatedFrac"] = (n - ascending - descending) / n
    stepwise = sum(1 for s in semis if abs(s) <= 2)
    out["StepwiseFrac"] = stepwise / n
    out["LeapFrac"] = (n - stepwise) / n

    magnitudes = np.abs(np.asarray(semis, dtype=float))
    out["AbsIntervalMean"] = float(magnitudes.mean())
    out["AbsIntervalStd"] = float(magnitudes.std())  # population
    up = [s for s in semis if s > 0]
    down = [-s for s in semis if s < 0]
    if up:
        out["LargestAscending"] = max(up)
    if down:
        out["LargestDescending"] = max(down)
    return out


def melody_features(part: Part) -> dict:
    if not _pitched(part):
        return {}
    return melody_from_intervals(interval_sequence(part))


def _degree_of(pc: int, tonic: int, mode: str) -> Optional[int]:
    table = _MAJOR_DEGREES if mode == "major" else _MINOR_DEGREES
    return table.get((pc - tonic) % 12)


def _degree_fractions(prefix: str, degrees: Sequence[Optional[int]]) -> dict:
    n = len(degrees)
    out = {}
    for d in range(1, 8):
        out[f"{prefix}_{d}_Frac"] = sum(1 for x in degrees if x == d) / n
    out[f"{prefix}_chromatic_Frac"] = sum(1 for x in degrees if x is None) / n
    return out


def scale_degree_features(
    part: Part,
    score: Score,
    global_key: Optional[tuple[int, str]] = None,
    annotations=None,
) -> dict:
    """Degree distributions against the estimated main key and, when harmony
    annotations exist, against each note's governing local key."""
    if not _pitched(part):
        return {}
    notes = counted_notes(part)
    if not notes:
        return {}
    out = {}
    if global_key is not None:
        if isinstance(global_key, KeyEstimate):
            tonic, mode = global_key.tonic, global_key.mode
        else:
            tonic, mode = global_key
        degrees = [_degree_of(e.pitch.pitch_class, tonic, mode) for e in notes]
        out.update(_degree_fractions("Degree", degrees))

    if annotations is None:
        annotations = score.annotations
    if annotations:
        positions = [
            (a.measure_index, a.beat, key_tonic_pc(a.local_key), key_mode(a.local_key))
            for a in annotations
        ]
        local_degrees = []
        for e in notes:
            beat = e.onset - score.measure_offset(e.measure_index)
            governing = None
            for m, b, tonic, mode in positions:
                if (m, b) <= (e.measure_index, beat):
                    governing = (tonic, mode)
                else:
                    break
            if governing is None or governing[0] is None or governing[1] is None:
                continue
            local_degrees.append(_degree_of(e.pitch.pitch_class, *governing))
        if local_degrees:
            out.update(_degree_fractions("LocalDegree", local_degrees))
    return out
