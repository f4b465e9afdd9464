import random
import struct
from fractions import Fraction

import pytest

from scorefeat.midi import MidiError, QuantizationGrid, import_midi
from scorefeat.model import midi_number, note_count
from util import midi_bytes, midi_meta_track, midi_note_events


def one_note_file(on=0, off=480, pitch=60, vel=80, tpq=480, meta=None):
    events = list(meta or []) + midi_note_events([(on, off, pitch, vel)])
    return midi_bytes([events], tpq=tpq)


class TestBasics:
    def test_single_quarter_note(self):
        score, _ = import_midi(one_note_file(meta=midi_meta_track(timesig=(4, 4))))
        assert len(score.parts) == 1
        p = score.parts[0]
        assert note_count(p) == 1
        assert p.events[0].duration == Fraction(1)
        assert midi_number(p.events[0].pitch) == 60

    def test_quantization_to_nearest_sixteenth(self):
        score, _ = import_midi(one_note_file(off=250))
        assert score.parts[0].events[0].duration == Fraction(1, 2)

    def test_duration_floored_at_one_grid_unit(self):
        score, _ = import_midi(one_note_file(off=10))
        assert score.parts[0].events[0].duration == Fraction(1, 4)

    def test_two_tracks_two_parts_in_track_order(self):
        t1 = midi_note_events([(0, 480, 60, 64)], channel=0)
        t2 = midi_note_events([(0, 480, 72, 64)], channel=1)
        data = midi_bytes([midi_meta_track(name="Violin") + t1,
                           midi_meta_track(name="Oboe") + t2], fmt=1)
        score, _ = import_midi(data)
        assert [p.instrument_sound for p in score.parts] == ["violin", "oboe"]

    def test_measures_from_time_signature(self):
        notes = [(0, 480, 60, 64), (480 * 3, 480 * 4, 64, 64), (480 * 7, 480 * 8, 67, 64)]
        data = midi_bytes([midi_meta_track(timesig=(3, 4)) + midi_note_events(notes)])
        score, _ = import_midi(data)
        assert score.num_measures == 3
        assert [e.measure_index for e in score.parts[0].events] == [1, 2, 3]

    def test_tempo_meta_to_bpm(self):
        data = midi_bytes([midi_meta_track(tempo_bpm=90) + midi_note_events([(0, 480, 60, 64)])])
        score, _ = import_midi(data)
        assert score.tempo_marks[0].bpm == pytest.approx(90, abs=0.01)


class TestErrors:
    def test_format_2_unsupported(self):
        data = midi_bytes([midi_note_events([(0, 480, 60, 64)])], fmt=2)
        with pytest.raises(MidiError, match="format 2"):
            import_midi(data)

    def test_smpte_unsupported(self):
        data = bytearray(one_note_file())
        division = 0x8000 | (25 << 8) | 40
        data[12:14] = struct.pack(">H", division)
        with pytest.raises(MidiError, match="SMPTE"):
            import_midi(bytes(data))

    def test_truncated_chunk_fatal(self):
        data = one_note_file()
        with pytest.raises(MidiError, match="truncated"):
            import_midi(data[:20])

    def test_not_midi(self):
        with pytest.raises(MidiError):
            import_midi(b"RIFFxxxx")

    def test_bad_grid_rejected(self):
        with pytest.raises(ValueError, match="grid"):
            QuantizationGrid(grid=Fraction(1, 5))


class TestSemantics:
    def test_key_signature_prefers_flats(self):
        data = midi_bytes(
            [midi_meta_track(keysig=(-3, 0)) + midi_note_events([(0, 480, 70, 64)])]
        )
        score, _ = import_midi(data)
        assert score.key_signature == -3
        assert score.parts[0].events[0].pitch.name == "Bb4"

    def test_sharp_spelling_by_default(self):
        score, _ = import_midi(one_note_file(pitch=61))
        assert score.parts[0].events[0].pitch.name == "C#4"

    def test_channel_10_is_percussion(self):
        events = midi_note_events([(0, 480, 36, 100)], channel=9)
        score, _ = import_midi(midi_bytes([events]))
        assert score.parts[0].family == "percussion"

    def test_velocity_binned_to_dynamics(self):
        notes = [(0, 480, 60, 49), (480, 960, 62, 112)]
        score, _ = import_midi(midi_bytes([midi_note_events(notes)]))
        assert [tok for _, tok in score.parts[0].dynamic_marks] == ["p", "ff"]

    def test_note_count_matches_paired_note_ons(self):
        rng = random.Random(99)
        notes = []
        tick = 0
        for _ in range(50):
            dur = rng.choice([120, 240, 480])
            notes.append((tick, tick + dur, rng.randint(48, 84), rng.randint(1, 127)))
            tick += dur
        score, _ = import_midi(midi_bytes([midi_note_events(notes)]))
        assert sum(note_count(p) for p in score.parts) == 50

    def test_no_lyrics_or_harmony_features_from_midi(self):
        from scorefeat.engine import ExtractorConfig, extract_unit
        from scorefeat.registry import feature_modules, resolve_feature_order

        data = midi_bytes(
            [midi_meta_track(name="Soprano") + midi_note_events([(0, 480, 72, 64)])]
        )
        score, _ = import_midi(data)
        config = ExtractorConfig()
        order = resolve_feature_order(feature_modules(), config.requested_modules())
        row = extract_unit(score, order, feature_modules())
        assert not any("NumSyllables" in k or "Melisma" in k for k in row)
        assert not any("NumAnnotations" in k or "Function_" in k for k in row)
