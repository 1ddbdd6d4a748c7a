from collections import Counter

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from framefinder.model import (
    BoundingBox,
    GridCell,
    cells_covered,
    occurrence_token,
    parse_occurrence_token,
)
from framefinder.spatial import (
    MAX_OCCURRENCES,
    ColorCellAssignment,
    Detection,
    encode_bboxes,
    encode_classes,
    expand_hypernyms,
    filter_by_confidence,
)

# Spans exactly columns e-g, rows 3-5 (see the grid geometry tests).
CAR_BOX = BoundingBox(0.5714, 0.2857, 1.0, 0.7143)


class TestEncodeBboxes:
    def test_car_block_golden(self):
        det = Detection(("car",), CAR_BOX, 0.9)
        assert encode_bboxes([det]) == (
            "e3car f3car g3car e4car f4car g4car e5car f5car g5car"
        )

    def test_empty_inputs(self):
        assert encode_bboxes([], []) == ""

    def test_color_cell_tokens(self):
        cells = [ColorCellAssignment(GridCell("a", 1), frozenset({"red", "orange"}))]
        assert encode_bboxes([], cells) == "a1orange a1red"

    def test_multi_label_detection(self):
        det = Detection(("car", "vehicle"), BoundingBox(4 / 7, 2 / 7, 5 / 7, 3 / 7), 0.9)
        assert encode_bboxes([det]) == "e3car e3vehicle"

    @given(
        st.lists(
            st.builds(
                Detection,
                st.sampled_from([("car",), ("person",), ("car", "vehicle")]),
                st.builds(
                    lambda x, y: BoundingBox(x, y, min(x + 0.3, 1.0), min(y + 0.3, 1.0)),
                    st.floats(min_value=0.0, max_value=0.69),
                    st.floats(min_value=0.0, max_value=0.69),
                ),
                st.just(0.9),
            ),
            max_size=5,
        ),
        st.lists(
            st.builds(
                ColorCellAssignment,
                st.builds(GridCell, st.sampled_from("abcdefg"), st.integers(1, 7)),
                st.sets(st.sampled_from(["red", "blue", "gold"]), min_size=1).map(frozenset),
            ),
            max_size=5,
        ),
    )
    @settings(max_examples=50)
    def test_token_count(self, detections, color_cells):
        tokens = encode_bboxes(detections, color_cells).split()
        expected = sum(
            len(d.labels) * len(cells_covered(d.box)) for d in detections
        ) + sum(len(c.colors) for c in color_cells)
        assert len(tokens) == expected


class TestEncodeClasses:
    def test_street_scene_multiset(self):
        detections = [
            Detection(("person",), BoundingBox(0.1, 0.1, 0.2, 0.3), 0.9),
            Detection(("person",), BoundingBox(0.2, 0.1, 0.3, 0.3), 0.9),
            Detection(("car", "vehicle"), BoundingBox(0.4, 0.4, 0.6, 0.6), 0.9),
            Detection(("car", "vehicle"), BoundingBox(0.5, 0.4, 0.7, 0.6), 0.9),
            Detection(("car", "vehicle"), BoundingBox(0.6, 0.4, 0.8, 0.6), 0.9),
            Detection(("horse", "animal", "mammal"), BoundingBox(0.7, 0.6, 0.9, 0.9), 0.9),
        ]
        expected = Counter(
            "person1 person2 vehicle1 vehicle2 vehicle3 car1 car2 car3 "
            "mammal1 horse1 animal1".split()
        )
        assert Counter(encode_classes(detections).split()) == expected

    def test_empty(self):
        assert encode_classes([]) == ""

    def test_single_instance(self):
        det = Detection(("dog",), BoundingBox(0.1, 0.1, 0.5, 0.5), 0.9)
        assert encode_classes([det]) == "dog1"

    def test_palette_colors_appended_once(self):
        field = encode_classes([], {"red", "blue"})
        assert field == "blue red"

    @given(
        st.lists(
            st.sampled_from(["car", "person", "dog", "tree"]), min_size=0, max_size=30
        )
    )
    def test_occurrences_numbered_without_gaps(self, labels):
        detections = [
            Detection((label,), BoundingBox(0.1, 0.1, 0.5, 0.5), 0.9) for label in labels
        ]
        tokens = encode_classes(detections).split()
        counts = Counter(labels)
        parsed = [parse_occurrence_token(t) for t in tokens]
        for label, count in counts.items():
            expected_ns = list(range(1, min(count, MAX_OCCURRENCES) + 1))
            assert sorted(n for l, n in parsed if l == label) == expected_ns

    def test_cap_query_matching_property(self):
        # "at most n of label L" holds iff L<n+1> absent and L1 present
        detections = [
            Detection(("car",), BoundingBox(0.1, 0.1, 0.5, 0.5), 0.9) for _ in range(4)
        ]
        tokens = set(encode_classes(detections).split())
        assert occurrence_token("car", 1) in tokens
        assert occurrence_token("car", 4) in tokens
        assert occurrence_token("car", 5) not in tokens  # cap 4 keeps it
        # cap 3 compiles to must_not car4, which is present -> excluded
        assert occurrence_token("car", 4) in tokens


class TestDetectionHelpers:
    def test_confidence_filter(self):
        keep = Detection(("car",), BoundingBox(0.1, 0.1, 0.5, 0.5), 0.9)
        drop = Detection(("car",), BoundingBox(0.1, 0.1, 0.5, 0.5), 0.1)
        assert filter_by_confidence([keep, drop], 0.25) == [keep]

    def test_hypernym_expansion(self):
        det = Detection(("car",), BoundingBox(0.1, 0.1, 0.5, 0.5), 0.9)
        out = expand_hypernyms([det], {"car": ["vehicle"]})
        assert out[0].labels == ("car", "vehicle")

    def test_rejects_duplicate_labels(self):
        with pytest.raises(ValueError):
            Detection(("car", "car"), BoundingBox(0.1, 0.1, 0.5, 0.5), 0.9)

    def test_rejects_out_of_range_confidence(self):
        with pytest.raises(ValueError):
            Detection(("car",), BoundingBox(0.1, 0.1, 0.5, 0.5), 1.5)
