import math
from collections import Counter

import pytest
from hypothesis import given
from hypothesis import strategies as st

from framefinder.annotations import MAX_REPEATS, TagAnnotation, encode_tags


def test_ceiling_repetition():
    # ceil(2.3) = 3
    assert encode_tags([TagAnnotation("music", 2.3)]) == "music music music"


def test_integer_relevance_single():
    assert encode_tags([TagAnnotation("park", 1.0)]) == "park"


def test_multiset_for_two_tags():
    field = encode_tags([TagAnnotation("tree", 1.2), TagAnnotation("walk", 2.0)])
    assert Counter(field.split()) == {"walk": 2, "tree": 2}


def test_descending_relevance_order():
    field = encode_tags([TagAnnotation("tree", 1.2), TagAnnotation("walk", 2.0)])
    assert field == "walk walk tree tree"


def test_rejects_non_positive_relevance():
    with pytest.raises(ValueError):
        TagAnnotation("park", 0.0)
    with pytest.raises(ValueError):
        TagAnnotation("park", -1.5)


def test_duplicate_tags_merge_by_sum():
    # 0.6 + 0.6 -> ceil(1.2) = 2, not ceil(0.6) + ceil(0.6) = 2 separate runs
    field = encode_tags([TagAnnotation("sea", 0.6), TagAnnotation("sea", 0.6)])
    assert field == "sea sea"


def test_repetition_cap():
    field = encode_tags([TagAnnotation("sky", 1000.0)])
    assert Counter(field.split()) == {"sky": MAX_REPEATS}


def test_tag_normalization():
    assert encode_tags([TagAnnotation("Palm Tree", 1.0)]) == "palmtree"


_annotations = st.lists(
    st.builds(
        TagAnnotation,
        st.sampled_from(["music", "park", "tree", "walk", "sunset", "sea"]),
        st.floats(min_value=0.01, max_value=20.0),
    ),
    max_size=12,
)


@given(_annotations)
def test_term_frequencies_match_ceiling_oracle(annotations):
    merged: dict[str, float] = {}
    for ann in annotations:
        merged[ann.tag] = merged.get(ann.tag, 0.0) + ann.relevance
    expected = {tag: min(math.ceil(rel), MAX_REPEATS) for tag, rel in merged.items()}
    assert Counter(encode_tags(annotations).split()) == expected


@given(_annotations, st.randoms())
def test_permutation_invariance(annotations, rng):
    shuffled = list(annotations)
    rng.shuffle(shuffled)
    a = Counter(encode_tags(annotations).split())
    b = Counter(encode_tags(shuffled).split())
    assert a == b
