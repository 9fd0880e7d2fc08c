import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from eventtree.core_model import (ContentVector, Interaction, MergePolicy, attach_tfidf, cosine_distance,
                                  dissimilarity, edit_distance_ratio, ingest, jaccard_distance, load_sidecar,
                                  merge_similar, read_jsonl, serialize, sparse_cosine_distance, tfidf_vectors,
                                  tokenize, write_jsonl)
from eventtree.errors import ParseError, ValidationError

MON = 1430092800
DAY = 86400


def msg(i, sender, recipients, t, text=None, topic=None):
    return Interaction(i, sender, frozenset(recipients), t, ContentVector(topic=topic, raw_text=text))


class TestIngest:
    def test_empty_stream(self):
        assert ingest([]) == []

    def test_fig1_fixture(self, fig1_msgs):
        assert [m.id for m in fig1_msgs] == [1, 2, 3, 5, 4, 6, 7]
        by_id = {m.id: m for m in fig1_msgs}
        assert sorted(by_id) == list(range(1, 8))
        assert by_id[1].timestamp == MON
        assert by_id[7].timestamp == MON + 4 * DAY
        assert by_id[2].recipients == {"TM1", "TM2"}

    def test_missing_recipients_names_line(self):
        lines = ['{"sender": "a", "recipients": ["b"], "timestamp": 1}', '{"sender": "a", "timestamp": 2}']
        with pytest.raises(ParseError, match="line 2"):
            ingest(lines)

    @pytest.mark.parametrize("line", [
        '{"sender": "a", "recipients": [], "timestamp": 1}',
        '{"sender": "", "recipients": ["b"], "timestamp": 1}',
        '{"sender": "a", "recipients": ["b"], "timestamp": "x"}',
        '{"sender": "a", "recipients": ["b"], "timestamp": 1, "topic": "x"}',
        '{"sender": "a", "recipients": ["b"], "timestamp": 1, "id": -1}',
        '[1, 2]',
        '{not json',
    ])
    def test_malformed_records(self, line):
        with pytest.raises(ParseError):
            ingest([line])

    def test_blank_lines_skipped_and_ids_assigned(self):
        out = ingest(['', '{"sender": "a", "recipients": ["b"], "timestamp": 5}', '  ',
                      '{"sender": "b", "recipients": ["a"], "timestamp": 1}'])
        assert [(m.id, m.timestamp) for m in out] == [(1, 1), (0, 5)]

    def test_duplicate_ids(self):
        rec = {"id": 1, "sender": "a", "recipients": ["b"], "timestamp": 1}
        with pytest.raises(ValidationError, match="duplicate"):
            ingest([rec, dict(rec)])

    def test_mixed_ids_rejected(self):
        with pytest.raises(ParseError):
            ingest([{"id": 1, "sender": "a", "recipients": ["b"], "timestamp": 1},
                    {"sender": "a", "recipients": ["b"], "timestamp": 2}])

    def test_topic_length(self):
        recs = [{"sender": "a", "recipients": ["b"], "timestamp": 1, "topic": [1, 0]},
                {"sender": "a", "recipients": ["b"], "timestamp": 2, "topic": [1, 0, 0]}]
        with pytest.raises(ValidationError):
            ingest(recs)
        with pytest.raises(ValidationError, match="expected 3"):
            ingest(recs[:1], topic_dim=3)

    def test_read_error_carries_path(self, tmp_path):
        p = tmp_path / "log.jsonl"
        p.write_text('{"sender": "a", "recipients": ["b"], "timestamp": 1}\n{oops\n')
        with pytest.raises(ParseError) as info:
            read_jsonl(p)
        assert info.value.line == 2
        assert "log.jsonl" in str(info.value)

    def test_sidecar(self, tmp_path):
        p = tmp_path / "meta.json"
        p.write_text(json.dumps({"topic_dim": 3, "vocabulary": ["a"]}))
        assert load_sidecar(p)["topic_dim"] == 3
        p.write_text(json.dumps({"topic_dim": 0}))
        with pytest.raises(ValidationError):
            load_sidecar(p)

    def test_interaction_invariants(self):
        with pytest.raises(ValidationError):
            Interaction(0, "a", frozenset(), 1)
        with pytest.raises(ValidationError):
            Interaction(-1, "a", frozenset({"b"}), 1)


@pytest.mark.parametrize("a,b,expected", [
    ("abc", "abc", 0.0),
    ("abcd", "abce", 0.25),
    ("", "x", 1.0),
    ("", "", 0.0),
])
def test_edit_distance_ratio(a, b, expected):
    assert edit_distance_ratio(a, b) == pytest.approx(expected)


class TestMerge:
    def test_identical_same_sender_within_gap(self):
        a = msg(0, "u", {"x"}, 1000, "same tweet #tag")
        b = msg(1, "u", {"y"}, 1000 + 3600, "same tweet #tag")
        out = merge_similar([a, b])
        assert len(out) == 1
        assert out[0].timestamp == 1000
        assert out[0].recipients == {"x", "y"}

    def test_different_senders_not_merged(self):
        out = merge_similar([msg(0, "u", {"x"}, 0, "hello"), msg(1, "v", {"x"}, 10, "hello")])
        assert len(out) == 2

    def test_gap_too_large(self):
        out = merge_similar([msg(0, "u", {"x"}, 0, "hello"), msg(1, "u", {"x"}, 10 * DAY, "hello")],
                            MergePolicy(max_time_gap=DAY))
        assert len(out) == 2

    def test_text_less_messages_never_merge(self):
        out = merge_similar([msg(0, "u", {"x"}, 0), msg(1, "u", {"x"}, 1)])
        assert len(out) == 2

    def test_ratio_threshold_is_strict(self):
        a, b = msg(0, "u", {"x"}, 0, "abcd"), msg(1, "u", {"x"}, 1, "abce")
        assert len(merge_similar([a, b], MergePolicy(edit_ratio_max=0.25))) == 2
        assert len(merge_similar([a, b], MergePolicy(edit_ratio_max=0.26))) == 1

    def test_policy_validation(self):
        with pytest.raises(ValidationError):
            MergePolicy(edit_ratio_max=1.5)
        with pytest.raises(ValidationError):
            MergePolicy(max_time_gap=-1)


class TestDissimilarity:
    def test_identical(self):
        c = ContentVector(topic=(0.2, 0.8), tfidf={"a": 1.0}, hashtags=frozenset({"x"}))
        assert dissimilarity(c, c) == 0.0

    def test_orthogonal_topics(self):
        assert dissimilarity(ContentVector(topic=(1.0, 0.0)), ContentVector(topic=(0.0, 1.0))) == 1.0

    def test_hashtag_jaccard(self):
        a = ContentVector(hashtags=frozenset({"x", "y"}))
        b = ContentVector(hashtags=frozenset({"y", "z"}))
        assert dissimilarity(a, b) == pytest.approx(2 / 3)
        assert jaccard_distance(set(), set()) == 0.0

    def test_zero_vector_is_maximally_far(self):
        assert cosine_distance((0.0, 0.0), (1.0, 0.0)) == 1.0
        assert sparse_cosine_distance({}, {"a": 1.0}) == 1.0

    def test_dimension_mismatch(self):
        with pytest.raises(ValidationError):
            cosine_distance((1.0,), (1.0, 0.0))

    def test_missing_components_contribute_nothing(self):
        a = ContentVector(topic=(1.0, 0.0), hashtags=frozenset({"x"}))
        b = ContentVector(topic=(1.0, 0.0))
        assert dissimilarity(a, b) == 0.0


class TestTfidf:
    def test_tokenize(self):
        assert tokenize("Hello, World! #Beef_ban") == ["hello", "world", "beef_ban"]

    def test_vectors_are_normalised_and_rare_terms_weigh_more(self):
        vecs = tfidf_vectors(["a b", "a c", None])
        assert vecs[2] is None
        assert sum(v * v for v in vecs[0].values()) == pytest.approx(1.0)
        assert vecs[0]["b"] > vecs[0]["a"]

    def test_vocabulary_restricts_terms(self):
        assert set(tfidf_vectors(["a b c"], vocabulary=["a"])[0]) == {"a"}

    def test_attach(self):
        out = attach_tfidf([msg(0, "u", {"x"}, 0, "hello world"), msg(1, "u", {"x"}, 1)])
        assert set(out[0].content.tfidf) == {"hello", "world"}
        assert out[1].content.tfidf is None


# ---------------------------------------------------------------------------
# properties

names = st.sampled_from(["a", "b", "c", "d", "e"])
texts = st.one_of(st.none(), st.sampled_from(["hello world", "hello world!", "hullo world", "other", "x"]))


@st.composite
def message_lists(draw):
    n = draw(st.integers(0, 12))
    out = []
    for i in range(n):
        out.append(msg(i, draw(names), draw(st.sets(names, min_size=1, max_size=3)),
                       draw(st.integers(0, 3 * DAY)), draw(texts)))
    return sorted(out, key=lambda m: m.order_key)


@given(message_lists())
def test_merge_is_idempotent_and_shrinking(msgs):
    once = merge_similar(msgs)
    assert merge_similar(once) == once
    assert len(once) <= len(msgs)
    assert {m.sender for m in once} == {m.sender for m in msgs}


topics = st.lists(st.floats(0, 1, allow_nan=False), min_size=3, max_size=3)
tags = st.frozensets(names, max_size=4)
tfidfs = st.dictionaries(names, st.floats(0, 1, allow_nan=False), max_size=4)


@given(topics, topics, tags, tags, tfidfs, tfidfs)
def test_dissimilarity_symmetric_and_bounded(t1, t2, h1, h2, f1, f2):
    a = ContentVector(topic=tuple(t1), tfidf=f1, hashtags=h1)
    b = ContentVector(topic=tuple(t2), tfidf=f2, hashtags=h2)
    d = dissimilarity(a, b)
    assert d == dissimilarity(b, a)
    assert 0.0 <= d <= 3.0


@given(topics.filter(lambda t: sum(t) > 1e-3), tags.filter(bool), tfidfs.filter(lambda d: sum(d.values()) > 1e-3))
def test_self_dissimilarity_zero(t, h, f):
    c = ContentVector(topic=tuple(t), tfidf=f, hashtags=h)
    assert dissimilarity(c, c) == 0.0


@settings(max_examples=50)
@given(message_lists())
def test_serialize_round_trip(tmp_path_factory, msgs):
    path = tmp_path_factory.mktemp("rt") / "log.jsonl"
    write_jsonl(path, msgs)
    assert read_jsonl(path) == msgs
    assert ingest([serialize(m) for m in msgs]) == msgs
