"""Stage-one weighting, inverted-index construction, search, and persistence.

The search tests compare the inverted-index path against an exhaustive
re-scoring of every document written directly from the weighting definition,
with no shared data structures.
"""

import json
import math
import random
from collections import Counter

import pytest

from clir.corpus import AnalyzerConfig, Corpus, Document, TermVector, analyze
from clir.errors import ConfigError, IntegrityError
from clir.index import (
    build_index,
    cosine_similarity,
    load_index,
    save_index,
    search,
    weight_atc,
)

CFG = AnalyzerConfig(lang="en")


def _corpus_from_texts(texts: dict[str, str], lang="en") -> Corpus:
    docs = [Document(doc_id=d, lang=lang, abstract=t) for d, t in texts.items()]
    return Corpus(docs, [lang])


def _query_vec(text: str) -> TermVector:
    return analyze(text, CFG)


def test_weight_atc_zero_idf_single_doc():
    assert weight_atc(3, 3, 1, 1) == 0.0


def test_weight_atc_full_tf_factor():
    # tf at the document maximum makes the augmented factor exactly 1
    for df, num_docs in [(1, 8), (3, 9), (5, 100)]:
        assert weight_atc(4, 4, df, num_docs) == pytest.approx(math.log(num_docs / df), abs=1e-12)


def test_weight_atc_frozen_value():
    # 0.625 * ln 8, evaluated independently and frozen
    assert weight_atc(1, 4, 1, 8) == pytest.approx(1.2996509635498974, abs=1e-9)


def test_build_index_counts():
    index = build_index(
        _corpus_from_texts({"d1": "a a b", "d2": "b c", "d3": "c"}), CFG
    )
    assert index.num_docs == 3
    assert [(p.doc_id, p.tf) for p in index.postings["a"]] == [("d1", 2)]
    assert index.df == {"a": 1, "b": 2, "c": 2}
    for term, plist in index.postings.items():
        assert index.df[term] == len(plist)
        assert [p.doc_id for p in plist] == sorted(p.doc_id for p in plist)
        for p in plist:
            assert p.doc_id in index.max_tf
            assert p.doc_id in index.doc_norms


def test_build_index_rejects_empty_collection():
    with pytest.raises(ConfigError, match="empty collection"):
        build_index(Corpus([], ["en"]), CFG)


def test_build_index_rejects_language_mismatch():
    corpus = Corpus([Document(doc_id="j1", lang="ja", abstract="x")], ["ja"])
    with pytest.raises(ConfigError):
        build_index(corpus, CFG)


def test_empty_document_counts_toward_num_docs_only():
    index = build_index(_corpus_from_texts({"d1": "a", "d2": ""}), CFG)
    assert index.num_docs == 2
    assert "d2" not in index.max_tf
    assert "d2" not in index.doc_norms


def test_cosine_identical_vectors():
    v = {"a": 0.3, "b": 1.7}
    assert cosine_similarity(v, v) == 1.0


def test_cosine_disjoint_vectors():
    assert cosine_similarity({"a": 1.0}, {"b": 2.0}) == 0.0


def test_cosine_hand_value():
    assert cosine_similarity({"a": 1.0}, {"a": 1.0, "b": 1.0}) == pytest.approx(
        0.7071067811865475, abs=1e-12
    )


def test_cosine_null_vector():
    assert cosine_similarity({}, {"a": 1.0}) == 0.0


def test_search_single_match_ranks_first():
    index = build_index(_corpus_from_texts({"d1": "rare b", "d2": "b c", "d3": "c b"}), CFG)
    ranked = search(index, _query_vec("rare"), 10)
    assert ranked.entries[0].doc_id == "d1"


def test_search_unknown_terms_empty():
    index = build_index(_corpus_from_texts({"d1": "a b"}), CFG)
    assert search(index, _query_vec("zz qq"), 5).entries == []


def test_search_term_in_every_document_scores_zero():
    # idf ln(N/N) = 0, so a query of only that term matches nothing
    index = build_index(_corpus_from_texts({"d1": "common a", "d2": "common b"}), CFG)
    assert search(index, _query_vec("common"), 5).entries == []


def test_search_ties_break_by_doc_id():
    index = build_index(
        _corpus_from_texts({"db": "a x", "da": "a x", "dc": "y z"}), CFG
    )
    ranked = search(index, _query_vec("a"), 5)
    assert [e.doc_id for e in ranked.entries] == ["da", "db"]


def test_search_truncates_to_top_n():
    texts = {f"d{i}": "a filler" + str(i) for i in range(5)}
    texts["d9"] = "other"
    index = build_index(_corpus_from_texts(texts), CFG)
    assert len(search(index, _query_vec("a"), 3).entries) == 3


def test_search_rejects_nonpositive_depth():
    index = build_index(_corpus_from_texts({"d1": "a"}), CFG)
    with pytest.raises(ValueError):
        search(index, _query_vec("a"), 0)


def _oracle_rank(doc_tokens: dict[str, list[str]], query_tokens: list[str], top_n: int):
    """Exhaustive scoring straight from the definition: augmented TF times
    natural-log IDF on both sides, full cosine, no inverted file."""
    num_docs = len(doc_tokens)
    counts = {d: Counter(ts) for d, ts in doc_tokens.items()}
    df = Counter()
    for c in counts.values():
        for t in c:
            df[t] += 1

    def weigh(c):
        if not c:
            return {}
        m = max(c.values())
        return {t: (0.5 + 0.5 * f / m) * math.log(num_docs / df[t]) for t, f in c.items()}

    qc = Counter(query_tokens)
    if not qc:
        return []
    qm = max(qc.values())
    qw = {
        t: (0.5 + 0.5 * f / qm) * math.log(num_docs / df[t])
        for t, f in qc.items()
        if df.get(t)
    }
    qn = math.sqrt(sum(w * w for w in qw.values()))
    out = []
    for d, c in counts.items():
        dw = weigh(c)
        dn = math.sqrt(sum(w * w for w in dw.values()))
        dot = sum(w * dw.get(t, 0.0) for t, w in qw.items())
        if qn > 0.0 and dn > 0.0 and dot > 0.0:
            out.append((d, dot / (qn * dn)))
    out.sort(key=lambda x: (-x[1], x[0]))
    return out[:top_n]


def _random_instance(rng):
    vocab = [f"t{i:02d}" for i in range(12)]
    num_docs = rng.randrange(1, 51)
    doc_tokens = {
        f"d{i:02d}": [rng.choice(vocab) for _ in range(rng.randrange(0, 16))]
        for i in range(num_docs)
    }
    query = [rng.choice(vocab + ["zz"]) for _ in range(rng.randrange(1, 7))]
    return doc_tokens, query


def test_search_matches_exhaustive_oracle():
    rng = random.Random(20240817)
    for _ in range(50):
        doc_tokens, query = _random_instance(rng)
        top_n = rng.randrange(1, 60)
        index = build_index(
            _corpus_from_texts({d: " ".join(ts) for d, ts in doc_tokens.items()}), CFG
        )
        got = search(index, TermVector.from_tokens(query), top_n)
        want = _oracle_rank(doc_tokens, query, top_n)
        assert [e.doc_id for e in got.entries] == [d for d, _ in want]
        for entry, (_, score) in zip(got.entries, want):
            assert entry.score == pytest.approx(score, abs=1e-9)
            assert 0.0 <= entry.score <= 1.0


def test_search_prefix_truncation_property():
    rng = random.Random(11)
    for _ in range(20):
        doc_tokens, query = _random_instance(rng)
        index = build_index(
            _corpus_from_texts({d: " ".join(ts) for d, ts in doc_tokens.items()}), CFG
        )
        full = search(index, TermVector.from_tokens(query), 60).entries
        for n in (1, 3, 10):
            assert search(index, TermVector.from_tokens(query), n).entries == full[:n]


def test_search_repeat_submission_identical():
    index = build_index(_corpus_from_texts({"d1": "a b", "d2": "b c", "d3": "a c"}), CFG)
    first = search(index, _query_vec("a b c"), 10)
    second = search(index, _query_vec("a b c"), 10)
    assert first == second


def test_index_round_trip_preserves_search(tmp_path):
    texts = {"d1": "alpha beta", "d2": "beta gamma gamma", "d3": "delta", "d4": ""}
    index = build_index(_corpus_from_texts(texts), CFG)
    path = tmp_path / "idx.json"
    save_index(index, path)
    loaded = load_index(path)
    for q in ("alpha", "beta gamma", "delta zz", "nothing"):
        assert search(loaded, _query_vec(q), 10) == search(index, _query_vec(q), 10)
    assert loaded.analyzer == index.analyzer


def test_save_index_rejects_stemmer():
    cfg = AnalyzerConfig(lang="en", stemmer=lambda t: t)
    index = build_index(
        Corpus([Document(doc_id="d1", lang="en", abstract="a")], ["en"]), cfg
    )
    with pytest.raises(ConfigError):
        save_index(index, "/dev/null")


def test_load_index_rejects_wrong_format(tmp_path):
    path = tmp_path / "idx.json"
    path.write_text(json.dumps({"format": "something-else"}), encoding="utf-8")
    with pytest.raises(IntegrityError):
        load_index(path)


def test_load_index_rejects_inconsistent_df(tmp_path):
    index = build_index(_corpus_from_texts({"d1": "a", "d2": "a b"}), CFG)
    path = tmp_path / "idx.json"
    save_index(index, path)
    payload = json.loads(path.read_text(encoding="utf-8"))
    payload["df"]["a"] = 7
    path.write_text(json.dumps(payload), encoding="utf-8")
    with pytest.raises(IntegrityError, match="'a'"):
        load_index(path)
