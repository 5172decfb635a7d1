"""Re-score back-translated documents against the original query and re-rank.

The second stage works on a handful of documents, so scoring is direct pattern
matching over term vectors, no index. Term weights are 1 + ln(tf) times
ln(N/n_t) where N is the size of the retrieved set and n_t counts, within that
set, the translated documents containing the term. Similarity is the plain
inner product; length normalization is deliberately absent. The two stages'
scores then combine as a weighted geometric mean with a small floor replacing
zeros.
"""

import math
from dataclasses import dataclass

from clir.corpus import analyze, indexable_text
from clir.index import RankedList


@dataclass
class CombineParams:
    """Exponents of the geometric-mean combination and the zero-score floor."""

    alpha: float = 1.0
    beta: float = 1.0
    epsilon: float = 0.0001

    def __post_init__(self):
        if self.epsilon <= 0.0:
            raise ValueError("epsilon must be positive")
        if self.alpha < 0.0 or self.beta < 0.0:
            raise ValueError("alpha and beta must be non-negative")


@dataclass
class RerankStats:
    """Collection statistics of the retrieved set, counted on translated text."""

    num_docs: int  # documents retrieved in the first stage
    df: dict  # term -> documents among those containing it

    @classmethod
    def from_vectors(cls, vectors, num_docs):
        vectors = list(vectors)
        if len(vectors) > num_docs:
            raise ValueError("more translated vectors than retrieved documents")
        df = {}
        for vec in vectors:
            for term in vec.counts:
                df[term] = df.get(term, 0) + 1
        return cls(num_docs=num_docs, df=df)


@dataclass
class RerankedEntry:
    """One re-ranked document with both stage scores and their combination."""

    doc_id: str
    esim: float  # first-stage score
    jsim: float  # second-stage score
    sim: float  # combined score used for the final ordering

    @property
    def score(self):
        return self.sim


def rerank_tf(f):
    """Dampened term-frequency factor; an absent term contributes nothing."""
    if f <= 0:
        return 0.0
    return 1.0 + math.log(f)


def rerank_idf(stats, term):
    """ln(N / n_t) over the retrieved set. Undefined when no document has the term."""
    n = stats.df.get(term, 0)
    if n < 1:
        raise ValueError(f"term {term!r} occurs in none of the retrieved documents")
    return math.log(stats.num_docs / n)


def score_inner_product(query_terms, doc_terms, stats, use_idf=True):
    """Inner product of the weighted query and document vectors.

    Only shared terms contribute. Terms with no support in the retrieved set
    are skipped (they cannot match any counted document). ``use_idf=False``
    drops the IDF factor to measure its effect.
    """
    q = query_terms.counts
    d = doc_terms.counts
    small, other = (q, d) if len(q) <= len(d) else (d, q)
    total = 0.0
    for term in small:
        if term not in other:
            continue
        if use_idf:
            if stats.df.get(term, 0) < 1:
                continue
            idf = rerank_idf(stats, term)
        else:
            idf = 1.0
        total += (rerank_tf(q[term]) * idf) * (rerank_tf(d[term]) * idf)
    return total


def combine_scores(esim, jsim, p):
    """Weighted geometric-mean combination of the two stage scores.

    A zero on either side would erase the other, so zeros are replaced by the
    small positive floor ``p.epsilon`` first. The result is therefore always
    strictly positive.
    """
    e = esim if esim > 0.0 else p.epsilon
    j = jsim if jsim > 0.0 else p.epsilon
    return e**p.alpha * j**p.beta


def rerank(first_stage, translated_docs, source_query, cfg, p, use_idf=True):
    """Re-order the first-stage retrieval by the combined score.

    ``translated_docs`` maps doc_id to the query-language rendition; documents
    missing from it (failed translations) score zero in the second stage but
    stay in the list. Ties break by ascending doc_id.
    """
    entries = first_stage.entries
    if not entries:
        return RankedList(query_id=first_stage.query_id, entries=[])

    doc_vectors = {}
    for entry in entries:
        doc = translated_docs.get(entry.doc_id)
        if doc is not None:
            doc_vectors[entry.doc_id] = analyze(indexable_text(doc), cfg)
    stats = RerankStats.from_vectors(doc_vectors.values(), num_docs=len(entries))
    query_vec = analyze(source_query.description, cfg)

    reranked = []
    for entry in entries:
        vec = doc_vectors.get(entry.doc_id)
        jsim = 0.0
        if vec is not None:
            jsim = score_inner_product(query_vec, vec, stats, use_idf=use_idf)
        reranked.append(
            RerankedEntry(
                doc_id=entry.doc_id,
                esim=entry.score,
                jsim=jsim,
                sim=combine_scores(entry.score, jsim, p),
            )
        )
    reranked.sort(key=lambda r: (-r.sim, r.doc_id))
    return RankedList(query_id=first_stage.query_id, entries=reranked)
