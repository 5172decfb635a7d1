"""Bilingual document collections, queries, and the pluggable text analyzer.

Collections are JSON-lines files, one document per line. A document may name a
comparable document in the other language via ``pair_id``; those links are the
human-translation channel used by the second retrieval stage.
"""

import json
import logging
import string
from collections import Counter
from dataclasses import dataclass, field

from clir.errors import ConfigError, IntegrityError, NoPairError, NotFoundError, ParseError

logger = logging.getLogger(__name__)

WHITESPACE_WORD = "whitespace-word"
CHARACTER_BIGRAM = "character-bigram"

_EDGE_CHARS = string.punctuation


@dataclass
class Document:
    """One collection entry. Only title, keywords and abstract are indexable."""

    doc_id: str
    lang: str
    title: str = ""
    keywords: list = field(default_factory=list)
    abstract: str = ""
    pair_id: str | None = None


@dataclass
class Query:
    query_id: str
    lang: str
    description: str


@dataclass
class AnalyzerConfig:
    """How raw text is turned into terms for one language.

    ``tokenizer_kind`` is either whitespace-word (split on whitespace, strip
    punctuation from token edges) or character-bigram (sliding window over each
    whitespace-free run, the dependency-free default for CJK text). ``stemmer``
    is an optional per-token hook applied after stopword removal; it is not
    persisted with a saved index.
    """

    lang: str
    lowercase: bool = True
    stopword_list: frozenset = frozenset()
    tokenizer_kind: str = WHITESPACE_WORD
    min_token_len: int = 1
    stemmer: object = None

    def __post_init__(self):
        if self.tokenizer_kind not in (WHITESPACE_WORD, CHARACTER_BIGRAM):
            raise ConfigError(f"unknown tokenizer kind: {self.tokenizer_kind!r}")
        if self.min_token_len < 1:
            raise ConfigError("min_token_len must be >= 1")
        if self.tokenizer_kind == CHARACTER_BIGRAM and self.min_token_len != 1:
            raise ConfigError("character-bigram tokenization requires min_token_len = 1")
        self.stopword_list = frozenset(self.stopword_list)


@dataclass
class TermVector:
    """Term frequencies of one text, with the maximum frequency cached."""

    counts: dict
    max_tf: int

    @classmethod
    def from_tokens(cls, tokens):
        counts = dict(Counter(tokens))
        return cls(counts=counts, max_tf=max(counts.values()) if counts else 0)

    @classmethod
    def from_counts(cls, counts):
        counts = {t: int(f) for t, f in counts.items() if f > 0}
        return cls(counts=counts, max_tf=max(counts.values()) if counts else 0)

    @classmethod
    def empty(cls):
        return cls(counts={}, max_tf=0)

    def get(self, term, default=0):
        return self.counts.get(term, default)

    def __contains__(self, term):
        return term in self.counts

    def __len__(self):
        return len(self.counts)


def tokenize(text, cfg):
    """Return the ordered token stream of ``text`` under ``cfg``.

    This is the order-preserving half of the analyzer; ``analyze`` folds the
    stream into a TermVector. Phrase matching in query translation needs the
    ordered form.
    """
    if cfg.lowercase:
        text = text.lower()
    if cfg.tokenizer_kind == CHARACTER_BIGRAM:
        tokens = []
        for run in text.split():
            if len(run) == 1:
                tokens.append(run)
            else:
                tokens.extend(run[i : i + 2] for i in range(len(run) - 1))
        return [t for t in tokens if t not in cfg.stopword_list]

    tokens = []
    for raw in text.split():
        tok = raw.strip(_EDGE_CHARS)
        if len(tok) < cfg.min_token_len:
            continue
        if tok in cfg.stopword_list:
            continue
        if cfg.stemmer is not None:
            tok = cfg.stemmer(tok)
            if not tok:
                continue
        tokens.append(tok)
    return tokens


def analyze(text, cfg):
    """Analyze ``text`` into a TermVector. Total: empty input gives an empty vector."""
    return TermVector.from_tokens(tokenize(text, cfg))


def indexable_text(doc):
    """Title, keywords and abstract joined with single spaces; other fields are not indexed."""
    parts = [doc.title, *doc.keywords, doc.abstract]
    return " ".join(p for p in parts if p)


class Corpus:
    """An immutable set of documents with id lookup and declared languages.

    With ``declared_langs=None`` the language set is taken from the documents
    themselves instead of being enforced.
    """

    def __init__(self, documents, declared_langs=None):
        enforced = declared_langs is not None
        langs = list(declared_langs) if enforced else []
        self._docs = {}
        for doc in documents:
            if not doc.doc_id:
                raise IntegrityError("document with empty id")
            if doc.doc_id in self._docs:
                raise IntegrityError(f"duplicate doc_id {doc.doc_id!r}")
            if enforced:
                if doc.lang not in langs:
                    raise IntegrityError(
                        f"document {doc.doc_id!r} has undeclared language {doc.lang!r}"
                    )
            elif doc.lang not in langs:
                langs.append(doc.lang)
            self._docs[doc.doc_id] = doc
        self.declared_langs = tuple(langs)

    def __len__(self):
        return len(self._docs)

    def __iter__(self):
        return iter(self._docs.values())

    def __contains__(self, doc_id):
        return doc_id in self._docs

    def get(self, doc_id):
        try:
            return self._docs[doc_id]
        except KeyError:
            raise NotFoundError(f"no document {doc_id!r}") from None

    def filter_lang(self, lang):
        """Subset of one language. Pair links may point outside the subset."""
        return Corpus((d for d in self if d.lang == lang), self.declared_langs)

    def dangling_pairs(self):
        """(doc_id, pair_id) for links that are missing or point to the same language."""
        bad = []
        for doc in self:
            if doc.pair_id is None:
                continue
            target = self._docs.get(doc.pair_id)
            if target is None or target.lang == doc.lang:
                bad.append((doc.doc_id, doc.pair_id))
        return bad


def pair_lookup(corpus, doc_id):
    """Resolve the comparable document of ``doc_id`` in the other language."""
    doc = corpus.get(doc_id)
    if doc.pair_id is None:
        raise NoPairError(f"document {doc_id!r} has no comparable pair")
    try:
        target = corpus.get(doc.pair_id)
    except NotFoundError:
        raise NoPairError(
            f"document {doc_id!r} links to missing pair {doc.pair_id!r}"
        ) from None
    if target.lang == doc.lang:
        raise NoPairError(
            f"pair of {doc_id!r} is {doc.pair_id!r} but shares its language"
        )
    return target


def _require_str(record, key, path, line_no, allow_empty=False):
    value = record.get(key)
    if not isinstance(value, str) or (not allow_empty and not value):
        raise ParseError(f"field {key!r} missing or not a non-empty string", path, line_no)
    return value


def load_corpus(path, declared_langs=None):
    """Load a JSON-lines collection, one document object per line.

    Duplicate ids and undeclared languages are fatal; unresolved pair links are
    only reported (see ``Corpus.dangling_pairs``).
    """
    documents = []
    seen = set()
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"bad JSON: {exc.msg}", path, line_no) from None
            if not isinstance(record, dict):
                raise ParseError("record is not an object", path, line_no)
            doc_id = _require_str(record, "id", path, line_no)
            lang = _require_str(record, "lang", path, line_no)
            title = _require_str(record, "title", path, line_no, allow_empty=True)
            abstract = _require_str(record, "abstract", path, line_no, allow_empty=True)
            keywords = record.get("keywords")
            if not isinstance(keywords, list) or any(
                not isinstance(k, str) for k in keywords
            ):
                raise ParseError("field 'keywords' must be an array of strings", path, line_no)
            pair_id = record.get("pair_id")
            if pair_id is not None and (not isinstance(pair_id, str) or not pair_id):
                raise ParseError("field 'pair_id' must be a non-empty string", path, line_no)
            if doc_id in seen:
                raise IntegrityError(f"duplicate doc_id {doc_id!r} at {path}:{line_no}")
            seen.add(doc_id)
            documents.append(
                Document(
                    doc_id=doc_id,
                    lang=lang,
                    title=title,
                    keywords=list(keywords),
                    abstract=abstract,
                    pair_id=pair_id,
                )
            )
    corpus = Corpus(documents, declared_langs)
    dangling = corpus.dangling_pairs()
    if dangling:
        logger.warning("%s: %d unresolved pair link(s), e.g. %s", path, len(dangling), dangling[0])
    return corpus


def load_queries(path):
    """Load a JSON-lines query file ({id, lang, description} per line)."""
    queries = []
    seen = set()
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"bad JSON: {exc.msg}", path, line_no) from None
            if not isinstance(record, dict):
                raise ParseError("record is not an object", path, line_no)
            query_id = _require_str(record, "id", path, line_no)
            lang = _require_str(record, "lang", path, line_no)
            description = _require_str(record, "description", path, line_no)
            if query_id in seen:
                raise IntegrityError(f"duplicate query id {query_id!r} at {path}:{line_no}")
            seen.add(query_id)
            queries.append(Query(query_id=query_id, lang=lang, description=description))
    return queries
