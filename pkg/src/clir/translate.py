"""Query translation (dictionary phrases, external MT, or both) and document translation.

The external translator is an interchangeable adapter: a subprocess contract
for real systems and a table-driven mock for deterministic tests. Dictionary
translation disambiguates candidates by their document frequency in the target
collection.
"""

import logging
import shlex
import subprocess
import time
from collections import Counter
from dataclasses import dataclass, field

from clir.corpus import Document, TermVector, analyze, pair_lookup, tokenize
from clir.errors import ConfigError, ParseError, TranslationError

logger = logging.getLogger(__name__)

MT_SENTENCE = "mt-sentence"
MT_PHRASE = "mt-phrase"
DICT_PHRASE = "dict-phrase"
COMBINED = "combined"
METHOD_KINDS = (MT_SENTENCE, MT_PHRASE, DICT_PHRASE, COMBINED)

CHANNEL_MT = "mt"
CHANNEL_HT = "ht"
DOC_CHANNELS = (CHANNEL_MT, CHANNEL_HT)


class BilingualDictionary:
    """Source phrases (one or more tokens) mapped to candidate translations."""

    def __init__(self, entries):
        self.entries = {}
        for phrase, candidates in entries.items():
            key = tuple(phrase.split()) if isinstance(phrase, str) else tuple(phrase)
            if not key:
                raise ConfigError("dictionary entry with empty source phrase")
            cleaned = [c.strip() for c in candidates if c and c.strip()]
            if not cleaned:
                raise ConfigError(f"dictionary entry {' '.join(key)!r} has no candidates")
            bucket = self.entries.setdefault(key, [])
            for cand in cleaned:
                if cand not in bucket:
                    bucket.append(cand)
        self.max_phrase_len = max((len(k) for k in self.entries), default=0)

    def __len__(self):
        return len(self.entries)

    def __contains__(self, phrase):
        key = tuple(phrase.split()) if isinstance(phrase, str) else tuple(phrase)
        return key in self.entries

    @classmethod
    def from_file(cls, path):
        """Read tab-separated lines: ``source phrase<TAB>cand1|cand2|...``."""
        entries = {}
        with open(path, encoding="utf-8") as fh:
            for line_no, line in enumerate(fh, 1):
                line = line.rstrip("\n")
                if not line.strip():
                    continue
                parts = line.split("\t")
                if len(parts) != 2:
                    raise ParseError("expected exactly one tab separator", path, line_no)
                source, cands = parts
                if not source.strip():
                    raise ParseError("empty source phrase", path, line_no)
                candidates = [c.strip() for c in cands.split("|") if c.strip()]
                if not candidates:
                    raise ParseError("no candidate translations", path, line_no)
                existing = entries.setdefault(source.strip(), [])
                for cand in candidates:
                    if cand not in existing:
                        existing.append(cand)
        return cls(entries)


class MTAdapter:
    """Behavioral contract for translators.

    ``translate`` must be deterministic per input within one run and return
    plain text in the requested target language.
    """

    def translate(self, text, src, tgt):
        raise NotImplementedError


class CommandAdapter(MTAdapter):
    """External translator process: argv plus the two language tags as arguments,
    source text on stdin, translation on stdout, exit status 0 on success."""

    def __init__(self, command, timeout_s=60.0):
        self.argv = shlex.split(command) if isinstance(command, str) else list(command)
        if not self.argv:
            raise ConfigError("empty translator command")
        self.timeout_s = timeout_s

    def translate(self, text, src, tgt):
        try:
            proc = subprocess.run(
                self.argv + [src, tgt],
                input=text,
                capture_output=True,
                text=True,
                timeout=self.timeout_s,
            )
        except subprocess.TimeoutExpired:
            raise TranslationError(f"translator timed out on input {text[:80]!r}") from None
        except OSError as exc:
            raise TranslationError(f"cannot run translator {self.argv[0]!r}: {exc}") from None
        if proc.returncode != 0:
            detail = proc.stderr.strip()[:200]
            raise TranslationError(
                f"translator exited {proc.returncode} on input {text[:80]!r}: {detail}"
            )
        return proc.stdout.rstrip("\n")


class TableAdapter(MTAdapter):
    """Deterministic in-memory mock translator.

    Looks the whole (stripped) input up first; otherwise maps token by token,
    passing unknown tokens through unchanged. ``delay_s`` adds a fixed per-call
    sleep for cost experiments.
    """

    def __init__(self, table, delay_s=0.0):
        self.table = dict(table)
        self.delay_s = delay_s

    @classmethod
    def from_file(cls, path, delay_s=0.0):
        """Read tab-separated lines with exactly one translation per source."""
        table = {}
        with open(path, encoding="utf-8") as fh:
            for line_no, line in enumerate(fh, 1):
                line = line.rstrip("\n")
                if not line.strip():
                    continue
                parts = line.split("\t")
                if len(parts) != 2 or not parts[0].strip():
                    raise ParseError("expected 'source<TAB>translation'", path, line_no)
                if "|" in parts[1] or not parts[1].strip():
                    raise ParseError("mock table entries take exactly one translation", path, line_no)
                table[parts[0].strip()] = parts[1].strip()
        return cls(table, delay_s=delay_s)

    def translate(self, text, src, tgt):
        if self.delay_s:
            time.sleep(self.delay_s)
        key = text.strip()
        if key in self.table:
            return self.table[key]
        return " ".join(self.table.get(tok, tok) for tok in text.split())


class IdentityAdapter(MTAdapter):
    """Returns its input verbatim; handy for monolingual wiring checks."""

    def translate(self, text, src, tgt):
        return text


@dataclass
class TranslationMethod:
    """One of the four query translation setups.

    Sentence MT translates the whole description; phrase MT translates
    extracted words and phrases one by one; dictionary phrase translation
    segments the query against a bilingual dictionary; combined merges the
    phrase-MT and dictionary outputs with doubled shared terms.
    """

    kind: str
    adapter: MTAdapter | None = None
    dictionary: BilingualDictionary | None = None

    def __post_init__(self):
        if self.kind not in METHOD_KINDS:
            raise ConfigError(f"unknown translation method {self.kind!r}")
        if self.kind in (MT_SENTENCE, MT_PHRASE, COMBINED) and self.adapter is None:
            raise ConfigError(f"method {self.kind!r} needs a translator adapter")
        if self.kind in (DICT_PHRASE, COMBINED) and self.dictionary is None:
            raise ConfigError(f"method {self.kind!r} needs a bilingual dictionary")


@dataclass
class TranslatedQuery:
    terms: TermVector
    method: str
    unresolved: list
    lang: str


def _candidate_df(candidate, index):
    # A multi-token candidate occurs in at most min(df of its tokens) documents.
    return min((index.df.get(tok, 0) for tok in candidate.split()), default=0)


def translate_query_dict(query, dictionary, target_index, cfg):
    """Dictionary-based phrase translation of a query.

    The analyzed source token stream is segmented greedily, longest phrase
    first. Each matched phrase contributes the candidate with the highest
    document frequency in the target collection (ties break lexicographically);
    tokens no phrase covers are reported as unresolved. The ``cfg`` analyzer is
    the source-language one; dictionary entries must be in its normal form.
    """
    tokens = tokenize(query.description, cfg)
    counts = Counter()
    unresolved = []
    i = 0
    n = len(tokens)
    while i < n:
        match = None
        for span in range(min(dictionary.max_phrase_len, n - i), 0, -1):
            candidates = dictionary.entries.get(tuple(tokens[i : i + span]))
            if candidates:
                match = (span, candidates)
                break
        if match is None:
            if tokens[i] not in unresolved:
                unresolved.append(tokens[i])
            i += 1
            continue
        span, candidates = match
        best = min(candidates, key=lambda c: (-_candidate_df(c, target_index), c))
        counts.update(best.split())
        i += span
    return TranslatedQuery(
        terms=TermVector.from_counts(counts),
        method=DICT_PHRASE,
        unresolved=unresolved,
        lang=target_index.lang,
    )


def translate_query_mt(query, adapter, mode, cfg_src, cfg_tgt, phrases=None):
    """Adapter-based query translation.

    Sentence mode sends the whole description through the adapter and analyzes
    the output. Phrase mode analyzes the source first and translates each
    content token independently; adjacent token pairs listed in ``phrases`` are
    kept together as units. Outputs are merged by summing term frequencies.
    """
    if mode not in ("sentence", "phrase"):
        raise ConfigError(f"unknown MT mode {mode!r}")
    if not query.description.strip():
        kind = MT_SENTENCE if mode == "sentence" else MT_PHRASE
        return TranslatedQuery(TermVector.empty(), kind, [], cfg_tgt.lang)

    if mode == "sentence":
        out = adapter.translate(query.description, query.lang, cfg_tgt.lang)
        return TranslatedQuery(analyze(out, cfg_tgt), MT_SENTENCE, [], cfg_tgt.lang)

    tokens = tokenize(query.description, cfg_src)
    units = []
    i = 0
    while i < len(tokens):
        if (
            phrases is not None
            and i + 1 < len(tokens)
            and (tokens[i], tokens[i + 1]) in phrases.entries
        ):
            units.append(tokens[i] + " " + tokens[i + 1])
            i += 2
        else:
            units.append(tokens[i])
            i += 1

    counts = Counter()
    unresolved = []
    for unit in units:
        out = adapter.translate(unit, query.lang, cfg_tgt.lang)
        vec = analyze(out, cfg_tgt)
        if vec.counts:
            counts.update(vec.counts)
        elif unit not in unresolved:
            unresolved.append(unit)
    return TranslatedQuery(TermVector.from_counts(counts), MT_PHRASE, unresolved, cfg_tgt.lang)


def combine_translations(a, b):
    """Merge two translated queries; terms both produced count twice.

    Unresolved tokens survive only if neither method resolved them.
    """
    if a.lang != b.lang:
        raise ConfigError(f"cannot combine translations into {a.lang!r} and {b.lang!r}")
    counts = Counter(a.terms.counts)
    counts.update(b.terms.counts)
    b_unresolved = set(b.unresolved)
    unresolved = [t for t in a.unresolved if t in b_unresolved]
    return TranslatedQuery(TermVector.from_counts(counts), COMBINED, unresolved, a.lang)


def translate_document(doc, channel, corpus=None, adapter=None, target_lang=None):
    """Render one retrieved document in the query language.

    The machine channel passes title, keywords and abstract through the
    adapter; the human channel returns the comparable paired document verbatim.
    """
    if channel == CHANNEL_HT:
        if corpus is None:
            raise ConfigError("human-translation channel needs the corpus for pair lookup")
        return pair_lookup(corpus, doc.doc_id)
    if channel == CHANNEL_MT:
        if adapter is None or not target_lang:
            raise ConfigError("machine-translation channel needs an adapter and a target language")
        return Document(
            doc_id=doc.doc_id,
            lang=target_lang,
            title=adapter.translate(doc.title, doc.lang, target_lang) if doc.title else "",
            keywords=[
                adapter.translate(k, doc.lang, target_lang) if k else k for k in doc.keywords
            ],
            abstract=adapter.translate(doc.abstract, doc.lang, target_lang)
            if doc.abstract
            else "",
            pair_id=doc.pair_id,
        )
    raise ConfigError(f"unknown document channel {channel!r}")
