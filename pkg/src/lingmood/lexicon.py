"""Word-count feature extraction: tokenizer plus wildcard lexicon matcher.

The lexicon file format is the classic dictionary layout::

    %
    1<TAB>tentative
    2<TAB>nonfluency
    %
    maybe<TAB>1
    perhap*<TAB>1
    umm<TAB>2

A trailing ``*`` marks a prefix wildcard; ``#`` starts a comment line.
Exact entries shadow wildcard entries for the same token; among wildcards
the longest matching prefix wins. Percentages are denominated in total
tokens (numerals count as tokens but match no entry).
"""

import re
from dataclasses import dataclass

import numpy as np


class LexiconError(ValueError):
    """Malformed lexicon source."""


@dataclass(frozen=True)
class LexiconEntry:
    pattern: str
    prefix_wildcard: bool
    category_ids: frozenset


@dataclass(frozen=True)
class Lexicon:
    categories: tuple          # ((id, name), ...) in file order
    entries: tuple             # LexiconEntry, sorted for deterministic matching
    _exact: dict
    _wildcard: dict
    _max_wildcard_len: int

    @property
    def category_ids(self):
        return [cid for cid, _ in self.categories]

    @property
    def category_names(self):
        return [name for _, name in self.categories]

    def match(self, token):
        """Category-id set the token maps to, or an empty frozenset."""
        hit = self._exact.get(token)
        if hit is not None:
            return hit
        # longest matching wildcard prefix wins
        for ln in range(min(len(token), self._max_wildcard_len), 0, -1):
            hit = self._wildcard.get(token[:ln])
            if hit is not None:
                return hit
        return frozenset()


@dataclass
class ExtractionResult:
    word_count: int
    sentence_count: int
    words_per_sentence: float
    dictionary_coverage: float
    category_percent: np.ndarray   # aligned to Lexicon.categories


def compile_lexicon(source: str) -> Lexicon:
    """Parse and validate lexicon text; raises LexiconError with line numbers."""
    categories = []
    cat_ids = set()
    entries = []
    seen_patterns = set()
    section = 0   # 0 = before categories, 1 = categories, 2 = entries
    for lineno, raw in enumerate(source.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line == "%":
            section += 1
            if section > 2:
                raise LexiconError(f"line {lineno}: unexpected extra '%' divider")
            continue
        if section == 0:
            raise LexiconError(f"line {lineno}: content before first '%' divider")
        fields = line.split("\t")
        if section == 1:
            if len(fields) != 2:
                raise LexiconError(f"line {lineno}: expected 'id<TAB>name'")
            try:
                cid = int(fields[0])
            except ValueError:
                raise LexiconError(f"line {lineno}: category id must be an integer")
            if cid in cat_ids:
                raise LexiconError(f"line {lineno}: duplicate category id {cid}")
            cat_ids.add(cid)
            categories.append((cid, fields[1].strip()))
        else:
            if len(fields) < 2:
                raise LexiconError(f"line {lineno}: expected 'pattern<TAB>id[...]'")
            pattern = fields[0].strip().lower()
            wildcard = pattern.endswith("*")
            if wildcard:
                pattern = pattern[:-1]
            if not pattern:
                raise LexiconError(f"line {lineno}: empty pattern")
            key = (pattern, wildcard)
            if key in seen_patterns:
                raise LexiconError(
                    f"line {lineno}: duplicate pattern '{pattern}{'*' if wildcard else ''}'"
                )
            seen_patterns.add(key)
            ids = set()
            for f in fields[1:]:
                try:
                    cid = int(f)
                except ValueError:
                    raise LexiconError(f"line {lineno}: bad category id '{f}'")
                if cid not in cat_ids:
                    raise LexiconError(f"line {lineno}: unknown category id {cid}")
                ids.add(cid)
            entries.append(LexiconEntry(pattern, wildcard, frozenset(ids)))
    if section < 2:
        raise LexiconError("missing '%' section dividers")

    entries.sort(key=lambda e: (-len(e.pattern), e.pattern, e.prefix_wildcard))
    exact = {e.pattern: e.category_ids for e in entries if not e.prefix_wildcard}
    wildcard = {e.pattern: e.category_ids for e in entries if e.prefix_wildcard}
    max_wc = max((len(p) for p in wildcard), default=0)
    return Lexicon(tuple(categories), tuple(entries), exact, wildcard, max_wc)


def compile_lexicon_file(path) -> Lexicon:
    with open(path, encoding="utf-8") as fh:
        return compile_lexicon(fh.read())


_TOKEN_RE = re.compile(r"[^\W_]+(?:'[^\W_]+)*", re.UNICODE)
_SENTENCE_RE = re.compile(r"[.!?]+(?=\s|$)")


def tokenize(text: str):
    """Lowercased tokens (letters/digits with internal apostrophes) and
    sentence count."""
    lowered = text.lower()
    tokens = _TOKEN_RE.findall(lowered)
    sentences = len(_SENTENCE_RE.findall(lowered))
    if tokens:
        # text with trailing words after (or without) a terminator still
        # forms a final sentence
        tail = _SENTENCE_RE.split(lowered)[-1]
        if _TOKEN_RE.search(tail):
            sentences += 1
    return tokens, sentences


def extract(text: str, lex: Lexicon) -> ExtractionResult:
    """Per-category percentage features for one document."""
    tokens, sentences = tokenize(text)
    n = len(tokens)
    cat_index = {cid: i for i, (cid, _) in enumerate(lex.categories)}
    counts = np.zeros(len(lex.categories), dtype=np.int64)
    matched = 0
    for tok in tokens:
        cats = lex.match(tok)
        if cats:
            matched += 1
            for cid in cats:
                counts[cat_index[cid]] += 1
    if n == 0:
        return ExtractionResult(0, 0, 0.0, 0.0, np.zeros(len(lex.categories)))
    return ExtractionResult(
        word_count=n,
        sentence_count=sentences,
        words_per_sentence=n / sentences if sentences else float(n),
        dictionary_coverage=100.0 * matched / n,
        category_percent=100.0 * counts / n,
    )
