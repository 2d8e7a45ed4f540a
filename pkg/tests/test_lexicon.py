import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lingmood.lexicon import (
    LexiconError,
    compile_lexicon,
    extract,
    tokenize,
)

FIXTURE = """\
# tiny fixture
%
1\ttentative
2\tnonfluency
%
maybe\t1
perhaps\t1
umm\t2
"""


def brute_force_percentages(tokens, lex):
    """Check every token against every entry, longest-prefix wildcard rule."""
    counts = {cid: 0 for cid, _ in lex.categories}
    matched = 0
    for tok in tokens:
        exact = [e for e in lex.entries
                 if not e.prefix_wildcard and e.pattern == tok]
        if exact:
            cats = exact[0].category_ids
        else:
            wild = [e for e in lex.entries
                    if e.prefix_wildcard and tok.startswith(e.pattern)]
            if not wild:
                continue
            best = max(len(e.pattern) for e in wild)
            cats = next(e.category_ids for e in wild
                        if len(e.pattern) == best)
        matched += 1
        for cid in cats:
            counts[cid] += 1
    n = len(tokens)
    if n == 0:
        return 0.0, {cid: 0.0 for cid in counts}
    return 100 * matched / n, {cid: 100 * c / n for cid, c in counts.items()}


# --------------------------------------------------------------------------
# compile
# --------------------------------------------------------------------------

def test_compile_fixture():
    lex = compile_lexicon(FIXTURE)
    assert len(lex.categories) == 2
    assert len(lex.entries) == 3
    assert lex.category_names == ["tentative", "nonfluency"]


def test_compile_unknown_category_errors_with_line():
    bad = FIXTURE + "oops\t99\n"
    with pytest.raises(LexiconError, match=r"line 9.*99"):
        compile_lexicon(bad)


def test_compile_duplicate_pattern_errors():
    bad = FIXTURE + "maybe\t2\n"
    with pytest.raises(LexiconError, match="duplicate pattern"):
        compile_lexicon(bad)


def test_exact_shadows_wildcard():
    lex = compile_lexicon("%\n1\tsad\n2\tother\n%\ncry\t2\ncry*\t1\n")
    assert lex.match("cry") == frozenset({2})
    assert lex.match("crying") == frozenset({1})
    assert lex.match("cried") == frozenset()


def test_longest_wildcard_wins():
    lex = compile_lexicon("%\n1\ta\n2\tb\n%\nun*\t1\nunhap*\t2\n")
    assert lex.match("unhappy") == frozenset({2})
    assert lex.match("united") == frozenset({1})


# --------------------------------------------------------------------------
# tokenize
# --------------------------------------------------------------------------

def test_tokenize_fixture():
    tokens, sentences = tokenize("I can't. Maybe tomorrow!")
    assert tokens == ["i", "can't", "maybe", "tomorrow"]
    assert sentences == 2


def test_tokenize_empty():
    assert tokenize("") == ([], 0)


def test_tokenize_punctuation_stripped():
    tokens, _ = tokenize("umm... umm")
    assert tokens == ["umm", "umm"]


def test_tokenize_hyphens_and_digits():
    tokens, _ = tokenize("self-harm x2 don't")
    assert tokens == ["self", "harm", "x2", "don't"]


# --------------------------------------------------------------------------
# extract
# --------------------------------------------------------------------------

def test_extract_percentages():
    lex = compile_lexicon(FIXTURE)
    res = extract("maybe maybe perhaps go", lex)
    assert res.word_count == 4
    assert res.category_percent[0] == pytest.approx(75.0)
    assert res.category_percent[1] == 0.0
    assert res.dictionary_coverage == pytest.approx(75.0)


def test_extract_empty_text():
    lex = compile_lexicon(FIXTURE)
    res = extract("", lex)
    assert res.word_count == 0
    assert res.dictionary_coverage == 0.0
    assert (res.category_percent == 0).all()


def test_extract_doubling_text_keeps_percentages():
    lex = compile_lexicon(FIXTURE)
    text = "maybe umm going home. Perhaps not"
    a = extract(text, lex)
    b = extract(text + " " + text, lex)
    assert b.word_count == 2 * a.word_count
    np.testing.assert_allclose(b.category_percent, a.category_percent)
    assert b.dictionary_coverage == pytest.approx(a.dictionary_coverage)


def test_adding_entry_never_decreases_coverage():
    text = "maybe umm going home perhaps not"
    a = extract(text, compile_lexicon(FIXTURE))
    b = extract(text, compile_lexicon(FIXTURE + "going\t1\n"))
    assert b.dictionary_coverage >= a.dictionary_coverage


WORDS = st.lists(
    st.text(alphabet="abcdefg", min_size=1, max_size=5), min_size=0,
    max_size=40)
PATTERNS = st.lists(
    st.tuples(st.text(alphabet="abcdefg", min_size=1, max_size=4),
              st.booleans(), st.integers(1, 3)),
    min_size=1, max_size=15)


@settings(max_examples=120, deadline=None)
@given(WORDS, PATTERNS)
def test_extract_matches_brute_force(words, patterns):
    lines = ["%", "1\tcat_a", "2\tcat_b", "3\tcat_c", "%"]
    seen = set()
    for pat, wild, cid in patterns:
        key = (pat, wild)
        if key in seen:
            continue
        seen.add(key)
        lines.append(f"{pat}{'*' if wild else ''}\t{cid}")
    lex = compile_lexicon("\n".join(lines) + "\n")
    text = " ".join(words)
    res = extract(text, lex)
    cov, per_cat = brute_force_percentages(words, lex)
    assert res.word_count == len(words)
    assert res.dictionary_coverage == pytest.approx(cov)
    for i, (cid, _) in enumerate(lex.categories):
        assert res.category_percent[i] == pytest.approx(per_cat[cid])
        assert res.category_percent[i] <= res.dictionary_coverage + 1e-9
