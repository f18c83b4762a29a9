from hypothesis import given
from hypothesis import strategies as st

from citybias.tokenize import MENTION_PLACEHOLDER, ngrams, tokenize


def test_casefold_and_split():
    assert tokenize("Most Racist Person") == ["most", "racist", "person"]


def test_mention_replaced():
    assert tokenize("@JoeSmith said hi") == [MENTION_PLACEHOLDER, "said", "hi"]


def test_hashtag_kept_whole():
    assert tokenize("loving #SunnyDays today") == ["loving", "#sunnydays", "today"]


def test_edge_punctuation_stripped():
    assert tokenize('"hello," she said...') == ["hello", "she", "said"]


def test_contraction_split():
    assert tokenize("they're here") == ["they", "re", "here"]
    assert tokenize("I'm done") == ["i", "m", "done"]


def test_unicode_apostrophe():
    assert tokenize("they’re here") == ["they", "re", "here"]


def test_empty_and_whitespace():
    assert tokenize("") == []
    assert tokenize("   \t\n ") == []


def test_pure_punctuation_dropped():
    assert tokenize("!!! ... --") == []


def test_ngram_counts():
    toks = tokenize("most racist person")
    grams = ngrams(toks, (1, 2, 3))
    assert len(grams) == 6
    assert "most racist person" in grams
    assert "most racist" in grams and "racist person" in grams


def test_ngram_single_order():
    assert ngrams(["a", "b", "c"], (2,)) == ["a b", "b c"]


def test_ngrams_short_text():
    assert ngrams(["solo"], (1, 2, 3)) == ["solo"]


@given(st.text(max_size=80))
def test_tokens_never_empty(text):
    for tok in tokenize(text):
        assert tok
        assert tok == tok.casefold()


@given(st.text(max_size=80))
def test_tokenize_deterministic(text):
    assert tokenize(text) == tokenize(text)


@given(st.lists(st.sampled_from(["aa", "bb", "cc", "dd"]), max_size=8))
def test_ngram_total(tokens):
    grams = ngrams(tokens, (1, 2, 3))
    n = len(tokens)
    want = n + max(0, n - 1) + max(0, n - 2)
    assert len(grams) == want
