from hypothesis import given, strategies as st

from citematch.tokenizer import TokenKind, name_tokens, tokenize, word_tokens


def kinds(s):
    return [(t.kind.value, t.text) for t in tokenize(s)]


def test_reference_example():
    assert kinds("Gallant, J. (1996)") == [
        ("Letters", "Gallant"),
        ("Other", ","),
        ("Letters", "J"),
        ("Other", "."),
        ("Other", "("),
        ("Digits", "1996"),
        ("Other", ")"),
    ]


def test_dash_splits():
    assert kinds("TR-95") == [("Letters", "TR"), ("Other", "-"), ("Digits", "95")]


def test_empty_and_blank():
    assert tokenize("") == []
    assert tokenize(" \t\n ") == []


def test_mixed_run_is_one_token():
    assert kinds("abc12") == [("Alphanumeric", "abc12")]
    assert kinds("3D") == [("Alphanumeric", "3D")]


def test_unicode_letters_and_digits():
    assert kinds("Müller") == [("Letters", "Müller")]
    # Arabic-Indic digits are decimal digits
    assert kinds("٣٤") == [("Digits", "٣٤")]
    # superscript two is numeric but not a decimal digit
    assert kinds("x²") == [("Letters", "x"), ("Other", "²")]


def test_underscore_is_other():
    assert kinds("a_b") == [("Letters", "a"), ("Other", "_"), ("Letters", "b")]


def test_word_and_name_tokens():
    assert word_tokens("Smith, J. 1999") == ["Smith", "J", "1999"]
    assert name_tokens("Smith, J. 1999 x2") == ["Smith", "J", "x2"]


def _reference_tokenize(s):
    out, i = [], 0
    while i < len(s):
        ch = s[i]
        if ch.isspace():
            i += 1
        elif not (ch.isalpha() or ch.isdecimal()):
            out.append((ch, "Other", i, i + 1))
            i += 1
        else:
            j = i
            while j < len(s) and (s[j].isalpha() or s[j].isdecimal()):
                j += 1
            run = s[i:j]
            letters = any(c.isalpha() for c in run)
            digits = any(c.isdecimal() for c in run)
            kind = "Alphanumeric" if letters and digits else "Letters" if letters else "Digits"
            out.append((run, kind, i, j))
            i = j
    return out


@given(st.text())
def test_matches_character_rule_oracle(s):
    assert [(t.text, t.kind.value, t.start, t.end) for t in tokenize(s)] == _reference_tokenize(s)


@given(st.text())
def test_round_trip_and_invariants(s):
    toks = tokenize(s)
    rebuilt = []
    prev = 0
    for t in toks:
        assert s[t.start : t.end] == t.text
        assert t.start >= prev and t.end > t.start
        assert s[prev : t.start].strip() == ""
        rebuilt.append(s[prev : t.start])
        rebuilt.append(t.text)
        prev = t.end
        if t.kind is TokenKind.OTHER:
            assert len(t.text) == 1 and not t.text.isspace()
        elif t.kind is TokenKind.LETTERS:
            assert all(c.isalpha() for c in t.text)
        elif t.kind is TokenKind.DIGITS:
            assert all(c.isdecimal() for c in t.text)
        else:
            assert any(c.isalpha() for c in t.text) and any(c.isdecimal() for c in t.text)
            assert all(c.isalpha() or c.isdecimal() for c in t.text)
    rebuilt.append(s[prev:])
    assert "".join(rebuilt) == s
    assert s[prev:].strip() == ""
