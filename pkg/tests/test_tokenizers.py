from hypothesis import given, settings
from hypothesis import strategies as st

from augcode.tokenizers import split_identifier, tokenize_code, tokenize_nl


class TestTokenizeCode:
    def test_empty(self):
        assert tokenize_code("") == []

    def test_golden_call_chain(self):
        assert tokenize_code("return df.to_csv(path)") == [
            "return", "df", ".", "to_csv", "(", "path", ")",
        ]

    def test_golden_augmented_assign(self):
        assert tokenize_code("x += 10") == ["x", "+=", "10"]

    def test_multichar_operators_stay_single_tokens(self):
        assert tokenize_code("a//=b**2;c:=d!=e->f") == [
            "a", "//=", "b", "**", "2", ";", "c", ":=", "d", "!=", "e", "->", "f",
        ]

    def test_string_literal_is_single_token(self):
        assert tokenize_code('x = "a,b"') == ["x", "=", '"a,b"']
        assert tokenize_code("y = r'raw'") == ["y", "=", "r'raw'"]

    def test_string_whitespace_removed_to_keep_invariant(self):
        tokens = tokenize_code('msg = "two words"')
        assert tokens == ["msg", "=", '"twowords"']
        assert all(" " not in t and t for t in tokens)

    def test_triple_quoted_single_token(self):
        tokens = tokenize_code('x = """a\nb"""')
        assert tokens == ["x", "=", '"""ab"""']

    def test_numbers(self):
        assert tokenize_code("0x1F 1_000 2.5e-3 5j .5") == [
            "0x1F", "1_000", "2.5e-3", "5j", ".5",
        ]

    def test_total_on_unterminated_string(self):
        tokens = tokenize_code('x = "unclosed')
        assert tokens[0] == "x"
        assert '"' in tokens  # degraded to a single-char token

    def test_total_on_arbitrary_bytes(self):
        assert tokenize_code("¤¶ x") == ["¤", "¶", "x"]

    def test_no_token_empty_or_whitespace_property(self):
        for text in ("def f(x):\n  return {x: [1,2]}\n", "a@b", "  \t "):
            for token in tokenize_code(text):
                assert token
                assert not any(c.isspace() for c in token)

    def test_identifier_splitting_flag(self):
        assert tokenize_code("to_csv", split_identifiers=True) == ["to", "csv"]
        assert tokenize_code("XMLParser2", split_identifiers=True) == ["XML", "Parser2"]
        assert tokenize_code("to_csv") == ["to_csv"]

    def test_split_identifier_helper(self):
        assert split_identifier("snake_case_name") == ["snake", "case", "name"]
        assert split_identifier("camelCaseName") == ["camel", "Case", "Name"]
        assert split_identifier("_") == ["_"]


class TestTokenizeNl:
    def test_empty(self):
        assert tokenize_nl("") == []

    def test_golden_sentence(self):
        assert tokenize_nl("Save a CSV file.") == ["save", "a", "csv", "file"]

    def test_golden_hyphen_split(self):
        assert tokenize_nl("re-use  cache") == ["re", "use", "cache"]

    def test_punctuation_only_dropped(self):
        assert tokenize_nl("--- !!! ...") == []

    def test_underscore_is_punctuation(self):
        assert tokenize_nl("wrap to_csv call") == ["wrap", "to", "csv", "call"]

    @settings(max_examples=100, deadline=None)
    @given(st.text(max_size=80))
    def test_total_lowercase_no_whitespace(self, text):
        tokens = tokenize_nl(text)
        for token in tokens:
            assert token == token.lower()
            assert token
            assert not any(c.isspace() for c in token)

    @settings(max_examples=100, deadline=None)
    @given(st.text(max_size=80))
    def test_idempotent_over_space_join(self, text):
        tokens = tokenize_nl(text)
        assert tokenize_nl(" ".join(tokens)) == tokens
