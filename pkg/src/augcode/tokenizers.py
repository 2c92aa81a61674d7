"""Deterministic tokenizers for code text and natural-language text.

Both tokenizers are total functions: any input string produces a token
list, never an error. Code tokenization is a lexical pass (identifiers,
numbers, string literals as single tokens, multi-character operators,
single punctuation); natural-language tokenization lowercases and keeps
alphanumeric runs only.
"""

from __future__ import annotations

import re

# Longest-match-first operator table; everything not matched here, in the
# identifier/number/string classes, or whitespace becomes a 1-char token.
_OPERATORS = (
    "**=", "//=", ">>=", "<<=", "...", "!=", ">=", "<=", "==",
    "->", ":=", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "@=",
    "**", "//", ">>", "<<",
)

_STRING_PREFIX = r"(?:[rRbBuUfF]{1,3})?"
_STRING_BODY = (
    r"'''(?:[^\\]|\\.)*?'''"
    r'|"""(?:[^\\]|\\.)*?"""'
    r"|'(?:[^'\\\n]|\\.)*'"
    r'|"(?:[^"\\\n]|\\.)*"'
)
_NUMBER = (
    r"0[xX][0-9a-fA-F_]+|0[bB][01_]+|0[oO][0-7_]+"
    r"|(?:\d[\d_]*\.?[\d_]*|\.\d[\d_]*)(?:[eE][+-]?\d+)?[jJ]?"
)
_IDENT = r"[A-Za-z_]\w*"

_CODE_TOKEN = re.compile(
    "|".join(
        [
            rf"(?P<string>{_STRING_PREFIX}(?:{_STRING_BODY}))",
            rf"(?P<ident>{_IDENT})",
            rf"(?P<number>{_NUMBER})",
            "(?P<op>" + "|".join(re.escape(op) for op in _OPERATORS) + ")",
        ]
    ),
    re.DOTALL,
)

_WS = re.compile(r"\s+")
_NL_WORD = re.compile(r"[^\W_]+", re.UNICODE)

_CAMEL_SPLIT = re.compile(r"[A-Z]+(?![a-z])|[A-Z][a-z0-9]*|[a-z0-9]+")


def split_identifier(name: str) -> list[str]:
    """Split snake_case / camelCase identifiers into subword pieces."""
    parts: list[str] = []
    for chunk in name.split("_"):
        parts.extend(_CAMEL_SPLIT.findall(chunk))
    return parts or [name]


def tokenize_code(text: str, split_identifiers: bool = False) -> list[str]:
    """Lexically tokenize code text.

    String literals come out as single tokens with their internal
    whitespace removed, so the no-whitespace token invariant holds even
    for multi-line literals. An unterminated quote degrades to a
    single-char token, keeping the function total.
    """
    tokens: list[str] = []
    pos = 0
    length = len(text)
    while pos < length:
        ws = _WS.match(text, pos)
        if ws:
            pos = ws.end()
            continue
        match = _CODE_TOKEN.match(text, pos)
        if match:
            value = match.group()
            if match.lastgroup == "string":
                value = _WS.sub("", value)
                tokens.append(value)
            elif match.lastgroup == "ident" and split_identifiers:
                tokens.extend(split_identifier(value))
            else:
                tokens.append(value)
            pos = match.end()
        else:
            tokens.append(text[pos])
            pos += 1
    return tokens


def tokenize_nl(text: str) -> list[str]:
    """Tokenize natural-language text: lowercase alphanumeric runs."""
    return _NL_WORD.findall(text.lower())
