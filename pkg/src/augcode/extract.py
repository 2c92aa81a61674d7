"""Lexical decomposition of Python source into functions and their
natural-language assets.

The scan is tokenizer-level, not AST-level: it survives code that
parses badly as long as it lexes, which matters for mined corpora.
Docstrings are recognized by the "first statement of the definition is
a string literal" rule; comments are ``#`` tokens outside string
literals.
"""

from __future__ import annotations

import ast
import io
import logging
import re
import tokenize
from dataclasses import dataclass
from pathlib import Path

logger = logging.getLogger(__name__)

_CODING_RE = re.compile(r"^[ \t\f]*#.*?coding[:=][ \t]*[-\w.]+")


class ExtractionError(Exception):
    """Lexical failure (unterminated string, bad indentation, bad bytes)."""

    def __init__(self, message: str, line: int | None = None, path: str = "<string>"):
        self.line = line
        self.path = path
        where = f"{path}:{line}" if line is not None else path
        super().__init__(f"{where}: {message}")


@dataclass
class ExtractorConfig:
    split_identifiers: bool = False
    max_function_lines: int = 2000


@dataclass
class DecomposedFunction:
    """Extraction result for one function definition.

    ``source`` is the verbatim span text and ``code_without_docstring``
    keeps comments; both exist so corpus records can be built without a
    second scan.
    """

    func_name: str
    stripped_code: str
    docstring_full: str
    docstring_short: str
    comments: list[str]
    span: tuple[int, int]
    source: str = ""
    code_without_docstring: str = ""


def _tokenize_text(source: str, path: str) -> list[tokenize.TokenInfo]:
    try:
        return list(tokenize.generate_tokens(io.StringIO(source).readline))
    except tokenize.TokenError as exc:
        pos = exc.args[1] if len(exc.args) > 1 else (None,)
        line = pos[0] if isinstance(pos, tuple) else None
        raise ExtractionError(str(exc.args[0]), line=line, path=path) from exc
    except IndentationError as exc:
        raise ExtractionError(exc.msg, line=exc.lineno, path=path) from exc


def split_docstring(docstring_full: str) -> tuple[str, str]:
    """Split a docstring into (summary paragraph, remainder).

    The summary is everything before the first blank line, trimmed. The
    remainder keeps its own internal structure but loses surrounding
    blank lines.
    """
    text = docstring_full.strip()
    if not text:
        return ("", "")
    lines = text.splitlines()
    for idx, line in enumerate(lines):
        if not line.strip():
            short = "\n".join(lines[:idx]).strip()
            rest = "\n".join(lines[idx + 1 :]).strip()
            return (short, rest)
    return (text, "")


def join_docstring(short: str, rest: str) -> str:
    """Inverse of :func:`split_docstring` over normalized text."""
    return f"{short}\n\n{rest}" if rest else short


def _is_shebang_or_coding(tok: tokenize.TokenInfo) -> bool:
    row, col = tok.start
    if row == 1 and col == 0 and tok.string.startswith("#!"):
        return True
    if row <= 2 and col == 0 and _CODING_RE.match(tok.string):
        return True
    return False


def _comment_body(raw: str) -> str:
    return raw.lstrip("#").strip()


def extract_comments(source_span: str, path: str = "<string>") -> list[str]:
    """All ``#`` comments outside string literals, markers stripped.

    Shebang lines and PEP 263 coding declarations are not comments for
    our purposes and are excluded.
    """
    out = []
    for tok in _tokenize_text(source_span, path):
        if tok.type == tokenize.COMMENT and not _is_shebang_or_coding(tok):
            out.append(_comment_body(tok.string))
    return out


def strip_comments(source_span: str, path: str = "<string>") -> str:
    """Remove comments, keeping the non-comment token stream and line count.

    Comment text is deleted in place and trailing whitespace trimmed;
    line endings are normalized to LF.
    """
    lines = source_span.splitlines()
    touched = set()
    for tok in _tokenize_text(source_span, path):
        if tok.type != tokenize.COMMENT:
            continue
        row, col = tok.start
        end_col = tok.end[1]
        line = lines[row - 1]
        lines[row - 1] = line[:col] + line[end_col:]
        touched.add(row - 1)
    for idx in touched:
        lines[idx] = lines[idx].rstrip()
    result = "\n".join(lines)
    if source_span.endswith(("\n", "\r\n", "\r")):
        result += "\n"
    return result


@dataclass
class _Scope:
    kind: str  # "def" or "class"
    name: str
    row: int
    col: int
    state: str = "header"  # header -> await_indent -> block
    body_depth: int = 0
    end_row: int = 0
    eligible: bool = False
    qualname: str = ""
    header_colon: bool = False
    inline_body: bool = False


def _scan_definitions(tokens: list[tokenize.TokenInfo]) -> list[_Scope]:
    """Find def/class block extents from INDENT/DEDENT structure."""
    finished: list[_Scope] = []
    scopes: list[_Scope] = []
    depth = 0
    paren = 0

    def close(scope: _Scope) -> None:
        if scopes:
            parent = scopes[-1]
            parent.end_row = max(parent.end_row, scope.end_row)
        if scope.kind == "def" and scope.name:
            finished.append(scope)

    i = 0
    n = len(tokens)
    while i < n:
        tok = tokens[i]
        ttype = tok.type

        if ttype == tokenize.INDENT:
            depth += 1
            if scopes and scopes[-1].state == "await_indent":
                scopes[-1].state = "block"
                scopes[-1].body_depth = depth
            i += 1
            continue
        if ttype == tokenize.DEDENT:
            depth -= 1
            while scopes and scopes[-1].state == "block" and scopes[-1].body_depth > depth:
                close(scopes.pop())
            i += 1
            continue
        if ttype == tokenize.ENDMARKER:
            while scopes:
                close(scopes.pop())
            break
        if ttype == tokenize.COMMENT:
            col = tok.start[1]
            for scope in scopes:
                if scope.col < col:
                    scope.end_row = max(scope.end_row, tok.end[0])
            i += 1
            continue
        if ttype in (tokenize.NL, tokenize.NEWLINE):
            if ttype == tokenize.NEWLINE and scopes:
                top = scopes[-1]
                if top.state == "header":
                    top.end_row = max(top.end_row, tok.start[0])
                    if top.inline_body:
                        close(scopes.pop())
                    else:
                        top.state = "await_indent"
            i += 1
            continue

        # Significant token.
        if scopes and scopes[-1].state == "await_indent":
            close(scopes.pop())  # definition without an indented body

        for scope in scopes:
            scope.end_row = max(scope.end_row, tok.end[0])

        if tok.string in "([{" and ttype == tokenize.OP:
            paren += 1
        elif tok.string in ")]}" and ttype == tokenize.OP:
            paren = max(0, paren - 1)
        elif ttype == tokenize.OP and tok.string == ":" and paren == 0:
            if scopes and scopes[-1].state == "header":
                scopes[-1].header_colon = True
            i += 1
            continue

        if scopes and scopes[-1].state == "header" and scopes[-1].header_colon:
            scopes[-1].inline_body = True

        if ttype == tokenize.NAME and tok.string in ("def", "class"):
            opens_header = not (scopes and scopes[-1].state == "header")
            if opens_header:
                start = tok.start
                if (
                    tok.string == "def"
                    and i > 0
                    and tokens[i - 1].type == tokenize.NAME
                    and tokens[i - 1].string == "async"
                ):
                    start = tokens[i - 1].start
                name = ""
                if i + 1 < n and tokens[i + 1].type == tokenize.NAME:
                    name = tokens[i + 1].string
                in_def = any(s.kind == "def" for s in scopes)
                class_path = [s.name for s in scopes if s.kind == "class"]
                scope = _Scope(
                    kind=tok.string,
                    name=name,
                    row=start[0],
                    col=start[1],
                    end_row=tok.end[0],
                    eligible=(tok.string == "def" and not in_def),
                    qualname=".".join(class_path + [name]) if name else "",
                )
                scopes.append(scope)
        i += 1

    finished.sort(key=lambda s: (s.row, s.col))
    return finished


_STRING_PREFIX_RE = re.compile(r"^[rRbBuUfF]{0,3}")


def _find_docstring_tokens(
    func_tokens: list[tokenize.TokenInfo],
) -> tuple[list[tokenize.TokenInfo], tokenize.TokenInfo | None]:
    """String-literal tokens forming the definition's docstring statement.

    Returns the run of string tokens plus the trailing semicolon token
    when the docstring statement is chained (``def f(): "doc"; ...``).
    """
    n = len(func_tokens)
    # The header ends at the first ':' outside brackets.
    idx = 0
    paren = 0
    while idx < n:
        tok = func_tokens[idx]
        if tok.type == tokenize.OP:
            if tok.string in "([{":
                paren += 1
            elif tok.string in ")]}":
                paren -= 1
            elif tok.string == ":" and paren == 0:
                idx += 1
                break
        idx += 1
    skippable = (tokenize.NL, tokenize.NEWLINE, tokenize.COMMENT, tokenize.INDENT)
    while idx < n and func_tokens[idx].type in skippable:
        idx += 1
    run: list[tokenize.TokenInfo] = []
    while idx < n and func_tokens[idx].type == tokenize.STRING:
        prefix = _STRING_PREFIX_RE.match(func_tokens[idx].string).group().lower()
        if "b" in prefix or "f" in prefix:
            return ([], None)
        run.append(func_tokens[idx])
        idx += 1
        while idx < n and func_tokens[idx].type in (tokenize.NL, tokenize.COMMENT):
            idx += 1
    if not run:
        return ([], None)
    if idx >= n or func_tokens[idx].type == tokenize.NEWLINE:
        return (run, None)
    if func_tokens[idx].type == tokenize.OP and func_tokens[idx].string == ";":
        return (run, func_tokens[idx])
    return ([], None)


def _literal_text(tok: tokenize.TokenInfo) -> str:
    try:
        value = ast.literal_eval(tok.string)
    except (ValueError, SyntaxError):
        return _STRING_PREFIX_RE.sub("", tok.string, count=1).strip("\"'")
    return value if isinstance(value, str) else str(value)


def _erase_span(
    lines: list[str],
    start: tuple[int, int],
    end: tuple[int, int],
    base_row: int,
) -> list[int]:
    """Blank the character range (absolute rows) inside ``lines``; return touched indexes."""
    srow, scol = start
    erow, ecol = end
    touched = []
    for row in range(srow, erow + 1):
        idx = row - base_row
        if idx < 0 or idx >= len(lines):
            continue
        line = lines[idx]
        lo = scol if row == srow else 0
        hi = ecol if row == erow else len(line)
        lines[idx] = line[:lo] + line[hi:]
        touched.append(idx)
    return touched


def extract_functions(
    source: str,
    path: str = "<string>",
    config: ExtractorConfig | None = None,
) -> list[DecomposedFunction]:
    """Decompose every top-level and method-level ``def`` in ``source``.

    Functions nested inside other functions stay part of their
    enclosing definition. Oversized definitions (see
    ``ExtractorConfig.max_function_lines``) are skipped with a warning.
    """
    cfg = config or ExtractorConfig()
    tokens = _tokenize_text(source, path)
    raw_lines = source.splitlines(keepends=True)
    out: list[DecomposedFunction] = []

    for scope in _scan_definitions(tokens):
        if not scope.eligible:
            continue
        start_row, end_row = scope.row, max(scope.end_row, scope.row)
        n_lines = end_row - start_row + 1
        if n_lines > cfg.max_function_lines:
            logger.warning(
                "%s:%d: skipping %s (%d lines > max %d)",
                path, start_row, scope.qualname, n_lines, cfg.max_function_lines,
            )
            continue
        func_source = "".join(raw_lines[start_row - 1 : end_row])
        func_tokens = [
            t for t in tokens
            if start_row <= t.start[0] <= end_row
            and t.type not in (tokenize.INDENT, tokenize.DEDENT, tokenize.ENDMARKER)
        ]

        doc_tokens, doc_semicolon = _find_docstring_tokens(func_tokens)
        docstring_full = "".join(_literal_text(t) for t in doc_tokens)
        docstring_short, _ = split_docstring(docstring_full)

        comment_tokens = [
            t for t in func_tokens
            if t.type == tokenize.COMMENT and not _is_shebang_or_coding(t)
        ]
        comments = [_comment_body(t.string) for t in comment_tokens]

        # Line surgery for the two stripped variants.
        span_lines = [line.rstrip("\r\n") for line in raw_lines[start_row - 1 : end_row]]

        def surgery(remove_docstring: bool, remove_comments: bool) -> str:
            lines = list(span_lines)
            doc_touched: set[int] = set()
            if remove_docstring:
                erase = list(doc_tokens)
                if doc_semicolon is not None:
                    erase.append(doc_semicolon)
                for tok in erase:
                    doc_touched.update(_erase_span(lines, tok.start, tok.end, start_row))
            if remove_comments:
                for tok in comment_tokens:
                    for idx in _erase_span(lines, tok.start, tok.end, start_row):
                        lines[idx] = lines[idx].rstrip()
            for idx in doc_touched:
                lines[idx] = lines[idx].rstrip()
            kept = [
                line for idx, line in enumerate(lines)
                if not (idx in doc_touched and not line.strip())
            ]
            text = "\n".join(kept)
            return text + "\n" if func_source.endswith(("\n", "\r\n")) else text

        out.append(
            DecomposedFunction(
                func_name=scope.qualname,
                stripped_code=surgery(remove_docstring=True, remove_comments=True),
                docstring_full=docstring_full,
                docstring_short=docstring_short,
                comments=comments,
                span=(start_row, end_row),
                source=func_source,
                code_without_docstring=surgery(remove_docstring=True, remove_comments=False),
            )
        )
    return out


def iter_python_files(root: str | Path) -> list[Path]:
    """Sorted .py files under a directory tree."""
    return sorted(p for p in Path(root).rglob("*.py") if p.is_file())
