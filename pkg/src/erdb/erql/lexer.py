"""Tokenizer shared by the three grammars."""

from __future__ import annotations

from dataclasses import dataclass

from ..errors import ParseError

# Words that can never be used as identifiers. Type names, cardinality and
# participation words, and aggregate names are contextual.
RESERVED = frozenset(
    """create entity relationship select from join on where and or not in as key extends
    weak of via between insert update delete purge set true false unnest alter comment""".split()
)

DIGITS = "0123456789"
PUNCT = ("!=", "<=", ">=", "+=", "-=", "(", ")", "[", "]", "{", "}", ",", ".", ":", "=", "<", ">", ";")


@dataclass(frozen=True)
class Token:
    kind: str  # name | int | float | string | punct | eof
    value: object
    line: int
    column: int
    text: str = ""

    def is_word(self, word: str) -> bool:
        return self.kind == "name" and str(self.value).lower() == word

    def describe(self) -> str:
        if self.kind == "eof":
            return "end of input"
        return repr(self.text or str(self.value))


def tokenize(src: str) -> list[Token]:
    toks: list[Token] = []
    i, n = 0, len(src)
    line, col0 = 1, 0

    def err(msg: str, at: int) -> ParseError:
        return ParseError(msg, line, at - col0 + 1)

    while i < n:
        c = src[i]
        if c == "\n":
            line += 1
            i += 1
            col0 = i
            continue
        if c in " \t\r":
            i += 1
            continue
        if c == "-" and src.startswith("--", i):
            while i < n and src[i] != "\n":
                i += 1
            continue
        start = i
        col = i - col0 + 1
        if c.isascii() and (c.isalpha() or c == "_"):
            while i < n and src[i].isascii() and (src[i].isalnum() or src[i] == "_"):
                i += 1
            word = src[start:i]
            toks.append(Token("name", word, line, col, word))
            continue
        if c in DIGITS or (c == "-" and i + 1 < n and src[i + 1] in DIGITS):
            i += 1
            while i < n and src[i] in DIGITS:
                i += 1
            is_float = False
            if i + 1 < n and src[i] == "." and src[i + 1] in DIGITS:
                is_float = True
                i += 1
                while i < n and src[i] in DIGITS:
                    i += 1
            if i < n and src[i] in "eE":
                j = i + 1
                if j < n and src[j] in "+-":
                    j += 1
                if j < n and src[j] in DIGITS:
                    is_float = True
                    i = j
                    while i < n and src[i] in DIGITS:
                        i += 1
            text = src[start:i]
            if i < n and (src[i].isalpha() or src[i] == "_"):
                raise err(f"malformed number {text + src[i]!r}", start)
            toks.append(Token("float" if is_float else "int", float(text) if is_float else int(text), line, col, text))
            continue
        if c == '"':
            i += 1
            buf: list[str] = []
            while True:
                if i >= n:
                    raise err("unterminated string", start)
                ch = src[i]
                if ch == '"':
                    i += 1
                    break
                if ch == "\n":
                    raise err("unterminated string", start)
                if ch == "\\":
                    if i + 1 >= n:
                        raise err("unterminated string", start)
                    e = src[i + 1]
                    simple = {'"': '"', "\\": "\\", "n": "\n", "t": "\t", "r": "\r"}
                    if e in simple:
                        buf.append(simple[e])
                        i += 2
                        continue
                    if e == "u":
                        hexd = src[i + 2 : i + 6]
                        if len(hexd) == 4 and all(h in "0123456789abcdefABCDEF" for h in hexd):
                            buf.append(chr(int(hexd, 16)))
                            i += 6
                            continue
                    raise err(f"bad escape \\{e}", i)
                buf.append(ch)
                i += 1
            toks.append(Token("string", "".join(buf), line, col, src[start:i]))
            continue
        for p in PUNCT:
            if src.startswith(p, i):
                toks.append(Token("punct", p, line, col, p))
                i += len(p)
                break
        else:
            raise err(f"unexpected character {c!r}", i)
    toks.append(Token("eof", None, line, i - col0 + 1))
    return toks


def quote_string(s: str) -> str:
    out = ['"']
    for ch in s:
        if ch == '"':
            out.append('\\"')
        elif ch == "\\":
            out.append("\\\\")
        elif ch == "\n":
            out.append("\\n")
        elif ch == "\t":
            out.append("\\t")
        elif ch == "\r":
            out.append("\\r")
        elif ord(ch) < 0x20 or 0xD800 <= ord(ch) <= 0xDFFF:
            out.append(f"\\u{ord(ch):04x}")
        else:
            out.append(ch)
    out.append('"')
    return "".join(out)


def is_identifier(s: str) -> bool:
    return (
        bool(s)
        and s.isascii()
        and (s[0].isalpha() or s[0] == "_")
        and all(ch.isalnum() or ch == "_" for ch in s)
        and s.lower() not in RESERVED
    )
