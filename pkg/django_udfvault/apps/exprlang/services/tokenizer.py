"""
Tokenizer for the expression language
"""
import math
import re
from dataclasses import dataclass
from enum import Enum
from typing import List

from ..exceptions import ExprSyntaxError


class TokenKind(Enum):
    NUMBER = 'number'
    IDENT = 'identifier'
    PLUS = '+'
    MINUS = '-'
    STAR = '*'
    SLASH = '/'
    LPAREN = '('
    RPAREN = ')'
    COMMA = ','
    EOF = 'end of input'


@dataclass(frozen=True)
class Token:
    kind: TokenKind
    text: str
    offset: int

    def describe(self) -> str:
        if self.kind in (TokenKind.NUMBER, TokenKind.IDENT):
            return f"{self.kind.value} {self.text!r}"
        if self.kind is TokenKind.EOF:
            return self.kind.value
        return repr(self.text)


NUMBER_PATTERN = re.compile(r'(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?')
IDENT_PATTERN = re.compile(r'[A-Za-z_][A-Za-z0-9_]*')

_PUNCTUATION = {
    '+': TokenKind.PLUS,
    '-': TokenKind.MINUS,
    '*': TokenKind.STAR,
    '/': TokenKind.SLASH,
    '(': TokenKind.LPAREN,
    ')': TokenKind.RPAREN,
    ',': TokenKind.COMMA,
}


def tokenize(source: str) -> List[Token]:
    """
    Split source into tokens. The list always ends with an EOF token whose
    offset is len(source).

    Raises:
        ExprSyntaxError: unexpected character, or a literal that is not a
            finite binary64 value
    """
    tokens: List[Token] = []
    position = 0
    length = len(source)
    while position < length:
        char = source[position]
        if char.isspace():
            position += 1
            continue
        if char in _PUNCTUATION:
            tokens.append(Token(_PUNCTUATION[char], char, position))
            position += 1
            continue

        match = NUMBER_PATTERN.match(source, position)
        if match:
            text = match.group()
            if not math.isfinite(float(text)):
                raise ExprSyntaxError(f"numeric literal {text!r} overflows binary64", position)
            tokens.append(Token(TokenKind.NUMBER, text, position))
            position = match.end()
            continue

        match = IDENT_PATTERN.match(source, position)
        if match:
            tokens.append(Token(TokenKind.IDENT, match.group(), position))
            position = match.end()
            continue

        raise ExprSyntaxError(f"unexpected character {char!r}", position)

    tokens.append(Token(TokenKind.EOF, '', length))
    return tokens
