"""
Recursive-descent parser

Grammar:

    expr    := term (('+' | '-') term)*
    term    := unary (('*' | '/') unary)*
    unary   := '-' unary | primary
    primary := NUMBER | IDENT | IDENT '(' [expr (',' expr)*] ')' | '(' expr ')'

Identifiers resolve to an input alias, the flat index `i`, a coordinate
`d0`..`d31`, or (when followed by '(') a built-in function.
"""
import logging
from contextlib import contextmanager
from typing import Dict, Iterator, List, Sequence

from ..exceptions import ArityError, ExprSyntaxError, InvalidAlias, UnknownIdentifier
from .bytecode import MAX_DIMS
from .functions import lookup_function
from .nodes import BinOp, Call, Const, Coord, FlatIndex, InputRef, Neg, Node, tree_depth
from .tokenizer import IDENT_PATTERN, Token, TokenKind, tokenize

logger = logging.getLogger(__name__)

FLAT_INDEX_NAME = 'i'
COORD_NAMES: Dict[str, int] = {f'd{dim}': dim for dim in range(MAX_DIMS)}
RESERVED_NAMES = frozenset(COORD_NAMES) | {FLAT_INDEX_NAME}
# Parentheses, call arguments and unary minus each open one nesting level.
MAX_NESTING = 100
MAX_TREE_DEPTH = 500


def validate_aliases(aliases: Sequence[str]) -> List[str]:
    """
    Raises:
        InvalidAlias: alias is not an identifier, is reserved or repeats
    """
    seen = set()
    for alias in aliases:
        if not isinstance(alias, str) or not IDENT_PATTERN.fullmatch(alias):
            raise InvalidAlias(f"alias {alias!r} is not an identifier", alias=alias)
        if alias in RESERVED_NAMES:
            raise InvalidAlias(f"alias {alias!r} is a reserved name", alias=alias)
        if alias in seen:
            raise InvalidAlias(f"alias {alias!r} is declared twice", alias=alias)
        seen.add(alias)
    return list(aliases)


def check_depth(node: Node) -> Node:
    """
    Raises:
        ExprSyntaxError: the tree is taller than MAX_TREE_DEPTH
    """
    depth = tree_depth(node)
    if depth > MAX_TREE_DEPTH:
        raise ExprSyntaxError(
            f"expression is {depth} levels deep, limit {MAX_TREE_DEPTH}", depth=depth
        )
    return node


class Parser:
    def __init__(self, source: str, aliases: Sequence[str]):
        self.source = source
        self.aliases = frozenset(validate_aliases(aliases))
        self.tokens = tokenize(source)
        self.position = 0
        self.nesting = 0

    @property
    def current(self) -> Token:
        return self.tokens[self.position]

    def advance(self) -> Token:
        token = self.tokens[self.position]
        if token.kind is not TokenKind.EOF:
            self.position += 1
        return token

    def expect(self, kind: TokenKind) -> Token:
        token = self.current
        if token.kind is not kind:
            raise ExprSyntaxError(
                f"expected {kind.value!r} but found {token.describe()}", token.offset
            )
        return self.advance()

    @contextmanager
    def nested(self, token: Token) -> Iterator[None]:
        self.nesting += 1
        try:
            if self.nesting > MAX_NESTING:
                raise ExprSyntaxError(
                    f"expression nests deeper than {MAX_NESTING} levels", token.offset
                )
            yield
        finally:
            self.nesting -= 1

    def parse(self) -> Node:
        node = self.expr()
        if self.current.kind is not TokenKind.EOF:
            raise ExprSyntaxError(
                f"unexpected {self.current.describe()} after expression", self.current.offset
            )
        return check_depth(node)

    def expr(self) -> Node:
        node = self.term()
        while self.current.kind in (TokenKind.PLUS, TokenKind.MINUS):
            op = self.advance().text
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> Node:
        node = self.unary()
        while self.current.kind in (TokenKind.STAR, TokenKind.SLASH):
            op = self.advance().text
            node = BinOp(op, node, self.unary())
        return node

    def unary(self) -> Node:
        if self.current.kind is TokenKind.MINUS:
            with self.nested(self.advance()):
                return Neg(self.unary())
        return self.primary()

    def primary(self) -> Node:
        token = self.current
        if token.kind is TokenKind.NUMBER:
            self.advance()
            return Const(float(token.text))
        if token.kind is TokenKind.LPAREN:
            with self.nested(self.advance()):
                node = self.expr()
            self.expect(TokenKind.RPAREN)
            return node
        if token.kind is TokenKind.IDENT:
            self.advance()
            if self.current.kind is TokenKind.LPAREN:
                return self.call(token)
            return self.name(token)
        raise ExprSyntaxError(f"expected an operand but found {token.describe()}", token.offset)

    def call(self, name_token: Token) -> Node:
        found = lookup_function(name_token.text)
        if found is None:
            raise UnknownIdentifier(
                f"unknown function {name_token.text!r}", name_token.offset, name=name_token.text
            )
        _, function = found
        args: List[Node] = []
        with self.nested(self.expect(TokenKind.LPAREN)):
            if self.current.kind is not TokenKind.RPAREN:
                args.append(self.expr())
                while self.current.kind is TokenKind.COMMA:
                    self.advance()
                    args.append(self.expr())
        self.expect(TokenKind.RPAREN)
        if len(args) != function.arity:
            raise ArityError(
                f"{function.name} takes {function.arity} argument(s), got {len(args)}",
                name_token.offset,
                name=function.name,
            )
        return Call(function.name, tuple(args))

    def name(self, token: Token) -> Node:
        if token.text == FLAT_INDEX_NAME:
            return FlatIndex()
        if token.text in COORD_NAMES:
            return Coord(COORD_NAMES[token.text])
        if token.text in self.aliases:
            return InputRef(token.text)
        raise UnknownIdentifier(f"unknown identifier {token.text!r}", token.offset, name=token.text)


def parse(source: str, aliases: Sequence[str] = ()) -> Node:
    """
    Parse expression source into an AST.

    Args:
        source: Expression text
        aliases: Input aliases the expression may reference

    Raises:
        ExprSyntaxError, UnknownIdentifier, ArityError, InvalidAlias
    """
    return Parser(source, aliases).parse()
