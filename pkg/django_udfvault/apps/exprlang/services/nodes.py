"""
Expression AST
"""
from dataclasses import dataclass
from typing import Tuple, Union


@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class InputRef:
    alias: str


@dataclass(frozen=True)
class Coord:
    dim: int


@dataclass(frozen=True)
class FlatIndex:
    pass


@dataclass(frozen=True)
class Neg:
    child: 'Node'


@dataclass(frozen=True)
class BinOp:
    op: str
    left: 'Node'
    right: 'Node'


@dataclass(frozen=True)
class Call:
    name: str
    args: Tuple['Node', ...]


Node = Union[Const, InputRef, Coord, FlatIndex, Neg, BinOp, Call]


def unparse(node: Node) -> str:
    """Fully parenthesised source for a tree; parses back to an equal tree."""
    if isinstance(node, Const):
        return repr(float(node.value))
    if isinstance(node, InputRef):
        return node.alias
    if isinstance(node, Coord):
        return f'd{node.dim}'
    if isinstance(node, FlatIndex):
        return 'i'
    if isinstance(node, Neg):
        return f'(-{unparse(node.child)})'
    if isinstance(node, BinOp):
        return f'({unparse(node.left)} {node.op} {unparse(node.right)})'
    if isinstance(node, Call):
        return f"{node.name}({', '.join(unparse(arg) for arg in node.args)})"
    raise TypeError(f"Not an expression node: {node!r}")


def children(node: Node) -> Tuple[Node, ...]:
    if isinstance(node, Neg):
        return (node.child,)
    if isinstance(node, BinOp):
        return (node.left, node.right)
    if isinstance(node, Call):
        return node.args
    return ()


def tree_depth(node: Node) -> int:
    """Height of the tree, counted without recursion."""
    deepest = 0
    pending = [(node, 1)]
    while pending:
        current, depth = pending.pop()
        deepest = max(deepest, depth)
        pending.extend((child, depth + 1) for child in children(current))
    return deepest


def node_count(node: Node) -> int:
    if isinstance(node, Neg):
        return 1 + node_count(node.child)
    if isinstance(node, BinOp):
        return 1 + node_count(node.left) + node_count(node.right)
    if isinstance(node, Call):
        return 1 + sum(node_count(arg) for arg in node.args)
    return 1
