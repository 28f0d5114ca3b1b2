"""
AST to bytecode compiler

Code is emitted in post-order. The constant pool is deduplicated by bit
pattern; the input table lists referenced aliases (as indices into the
declared alias list) in order of first reference, and LOAD operands index
that table.
"""
import logging
import struct
from typing import Dict, List, Sequence

from ..exceptions import ProgramTooLarge
from .bytecode import BINARY_OPCODES, MAX_TABLE_ENTRIES, Instruction, Op, Program
from .functions import FUNCTION_IDS
from .nodes import BinOp, Call, Const, Coord, FlatIndex, InputRef, Neg, Node
from .parser import check_depth, parse, validate_aliases

logger = logging.getLogger(__name__)

_OPCODE_FOR_OPERATOR = {symbol: op for op, symbol in BINARY_OPCODES.items()}


class _Emitter:
    def __init__(self, aliases: Sequence[str]):
        self.alias_positions = {alias: index for index, alias in enumerate(aliases)}
        self.const_pool: List[float] = []
        self.const_slots: Dict[bytes, int] = {}
        self.input_table: List[int] = []
        self.input_slots: Dict[str, int] = {}
        self.instructions: List[Instruction] = []

    def const_slot(self, value: float) -> int:
        key = struct.pack('<d', value)
        if key not in self.const_slots:
            if len(self.const_pool) == MAX_TABLE_ENTRIES:
                raise ProgramTooLarge(f"more than {MAX_TABLE_ENTRIES} distinct constants")
            self.const_slots[key] = len(self.const_pool)
            self.const_pool.append(float(value))
        return self.const_slots[key]

    def input_slot(self, alias: str) -> int:
        if alias not in self.input_slots:
            self.input_slots[alias] = len(self.input_table)
            self.input_table.append(self.alias_positions[alias])
        return self.input_slots[alias]

    def emit(self, node: Node) -> None:
        if isinstance(node, Const):
            self.instructions.append(Instruction(Op.CONST, self.const_slot(node.value)))
        elif isinstance(node, InputRef):
            self.instructions.append(Instruction(Op.LOAD, self.input_slot(node.alias)))
        elif isinstance(node, Coord):
            self.instructions.append(Instruction(Op.COORD, node.dim))
        elif isinstance(node, FlatIndex):
            self.instructions.append(Instruction(Op.INDEX))
        elif isinstance(node, Neg):
            self.emit(node.child)
            self.instructions.append(Instruction(Op.NEG))
        elif isinstance(node, BinOp):
            self.emit(node.left)
            self.emit(node.right)
            self.instructions.append(Instruction(_OPCODE_FOR_OPERATOR[node.op]))
        elif isinstance(node, Call):
            for arg in node.args:
                self.emit(arg)
            self.instructions.append(Instruction(Op.CALL, FUNCTION_IDS[node.name]))
        else:
            raise TypeError(f"Not an expression node: {node!r}")

    def program(self) -> Program:
        code = b''.join(instruction.encode() for instruction in self.instructions)
        code += Instruction(Op.HALT).encode()
        return Program(tuple(self.const_pool), tuple(self.input_table), code).validate()


def compile_ast(node: Node, aliases: Sequence[str]) -> Program:
    check_depth(node)
    emitter = _Emitter(validate_aliases(aliases))
    emitter.emit(node)
    return emitter.program()


def compile(source: str, aliases: Sequence[str] = ()) -> Program:
    """
    Compile expression source.

    Args:
        source: Expression text
        aliases: Ordered input aliases; input_table entries index this list

    Returns:
        Validated Program

    Raises:
        ExprSyntaxError, UnknownIdentifier, ArityError, InvalidAlias, ProgramTooLarge
    """
    program = compile_ast(parse(source, aliases), aliases)
    logger.debug(
        f"Compiled {source!r}: {program.instruction_count} instructions, "
        f"{len(program.const_pool)} constants, inputs {list(program.input_table)}"
    )
    return program
