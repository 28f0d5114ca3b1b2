"""
Program representation and the UXB1 wire format

    magic     4 bytes  b"UXB1"
    version   u16      1
    npool     u16      constant pool length
    pool      f64 x npool
    ninputs   u16      input table length
    inputs    u16 x ninputs (indices into the UDF's input datasets)
    codelen   u32
    code      opcode stream

Opcodes with operands: CONST k (u16), LOAD j (u16), COORD d (u16), CALL f (u8).
All integers are little-endian.
"""
import struct
from dataclasses import dataclass, field
from enum import IntEnum
from typing import List, Optional, Tuple

from ..exceptions import BadMagic, MalformedBytecode, ProgramTooLarge, UnsupportedVersion
from .functions import FUNCTIONS

MAGIC = b'UXB1'
VERSION = 1
MAX_DIMS = 32
MAX_TABLE_ENTRIES = 0xFFFF
MAX_CODE_LENGTH = 0xFFFFFFFF


class Op(IntEnum):
    HALT = 0x00
    CONST = 0x01
    LOAD = 0x02
    COORD = 0x03
    INDEX = 0x04
    ADD = 0x10
    SUB = 0x11
    MUL = 0x12
    DIV = 0x13
    NEG = 0x14
    CALL = 0x20


OPERAND_FORMATS = {
    Op.CONST: struct.Struct('<H'),
    Op.LOAD: struct.Struct('<H'),
    Op.COORD: struct.Struct('<H'),
    Op.CALL: struct.Struct('<B'),
}

BINARY_OPCODES = {Op.ADD: '+', Op.SUB: '-', Op.MUL: '*', Op.DIV: '/'}

_HEADER = struct.Struct('<4sHH')
_U16 = struct.Struct('<H')
_U32 = struct.Struct('<I')


@dataclass(frozen=True)
class Instruction:
    op: Op
    operand: Optional[int] = None

    def encode(self) -> bytes:
        operand_format = OPERAND_FORMATS.get(self.op)
        if operand_format is None:
            return bytes([self.op])
        return bytes([self.op]) + operand_format.pack(self.operand)


def decode_instructions(code: bytes, pool_size: int, input_count: int) -> List[Instruction]:
    """
    Decode an opcode stream and range-check every operand.

    Raises:
        MalformedBytecode: unknown opcode, truncated operand, operand out of
            range, missing HALT or bytes after HALT
    """
    instructions: List[Instruction] = []
    position = 0
    while position < len(code):
        try:
            op = Op(code[position])
        except ValueError as exc:
            raise MalformedBytecode(
                f"unknown opcode 0x{code[position]:02x} at byte {position}"
            ) from exc
        position += 1

        operand = None
        operand_format = OPERAND_FORMATS.get(op)
        if operand_format is not None:
            if position + operand_format.size > len(code):
                raise MalformedBytecode(f"{op.name} operand truncated at byte {position}")
            (operand,) = operand_format.unpack_from(code, position)
            position += operand_format.size
            _check_operand(op, operand, pool_size, input_count)

        instructions.append(Instruction(op, operand))
        if op is Op.HALT:
            if position != len(code):
                raise MalformedBytecode(f"{len(code) - position} byte(s) after HALT")
            return instructions

    raise MalformedBytecode("opcode stream does not end with HALT")


def _check_operand(op: Op, operand: int, pool_size: int, input_count: int) -> None:
    if op is Op.CONST and operand >= pool_size:
        raise MalformedBytecode(f"CONST {operand} outside a pool of {pool_size}")
    if op is Op.LOAD and operand >= input_count:
        raise MalformedBytecode(f"LOAD {operand} outside an input table of {input_count}")
    if op is Op.COORD and operand >= MAX_DIMS:
        raise MalformedBytecode(f"COORD {operand} exceeds {MAX_DIMS} dimensions")
    if op is Op.CALL and operand >= len(FUNCTIONS):
        raise MalformedBytecode(f"CALL {operand} outside a table of {len(FUNCTIONS)} functions")


def stack_effect(instruction: Instruction) -> Tuple[int, int]:
    """(values popped, values pushed)"""
    op = instruction.op
    if op in (Op.CONST, Op.LOAD, Op.COORD, Op.INDEX):
        return 0, 1
    if op in BINARY_OPCODES:
        return 2, 1
    if op is Op.NEG:
        return 1, 1
    if op is Op.CALL:
        return FUNCTIONS[instruction.operand].arity, 1
    return 0, 0


def analyze_stack(instructions: List[Instruction]) -> int:
    """
    Maximum stack depth of a straight-line program.

    Raises:
        MalformedBytecode: an instruction underflows the stack or the stack
            is empty at HALT
    """
    depth = 0
    max_depth = 0
    for index, instruction in enumerate(instructions):
        if instruction.op is Op.HALT:
            if depth < 1:
                raise MalformedBytecode("stack is empty at HALT")
            return max_depth
        popped, pushed = stack_effect(instruction)
        if depth < popped:
            raise MalformedBytecode(
                f"instruction {index} ({instruction.op.name}) underflows the stack"
            )
        depth += pushed - popped
        max_depth = max(max_depth, depth)
    raise MalformedBytecode("opcode stream does not end with HALT")


@dataclass(frozen=True)
class Program:
    """Compiled expression. Immutable; safe to evaluate from several threads."""

    const_pool: Tuple[float, ...]
    input_table: Tuple[int, ...]
    code: bytes
    version: int = VERSION
    _cache: dict = field(default_factory=dict, init=False, repr=False, compare=False)

    @property
    def instructions(self) -> List[Instruction]:
        if 'instructions' not in self._cache:
            self._cache['instructions'] = decode_instructions(
                self.code, len(self.const_pool), len(self.input_table)
            )
        return self._cache['instructions']

    @property
    def max_stack_depth(self) -> int:
        if 'max_stack_depth' not in self._cache:
            self._cache['max_stack_depth'] = analyze_stack(self.instructions)
        return self._cache['max_stack_depth']

    @property
    def instruction_count(self) -> int:
        return len(self.instructions)

    def validate(self) -> 'Program':
        if self.version != VERSION:
            raise UnsupportedVersion(f"bytecode version {self.version} is not supported")
        for index in self.input_table:
            if index < 0 or index > 0xFFFF:
                raise MalformedBytecode(f"input table entry {index} out of range")
        analyze_stack(self.instructions)
        return self

    def serialize(self) -> bytes:
        return serialize(self)


def serialize(program: Program) -> bytes:
    """
    Raises:
        ProgramTooLarge: a count does not fit its u16 or u32 field
    """
    if len(program.const_pool) > MAX_TABLE_ENTRIES:
        raise ProgramTooLarge(
            f"constant pool has {len(program.const_pool)} entries, limit {MAX_TABLE_ENTRIES}"
        )
    if len(program.input_table) > MAX_TABLE_ENTRIES:
        raise ProgramTooLarge(
            f"input table has {len(program.input_table)} entries, limit {MAX_TABLE_ENTRIES}"
        )
    if len(program.code) > MAX_CODE_LENGTH:
        raise ProgramTooLarge(f"code is {len(program.code)} bytes, limit {MAX_CODE_LENGTH}")
    parts = [
        _HEADER.pack(MAGIC, program.version, len(program.const_pool)),
        struct.pack(f'<{len(program.const_pool)}d', *program.const_pool),
        _U16.pack(len(program.input_table)),
        struct.pack(f'<{len(program.input_table)}H', *program.input_table),
        _U32.pack(len(program.code)),
        program.code,
    ]
    return b''.join(parts)


def deserialize(data: bytes) -> Program:
    """
    Load a serialized program and validate it.

    Raises:
        BadMagic, UnsupportedVersion, MalformedBytecode
    """
    data = bytes(data)
    if len(data) < _HEADER.size:
        if not MAGIC.startswith(data[:4]):
            raise BadMagic(f"bad bytecode magic {data[:4]!r}")
        raise MalformedBytecode(f"bytecode header truncated ({len(data)} bytes)")
    magic, version, pool_size = _HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise BadMagic(f"bad bytecode magic {magic!r}")
    if version != VERSION:
        raise UnsupportedVersion(f"bytecode version {version} is not supported")

    position = _HEADER.size
    try:
        const_pool = struct.unpack_from(f'<{pool_size}d', data, position)
        position += 8 * pool_size
        (input_count,) = _U16.unpack_from(data, position)
        position += _U16.size
        input_table = struct.unpack_from(f'<{input_count}H', data, position)
        position += 2 * input_count
        (code_length,) = _U32.unpack_from(data, position)
        position += _U32.size
    except struct.error as exc:
        raise MalformedBytecode(f"bytecode truncated: {exc}") from exc

    code = data[position:position + code_length]
    if len(code) != code_length:
        raise MalformedBytecode(f"code truncated ({len(code)} of {code_length} bytes)")
    if position + code_length != len(data):
        raise MalformedBytecode(f"{len(data) - position - code_length} trailing byte(s)")

    return Program(tuple(const_pool), tuple(input_table), code, version).validate()


def disassemble(program: Program) -> List[Tuple[str, Optional[int]]]:
    return [(instruction.op.name, instruction.operand) for instruction in program.instructions]
