"""
Stack-machine evaluator

Programs are evaluated block-wise: every opcode operates on a numpy vector
holding one block of output elements (constants stay scalars and broadcast).
Arithmetic is binary64 throughout; the result is cast to the output dtype by
cast_float64. Blocks are independent, so running them on a thread pool gives
the same buffer as running them in order.
"""
import logging
import threading
from concurrent.futures import ThreadPoolExecutor
from typing import List, Mapping, Optional, Sequence, Tuple

import numpy as np

from apps.container.services.dtypes import DType, element_count
from apps.core.conf import udfvault_setting
from apps.core.exceptions import BudgetExceeded, ShapeMismatch

from ..exceptions import EvaluationCancelled, InputDTypeUnsupported, MalformedBytecode
from .bytecode import Op, Program
from .functions import BINARY_OPERATORS, FUNCTIONS

logger = logging.getLogger(__name__)

InputMap = Mapping[str, Tuple[np.ndarray, DType]]

_BINARY_UFUNCS = {
    Op.ADD: BINARY_OPERATORS['+'],
    Op.SUB: BINARY_OPERATORS['-'],
    Op.MUL: BINARY_OPERATORS['*'],
    Op.DIV: BINARY_OPERATORS['/'],
}


def static_cost(program: Program, out_shape: Sequence[int]) -> int:
    """Instructions executed per element times the element count."""
    return program.instruction_count * element_count(out_shape)


def check_budget(program: Program, out_shape: Sequence[int], budget: Optional[int]) -> int:
    """
    Raises:
        BudgetExceeded: static cost is above budget
    """
    cost = static_cost(program, out_shape)
    if budget is not None and cost > budget:
        raise BudgetExceeded(
            f"static cost {cost} ({program.instruction_count} instructions x "
            f"{element_count(out_shape)} elements) exceeds the budget of {budget}",
            cost=cost,
            budget=budget,
        )
    return cost


def working_set_bytes(program: Program, block_size: int) -> int:
    """Peak VM memory besides inputs and output: one float64 vector per stack slot."""
    return program.max_stack_depth * block_size * 8


def cast_float64(values: np.ndarray, dtype: np.dtype) -> np.ndarray:
    """
    Cast binary64 values to an output dtype.

    Floats are narrowed by IEEE rounding. Integers take round-half-to-even,
    saturate at the dtype bounds (infinities included) and map NaN to 0.
    """
    dtype = np.dtype(dtype)
    values = np.asarray(values, dtype=np.float64)
    if dtype.kind == 'f':
        with np.errstate(all='ignore'):
            return values.astype(dtype)

    info = np.iinfo(dtype)
    rounded = np.rint(values)
    high = rounded >= float(info.max)
    low = rounded <= float(info.min)
    inside = ~(np.isnan(rounded) | high | low)

    result = np.zeros(values.shape, dtype=dtype)
    result[inside] = rounded[inside].astype(dtype)
    result[high] = info.max
    result[low] = info.min
    return result


def _check_scalar(dtype: DType, role: str) -> None:
    if not dtype.is_scalar:
        raise InputDTypeUnsupported(
            f"{role} has type {dtype.name}; expressions only handle numeric types"
        )


def _coordinates(start: int, stop: int, shape: Sequence[int], dim: int) -> np.ndarray:
    stride = element_count(shape[dim + 1:]) if dim + 1 < len(shape) else 1
    flat = np.arange(start, stop, dtype=np.int64)
    return ((flat // stride) % int(shape[dim])).astype(np.float64)


class BlockEvaluator:
    """Runs one program over index ranges of a fixed output shape."""

    def __init__(self, program: Program, buffers: List[np.ndarray], out_shape: Sequence[int]):
        self.program = program
        self.instructions = program.instructions
        self.buffers = buffers
        self.out_shape = tuple(int(extent) for extent in out_shape)

    def run(self, start: int, stop: int) -> np.ndarray:
        stack: list = []
        pool = self.program.const_pool
        for instruction in self.instructions:
            op = instruction.op
            if op is Op.CONST:
                stack.append(np.float64(pool[instruction.operand]))
            elif op is Op.LOAD:
                stack.append(self.buffers[instruction.operand][start:stop].astype(np.float64))
            elif op is Op.COORD:
                stack.append(_coordinates(start, stop, self.out_shape, instruction.operand))
            elif op is Op.INDEX:
                stack.append(np.arange(start, stop, dtype=np.int64).astype(np.float64))
            elif op in _BINARY_UFUNCS:
                right = stack.pop()
                left = stack.pop()
                stack.append(_BINARY_UFUNCS[op](left, right))
            elif op is Op.NEG:
                stack.append(np.negative(stack.pop()))
            elif op is Op.CALL:
                function = FUNCTIONS[instruction.operand]
                args = stack[len(stack) - function.arity:]
                del stack[len(stack) - function.arity:]
                stack.append(function.ufunc(*args))
            elif op is Op.HALT:
                break
        result = np.asarray(stack[-1], dtype=np.float64)
        return np.broadcast_to(result, (stop - start,))


def evaluate(
    program: Program,
    inputs: InputMap,
    out_shape: Sequence[int],
    out_dtype: DType,
    budget: Optional[int] = None,
    workers: Optional[int] = None,
    block_size: Optional[int] = None,
    cancel_event: Optional[threading.Event] = None,
) -> np.ndarray:
    """
    Evaluate a program elementwise.

    Args:
        program: Compiled program
        inputs: Ordered alias -> (flat buffer, dtype); input_table entries
            index this order
        out_shape: Output extents; every input holds the same element count
        out_dtype: Numeric output type
        budget: Instruction budget, checked before evaluation
        workers: Thread count (UDFVAULT WORKERS by default)
        block_size: Elements per block (UDFVAULT BLOCK_SIZE by default)
        cancel_event: Stops evaluation between blocks when set

    Returns:
        Flat output buffer of out_dtype

    Raises:
        BudgetExceeded, ShapeMismatch, InputDTypeUnsupported, MalformedBytecode
    """
    check_budget(program, out_shape, budget)
    _check_scalar(out_dtype, 'output')
    count = element_count(out_shape)

    entries = list(inputs.items())
    buffers = []
    for position in program.input_table:
        if position >= len(entries):
            raise MalformedBytecode(
                f"input table references input {position}, only {len(entries)} declared"
            )
        alias, (buffer, dtype) = entries[position]
        _check_scalar(dtype, f"input {alias!r}")
        buffer = np.asarray(buffer).reshape(-1)
        if buffer.size != count:
            raise ShapeMismatch(
                f"input {alias!r} has {buffer.size} elements, output has {count}",
                alias=alias,
                actual=int(buffer.size),
                expected=count,
            )
        buffers.append(buffer)

    for instruction in program.instructions:
        if instruction.op is Op.COORD and instruction.operand >= len(out_shape):
            raise ShapeMismatch(
                f"d{instruction.operand} used on a {len(out_shape)}-dimensional output"
            )

    workers = int(workers or udfvault_setting('WORKERS'))
    block_size = int(block_size or udfvault_setting('BLOCK_SIZE'))
    evaluator = BlockEvaluator(program, buffers, out_shape)
    output = np.empty(count, dtype=out_dtype.numpy_dtype)

    def run_block(bounds: Tuple[int, int]) -> None:
        if cancel_event is not None and cancel_event.is_set():
            raise EvaluationCancelled("evaluation cancelled")
        start, stop = bounds
        with np.errstate(all='ignore'):
            output[start:stop] = cast_float64(evaluator.run(start, stop), output.dtype)

    blocks = [(start, min(start + block_size, count)) for start in range(0, count, block_size)]
    if workers > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(run_block, blocks))
    else:
        for bounds in blocks:
            run_block(bounds)

    logger.debug(f"Evaluated {count} elements in {len(blocks)} block(s) on {workers} worker(s)")
    return output
