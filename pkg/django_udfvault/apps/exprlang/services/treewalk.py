"""
Direct AST evaluation

Reference evaluator for the bytecode VM: walks the tree over the whole index
range using the same ufuncs, so both produce identical binary64 results.
"""
from typing import Mapping, Optional, Sequence

import numpy as np

from apps.container.services.dtypes import DType, element_count

from ..exceptions import UnknownIdentifier
from .functions import BINARY_OPERATORS, FUNCTION_IDS, FUNCTIONS
from .nodes import BinOp, Call, Const, Coord, FlatIndex, InputRef, Neg, Node
from .vm import cast_float64


def _walk(node: Node, inputs: Mapping[str, np.ndarray], out_shape: Sequence[int]):
    if isinstance(node, Const):
        return np.float64(node.value)
    if isinstance(node, InputRef):
        if node.alias not in inputs:
            raise UnknownIdentifier(f"no input bound to {node.alias!r}", name=node.alias)
        return inputs[node.alias]
    if isinstance(node, FlatIndex):
        return np.arange(element_count(out_shape), dtype=np.int64).astype(np.float64)
    if isinstance(node, Coord):
        coords = np.indices(tuple(out_shape), dtype=np.int64)[node.dim]
        return coords.reshape(-1).astype(np.float64)
    if isinstance(node, Neg):
        return np.negative(_walk(node.child, inputs, out_shape))
    if isinstance(node, BinOp):
        left = _walk(node.left, inputs, out_shape)
        right = _walk(node.right, inputs, out_shape)
        return BINARY_OPERATORS[node.op](left, right)
    if isinstance(node, Call):
        function = FUNCTIONS[FUNCTION_IDS[node.name]]
        return function.ufunc(*(_walk(arg, inputs, out_shape) for arg in node.args))
    raise TypeError(f"Not an expression node: {node!r}")


def evaluate_tree(
    node: Node,
    inputs: Mapping[str, np.ndarray],
    out_shape: Sequence[int],
    out_dtype: Optional[DType] = None,
) -> np.ndarray:
    """
    Evaluate an AST elementwise.

    Args:
        node: Expression tree
        inputs: alias -> buffer with product(out_shape) elements
        out_shape: Output extents
        out_dtype: When given, the binary64 result is cast with the VM's rule

    Returns:
        Flat float64 buffer (or out_dtype buffer)
    """
    count = element_count(out_shape)
    flat_inputs = {
        alias: np.asarray(buffer).reshape(-1).astype(np.float64) for alias, buffer in inputs.items()
    }
    with np.errstate(all='ignore'):
        result = np.asarray(_walk(node, flat_inputs, out_shape), dtype=np.float64)
        result = np.array(np.broadcast_to(result, (count,)))
        if out_dtype is not None:
            return cast_float64(result, out_dtype.numpy_dtype)
    return result
