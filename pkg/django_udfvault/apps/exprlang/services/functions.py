"""
Built-in functions and operators

The table position of a function is its CALL operand in bytecode, so the
order below is part of the wire format. The VM and the tree-walk evaluator
both dispatch through these ufuncs.
"""
from dataclasses import dataclass
from typing import Callable, Dict, Optional, Tuple

import numpy as np


@dataclass(frozen=True)
class Function:
    name: str
    arity: int
    ufunc: Callable


FUNCTIONS: Tuple[Function, ...] = (
    Function('abs', 1, np.abs),
    Function('sqrt', 1, np.sqrt),
    Function('floor', 1, np.floor),
    Function('ceil', 1, np.ceil),
    Function('min', 2, np.minimum),
    Function('max', 2, np.maximum),
    Function('pow', 2, np.power),
)

FUNCTION_IDS: Dict[str, int] = {fn.name: index for index, fn in enumerate(FUNCTIONS)}

BINARY_OPERATORS: Dict[str, Callable] = {
    '+': np.add,
    '-': np.subtract,
    '*': np.multiply,
    '/': np.divide,
}


def lookup_function(name: str) -> Optional[Tuple[int, Function]]:
    index = FUNCTION_IDS.get(name)
    if index is None:
        return None
    return index, FUNCTIONS[index]
