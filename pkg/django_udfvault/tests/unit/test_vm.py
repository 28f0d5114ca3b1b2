"""
Unit tests for the bytecode VM and its agreement with the tree-walk evaluator
"""
import random
import threading

import numpy as np
import pytest

from apps.container.services.dtypes import DType, element_count
from apps.core.exceptions import BudgetExceeded, ShapeMismatch
from apps.exprlang.exceptions import EvaluationCancelled, InputDTypeUnsupported
from apps.exprlang.services.compiler import compile, compile_ast
from apps.exprlang.services.treewalk import evaluate_tree
from apps.exprlang.services.vm import cast_float64, check_budget, evaluate, static_cost

FLOAT64 = DType.scalar('float64')
INT32 = DType.scalar('int32')
NDVI = '(nir - red) / (nir + red)'


def _ndvi_inputs(nir, red):
    return {
        'nir': (np.array(nir, dtype=np.float64), FLOAT64),
        'red': (np.array(red, dtype=np.float64), FLOAT64),
    }


def _random_shape(rng: random.Random):
    ndim = rng.randint(1, 3)
    while True:
        shape = tuple(rng.randint(1, 8) for _ in range(ndim))
        if element_count(shape) <= 256:
            return shape


def _same_bits(left: np.ndarray, right: np.ndarray) -> bool:
    nan_left, nan_right = np.isnan(left), np.isnan(right)
    if not np.array_equal(nan_left, nan_right):
        return False
    keep = ~nan_left
    return np.array_equal(left[keep].view(np.uint64), right[keep].view(np.uint64))


@pytest.mark.unit
class TestEvaluate:
    """Elementwise evaluation"""

    def test_ndvi_single_element(self):
        """(6 - 2) / (6 + 2) == 0.5"""
        program = compile(NDVI, ['nir', 'red'])
        result = evaluate(program, _ndvi_inputs([6], [2]), (1,), FLOAT64)
        assert result.tolist() == [0.5]

    def test_ndvi_division_by_zero(self):
        """nir=1, red=-1 divides by zero and gives +inf"""
        program = compile(NDVI, ['nir', 'red'])
        result = evaluate(program, _ndvi_inputs([1], [-1]), (1,), FLOAT64)
        assert np.isposinf(result[0])

    def test_coordinates_row_major(self):
        """d0*10 + d1 over 2x3 enumerates coordinates in row-major order"""
        program = compile('d0*10 + d1')
        result = evaluate(program, {}, (2, 3), INT32)
        assert result.dtype == np.int32
        assert result.tolist() == [0, 1, 2, 10, 11, 12]

    def test_flat_index(self):
        """i is the flat element index"""
        result = evaluate(compile('i * 2'), {}, (2, 2), FLOAT64)
        assert result.tolist() == [0.0, 2.0, 4.0, 6.0]

    def test_constant_broadcasts(self):
        """A constant program fills every element"""
        assert evaluate(compile('0'), {}, (3,), FLOAT64).tolist() == [0.0, 0.0, 0.0]

    def test_integer_inputs_promoted(self):
        """Integer inputs are read as binary64"""
        inputs = {
            'nir': (np.array([6, 3], dtype=np.int16), DType.scalar('int16')),
            'red': (np.array([2, 1], dtype=np.int16), DType.scalar('int16')),
        }
        result = evaluate(compile(NDVI, ['nir', 'red']), inputs, (2,), FLOAT64)
        assert result.tolist() == [0.5, 0.5]

    def test_blocks_and_workers_agree(self):
        """Small blocks on a thread pool give the same buffer as one block"""
        rng = np.random.default_rng(3)
        inputs = _ndvi_inputs(rng.random(1000) + 1, rng.random(1000))
        program = compile('sqrt(nir) * d0 - red / (i + 1)', ['nir', 'red'])
        single = evaluate(program, inputs, (1000,), FLOAT64, workers=1, block_size=4096)
        parallel = evaluate(program, inputs, (1000,), FLOAT64, workers=4, block_size=7)
        assert _same_bits(single, parallel)

    def test_input_size_mismatch(self):
        """Inputs must hold as many elements as the output"""
        with pytest.raises(ShapeMismatch):
            evaluate(compile(NDVI, ['nir', 'red']), _ndvi_inputs([1, 2], [1]), (2,), FLOAT64)

    def test_coordinate_beyond_rank(self):
        """d2 on a 2-d output is a shape error"""
        with pytest.raises(ShapeMismatch):
            evaluate(compile('d2'), {}, (2, 2), FLOAT64)

    def test_string_input_unsupported(self):
        """String inputs cannot feed an expression"""
        inputs = {'s': (np.array([b'ab'], dtype='S2'), DType.fixed_string(2))}
        with pytest.raises(InputDTypeUnsupported):
            evaluate(compile('s + 1', ['s']), inputs, (1,), FLOAT64)

    def test_string_output_unsupported(self):
        """Expressions cannot produce strings"""
        with pytest.raises(InputDTypeUnsupported):
            evaluate(compile('1'), {}, (1,), DType.var_string())

    def test_cancelled(self):
        """A set cancel event stops evaluation"""
        event = threading.Event()
        event.set()
        with pytest.raises(EvaluationCancelled):
            evaluate(compile('1'), {}, (4,), FLOAT64, cancel_event=event)


@pytest.mark.unit
class TestBudget:
    """Static instruction budget"""

    def test_cost_is_instructions_times_elements(self):
        """NDVI has 8 instructions"""
        program = compile(NDVI, ['nir', 'red'])
        assert static_cost(program, (10, 10)) == 800

    def test_budget_boundary(self):
        """A budget equal to the cost passes and one less fails"""
        program = compile(NDVI, ['nir', 'red'])
        assert check_budget(program, (10, 10), 800) == 800
        with pytest.raises(BudgetExceeded):
            check_budget(program, (10, 10), 799)

    def test_evaluate_checks_budget_first(self):
        """evaluate refuses before touching inputs"""
        with pytest.raises(BudgetExceeded):
            evaluate(compile('d0 + d1'), {}, (100, 100), FLOAT64, budget=10)


@pytest.mark.unit
class TestCast:
    """binary64 to output dtype"""

    def test_integer_rounding_and_saturation(self):
        """Round half to even, saturate, NaN to zero"""
        values = np.array([2.5, 3.5, -2.5, 1e10, -np.inf, np.inf, np.nan, 7.4])
        result = cast_float64(values, np.int16)
        assert result.tolist() == [2, 4, -2, 32767, -32768, 32767, 0, 7]

    def test_unsigned_saturates_at_zero(self):
        """Negative values clamp to zero for unsigned outputs"""
        assert cast_float64(np.array([-1.0, 300.0]), np.uint8).tolist() == [0, 255]

    def test_float_narrowing(self):
        """float32 outputs take IEEE rounding"""
        result = cast_float64(np.array([0.1, 1e300]), np.float32)
        assert result[0] == np.float32(0.1)
        assert np.isposinf(result[1])


@pytest.mark.unit
class TestTreeWalkAgreement:
    """VM and tree-walk evaluation are bit-identical"""

    def test_random_programs(self, tree_factory):
        """1000 random expressions agree bit-for-bit"""
        rng = random.Random(1234)
        data_rng = np.random.default_rng(1234)
        for _ in range(1000):
            shape = _random_shape(rng)
            tree = tree_factory(rng, rng.randint(1, 6), len(shape))
            count = element_count(shape)
            buffers = {
                'a': (data_rng.normal(size=count) * 100, FLOAT64),
                'b': (data_rng.integers(-50, 50, size=count).astype(np.int16),
                      DType.scalar('int16')),
                'c': (data_rng.random(count).astype(np.float32), DType.scalar('float32')),
            }
            out_dtype = FLOAT64 if rng.random() < 0.8 else INT32
            program = compile_ast(tree, ['a', 'b', 'c'])

            vm_result = evaluate(program, buffers, shape, out_dtype, block_size=64)
            tree_result = evaluate_tree(
                tree, {alias: buffer for alias, (buffer, _) in buffers.items()}, shape, out_dtype
            )

            if out_dtype is FLOAT64:
                assert _same_bits(vm_result, tree_result), tree
            else:
                assert np.array_equal(vm_result, tree_result), tree
