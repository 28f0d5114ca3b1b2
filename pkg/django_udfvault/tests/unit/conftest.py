"""
Random generators shared by the unit tests
"""
import random
import string

import numpy as np
import pytest

from apps.container.services.dtypes import SCALAR_NUMPY, CompoundMember, DType, DTypeKind
from apps.exprlang.services.functions import FUNCTIONS
from apps.exprlang.services.nodes import BinOp, Call, Const, Coord, FlatIndex, InputRef, Neg


TREE_ALIASES = ('a', 'b', 'c')
CONSTANTS = (0.0, 0.5, 1.0, 2.0, 3.25, 10.0, 1e-3, 1e6)


def random_tree(rng: random.Random, depth: int, ndim: int):
    """Random expression tree over TREE_ALIASES, at most `depth` levels deep."""
    if depth <= 1 or rng.random() < 0.25:
        choice = rng.randrange(4)
        if choice == 0:
            return Const(rng.choice(CONSTANTS))
        if choice == 1:
            return Coord(rng.randrange(ndim))
        if choice == 2:
            return FlatIndex()
        return InputRef(rng.choice(TREE_ALIASES))

    choice = rng.randrange(6)
    if choice == 0:
        return Neg(random_tree(rng, depth - 1, ndim))
    if choice == 1:
        function = rng.choice(FUNCTIONS)
        args = tuple(random_tree(rng, depth - 1, ndim) for _ in range(function.arity))
        return Call(function.name, args)
    return BinOp(
        rng.choice('+-*/'),
        random_tree(rng, depth - 1, ndim),
        random_tree(rng, depth - 1, ndim),
    )


@pytest.fixture
def tree_factory():
    """Callable (rng, depth, ndim) -> random expression tree"""
    return random_tree


MEMBER_BASES = (
    'Temperature', 'Pressure', 'Wind speed', 'Serial-number',
    'Humidity', 'Station ID', 'Dew Point', 'Gust',
)
MEMBER_SUFFIXES = ('', ' (F)', ' [m/s]', ' {max}', '  ', ' (inHg) [raw]')
TEXT_ALPHABET = string.ascii_letters + string.digits + ' -_'


def random_compound(rng: random.Random) -> DType:
    """Compound of 1-4 scalar or fixed-string members with random gaps and tail padding."""
    members = []
    offset = 0
    for base in rng.sample(MEMBER_BASES, rng.randint(1, 4)):
        offset += rng.choice([0, 0, 1, 3, 8])
        if rng.random() < 0.25:
            member_dtype = DType.fixed_string(rng.randint(1, 6))
        else:
            member_dtype = DType(rng.choice(list(SCALAR_NUMPY)))
        members.append(CompoundMember(base + rng.choice(MEMBER_SUFFIXES), member_dtype, offset))
        offset += member_dtype.storage_size
    return DType.compound(members, size=offset + rng.choice([0, 0, 2, 5]))


def _text(rng: random.Random, length: int, alphabet: str = TEXT_ALPHABET) -> str:
    return ''.join(rng.choice(alphabet) for _ in range(length))


def random_values(rng: random.Random, dtype: DType, count: int) -> np.ndarray:
    """Flat buffer of `count` random elements of dtype."""
    generator = np.random.default_rng(rng.getrandbits(32))
    if dtype.kind is DTypeKind.FIXED_STRING:
        texts = [_text(rng, rng.randint(0, dtype.length)) for _ in range(count)]
        return np.array([text.encode('ascii') for text in texts], dtype=dtype.numpy_dtype)
    if dtype.kind is DTypeKind.VAR_STRING:
        values = np.empty(count, dtype=object)
        alphabet = TEXT_ALPHABET + 'äöüß€'
        values[:] = [_text(rng, rng.randint(0, 12), alphabet) for _ in range(count)]
        return values
    if dtype.kind is DTypeKind.COMPOUND:
        records = np.zeros(count, dtype=dtype.numpy_dtype)
        for member in dtype.members:
            records[member.raw_name] = random_values(rng, member.dtype, count)
        return records
    numpy_dtype = dtype.numpy_dtype
    if numpy_dtype.kind == 'f':
        return (generator.standard_normal(count) * 1e6).astype(numpy_dtype)
    info = np.iinfo(numpy_dtype)
    return generator.integers(info.min, info.max, size=count, dtype=numpy_dtype, endpoint=True)


@pytest.fixture
def compound_factory():
    """Callable (rng) -> random compound DType"""
    return random_compound


@pytest.fixture
def values_factory():
    """Callable (rng, dtype, count) -> random flat buffer"""
    return random_values
