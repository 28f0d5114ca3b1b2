"""
Unit tests for the UDF runtime: environment, data-access API, compound views
and the sandbox
"""
import os
import random
import string
import time

import numpy as np
import pytest

from apps.container.services.dtypes import CompoundMember, DType, coerce_buffer
from apps.runtime.exceptions import (
    CapabilityDenied,
    InvalidMemberName,
    MemoryCapExceeded,
    NameCollision,
    OutOfBounds,
    StringTooLong,
    Timeout,
    UdfPanic,
    UnknownName,
    VarStringWriteUnsupported,
)
from apps.runtime.services.compound import build_compound_view, sanitize_member_name
from apps.runtime.services.environment import (
    Capabilities,
    DatasetBuffer,
    ExecutionEnv,
    Limits,
)
from apps.runtime.services.lib import UdfLib
from apps.runtime.services.sandbox import run_sandboxed

INT16 = DType.scalar('int16')
FLOAT32 = DType.scalar('float32')


def _ndvi_env(**kwargs):
    red = np.array([[2, 2], [1, 4]], dtype=np.int16)
    nir = np.array([[6, 2], [3, 12]], dtype=np.int16)
    inputs = [
        DatasetBuffer.readonly('/Band4', 'Red', red, INT16, (2, 2)),
        DatasetBuffer.readonly('/Band5', 'NIR', nir, INT16, (2, 2)),
    ]
    return ExecutionEnv.build(inputs, '/NDVI', FLOAT32, (2, 2), **kwargs)


def _weather_type():
    return DType.compound(
        [
            CompoundMember('Serial number', DType.scalar('int64'), 0),
            CompoundMember('Temperature (F)', DType.scalar('double'), 24),
            CompoundMember('Pressure (inHg)', DType.scalar('double'), 32),
        ],
        size=40,
    )


@pytest.mark.unit
class TestEnvironment:
    """Name resolution and metadata queries"""

    def test_output_is_writable(self):
        """get_data on the output name returns the writable output buffer"""
        env = _ndvi_env()
        lib = UdfLib(env)
        output = lib.get_data('NDVI')
        assert output is env.output.data
        output[:] = 1.0
        assert env.output.data.tolist() == [1.0] * 4

    def test_inputs_are_read_only(self):
        """Input buffers reject writes"""
        lib = UdfLib(_ndvi_env())
        red = lib.get_data('Red')
        assert red.tolist() == [2, 2, 1, 4]
        with pytest.raises(ValueError):
            red[0] = 9

    def test_resolve_by_path_and_basename(self):
        """Inputs resolve by alias, full path or basename"""
        env = _ndvi_env()
        assert env.resolve('/Band5').alias == 'NIR'
        assert env.resolve('Band4').alias == 'Red'

    def test_unknown_name(self):
        """Undeclared names raise UnknownName"""
        with pytest.raises(UnknownName):
            UdfLib(_ndvi_env()).get_data('Bogus')

    def test_dims_and_type(self):
        """get_dims and get_type report shape and type name"""
        lib = UdfLib(_ndvi_env())
        assert lib.get_dims('NDVI') == [2, 2]
        assert lib.get_type('Red') == 'int16'
        assert lib.get_type('NDVI') == 'float32'
        assert lib.output_name == 'NDVI'

    def test_scalar_shape(self):
        """A one-element dataset reports [1]"""
        env = ExecutionEnv.build([], '/x', INT16, (1,))
        assert UdfLib(env).get_dims('x') == [1]

    def test_limits_from_partial_mapping(self):
        """Missing limit keys fall back to the base"""
        base = Limits(op_budget=10, memory_cap=20, wall_timeout=1.5)
        limits = Limits.from_dict({'op_budget': 99}, base)
        assert limits == Limits(op_budget=99, memory_cap=20, wall_timeout=1.5)

    def test_network_never_granted(self):
        """The network capability is forced off"""
        assert Capabilities(network=True).network is False


@pytest.mark.unit
class TestStrings:
    """String element access"""

    def _env(self, dtype, values):
        data = coerce_buffer(values, dtype, len(values))
        source = DatasetBuffer.readonly('/names', 'names', data, dtype, (len(values),))
        return ExecutionEnv.build([source], '/labels', DType.fixed_string(8), (3,))

    def test_fixed_string_get(self):
        """NUL padding is stripped on read"""
        lib = UdfLib(self._env(DType.fixed_string(8), ['Red', 'NIR']))
        assert lib.string('names', 0) == 'Red'

    def test_var_string_get(self):
        """Variable-length strings read back by index"""
        lib = UdfLib(self._env(DType.var_string(), ['Blue', 'Red', 'NIR']))
        assert lib.string('names', 2) == 'NIR'

    def test_fixed_string_set(self):
        """Writes into the fixed-length output"""
        env = self._env(DType.fixed_string(8), ['a'])
        UdfLib(env).set_string('labels', 1, 'Ladyland')
        assert env.output.data[1] == b'Ladyland'

    def test_fixed_string_too_long(self):
        """17 bytes do not fit fixed_string(8)"""
        lib = UdfLib(self._env(DType.fixed_string(8), ['a']))
        with pytest.raises(StringTooLong):
            lib.set_string('labels', 0, 'Electric Ladyland')

    def test_out_of_bounds(self):
        """Indices beyond the element count raise OutOfBounds"""
        lib = UdfLib(self._env(DType.fixed_string(8), ['a']))
        with pytest.raises(OutOfBounds):
            lib.set_string('labels', 3, 'x')

    def test_input_not_writable(self):
        """Inputs cannot be written through set_string"""
        lib = UdfLib(self._env(DType.fixed_string(8), ['a']))
        with pytest.raises(CapabilityDenied):
            lib.set_string('names', 0, 'x')

    def test_var_string_output_not_writable(self):
        """Variable-length string outputs are read-only"""
        env = ExecutionEnv.build([], '/labels', DType.var_string(), (2,))
        with pytest.raises(VarStringWriteUnsupported):
            UdfLib(env).set_string('labels', 0, 'x')

    def test_compound_member_strings(self):
        """set_string targets one member of a compound record"""
        record = DType.compound([
            CompoundMember('Id', DType.scalar('int32'), 0),
            CompoundMember('Label', DType.fixed_string(4), 4),
        ])
        env = ExecutionEnv.build([], '/rows', record, (2,))
        lib = UdfLib(env)
        lib.set_string('rows', 1, 'ok', member='Label')
        assert lib.string('rows', 1, member='Label') == 'ok'


@pytest.mark.unit
class TestCompoundView:
    """Sanitized, padded views of compound records"""

    @pytest.mark.parametrize('raw,expected', [
        ('Temperature (F)', 'temperature'),
        ('Pressure (inHg)', 'pressure'),
        ('Serial number', 'serial_number'),
        ('  Wind-Speed [m/s] ', 'wind_speed'),
        ('Gust {max}', 'gust'),
    ])
    def test_sanitize(self, raw, expected):
        """Truncate, trim, lowercase, then map spaces and dashes"""
        assert sanitize_member_name(raw) == expected

    def test_weather_station_layout(self):
        """Gaps between members become numbered pads"""
        view = build_compound_view(_weather_type())
        layout = [(m.view_name, m.offset, m.size) for m in view.members]
        assert layout == [
            ('serial_number', 0, 8),
            ('_pad0', 8, 16),
            ('temperature', 24, 8),
            ('pressure', 32, 8),
        ]
        assert view.raw_name('temperature') == 'Temperature (F)'
        assert view.numpy_dtype().itemsize == 40

    def test_trailing_pad(self):
        """Storage beyond the last member is padded too"""
        dtype = DType.compound([CompoundMember('x', DType.scalar('int8'), 0)], size=4)
        names = [m.view_name for m in build_compound_view(dtype).members]
        assert names == ['x', '_pad0']

    def test_collision(self):
        """'A(x)' and 'A[y]' both sanitize to 'a'"""
        dtype = DType.compound([
            CompoundMember('A(x)', DType.scalar('double'), 0),
            CompoundMember('A[y]', DType.scalar('double'), 8),
        ])
        with pytest.raises(NameCollision):
            build_compound_view(dtype)

    def test_empty_name(self):
        """A name that sanitizes to nothing is rejected"""
        dtype = DType.compound([CompoundMember('(units)', DType.scalar('int8'), 0)])
        with pytest.raises(InvalidMemberName):
            build_compound_view(dtype)

    def test_sanitize_idempotent(self):
        """Sanitizing a sanitized name changes nothing"""
        rng = random.Random(99)
        alphabet = string.ascii_letters + string.digits + ' -_()[]{}\t.'
        for _ in range(2000):
            raw = ''.join(rng.choice(alphabet) for _ in range(rng.randint(0, 24)))
            once = sanitize_member_name(raw)
            assert sanitize_member_name(once) == once, raw
            assert not set(once) & set(' -([{')

    def test_random_views_cover_records(self, compound_factory, values_factory):
        """Views of random compounds tile the record and read every member"""
        rng = random.Random(31)
        for _ in range(300):
            dtype = compound_factory(rng)
            view = build_compound_view(dtype)

            position = 0
            for member in view.members:
                assert member.offset == position
                assert member.size > 0
                position += member.size
            assert position == dtype.size == view.size
            assert [m.raw_name for m in view.fields] == [m.raw_name for m in dtype.members]

            records = values_factory(rng, dtype, 3)
            viewed = records.view(view.numpy_dtype())
            for member in view.fields:
                assert viewed[member.view_name].tolist() == records[member.raw_name].tolist()


@pytest.mark.unit
class TestCapabilities:
    """Filesystem grants"""

    def test_read_allowlist(self, tmp_path):
        """Reads inside fs_read succeed and outside are denied"""
        allowed = tmp_path / 'allowed'
        allowed.mkdir()
        (allowed / 'data.csv').write_text('a\n1\n')
        (tmp_path / 'secret.txt').write_text('no')
        env = _ndvi_env(capabilities=Capabilities(fs_read=(str(allowed),)))
        lib = UdfLib(env)

        with lib.open(str(allowed / 'data.csv')) as handle:
            assert handle.read() == 'a\n1\n'
        with pytest.raises(CapabilityDenied) as excinfo:
            lib.open(str(tmp_path / 'secret.txt'))
        assert excinfo.value.details['path'] == str(tmp_path / 'secret.txt')

    def test_symlink_escape_denied(self, tmp_path):
        """Links out of the allowlist are resolved before checking"""
        allowed = tmp_path / 'allowed'
        allowed.mkdir()
        (tmp_path / 'secret.txt').write_text('no')
        os.symlink(tmp_path / 'secret.txt', allowed / 'link.txt')
        lib = UdfLib(_ndvi_env(capabilities=Capabilities(fs_read=(str(allowed),))))
        with pytest.raises(CapabilityDenied):
            lib.open(str(allowed / 'link.txt'))

    def test_write_needs_fs_write(self, tmp_path):
        """Read grants do not allow writing"""
        lib = UdfLib(_ndvi_env(capabilities=Capabilities(fs_read=(str(tmp_path),))))
        with pytest.raises(CapabilityDenied):
            lib.open(str(tmp_path / 'out.txt'), 'w')

    def test_read_csv(self, tmp_path):
        """read_csv parses through the checked open"""
        (tmp_path / 'rows.csv').write_text('name,value\nx,1\ny,2\n')
        lib = UdfLib(_ndvi_env(capabilities=Capabilities(fs_read=(str(tmp_path),))))
        frame = lib.read_csv(str(tmp_path / 'rows.csv'))
        assert frame['value'].tolist() == [1, 2]


def _fill_ndvi(env):
    red = env.resolve('Red').data.astype(np.float64)
    nir = env.resolve('NIR').data.astype(np.float64)
    env.output.data[:] = (nir - red) / (nir + red)


@pytest.mark.unit
class TestSandbox:
    """Limits enforced around thunks"""

    def test_thread_success(self):
        """A finishing thunk returns the shaped output"""
        env = _ndvi_env()
        result = run_sandboxed(env, _fill_ndvi, isolation='thread')
        assert result.shape == (2, 2)
        np.testing.assert_allclose(result, [[0.5, 0.0], [0.5, 0.5]])

    def test_process_success(self):
        """Process isolation ships the output back"""
        env = _ndvi_env()
        result = run_sandboxed(env, _fill_ndvi, isolation='process')
        np.testing.assert_allclose(result, [[0.5, 0.0], [0.5, 0.5]])

    @pytest.mark.parametrize('isolation', ['thread', 'process'])
    def test_timeout_discards_output(self, isolation):
        """A thunk running past the wall timeout raises Timeout"""
        limits = Limits(op_budget=10**6, memory_cap=10**6, wall_timeout=0.2)
        env = _ndvi_env(limits=limits)

        def spin(private):
            private.output.data[:] = 7.0
            deadline = time.monotonic() + 5
            while time.monotonic() < deadline and not private.cancel_event.is_set():
                time.sleep(0.01)

        with pytest.raises(Timeout):
            run_sandboxed(env, spin, isolation=isolation)
        assert env.output.data.tolist() == [0.0] * 4

    def test_memory_cap(self):
        """Output plus working set above the cap is refused up front"""
        limits = Limits(op_budget=10**6, memory_cap=100, wall_timeout=1.0)
        env = _ndvi_env(limits=limits)
        with pytest.raises(MemoryCapExceeded):
            run_sandboxed(env, _fill_ndvi, working_set=1000, isolation='thread')

    def test_panic(self):
        """Unexpected exceptions surface as UdfPanic"""

        def broken(private):
            raise ZeroDivisionError('boom')

        with pytest.raises(UdfPanic) as excinfo:
            run_sandboxed(_ndvi_env(), broken, isolation='thread')
        assert excinfo.value.details['exception'] == 'ZeroDivisionError'

    def test_library_errors_pass_through(self):
        """Errors raised by the data-access API keep their type"""

        def lookup(private):
            UdfLib(private).get_data('Bogus')

        with pytest.raises(UnknownName):
            run_sandboxed(_ndvi_env(), lookup, isolation='thread')
