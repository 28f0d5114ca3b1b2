"""
Integration tests for the udfvault command line
"""
import json

import numpy as np
import pytest

from apps.bench.services.bands import ndvi
from apps.cli.formatting import to_csv
from apps.cli.main import EXIT_ERROR, EXIT_OK, EXIT_USAGE, main
from apps.container.services.container import Container
from apps.trust.services.keys import KeyRecord, raw_public_key
from apps.trust.services.store import TRUSTED, UNTRUSTED, TrustStore

from ..conftest import NDVI_SOURCE


@pytest.fixture
def sample(tmp_path):
    """A 3x4 sample container written through create-sample"""
    path = tmp_path / 'sample.sdc'
    assert main(['create-sample', str(path), '--rows', '3', '--cols', '4']) == EXIT_OK
    return path


@pytest.fixture
def ndvi_source(tmp_path):
    path = tmp_path / 'ndvi.expr'
    path.write_text(NDVI_SOURCE)
    return path


def _attach(path, source, *extra):
    return main([
        'attach', str(path),
        '--source', str(source),
        '--output', '/NDVI',
        '--dtype', 'float64',
        '--shape', '3x4',
        '--input', 'nir=/Band5',
        '--input', 'red=/Band4',
        *extra,
    ])


@pytest.mark.integration
class TestMain:
    """Dispatch and exit codes"""

    def test_no_arguments(self, capsys):
        """Running without a command prints usage and exits 1"""
        assert main([]) == EXIT_USAGE
        assert 'usage: udfvault' in capsys.readouterr().err

    def test_help(self, capsys):
        """--help lists the commands and exits 0"""
        assert main(['--help']) == EXIT_OK
        assert 'create-sample' in capsys.readouterr().out

    def test_unknown_command(self, capsys):
        """Unknown commands are usage errors"""
        assert main(['frobnicate']) == EXIT_USAGE
        assert "unknown command 'frobnicate'" in capsys.readouterr().err

    def test_missing_required_option(self, sample, capsys):
        """argparse failures exit 1"""
        assert main(['attach', str(sample), '--backend', 'expr']) == EXIT_USAGE

    def test_bad_shape(self, sample, ndvi_source, capsys):
        """A malformed --shape is a usage error"""
        code = main([
            'attach', str(sample), '--backend', 'expr', '--source', str(ndvi_source),
            '--output', '/NDVI', '--dtype', 'float64', '--shape', '3by4',
        ])
        assert code == EXIT_USAGE
        assert 'invalid shape' in capsys.readouterr().err

    def test_operational_error(self, sample, capsys):
        """udfvault errors exit 2 and name their code"""
        assert main(['read', str(sample), '/Missing']) == EXIT_ERROR
        assert capsys.readouterr().err.startswith('NotFound:')


@pytest.mark.integration
class TestCreateSample:
    """create-sample"""

    def test_writes_bands(self, sample):
        """Both bands exist with the requested shape"""
        with Container.open(sample) as container:
            assert container.meta('/Band4').shape == (3, 4)
            assert container.meta('/Band5').shape == (3, 4)

    def test_needs_a_size(self, tmp_path, capsys):
        """Without --n or --rows/--cols the command refuses"""
        assert main(['create-sample', str(tmp_path / 'x.sdc')]) == EXIT_USAGE
        assert '--n' in capsys.readouterr().err

    def test_with_ndvi(self, tmp_path, capsys):
        """--with-ndvi attaches a float32 /NDVI"""
        path = tmp_path / 'ndvi.sdc'
        assert main(['create-sample', str(path), '--n', '5', '--with-ndvi']) == EXIT_OK
        capsys.readouterr()
        assert main(['inspect', str(path), '/NDVI']) == EXIT_OK
        report = json.loads(capsys.readouterr().out)
        assert report['header']['output_datatype'] == 'float32'
        assert report['header']['output_resolution'] == [5, 5]


@pytest.mark.integration
class TestAttachAndRead:
    """attach, read and inspect"""

    def test_attach_then_read_csv(self, sample, ndvi_source, capsys):
        """The UDF prints the same CSV as NDVI computed from the stored bands"""
        assert _attach(sample, ndvi_source, '--backend', 'expr') == EXIT_OK
        assert 'Attached /NDVI' in capsys.readouterr().out

        assert main(['read', str(sample), '/NDVI']) == EXIT_OK
        printed = capsys.readouterr().out

        with Container.open(sample) as container:
            red = container.read_dataset('/Band4')
            nir = container.read_dataset('/Band5')
        assert printed == to_csv(ndvi(red, nir))
        assert len(printed.splitlines()) == 3

    def test_read_plain_dataset(self, sample, capsys):
        """Plain datasets print their stored values"""
        assert main(['read', str(sample), '/Band4']) == EXIT_OK
        rows = [line.split(',') for line in capsys.readouterr().out.splitlines()]
        with Container.open(sample) as container:
            expected = container.read_dataset('/Band4')
        np.testing.assert_array_equal(np.array(rows, dtype=np.int16), expected)

    def test_attach_missing_input(self, sample, ndvi_source, capsys):
        """A missing input dataset is an operational error"""
        code = main([
            'attach', str(sample), '--backend', 'expr', '--source', str(ndvi_source),
            '--output', '/NDVI', '--dtype', 'float64', '--shape', '3x4',
            '--input', 'nir=/Band9', '--input', 'red=/Band4',
        ])
        assert code == EXIT_ERROR
        assert 'MissingInput' in capsys.readouterr().err

    def test_bad_input_option(self, sample, ndvi_source, capsys):
        """--input without '=' is a usage error"""
        code = main([
            'attach', str(sample), '--backend', 'expr', '--source', str(ndvi_source),
            '--output', '/NDVI', '--dtype', 'float64', '--shape', '3x4', '--input', 'nir',
        ])
        assert code == EXIT_USAGE

    def test_inspect(self, sample, ndvi_source, capsys):
        """inspect prints the header and a valid signature"""
        _attach(sample, ndvi_source, '--backend', 'expr', '--embed-source')
        capsys.readouterr()
        assert main(['inspect', str(sample), '/NDVI']) == EXIT_OK
        report = json.loads(capsys.readouterr().out)
        assert report['dataset'] == '/NDVI'
        assert report['signature_valid'] is True
        assert report['header']['backend'] == 'expr'
        assert report['header']['source_code'] == NDVI_SOURCE
        assert report['header']['input_datasets'] == ['/Band5', '/Band4']


@pytest.mark.integration
class TestKeys:
    """keys list, import and move"""

    def test_trust_flip(self, tmp_path, capsys):
        """A hosted UDF from another signer runs only after its key is moved"""
        author_store = tmp_path / 'author'
        reader_store = tmp_path / 'reader'
        path = tmp_path / 'hosted.sdc'
        source = tmp_path / 'fill.txt'
        source.write_text('fill_index')
        with Container.create(path):
            pass

        code = main([
            'attach', str(path), '--store', str(author_store), '--backend', 'hosted',
            '--source', str(source), '--output', '/Out', '--dtype', 'int32', '--shape', '4',
        ])
        assert code == EXIT_OK

        read = ['read', str(path), '/Out', '--store', str(reader_store)]
        assert main(read) == EXIT_ERROR
        assert 'TrustViolation' in capsys.readouterr().err

        assert main(['keys', '--store', str(reader_store), 'list']) == EXIT_OK
        listing = capsys.readouterr().out
        assert UNTRUSTED in listing
        key_id = listing.split()[0]

        assert main(['keys', '--store', str(reader_store), 'move', key_id, TRUSTED]) == EXIT_OK
        capsys.readouterr()
        assert main(read) == EXIT_OK
        assert capsys.readouterr().out == '0\n1\n2\n3\n'

    def test_import(self, tmp_path, signing_key, capsys):
        """An exported key file imports into the requested profile"""
        record = KeyRecord(raw_public_key(signing_key), 'Ana', 'ana@example.org')
        key_file = tmp_path / 'ana.json'
        key_file.write_bytes(record.to_json())
        store = tmp_path / 'store'

        code = main([
            'keys', '--store', str(store), 'import', str(key_file), '--profile', TRUSTED,
        ])
        assert code == EXIT_OK
        assert record.key_id in capsys.readouterr().out
        assert TrustStore(store).find_profile(record.public_key).name == TRUSTED

    def test_import_unreadable_file(self, tmp_path, capsys):
        """A missing key file is an operational error"""
        code = main(['keys', '--store', str(tmp_path / 'store'), 'import',
                     str(tmp_path / 'absent.json')])
        assert code == EXIT_ERROR
        assert 'StorageError' in capsys.readouterr().err

    def test_move_unknown_key(self, tmp_path, capsys):
        """Moving a key the store does not hold fails"""
        code = main(['keys', '--store', str(tmp_path / 'store'), 'move',
                     '0123456789abcdef', TRUSTED])
        assert code == EXIT_ERROR
        assert 'UnknownKey' in capsys.readouterr().err
