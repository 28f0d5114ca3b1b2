"""
Pytest configuration and fixtures for udfvault
"""
import numpy as np
import pytest
from cryptography.hazmat.primitives.asymmetric.ed25519 import Ed25519PrivateKey

from apps.container.services.container import Container
from apps.trust.services.store import TrustStore
from apps.udf.services.engine import UdfEngine

SIGNER_OWNER = ('Test Signer', 'signer@example.org')
OTHER_OWNER = ('Other Signer', 'other@example.org')
NDVI_SOURCE = '(nir - red) / (nir + red)'


@pytest.fixture(autouse=True)
def udfvault_home(tmp_path, settings):
    """Point UDFVAULT HOME at a per-test directory"""
    home = tmp_path / 'home'
    settings.UDFVAULT = {**settings.UDFVAULT, 'HOME': str(home)}
    return home


@pytest.fixture
def trust_store(udfvault_home):
    """Trust store at the per-test home"""
    return TrustStore(udfvault_home)


@pytest.fixture
def signing_key():
    """Deterministic Ed25519 signing key"""
    return Ed25519PrivateKey.from_private_bytes(bytes(range(32)))


@pytest.fixture
def other_signing_key():
    """A second deterministic signing key"""
    return Ed25519PrivateKey.from_private_bytes(bytes(range(32, 64)))


@pytest.fixture
def engine(trust_store):
    """UDF engine bound to the per-test trust store"""
    return UdfEngine(trust_store=trust_store)


@pytest.fixture
def container_path(tmp_path):
    return tmp_path / 'sample.sdc'


@pytest.fixture
def container(container_path, engine):
    """Empty container open for writing"""
    handle = Container.create(container_path, udf_engine=engine)
    yield handle
    handle.close()


@pytest.fixture
def band_container(container):
    """Container with small Band4 (red) and Band5 (NIR) grids"""
    red = np.array([[2, 2], [1, 4]], dtype=np.int16)
    nir = np.array([[6, 2], [3, 12]], dtype=np.int16)
    container.create_dataset('/Band4', 'int16', (2, 2), red)
    container.create_dataset('/Band5', 'int16', (2, 2), nir)
    return container


@pytest.fixture
def attach_ndvi(engine, signing_key):
    """Attach the NDVI expression UDF to a container"""

    def attach(target, output='/NDVI', dtype='float64', shape=(2, 2), **kwargs):
        return engine.attach(
            target,
            NDVI_SOURCE,
            'expr',
            output,
            dtype,
            shape,
            {'nir': '/Band5', 'red': '/Band4'},
            signing_key,
            owner=SIGNER_OWNER,
            **kwargs,
        )

    return attach
