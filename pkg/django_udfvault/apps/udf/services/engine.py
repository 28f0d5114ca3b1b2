"""
UDF engine: attach (encode path) and decode_and_execute (read path)

Attach compiles the source with the chosen backend, signs header and object,
and stores the payload as a UDF dataset. Reading verifies the signature,
resolves the signer's trust profile, materializes every input (recursing into
UDF inputs) and then runs the backend in the sandbox.
"""
import base64
import logging
import threading
from dataclasses import dataclass
from typing import Any, Dict, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
from cryptography.hazmat.primitives.asymmetric.ed25519 import Ed25519PrivateKey

from apps.container.exceptions import InvalidPath, NotFound
from apps.container.services.container import Container
from apps.container.services.dtypes import DType, parse_dtype_name
from apps.container.services.index import DatasetMeta, normalize_path
from apps.runtime.exceptions import UdfPanic
from apps.runtime.services.environment import DatasetBuffer, ExecutionEnv
from apps.runtime.services.sandbox import run_sandboxed
from apps.trust.services.keys import default_owner, raw_public_key
from apps.trust.services.store import TrustStore

from ..exceptions import (
    CyclicDependency,
    DuplicatePath,
    MalformedHeader,
    MissingInput,
    NotAUdfDataset,
    SignatureInvalid,
    TrustViolation,
    UdfRuntimeError,
)
from .backends import AttachOptions, BackendRegistry, get_default_registry
from .metadata import SignatureBlock, UdfMetadata
from .payload import UdfPayload, build_payload

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class InspectionReport:
    metadata: UdfMetadata
    signature_valid: bool
    profile: Optional[str]
    payload_size: int

    def to_dict(self) -> Dict[str, Any]:
        return {
            'header': self.metadata.to_dict(),
            'payload_size': self.payload_size,
            'profile': self.profile,
            'signature_valid': self.signature_valid,
        }


class UdfEngine:
    """
    Args:
        registry: Backend registry; the application default when omitted
        trust_store: Trust store; a store at UDFVAULT HOME is opened per call
            when omitted
        isolation: Sandbox isolation level override
    """

    def __init__(
        self,
        registry: Optional[BackendRegistry] = None,
        trust_store: Optional[TrustStore] = None,
        isolation: Optional[str] = None,
    ):
        self._registry = registry
        self._trust_store = trust_store
        self.isolation = isolation

    @property
    def registry(self) -> BackendRegistry:
        return self._registry or get_default_registry()

    @property
    def trust_store(self) -> TrustStore:
        return self._trust_store or TrustStore()

    # Encode path

    def attach(
        self,
        container: Container,
        source: str,
        backend_name: str,
        output_path: str,
        output_dtype: Union[DType, str],
        output_shape: Sequence[int],
        inputs: Mapping[str, str],
        signing_key: Ed25519PrivateKey,
        owner: Optional[Tuple[str, str]] = None,
        embed_source: bool = False,
    ) -> DatasetMeta:
        """
        Compile, sign and store a UDF dataset.

        Args:
            container: Container opened for writing
            source: UDF source text
            backend_name: Registered backend name
            output_path: Path of the new dataset
            output_dtype: Output element type (or its name)
            output_shape: Output extents
            inputs: alias -> dataset path, in declaration order
            signing_key: Ed25519 key that signs the payload
            owner: (name, email) for the signature block; system defaults when omitted
            embed_source: Keep the source text in the header

        Returns:
            DatasetMeta of the stored UDF dataset

        Raises:
            UnknownBackend, DuplicatePath, MissingInput, CompileError
        """
        backend = self.registry.get(backend_name)
        output_path = normalize_path(output_path)
        if container.exists(output_path):
            raise DuplicatePath(f"{output_path} already exists", path=output_path)
        dtype = parse_dtype_name(output_dtype) if isinstance(output_dtype, str) else output_dtype
        shape = tuple(int(extent) for extent in output_shape)

        aliases = tuple(inputs.keys())
        paths = tuple(normalize_path(path) for path in inputs.values())
        for path in paths:
            if container.index.find_dataset(path) is None:
                raise MissingInput(f"input dataset {path} does not exist", path=path)

        options = AttachOptions(aliases, paths, output_path, dtype, shape)
        object_bytes = backend.compile(source, options)

        name, email = owner or default_owner()
        public_key = base64.b64encode(raw_public_key(signing_key)).decode('ascii')
        metadata = UdfMetadata(
            backend=backend.name,
            bytecode_size=len(object_bytes),
            input_datasets=paths,
            output_dataset=output_path,
            output_datatype=dtype.name,
            output_resolution=shape,
            signature=SignatureBlock(name, email, public_key),
            source_code=source if embed_source else '',
            input_aliases=aliases,
        )
        payload = build_payload(metadata, object_bytes, signing_key)
        meta = container.write_payload(output_path, dtype, shape, payload.to_bytes())
        logger.info(
            f"Attached {backend.name} UDF {output_path} "
            f"({payload.size} byte payload, inputs {list(paths)})"
        )
        return meta

    # Decode path

    def load_payload(self, container: Container, path: str) -> Tuple[DatasetMeta, UdfPayload]:
        """
        Raises:
            NotFound, NotAUdfDataset, MalformedHeader
        """
        meta = container.meta(path)
        if not meta.is_udf:
            raise NotAUdfDataset(f"{meta.path} is not a UDF dataset", path=meta.path)
        return meta, UdfPayload.parse(container.read_raw(meta.path))

    def inspect(self, container: Container, path: str) -> InspectionReport:
        """
        Parse a UDF header and check its signature without executing anything.

        Raises:
            MalformedHeader, NotAUdfDataset
        """
        _, payload = self.load_payload(container, path)
        valid = payload.is_canonical and payload.verify()
        profile = None
        if valid:
            found = self.trust_store.find_profile(payload.public_key)
            profile = found.name if found else None
        return InspectionReport(payload.metadata, valid, profile, payload.size)

    def decode_and_execute(
        self, container: Container, path: str, _stack: Tuple[str, ...] = ()
    ) -> np.ndarray:
        """
        Verify, resolve trust, prefetch inputs and run a UDF dataset.

        Returns:
            Output values shaped to the output resolution

        Raises:
            SignatureInvalid, TrustViolation, UnknownBackend, BudgetExceeded,
            Timeout, MemoryCapExceeded, CapabilityDenied, UdfRuntimeError,
            CyclicDependency, MissingInput
        """
        path = normalize_path(path)
        if path in _stack:
            cycle = ' -> '.join((*_stack, path))
            raise CyclicDependency(f"UDF inputs form a cycle: {cycle}", cycle=[*_stack, path])

        try:
            meta, payload = self.load_payload(container, path)
            if not payload.is_canonical:
                raise MalformedHeader(f"{path}: stored header is not canonical JSON")
        except MalformedHeader as exc:
            raise SignatureInvalid(f"{path}: payload does not verify ({exc})", path=path) from exc
        if not payload.verify():
            raise SignatureInvalid(f"{path}: payload signature does not verify", path=path)

        metadata = payload.metadata
        block = metadata.signature
        profile = self.trust_store.resolve_profile(payload.public_key, block.name, block.email)
        backend = self.registry.get(metadata.backend)
        if backend.requires_trust and not profile.capabilities.hosted_allowed:
            raise TrustViolation(
                f"{path}: backend {backend.name!r} needs a trusted signer; "
                f"{block.name} <{block.email}> is in profile {profile.name!r}",
                profile=profile.name,
                backend=backend.name,
            )
        logger.info(f"Executing {backend.name} UDF {path} under profile {profile.name}")

        output_dtype = metadata.output_dtype or meta.dtype
        stack = (*_stack, path)
        buffers = [
            self._materialize(container, alias, input_path, stack)
            for alias, input_path in metadata.inputs
        ]
        env = ExecutionEnv.build(
            buffers,
            path,
            output_dtype,
            metadata.output_resolution,
            limits=profile.limits,
            capabilities=profile.capabilities,
            options=backend.options(payload.object_bytes),
        )
        working_set = backend.preflight(payload.object_bytes, env)

        def thunk(private_env: ExecutionEnv) -> None:
            backend.execute(payload.object_bytes, private_env)

        try:
            return run_sandboxed(env, thunk, working_set, self.isolation)
        except UdfPanic as exc:
            raise UdfRuntimeError(f"{path}: {exc}", path=path) from exc

    def _materialize(
        self, container: Container, alias: str, path: str, stack: Tuple[str, ...]
    ) -> DatasetBuffer:
        try:
            meta = container.meta(path)
        except (InvalidPath, NotFound) as exc:
            raise MissingInput(f"input dataset {path} does not exist", path=path) from exc
        if meta.is_udf:
            values = self.decode_and_execute(container, meta.path, stack)
        else:
            values = container.read_dataset(meta.path)
        return DatasetBuffer.readonly(meta.path, alias, values, meta.dtype, meta.shape)

_default_engine: Optional[UdfEngine] = None
_default_engine_lock = threading.Lock()


def get_default_engine() -> UdfEngine:
    global _default_engine
    with _default_engine_lock:
        if _default_engine is None:
            _default_engine = UdfEngine()
        return _default_engine
