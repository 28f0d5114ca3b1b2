"""
UDF metadata: the JSON header of a payload

    {
      "backend": "expr",
      "bytecode_size": 42,
      "input_aliases": ["nir", "red"],
      "input_datasets": ["/Band5", "/Band4"],
      "output_dataset": "/NDVI",
      "output_datatype": "float64",
      "output_resolution": [1440, 720],
      "resolution_padding": "<33 spaces>",
      "signature": {"email": "...", "name": "...",
                    "payload_signature": "<base64>", "public_key": "<base64>"},
      "source_code": ""
    }

resolution_padding pads every extent to RESOLUTION_WIDTH decimal digits, so the
header length does not depend on the grid size. It is recomputed on write; a
stored header whose padding disagrees is not canonical.

Headers written by older tools may lack input_aliases (aliases default to the
dataset basenames) and payload_signature (the payload then never verifies).
Compound outputs name their type "compound"; the member layout is taken from
the container index.
"""
from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Optional, Tuple

from apps.container.exceptions import DTypeError
from apps.container.services.dtypes import DType, parse_dtype_name
from apps.core.serialization import canonical_json

from ..exceptions import MalformedHeader

COMPOUND = 'compound'
# Decimal digits reserved per extent; a u64 extent never needs more.
RESOLUTION_WIDTH = 20

_REQUIRED = (
    'backend',
    'bytecode_size',
    'input_datasets',
    'output_dataset',
    'output_datatype',
    'output_resolution',
    'signature',
)


def resolution_padding(resolution: Tuple[int, ...]) -> str:
    return ' ' * sum(max(0, RESOLUTION_WIDTH - len(str(extent))) for extent in resolution)


def _basename(path: str) -> str:
    return path.rstrip('/').rsplit('/', 1)[-1]


def _text(data: Dict[str, Any], key: str, where: str = 'header') -> str:
    value = data.get(key, '')
    if not isinstance(value, str):
        raise MalformedHeader(f"{where} field {key!r} must be text", field=key)
    return value


def _text_list(data: Dict[str, Any], key: str) -> Tuple[str, ...]:
    value = data[key]
    if not isinstance(value, list) or not all(isinstance(item, str) for item in value):
        raise MalformedHeader(f"header field {key!r} must be a list of text", field=key)
    return tuple(value)


@dataclass(frozen=True)
class SignatureBlock:
    name: str
    email: str
    public_key: str
    payload_signature: str = ''

    def to_dict(self, include_signature: bool = True) -> Dict[str, str]:
        data = {'email': self.email, 'name': self.name, 'public_key': self.public_key}
        if include_signature and self.payload_signature:
            data['payload_signature'] = self.payload_signature
        return data

    @classmethod
    def from_dict(cls, data: Any) -> 'SignatureBlock':
        if not isinstance(data, dict):
            raise MalformedHeader("header field 'signature' must be an object", field='signature')
        return cls(
            name=_text(data, 'name', 'signature'),
            email=_text(data, 'email', 'signature'),
            public_key=_text(data, 'public_key', 'signature'),
            payload_signature=_text(data, 'payload_signature', 'signature'),
        )


@dataclass(frozen=True)
class UdfMetadata:
    backend: str
    bytecode_size: int
    input_datasets: Tuple[str, ...]
    output_dataset: str
    output_datatype: str
    output_resolution: Tuple[int, ...]
    signature: SignatureBlock
    source_code: str = ''
    input_aliases: Tuple[str, ...] = field(default=())

    def __post_init__(self):
        object.__setattr__(self, 'input_datasets', tuple(self.input_datasets))
        object.__setattr__(self, 'output_resolution', tuple(self.output_resolution))
        aliases = tuple(self.input_aliases) or tuple(_basename(p) for p in self.input_datasets)
        object.__setattr__(self, 'input_aliases', aliases)
        self.validate()

    def validate(self) -> None:
        """
        Raises:
            MalformedHeader
        """
        if not self.backend:
            raise MalformedHeader("header names no backend", field='backend')
        if isinstance(self.bytecode_size, bool) or not isinstance(self.bytecode_size, int):
            raise MalformedHeader("bytecode_size must be an integer", field='bytecode_size')
        if self.bytecode_size < 0:
            raise MalformedHeader("bytecode_size must be >= 0", field='bytecode_size')
        if len(self.input_aliases) != len(self.input_datasets):
            raise MalformedHeader(
                f"{len(self.input_aliases)} input aliases for "
                f"{len(self.input_datasets)} input datasets",
                field='input_aliases',
            )
        if not self.output_resolution or any(
            isinstance(extent, bool) or not isinstance(extent, int) or extent < 1
            for extent in self.output_resolution
        ):
            raise MalformedHeader(
                f"output_resolution {list(self.output_resolution)} must be extents >= 1",
                field='output_resolution',
            )
        if self.output_datatype != COMPOUND:
            try:
                parse_dtype_name(self.output_datatype)
            except DTypeError as exc:
                raise MalformedHeader(
                    f"unsupported output_datatype {self.output_datatype!r}",
                    field='output_datatype',
                ) from exc

    @property
    def output_dtype(self) -> Optional[DType]:
        """Parsed output type; None for compound outputs."""
        if self.output_datatype == COMPOUND:
            return None
        return parse_dtype_name(self.output_datatype)

    @property
    def inputs(self) -> List[Tuple[str, str]]:
        """(alias, dataset path) pairs in declaration order."""
        return list(zip(self.input_aliases, self.input_datasets))

    def with_signature(self, payload_signature: str) -> 'UdfMetadata':
        return replace(self, signature=replace(self.signature, payload_signature=payload_signature))

    def to_dict(self, include_signature: bool = True) -> Dict[str, Any]:
        return {
            'backend': self.backend,
            'bytecode_size': self.bytecode_size,
            'input_aliases': list(self.input_aliases),
            'input_datasets': list(self.input_datasets),
            'output_dataset': self.output_dataset,
            'output_datatype': self.output_datatype,
            'output_resolution': list(self.output_resolution),
            'resolution_padding': resolution_padding(self.output_resolution),
            'signature': self.signature.to_dict(include_signature),
            'source_code': self.source_code,
        }

    def header_bytes(self) -> bytes:
        return canonical_json(self.to_dict())

    def signed_header_bytes(self) -> bytes:
        """Canonical header without payload_signature; the signed prefix."""
        return canonical_json(self.to_dict(include_signature=False))

    @classmethod
    def from_dict(cls, data: Any) -> 'UdfMetadata':
        """
        Raises:
            MalformedHeader: missing or mistyped fields
        """
        if not isinstance(data, dict):
            raise MalformedHeader("payload header must be a JSON object")
        missing = [key for key in _REQUIRED if key not in data]
        if missing:
            raise MalformedHeader(f"header lacks {', '.join(missing)}", missing=missing)
        resolution = data['output_resolution']
        if not isinstance(resolution, list):
            raise MalformedHeader(
                "header field 'output_resolution' must be a list", field='output_resolution'
            )
        padding = _text(data, 'resolution_padding')
        if padding.strip(' '):
            raise MalformedHeader(
                "header field 'resolution_padding' must hold only spaces",
                field='resolution_padding',
            )
        aliases = _text_list(data, 'input_aliases') if 'input_aliases' in data else ()
        return cls(
            backend=_text(data, 'backend'),
            bytecode_size=data['bytecode_size'],
            input_datasets=_text_list(data, 'input_datasets'),
            output_dataset=_text(data, 'output_dataset'),
            output_datatype=_text(data, 'output_datatype'),
            output_resolution=tuple(resolution),
            signature=SignatureBlock.from_dict(data['signature']),
            source_code=_text(data, 'source_code'),
            input_aliases=aliases,
        )
