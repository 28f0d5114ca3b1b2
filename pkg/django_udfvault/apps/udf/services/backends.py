"""
UDF backends and their registry

A backend turns UDF source into object bytes at attach time and executes
those bytes against an ExecutionEnv at read time. Backends write results only
into env.output.data or through lib calls.

    expr    expression language compiled to stack-machine bytecode
    hosted  names a Python function registered by the host application;
            needs a trust profile that allows hosted code
"""
import json
import logging
import threading
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

from django.utils.module_loading import import_string

from apps.container.services.dtypes import DType
from apps.core.conf import udfvault_setting
from apps.core.serialization import canonical_json
from apps.exprlang.exceptions import ExprError
from apps.exprlang.services import bytecode
from apps.exprlang.services.compiler import compile as compile_expression
from apps.exprlang.services.vm import check_budget, evaluate, working_set_bytes
from apps.runtime.services.environment import ExecutionEnv
from apps.runtime.services.lib import UdfLib

from ..exceptions import CompileError, DuplicateBackend, UnknownBackend, UnknownHostedFunction

logger = logging.getLogger(__name__)

HostedFunction = Callable[[UdfLib], None]


@dataclass(frozen=True)
class AttachOptions:
    input_aliases: Tuple[str, ...]
    input_paths: Tuple[str, ...]
    output_path: str
    output_dtype: DType
    output_shape: Tuple[int, ...]


class Backend(ABC):
    name: str = ''
    requires_trust: bool = False

    @abstractmethod
    def compile(self, source: str, options: AttachOptions) -> bytes:
        """
        Raises:
            CompileError: diagnostics from the language front end
        """

    @abstractmethod
    def execute(self, object_bytes: bytes, env: ExecutionEnv) -> None:
        """Fill env.output.data."""

    def preflight(self, object_bytes: bytes, env: ExecutionEnv) -> int:
        """Static checks before execution; returns the extra working set in bytes."""
        return 0

    def options(self, object_bytes: bytes) -> Dict[str, Any]:
        """Options exposed to the UDF through lib.options."""
        return {}


class ExprBackend(Backend):
    """Expression language; the object is a serialized Program."""

    name = 'expr'

    def compile(self, source: str, options: AttachOptions) -> bytes:
        try:
            program = compile_expression(source, options.input_aliases)
        except ExprError as exc:
            raise CompileError(str(exc), offset=exc.offset, backend=self.name) from exc
        return program.serialize()

    def preflight(self, object_bytes: bytes, env: ExecutionEnv) -> int:
        program = bytecode.deserialize(object_bytes)
        check_budget(program, env.output.shape, env.limits.op_budget)
        return working_set_bytes(program, int(udfvault_setting('BLOCK_SIZE')))

    def execute(self, object_bytes: bytes, env: ExecutionEnv) -> None:
        program = bytecode.deserialize(object_bytes)
        env.output.data = evaluate(
            program,
            env.input_map(),
            env.output.shape,
            env.output.dtype,
            budget=env.limits.op_budget,
            cancel_event=env.cancel_event,
        )


def parse_hosted_source(source: str) -> Dict[str, Any]:
    """
    Hosted source is a function name or {"function": name, "options": {...}}.

    Raises:
        CompileError
    """
    text = source.strip()
    if text.startswith('{'):
        try:
            document = json.loads(text)
        except ValueError as exc:
            raise CompileError(f"hosted source is not valid JSON: {exc}", backend='hosted') from exc
        if not isinstance(document, dict):
            raise CompileError("hosted source must be a JSON object", backend='hosted')
        function = document.get('function')
        options = document.get('options', {})
    else:
        function, options = text, {}
    if not isinstance(function, str) or not function.isidentifier():
        raise CompileError(f"{function!r} is not a hosted function name", backend='hosted')
    if not isinstance(options, dict):
        raise CompileError("hosted options must be a JSON object", backend='hosted')
    return {'function': function, 'options': options}


class HostedBackend(Backend):
    """
    Host-registered Python functions; the object is canonical JSON naming the
    function and its options. Functions receive a UdfLib.
    """

    name = 'hosted'
    requires_trust = True

    def __init__(self, functions: Optional[Dict[str, HostedFunction]] = None):
        self._functions: Dict[str, HostedFunction] = dict(functions or {})

    def register_function(self, function: HostedFunction, name: Optional[str] = None) -> None:
        name = name or function.__name__
        if name in self._functions and self._functions[name] is not function:
            raise DuplicateBackend(f"hosted function {name!r} is already registered", name=name)
        self._functions[name] = function

    @property
    def function_names(self) -> List[str]:
        return sorted(self._functions)

    def compile(self, source: str, options: AttachOptions) -> bytes:
        return canonical_json(parse_hosted_source(source))

    def _spec(self, object_bytes: bytes) -> Dict[str, Any]:
        try:
            return parse_hosted_source(object_bytes.decode('utf-8'))
        except (CompileError, UnicodeDecodeError) as exc:
            raise UnknownHostedFunction(f"hosted object is unreadable: {exc}") from exc

    def options(self, object_bytes: bytes) -> Dict[str, Any]:
        return self._spec(object_bytes)['options']

    def execute(self, object_bytes: bytes, env: ExecutionEnv) -> None:
        name = self._spec(object_bytes)['function']
        function = self._functions.get(name)
        if function is None:
            raise UnknownHostedFunction(
                f"no hosted function {name!r}; registered: {', '.join(self.function_names)}",
                function=name,
            )
        logger.debug(f"Running hosted function {name} for {env.output.path}")
        function(UdfLib(env))


class BackendRegistry:
    """Backends by name. Frozen once the application is ready."""

    def __init__(self, backends: Sequence[Backend] = ()):
        self._backends: Dict[str, Backend] = {}
        self._frozen = False
        for backend in backends:
            self.register(backend)

    def register(self, backend: Backend) -> None:
        """
        Raises:
            DuplicateBackend: name taken, or the registry is frozen
        """
        if self._frozen:
            raise DuplicateBackend(
                f"registry is frozen; cannot register {backend.name!r}", name=backend.name
            )
        if backend.name in self._backends:
            raise DuplicateBackend(
                f"backend {backend.name!r} is already registered", name=backend.name
            )
        self._backends[backend.name] = backend
        logger.debug(f"Registered backend {backend.name}")

    def get(self, name: str) -> Backend:
        """
        Raises:
            UnknownBackend
        """
        try:
            return self._backends[name]
        except KeyError:
            raise UnknownBackend(
                f"no backend {name!r}; registered: {', '.join(self.names())}", name=name
            ) from None

    def names(self) -> List[str]:
        return sorted(self._backends)

    def freeze(self) -> 'BackendRegistry':
        self._frozen = True
        return self

    @property
    def frozen(self) -> bool:
        return self._frozen


def register_backend(registry: BackendRegistry, backend: Backend) -> None:
    """
    Raises:
        DuplicateBackend: name taken, or the registry is frozen
    """
    registry.register(backend)


def build_registry(hosted_functions: Optional[Sequence[str]] = None) -> BackendRegistry:
    """
    expr and hosted backends; hosted functions come from dotted paths
    (UDFVAULT HOSTED_FUNCTIONS by default).
    """
    if hosted_functions is None:
        hosted_functions = udfvault_setting('HOSTED_FUNCTIONS')
    hosted = HostedBackend()
    for dotted_path in hosted_functions:
        hosted.register_function(import_string(dotted_path))
    registry = BackendRegistry()
    for backend in (ExprBackend(), hosted):
        register_backend(registry, backend)
    return registry


_default_registry: Optional[BackendRegistry] = None
_default_lock = threading.Lock()


def set_default_registry(registry: BackendRegistry) -> None:
    global _default_registry
    with _default_lock:
        _default_registry = registry


def get_default_registry() -> BackendRegistry:
    global _default_registry
    with _default_lock:
        if _default_registry is None:
            _default_registry = build_registry().freeze()
        return _default_registry
