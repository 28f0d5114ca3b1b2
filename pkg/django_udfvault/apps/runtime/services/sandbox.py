"""
Sandboxed execution of UDF thunks

A thunk receives a private copy of the ExecutionEnv and writes only into its
private output buffer. The caller receives that buffer only when the thunk
finishes inside the limits; on any failure the output is discarded.

Isolation levels:
- THREAD: daemon thread joined with the wall timeout; a timed-out thread has
  its cancel event set and is abandoned together with its output
- PROCESS: forked child, terminated on timeout; the output is shipped back
  through a pipe. The child's address space is capped at its size when
  forked plus the memory cap, so runaway allocations fail with MemoryError
"""
import logging
import multiprocessing
import os
import threading
from enum import Enum
from typing import Any, Callable, Dict, Optional

import numpy as np

from apps.core.conf import udfvault_setting
from apps.core.exceptions import UdfVaultError
from apps.exprlang.exceptions import EvaluationCancelled

from ..exceptions import MemoryCapExceeded, Timeout, UdfPanic
from .environment import ExecutionEnv

try:
    import resource
except ImportError:  # pragma: no cover
    resource = None

logger = logging.getLogger(__name__)

Thunk = Callable[[ExecutionEnv], None]

# Interpreter and pipe overhead allowed on top of the cap in a forked child.
RLIMIT_HEADROOM = 64 * 1024 * 1024


class Isolation(Enum):
    THREAD = 'thread'
    PROCESS = 'process'


def _translate(exc: BaseException) -> UdfVaultError:
    if isinstance(exc, EvaluationCancelled):
        return Timeout(str(exc))
    if isinstance(exc, UdfVaultError):
        return exc
    if isinstance(exc, MemoryError):
        return MemoryCapExceeded(f"UDF ran out of memory: {exc}")
    return UdfPanic(f"{type(exc).__name__}: {exc}", exception=type(exc).__name__)


def check_memory(env: ExecutionEnv, working_set: int = 0) -> int:
    """
    Raises:
        MemoryCapExceeded: output buffer plus working set is above the cap
    """
    required = env.output.nbytes + int(working_set)
    if required > env.limits.memory_cap:
        raise MemoryCapExceeded(
            f"{env.output.path} needs {required} bytes, cap is {env.limits.memory_cap}",
            required=required,
            cap=env.limits.memory_cap,
        )
    return required


def address_space_in_use() -> Optional[int]:
    try:
        with open('/proc/self/statm') as handle:
            pages = int(handle.read().split()[0])
    except (OSError, ValueError, IndexError):
        return None
    return pages * os.sysconf('SC_PAGE_SIZE')


def limit_address_space(memory_cap: int, output_bytes: int = 0) -> Optional[int]:
    """
    Cap this process's address space at its current size plus memory_cap.

    The output buffer is counted twice because it is pickled for the pipe.

    Returns:
        The soft limit applied, or None when the platform cannot apply one
    """
    if resource is None or not hasattr(resource, 'RLIMIT_AS'):
        return None
    in_use = address_space_in_use()
    if in_use is None:
        return None
    limit = in_use + int(memory_cap) + int(output_bytes) + RLIMIT_HEADROOM
    _, hard = resource.getrlimit(resource.RLIMIT_AS)
    if hard != resource.RLIM_INFINITY:
        limit = min(limit, hard)
    try:
        resource.setrlimit(resource.RLIMIT_AS, (limit, hard))
    except (ValueError, OSError) as exc:
        logger.warning(f"Could not cap the UDF address space: {exc}")
        return None
    return limit


def _run_in_thread(env: ExecutionEnv, thunk: Thunk) -> np.ndarray:
    private = env.private_copy()
    outcome: Dict[str, Any] = {}

    def target() -> None:
        try:
            thunk(private)
        except BaseException as exc:
            outcome['error'] = exc

    worker = threading.Thread(target=target, name=f'udf:{env.output.path}', daemon=True)
    worker.start()
    worker.join(env.limits.wall_timeout)
    if worker.is_alive():
        private.cancel_event.set()
        logger.warning(
            f"UDF {env.output.path} exceeded {env.limits.wall_timeout}s; abandoning its thread"
        )
        raise Timeout(
            f"{env.output.path} did not finish within {env.limits.wall_timeout}s",
            wall_timeout=env.limits.wall_timeout,
        )
    if 'error' in outcome:
        error = outcome['error']
        translated = _translate(error)
        if translated is error:
            raise error
        raise translated from error
    return private.output.data


def _child_main(env: ExecutionEnv, thunk: Thunk, connection) -> None:
    try:
        limit_address_space(env.limits.memory_cap, env.output.nbytes)
        thunk(env)
        connection.send(('ok', env.output.data))
    except BaseException as exc:
        error = _translate(exc)
        try:
            connection.send(('error', error))
        except Exception:
            connection.send(('error', UdfPanic(str(error))))
    finally:
        connection.close()


def _run_in_process(env: ExecutionEnv, thunk: Thunk) -> np.ndarray:
    try:
        context = multiprocessing.get_context('fork')
    except ValueError:
        logger.warning("fork is unavailable on this platform; falling back to thread isolation")
        return _run_in_thread(env, thunk)

    private = env.private_copy()
    receiver, sender = context.Pipe(duplex=False)
    child = context.Process(
        target=_child_main, args=(private, thunk, sender), name=f'udf:{env.output.path}'
    )
    child.start()
    sender.close()
    try:
        if not receiver.poll(env.limits.wall_timeout):
            child.terminate()
            child.join()
            raise Timeout(
                f"{env.output.path} did not finish within {env.limits.wall_timeout}s",
                wall_timeout=env.limits.wall_timeout,
            )
        try:
            status, value = receiver.recv()
        except EOFError as exc:
            raise UdfPanic(f"UDF process exited with code {child.exitcode}") from exc
    finally:
        receiver.close()
        child.join(1.0)
        if child.is_alive():
            child.terminate()

    if status == 'error':
        raise value
    return value


def run_sandboxed(
    env: ExecutionEnv,
    thunk: Thunk,
    working_set: int = 0,
    isolation: Optional[str] = None,
) -> np.ndarray:
    """
    Run thunk under the environment's limits.

    Args:
        env: Fully materialized environment
        thunk: Callable filling env.output.data of the environment it receives
        working_set: Extra bytes the thunk needs besides the output buffer
        isolation: 'thread' or 'process' (UDFVAULT SANDBOX_ISOLATION by default)

    Returns:
        The output buffer, reshaped to the output shape; also stored on
        env.output.data

    Raises:
        Timeout, MemoryCapExceeded, CapabilityDenied, UdfPanic, or any other
        udfvault error raised inside the thunk
    """
    check_memory(env, working_set)
    level = Isolation(isolation or udfvault_setting('SANDBOX_ISOLATION'))
    logger.debug(f"Running {env.output.path} with {level.value} isolation")

    if level is Isolation.PROCESS:
        data = _run_in_process(env, thunk)
    else:
        data = _run_in_thread(env, thunk)

    env.output.data = data
    return data.reshape(env.output.shape)
