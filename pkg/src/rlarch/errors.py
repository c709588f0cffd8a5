"""Exception hierarchy shared by every component."""

from __future__ import annotations


class RLArchError(Exception):
    """Base class for all errors raised by this package."""


class InvalidArgument(RLArchError, ValueError):
    pass


# -- environment -------------------------------------------------------------
class InvalidParams(InvalidArgument):
    pass


class InvalidAction(InvalidArgument):
    pass


class EpisodeFinished(RLArchError, RuntimeError):
    pass


class NotInitialized(RLArchError, RuntimeError):
    pass


class SimulatorError(RLArchError, RuntimeError):
    pass


# -- agent -------------------------------------------------------------------
class UnsupportedApproximator(RLArchError, TypeError):
    pass


class EmptyBuffer(RLArchError, LookupError):
    pass


class NoConvergence(RLArchError, RuntimeError):
    pass


# -- orchestrator ------------------------------------------------------------
class ConfigSyntaxError(RLArchError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{message} (line {line}, column {column})")
        self.line = line
        self.column = column


class ConfigInvalid(RLArchError):
    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


class MissingAgent(RLArchError, LookupError):
    def __init__(self, agent_id: str):
        super().__init__(f"missing agent {agent_id!r}")
        self.agent_id = agent_id


class CollectionFailed(RLArchError, RuntimeError):
    def __init__(self, worker_index: int, cause: BaseException):
        super().__init__(f"worker {worker_index} failed: {cause!r}")
        self.worker_index = worker_index
        self.cause = cause


class RunFailed(RLArchError, RuntimeError):
    """A learner or environment error surfaced during a run, with run context."""

    def __init__(self, run_id: str, global_step: int, cause: BaseException):
        super().__init__(f"run {run_id!r} failed at global step {global_step}: {cause!r}")
        self.run_id = run_id
        self.global_step = global_step
        self.cause = cause


# -- experiment --------------------------------------------------------------
class InvalidSpaceForGrid(InvalidArgument):
    pass


class InvalidVariant(InvalidArgument):
    pass


class ExperimentAborted(RLArchError, RuntimeError):
    def __init__(self, message: str, report=None, cause: BaseException | None = None):
        super().__init__(message)
        self.report = report
        self.cause = cause


class TuneFailed(RLArchError, RuntimeError):
    def __init__(self, causes: dict):
        lines = ", ".join(f"{k}: {v}" for k, v in causes.items())
        super().__init__(f"every candidate failed ({lines})")
        self.causes = causes


# -- persistence -------------------------------------------------------------
class PersistenceError(RLArchError, OSError):
    pass


class VersionMismatch(PersistenceError):
    pass


class InconsistentState(RLArchError, RuntimeError):
    pass


class ConfigMismatch(RLArchError):
    pass


# -- monitoring --------------------------------------------------------------
class LogError(RLArchError, OSError):
    pass


class InvalidRecord(InvalidArgument):
    pass


class ReportError(RLArchError):
    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


class RenderUnsupported(RLArchError):
    pass


class InvalidFrame(InvalidArgument):
    pass


class RecorderClosed(RLArchError, RuntimeError):
    pass
