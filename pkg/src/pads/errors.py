"""Exception hierarchy.

The harness maps these onto process exit codes: configuration problems exit
with 2, faults raised while the simulation runs exit with 3 and transport
failures exit with 4.
"""


class PadsError(Exception):
    exit_code = 1


class ConfigError(PadsError, ValueError):
    """Invalid configuration. ``path`` is a JSON path such as ``$.pool_size``."""

    exit_code = 2

    def __init__(self, message: str, path: str = "$"):
        super().__init__(f"{path}: {message}")
        self.path = path
        self.detail = message


class LifecycleError(PadsError, RuntimeError):
    exit_code = 2


class RunFault(PadsError, RuntimeError):
    exit_code = 3


class EntityFault(RunFault):
    def __init__(self, entity: int, step: int, cause: BaseException | str):
        super().__init__(f"entity {entity} failed at step {step}: {cause!r}")
        self.entity = entity
        self.step = step
        self.cause = cause


class RoutingFault(RunFault):
    pass


class MigrationFault(RunFault):
    pass


class TransportFault(PadsError, ConnectionError):
    exit_code = 4


class ProtocolError(TransportFault):
    """Malformed wire frame. ``offset`` points at the offending byte."""

    def __init__(self, message: str, offset: int = 0):
        super().__init__(f"{message} (at byte offset {offset})")
        self.offset = offset


class StartupError(TransportFault):
    def __init__(self, host: str, port: int, cause: BaseException | str = ""):
        super().__init__(f"cannot reach endpoint {host}:{port}: {cause}")
        self.host = host
        self.port = port
