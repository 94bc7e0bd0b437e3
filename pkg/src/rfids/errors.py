"""Exception hierarchy; ``category`` drives CLI exit codes and messages."""


class RfidsError(Exception):
    category = "error"
    exit_code = 1


class ConfigError(RfidsError, ValueError):
    category = "config"
    exit_code = 2


class AssemblyError(RfidsError, ValueError):
    category = "assembly"
    exit_code = 3

    def __init__(self, message, index=None):
        if index is not None:
            message = f"sweep {index}: {message}"
        super().__init__(message)
        self.index = index


class SliceError(RfidsError, ValueError):
    category = "slice"
    exit_code = 3


class FormatError(RfidsError, ValueError):
    category = "format"
    exit_code = 4


class TrainingError(RfidsError, RuntimeError):
    category = "training"
    exit_code = 5

    def __init__(self, message, epoch=None):
        if epoch is not None:
            message = f"epoch {epoch}: {message}"
        super().__init__(message)
        self.epoch = epoch
