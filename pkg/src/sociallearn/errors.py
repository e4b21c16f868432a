"""Exception hierarchy shared by the library and the CLI."""


class SocialLearningError(Exception):
    """Base class for all errors raised by this package."""


class DimensionError(SocialLearningError, ValueError):
    """Two distributions or arrays do not share an alphabet / shape."""


class ParameterError(SocialLearningError, ValueError):
    """A numeric parameter lies outside its admissible range."""


class DegenerateScenarioError(SocialLearningError, ValueError):
    """Every hypothesis is optimal, so there is nothing to learn."""


class ContractViolation(SocialLearningError, RuntimeError):
    """A runtime precondition of an update or analysis was broken."""


class ConfigError(SocialLearningError):
    """Invalid scenario configuration.

    ``line`` is the 1-based line number in the source file when known.
    """

    def __init__(self, message, line=None, source=None):
        self.message = message
        self.line = line
        self.source = source
        super().__init__(str(self))

    def __str__(self):
        where = self.source or "<config>"
        if self.line is not None:
            return f"{where}:{self.line}: {self.message}"
        return f"{where}: {self.message}"
