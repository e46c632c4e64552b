"""Exception taxonomy shared by every module in the package.

The command line maps these onto exit codes (bad configuration or input
is exit 2, numeric trouble during training is exit 3), so library code
should raise the most specific class that applies and put anything a
person would need for debugging into the message.
"""


class SimulationError(Exception):
    """Base class for everything raised deliberately by this package."""


class ConfigurationError(SimulationError):
    """A parameter is out of range, missing, or internally inconsistent."""


class InputError(SimulationError):
    """Runtime data (arrays, datasets, files) violates a precondition."""


class ParseError(SimulationError):
    """A file could not be decoded.  Carries the path and, for text
    formats, the 1-based line number of the offending record."""

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        location = ""
        if path is not None:
            location = f"{path}: " if line is None else f"{path}:{line}: "
        super().__init__(location + message)


class NumericError(SimulationError):
    """A computation produced non-finite values or failed to converge."""


class AggregationError(SimulationError):
    """Client models could not be averaged (shape mismatch, bad sizes)."""


class UndefinedRecallError(SimulationError):
    """Recall was requested on data containing no positive labels."""


class ClientFailure(SimulationError):
    """A client's local training failed, aborting the federated round.

    Wraps the original exception and records where it happened so the
    operator can locate the bad client without reading a stack trace.
    """

    def __init__(self, slice_name, client_id, round_index, cause):
        self.slice_name = slice_name
        self.client_id = client_id
        self.round_index = round_index
        self.cause = cause
        super().__init__(
            f"client {client_id} of slice {slice_name} failed in round "
            f"{round_index}: {cause}"
        )
