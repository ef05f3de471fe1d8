"""Exception types raised across the package."""


class CpdforgeError(Exception):
    """Base class for all package errors."""


class DataError(CpdforgeError, ValueError):
    """Problem with input data (format, shape, content)."""


class FormatError(DataError):
    pass


class EmptyInputError(DataError):
    pass


class DegenerateVariableError(DataError):
    pass


class TooFewRowsError(DataError):
    pass


class VariableMismatchError(DataError):
    pass


class GraphError(CpdforgeError, ValueError):
    pass


class CycleError(GraphError):
    def __init__(self, cycle, names=None):
        self.cycle = list(cycle)
        label = [names[i] for i in self.cycle] if names is not None else self.cycle
        super().__init__("cycle detected: " + " -> ".join(map(str, label + label[:1])))


class SelfLoopError(GraphError):
    pass


class ParameterError(CpdforgeError, ValueError):
    """Invalid argument or configuration value."""


class SizeError(ParameterError):
    pass


class AssignmentError(CpdforgeError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else ""


class NumericError(CpdforgeError, ArithmeticError):
    """Non-finite values or failed numerical routine."""


class NodeLookupError(CpdforgeError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else ""
