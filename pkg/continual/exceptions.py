class E2NetError(Exception):
    """Base class for every error raised by the continual-learning engine."""


class ShapeError(E2NetError, ValueError):
    pass


class ParameterError(E2NetError, ValueError):
    pass


class StateError(E2NetError, RuntimeError):
    pass


class NumericError(E2NetError, ArithmeticError):
    def __init__(self, message, layer_index=None):
        super().__init__(message)
        self.layer_index = layer_index


class FormatError(E2NetError, ValueError):
    def __init__(self, message, offset):
        super().__init__(f'{message} (at byte offset {offset})')
        self.offset = offset


class ConsistencyError(E2NetError, ValueError):
    pass


class IncompatibleCheckpointError(E2NetError):
    def __init__(self, found, expected):
        super().__init__(f'Incompatible file header {found!r}, expected {expected!r}')
        self.found = found
        self.expected = expected
