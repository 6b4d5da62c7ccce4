class PortraitError(Exception):
    """
    Base class for every error raised by the portrait package.
    """


class DimensionError(PortraitError, ValueError):
    """
    Raised when tensor shapes do not compose. The message names the offending axis or layer.
    """


class ParameterError(PortraitError, ValueError):
    """
    Raised for illegal hyperparameters (stride/padding combinations, ratios, kernel parity).
    """


class InputError(PortraitError, ValueError):
    """
    Raised for unusable input data (empty audio, zero vectors, too-small datasets).
    """


class StateError(PortraitError, RuntimeError):
    """
    Raised when an object is used before it reaches the required state.
    """


class ContractError(PortraitError, RuntimeError):
    """
    Raised when a caller breaks an API contract (non-scalar loss, unnormalized audio, preset mismatch).
    """


class NumericalError(PortraitError, FloatingPointError):
    """
    Raised when a NaN or Inf shows up in a forward result.
    """


class TrainingDivergedError(NumericalError):

    def __init__(self, message: str, epoch: int, step: int, terms: dict):
        super().__init__(f'{message} (epoch={epoch}, step={step}, terms={terms})')
        self.epoch = epoch
        self.step = step
        self.terms = terms


class FrozenParameterError(StateError):
    """
    Raised when parameters that must stay frozen have changed.
    """


class CheckpointFormatError(InputError):
    """
    Raised when a binary artifact has a wrong magic, version or truncated payload.
    """
