"""Exception types shared across the simulator."""


class ConfigError(ValueError):
    """Invalid configuration or input dimensions."""


class ParseError(ValueError):
    """Malformed IDX file. ``offset`` is the byte position where parsing failed."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte offset {offset})")
        self.offset = offset


class ContractError(ValueError):
    """A caller violated a precondition (layout mismatch, duplicate sample, ...)."""


class NumericError(ArithmeticError):
    """Non-finite values encountered in model parameters or outputs."""
