"""Exception types shared across the package."""


class FwsimpError(Exception):
    """Base class for all fwsimp errors."""


class ParseError(FwsimpError):
    """Malformed iptables-save input."""

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = f" (line {line}" + (f", column {column}" if column is not None else "") + ")"
        super().__init__(message + where)


class WellFormednessError(FwsimpError):
    """A jump names a chain that is not declared."""


class TopLevelReturnError(FwsimpError):
    """A Return rule matched outside of any called chain."""


class DepthExhaustedError(FwsimpError):
    """Chain call recursion exceeded its budget (indicates a call loop)."""


class UndefinedChainError(FwsimpError):
    """A Call rule targets a chain missing from the ruleset."""


class NotConvergedError(FwsimpError):
    """Unfolding did not reach a Call/Return-free list within its bound."""


class UnsupportedActionError(FwsimpError):
    """Operation requires a fully unfolded Accept/Drop rule list."""


class BlowupLimitExceededError(FwsimpError):
    """Normalization would exceed the configured output size cap."""

    def __init__(self, message, rule_index=None):
        self.rule_index = rule_index
        if rule_index is not None:
            message = f"{message} (rule index {rule_index})"
        super().__init__(message)


class UniverseTooLargeError(FwsimpError):
    """Packet universe exceeds the configured enumeration cap."""


class NotNnfError(FwsimpError):
    """Match expression is not in negation normal form."""


class NotEmittableError(FwsimpError):
    """Rule cannot be expressed as a single iptables-save line."""


class UnknownPrimitiveError(FwsimpError):
    """An opaque primitive was evaluated under an 'error' assumption."""

    def __init__(self, primitive):
        self.primitive = primitive
        super().__init__(f"cannot decide opaque match condition: {primitive!r}")
