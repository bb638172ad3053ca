"""Exception types shared across the package.

All input-shaped failures derive from ValueError so callers can catch one
base class; the CLI maps them to exit code 2. InvariantError signals an
internal inconsistency (a bug), never bad user input.
"""


class InputError(ValueError):
    """An argument is malformed or out of its documented domain."""


class SizeError(InputError):
    """An exhaustive operation was asked to run above its size limit."""


class PreconditionError(InputError):
    """A documented caller obligation does not hold."""


class ParseError(InputError):
    """A file or spec string could not be parsed; message carries a location."""


class InvariantError(RuntimeError):
    """Internal state violates a structural invariant."""
