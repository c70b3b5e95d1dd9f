"""Exception taxonomy shared by every fchi module.

Three failure classes matter to callers: bad input (rejected before any
math runs), genuinely divergent mathematics (an integral or series that
does not exist), and floating-point overflow where the sign of the result
cannot be recovered. The CLI maps them to exit codes 2, 3 and 4.
"""

from __future__ import annotations

__all__ = [
    "FchiError",
    "InputError",
    "DivergenceError",
    "OverflowSaturationError",
]


class FchiError(Exception):
    """Base class for every error raised by this package."""


class InputError(FchiError, ValueError):
    """Malformed distribution spec, parameter outside its domain, bad CLI args."""


class DivergenceError(FchiError, ArithmeticError):
    """A chi integral, series or closed form does not converge for these inputs.

    The message names the violated condition (for example the truncated
    exponential requirement ``i*theta_q - (i-1)*theta_p > 0``).
    """


class OverflowSaturationError(FchiError, OverflowError):
    """A result left float range in a way no signed infinity can express.

    Signed sums beyond float range still return +/-inf whenever the
    rescaled combination resolves their sign.  This error is reserved for
    near-total cancellation at an unrepresentable scale, where reporting
    either infinity would just be a guess.
    """
