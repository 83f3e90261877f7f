"""Exception taxonomy shared by every trajcf module.

The CLI maps these onto its exit codes (input error -> 2, numerical
error -> 3, model/probe mismatch -> 4); library users can catch them
individually or via the common base class.
"""

from __future__ import annotations


class TrajcfError(Exception):
    """Base class for all trajcf errors."""


class InputError(TrajcfError):
    """Malformed or out-of-contract input: bad CSV, invalid degrees,
    dimension caps exceeded, corrupt or truncated model files."""


class NumericalError(TrajcfError):
    """A computation cannot proceed: singular moment matrix at epsilon = 0,
    downdate breaking positive semidefiniteness, non-finite intermediates."""


class MismatchError(TrajcfError):
    """Model and probe disagree on dimensions or domain."""
