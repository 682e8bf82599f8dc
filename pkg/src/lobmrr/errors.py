"""Exception hierarchy shared by every module.

The CLI maps these onto exit codes: ``InputError`` -> 1,
``ReconciliationFailure`` -> 2, ``InsufficientData`` -> 3.
"""

from __future__ import annotations


class LobMrrError(Exception):
    pass


class InputError(LobMrrError):
    pass


class MalformedRow(InputError):
    def __init__(self, row: int, reason: str):
        super().__init__(f"row {row}: {reason}")
        self.row = row
        self.reason = reason


class UnknownEventType(MalformedRow):
    pass


class ColumnCountMismatch(MalformedRow):
    pass


class NegativeSize(MalformedRow):
    pass


class NonMonotoneTime(InputError):
    pass


class NonMonotoneTimeWarning(UserWarning):
    pass


class InvalidSpec(InputError):
    pass


class CrossedBook(LobMrrError):
    pass


class EmptySide(LobMrrError):
    pass


class ReconciliationFailure(LobMrrError):
    pass


class InsufficientData(LobMrrError):
    pass


class EmptyInput(InsufficientData):
    pass


class ZeroVariance(InsufficientData):
    pass


class DegenerateAutocorrelation(LobMrrError):
    pass


class PlateauWarning(UserWarning):
    pass
