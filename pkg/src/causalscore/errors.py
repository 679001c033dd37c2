"""Exception hierarchy.

Every error carries a distinct ``exit_code`` that the command-line front end
uses as its process status.
"""


class CausalScoreError(Exception):
    exit_code = 1


class LengthMismatch(CausalScoreError, ValueError):
    exit_code = 10


class NonBinaryTreatment(CausalScoreError, ValueError):
    exit_code = 11

    def __init__(self, message, line=None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


class NotPositiveSemiDefinite(CausalScoreError, ValueError):
    exit_code = 12


class InvalidConfig(CausalScoreError, ValueError):
    exit_code = 13


class PropensityOutOfRange(CausalScoreError, ValueError):
    exit_code = 14


class MissingArm(CausalScoreError, ValueError):
    exit_code = 15


class MissingSurrogate(CausalScoreError, ValueError):
    exit_code = 16


class DegenerateTarget(CausalScoreError, ValueError):
    exit_code = 17


class DimensionMismatch(CausalScoreError, ValueError):
    exit_code = 18


class EmptyArmInStratum(CausalScoreError, ValueError):
    exit_code = 19


class MisalignedInputs(CausalScoreError, ValueError):
    exit_code = 20


class TooFewUnits(CausalScoreError, ValueError):
    exit_code = 21


class GridMismatch(CausalScoreError, ValueError):
    exit_code = 22


class EmptySelection(CausalScoreError, ValueError):
    exit_code = 23


class MissingColumn(CausalScoreError, ValueError):
    exit_code = 24


class MalformedRow(CausalScoreError, ValueError):
    exit_code = 25

    def __init__(self, message, line=None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


class InvalidSplitSize(CausalScoreError, ValueError):
    exit_code = 26


class IoFailure(CausalScoreError, OSError):
    exit_code = 27


class SchemaVersionMismatch(CausalScoreError, ValueError):
    exit_code = 28


class UnknownMetric(CausalScoreError, ValueError):
    exit_code = 29


class UnknownFigure(CausalScoreError, ValueError):
    exit_code = 30
