"""Exception hierarchy shared by every afekit module.

Each class carries the CLI exit code it maps to, so ``afekit.cli`` can
translate library failures without a lookup table.
"""


class AfeError(Exception):
    exit_code = 1


class FormatError(AfeError):
    """Input file is malformed (bad header, truncated payload)."""

    exit_code = 2


class UnsupportedError(FormatError):
    """Well-formed input using a codec or layout we do not decode."""


class ContractError(AfeError, ValueError):
    """A precondition on the arguments was violated."""

    exit_code = 3


class ShapeError(ContractError):
    pass


class AlignmentError(ContractError):
    """Encoder frame rate does not match ``stride * video_fps``."""

    def __init__(self, enc_rate_hz, expected_rate_hz, message=None):
        self.enc_rate_hz = enc_rate_hz
        self.expected_rate_hz = expected_rate_hz
        super().__init__(
            message
            or f"encoder rate {enc_rate_hz:g} Hz does not match stride x fps = "
            f"{expected_rate_hz:g} Hz"
        )


class NumericalError(AfeError, ArithmeticError):
    exit_code = 3


class ManifestError(AfeError):
    exit_code = 4


class StageError(AfeError):
    """A pipeline stage raised; ``report`` holds the timings gathered so far."""

    def __init__(self, stage_name, report, cause):
        self.stage_name = stage_name
        self.report = report
        self.__cause__ = cause
        super().__init__(f"stage {stage_name!r} failed: {cause}")
