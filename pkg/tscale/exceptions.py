class TimeScaleError(Exception):
    pass


class InvalidTimeScale(TimeScaleError):
    pass


class NotInTimeScale(TimeScaleError):
    pass


class UndefinedJump(TimeScaleError):
    pass


class EmptyWindow(TimeScaleError):
    pass


class QuadratureFailure(TimeScaleError):
    pass


class NotDifferentiablePoint(TimeScaleError):
    pass


class ShiftError(Exception):
    pass


class IncompatibleFamily(ShiftError):
    pass


class OutOfDomain(ShiftError):
    pass


class InvalidDelaySpec(ShiftError):
    pass


class ExponentialError(Exception):
    pass


class NotRegressive(ExponentialError):
    pass


class NegativeOneplus(ExponentialError):
    pass


class PreconditionViolated(ExponentialError):
    pass


class RootError(Exception):
    pass


class OutsideS(RootError):
    pass


class NoSignChange(RootError):
    pass


class NotBracketed(RootError):
    pass


class SimulationError(Exception):
    pass


class NegativeBaseFractionalPower(SimulationError):
    pass


class HistoryGap(SimulationError):
    pass


class FieldGap(SimulationError):
    pass


class CertifyError(Exception):
    pass


class WindowMismatch(CertifyError):
    pass


class NonpositiveTail(CertifyError):
    pass


class ConfigError(ValueError):
    def __init__(self, pointer, message):
        self.pointer = pointer
        super().__init__(f"{pointer or '/'}: {message}")
