#!/usr/bin/env python3
"""
Error types for the flocking simulator
Each error carries the process exit status the CLI reports for it
"""

from typing import Optional


class FlockingError(Exception):
    """Base class for all simulator errors"""
    exit_code = 1


class ConfigurationError(FlockingError):
    """Inputs with inconsistent dimensions or sizes"""
    exit_code = 4


class ContractViolation(FlockingError):
    """A precondition of an operation was breached by the caller"""
    exit_code = 1


class ScenarioParseError(FlockingError):
    """Scenario file could not be read as sectioned key/value text"""
    exit_code = 3

    def __init__(self, message: str, path: Optional[str] = None, line: Optional[int] = None):
        self.path = path
        self.line = line
        location = path or "<scenario>"
        if line is not None:
            location = f"{location}:{line}"
        super().__init__(f"{location}: {message}")


class ScenarioValidationError(FlockingError):
    """Scenario parsed but a value is missing, unknown or out of range"""
    exit_code = 4

    def __init__(self, message: str, key_path: str = ""):
        self.key_path = key_path
        super().__init__(f"{key_path}: {message}" if key_path else message)


class UnitError(ScenarioValidationError):
    """Quantity given with a unit of the wrong dimension (or none)"""


class NumericalDivergenceError(FlockingError):
    """Integrated state became non-finite"""
    exit_code = 5


class SingularityError(NumericalDivergenceError):
    """Plant evaluated at a singular configuration"""


class SafetyViolationError(FlockingError):
    """A pair of agents left the region the potentials are built to keep them in"""
    exit_code = 6

    def __init__(self, message: str, pair=None, distance: Optional[float] = None, time: Optional[float] = None):
        self.reason = message
        self.pair = pair
        self.distance = distance
        self.time = time
        details = []
        if pair is not None:
            details.append(f"pair={pair}")
        if distance is not None:
            details.append(f"d={distance:.6g} m")
        if time is not None:
            details.append(f"t={time:.6g} s")
        super().__init__(f"{message} ({', '.join(details)})" if details else message)


class CollisionError(SafetyViolationError):
    """Two agents at zero separation"""


class BarrierViolationError(SafetyViolationError):
    """Initially connected pair reached the sensing radius"""


class VerificationFailure(FlockingError):
    """At least one property check failed"""
    exit_code = 7


class OutputError(FlockingError):
    """Result file could not be written or read back"""
    exit_code = 1

    def __init__(self, message: str, path: Optional[str] = None):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)
