"""Exception hierarchy.

Every domain error derives from :class:`ModWeibullError` (a ``ValueError``) so
callers, and the CLI, can catch one type and map it to exit code 2.
"""
from __future__ import annotations


class ModWeibullError(ValueError):
    """Base class for validation and domain errors."""


class InvalidConfig(ModWeibullError):
    pass


# dataset
class MalformedRow(ModWeibullError):
    def __init__(self, line: int, message: str):
        self.line = line
        super().__init__(f"line {line}: {message}")


class MissingColumn(ModWeibullError):
    pass


class InvalidStatus(MalformedRow):
    pass


class NegativeAge(MalformedRow):
    pass


class UnknownCondition(ModWeibullError):
    pass


class EmptyDataset(ModWeibullError):
    pass


class TooFewRows(ModWeibullError):
    pass


# models
class ImproperDistribution(ModWeibullError):
    pass


# estimation
class TooFewUsableRows(ModWeibullError):
    pass


class DegenerateSlope(ModWeibullError):
    pass


class NoConvergence(ModWeibullError):
    pass


class DegenerateSample(ModWeibullError):
    pass


class SamplesBelowGamma(ModWeibullError):
    pass


class AllCandidatesFailed(ModWeibullError):
    pass


# ensemble
class EmptyTestSet(ModWeibullError):
    pass


class NoSuitableModels(ModWeibullError):
    pass


class ZeroMseMember(ModWeibullError):
    pass


# forecast
class ZeroAge(ModWeibullError):
    def __init__(self, message: str, asset_id: str | None = None):
        self.asset_id = asset_id
        super().__init__(message)


class MissingLoss(ModWeibullError):
    def __init__(self, message: str, asset_id: str | None = None):
        self.asset_id = asset_id
        super().__init__(message)
