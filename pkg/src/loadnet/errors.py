"""Exception hierarchy.

Everything raised for bad *data* derives from :class:`DataError` so the CLI
can map it to exit code 2.
"""


class LoadNetError(Exception):
    pass


class DataError(LoadNetError, ValueError):
    pass


class FormatError(DataError):
    """Unreadable input file (bad header, bad magic, ...)."""


class ZeroConsumptionDay(DataError):
    pass


class LengthMismatch(DataError):
    pass


class TooFewCurves(DataError):
    pass


class EmptyGraph(DataError):
    pass


class EmptyCluster(DataError):
    pass


class CoincidentCenters(DataError):
    pass


class DegenerateDensity(DataError):
    pass


class UndefinedForSingleCluster(DataError):
    pass


class InvalidK(DataError):
    pass


class EmptyDirectory(DataError):
    pass


class StaleArtifact(LoadNetError):
    pass


class MissingArtifact(LoadNetError):
    pass
