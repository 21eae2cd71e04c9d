"""Exception types raised across the package."""


class SalienceError(Exception):
    """Base class for all package errors."""


class LoadError(SalienceError, ValueError):
    """Input file failed validation. Carries the file path and 1-based line."""

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where += ": "
        super().__init__(where + message)


class MalformedLine(LoadError):
    pass


class UnknownUser(LoadError):
    pass


class NonInfluencerTarget(LoadError):
    pass


class DuplicateUser(LoadError):
    pass


class DuplicateEdge(LoadError):
    pass


class SelfEdge(LoadError):
    pass


class AudienceUserTagged(LoadError):
    pass


class UnknownDimension(LoadError):
    pass


class DuplicateCategory(LoadError):
    pass


class UnknownSeed(SalienceError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


class EmptyInfluencerSet(SalienceError, ValueError):
    pass


class InvalidDistribution(SalienceError, ValueError):
    pass


class DegeneratePopulation(SalienceError, ValueError):
    """Normalization impossible: fewer than two defined scores or zero spread."""


class DegenerateSample(SalienceError, ValueError):
    """A statistical test cannot run on the given differences."""


class UnknownCategory(SalienceError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


class EmptyDifferenceSet(SalienceError, ValueError):
    pass


class InfeasibleConfig(SalienceError, ValueError):
    pass
