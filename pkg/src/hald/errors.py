"""Typed errors raised by the detection pipeline.

Every failure mode of the public API maps to one of these classes so that
batch runs can distinguish bad data (exit code 2) from usage errors (1)
and internal bugs (3).
"""


class HaldError(Exception):
    """Base class for all package errors."""


# --- file ingestion ---------------------------------------------------------

class UnreadableFile(HaldError):
    pass


class UnsupportedFormat(HaldError):
    pass


class ZeroDimension(HaldError):
    pass


class ParseError(HaldError):
    def __init__(self, path, line_no, message):
        super().__init__(f"{path}:{line_no}: {message}")
        self.path = path
        self.line_no = line_no


class UnknownLandmark(HaldError):
    def __init__(self, name):
        super().__init__(f"unknown landmark name: {name!r}")
        self.name = name


class DuplicateLandmark(HaldError):
    def __init__(self, name):
        super().__init__(f"duplicate landmark: {name!r}")
        self.name = name


class NameMismatch(HaldError):
    pass


class TooFewCases(HaldError):
    pass


# --- raster operations ------------------------------------------------------

class TileLargerThanImage(HaldError):
    pass


class ImageTooSmall(HaldError):
    pass


class EmptyIntersection(HaldError):
    pass


# --- region model -----------------------------------------------------------

class MissingLandmark(HaldError):
    def __init__(self, case, name):
        super().__init__(f"case {case}: missing landmark {name!r}")
        self.case = case
        self.name = name


# --- chin tracing -----------------------------------------------------------

class NoContourFound(HaldError):
    pass


class DegenerateContour(HaldError):
    pass


class PointNotOnChain(HaldError):
    pass


# --- template matching ------------------------------------------------------

class EmptyTrainingSet(HaldError):
    pass


class NoOverlap(HaldError):
    pass


class DimensionMismatch(HaldError):
    pass


class RegionSmallerThanTemplate(HaldError):
    pass


class InvalidWeights(HaldError):
    pass


# --- line estimation --------------------------------------------------------

class CoincidentPoints(HaldError):
    pass


class TooFewEdgePixels(HaldError):
    pass


class AllPointsCoincident(HaldError):
    pass


class NonMonotonicThresholds(HaldError):
    pass


# --- evaluation / pipeline --------------------------------------------------

class EmptyEvaluation(HaldError):
    pass


class NoMatchingCases(HaldError):
    pass


class ConfigError(HaldError):
    pass
