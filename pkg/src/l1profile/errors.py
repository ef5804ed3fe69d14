"""Exception hierarchy.

Input problems (bad files, out-of-range locations, mismatched artifacts)
derive from :class:`ValidationError`; failures of a numerical procedure on
otherwise valid input derive from :class:`FitError`.
"""


class L1ProfileError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(L1ProfileError, ValueError):
    """Input violates a documented precondition."""


class ParseError(ValidationError):
    """Malformed CSV input; ``row`` is the 1-based physical line number."""

    def __init__(self, message, row=None):
        self.row = row
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)


class OutOfDomain(ValidationError):
    def __init__(self, locations, lo, hi):
        self.locations = list(locations)
        shown = ", ".join(repr(float(v)) for v in self.locations[:10])
        more = "" if len(self.locations) <= 10 else f" (+{len(self.locations) - 10} more)"
        super().__init__(f"locations outside [{lo!r}, {hi!r}]: {shown}{more}")


class FingerprintMismatch(ValidationError):
    pass


class FitError(L1ProfileError):
    """A numerical procedure could not produce a result."""


class EmptyWindow(FitError):
    def __init__(self, location=None, bandwidth=None):
        self.location = location
        self.bandwidth = bandwidth
        if location is None:
            msg = "total weight is zero"
        else:
            msg = (f"no data with positive kernel weight near x={location!r} "
                   f"at bandwidth {bandwidth!r}; enlarge the bandwidth")
        super().__init__(msg)


class InsufficientProfiles(FitError):
    pass


class NoFeasibleBandwidth(FitError):
    pass


class DegenerateCenters(FitError):
    pass


class AlphaInfeasible(FitError):
    def __init__(self, flag_count, alpha, limit):
        self.flag_count = flag_count
        super().__init__(
            f"no significance level satisfies the overall budget: at alpha={alpha:g}, "
            f"{flag_count} Phase I profiles are flagged (need < {limit:g})")


class RankDeficient(FitError):
    pass
