"""Exception and warning types shared across the package."""


class HessformError(Exception):
    """Base class for all errors raised by this package."""


class InputError(HessformError, ValueError):
    """Invalid input: wrong shape, non-finite entries, violated precondition."""


class PerronVectorError(InputError):
    """The input vector coincides with the Perron direction where that is disallowed."""


class ClusterAmbiguityError(HessformError):
    """Two eigenvalues straddle the clustering tolerance; the Jordan structure
    cannot be decided reliably."""


class NumericalError(HessformError):
    """A numerical routine failed to meet its accuracy contract."""


class ConstructionDefect(HessformError):
    """A construction that is guaranteed to succeed on valid input failed.

    This signals a bug or a numerically pathological input, never an expected
    infeasibility (those are reported as Obstruction values).
    """


class IllConditionedWarning(UserWarning):
    """A computed basis or transformation is close to singular."""
