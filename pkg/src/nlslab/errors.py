"""Exception types shared across the package.

The categories mirror the failure modes surfaced at the interfaces: bad static
configuration, quadrature/convergence problems, misuse of an API, evaluation
outside a function's domain, parameter regimes where a criterion is undefined,
violated sign hypotheses, and sweep brackets that do not bracket.
"""


class NlslabError(Exception):
    """Base class for all package errors."""


class ConfigurationError(NlslabError):
    """Invalid static configuration (unknown keys, bad parameter values)."""


class NumericalError(NlslabError):
    """A numerical routine failed to converge to the requested tolerance."""


class UsageError(NlslabError):
    """API misuse: mismatched shapes, grids, or argument combinations."""


class DomainError(NlslabError):
    """An evaluation point lies outside the mathematical domain."""


class RegimeError(NlslabError):
    """The (dimension, nonlinearity) pair is outside the admissible window."""


class HypothesisError(NlslabError):
    """A sign or ordering hypothesis required by a criterion is violated."""


class BracketError(NlslabError):
    """A bisection bracket does not separate the two behaviours."""
