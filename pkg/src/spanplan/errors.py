"""Exception types raised by the planner."""


class SpanPlanError(Exception):
    """Base class for all spanplan errors."""


class GraphFormatError(SpanPlanError):
    """Malformed join-graph document."""


class SelfLoopError(GraphFormatError):
    """A join predicate references the same table on both sides."""


class UnknownTableError(GraphFormatError):
    """A join or catalog entry references a table that is not declared."""


class DisconnectedGraphError(SpanPlanError):
    """The join graph does not form a single connected component."""


class MissingCardinalityError(SpanPlanError):
    """A cardinality lookup hit a subset that the catalog does not cover."""

    def __init__(self, subset_key: str):
        super().__init__(f"no cardinality for table subset {{{subset_key}}}")
        self.subset_key = subset_key


class LimitExceededError(SpanPlanError):
    """An enumeration would exceed its configured size limit."""


class OptimizeTimeout(SpanPlanError):
    """An enumeration ran past its deadline."""


class PlanValidationError(SpanPlanError):
    """A plan failed a structural or cost-consistency check."""
