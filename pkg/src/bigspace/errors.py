"""Exception hierarchy shared by every module in the package."""


class BigraphError(Exception):
    """Base class for all domain errors raised by bigspace."""


# bigraph construction

class InterfaceMismatch(BigraphError):
    def __init__(self, expected, actual, what="interface"):
        self.expected = expected
        self.actual = actual
        super().__init__(f"{what} mismatch: expected {expected}, got {actual}")


class SignatureConflict(BigraphError):
    def __init__(self, control, arities):
        self.control = control
        self.arities = arities
        super().__init__(f"control {control} declared with conflicting shapes {arities}")


class NotPrime(BigraphError):
    pass


class UnknownName(BigraphError):
    def __init__(self, name):
        self.name = name
        super().__init__(f"unknown outer name {name!r}")


# DSL

class LexError(BigraphError):
    def __init__(self, line, col, fragment):
        self.line = line
        self.col = col
        self.fragment = fragment
        super().__init__(f"{line}:{col}: illegal character {fragment!r}")


class ParseError(BigraphError):
    def __init__(self, expected, found, line, col):
        self.expected = expected
        self.found = found
        self.line = line
        self.col = col
        super().__init__(f"{line}:{col}: expected {expected}, found {found}")


class ElaborationError(BigraphError):
    """Raised when a syntactically valid program is semantically wrong."""


class UnknownControl(ElaborationError):
    pass


class ArityMismatch(ElaborationError):
    pass


class UnboundSite(ElaborationError):
    pass


class DuplicateName(ElaborationError):
    pass


# matching and rewriting

class RedexNotSolid(BigraphError):
    def __init__(self, reason):
        self.reason = reason
        super().__init__(f"redex is not solid: {reason}")


class NotGround(BigraphError):
    pass


class SizeLimit(BigraphError):
    pass


class StaleOccurrence(BigraphError):
    pass


class PatternNotSolid(RedexNotSolid):
    pass


# spatial services

class SpatialError(BigraphError):
    pass


class UnknownCategory(SpatialError):
    pass


class DuplicateSiblingLabel(SpatialError):
    pass


class InvalidLabel(SpatialError):
    pass


class MissingLabel(SpatialError):
    def __init__(self, node_id):
        self.node_id = node_id
        super().__init__(f"node {node_id} (or one of its ancestors) has no label")


class NotFound(SpatialError):
    pass


class Ambiguous(SpatialError):
    pass


class AtomicScope(SpatialError):
    pass


class UnknownBoundaryName(SpatialError):
    pass


class ScopeMissing(SpatialError):
    pass


# simulation

class ValidationError(BigraphError):
    def __init__(self, location, message):
        self.location = location
        super().__init__(f"{location}: {message}")


class StaticSchemaViolation(ValidationError):
    def __init__(self, rule, field, problem="is not allowed by its schema"):
        self.rule = rule
        self.field = field
        super().__init__(f"rule {rule}", f"escalation field {field!r} {problem}")
