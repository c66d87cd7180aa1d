"""Exception hierarchy shared across the package."""


class MironError(Exception):
    """Base class for all errors raised by this package."""


class TemplateError(MironError):
    """Base for template-source problems."""


class UnbalancedBracket(TemplateError):
    def __init__(self, position: int, detail: str = ""):
        self.position = position
        super().__init__(f"unbalanced bracket at position {position}" + (f": {detail}" if detail else ""))


class UnknownSlot(TemplateError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"slot '{name}' is not declared")


class EmptyAlternative(TemplateError):
    def __init__(self, position: int):
        self.position = position
        super().__init__(f"empty grammar-field alternative at position {position}")


class PatternTooLarge(MironError):
    def __init__(self, size: int, bound: int):
        self.size = size
        self.bound = bound
        super().__init__(f"compiled pattern of {size} chars exceeds bound {bound}")


class ExpansionExplosion(MironError):
    def __init__(self, count: int, cap: int):
        self.count = count
        self.cap = cap
        super().__init__(f"{count} raw template combinations exceed cap {cap}")


class NoCompleteUtterance(MironError):
    def __init__(self, miron: str):
        self.miron = miron
        super().__init__(f"every expansion of '{miron}' was suppressed by empty/undefined slots")


class DimensionMismatch(MironError):
    pass


class ModelSyntaxError(MironError):
    def __init__(self, line: int, message: str):
        self.line = line
        super().__init__(f"line {line}: {message}")


class DuplicateMironName(MironError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"miron '{name}' declared twice")


class UnknownReference(MironError):
    def __init__(self, name: str, line: int = 0):
        self.name = name
        self.line = line
        super().__init__(f"line {line}: unknown reference '{name}'")


class ArityOverflow(MironError):
    def __init__(self, rule: str, arity: int, bound: int):
        super().__init__(f"rule '{rule}' has a branch of arity {arity}, above the bound {bound}")


class ArtifactError(MironError):
    """Artifact files are missing, tampered with, or inconsistent."""


class SchemaVersionMismatch(ArtifactError):
    def __init__(self, found: str, expected: str):
        super().__init__(f"artifact schema_version {found!r}, expected {expected!r}")


class ArtifactMismatch(MironError):
    """Dictionary and weight matrices disagree on dimensions."""


class IterationLimitExceeded(MironError):
    def __init__(self, limit: int, trace: list):
        self.limit = limit
        self.trace = trace
        super().__init__(f"session did not quiesce within {limit} engine steps")


class DuplicateRegistration(MironError):
    def __init__(self, name: str):
        super().__init__(f"internal action '{name}' already registered")


class ScenarioError(MironError):
    pass
