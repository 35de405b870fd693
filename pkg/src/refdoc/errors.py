"""Exception types raised across the toolkit."""


class RefdocError(Exception):
    """Base class for all toolkit errors."""


class UnreadableRepo(RefdocError):
    pass


class MalformedJson(RefdocError):
    pass


class UnknownRefactoringKind(RefdocError):
    def __init__(self, name):
        super().__init__(f"unknown refactoring kind: {name!r}")
        self.name = name


class InsufficientCandidates(RefdocError):
    def __init__(self, constraint, available, needed):
        super().__init__(
            f"only {available} candidate commits left after the {constraint} constraint, need {needed}"
        )
        self.constraint = constraint
        self.available = available
        self.needed = needed


class EmptyCorpus(RefdocError):
    pass


class UnsupportedModel(RefdocError):
    pass


class TooFewPerCategory(RefdocError):
    pass


class KTooLarge(RefdocError):
    pass


class EmptyTrainingSet(RefdocError):
    pass


class FoldTooSmall(RefdocError):
    pass


class MalformedTemplate(RefdocError):
    pass


class NotJavaFile(RefdocError):
    pass


class UnclassifiedPath(RefdocError):
    pass
