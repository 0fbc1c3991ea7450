"""Exception hierarchy.

Every error carries a ``category`` (the class name) so the CLI can print a
single machine-parsable line before exiting non-zero.
"""


class CommitGenError(Exception):
    @property
    def category(self):
        return type(self).__name__


class LineCountMismatch(CommitGenError):
    pass


class EmptyExample(CommitGenError):
    pass


class EmptyVocabulary(CommitGenError):
    pass


class TargetTooSmall(CommitGenError):
    pass


class EmptyCorpus(CommitGenError):
    pass


class ConfigError(CommitGenError):
    pass


class IndexOutOfVocab(CommitGenError):
    pass


class NonFiniteLoss(CommitGenError):
    def __init__(self, batch_id, loss):
        super().__init__(f"non-finite loss {loss} at batch {batch_id}")
        self.batch_id = batch_id
        self.loss = loss


class CheckpointFormatError(CommitGenError):
    pass


class CheckpointMismatch(CommitGenError):
    pass
