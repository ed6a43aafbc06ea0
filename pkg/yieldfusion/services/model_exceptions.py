"""
Fusion Model Exceptions
Errors for model construction, training and checkpoint IO.
"""


class ModelError(Exception):
    """Base exception for model operations"""

    pass


class InvalidConfigError(ModelError):
    """Model or training configuration violates an invariant"""

    pass


class ChannelLengthMismatchError(ModelError):
    """Input channel does not match the configured width"""

    pass


class EmptyDatasetError(ModelError):
    """Training requested without training records"""

    pass


class TrainingDivergedError(ModelError):
    """Non-finite loss or parameters during training"""

    def __init__(self, epoch: int, step: int, detail: str):
        self.epoch = epoch
        self.step = step
        super().__init__(
            f"Training diverged at epoch {epoch}, step {step}: {detail}"
        )


class EmptyGridError(ModelError):
    """Hyper-parameter search over an empty grid"""

    pass


class CheckpointError(ModelError):
    """Base exception for checkpoint IO"""

    pass


class CheckpointIoError(CheckpointError):
    """Checkpoint file unreadable, unwritable or truncated"""

    pass


class BadMagicError(CheckpointError):
    """File is not a yieldfusion checkpoint"""

    pass


class VersionMismatchError(CheckpointError):
    """Checkpoint written by an unsupported format version"""

    pass


class CheckpointShapeMismatchError(CheckpointError):
    """Stored tensors do not match the expected model configuration"""

    pass
