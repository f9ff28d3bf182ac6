#  Copyright (C) 2020  Mind Audio Central
#  This file is part of capsnet, released under the GNU GPL v3 or later; see README.rst.

from capsnet.exceptions import CapsNetError, InvalidArgument


class TrainingError(CapsNetError):
    """Base class of optimisation and checkpoint errors"""


class NonFiniteGradient(TrainingError):
    """Raised before an optimizer step when a gradient holds NaN or Inf"""

    def __init__(self, name):
        self.name = name
        super().__init__(f"Gradient of '{name}' is not finite")


class NonFiniteLoss(TrainingError):
    """Raised when the training loss becomes NaN or Inf"""

    def __init__(self, step, value):
        super().__init__(f"Loss became {value} at step {step}")


class InvalidTrainConfig(TrainingError, InvalidArgument):
    """Raised when training hyperparameters fail validation"""

    def __init__(self, errors):
        self.errors = errors
        details = "; ".join(f"{field}: {' '.join(str(message) for message in messages)}"
                            for field, messages in errors.items())
        super().__init__(f"Invalid training configuration: {details}")


class EmptyDataset(TrainingError, InvalidArgument):
    """Raised when training is asked to run on a source without examples"""

    def __init__(self, name):
        super().__init__(f"Cannot train on an empty dataset: {name} holds no examples")


class CheckpointFormatError(TrainingError):
    """Raised when a checkpoint file is not a readable CPS1 file"""

    def __init__(self, path, problem):
        super().__init__(f"{path}: {problem}")


class UnknownTensorName(TrainingError):
    """Raised when a checkpoint holds a tensor the model has no place for"""

    def __init__(self, path, name):
        super().__init__(f"{path}: unknown tensor '{name}'")


class MissingOptimizerState(TrainingError):
    """Raised when training is resumed from a checkpoint saved without optimizer state"""

    def __init__(self, path):
        super().__init__(f"{path} holds no optimizer state and can only be used for evaluation, not to resume training")
