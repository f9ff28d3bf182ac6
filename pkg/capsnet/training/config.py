#  Copyright (C) 2020  Mind Audio Central
#  This file is part of capsnet, released under the GNU GPL v3 or later; see README.rst.

from dataclasses import asdict, dataclass, replace
from typing import Optional

from django.conf import settings

from capsnet.training.api.serializers import TrainConfigSerializer
from capsnet.training.exceptions import InvalidTrainConfig

# Defaults chosen without a published value; the metrics log header lists them.
ASSUMED_DEFAULTS = ("batch_size", "decay_rate", "decay_steps", "epochs")


@dataclass(frozen=True)
class TrainConfig:
    batch_size: int = 128
    learning_rate: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    decay_rate: float = 0.96
    decay_steps: int = 2000
    epochs: int = 10
    routing_iterations: int = 3
    reconstruction: bool = True
    reconstruction_scale: float = 0.0005
    down_weight: float = 0.5
    m_plus: float = 0.9
    m_minus: float = 0.1
    seed: int = 0
    clip_norm: Optional[float] = None
    workers: int = 1

    @classmethod
    def validated(cls, **values) -> "TrainConfig":
        """
        Build a config from raw values, e.g. command-line flags.

        :raises InvalidTrainConfig: Some value fails validation
        """
        serializer = TrainConfigSerializer(data=values)
        if not serializer.is_valid():
            raise InvalidTrainConfig(serializer.errors)
        return cls(**serializer.validated_data)

    @classmethod
    def from_settings(cls, **overrides) -> "TrainConfig":
        """
        The configured defaults (`CAPSNET["TRAIN"]` and `CAPSNET["WORKERS"]`) with `overrides` applied; None
        overrides are ignored.
        """
        values = asdict(cls())
        configured = settings.CAPSNET
        values.update({key.lower(): value for key, value in configured.get("TRAIN", {}).items()})
        values["workers"] = configured.get("WORKERS", values["workers"])
        values.update({key: value for key, value in overrides.items() if value is not None})
        return cls.validated(**values)

    def for_multimnist(self, multiplier: Optional[int] = None) -> "TrainConfig":
        """The same run with a decay period `multiplier` times longer (10 by default)"""
        if multiplier is None:
            multiplier = int(settings.CAPSNET["MULTIMNIST"]["DECAY_MULTIPLIER"])
        return replace(self, decay_steps=self.decay_steps * multiplier)

    def as_dict(self) -> dict:
        return asdict(self)

    def assumptions(self) -> dict:
        return {name: getattr(self, name) for name in ASSUMED_DEFAULTS}
