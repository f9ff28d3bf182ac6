#  Copyright (C) 2020  Mind Audio Central
#  This file is part of capsnet, released under the GNU GPL v3 or later; see README.rst.

from rest_framework import serializers


class PositiveFloatField(serializers.FloatField):
    default_error_messages = {"not_positive": "Ensure this value is greater than 0."}

    def to_internal_value(self, data):
        value = super().to_internal_value(data)
        if value <= 0:
            self.fail("not_positive")
        return value


class TrainConfigSerializer(serializers.Serializer):
    """Validates training hyperparameters coming from settings and command-line flags"""
    batch_size = serializers.IntegerField(min_value=1)
    learning_rate = PositiveFloatField()
    beta1 = serializers.FloatField(min_value=0, max_value=1)
    beta2 = serializers.FloatField(min_value=0, max_value=1)
    epsilon = PositiveFloatField()
    decay_rate = PositiveFloatField()
    decay_steps = serializers.IntegerField(min_value=1)
    epochs = serializers.IntegerField(min_value=1)
    routing_iterations = serializers.IntegerField(min_value=1)
    reconstruction = serializers.BooleanField()
    reconstruction_scale = serializers.FloatField(min_value=0)
    down_weight = serializers.FloatField(min_value=0)
    m_plus = serializers.FloatField(min_value=0, max_value=1)
    m_minus = serializers.FloatField(min_value=0, max_value=1)
    seed = serializers.IntegerField(min_value=0)
    clip_norm = PositiveFloatField(required=False, allow_null=True, default=None)
    workers = serializers.IntegerField(min_value=1)

    def validate_decay_rate(self, value):
        if value >= 1:
            raise serializers.ValidationError("Ensure this value is less than 1.")
        return value

    def validate(self, data):
        """Both betas must stay below 1 for the bias correction, and the margins must not cross"""
        if data["beta1"] >= 1 or data["beta2"] >= 1:
            raise serializers.ValidationError("Adam betas must be smaller than 1")
        if data["m_minus"] >= data["m_plus"]:
            raise serializers.ValidationError("m_minus must be smaller than m_plus")
        return super(TrainConfigSerializer, self).validate(data)
