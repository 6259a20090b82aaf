"""
Serializers for the training app.

Validate layered run configurations (settings defaults, --config JSON and
flags) before they reach the trainer.
"""

from rest_framework import serializers

from core.configuration import validated
from core.exceptions import ConfigError

from .config import TrainConfig


class TrainConfigSerializer(serializers.Serializer):
    """Serializer for training run configurations."""

    netspec = serializers.CharField()
    data = serializers.CharField()
    epochs = serializers.IntegerField(min_value=1)
    warmup_epochs = serializers.IntegerField(min_value=0)
    lr_max = serializers.FloatField(min_value=0.0)
    momentum = serializers.FloatField(min_value=0.0)
    weight_decay = serializers.FloatField(min_value=0.0)
    batch_size = serializers.IntegerField(min_value=1)
    clip_len = serializers.IntegerField(min_value=1)
    seed = serializers.IntegerField(min_value=0)
    eval_clips = serializers.IntegerField(min_value=1)
    epoch_eval_clips = serializers.IntegerField(min_value=1)
    spatial_jitter = serializers.BooleanField()
    prefetch = serializers.BooleanField()

    def validate(self, attrs):
        """Warm-up must end before training does; momentum below 1."""
        try:
            TrainConfig(**attrs)
        except ConfigError as exc:
            raise serializers.ValidationError(str(exc))
        return attrs

    def create(self, validated_data):
        return TrainConfig(**validated_data)


class EvaluationSerializer(serializers.Serializer):
    """Serializer for evaluation requests."""

    checkpoint = serializers.CharField()
    data = serializers.CharField()
    clips = serializers.IntegerField(min_value=1)

    def create(self, validated_data):
        return dict(validated_data)


def train_config_from(values):
    """
    TrainConfig from layered values; unknown keys are ignored.

    Raises:
        ConfigError: With the serializer's error messages
    """
    known = {key: value for key, value in values.items() if key in TrainConfig.field_names()}
    return validated(TrainConfigSerializer, known, "train config")


def evaluation_request_from(values):
    return validated(EvaluationSerializer, values, "evaluation request")
