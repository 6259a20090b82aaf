"""
Serializers for the synthetic app.

Validate raw task configuration payloads (JSON config files, command
options) and turn them into MotionTaskConfig values.
"""

from rest_framework import serializers

from core.configuration import validated
from core.exceptions import ConfigError

from .config import OBJECTS, TEXTURE_CORRELATIONS, MotionTaskConfig


class MotionTaskConfigSerializer(serializers.Serializer):
    """Serializer for synthetic task configurations."""

    num_directions = serializers.ChoiceField(choices=[4, 8])
    speed = serializers.FloatField(min_value=0.0)
    object = serializers.ChoiceField(choices=OBJECTS)
    texture_correlation = serializers.ChoiceField(choices=TEXTURE_CORRELATIONS)
    noise_std = serializers.FloatField(min_value=0.0)
    height = serializers.IntegerField(min_value=1)
    width = serializers.IntegerField(min_value=1)
    frames = serializers.IntegerField(min_value=1)
    num_textures = serializers.IntegerField(min_value=1)

    def validate(self, attrs):
        """Cross-field invariants: non-degenerate speed and in-frame trajectories."""
        try:
            MotionTaskConfig(**attrs)
        except ConfigError as exc:
            raise serializers.ValidationError(str(exc))
        return attrs

    def create(self, validated_data):
        return MotionTaskConfig(**validated_data)


def motion_config_from(values):
    """
    MotionTaskConfig from a complete dict of fields.

    Raises:
        ConfigError: With the serializer's error messages
    """
    return validated(MotionTaskConfigSerializer, values, "task config")
