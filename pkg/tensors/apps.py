"""
Tensors application configuration.
"""

from django.apps import AppConfig


class TensorsConfig(AppConfig):
    """Dense tensor storage shared by every numerical app."""

    default_auto_field = "django.db.models.BigAutoField"
    name = "tensors"
    verbose_name = "Tensor Core"
