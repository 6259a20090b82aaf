"""
Synthetic application configuration.

This module contains the Django app configuration for the synthetic
application, which renders motion-labeled and texture-labeled videos and
stores them in the SVD1 dataset format.
"""

from django.apps import AppConfig


class SyntheticConfig(AppConfig):
    """Configuration class for the Synthetic Django application."""

    default_auto_field = "django.db.models.BigAutoField"
    name = "synthetic"
    verbose_name = "Synthetic Video"
