"""
Training application configuration.

This module contains the Django app configuration for the training
application, which trains, evaluates, benchmarks and inspects networks and
owns the toolkit's management commands.
"""

from django.apps import AppConfig


class TrainingConfig(AppConfig):
    """Configuration class for the Training Django application."""

    default_auto_field = "django.db.models.BigAutoField"
    name = "training"
    verbose_name = "Training"
