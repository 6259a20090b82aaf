"""
Core application configuration.

This module contains the Django app configuration for the core application,
which holds the shared error hierarchy, exit codes and the base management
command used by every subcommand of the toolkit.
"""

from django.apps import AppConfig


class CoreConfig(AppConfig):
    """
    Configuration class for the Core Django application.

    Shared plumbing only: no models and no numerical code.
    """

    default_auto_field = "django.db.models.BigAutoField"
    name = "core"
    verbose_name = "Core Plumbing"
