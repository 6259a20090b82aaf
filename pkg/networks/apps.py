"""
Networks application configuration.

This module contains the Django app configuration for the networks
application, which turns declarative network specs into runnable networks
and analytic cost reports.
"""

from django.apps import AppConfig


class NetworksConfig(AppConfig):
    """
    Configuration class for the Networks Django application.

    Handles netspec construction, the netspec text format, assembly into
    networks with a parameter registry, and parameter/FLOP accounting.
    """

    default_auto_field = "django.db.models.BigAutoField"
    name = "networks"
    verbose_name = "Network Builder"
