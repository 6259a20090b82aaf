"""
Correlation application configuration.

This module contains the Django app configuration for the correlation
application, which implements the learnable correlation operator, its exact
adjoint and a brute-force reference.
"""

from django.apps import AppConfig


class CorrelationConfigApp(AppConfig):
    """
    Configuration class for the Correlation Django application.

    The operator matches each pixel of frame t against a dilated K x K
    neighbourhood of frame t - 1, per channel group, with learnable weights.
    """

    default_auto_field = "django.db.models.BigAutoField"
    name = "correlation"
    verbose_name = "Correlation Operator"
