"""
Neural-network primitives application configuration.
"""

from django.apps import AppConfig


class NnConfig(AppConfig):
    """
    Configuration class for the nn Django application.

    Provides the reverse-mode tape and the primitives (3D convolution,
    batch normalization, pooling, classifier head, loss) used to build
    R2D, R(2+1)D and correlation networks.
    """

    default_auto_field = "django.db.models.BigAutoField"
    name = "nn"
    verbose_name = "NN Primitives"
