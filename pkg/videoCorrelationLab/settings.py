"""
Django settings for the videoCorrelationLab project.

The project has no web surface: Django provides the settings layer, the
logging configuration and the management-command CLI used to generate
synthetic video, train correlation networks and inspect them.

Every tunable is read from the environment (optionally through a .env file)
with a desk-scale default.
"""

import os
from pathlib import Path

from dotenv import load_dotenv

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent

# Load environment variables from .env file
load_dotenv(dotenv_path=BASE_DIR / ".env")


def env_float(name, default):
    """Read a float setting from the environment."""
    return float(os.getenv(name, default))


def env_int(name, default):
    """Read an integer setting from the environment."""
    return int(os.getenv(name, default))


SECRET_KEY = os.getenv("CORRNET_SECRET_KEY", "corrnet-local-only")

DEBUG = os.getenv("CORRNET_DEBUG", "0") == "1"

ALLOWED_HOSTS = []


# Application definition
INSTALLED_APPS = [
    # Third-party apps
    "rest_framework",
    # Local apps
    "core",
    "tensors",
    "correlation",
    "nn",
    "networks",
    "synthetic",
    "training",
]

# No models are stored; the dummy backend keeps Django from opening a database.
DATABASES = {}

DEFAULT_AUTO_FIELD = "django.db.models.BigAutoField"

USE_TZ = True
TIME_ZONE = "UTC"


# Desk-scale defaults for every stage of the pipeline
CORRNET = {
    "TRAINING": {
        "epochs": env_int("CORRNET_EPOCHS", 60),
        "warmup_epochs": env_int("CORRNET_WARMUP_EPOCHS", 10),
        "lr_max": env_float("CORRNET_LR_MAX", 0.05),
        "momentum": env_float("CORRNET_MOMENTUM", 0.9),
        "weight_decay": env_float("CORRNET_WEIGHT_DECAY", 1e-4),
        "batch_size": env_int("CORRNET_BATCH_SIZE", 16),
        "clip_len": env_int("CORRNET_CLIP_LEN", 8),
        "seed": env_int("CORRNET_SEED", 0),
        "eval_clips": env_int("CORRNET_EVAL_CLIPS", 10),
        "epoch_eval_clips": env_int("CORRNET_EPOCH_EVAL_CLIPS", 1),
        "spatial_jitter": os.getenv("CORRNET_SPATIAL_JITTER", "1") == "1",
        "prefetch": os.getenv("CORRNET_PREFETCH", "0") == "1",
    },
    "DATA": {
        "height": env_int("CORRNET_DATA_HEIGHT", 32),
        "width": env_int("CORRNET_DATA_WIDTH", 32),
        "frames": env_int("CORRNET_DATA_FRAMES", 32),
        "num_directions": env_int("CORRNET_DATA_DIRECTIONS", 8),
        "num_textures": env_int("CORRNET_DATA_TEXTURES", 8),
        "speed": env_float("CORRNET_DATA_SPEED", 0.5),
        "object": os.getenv("CORRNET_DATA_OBJECT", "texture_patch"),
        "texture_correlation": os.getenv("CORRNET_DATA_TEXTURE_CORRELATION", "none"),
        "noise_std": env_float("CORRNET_DATA_NOISE", 0.02),
        "n_train": env_int("CORRNET_DATA_TRAIN", 2000),
        "n_test": env_int("CORRNET_DATA_TEST", 500),
        "canvas_scale": env_float("CORRNET_CANVAS_SCALE", 1.25),
        "pixel_mean": 0.5,
    },
    "CORRELATION": {
        "tiny": {"K": 3, "D": 1, "group_size": 4},
        "paper": {"K": 7, "D": 2, "group_size": 32},
        "filter_init_noise": env_float("CORRNET_FILTER_INIT_NOISE", 0.01),
    },
    "BATCHNORM": {
        "momentum": 0.9,
        "eps": 1e-5,
    },
    "GRADCHECK": {
        "step": env_float("CORRNET_GRADCHECK_STEP", 1e-5),
        "tolerance": env_float("CORRNET_GRADCHECK_TOL", 1e-5),
        "abs_floor": env_float("CORRNET_GRADCHECK_FLOOR", 1e-4),
        "n_coords": env_int("CORRNET_GRADCHECK_COORDS", 100),
        "batch_size": 2,
    },
    "RUNS_DIR": Path(os.getenv("CORRNET_RUNS_DIR", BASE_DIR / "runs")),
    "DATA_DIR": Path(os.getenv("CORRNET_DATA_DIR", BASE_DIR / "data")),
}


# Logging configuration
LOGGING = {
    "version": 1,
    "disable_existing_loggers": False,
    "formatters": {
        "verbose": {
            "format": "{levelname} {asctime} {name} {message}",
            "style": "{",
        },
        "simple": {
            "format": "{levelname} {message}",
            "style": "{",
        },
    },
    "handlers": {
        "console": {
            "class": "logging.StreamHandler",
            "formatter": "verbose",
        },
    },
    "loggers": {
        app: {
            "handlers": ["console"],
            "level": os.getenv("CORRNET_LOG_LEVEL", "INFO"),
            "propagate": False,
        }
        for app in ("core", "correlation", "nn", "networks", "synthetic", "training")
    },
    "root": {
        "handlers": ["console"],
        "level": "WARNING",
    },
}
