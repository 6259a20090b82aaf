"""
Test configuration for the video correlation toolkit.

Provides small generated datasets, a micro correlation network netspec and
run directories for the integration tests.
"""

import os
import sys
from pathlib import Path

import pytest

# Add the project root to the Python path
BASE_DIR = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(BASE_DIR))

# Set the Django settings module for tests
os.environ.setdefault("DJANGO_SETTINGS_MODULE", "videoCorrelationLab.test_settings")

import django

django.setup()

from correlation.config import CorrelationConfig
from networks.builders import build_linear_probe
from networks.netspec_format import write_netspec
from networks.specs import (
    BOTTLENECK_2D,
    BOTTLENECK_2PLUS1D,
    CORRELATION_SUM,
    BlockSpec,
    NetSpec,
    StemSpec,
)
from synthetic.config import MotionTaskConfig
from synthetic.storage import write_splits

MICRO_INPUT = (3, 4, 16, 16)


def micro_corrnet_spec(num_classes=4):
    """Stem, one 2D bottleneck, one correlation-sum block and one (2+1)D bottleneck."""
    return NetSpec(
        name="micro-corrnet",
        input=MICRO_INPUT,
        stem=StemSpec(8),
        stages=(
            (
                BlockSpec(BOTTLENECK_2D, (8, 4, 16)),
                BlockSpec(CORRELATION_SUM, (16, 4, 16), corr_cfg=CorrelationConfig(K=3, D=1, G=2)),
            ),
            (BlockSpec(BOTTLENECK_2PLUS1D, (16, 4, 16), (1, 2, 2)),),
            (),
            (),
        ),
        corr_insertions={"res2"},
        num_classes=num_classes,
    )


@pytest.fixture
def micro_task():
    """Four-direction motion task on 16 x 16 frames, 8 frames long."""
    return MotionTaskConfig(height=16, width=16, frames=8, num_directions=4, num_textures=2, speed=0.5)


@pytest.fixture
def motion_data(tmp_path, micro_task):
    """Training split of 16 videos and a test split of 8, as an SVD1 pair."""
    train_path, _ = write_splits(micro_task, tmp_path / "data" / "motion.svd", 16, 8, seed=3)
    return train_path


@pytest.fixture
def micro_spec():
    return micro_corrnet_spec()


@pytest.fixture
def micro_netspec(tmp_path):
    """netspec file of the micro correlation network."""
    return str(write_netspec(micro_corrnet_spec(), tmp_path / "micro.netspec"))


@pytest.fixture
def probe_netspec(tmp_path):
    """netspec file of a linear probe sized for the micro task."""
    return str(write_netspec(build_linear_probe(MICRO_INPUT, 4), tmp_path / "probe.netspec"))


@pytest.fixture
def run_dir(tmp_path):
    path = tmp_path / "runs"
    path.mkdir()
    return path
