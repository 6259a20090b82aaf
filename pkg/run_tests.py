#!/usr/bin/env python
"""
Test runner script for the video correlation toolkit.

Runs the app test cases through Django's runner, then the integration tests
under tests/ through pytest. Slow tests and experiment suites are skipped
unless --all is given.
"""

import os
import sys

import django
import pytest
from django.conf import settings
from django.test.utils import get_runner

APP_TESTS = [
    "core.tests",
    "tensors.tests",
    "correlation.tests",
    "nn.tests",
    "networks.tests",
    "synthetic.tests",
    "training.tests",
]

if __name__ == "__main__":
    os.environ["DJANGO_SETTINGS_MODULE"] = "videoCorrelationLab.test_settings"
    django.setup()
    TestRunner = get_runner(settings)
    test_runner = TestRunner()

    failures = test_runner.run_tests(APP_TESTS)

    markers = "not experiment" if "--all" in sys.argv else "not slow and not experiment"
    failures += pytest.main(["tests", "-m", markers])

    if failures:
        sys.exit(bool(failures))
