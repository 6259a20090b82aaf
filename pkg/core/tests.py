"""
Tests for core app: config layering, error mapping and multiply counters.
"""

import json
import tempfile
from pathlib import Path

from django.apps import apps
from django.core.management.base import CommandError
from django.test import SimpleTestCase

from .configuration import layered_config, load_config_file
from .exceptions import EXIT_IO, EXIT_NUMERIC, EXIT_USAGE, ConfigError, DatasetFormatError, NumericError
from .management.base import CorrNetCommand
from .services.counters import count_multiplies, record


class RaisingCommand(CorrNetCommand):
    def __init__(self, error):
        super().__init__()
        self.error = error

    def run(self, **options):
        raise self.error


class LayeredConfigTestCase(SimpleTestCase):
    def test_flags_override_file_override_defaults(self):
        merged = layered_config({"a": 1, "b": 2, "c": 3}, {"b": 20, "c": 30}, {"c": 300, "a": None})
        self.assertEqual(merged, {"a": 1, "b": 20, "c": 300})

    def test_missing_path_is_empty(self):
        self.assertEqual(load_config_file(None), {})

    def test_file_must_hold_an_object(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "list.json"
            path.write_text(json.dumps([1, 2]))
            with self.assertRaises(ConfigError):
                load_config_file(path)
            path.write_text("{broken")
            with self.assertRaisesMessage(ConfigError, "invalid JSON"):
                load_config_file(path)


class ExitCodeTestCase(SimpleTestCase):
    """Test the error hierarchy to exit code mapping."""

    def returncode(self, error):
        with self.assertRaises(CommandError) as caught:
            RaisingCommand(error).handle()
        return caught.exception.returncode

    def test_mapping(self):
        self.assertEqual(self.returncode(ConfigError("bad")), EXIT_USAGE)
        self.assertEqual(self.returncode(NumericError("nan")), EXIT_NUMERIC)
        self.assertEqual(self.returncode(DatasetFormatError("magic")), EXIT_IO)
        self.assertEqual(self.returncode(FileNotFoundError("gone")), EXIT_IO)

    def test_other_errors_propagate(self):
        with self.assertRaises(KeyError):
            RaisingCommand(KeyError("x")).handle()

    def test_config_error_message(self):
        self.assertEqual(str(ConfigError("K must be odd")), "K must be odd")


class CountersTestCase(SimpleTestCase):
    def test_off_outside_block(self):
        record("conv", 10)
        with count_multiplies() as counter:
            record("conv", 3)
            record("fc", 2)
            record("conv", 4)
        record("conv", 10)
        self.assertEqual(counter.per_layer, {"conv": 7, "fc": 2})
        self.assertEqual(counter.total, 9)

    def test_nested_blocks_restore_outer(self):
        with count_multiplies() as outer:
            with count_multiplies() as inner:
                record("corr", 5)
            record("corr", 1)
        self.assertEqual(inner.total, 5)
        self.assertEqual(outer.total, 1)


class InstalledAppsTestCase(SimpleTestCase):
    def test_no_database_backed_contrib_apps(self):
        self.assertFalse(apps.is_installed("django.contrib.auth"))
        self.assertFalse(apps.is_installed("django.contrib.contenttypes"))
        self.assertTrue(apps.is_installed("rest_framework"))
