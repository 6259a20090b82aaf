"""
Finite-difference checks of whole networks, from the catalog and the micro
correlation network.
"""

import pytest

from networks.catalog import resolve_netspec
from training.services.gradcheck import gradcheck, require_passing


@pytest.mark.integration
class TestNetworkGradients:
    def test_linear_probe_is_exact(self):
        report = gradcheck(resolve_netspec("linear-probe"), n_coords=50, floor=1e-8)
        assert len(report.checks) == 50
        assert report.skipped == 0
        assert report.max_error < 1e-8

    def test_micro_corrnet(self, micro_spec):
        report = gradcheck(micro_spec, n_coords=40, seed=4)
        require_passing(report)
        assert len(report.checks) == 40

    def test_frozen_filters_are_never_drawn(self):
        report = gradcheck(resolve_netspec("corrnet-tiny-nofilter"), n_coords=30, seed=1)
        assert report.checks
        assert not any(check.parameter.endswith("filter") for check in report.checks)
        require_passing(report)


@pytest.mark.slow
@pytest.mark.integration
@pytest.mark.parametrize("netspec", ["corrnet-tiny", "r2plus1d-tiny", "r2d-tiny"])
def test_tiny_catalog_networks(netspec):
    report = gradcheck(resolve_netspec(netspec), n_coords=100, seed=0)
    assert report.passed, report.summary()
    assert report.max_error <= 1e-5
