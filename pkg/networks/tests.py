"""
Tests for networks app.

This module covers netspec validation, the builders and catalog, the
netspec text format, assembled networks and the analytic cost model.
"""

import tempfile
from dataclasses import replace
from pathlib import Path

import numpy as np
from django.test import SimpleTestCase

from core.exceptions import ConfigError, ShapeError
from core.services.counters import count_multiplies
from correlation.config import CorrelationConfig
from nn.layers import Conv3dLayer, CorrelationLayer
from nn.tape import Variable

from .assembly import Network, assemble
from .builders import build_baseline, build_corrnet, build_corrnet_tiny, build_linear_probe
from .catalog import CATALOG, resolve_netspec
from .cost import cost_report
from .netspec_format import parse_netspec, serialize_netspec
from .specs import (
    BOTTLENECK_2D,
    BOTTLENECK_2PLUS1D,
    CORRELATION_CONCAT,
    CORRELATION_SUM,
    BlockSpec,
    NetSpec,
    StemSpec,
)


class NetSpecValidationTestCase(SimpleTestCase):
    """Test spec invariants."""

    def setUp(self):
        self.spec = build_corrnet_tiny()

    def test_tiny_corrnet_has_three_correlation_stages(self):
        self.assertEqual(self.spec.corr_insertions, {"res2", "res3", "res4"})
        for name in ("res2", "res3", "res4"):
            self.assertEqual(self.spec.stage(name)[-1].kind, CORRELATION_SUM)
        self.assertFalse(any(b.is_correlation for b in self.spec.stage("res5")))

    def test_tiny_corrnet_shape(self):
        self.assertEqual(self.spec.input, (3, 8, 32, 32))
        self.assertEqual(self.spec.stem.channels, 16)
        self.assertEqual([b[0].channels[2] for b in self.spec.stages], [32, 64, 128, 256])
        self.assertEqual(self.spec.block_counts(), [1, 1, 1, 1])
        self.assertEqual(self.spec.stage("res2")[0].kind, BOTTLENECK_2D)

    def test_correlation_after_res5_rejected(self):
        stages = [list(blocks) for blocks in self.spec.stages]
        stages[3].append(BlockSpec(CORRELATION_SUM, (256, 64, 256), corr_cfg=CorrelationConfig(K=3, G=16)))
        with self.assertRaises(ConfigError):
            replace(self.spec, stages=stages, corr_insertions={"res2", "res3", "res4", "res5"})

    def test_listed_stage_without_correlation_rejected(self):
        baseline = build_baseline("r2plus1d")
        with self.assertRaises(ConfigError):
            replace(baseline, corr_insertions={"res3"})

    def test_temporal_stride_mismatch_rejected(self):
        baseline = build_baseline("r2plus1d")
        stages = [list(blocks) for blocks in baseline.stages]
        stages[1][0] = replace(stages[1][0], stride=(2, 2, 2))
        with self.assertRaises(ConfigError):
            replace(baseline, stages=stages)

    def test_channel_chain_mismatch_rejected(self):
        with self.assertRaises(ConfigError):
            NetSpec(
                name="broken",
                input=(3, 8, 32, 32),
                stem=StemSpec(16),
                stages=[[BlockSpec(BOTTLENECK_2D, (8, 8, 32))], [], [], []],
            )

    def test_correlation_block_requires_config(self):
        with self.assertRaises(ConfigError):
            BlockSpec(CORRELATION_SUM, (32, 8, 32))

    def test_mid_channels_must_divide_into_groups(self):
        with self.assertRaises(ConfigError):
            BlockSpec(CORRELATION_SUM, (32, 6, 32), corr_cfg=CorrelationConfig(K=3, G=4))

    def test_concat_needs_room_for_pointwise_branch(self):
        with self.assertRaises(ConfigError):
            BlockSpec(CORRELATION_CONCAT, (32, 8, 32), corr_cfg=CorrelationConfig(K=5, G=2))

    def test_projection_shortcut_rules(self):
        self.assertFalse(BlockSpec(BOTTLENECK_2PLUS1D, (32, 8, 32)).has_projection)
        self.assertTrue(BlockSpec(BOTTLENECK_2PLUS1D, (32, 8, 32), (1, 2, 2)).has_projection)
        self.assertTrue(BlockSpec(BOTTLENECK_2D, (16, 8, 32)).has_projection)


class BuilderTestCase(SimpleTestCase):
    """Test the network family builders."""

    def test_paper_block_counts(self):
        self.assertEqual(build_baseline("r2plus1d", "paper26").block_counts(), [2, 2, 2, 2])
        self.assertEqual(build_corrnet("paper50").block_counts(), [3, 4, 6, 3])
        self.assertEqual(build_corrnet("paper101").block_counts(), [3, 4, 23, 3])

    def test_r2d_has_no_temporal_kernels(self):
        network = Network(build_baseline("r2d"))
        footprints = [
            layer.footprint
            for block in network.blocks
            for layer in block.layers
            if isinstance(layer, Conv3dLayer)
        ]
        self.assertNotIn((3, 1, 1), footprints)
        pools = [layer.name for block in network.blocks for layer in block.layers if layer.kind == "temporal_maxpool3"]
        self.assertEqual(pools, ["res4.0.pool", "res5.0.pool"])

    def test_unknown_baseline_kind(self):
        with self.assertRaises(ConfigError):
            build_baseline("i3d")

    def test_unknown_scale(self):
        with self.assertRaises(ConfigError):
            build_corrnet("huge")

    def test_ablation_variants(self):
        frozen = build_corrnet("tiny", "no_filter").stage("res2")[-1].corr_cfg
        self.assertFalse(frozen.learnable)
        self.assertEqual(build_corrnet("tiny", "no_grouping").stage("res3")[-1].corr_cfg.G, 1)
        self.assertEqual(build_corrnet("tiny", "concat").stage("res4")[-1].kind, CORRELATION_CONCAT)

    def test_k_override(self):
        spec = build_corrnet("tiny", K=5)
        self.assertEqual(spec.name, "corrnet-tiny-k5")
        self.assertEqual({b[-1].corr_cfg.K for b in spec.stages[:3]}, {5})

    def test_default_tiny_groups(self):
        groups = [blocks[-1].corr_cfg.G for blocks in build_corrnet_tiny().stages[:3]]
        self.assertEqual(groups, [2, 4, 8])

    def test_catalog_names_build(self):
        for name in CATALOG:
            self.assertEqual(resolve_netspec(name).name, name)


class CostReportTestCase(SimpleTestCase):
    """Test the analytic cost formulas."""

    def test_correlation_params_and_flops(self):
        layer = CorrelationLayer("corr", CorrelationConfig(K=7, D=2, G=1, C_in=64, L=8))
        (cost,) = layer.costs((64, 8, 56, 56))

        self.assertEqual(cost.params, 25088)
        self.assertEqual(cost.flops, 78675968)

    def test_frozen_filter_has_no_parameters(self):
        layer = CorrelationLayer("corr", CorrelationConfig(K=7, learnable=False, C_in=64, L=8))
        self.assertEqual(layer.costs((64, 8, 56, 56))[0].params, 0)

    def test_pointwise_conv_params(self):
        (cost,) = Conv3dLayer("conv", 64, 256, (1, 1, 1)).costs((64, 8, 56, 56))
        self.assertEqual(cost.params, 16384)
        self.assertEqual(cost.flops, 16384 * 8 * 56 * 56)

    def test_matched_footprint_ratios(self):
        conv = Conv3dLayer("conv", 64, 256, (3, 3, 3)).costs((64, 8, 56, 56))[0]
        corr = CorrelationLayer("corr", CorrelationConfig(K=5, C_in=64, L=8)).costs((64, 8, 56, 56))[0]

        self.assertAlmostEqual(conv.flops / corr.flops / 256, 1.0, delta=0.1)
        self.assertAlmostEqual(conv.params / corr.params / (256 / 8), 1.0, delta=0.1)

    def test_totals_are_sums(self):
        report = cost_report(build_corrnet_tiny())
        self.assertEqual(report.total_params, sum(layer.params for layer in report.layers))
        self.assertEqual(report.total_flops, sum(layer.flops for layer in report.layers))
        self.assertEqual(report.rows()[-1], ("total", "", report.total_params, report.total_flops))

    def test_corrnet_flop_overhead_is_small(self):
        corrnet = cost_report(build_corrnet_tiny()).total_flops
        baseline = cost_report(build_baseline("r2plus1d")).total_flops

        self.assertGreater(corrnet, baseline)
        self.assertLessEqual(corrnet / baseline, 1.10)

    def test_corrnet_differs_from_baseline_only_where_expected(self):
        corrnet = cost_report(build_corrnet_tiny()).by_layer()
        baseline = cost_report(build_baseline("r2plus1d")).by_layer()
        trimmed = ("conv1", "res2.0.")

        for name in set(corrnet) & set(baseline):
            if not name.startswith(trimmed):
                self.assertEqual(corrnet[name], baseline[name])
        extra = [n for n in set(corrnet) - set(baseline) if not n.startswith(trimmed)]
        self.assertTrue(extra)
        self.assertTrue(all(".corr." in name for name in extra))
        self.assertEqual(set(baseline) - set(corrnet), {"res2.0.conv_t", "res2.0.bn_t"})

        def params(report, names):
            return sum(report[n].params for n in names)

        corr_params = params(corrnet, [n for n in corrnet if ".corr." in n])
        trimmed_delta = params(corrnet, [n for n in corrnet if n.startswith(trimmed)]) - params(
            baseline, [n for n in baseline if n.startswith(trimmed)]
        )
        self.assertEqual(
            sum(c.params for c in corrnet.values()) - sum(c.params for c in baseline.values()),
            corr_params + trimmed_delta,
        )

    def test_paper_scale_report_needs_no_weights(self):
        report = cost_report(build_corrnet("paper50")).by_layer()
        corr = report["res2.corr.correlation"]

        self.assertEqual(corr.params, 32 * 64 * 49)
        self.assertEqual(corr.flops, 64 * 49 * 32 * 56 * 56)


class AssemblyTestCase(SimpleTestCase):
    """Test assembled networks."""

    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.spec = build_corrnet_tiny()
        cls.network = assemble(cls.spec, seed=7)
        cls.clips = np.random.default_rng(0).normal(size=(2, 3, 8, 32, 32))

    def test_forward_gives_one_logit_per_class(self):
        logits = self.network.forward(self.clips, mode="train", update_stats=False)
        self.assertEqual(logits.value.shape, (2, 8))

    def test_registry_size_matches_cost_report(self):
        self.assertEqual(self.network.parameter_count(), cost_report(self.spec).total_params)

    def test_every_parameter_receives_a_gradient(self):
        loss, logits, grads = self.network.forward_backward(self.clips, [1, 5], update_stats=False)

        self.assertTrue(np.isfinite(loss))
        self.assertEqual(list(grads), list(self.network.registry))
        for name, parameter in self.network.registry.items():
            self.assertEqual(grads[name].shape, parameter.value.shape)
            self.assertTrue(np.all(np.isfinite(grads[name])))
        self.assertIn("res3.corr.correlation.filter", grads)

    def test_same_seed_gives_bitwise_equal_logits(self):
        first = assemble(self.spec, seed=3).predict(self.clips)
        second = assemble(self.spec, seed=3).predict(self.clips)
        self.assertTrue(np.array_equal(first, second))

    def test_zero_restore_makes_correlation_sum_identity(self):
        network = assemble(self.spec, seed=1)
        block = network.find_block("res2.corr")
        restore = block.layer("restore").weight
        restore.tensor.assign_(np.zeros(restore.value.shape))
        x = np.abs(np.random.default_rng(2).normal(size=(2, 32, 8, 16, 16)))

        out = block.forward(None, Variable(x), mode="train", update_stats=False)

        self.assertTrue(np.array_equal(out.value, x))

    def test_runtime_multiplies_match_cost_report(self):
        report = cost_report(self.spec)
        with count_multiplies() as counter:
            self.network.forward(self.clips[:1], mode="eval")

        for layer in report.layers:
            if layer.flops:
                self.assertEqual(counter.per_layer[layer.name], layer.flops, layer.name)
        self.assertEqual(counter.total, report.total_flops)

    def test_frozen_filters_stay_out_of_the_registry(self):
        network = assemble(build_corrnet("tiny", "no_filter"))
        self.assertFalse(any(name.endswith(".filter") for name in network.registry))
        self.assertEqual(network.parameter_count(), cost_report(network.spec).total_params)

    def test_wrong_clip_shape_rejected(self):
        with self.assertRaises(ShapeError):
            self.network.forward(np.zeros((1, 3, 4, 32, 32)), mode="eval")

    def test_linear_probe_has_only_the_head(self):
        network = assemble(build_linear_probe())
        self.assertEqual(list(network.registry), ["fc.weight"])
        self.assertEqual(network.predict(self.clips).shape, (2, 8))


class NetspecFormatTestCase(SimpleTestCase):
    """Test the netspec v1 text format."""

    def test_catalog_specs_round_trip(self):
        for name, build in CATALOG.items():
            spec = build()
            self.assertEqual(parse_netspec(serialize_netspec(spec)), spec, name)

    def test_header_required(self):
        with self.assertRaisesMessage(ConfigError, "line 1"):
            parse_netspec("name x\n")

    def test_bad_block_reports_line_number(self):
        text = serialize_netspec(build_corrnet_tiny()).replace("bottleneck_2d", "bottleneck_4d", 1)
        line = next(i for i, l in enumerate(text.splitlines(), start=1) if "bottleneck_4d" in l)
        with self.assertRaisesMessage(ConfigError, f"line {line}"):
            parse_netspec(text)

    def test_comments_and_blank_lines_ignored(self):
        text = serialize_netspec(build_linear_probe())
        commented = "# probe\n" + text.replace("classes", "\n# head\nclasses")
        self.assertEqual(parse_netspec(commented), build_linear_probe())

    def test_resolve_from_file(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "r2d.netspec"
            path.write_text(serialize_netspec(build_baseline("r2d")))
            self.assertEqual(resolve_netspec(str(path)), build_baseline("r2d"))

    def test_resolve_unknown_name(self):
        with self.assertRaises(ConfigError):
            resolve_netspec("resnet-9000")

    def test_resolve_overrides_classes(self):
        self.assertEqual(resolve_netspec("corrnet-tiny", num_classes=4).num_classes, 4)
