"""
Text form of a NetSpec.

Grammar (one statement per line, '#' starts a comment):

    netspec v1
    name <text>
    input <C> <L> <H> <W>
    classes <n>
    stem none | stem <channels> kernel=<t>,<y>,<x> stride=<t>,<y>,<x>
    corr_insertions <stage>[,<stage>...] | corr_insertions -
    [res2]
    block <kind> <in> <mid> <out> stride=<t>,<y>,<x> [K=<k> D=<d> G=<g> learnable=<0|1>]
    [res3]
    ...

All four stage headers are written, in order, even when a stage is empty.
"""

from pathlib import Path

from core.exceptions import ConfigError
from correlation.config import CorrelationConfig

from .specs import STAGE_NAMES, BlockSpec, NetSpec, StemSpec

HEADER = "netspec v1"


def _triple(values):
    return ",".join(str(v) for v in values)


def serialize_netspec(spec):
    """NetSpec -> netspec v1 text."""
    lines = [HEADER, f"name {spec.name}", f"input {' '.join(str(v) for v in spec.input)}"]
    lines.append(f"classes {spec.num_classes}")
    if spec.stem is None:
        lines.append("stem none")
    else:
        lines.append(
            f"stem {spec.stem.channels} kernel={_triple(spec.stem.kernel)} "
            f"stride={_triple(spec.stem.stride)}"
        )
    insertions = [name for name in STAGE_NAMES if name in spec.corr_insertions]
    lines.append(f"corr_insertions {','.join(insertions) or '-'}")
    for stage_name, blocks in zip(STAGE_NAMES, spec.stages):
        lines.append(f"[{stage_name}]")
        for block in blocks:
            line = f"block {block.kind} {' '.join(str(c) for c in block.channels)} stride={_triple(block.stride)}"
            cfg = block.corr_cfg
            if cfg is not None:
                line += f" K={cfg.K} D={cfg.D} G={cfg.G} learnable={int(cfg.learnable)}"
            lines.append(line)
    return "\n".join(lines) + "\n"


class _Parser:
    def __init__(self, text):
        self.lines = [
            (number, raw.split("#", 1)[0].strip())
            for number, raw in enumerate(text.splitlines(), start=1)
        ]
        self.lines = [(number, line) for number, line in self.lines if line]

    @staticmethod
    def fail(number, message):
        raise ConfigError(f"netspec line {number}: {message}")

    def ints(self, number, values, count=None):
        try:
            parsed = tuple(int(v) for v in values)
        except ValueError:
            self.fail(number, f"expected integers, got {' '.join(values)!r}")
        if count is not None and len(parsed) != count:
            self.fail(number, f"expected {count} integers, got {len(parsed)}")
        return parsed

    def options(self, number, tokens):
        values = {}
        for token in tokens:
            key, sep, value = token.partition("=")
            if not sep or not value:
                self.fail(number, f"expected key=value, got {token!r}")
            if key in values:
                self.fail(number, f"duplicate option {key!r}")
            values[key] = value
        return values

    def parse(self):
        if not self.lines or self.lines[0][1] != HEADER:
            number = self.lines[0][0] if self.lines else 1
            self.fail(number, f"first line must be '{HEADER}'")

        fields = {}
        stages = {}
        current = None
        for number, line in self.lines[1:]:
            if line.startswith("[") and line.endswith("]"):
                current = line[1:-1]
                if current not in STAGE_NAMES:
                    self.fail(number, f"unknown stage section '{current}'")
                if current in stages:
                    self.fail(number, f"duplicate stage section '{current}'")
                stages[current] = []
                continue
            keyword, *rest = line.split()
            if keyword == "block":
                if current is None:
                    self.fail(number, "block outside a stage section")
                stages[current].append(self.block(number, rest))
            elif current is not None:
                self.fail(number, f"'{keyword}' must precede the stage sections")
            elif keyword in fields:
                self.fail(number, f"duplicate field '{keyword}'")
            else:
                fields[keyword] = (number, rest)

        missing = [key for key in ("name", "input", "classes", "stem") if key not in fields]
        if missing:
            self.fail(self.lines[-1][0], f"missing fields {missing}")
        unknown = set(fields) - {"name", "input", "classes", "stem", "corr_insertions"}
        if unknown:
            key = sorted(unknown)[0]
            self.fail(fields[key][0], f"unknown field '{key}'")

        number, rest = fields["name"]
        if len(rest) != 1:
            self.fail(number, "name must be a single token")
        name = rest[0]
        input_shape = self.ints(*fields["input"], count=4)
        (num_classes,) = self.ints(*fields["classes"], count=1)
        stem = self.stem(*fields["stem"])

        insertions = frozenset()
        if "corr_insertions" in fields:
            number, rest = fields["corr_insertions"]
            if len(rest) != 1:
                self.fail(number, "corr_insertions takes one comma-separated list")
            if rest[0] != "-":
                insertions = frozenset(rest[0].split(","))

        try:
            return NetSpec(
                name=name,
                input=input_shape,
                stem=stem,
                stages=[stages.get(stage_name, []) for stage_name in STAGE_NAMES],
                corr_insertions=insertions,
                num_classes=num_classes,
            )
        except ConfigError as exc:
            raise ConfigError(f"netspec: {exc}")

    def stem(self, number, rest):
        if rest == ["none"]:
            return None
        if not rest:
            self.fail(number, "stem needs a channel count or 'none'")
        (channels,) = self.ints(number, rest[:1], count=1)
        options = self.options(number, rest[1:])
        kernel = self.ints(number, options.pop("kernel", "1,7,7").split(","), count=3)
        stride = self.ints(number, options.pop("stride", "1,2,2").split(","), count=3)
        if options:
            self.fail(number, f"unknown stem options {sorted(options)}")
        return StemSpec(channels, kernel, stride)

    def block(self, number, rest):
        if len(rest) < 4:
            self.fail(number, "block needs a kind and three channel counts")
        kind = rest[0]
        channels = self.ints(number, rest[1:4], count=3)
        options = self.options(number, rest[4:])
        stride = self.ints(number, options.pop("stride", "1,1,1").split(","), count=3)
        corr_cfg = None
        if "K" in options:
            values = {key: options.pop(key, default) for key, default in
                      (("K", None), ("D", "1"), ("G", "1"), ("learnable", "1"))}
            K, D, G, learnable = self.ints(number, list(values.values()), count=4)
            if learnable not in (0, 1):
                self.fail(number, "learnable must be 0 or 1")
            try:
                corr_cfg = CorrelationConfig(K=K, D=D, G=G, learnable=bool(learnable))
            except ConfigError as exc:
                self.fail(number, str(exc))
        if options:
            self.fail(number, f"unknown block options {sorted(options)}")
        try:
            return BlockSpec(kind, channels, stride, corr_cfg)
        except ConfigError as exc:
            self.fail(number, str(exc))


def parse_netspec(text):
    """
    netspec v1 text -> NetSpec.

    Raises:
        ConfigError: With the offending line number on malformed input
    """
    return _Parser(text).parse()


def read_netspec(path):
    return parse_netspec(Path(path).read_text())


def write_netspec(spec, path):
    path = Path(path)
    path.write_text(serialize_netspec(spec))
    return path
