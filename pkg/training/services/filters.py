"""
Correlation filter inspection.

For one correlation block of a checkpoint, writes every per-(t, c) K x K
weight grid as CSV and as a graymap, a mosaic graymap of all grids, and a
table of the offset with the largest weight in each grid.
"""

import csv
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from core.exceptions import ConfigError

from .checkpoint import load_checkpoint

logger = logging.getLogger(__name__)

GRID_COLUMNS = ("t", "c", "dy", "dx", "weight")
ARROW_COLUMNS = ("t", "c", "dy", "dx", "weight")
CELL_PIXELS = 8


@dataclass
class FilterDump:
    """
    Attributes:
        block (str): Correlation block name
        weights (np.ndarray): L x C x K x K filter
        offsets (list): (dy, dx) displacement of each K x K cell, row-major
        arrows (list): (t, c, dy, dx, weight) per grid
        files (list): Paths written
    """

    block: str
    weights: np.ndarray
    offsets: list
    arrows: list
    files: list

    @property
    def grid_count(self):
        return self.weights.shape[0] * self.weights.shape[1]


def argmax_offset(grid):
    """
    Row and column of the largest weight.

    Ties go to the cell nearest the window centre, then to the smallest
    (row, column) in row-major order.
    """
    k = grid.shape[0]
    radius = (k - 1) / 2
    best = None
    for row in range(k):
        for col in range(k):
            key = (-grid[row, col], (row - radius) ** 2 + (col - radius) ** 2, row, col)
            if best is None or key < best:
                best = key
    return best[2], best[3]


def correlation_layer(network, block_name):
    """
    Raises:
        ConfigError: If the block is missing or holds no correlation operator
    """
    try:
        block = network.find_block(block_name)
    except KeyError:
        names = [layer.name.rsplit(".", 1)[0] for layer in network.correlation_layers()]
        raise ConfigError(
            f"{network.spec.name} has no block '{block_name}' (correlation blocks: {', '.join(names) or 'none'})"
        ) from None
    layers = [layer for layer in block.layers if layer.kind == "correlation"]
    if not layers:
        raise ConfigError(f"block '{block_name}' is not a correlation block")
    return layers[0]


def _graymap(grid, low, high):
    scale = (grid - low) / (high - low) if high > low else np.full(grid.shape, 0.5)
    return np.rint(scale * 255).astype(np.uint8)


def _save_pgm(pixels, path):
    Image.fromarray(pixels).save(path, format="PPM")


def dump_filters(weights, offsets, block_name, out_dir):
    """Write grids.csv, arrows.csv, one graymap per grid and mosaic.pgm."""
    out_dir = Path(out_dir)
    grid_dir = out_dir / "grids"
    grid_dir.mkdir(parents=True, exist_ok=True)
    length, channels, k, _ = weights.shape
    low, high = float(weights.min()), float(weights.max())
    steps = sorted({dy for dy, _ in offsets})

    arrows, files = [], []
    grids_path = out_dir / "grids.csv"
    with open(grids_path, "w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(GRID_COLUMNS)
        for t in range(length):
            for c in range(channels):
                grid = weights[t, c]
                for row in range(k):
                    for col in range(k):
                        writer.writerow((t, c, steps[row], steps[col], repr(float(grid[row, col]))))
                row, col = argmax_offset(grid)
                arrows.append((t, c, steps[row], steps[col], float(grid[row, col])))
                pixels = np.kron(_graymap(grid, low, high), np.ones((CELL_PIXELS, CELL_PIXELS), dtype=np.uint8))
                path = grid_dir / f"t{t}_c{c}.pgm"
                _save_pgm(pixels, path)
                files.append(path)
    files.append(grids_path)

    arrows_path = out_dir / "arrows.csv"
    with open(arrows_path, "w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(ARROW_COLUMNS)
        writer.writerows((t, c, dy, dx, repr(w)) for t, c, dy, dx, w in arrows)
    files.append(arrows_path)

    # Rows are time steps, columns channels; one blank pixel between grids
    cell = k + 1
    mosaic = np.zeros((length * cell - 1, channels * cell - 1), dtype=np.uint8)
    for t in range(length):
        for c in range(channels):
            mosaic[t * cell : t * cell + k, c * cell : c * cell + k] = _graymap(weights[t, c], low, high)
    mosaic_path = out_dir / "mosaic.pgm"
    _save_pgm(np.kron(mosaic, np.ones((CELL_PIXELS, CELL_PIXELS), dtype=np.uint8)), mosaic_path)
    files.append(mosaic_path)

    logger.info(f"Dumped {length * channels} filter grids of {block_name} to {out_dir}")
    return FilterDump(block_name, weights, offsets, arrows, files)


def inspect_filters(checkpoint_path, block_name, out_dir):
    """
    Dump the filter of one correlation block of a checkpoint.

    Raises:
        ConfigError: If the block does not exist or is not a correlation block
    """
    network = load_checkpoint(checkpoint_path).restore_network()
    layer = correlation_layer(network, block_name)
    return dump_filters(np.array(layer.filter.value), layer.cfg.offsets(), block_name, out_dir)


def read_grids(path):
    """Filter weights back from grids.csv, as an L x C x K x K array."""
    with open(path, newline="") as handle:
        rows = list(csv.DictReader(handle))
    length = max(int(row["t"]) for row in rows) + 1
    channels = max(int(row["c"]) for row in rows) + 1
    k = int(round((len(rows) / (length * channels)) ** 0.5))
    return np.array([float(row["weight"]) for row in rows]).reshape(length, channels, k, k)
