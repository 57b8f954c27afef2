"""Conway's Game of Life benchmark: rule oracle, grid extraction, F1 curves.

The oracle applies parameterizable birth/survive rules (default B3/S23) with
a Moore neighborhood and dead cells outside the grid, so rule-change
interventions can be verified against the same machinery.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

log = logging.getLogger(__name__)

DEFAULT_RULES: tuple[frozenset[int], frozenset[int]] = (frozenset({3}), frozenset({2, 3}))


@dataclass
class BinaryGrid:
    cells: np.ndarray  # (R, C) bool, True = live

    def __post_init__(self) -> None:
        self.cells = np.asarray(self.cells, dtype=bool)
        if self.cells.ndim != 2 or min(self.cells.shape) < 1:
            raise ValueError("grid must be 2D with at least one cell")

    @property
    def shape(self) -> tuple[int, int]:
        return self.cells.shape

    @classmethod
    def from_text(cls, text: str) -> "BinaryGrid":
        """Parse '.'/'0' = dead and '#'/'1' = live rows."""
        rows = [line for line in text.splitlines() if line.strip()]
        cells = [[ch in "#1" for ch in row.strip()] for row in rows]
        return cls(np.array(cells, dtype=bool))

    def to_text(self) -> str:
        return "\n".join("".join("#" if v else "." for v in row) for row in self.cells)

    @classmethod
    def random(cls, rows: int, cols: int, density: float, seed: int) -> "BinaryGrid":
        rng = np.random.default_rng(seed)
        return cls(rng.random((rows, cols)) < density)


def conway_oracle_step(
    grid: BinaryGrid,
    rules: tuple[Sequence[int], Sequence[int]] = DEFAULT_RULES,
) -> BinaryGrid:
    """One synchronous update: Moore neighborhood, dead outside the grid."""
    birth, survive = (set(rules[0]), set(rules[1]))
    cells = grid.cells
    padded = np.pad(cells.astype(np.int64), 1)
    r, c = cells.shape
    neighbors = sum(
        padded[1 + di:1 + di + r, 1 + dj:1 + dj + c]
        for di in (-1, 0, 1)
        for dj in (-1, 0, 1)
        if (di, dj) != (0, 0)
    )
    born = ~cells & np.isin(neighbors, sorted(birth))
    kept = cells & np.isin(neighbors, sorted(survive))
    return BinaryGrid(born | kept)


def render_grid(
    grid: BinaryGrid,
    frame_size: tuple[int, int],
    live_color=(255, 255, 255),
    dead_color=(0, 0, 0),
) -> np.ndarray:
    """Rasterize a board to an (h, w, 3) uint8 frame by nearest-tile mapping."""
    w, h = frame_size
    rows, cols = grid.shape
    ys = (np.arange(h) * rows) // h
    xs = (np.arange(w) * cols) // w
    tiles = grid.cells[np.ix_(ys, xs)]
    live = np.array(live_color, dtype=np.uint8)
    dead = np.array(dead_color, dtype=np.uint8)
    return np.where(tiles[..., None], live, dead).astype(np.uint8)


def _tile_means(gray: np.ndarray, rows: int, cols: int) -> np.ndarray:
    h, w = gray.shape
    row_edges = np.round(np.arange(rows + 1) * h / rows).astype(int)
    col_edges = np.round(np.arange(cols + 1) * w / cols).astype(int)
    means = np.empty((rows, cols))
    for i in range(rows):
        for j in range(cols):
            tile = gray[row_edges[i]:row_edges[i + 1], col_edges[j]:col_edges[j + 1]]
            means[i, j] = tile.mean()
    return means


def _two_means(values: np.ndarray, iterations: int = 50) -> tuple[float, float]:
    """1D 2-means (Lloyd) initialized at the extremes; deterministic."""
    lo, hi = float(values.min()), float(values.max())
    for _ in range(iterations):
        mid = (lo + hi) / 2.0
        low_vals = values[values <= mid]
        high_vals = values[values > mid]
        if not len(low_vals) or not len(high_vals):
            break
        new_lo, new_hi = float(low_vals.mean()), float(high_vals.mean())
        if new_lo == lo and new_hi == hi:
            break
        lo, hi = new_lo, new_hi
    return lo, hi


DEGENERATE_SPREAD = 1e-6


def conway_extract_grid(frame: np.ndarray, rows: int, cols: int) -> BinaryGrid:
    """Recover the board from a rendered frame.

    Tile means are clustered into two intensity groups; a cell is live when
    its tile falls on the live cluster's side of the midpoint. The live
    cluster is the minority cluster when counts differ (boards are sparse),
    otherwise the brighter one, which also supports inverted palettes.
    A single-intensity frame decodes to all-dead with a warning.
    """
    frame = np.asarray(frame)
    h, w = frame.shape[:2]
    if rows < 1 or cols < 1 or rows > h or cols > w:
        raise ValueError(f"cannot split a {w}x{h} frame into {rows}x{cols} tiles")
    gray = frame.astype(np.float64).mean(axis=2) if frame.ndim == 3 else frame.astype(np.float64)
    means = _tile_means(gray, rows, cols)
    if means.max() - means.min() < DEGENERATE_SPREAD:
        log.warning("degenerate single-intensity frame; extracting all-dead grid")
        return BinaryGrid(np.zeros((rows, cols), dtype=bool))
    lo, hi = _two_means(means.ravel())
    midpoint = (lo + hi) / 2.0
    high = means > midpoint
    n_high = int(high.sum())
    n_low = high.size - n_high
    if n_high == n_low:
        live_is_high = True  # equal split: brighter cluster is live
    else:
        live_is_high = n_high < n_low  # minority cluster is live
    return BinaryGrid(high if live_is_high else ~high)


def stays_minority_live(board: BinaryGrid, steps: int,
                        rules=DEFAULT_RULES) -> bool:
    """True when no evolution state has more live than dead cells.

    Grid extraction decodes the minority cluster as live, so benchmark boards
    must keep live cells in the minority (ties are fine: the brighter cluster
    wins those).
    """
    state = board
    for _ in range(steps + 1):
        if int(state.cells.sum()) * 2 > state.cells.size:
            return False
        state = conway_oracle_step(state, rules)
    return True


def seeded_boards(
    count: int,
    rows: int = 10,
    cols: int = 10,
    density: float = 0.25,
    steps: int = 10,
    base_seed: int = 0,
) -> list[BinaryGrid]:
    """Deterministic benchmark boards that stay minority-live for `steps`."""
    boards: list[BinaryGrid] = []
    seed = base_seed
    while len(boards) < count:
        board = BinaryGrid.random(rows, cols, density, seed)
        seed += 1
        if stays_minority_live(board, steps):
            boards.append(board)
    return boards


def conway_f1(pred: BinaryGrid, gt: BinaryGrid) -> float:
    """F1 with live cells as the positive class; two empty boards -> 1.0."""
    if pred.shape != gt.shape:
        raise ValueError(f"grid shapes differ: {pred.shape} vs {gt.shape}")
    tp = int((pred.cells & gt.cells).sum())
    fp = int((pred.cells & ~gt.cells).sum())
    fn = int((~pred.cells & gt.cells).sum())
    if tp == 0 and fp == 0 and fn == 0:
        return 1.0
    return 2 * tp / (2 * tp + fp + fn)


@dataclass
class ConwayBenchmarkResult:
    per_timestep: list[float]  # mean F1 over scenes at each timestep (1-based)
    per_scene: list[list[float]] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {"per_timestep": self.per_timestep, "per_scene": self.per_scene}


def run_conway_benchmark(
    boards: Sequence[BinaryGrid],
    pipeline: Callable[[BinaryGrid], Sequence[np.ndarray]],
    steps: int,
    rules: tuple[Sequence[int], Sequence[int]] = DEFAULT_RULES,
) -> ConwayBenchmarkResult:
    """Mean F1 per timestep of a frame-producing pipeline against the oracle.

    ``pipeline(board)`` must return at least ``steps`` frames where frame t-1
    shows the board after t updates. Extraction failures count as an all-dead
    prediction for that frame.
    """
    if not boards:
        raise ValueError("benchmark needs at least one initial board")
    per_scene: list[list[float]] = []
    for board in boards:
        frames = pipeline(board)
        if len(frames) < steps:
            raise ValueError(f"pipeline produced {len(frames)} frames, need {steps}")
        rows, cols = board.shape
        curve = []
        state = board
        for t in range(1, steps + 1):
            state = conway_oracle_step(state, rules)
            try:
                predicted = conway_extract_grid(frames[t - 1], rows, cols)
            except ValueError as exc:
                log.warning("grid extraction failed at step %d: %s", t, exc)
                predicted = BinaryGrid(np.zeros((rows, cols), dtype=bool))
            curve.append(conway_f1(predicted, state))
        per_scene.append(curve)
    per_timestep = [sum(col) / len(col) for col in zip(*per_scene)]
    return ConwayBenchmarkResult(per_timestep=per_timestep, per_scene=per_scene)
