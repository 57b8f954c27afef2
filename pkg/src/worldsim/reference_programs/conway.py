import re

import numpy as np


class VideoSimulation(Simulator):  # noqa: F821 - injected by the sandbox runtime
    PARAMS = {
        "birth": [3],
        "survive": [2, 3],
        "live_color": [255, 255, 255],
        "dead_color": [0, 0, 0],
        "default_grid": [10, 10],
    }

    def __init__(self, frame_size=(1024, 576), api=None, fps=30):
        super().__init__(frame_size=frame_size, api=api, fps=fps)
        self.cells = None
        self.rows, self.cols = self.PARAMS["default_grid"]

    def fit(self, image, text):
        match = re.search(r"(\d+)\s*[xX]\s*(\d+)", text or "")
        if match:
            self.rows, self.cols = int(match.group(1)), int(match.group(2))
        gray = np.asarray(image, dtype=np.float64).mean(axis=2)
        h, w = gray.shape
        row_edges = [round(i * h / self.rows) for i in range(self.rows + 1)]
        col_edges = [round(j * w / self.cols) for j in range(self.cols + 1)]
        means = np.empty((self.rows, self.cols))
        for i in range(self.rows):
            for j in range(self.cols):
                tile = gray[row_edges[i]:row_edges[i + 1], col_edges[j]:col_edges[j + 1]]
                means[i, j] = tile.mean()
        lo, hi = means.min(), means.max()
        if hi - lo < 10.0:
            self.cells = np.zeros((self.rows, self.cols), dtype=bool)
        else:
            self.cells = means > (lo + hi) / 2.0

    def update_simulation(self, dt):
        padded = np.pad(self.cells.astype(np.int64), 1)
        neighbors = sum(
            padded[1 + di:1 + di + self.rows, 1 + dj:1 + dj + self.cols]
            for di in (-1, 0, 1)
            for dj in (-1, 0, 1)
            if (di, dj) != (0, 0)
        )
        birth = np.isin(neighbors, self.PARAMS["birth"]) & ~self.cells
        survive = np.isin(neighbors, self.PARAMS["survive"]) & self.cells
        self.cells = birth | survive

    def render_frame(self):
        w, h = self.frame_size
        ys = (np.arange(h) * self.rows) // h
        xs = (np.arange(w) * self.cols) // w
        grid = self.cells[np.ix_(ys, xs)]
        live = np.array(self.PARAMS["live_color"], dtype=np.uint8)
        dead = np.array(self.PARAMS["dead_color"], dtype=np.uint8)
        return np.where(grid[..., None], live, dead).astype(np.uint8)
