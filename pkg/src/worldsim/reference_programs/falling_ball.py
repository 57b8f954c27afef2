import numpy as np


class VideoSimulation(Simulator):  # noqa: F821 - injected by the sandbox runtime
    PARAMS = {
        "gravity": 120.0,  # px/s^2, +y points down in image space
        "radius": 5,
        "start": [0.5, 0.25],  # fractional (x, y) of the frame
        "ball_color": [255, 80, 80],
        "background": [0, 0, 0],
    }

    def __init__(self, frame_size=(1024, 576), api=None, fps=30):
        super().__init__(frame_size=frame_size, api=api, fps=fps)
        self.x = 0.0
        self.y = 0.0
        self.vy = 0.0

    def fit(self, image, text):
        w, h = self.frame_size
        self.x = self.PARAMS["start"][0] * w
        self.y = self.PARAMS["start"][1] * h
        self.vy = 0.0

    def update_simulation(self, dt):
        w, h = self.frame_size
        r = self.PARAMS["radius"]
        self.vy += self.PARAMS["gravity"] * dt
        self.y += self.vy * dt
        if self.y > h - r:  # rest on the floor
            self.y = h - r
            self.vy = 0.0
        if self.y < r:  # rest on the ceiling (inverted gravity)
            self.y = r
            self.vy = 0.0

    def render_frame(self):
        w, h = self.frame_size
        frame = np.empty((h, w, 3), dtype=np.uint8)
        frame[...] = np.array(self.PARAMS["background"], dtype=np.uint8)
        yy, xx = np.ogrid[:h, :w]
        mask = (xx - self.x) ** 2 + (yy - self.y) ** 2 <= self.PARAMS["radius"] ** 2
        frame[mask] = np.array(self.PARAMS["ball_color"], dtype=np.uint8)
        return frame
