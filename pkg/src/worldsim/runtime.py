"""The base class generated world programs derive from.

The child runner injects this class into the program's namespace as
``Simulator`` before executing the generated source, so programs can subclass
it without importing anything.
"""

from __future__ import annotations


class Simulator:
    """Contract: fit once, then alternate update_simulation and render_frame."""

    def __init__(self, frame_size=(1024, 576), api=None, fps=30):
        """Initializes the simulator."""
        self.frame_size = tuple(frame_size)
        self.api = api
        self.fps = fps

    def fit(self, image, text):
        """Fit the simulator's parameters to the provided image."""
        raise NotImplementedError

    def update_simulation(self, dt):
        """Update the simulation by one timestep dt."""
        raise NotImplementedError

    def render_frame(self):
        """Render the next frame as an HxWx3 uint8 array matching frame_size."""
        raise NotImplementedError


CONTRACT_METHODS = ("__init__", "fit", "update_simulation", "render_frame")
