import logging
from dataclasses import dataclass

import numpy as np

from exceptions import ModelError

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class WeightPath:
    """
    Weight processes of one path on its fine grid.

    Lines

      - ``big_theta``: Θ(η)_t = sup_{u<=t} S_u^{η-1}
      - ``phi``: Φ(η)_t = Θ(η)_t S_t
      - ``phi_bar``: Φ̄_t = Φ_t + sup_{u<=t} |ΔΦ_u|
    """

    eta: float
    grid: np.ndarray
    big_theta: np.ndarray
    phi: np.ndarray
    phi_bar: np.ndarray

    def at(self, times, line="phi_bar"):
        idx = np.searchsorted(self.grid, np.asarray(times, dtype=float), side="right") - 1
        return getattr(self, line)[np.clip(idx, 0, len(self.grid) - 1)]


def weight_path(path, eta):
    if not 0.0 <= eta <= 1.0:
        raise ModelError("weight exponent η must lie in [0, 1]")
    prices = path.prices()
    left = path.left_prices(path.grid)
    power = eta - 1.0
    # the running sup sees left limits too, a jump can only move it at its own time
    big_theta = np.maximum.accumulate(np.maximum(prices ** power, left ** power))
    phi = big_theta * prices
    previous = np.concatenate([[big_theta[0]], big_theta[:-1]])
    theta_left = np.maximum(previous, left ** power)
    jumps = np.abs(phi - theta_left * left)
    jumps[path.jump_at(path.grid) == 0.0] = 0.0
    phi_bar = phi + np.maximum.accumulate(jumps)
    return WeightPath(float(eta), path.grid, big_theta, phi, phi_bar)
