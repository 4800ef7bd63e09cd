import numpy as np

from strategies.Strategy import Strategy


class BuyHold(Strategy):
    """Constant holding ϑ ≡ c"""

    params = (("name", "buy_hold"), ("maturity", 1.0), ("shares", 1.0))

    def value(self, t, s):
        return np.full(np.shape(s), float(self.p.shares))
