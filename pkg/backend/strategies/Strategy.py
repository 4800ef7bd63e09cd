import logging

import numpy as np

logger = logging.getLogger(__name__)


class Strategy:
    """
    Hedging strategy template, the number of shares ϑ(t, s) held at time t when the
    pre-trade price is s.

    Params

      - ``name``: the strategy name
      - ``maturity``: the horizon T of the hedge
    """

    params = (("name", ""), ("maturity", 1.0))

    def __init__(self, **kwargs):
        values = dict(self.params)
        unknown = set(kwargs) - set(values)
        if unknown:
            raise TypeError("unknown strategy parameters {}".format(sorted(unknown)))
        values.update(kwargs)
        self.p = type("Params", (), values)

    def value(self, t, s):
        raise NotImplementedError

    def __call__(self, t, s):
        t, s = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(s, dtype=float))
        return np.asarray(self.value(t, s), dtype=float)

    def log(self, txt, t=None):
        """Logging function for this strategy"""
        if t is None:
            logger.info("%s: %s", self.p.name or type(self).__name__, txt)
        else:
            logger.info("%s, t=%.6g: %s", self.p.name or type(self).__name__, t, txt)
