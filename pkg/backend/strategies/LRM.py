from strategies.Strategy import Strategy


class LRM(Strategy):
    """
    Local risk-minimizing strategy read from a tabulated surface.

    Params

      - ``surface``: pricing.PriceSurface of ϑ on (log τ, log y)
    """

    params = (("name", "lrm"), ("maturity", 1.0), ("surface", None))

    def __init__(self, **kwargs):
        super().__init__(**kwargs)
        if self.p.surface is None:
            raise TypeError("LRM needs a strategy surface")
        self.p.maturity = self.p.surface.maturity
        self.log("surface interpolation error {:.3e}".format(self.p.surface.interpolation_error))

    def value(self, t, s):
        return self.p.surface(t, s)
