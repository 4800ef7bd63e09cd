from exceptions import ConfigError

from .CGMY import CGMY
from .CompoundPoisson import CompoundPoisson
from .Custom import Custom
from .Kou import Kou
from .LevyMeasure import LevyMeasure, TabulatedSampler, exp_minus_linear
from .Merton import Merton
from .NIG import NIG
from .Transformed import Image, Reweighted, TransformMap
from .Zero import Zero

FAMILIES = {
    "zero": Zero,
    "compound_poisson": CompoundPoisson,
    "merton": Merton,
    "kou": Kou,
    "cgmy": CGMY,
    "nig": NIG,
}


def measure_from_dict(spec, field="nu"):
    """Rebuild a measure from its {family, params[, base]} dict"""
    family = spec.get("family")
    params = dict(spec.get("params") or {})
    if family == "reweighted":
        return Reweighted(measure_from_dict(spec["base"], field + ".base"), float(params["a"]))
    if family == "image":
        transform = TransformMap(params["transform"], float(params.get("a", 0.0)))
        return Image(measure_from_dict(spec["base"], field + ".base"), transform)
    if family == "custom":
        raise ConfigError(field + ".family", "custom densities are only available through the Python API")
    if family not in FAMILIES:
        raise ConfigError(field + ".family", "unknown family {!r}, expected one of {}".format(family, sorted(FAMILIES)))
    try:
        if family == "compound_poisson":
            return CompoundPoisson(float(params["intensity"]), tuple(params["sizes"]), tuple(params.get("probs") or ()) or None)
        return FAMILIES[family](**{k: float(v) for k, v in params.items()})
    except KeyError as exc:
        raise ConfigError("{}.params.{}".format(field, exc.args[0]), "missing parameter") from exc
    except (TypeError, ValueError) as exc:
        raise ConfigError(field + ".params", str(exc)) from exc


__all__ = [
    "CGMY",
    "CompoundPoisson",
    "Custom",
    "FAMILIES",
    "Image",
    "Kou",
    "LevyMeasure",
    "Merton",
    "NIG",
    "Reweighted",
    "TabulatedSampler",
    "TransformMap",
    "Zero",
    "exp_minus_linear",
    "measure_from_dict",
]
