"""Case-study models, each bundled behind :class:`ModelBundle`."""
from .base import ModelBundle
from .censored import CensoredModel
from .dyes import DyesModel
from .pump import PumpModel
from .ratpup import RatpupModel

MODELS = {"pump": PumpModel, "censored": CensoredModel, "dyes": DyesModel, "ratpup": RatpupModel}

__all__ = ["ModelBundle", "PumpModel", "CensoredModel", "DyesModel", "RatpupModel", "MODELS"]
