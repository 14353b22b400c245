"""Detect, localise and explain GUI display defects in multi-window Android screens."""

from .config import Config, load_config
from .evidence import (Bounds, EvidenceTriplet, RuntimeContext, Widget, WindowMode,
                       load_triplet, parse_hierarchy)

__version__ = "0.1.0"
