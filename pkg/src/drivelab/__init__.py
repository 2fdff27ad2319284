"""Deterministic driving micro-simulator with exact affordance ground truth."""

__version__ = "0.1.0"

from .affordances import (  # noqa: F401
    AffordanceVector,
    NormalizationRanges,
    VARIABLES,
    compute_affordances,
    decode,
    encode,
)
from .geo import GeoBBox, LocalFrame, WorldData, ingest_map, load_world, parse_map, save_world  # noqa: F401
from .roads import LanePose, OffRoadError, RoadNetwork, RoadSegment  # noqa: F401
