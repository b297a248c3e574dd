"""
Pydantic schemas package.
Import schemas yang sering dipakai dari sini.
"""

from .analysis import AnalysisOptions, ComparisonGraph, DifferenceMap, GraphPoint, VariabilityReport
from .corpus import CharsetPolicy, CorpusManifest, LoadedCorpus
from .filter import FilterFlag, FilterParams, FilterReport
from .image import ColorImage, GrayImage
from .model import LineAlignment, LineSample, ModelState, Placement, Prototype, Provenance, TrainConfig
from .synth import SynthSpec, SyntheticCorpus

__all__ = [
    "AnalysisOptions",
    "CharsetPolicy",
    "ColorImage",
    "ComparisonGraph",
    "CorpusManifest",
    "DifferenceMap",
    "FilterFlag",
    "FilterParams",
    "FilterReport",
    "GraphPoint",
    "GrayImage",
    "LineAlignment",
    "LineSample",
    "LoadedCorpus",
    "ModelState",
    "Placement",
    "Prototype",
    "Provenance",
    "SynthSpec",
    "SyntheticCorpus",
    "TrainConfig",
    "VariabilityReport",
]
