"""Exact-arithmetic simulator for infinite staircase translation surfaces."""
from .flow import Direction, SectionPoint
from .geometry import build_square_quotient, build_square_tiled, build_staircase
from .symbolic import BinarySeq, ParamSeq, bits_to_params

__all__ = ["BinarySeq", "Direction", "ParamSeq", "SectionPoint", "bits_to_params",
           "build_square_quotient", "build_square_tiled", "build_staircase"]
