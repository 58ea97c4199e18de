"""
Utility Module - numerics and worker pools
"""
from .numerics import GradcheckReport, central_difference, relative_error
from .workers import map_chunks

__all__ = ['GradcheckReport', 'central_difference', 'relative_error', 'map_chunks']
