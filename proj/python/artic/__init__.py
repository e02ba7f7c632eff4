"""Articulatory model compiler: EMA-driven tongue and jaw animation with evaluation gates."""

from ._artic import Asset, InputError, closest_points, compile, parse_obj, synth, version

__all__ = ["Asset", "InputError", "closest_points", "compile", "parse_obj", "synth", "version"]
__version__ = version()
