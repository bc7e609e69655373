"""Conjugacy constructions for planar and 5-space diffeomorphisms."""

import json

from ._core import (
    FORMAT_VERSION,
    Assembly,
    ConstructionError,
    Diffeo5,
    Placement,
    PlanarDiffeo,
    ValidationError,
    assemble,
    check_properties,
    contamination,
    decompose,
    demo_shift_steps,
    diffeo5_build,
    place_vertices,
    planar_build,
    planar_recover,
    planar_residual as _planar_residual,
)


def planar_residual(code1, code2, samples, seed):
    """Residual report of the planar conjugacy between two codes, as a dict."""
    return json.loads(_planar_residual(code1, code2, samples, seed))


def census(f):
    """Census report of a planar or 5-space map, as a dict."""
    return json.loads(f.census_json())


def assembly_residual(a, samples, seed):
    return json.loads(a.residual_json(samples, seed))


__all__ = [
    "FORMAT_VERSION",
    "Assembly",
    "ConstructionError",
    "Diffeo5",
    "Placement",
    "PlanarDiffeo",
    "ValidationError",
    "assemble",
    "assembly_residual",
    "census",
    "check_properties",
    "contamination",
    "decompose",
    "demo_shift_steps",
    "diffeo5_build",
    "place_vertices",
    "planar_build",
    "planar_recover",
    "planar_residual",
]
