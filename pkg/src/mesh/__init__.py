from functools import partial

from src.errors import ConfigError

from .builder import build_mesh, clip_to_domain, validate_mesh
from .hexagonal import generate_hex_mesh
from .io import read_mesh, write_mesh
from .quality import check_regularity, element_geometry, polygon_geometry
from .types import Domain, ElementGeometry, Mesh, RegularityReport
from .voronoi import generate_voronoi_level, generate_voronoi_mesh, seeds_for_level

MESH_FAMILIES = {
    "hex": generate_hex_mesh,
    "voronoi": generate_voronoi_level,
}


def family_mesh(family: str, domain: Domain, level: int, *, rng_seed: int = 1) -> Mesh:
    """Level-th member of a refinement sequence; h ~ 2**-level for both families."""
    if family not in MESH_FAMILIES:
        raise ConfigError(f"unknown mesh family {family!r}; choose from {sorted(MESH_FAMILIES)}")
    generator = MESH_FAMILIES[family]
    if family == "voronoi":
        generator = partial(generator, rng_seed=rng_seed)
    return generator(domain, level)


__all__ = [
    "MESH_FAMILIES",
    "Domain",
    "ElementGeometry",
    "Mesh",
    "RegularityReport",
    "build_mesh",
    "check_regularity",
    "clip_to_domain",
    "element_geometry",
    "family_mesh",
    "generate_hex_mesh",
    "generate_voronoi_level",
    "generate_voronoi_mesh",
    "polygon_geometry",
    "read_mesh",
    "seeds_for_level",
    "validate_mesh",
    "write_mesh",
]
