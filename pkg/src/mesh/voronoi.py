import logging
from typing import List, Tuple

import numpy as np
from scipy.spatial import Voronoi

from src.config import (
    DEFAULT_GAMMA0,
    DEFAULT_GAMMA1,
    DEGENERATE_AREA_RATIO,
    MIN_CELLS,
    VORONOI_BASE_SEEDS,
    VORONOI_LLOYD_ITERS,
    VORONOI_MIN_EDGE_RATIO,
)
from src.errors import ConfigError, DegenerateCellError, MeshError
from src.geometry import polygon_centroid, signed_area
from src.mesh.builder import build_mesh, clip_to_domain
from src.mesh.quality import check_regularity
from src.mesh.types import Domain, Mesh

logger = logging.getLogger(__name__)


def _sample_seeds(domain: Domain, n_seeds: int, rng: np.random.Generator) -> np.ndarray:
    xmin, ymin, xmax, ymax = domain.bbox
    seeds: List[np.ndarray] = []
    while len(seeds) < n_seeds:
        batch = rng.uniform((xmin, ymin), (xmax, ymax), size=(n_seeds, 2))
        for p in batch:
            if domain.contains(p):
                seeds.append(p)
                if len(seeds) == n_seeds:
                    break
    return np.array(seeds)


def _mirror(seeds: np.ndarray, domain: Domain) -> np.ndarray:
    """Reflect the seeds across the four bounding-box sides so every real cell is bounded.

    On the L-shape the seeds next to the notch are also reflected across its
    two sides, which keeps cells from reaching into the notch.
    """
    xmin, ymin, xmax, ymax = domain.bbox
    mirrored = [seeds]
    for axis, bound in ((0, xmin), (0, xmax), (1, ymin), (1, ymax)):
        flipped = seeds.copy()
        flipped[:, axis] = 2.0 * bound - flipped[:, axis]
        mirrored.append(flipped)
    if domain is Domain.L_SHAPE:
        mirrored.append(seeds[seeds[:, 1] > 0.0] * (-1.0, 1.0))
        mirrored.append(seeds[seeds[:, 0] > 0.0] * (1.0, -1.0))
    return np.vstack(mirrored)


def voronoi_pieces(seeds: np.ndarray, domain: Domain) -> List[Tuple[int, np.ndarray]]:
    """Voronoi cells of the seeds clipped to the domain, tagged with their seed."""
    vor = Voronoi(_mirror(seeds, domain))
    pieces: List[Tuple[int, np.ndarray]] = []
    for i in range(len(seeds)):
        region = vor.regions[vor.point_region[i]]
        if -1 in region or len(region) < 3:
            raise MeshError(f"Voronoi cell of seed {i} is unbounded")
        poly = vor.vertices[region]
        if signed_area(poly) < 0.0:
            poly = poly[::-1]
        for piece in clip_to_domain(poly, domain):
            pieces.append((i, piece))
    return pieces


def _lloyd_step(seeds: np.ndarray, pieces: List[Tuple[int, np.ndarray]], domain: Domain) -> np.ndarray:
    area = np.zeros(len(seeds))
    moment = np.zeros_like(seeds)
    for i, piece in pieces:
        a = signed_area(piece)
        area[i] += a
        moment[i] += a * polygon_centroid(piece)
    updated = seeds.copy()
    for i in range(len(seeds)):
        if area[i] <= 0.0:
            continue
        centroid = moment[i] / area[i]
        # A union of pieces near the re-entrant corner can have its centroid outside.
        if domain.contains(centroid):
            updated[i] = centroid
    return updated


def generate_voronoi_mesh(domain: Domain, n_seeds: int, lloyd_iters: int, rng_seed: int) -> Mesh:
    """Lloyd-relaxed Voronoi tessellation of uniformly sampled seeds, clipped to the domain.

    The result is a pure function of the arguments: seeds come from a PCG64
    generator seeded with ``rng_seed``.
    """
    if n_seeds < 4:
        raise ConfigError(f"Voronoi mesh needs at least 4 seeds, got {n_seeds}")
    if lloyd_iters < 0:
        raise ConfigError(f"lloyd_iters must be >= 0, got {lloyd_iters}")
    rng = np.random.Generator(np.random.PCG64(rng_seed))
    seeds = _sample_seeds(domain, n_seeds, rng)
    pieces = voronoi_pieces(seeds, domain)
    for sweep in range(lloyd_iters):
        seeds = _lloyd_step(seeds, pieces, domain)
        pieces = voronoi_pieces(seeds, domain)
        logger.debug("Lloyd sweep %d/%d done", sweep + 1, lloyd_iters)

    mesh = build_mesh(
        [p for _, p in pieces],
        domain,
        nominal_area=domain.area / n_seeds,
        min_edge_ratio=VORONOI_MIN_EDGE_RATIO,
        require_convex=True,
        meta={"n_seeds": n_seeds, "lloyd_iters": lloyd_iters, "rng_seed": rng_seed},
    )
    min_area = DEGENERATE_AREA_RATIO * domain.area
    for ci in range(mesh.n_cells):
        if signed_area(mesh.cell_coords(ci)) < min_area:
            raise DegenerateCellError(
                f"Voronoi cell {ci} is degenerate; retry with another seed "
                "or more Lloyd iterations",
                ci,
            )
    if mesh.n_cells < MIN_CELLS:
        raise MeshError(f"Voronoi mesh has only {mesh.n_cells} cells")
    report = check_regularity(mesh, DEFAULT_GAMMA0, DEFAULT_GAMMA1)
    logger.info(
        "Voronoi mesh: %d seeds, %d cells, h = %.4g, gamma0 = %.3f, gamma1 = %.3f",
        n_seeds,
        mesh.n_cells,
        mesh.h,
        report.gamma0_observed,
        report.gamma1_observed,
    )
    return mesh


def seeds_for_level(level: int, base: int = VORONOI_BASE_SEEDS) -> int:
    return base * 4**level


def generate_voronoi_level(
    domain: Domain, level: int, *, lloyd_iters: int = VORONOI_LLOYD_ITERS, rng_seed: int = 1
) -> Mesh:
    if level < 1:
        raise ConfigError(f"Voronoi mesh level must be >= 1, got {level}")
    n_seeds = int(round(seeds_for_level(level) * domain.area))
    return generate_voronoi_mesh(domain, n_seeds, lloyd_iters, rng_seed)
