import numpy as np
import pytest

from src.geometry import (
    clip_to_rect,
    diameter,
    ear_clip,
    is_convex,
    is_simple,
    point_in_polygon,
    polygon_centroid,
    segment_hits_disk,
    signed_area,
)

SQUARE = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
L_POLY = np.array([[0.0, 0.0], [2.0, 0.0], [2.0, 1.0], [1.0, 1.0], [1.0, 2.0], [0.0, 2.0]])


def test_area_and_centroid():
    assert signed_area(SQUARE) == pytest.approx(1.0)
    assert signed_area(SQUARE[::-1]) == pytest.approx(-1.0)
    np.testing.assert_allclose(polygon_centroid(SQUARE), [0.5, 0.5])
    assert signed_area(L_POLY) == pytest.approx(3.0)
    np.testing.assert_allclose(polygon_centroid(L_POLY), [2.5 / 3.0, 2.5 / 3.0])
    assert diameter(SQUARE) == pytest.approx(np.sqrt(2.0))


def test_convexity_and_simplicity():
    assert is_convex(SQUARE)
    assert not is_convex(L_POLY)
    assert is_simple(L_POLY)
    bowtie = np.array([[0.0, 0.0], [1.0, 1.0], [1.0, 0.0], [0.0, 1.0]])
    assert not is_simple(bowtie)


def test_clip_puts_new_vertices_exactly_on_the_rectangle():
    tri = np.array([[-0.3, -0.2], [1.7, 0.1], [0.4, 1.9]])
    piece = clip_to_rect(tri, (0.0, 0.0, 1.0, 1.0))
    assert signed_area(piece) > 0.0
    assert piece[:, 0].min() >= 0.0 and piece[:, 0].max() <= 1.0
    assert piece[:, 1].min() >= 0.0 and piece[:, 1].max() <= 1.0
    on_side = np.isin(piece[:, 0], [0.0, 1.0]) | np.isin(piece[:, 1], [0.0, 1.0])
    assert on_side.sum() >= 4


def test_clip_outside_is_empty():
    far = SQUARE + 5.0
    assert len(clip_to_rect(far, (0.0, 0.0, 1.0, 1.0))) == 0


@pytest.mark.parametrize("shift", range(6))
def test_ear_clip_covers_the_polygon(shift):
    # The reflex corner (1, 1) lies on the diagonal of the ear at the origin.
    poly = np.roll(L_POLY, shift, axis=0)
    triangles = ear_clip(poly)
    assert len(triangles) == len(poly) - 2
    areas = [signed_area(poly[list(t)]) for t in triangles]
    assert sum(areas) == pytest.approx(3.0)
    assert all(a > 0.0 for a in areas)


def test_ear_clip_with_hanging_nodes():
    poly = np.array(
        [[0.0, 0.0], [0.5, 0.0], [1.0, 0.0], [1.0, 0.5], [0.5, 0.5], [0.5, 1.0], [0.0, 1.0], [0.0, 0.5]]
    )
    triangles = ear_clip(poly)
    assert sum(signed_area(poly[list(t)]) for t in triangles) == pytest.approx(0.75)
    assert all(signed_area(poly[list(t)]) >= 0.0 for t in triangles)


def test_point_predicates():
    assert point_in_polygon((0.5, 0.5), L_POLY)
    assert not point_in_polygon((1.5, 1.5), L_POLY)
    assert not point_in_polygon((1.0, 1.5), L_POLY)
    assert not point_in_polygon((0.0, 0.0), L_POLY)
    center = np.array([0.5, 0.5])
    assert segment_hits_disk(np.array([0.0, 0.7]), np.array([1.0, 0.7]), center, 0.25)
    assert not segment_hits_disk(np.array([0.0, 0.8]), np.array([1.0, 0.8]), center, 0.25)
