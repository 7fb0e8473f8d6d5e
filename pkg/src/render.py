"""Pictures: PNG previews of meshes and SVG convergence plots."""

from pathlib import Path
from typing import Iterable, Optional, Tuple, Union

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
from PIL import Image, ImageDraw  # noqa: E402

from src.config import (  # noqa: E402
    GLOBAL_COLOR,
    INNER_COLOR,
    MESH_BACKGROUND,
    MESH_EDGE_COLOR,
    MESH_FILL_COLOR,
    MESH_PNG_SIZE,
    OUTER_COLOR,
    REFERENCE_COLOR,
)
from src.mesh.types import Mesh  # noqa: E402

PathLike = Union[str, Path]
RGB = Tuple[int, int, int]
HIGHLIGHT_COLOR: RGB = (255, 214, 102)
DISK_COLOR: RGB = (200, 40, 40)
MARGIN = 10


def _to_pixels(mesh: Mesh, size: int):
    xmin, ymin, xmax, ymax = mesh.domain.bbox
    scale = (size - 2 * MARGIN) / max(xmax - xmin, ymax - ymin)

    def transform(points: np.ndarray) -> list:
        # Image rows grow downward.
        px = MARGIN + (points[:, 0] - xmin) * scale
        py = size - MARGIN - (points[:, 1] - ymin) * scale
        return list(zip(px.tolist(), py.tolist()))

    return transform, scale


def draw_mesh(
    mesh: Mesh,
    *,
    size: int = MESH_PNG_SIZE,
    highlight: Optional[Iterable[int]] = None,
    disk: Optional[Tuple[Tuple[float, float], float]] = None,
) -> Image.Image:
    """Cells filled and outlined; ``highlight`` cells in a second colour, ``disk`` as a circle."""
    image = Image.new("RGB", (size, size), MESH_BACKGROUND)
    draw = ImageDraw.Draw(image)
    transform, scale = _to_pixels(mesh, size)
    marked = set(highlight or ())
    for c in range(mesh.n_cells):
        fill = HIGHLIGHT_COLOR if c in marked else MESH_FILL_COLOR
        draw.polygon(transform(mesh.cell_coords(c)), fill=fill, outline=MESH_EDGE_COLOR)
    if disk is not None:
        (cx, cy), radius = disk
        (px, py), = transform(np.array([[cx, cy]]))
        r = radius * scale
        draw.ellipse((px - r, py - r, px + r, py + r), outline=DISK_COLOR, width=2)
    return image


def render_mesh_png(mesh: Mesh, path: PathLike, **kwargs) -> Path:
    path = Path(path)
    draw_mesh(mesh, **kwargs).save(path, format="PNG")
    return path


def plot_convergence(table, path: PathLike) -> Path:
    """Log-log plot of the three error columns of a convergence table.

    Squares mark the global error, diamonds the two local ones; dotted lines
    show the expected global and local slopes anchored at the finest level.
    """
    path = Path(path)
    h = table.column("h")
    fig, ax = plt.subplots(figsize=(6, 4.5))
    ax.loglog(h, table.column("e1_global"), "s-", color=GLOBAL_COLOR, label="global")
    ax.loglog(h, table.column("e1_inner"), "D-", color=INNER_COLOR, label="inner")
    ax.loglog(h, table.column("e1_outer"), "D--", color=OUTER_COLOR, label="outer")

    h_ref = np.array([h[0], h[-1]])
    for rate, column in ((table.expected_global, "e1_global"), (table.expected_local, "e1_inner")):
        anchor = table.column(column)[-1]
        if anchor > 0.0:
            ax.loglog(
                h_ref,
                anchor * (h_ref / h[-1]) ** rate,
                ":",
                color=REFERENCE_COLOR,
                linewidth=0.9,
                label=f"slope {rate:.3g}",
            )

    ax.set_xlabel("h")
    ax.set_ylabel("error")
    ax.set_title(f"{table.problem}, k={table.k}, m={table.m}")
    ax.legend(fontsize=8, loc="lower right")
    ax.grid(True, alpha=0.3, which="both")
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path
