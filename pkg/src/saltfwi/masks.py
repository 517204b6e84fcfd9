"""Four bundled salt geometries (a-d) and their canonical mask files.

The geometries are parametric stand-ins defined in fractions of the domain
extent, so they scale to any grid; the shipped `.mod` masks rasterize them
on the canonical 201x61, h=50 m survey grid.  Run ``python -m saltfwi.masks``
to regenerate the bundled files.
"""

from importlib import resources
from pathlib import Path

from .grid import Grid2D
from .model import Ellipse, EllipseUnion, Polygon, RasterMask

BUILTIN_NAMES = ("a", "b", "c", "d")
CANONICAL_GRID = Grid2D(nx=201, nz=61, h=50.0)


def builtin_shape(name: str, grid: Grid2D):
    """Parametric salt geometry scaled to the given grid."""
    if name not in BUILTIN_NAMES:
        raise ValueError(f"unknown builtin shape {name!r}; choose from {BUILTIN_NAMES}")
    x_min, x_max, z_min, z_max = grid.extent
    w = x_max - x_min
    d = z_max - z_min

    def pt(fx, fz):
        return (x_min + fx * w, z_min + fz * d)

    def ax(fx, fz):
        return (fx * w, fz * d)

    if name == "a":
        return Ellipse(center=pt(0.50, 0.48), semi_axes=ax(0.16, 0.22))
    if name == "b":
        return EllipseUnion((
            Ellipse(center=pt(0.40, 0.42), semi_axes=ax(0.13, 0.18)),
            Ellipse(center=pt(0.60, 0.56), semi_axes=ax(0.12, 0.16)),
        ))
    if name == "c":
        return Polygon((
            pt(0.36, 0.30), pt(0.55, 0.24), pt(0.66, 0.42), pt(0.62, 0.66),
            pt(0.47, 0.74), pt(0.36, 0.60), pt(0.42, 0.45),
        ))
    # d: wide flat slab with a central dome
    return EllipseUnion((
        Ellipse(center=pt(0.50, 0.62), semi_axes=ax(0.27, 0.14)),
        Ellipse(center=pt(0.50, 0.40), semi_axes=ax(0.10, 0.20)),
    ))


def builtin_mask(name: str, grid: Grid2D = CANONICAL_GRID):
    return builtin_shape(name, grid).contains(grid)


def bundled_mask_path(name: str) -> Path:
    if name not in BUILTIN_NAMES:
        raise ValueError(f"unknown builtin shape {name!r}")
    return Path(resources.files("saltfwi") / "data" / f"model_{name}.mask.mod")


def load_bundled_mask(name: str):
    """Canonical mask array from the shipped file, with its grid."""
    from .containers import grid_from_meta, read_mod

    values, header = read_mod(bundled_mask_path(name))
    return RasterMask(values.astype(bool)), grid_from_meta(header["grid"])


def write_bundled_masks(directory=None):
    from .containers import write_mod

    directory = Path(directory) if directory else Path(__file__).parent / "data"
    directory.mkdir(parents=True, exist_ok=True)
    for name in BUILTIN_NAMES:
        mask = builtin_mask(name, CANONICAL_GRID).astype(float)
        write_mod(directory / f"model_{name}.mask.mod", mask, grid=CANONICAL_GRID,
                  kind="mask", units="indicator", extra={"shape_name": name})


if __name__ == "__main__":
    write_bundled_masks()
