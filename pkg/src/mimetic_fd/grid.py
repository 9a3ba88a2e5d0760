"""Periodic uniform staggered grids and the fields that live on them.

Scalars (pressure, density) sit at cell centres, velocity-like quantities at
cell faces. In 1-D face ``i`` sits at ``x = i*h`` and cell ``i`` at
``x = (i + 1/2)*h``; face ``i`` lies between cells ``i-1`` and ``i``, all
indices taken modulo ``N``. A 2-D grid is the tensor product of two such
axes and carries one face set per axis, stored as a leading axis of length 2.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Sequence, Union

import numpy as np

__all__ = [
    "GridMismatchError",
    "StaggeredGrid",
    "CellField",
    "FaceField",
    "build_grid",
    "inner_product_cells",
    "inner_product_faces",
    "total_cells",
    "total_faces",
]

MIN_CELLS = 3


class GridMismatchError(ValueError):
    """Two fields defined on different grids were combined."""


@dataclass(frozen=True)
class StaggeredGrid:
    dims: int
    n_cells: tuple[int, ...]
    length: tuple[float, ...]

    def __post_init__(self):
        if self.dims not in (1, 2):
            raise ValueError(f"dims must be 1 or 2, got {self.dims}")
        if len(self.n_cells) != self.dims or len(self.length) != self.dims:
            raise ValueError("n_cells and length need one entry per axis")
        for n in self.n_cells:
            if int(n) != n or n < MIN_CELLS:
                raise ValueError(f"need at least {MIN_CELLS} cells per axis, got {n}")
        for L in self.length:
            if not (np.isfinite(L) and L > 0):
                raise ValueError(f"axis length must be positive, got {L}")

    @cached_property
    def spacing(self) -> tuple[float, ...]:
        return tuple(L / n for L, n in zip(self.length, self.n_cells))

    @property
    def h(self) -> float:
        """Spacing of a 1-D grid (smallest spacing in 2-D)."""
        return min(self.spacing)

    @cached_property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    @property
    def volume(self) -> float:
        return float(np.prod(self.length))

    @cached_property
    def cell_shape(self) -> tuple[int, ...]:
        return tuple(self.n_cells)

    @cached_property
    def face_shape(self) -> tuple[int, ...]:
        if self.dims == 1:
            return tuple(self.n_cells)
        return (self.dims,) + tuple(self.n_cells)

    @property
    def n_cell_dofs(self) -> int:
        return int(np.prod(self.cell_shape))

    @property
    def n_face_dofs(self) -> int:
        return int(np.prod(self.face_shape))

    @property
    def cell_weights(self) -> np.ndarray:
        return np.full(self.cell_shape, self.cell_volume)

    @property
    def face_weights(self) -> np.ndarray:
        # dual volume of a face equals the cell volume on a uniform periodic grid
        return np.full(self.face_shape, self.cell_volume)

    def cell_centers(self) -> tuple[np.ndarray, ...]:
        """Coordinates of the cell centres, one array of ``cell_shape`` per axis."""
        axes = [(np.arange(n) + 0.5) * h for n, h in zip(self.n_cells, self.spacing)]
        return tuple(np.meshgrid(*axes, indexing="ij"))

    def face_centers(self, axis: int = 0) -> tuple[np.ndarray, ...]:
        """Coordinates of the faces normal to ``axis``."""
        axes = [
            (np.arange(n) + (0.0 if k == axis else 0.5)) * h
            for k, (n, h) in enumerate(zip(self.n_cells, self.spacing))
        ]
        return tuple(np.meshgrid(*axes, indexing="ij"))

    def cells(self, values) -> "CellField":
        return CellField(self, values)

    def faces(self, values) -> "FaceField":
        return FaceField(self, values)

    def cell_ones(self) -> "CellField":
        return CellField(self, np.ones(self.cell_shape))

    def face_ones(self) -> "FaceField":
        return FaceField(self, np.ones(self.face_shape))


def build_grid(
    dims: int,
    n_cells: Union[int, Sequence[int]],
    length: Union[float, Sequence[float]],
) -> StaggeredGrid:
    """Build a periodic uniform grid; scalars are broadcast to every axis."""
    n = (n_cells,) * dims if np.isscalar(n_cells) else tuple(n_cells)
    L = (length,) * dims if np.isscalar(length) else tuple(length)
    n = tuple(int(k) if float(k).is_integer() else k for k in n)
    return StaggeredGrid(dims, n, tuple(float(x) for x in L))


class _Field:
    location = ""

    grid: StaggeredGrid
    values: np.ndarray

    def __init__(self, grid: StaggeredGrid, values):
        arr = np.array(values, dtype=float)
        shape = self._shape(grid)
        if arr.shape != shape:
            if arr.size == int(np.prod(shape)):
                arr = arr.reshape(shape)
            else:
                raise ValueError(
                    f"{self.location} field needs shape {shape}, got {arr.shape}"
                )
        self._finish(grid, arr)

    def _finish(self, grid, arr):
        # a finite sum is the cheap common case; fall back to the full scan
        if not np.isfinite(arr.sum()) and not np.isfinite(arr).all():
            raise ValueError(f"{self.location} field has non-finite entries")
        arr.flags.writeable = False
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", arr)

    @classmethod
    def _owned(cls, grid: StaggeredGrid, arr: np.ndarray):
        """Wrap a freshly computed array of the right shape without copying.

        Operator outputs only; skips the validation done by ``__init__``.
        """
        obj = cls.__new__(cls)
        arr.flags.writeable = False
        object.__setattr__(obj, "grid", grid)
        object.__setattr__(obj, "values", arr)
        return obj

    @staticmethod
    def _shape(grid):  # pragma: no cover - overridden
        raise NotImplementedError

    def __setattr__(self, name, value):
        raise AttributeError(f"{type(self).__name__} is immutable")

    def __repr__(self):
        return f"{type(self).__name__}({self.values!r})"

    def _check(self, other):
        if type(other) is not type(self):
            raise TypeError(f"cannot combine {type(self).__name__} with {type(other).__name__}")
        if other.grid != self.grid:
            raise GridMismatchError("fields live on different grids")

    def _new(self, values):
        return type(self)._owned(self.grid, values)

    def __add__(self, other):
        self._check(other)
        return self._new(self.values + other.values)

    def __sub__(self, other):
        self._check(other)
        return self._new(self.values - other.values)

    def __neg__(self):
        return self._new(-self.values)

    def __mul__(self, other):
        """Pointwise product with a field of the same kind, or scaling."""
        if isinstance(other, _Field):
            self._check(other)
            return self._new(self.values * other.values)
        return self._new(self.values * float(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, _Field):
            self._check(other)
            return self._new(self.values / other.values)
        return self._new(self.values / float(other))

    def map(self, fn) -> "_Field":
        return type(self)(self.grid, fn(self.values))

    def max_norm(self) -> float:
        return float(np.max(np.abs(self.values)))


class CellField(_Field):
    """Values at cell centres (``p``, ``rho``, ``Q(p)``, ...)."""

    location = "cell"

    @staticmethod
    def _shape(grid):
        return grid.cell_shape


class FaceField(_Field):
    """Values at cell faces (``v``, ``rv``, mass flux, face densities)."""

    location = "face"

    @staticmethod
    def _shape(grid):
        return grid.face_shape


def _pair(a, b, cls):
    if not isinstance(a, cls) or not isinstance(b, cls):
        raise TypeError(f"expected two {cls.__name__} arguments")
    a._check(b)


def inner_product_cells(a: CellField, b: CellField) -> float:
    """Volume-weighted scalar product of two cell fields."""
    _pair(a, b, CellField)
    return float(np.sum(a.grid.cell_weights * a.values * b.values))


def inner_product_faces(a: FaceField, b: FaceField) -> float:
    """Dual-volume-weighted scalar product of two face fields."""
    _pair(a, b, FaceField)
    return float(np.sum(a.grid.face_weights * a.values * b.values))


def total_cells(a: CellField) -> float:
    """Integral of a cell field, i.e. its product with the all-ones field."""
    return inner_product_cells(a.grid.cell_ones(), a)


def total_faces(a: FaceField) -> float:
    return inner_product_faces(a.grid.face_ones(), a)
