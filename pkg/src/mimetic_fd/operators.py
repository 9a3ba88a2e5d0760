"""Mimetic operators on periodic staggered grids.

Every operator here is built so that its structural identity holds to
round-off under the weighted products of :mod:`mimetic_fd.grid`:

* ``GRAD* = -DIV`` and therefore ``LAPL = DIV GRAD`` is self-adjoint;
* ``rGRAD* = -DIVr`` for any face density ``r``;
* ``rGRAD Q(p) = GRAD p`` and ``r~GRAD S(p) = GRAD Q(p)`` when the face
  densities come from :func:`face_density`;
* ``ADVEC + ADVEC* = diag(Interp DIV m)`` for the flux-form advection.

Dense realisations (:func:`assemble_dense`) exist only to verify these
identities on small grids.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .grid import CellField, FaceField, GridMismatchError, StaggeredGrid
from .laws import StateLaw

__all__ = [
    "FALLBACK_REL",
    "MAX_DENSE_UNKNOWNS",
    "OperatorMatrix",
    "grad",
    "div",
    "lapl",
    "interp_c2f",
    "face_density",
    "div_r",
    "r_grad",
    "advec",
    "assemble_dense",
    "adjoint_residual",
]

FALLBACK_REL = 1e-8
MAX_DENSE_UNKNOWNS = 4096


def _axis(grid, k):
    # 1-D fields have no component axis, 2-D face fields carry it first
    return 0 if grid.dims == 1 else k


def _component(v: np.ndarray, grid, k):
    return v if grid.dims == 1 else v[k]


def _stack(parts, grid):
    return parts[0] if grid.dims == 1 else np.stack(parts)


def _roll(a, shift, axis=0):
    """Periodic shift: ``out[i] = a[i - shift]`` along ``axis``."""
    if a.ndim == 1:
        return np.concatenate((a[-shift:], a[:-shift]))
    return np.roll(a, shift, axis=axis)


def _same_grid(a, b):
    if a.grid != b.grid:
        raise GridMismatchError("fields live on different grids")


def _left_right_values(a: np.ndarray, grid: StaggeredGrid):
    """Cell values on the left and right of every face, per axis."""
    left = [_roll(a, 1, axis=_axis(grid, k)) for k in range(grid.dims)]
    return _stack(left, grid), _stack([a] * grid.dims, grid)


# Array kernels: raw numpy in, raw numpy out. The field-level operators below
# wrap them; the model right-hand sides call them directly to stay cheap.


def grad_values(a: np.ndarray, grid: StaggeredGrid) -> np.ndarray:
    parts = [
        (a - _roll(a, 1, axis=_axis(grid, k))) / grid.spacing[k] for k in range(grid.dims)
    ]
    return _stack(parts, grid)


def div_values(v: np.ndarray, grid: StaggeredGrid) -> np.ndarray:
    out = np.zeros(grid.cell_shape)
    for k in range(grid.dims):
        c = _component(v, grid, k)
        out += (_roll(c, -1, axis=_axis(grid, k)) - c) / grid.spacing[k]
    return out


def interp_values(a: np.ndarray, grid: StaggeredGrid) -> np.ndarray:
    left, right = _left_right_values(a, grid)
    return 0.5 * (left + right)


def face_density_values(p: np.ndarray, law: StateLaw, kind: str, grid: StaggeredGrid) -> np.ndarray:
    pl, pr = _left_right_values(p, grid)
    if kind == "euler":
        num, den = pr - pl, law.Q_diff(pl, pr)
    elif kind == "compressible_wave":
        num, den = law.Q_diff(pl, pr), law.S_diff(pl, pr)
    else:
        raise ValueError(f"unknown face density kind {kind!r}")
    close = np.abs(pr - pl) <= FALLBACK_REL * np.maximum(np.maximum(np.abs(pl), np.abs(pr)), 1.0)
    if not close.any():
        return num / den
    return np.where(close, law.R(0.5 * (pl + pr)), num / np.where(close, 1.0, den))


def advec_values(m: np.ndarray, w: np.ndarray, grid: StaggeredGrid, half: float = 0.5) -> np.ndarray:
    if grid.dims != 1:
        raise NotImplementedError("advection is only available on 1-D grids")
    M = half * (m + _roll(m, -1))
    F = M * 0.5 * (w + _roll(w, -1))
    return (F - _roll(F, 1)) / grid.h


def grad(p: CellField) -> FaceField:
    return FaceField._owned(p.grid, grad_values(p.values, p.grid))


def div(v: FaceField) -> CellField:
    return CellField._owned(v.grid, div_values(v.values, v.grid))


def lapl(p: CellField) -> CellField:
    return div(grad(p))


def interp_c2f(a: CellField) -> FaceField:
    """Arithmetic mean of the two cells adjacent to each face."""
    return FaceField._owned(a.grid, interp_values(a.values, a.grid))


def face_density(p: CellField, law: StateLaw, kind: str = "euler") -> FaceField:
    """Face densities under which the discrete chain rules hold.

    ``kind="euler"`` gives ``r = dp / dQ(p)`` so that ``rGRAD Q(p) = GRAD p``;
    ``kind="compressible_wave"`` gives ``r = dQ(p) / dS(p)`` so that
    ``rGRAD S(p) = GRAD Q(p)``. The differences of Q and S are formed without
    cancellation, so the ratio stays accurate to a few ulps for nearly equal
    neighbours. Where neighbouring pressures agree to within ``FALLBACK_REL``
    the divided difference is replaced by ``R`` at the mean pressure, which
    differs from it only at second order in the pressure jump.
    """
    return FaceField._owned(p.grid, np.asarray(face_density_values(p.values, law, kind, p.grid), dtype=float))


def div_r(v: FaceField, r: FaceField) -> CellField:
    _same_grid(v, r)
    return CellField._owned(v.grid, div_values(r.values * v.values, v.grid))


def r_grad(s: CellField, r: FaceField) -> FaceField:
    _same_grid(s, r)
    return FaceField._owned(s.grid, r.values * grad_values(s.values, s.grid))


def advec(m: FaceField, w: FaceField) -> FaceField:
    """Flux-form advection of the face field ``w`` by the face mass flux ``m``.

    Fluxes live at cell centres: ``F_j = M_j (w_j + w_{j+1})/2`` with
    ``M_j = (m_j + m_{j+1})/2``, and ``(ADVEC w)_i = (F_i - F_{i-1}) / h``.
    """
    _same_grid(m, w)
    return FaceField._owned(m.grid, advec_values(m.values, w.values, m.grid))


@dataclass(frozen=True)
class OperatorMatrix:
    """Dense matrix of a linear operator plus the weights of its two spaces."""

    matrix: np.ndarray
    in_weights: np.ndarray
    out_weights: np.ndarray
    in_space: str
    out_space: str

    def __post_init__(self):
        rows, cols = self.matrix.shape
        if rows != self.out_weights.size or cols != self.in_weights.size:
            raise ValueError("matrix shape does not match the weight vectors")

    def adjoint(self) -> "OperatorMatrix":
        """Weighted adjoint ``W_in^{-1} A^T W_out``."""
        star = (self.matrix.T * self.out_weights[None, :]) / self.in_weights[:, None]
        return OperatorMatrix(star, self.out_weights, self.in_weights, self.out_space, self.in_space)

    @property
    def shape(self):
        return self.matrix.shape


def assemble_dense(
    op: Callable, grid: StaggeredGrid, source: str = "cells"
) -> OperatorMatrix:
    """Probe a linear operator with every basis field of ``source``.

    Coefficient fields must be frozen into ``op`` beforehand, e.g. with
    ``functools.partial`` or a lambda.
    """
    if source not in ("cells", "faces"):
        raise ValueError(f"source must be 'cells' or 'faces', got {source!r}")
    make = CellField if source == "cells" else FaceField
    shape = grid.cell_shape if source == "cells" else grid.face_shape
    n_in = int(np.prod(shape))
    if n_in > MAX_DENSE_UNKNOWNS:
        raise ValueError(f"{n_in} unknowns exceed the dense limit of {MAX_DENSE_UNKNOWNS}")
    columns = []
    out_space = None
    for j in range(n_in):
        e = np.zeros(n_in)
        e[j] = 1.0
        out = op(make(grid, e.reshape(shape)))
        out_space = "cells" if isinstance(out, CellField) else "faces"
        columns.append(out.values.ravel())
    A = np.column_stack(columns)
    if A.shape[0] > MAX_DENSE_UNKNOWNS:
        raise ValueError(f"{A.shape[0]} unknowns exceed the dense limit of {MAX_DENSE_UNKNOWNS}")
    w_in = (grid.cell_weights if source == "cells" else grid.face_weights).ravel()
    w_out = (grid.cell_weights if out_space == "cells" else grid.face_weights).ravel()
    return OperatorMatrix(A, w_in, w_out, source, out_space)


def adjoint_residual(A: OperatorMatrix, B: OperatorMatrix, sign: float = 1.0) -> float:
    """Max-norm of ``A* - sign*B``."""
    star = A.adjoint()
    if star.shape != B.shape or star.in_space != B.in_space or star.out_space != B.out_space:
        raise ValueError(f"adjoint of a {A.shape} operator cannot be compared with {B.shape}")
    return float(np.max(np.abs(star.matrix - sign * B.matrix)))
