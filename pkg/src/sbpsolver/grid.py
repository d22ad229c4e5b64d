"""Uniform box grids, nodal fields, boundary data, quadrature and norms.

Node ordering
-------------
Interior nodes of a grid with ``n_per_axis = (n0, n1, ...)`` are stored in
C order (last axis fastest): the flat index of the multi-index
``(i0, i1, ...)`` with ``0 <= ik < nk`` is ``np.ravel_multi_index``. The node
``(i0, ...)`` sits at ``x_k = (i_k + 1) * h_k``.

"Full" arrays carry one extra layer of boundary nodes on every side, with
shape ``(n0 + 2, n1 + 2, ...)``; the full node ``(j0, ...)`` sits at
``x_k = j_k * h_k``. Boundary nodes are enumerated in C order of the full
array restricted to the boundary mask (corners and edges included).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Literal, Mapping

import numpy as np

__all__ = [
    "GridDomain",
    "ScalarField",
    "BoundaryData",
    "build_grid",
    "integrate",
    "inner",
    "norm",
    "laplacian_stencil",
    "random_smooth_field",
    "FACE_NAMES",
]

NormKind = Literal["L2", "H01", "HOmega", "Linf"]

FACE_NAMES = ("x0", "x1", "y0", "y1", "z0", "z1")


@dataclass(frozen=True)
class GridDomain:
    """Uniform grid over the box ``prod_k (0, lengths[k])``."""

    dim: int
    n_per_axis: tuple[int, ...]
    lengths: tuple[float, ...]

    def __post_init__(self):
        if self.dim not in (1, 2, 3):
            raise ValueError(f"dim must be 1, 2 or 3, got {self.dim}")
        if len(self.n_per_axis) != self.dim or len(self.lengths) != self.dim:
            raise ValueError("n_per_axis and lengths must have one entry per axis")
        for n in self.n_per_axis:
            if int(n) != n or n < 3:
                raise ValueError(f"need at least 3 interior nodes per axis, got {n}")
        for length in self.lengths:
            if not (math.isfinite(length) and length > 0):
                raise ValueError(f"axis lengths must be positive, got {length}")

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple(L / (n + 1) for L, n in zip(self.lengths, self.n_per_axis))

    @property
    def shape(self) -> tuple[int, ...]:
        return self.n_per_axis

    @property
    def full_shape(self) -> tuple[int, ...]:
        return tuple(n + 2 for n in self.n_per_axis)

    @property
    def size(self) -> int:
        return math.prod(self.n_per_axis)

    @property
    def full_size(self) -> int:
        return math.prod(self.full_shape)

    @property
    def cell_volume(self) -> float:
        return math.prod(self.spacing)

    @property
    def h_max(self) -> float:
        return max(self.spacing)

    @cached_property
    def boundary_mask(self) -> np.ndarray:
        """Boolean mask over the full array, True on boundary nodes."""
        mask = np.ones(self.full_shape, dtype=bool)
        mask[(slice(1, -1),) * self.dim] = False
        mask.flags.writeable = False
        return mask

    @property
    def boundary_size(self) -> int:
        return self.full_size - self.size

    def axes(self, full: bool = False) -> list[np.ndarray]:
        """1D node coordinates per axis."""
        if full:
            return [np.arange(n + 2) * h for n, h in zip(self.n_per_axis, self.spacing)]
        return [np.arange(1, n + 1) * h for n, h in zip(self.n_per_axis, self.spacing)]

    def coordinates(self, full: bool = False) -> list[np.ndarray]:
        """Meshgrid (``indexing='ij'``) coordinate arrays."""
        return np.meshgrid(*self.axes(full), indexing="ij")

    def multi_index(self, flat: int) -> tuple[int, ...]:
        return tuple(int(i) for i in np.unravel_index(flat, self.shape))

    def flat_index(self, multi: tuple[int, ...]) -> int:
        return int(np.ravel_multi_index(multi, self.shape))

    def face_masks(self) -> dict[str, np.ndarray]:
        """Full-array masks of each face (faces share edge and corner nodes)."""
        masks = {}
        for axis in range(self.dim):
            for side, idx in (("0", 0), ("1", -1)):
                m = np.zeros(self.full_shape, dtype=bool)
                sl = [slice(None)] * self.dim
                sl[axis] = idx
                m[tuple(sl)] = True
                masks["xyz"[axis] + side] = m
        return masks

    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "n_per_axis": list(self.n_per_axis),
            "lengths": list(self.lengths),
        }


def build_grid(dim: int, n_per_axis, lengths) -> GridDomain:
    """Build a :class:`GridDomain`, accepting scalars for ``n_per_axis``/``lengths``."""
    if np.isscalar(n_per_axis):
        n_per_axis = [n_per_axis] * dim
    if np.isscalar(lengths):
        lengths = [lengths] * dim
    return GridDomain(int(dim), tuple(int(n) for n in n_per_axis), tuple(float(v) for v in lengths))


def _readonly(values: np.ndarray) -> np.ndarray:
    arr = np.array(values, dtype=np.float64, copy=True)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class ScalarField:
    """Nodal values of a scalar function on a :class:`GridDomain`.

    A homogeneous-trace field stores the interior nodes only (length
    ``domain.size``); its boundary values are zero by construction. A lifted
    field stores the full node set (length ``domain.full_size``).
    """

    domain: GridDomain
    values: np.ndarray
    lifted: bool = False
    name: str = ""

    def __post_init__(self):
        values = _readonly(np.ravel(self.values))
        expected = self.domain.full_size if self.lifted else self.domain.size
        if values.size != expected:
            raise ValueError(
                f"field '{self.name}' has {values.size} values, expected {expected}"
            )
        object.__setattr__(self, "values", values)

    @classmethod
    def zeros(cls, domain: GridDomain, name: str = "") -> ScalarField:
        return cls(domain, np.zeros(domain.size), name=name)

    @classmethod
    def from_function(cls, domain: GridDomain, fn: Callable, lifted: bool = False, name: str = ""):
        """Sample ``fn(*coords)`` at interior (or all, if ``lifted``) nodes."""
        coords = domain.coordinates(full=lifted)
        vals = np.broadcast_to(np.asarray(fn(*coords), dtype=float), coords[0].shape)
        return cls(domain, vals, lifted=lifted, name=name)

    @classmethod
    def from_full(cls, domain: GridDomain, full: np.ndarray, name: str = "") -> ScalarField:
        return cls(domain, full, lifted=True, name=name)

    def interior(self) -> np.ndarray:
        """Interior values as an array of shape ``domain.shape``."""
        if self.lifted:
            full = self.values.reshape(self.domain.full_shape)
            return full[(slice(1, -1),) * self.domain.dim]
        return self.values.reshape(self.domain.shape)

    def full(self) -> np.ndarray:
        """Fresh array of values on the full node set (zeros on the boundary
        for homogeneous fields)."""
        if self.lifted:
            return self.values.reshape(self.domain.full_shape).copy()
        out = np.zeros(self.domain.full_shape)
        out[(slice(1, -1),) * self.domain.dim] = self.values.reshape(self.domain.shape)
        return out

    def boundary_values(self) -> np.ndarray:
        return self.full()[self.domain.boundary_mask]

    def with_values(self, values: np.ndarray, name: str | None = None) -> ScalarField:
        return ScalarField(self.domain, values, self.lifted, self.name if name is None else name)

    def __neg__(self):
        return self.with_values(-self.values)

    def __mul__(self, t: float):
        return self.with_values(t * self.values)

    __rmul__ = __mul__

    def __add__(self, other: ScalarField):
        _same(self, other)
        return self.with_values(self.values + other.values)

    def __sub__(self, other: ScalarField):
        _same(self, other)
        return self.with_values(self.values - other.values)


def _same(a: ScalarField, b: ScalarField) -> None:
    if a.domain != b.domain or a.lifted != b.lifted:
        raise ValueError("fields live on different grids or node sets")


@dataclass(frozen=True, eq=False)
class BoundaryData:
    """Nodal values on the boundary, in boundary-node order."""

    domain: GridDomain
    values: np.ndarray

    def __post_init__(self):
        values = _readonly(np.ravel(self.values))
        if values.size != self.domain.boundary_size:
            raise ValueError(
                f"boundary data has {values.size} values, expected {self.domain.boundary_size}"
            )
        if not np.all(np.isfinite(values)):
            raise ValueError("boundary data must be finite")
        object.__setattr__(self, "values", values)

    @classmethod
    def constant(cls, domain: GridDomain, value: float) -> BoundaryData:
        return cls(domain, np.full(domain.boundary_size, float(value)))

    @classmethod
    def zeros(cls, domain: GridDomain) -> BoundaryData:
        return cls.constant(domain, 0.0)

    @classmethod
    def per_face(cls, domain: GridDomain, faces: Mapping[str, float], default: float = 0.0):
        """Per-face constants. Nodes shared by several faces take the value of
        the first face in ``FACE_NAMES`` order (x0, x1, y0, y1, z0, z1)."""
        names = FACE_NAMES[: 2 * domain.dim]
        unknown = set(faces) - set(names)
        if unknown:
            raise ValueError(f"unknown face names {sorted(unknown)}; expected {list(names)}")
        full = np.full(domain.full_shape, float(default))
        masks = domain.face_masks()
        for name in reversed(names):
            if name in faces:
                full[masks[name]] = float(faces[name])
        return cls(domain, full[domain.boundary_mask])

    @classmethod
    def from_function(cls, domain: GridDomain, fn: Callable) -> BoundaryData:
        """Sample ``fn(*coords)`` at the boundary nodes."""
        coords = domain.coordinates(full=True)
        full = np.broadcast_to(np.asarray(fn(*coords), dtype=float), coords[0].shape)
        return cls(domain, full[domain.boundary_mask])

    def full(self) -> np.ndarray:
        """Full array holding the data on the boundary and zeros inside."""
        out = np.zeros(self.domain.full_shape)
        out[self.domain.boundary_mask] = self.values
        return out

    def is_zero(self) -> bool:
        return not np.any(self.values)

    def __mul__(self, t: float):
        return BoundaryData(self.domain, t * self.values)

    __rmul__ = __mul__

    def __sub__(self, other: BoundaryData):
        return BoundaryData(self.domain, self.values - other.values)


def integrate(f: ScalarField) -> float:
    """Nodal quadrature: sum of interior values times the cell volume.

    Equal to the trapezoidal rule when the field vanishes on the boundary,
    hence second-order accurate for smooth homogeneous-trace integrands.
    """
    return float(np.sum(f.interior()) * f.domain.cell_volume)


def inner(a: ScalarField, b: ScalarField) -> float:
    """Discrete L2 inner product over interior nodes."""
    if a.domain != b.domain:
        raise ValueError("fields live on different grids")
    return float(np.vdot(a.interior(), b.interior()) * a.domain.cell_volume)


def laplacian_stencil(full: np.ndarray, spacing) -> np.ndarray:
    """Standard (2d+1)-point Laplacian of a full array, evaluated at interior nodes."""
    dim = full.ndim
    inner_sl = (slice(1, -1),) * dim
    out = np.zeros(tuple(s - 2 for s in full.shape))
    centre = full[inner_sl]
    for axis, h in enumerate(spacing):
        lo = list(inner_sl)
        hi = list(inner_sl)
        lo[axis] = slice(0, -2)
        hi[axis] = slice(2, None)
        out += (full[tuple(lo)] - 2.0 * centre + full[tuple(hi)]) / (h * h)
    return out


def _gradient_energy(full: np.ndarray, spacing, cell_volume: float) -> float:
    total = 0.0
    for axis, h in enumerate(spacing):
        d = np.diff(full, axis=axis) / h
        total += float(np.sum(d * d))
    return total * cell_volume


def norm(f: ScalarField, kind: NormKind = "L2") -> float:
    """Discrete norms.

    ``L2``: sqrt of the nodal quadrature of ``f**2``. ``H01``: sqrt of the sum
    of squared forward differences (equal to ``<-Lap_h f, f>``), the gradient
    norm. ``HOmega``: L2 norm of the discrete Laplacian. ``Linf``: max modulus,
    including boundary nodes for lifted fields.
    """
    d = f.domain
    if kind == "L2":
        return math.sqrt(float(np.sum(f.interior() ** 2)) * d.cell_volume)
    if kind == "Linf":
        return float(np.max(np.abs(f.values))) if f.values.size else 0.0
    if kind in ("H01", "HOmega"):
        if f.lifted:
            raise ValueError(f"{kind} norm requires a homogeneous-trace field")
        full = f.full()
        if kind == "H01":
            return math.sqrt(_gradient_energy(full, d.spacing, d.cell_volume))
        lap = laplacian_stencil(full, d.spacing)
        return math.sqrt(float(np.sum(lap * lap)) * d.cell_volume)
    raise ValueError(f"unknown norm kind {kind!r}")


def random_smooth_field(
    domain: GridDomain,
    rng: np.random.Generator,
    modes: int = 6,
    decay: float = 1.0,
    name: str = "",
) -> ScalarField:
    """Random homogeneous-trace field built from low-frequency sine modes.

    Coefficients are standard normal divided by ``(1 + |j|^2)^decay`` for the
    mode multi-index ``j``. The field is a sample of one fixed continuum
    function, so derived ratios are stable under grid refinement.
    """
    ks = [min(modes, n) for n in domain.n_per_axis]
    coeffs = rng.standard_normal(ks)
    jj = np.meshgrid(*[np.arange(1, k + 1) for k in ks], indexing="ij")
    coeffs = coeffs / (1.0 + sum(j.astype(float) ** 2 for j in jj)) ** decay
    basis = [
        np.sin(np.pi * np.outer(x, np.arange(1, k + 1)) / L)
        for x, k, L in zip(domain.axes(), ks, domain.lengths)
    ]
    if domain.dim == 1:
        vals = basis[0] @ coeffs
    elif domain.dim == 2:
        vals = basis[0] @ coeffs @ basis[1].T
    else:
        vals = np.einsum("abc,ia,jb,kc->ijk", coeffs, *basis, optimize=True)
    return ScalarField(domain, vals, name=name)
