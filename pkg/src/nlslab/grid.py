"""Periodic grids, sampled complex fields, and the spectral toolkit.

The computational domain is the box [-L, L)^d sampled at n points per axis
(n a power of two), a periodic surrogate for whole space.  Grid point j sits
at x_j = -L + j (2L/n), and the conjugate wavenumbers are 2 pi m / (2L) in
FFT ordering.  Integrals use the rectangle rule, which is spectrally accurate
for smooth periodic integrands; derivatives are Fourier multipliers.

Fields carry their grid and are treated as immutable: the sample buffer is
marked read-only at construction.  A field whose entries stopped being finite
mid-simulation is tagged ``post_blowup`` so downstream code can refuse to do
arithmetic with it by accident.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field as dc_field
from functools import cached_property

import numpy as np

from .errors import ConfigurationError, DomainError, UsageError

# largest supported n per axis, keyed by dimension
MAX_POINTS = {1: 1024, 2: 512, 3: 128}

# fraction of the half-width beyond which mass counts as "near the boundary"
BOUNDARY_SHELL = 0.9

_MAGIC = b"NLSFLD1\x00"
_HEADER = struct.Struct("<8sii d8x")  # magic, dim, n, L, pad to 32 bytes
assert _HEADER.size == 32


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid on [-L, L)^dim with n points per axis."""

    dim: int
    half_width: float
    points: int

    def __post_init__(self):
        if self.dim not in (1, 2, 3):
            raise ConfigurationError("dimension must be 1, 2, or 3")
        if self.half_width <= 0:
            raise ConfigurationError("half_width must be positive")
        n = self.points
        if n < 2 or (n & (n - 1)) != 0:
            raise ConfigurationError("points per axis must be a power of two")
        if n > MAX_POINTS[self.dim]:
            raise ConfigurationError(
                f"points per axis capped at {MAX_POINTS[self.dim]} in {self.dim}D")

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.points,) * self.dim

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_width / self.points

    @property
    def cell_volume(self) -> float:
        return self.spacing ** self.dim

    @cached_property
    def axis_coords(self) -> np.ndarray:
        return -self.half_width + self.spacing * np.arange(self.points)

    @cached_property
    def axis_wavenumbers(self) -> np.ndarray:
        # 2 pi m / (2L) in FFT ordering
        return 2.0 * np.pi * np.fft.fftfreq(self.points, d=self.spacing)

    def coordinate_mesh(self, axis: int) -> np.ndarray:
        """Broadcastable coordinate array for one axis."""
        shape = [1] * self.dim
        shape[axis] = self.points
        return self.axis_coords.reshape(shape)

    def wavenumber_mesh(self, axis: int) -> np.ndarray:
        shape = [1] * self.dim
        shape[axis] = self.points
        return self.axis_wavenumbers.reshape(shape)

    @cached_property
    def radius_sq(self) -> np.ndarray:
        out = np.zeros(self.shape)
        for ax in range(self.dim):
            out = out + self.coordinate_mesh(ax) ** 2
        return out

    @cached_property
    def wavenumber_sq(self) -> np.ndarray:
        out = np.zeros(self.shape)
        for ax in range(self.dim):
            out = out + self.wavenumber_mesh(ax) ** 2
        return out

    @cached_property
    def boundary_mask(self) -> np.ndarray:
        """Cells with |x_j| > BOUNDARY_SHELL * L along any axis."""
        mask = np.zeros(self.shape, dtype=bool)
        cut = BOUNDARY_SHELL * self.half_width
        for ax in range(self.dim):
            mask |= np.abs(self.coordinate_mesh(ax)) > cut
        return mask

    @cached_property
    def tail_mask(self) -> np.ndarray:
        """Modes whose integer frequency sits in the top third on any axis."""
        mask = np.zeros(self.shape, dtype=bool)
        m = np.abs(np.fft.fftfreq(self.points) * self.points)
        cut = (2.0 / 3.0) * (self.points / 2.0)
        axis_mask = m >= cut
        for ax in range(self.dim):
            shape = [1] * self.dim
            shape[ax] = self.points
            mask |= axis_mask.reshape(shape)
        return mask


@dataclass(frozen=True)
class Field:
    """Complex samples on a grid.  Values are read-only after construction."""

    grid: Grid
    values: np.ndarray
    post_blowup: bool = dc_field(default=False, compare=False)

    def __post_init__(self):
        vals = np.ascontiguousarray(self.values, dtype=np.complex128)
        if vals.shape == (self.grid.points ** self.grid.dim,):
            vals = vals.reshape(self.grid.shape)
        if vals.shape != self.grid.shape:
            raise UsageError(
                f"field shape {vals.shape} does not match grid {self.grid.shape}")
        if not self.post_blowup and not np.all(np.isfinite(vals.view(float))):
            raise UsageError("field contains non-finite values")
        if vals is self.values or not vals.flags.owndata:
            vals = vals.copy()
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    def __eq__(self, other):
        return (isinstance(other, Field) and self.grid == other.grid
                and np.array_equal(self.values, other.values))


def field_from_function(grid: Grid, fn) -> Field:
    """Sample fn(x0[, x1[, x2]]) on the grid."""
    meshes = [np.broadcast_to(grid.coordinate_mesh(ax), grid.shape)
              for ax in range(grid.dim)]
    return Field(grid, np.asarray(fn(*meshes), dtype=np.complex128))


def zero_field(grid: Grid) -> Field:
    return Field(grid, np.zeros(grid.shape, dtype=np.complex128))


def integrate(grid: Grid, samples: np.ndarray) -> float:
    """Rectangle-rule integral of a real sampled integrand over the box."""
    arr = np.asarray(samples)
    if arr.shape != grid.shape:
        raise UsageError(f"integrand shape {arr.shape} != grid shape {grid.shape}")
    return float(np.real(np.sum(arr)) * grid.cell_volume)


def gradient(field: Field) -> tuple[Field, ...]:
    """Spectral gradient, one field per axis."""
    hat = np.fft.fftn(field.values)
    out = []
    for ax in range(field.grid.dim):
        k = field.grid.wavenumber_mesh(ax)
        out.append(Field(field.grid, np.fft.ifftn(1j * k * hat)))
    return tuple(out)


def free_evolve(field: Field, t: float) -> Field:
    """Exact periodic free propagator: multiply modes by exp(-i |k|^2 t)."""
    hat = np.fft.fftn(field.values)
    hat *= np.exp(-1j * field.grid.wavenumber_sq * t)
    return Field(field.grid, np.fft.ifftn(hat))


def radial_asymmetry(field: Field) -> float:
    """Largest relative L2 change under axis reflections and swaps.

    Radial fields sampled on the grid are invariant under x -> -x per axis
    (index j -> n - j mod n, since the +L face is absent) and under axis
    permutations, so this measures how far a field is from radial.  Raises
    DomainError on the zero field.
    """
    vals = field.values
    norm = np.linalg.norm(vals)
    if norm == 0.0:
        raise DomainError("radial asymmetry of the zero field is undefined")
    worst = 0.0
    for ax in range(field.grid.dim):
        refl = np.roll(np.flip(vals, axis=ax), 1, axis=ax)
        worst = max(worst, float(np.linalg.norm(refl - vals) / norm))
    for ax in range(1, field.grid.dim):
        swapped = np.swapaxes(vals, 0, ax)
        worst = max(worst, float(np.linalg.norm(swapped - vals) / norm))
    return worst


def boundary_mass_fraction(field: Field) -> float:
    """Share of the L2 mass sitting within 10% of the box edge.

    Values near 1 mean the periodic surrogate stopped resembling whole space.
    The zero field reports 0 by convention.
    """
    dens = np.abs(field.values) ** 2
    total = float(dens.sum())
    if total == 0.0:
        return 0.0
    return float(dens[field.grid.boundary_mask].sum() / total)


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def save_field(field: Field, path) -> None:
    """Binary snapshot: 32-byte header then complex128 little-endian samples."""
    header = _HEADER.pack(_MAGIC, field.grid.dim, field.grid.points,
                          field.grid.half_width)
    data = np.ascontiguousarray(field.values, dtype="<c16")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(data.tobytes())


def load_field(path) -> Field:
    with open(path, "rb") as fh:
        raw = fh.read(_HEADER.size)
        if len(raw) != _HEADER.size:
            raise ConfigurationError(f"{path}: truncated field header")
        magic, dim, n, half_width = _HEADER.unpack(raw)
        if magic != _MAGIC:
            raise ConfigurationError(f"{path}: not a field snapshot")
        grid = Grid(dim, half_width, n)
        data = np.frombuffer(fh.read(), dtype="<c16")
    if data.size != n ** dim:
        raise ConfigurationError(f"{path}: truncated field payload")
    return Field(grid, data.reshape(grid.shape).astype(np.complex128))


def field_slice_csv(field: Field, path) -> None:
    """Write the 1D axis-0 slice through the centre as x,re,im CSV."""
    grid = field.grid
    vals = field.values
    centre = grid.points // 2
    if grid.dim == 2:
        vals = vals[:, centre]
    elif grid.dim == 3:
        vals = vals[:, centre, centre]
    with open(path, "w") as fh:
        fh.write("x,re,im\n")
        for x, v in zip(grid.axis_coords, vals):
            fh.write(f"{float(x)!r},{float(v.real)!r},{float(v.imag)!r}\n")
