"""Reparameterizations, 1-D grids and grid functions."""

from __future__ import annotations

import enum
import hashlib
from dataclasses import dataclass
from functools import cached_property

import numpy as np


class PsiKind(enum.Enum):
    IDENTITY = "identity"
    POWER = "power"
    LOGARITHMIC = "logarithmic"
    EXPONENTIAL = "exponential"


@dataclass(frozen=True)
class PsiMap:
    r"""Increasing reparameterization :math:`\psi` used by the fractional kernels.

    ``power`` is :math:`(x + c)^\gamma` with parameters ``(gamma, c)``,
    ``logarithmic`` is :math:`\log(x + c)` with parameter ``(c,)`` and
    ``exponential`` is :math:`e^{\lambda x}` with parameter ``(lambda,)``.
    Use :func:`make_psi_map` to get validated instances.
    """

    kind: PsiKind
    params: tuple[float, ...] = ()

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind is PsiKind.IDENTITY:
            return x.copy()
        if self.kind is PsiKind.POWER:
            gamma, c = self.params
            return (x + c) ** gamma
        if self.kind is PsiKind.LOGARITHMIC:
            (c,) = self.params
            return np.log(x + c)
        (lam,) = self.params
        return np.exp(lam * x)

    def deriv(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind is PsiKind.IDENTITY:
            return np.ones_like(x)
        if self.kind is PsiKind.POWER:
            gamma, c = self.params
            return gamma * (x + c) ** (gamma - 1)
        if self.kind is PsiKind.LOGARITHMIC:
            (c,) = self.params
            return 1.0 / (x + c)
        (lam,) = self.params
        return lam * np.exp(lam * x)

    def inverse(self, y):
        y = np.asarray(y, dtype=float)
        if self.kind is PsiKind.IDENTITY:
            return y.copy()
        if self.kind is PsiKind.POWER:
            gamma, c = self.params
            return y ** (1.0 / gamma) - c
        if self.kind is PsiKind.LOGARITHMIC:
            (c,) = self.params
            return np.exp(y) - c
        (lam,) = self.params
        return np.log(y) / lam

    def check_domain(self, L: float) -> None:
        """Raise if :math:`\\psi` is not smooth and strictly increasing on ``[0, L]``."""
        x = np.linspace(0.0, L, 257)
        with np.errstate(all="ignore"):
            d = self.deriv(x)
            v = self(x)
        if not (np.all(np.isfinite(d)) and np.all(np.isfinite(v))):
            raise ValueError(f"psi {self.describe()} is not finite on [0, {L}]")
        if not np.all(d > 0):
            raise ValueError(f"psi {self.describe()} is not increasing on [0, {L}]")

    def describe(self) -> str:
        if not self.params:
            return self.kind.value
        return f"{self.kind.value}:" + ",".join(repr(float(p)) for p in self.params)


_DEFAULT_SHIFT = 1.0


def make_psi_map(kind: str | PsiKind, params=(), L: float | None = None) -> PsiMap:
    """Build a :class:`PsiMap`, checking monotonicity on ``[0, L]`` if given.

    ``power`` accepts ``[gamma]`` or ``[gamma, shift]`` (shift defaults to 1 so
    that the derivative does not vanish at the origin); ``logarithmic``
    accepts ``[]`` or ``[shift]``; ``exponential`` needs ``[lambda]``.
    """
    kind = PsiKind(kind)
    params = tuple(float(p) for p in params)

    if kind is PsiKind.IDENTITY:
        if params:
            raise ValueError("identity psi takes no parameters")
    elif kind is PsiKind.POWER:
        if len(params) == 1:
            params = (params[0], _DEFAULT_SHIFT)
        if len(params) != 2:
            raise ValueError("power psi takes [gamma] or [gamma, shift]")
        gamma, c = params
        if not gamma > 0:
            raise ValueError(f"power psi needs gamma > 0, got {gamma}")
        if not c > 0:
            raise ValueError(f"power psi needs shift > 0 to keep psi' > 0 at 0, got {c}")
    elif kind is PsiKind.LOGARITHMIC:
        if not params:
            params = (_DEFAULT_SHIFT,)
        if len(params) != 1 or not params[0] > 0:
            raise ValueError("logarithmic psi takes [] or [shift] with shift > 0")
    else:
        if len(params) != 1:
            raise ValueError("exponential psi takes [lambda]")
        if not params[0] > 0:
            raise ValueError(f"exponential psi needs lambda > 0, got {params[0]}")

    psi = PsiMap(kind, params)
    if L is not None:
        psi.check_domain(L)
    return psi


def parse_psi(text: str, L: float | None = None) -> PsiMap:
    """Parse ``kind[:p1,p2,...]``, e.g. ``identity`` or ``power:2,1``."""
    kind, _, rest = text.strip().partition(":")
    params = [float(s) for s in rest.split(",") if s.strip()] if rest else []
    return make_psi_map(kind.strip(), params, L=L)


IDENTITY = PsiMap(PsiKind.IDENTITY)


class _Support:
    """Points with composite quadrature weights."""

    points: np.ndarray
    weights: np.ndarray
    L: float

    @property
    def size(self) -> int:
        return self.points.size

    def integrate(self, values) -> float:
        return float(np.dot(self.weights, values))

    @cached_property
    def key(self) -> str:
        h = hashlib.sha1(np.ascontiguousarray(self.points).tobytes())
        return f"{type(self).__name__}:{self.size}:{h.hexdigest()}"

    def __hash__(self) -> int:
        return hash(self.key)

    def __eq__(self, other) -> bool:
        return isinstance(other, _Support) and self.key == other.key


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.flags.writeable = False
    return a


class Grid(_Support):
    """Strictly increasing nodes ``0 = x_0 < ... < x_{N-1} = L``.

    Quadrature over nodes is the composite trapezoid rule.
    """

    def __init__(self, nodes):
        nodes = np.asarray(nodes, dtype=float)
        if nodes.ndim != 1 or nodes.size < 3:
            raise ValueError("a grid needs at least 3 nodes")
        if nodes[0] != 0.0:
            raise ValueError(f"first node must be 0, got {nodes[0]}")
        if not np.all(np.diff(nodes) > 0):
            raise ValueError("grid nodes must be strictly increasing")
        self.points = _frozen(nodes)
        self.L = float(nodes[-1])
        h = np.diff(nodes)
        w = np.zeros_like(nodes)
        w[:-1] += h / 2
        w[1:] += h / 2
        self.weights = _frozen(w)

    @classmethod
    def uniform(cls, L: float, N: int) -> Grid:
        if not L > 0:
            raise ValueError(f"domain length must be positive, got {L}")
        x = np.linspace(0.0, L, int(N))
        x[-1] = L
        return cls(x)

    @classmethod
    def uniform_in_psi(cls, L: float, N: int, psi: PsiMap) -> Grid:
        """Nodes equally spaced in ``psi(x)`` rather than in ``x``."""
        psi.check_domain(L)
        y = np.linspace(float(psi(0.0)), float(psi(L)), int(N))
        x = psi.inverse(y)
        x[0], x[-1] = 0.0, L
        return cls(x)

    @property
    def nodes(self) -> np.ndarray:
        return self.points

    @property
    def h(self) -> np.ndarray:
        return np.diff(self.points)

    @cached_property
    def cells(self) -> Cells:
        return Cells(self)

    def __repr__(self) -> str:
        return f"Grid(L={self.L}, N={self.size})"


class Cells(_Support):
    """Cell midpoints of a :class:`Grid`, integrated with the midpoint rule."""

    def __init__(self, grid: Grid):
        self.grid = grid
        x = grid.points
        self.points = _frozen(0.5 * (x[1:] + x[:-1]))
        self.weights = _frozen(np.diff(x))
        self.L = grid.L

    def __repr__(self) -> str:
        return f"Cells(L={self.L}, N={self.size})"


Support = Grid | Cells


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Values sampled on a grid's nodes or on its cell midpoints."""

    grid: Grid | Cells
    values: np.ndarray

    def __post_init__(self) -> None:
        v = np.array(self.values, dtype=float)
        if v.shape != (self.grid.size,):
            raise ValueError(
                f"expected {self.grid.size} values for {self.grid!r}, got shape {v.shape}"
            )
        if not np.all(np.isfinite(v)):
            raise ValueError("grid function values must be finite")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @classmethod
    def from_function(cls, grid: Grid | Cells, f) -> GridFunction:
        return cls(grid, np.broadcast_to(f(grid.points), grid.points.shape))

    @classmethod
    def zeros(cls, grid: Grid | Cells) -> GridFunction:
        return cls(grid, np.zeros(grid.size))

    def integral(self) -> float:
        return self.grid.integrate(self.values)

    def _same_grid(self, other: GridFunction) -> None:
        if other.grid != self.grid:
            raise ValueError("grid functions live on different grids")

    def __add__(self, other: GridFunction) -> GridFunction:
        self._same_grid(other)
        return GridFunction(self.grid, self.values + other.values)

    def __sub__(self, other: GridFunction) -> GridFunction:
        self._same_grid(other)
        return GridFunction(self.grid, self.values - other.values)

    def __mul__(self, c: float) -> GridFunction:
        return GridFunction(self.grid, c * self.values)

    __rmul__ = __mul__

    def __truediv__(self, c: float) -> GridFunction:
        return GridFunction(self.grid, self.values / c)


def check_same_grid(*fs: GridFunction) -> None:
    for f in fs[1:]:
        if f.grid != fs[0].grid:
            raise ValueError(f"grid mismatch: {fs[0].grid!r} vs {f.grid!r}")
