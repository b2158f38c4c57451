"""Scenario configuration: flat ``key = value`` files and builtin scenarios.

Example::

    # Caputo-type derivative with a linearly growing exponent
    name = caputo-reference
    L = 1
    N = 201
    T = 50
    dt = auto
    epsilon = 1
    alpha = 0.75
    beta = 1
    psi = identity
    p = affine:2,0.5
    g = constant:1
    u0 = sine:1

Field specs take the form ``kind[:a,b,...]``. Exponents: ``constant:p``,
``affine:a,b`` (``a + b x / L``) and ``bump:a,b`` (``a + b sin^2(pi x / L)``).
Forcing and initial data: ``zero``, ``constant:A`` (forcing only),
``sine:k[,amp]`` (initial data only) and ``file:path`` with one nodal value
per line, resolved relative to the config file.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from fractel.frac_ops import FracOrder
from fractel.grid import Grid, GridFunction, parse_psi
from fractel.telegraph import ProblemSetup
from fractel.varexp import ExponentField


class ConfigError(ValueError):
    """Malformed or inconsistent scenario configuration."""


REQUIRED = ("L", "N", "T", "epsilon", "alpha", "beta", "p")

_EXPONENT_KINDS = {"constant": 1, "affine": 2, "bump": 2}
_FORCING_KINDS = {"zero": 0, "constant": 1, "file": None}
_INITIAL_KINDS = {"zero": 0, "sine": (1, 2), "file": None}


@dataclass(frozen=True)
class FieldSpec:
    kind: str
    params: tuple[float, ...] = ()
    path: str | None = None

    @classmethod
    def parse(cls, text: str, kinds: dict) -> FieldSpec:
        kind, _, rest = text.strip().partition(":")
        kind = kind.strip()
        if kind not in kinds:
            raise ConfigError(f"unknown kind {kind!r}, expected one of {sorted(kinds)}")
        if kind == "file":
            if not rest.strip():
                raise ConfigError("file spec needs a path")
            return cls(kind, (), rest.strip())
        try:
            params = tuple(float(s) for s in rest.split(",") if s.strip()) if rest else ()
        except ValueError as exc:
            raise ConfigError(f"bad numeric parameter in {text!r}") from exc
        arity = kinds[kind]
        allowed = arity if isinstance(arity, tuple) else (arity,)
        if len(params) not in allowed:
            raise ConfigError(f"{kind!r} takes {' or '.join(map(str, allowed))} parameters")
        return cls(kind, params)

    def format(self) -> str:
        if self.kind == "file":
            return f"file:{self.path}"
        if not self.params:
            return self.kind
        return f"{self.kind}:" + ",".join(repr(p) for p in self.params)


@dataclass(frozen=True)
class ScenarioConfig:
    L: float
    N: int
    T: float
    epsilon: float
    alpha: float
    beta: float
    p: FieldSpec
    #: ``None`` selects the stable step of the linearized system
    dt: float | None = None
    psi: str = "identity"
    g: FieldSpec = FieldSpec("zero")
    u0: FieldSpec = FieldSpec("zero")
    u1: FieldSpec = FieldSpec("zero")
    name: str = "scenario"
    seed: int = 0
    record_every: int = 10
    t_min: float = 1.0
    solver: str = "galerkin"
    grid: str = "uniform"
    stationary_tol: float = 1e-8
    #: directory that ``file:`` paths are relative to (not serialized)
    base_dir: str = dataclasses.field(default=".", compare=False)

    def __post_init__(self) -> None:
        if not self.L > 0:
            raise ConfigError(f"L must be positive, got {self.L}")
        if self.N < 5:
            raise ConfigError(f"N must be at least 5, got {self.N}")
        if not self.T > 0:
            raise ConfigError(f"T must be positive, got {self.T}")
        if self.dt is not None and not self.dt > 0:
            raise ConfigError(f"dt must be positive or 'auto', got {self.dt}")
        if not self.epsilon > 0:
            raise ConfigError(f"epsilon must be positive, got {self.epsilon}")
        if self.record_every < 1:
            raise ConfigError("record_every must be at least 1")
        if not self.t_min > 0:
            raise ConfigError("t_min must be positive")
        if self.solver not in ("galerkin", "classical-fd"):
            raise ConfigError(f"solver must be 'galerkin' or 'classical-fd', got {self.solver!r}")
        if self.grid not in ("uniform", "uniform-psi"):
            raise ConfigError(f"grid must be 'uniform' or 'uniform-psi', got {self.grid!r}")
        if not self.stationary_tol > 0:
            raise ConfigError("stationary_tol must be positive")
        if self.solver == "classical-fd":
            if self.psi != "identity" or self.p != FieldSpec("constant", (2.0,)):
                raise ConfigError("classical-fd needs psi = identity and p = constant:2")

    # {{{ text form

    def serialize(self) -> str:
        """Canonical text form; parsing it gives back an equal config."""
        lines = [
            f"name = {self.name}",
            f"solver = {self.solver}",
            f"L = {self.L!r}",
            f"N = {self.N}",
            f"grid = {self.grid}",
            f"T = {self.T!r}",
            f"dt = {'auto' if self.dt is None else repr(self.dt)}",
            f"epsilon = {self.epsilon!r}",
            f"alpha = {self.alpha!r}",
            f"beta = {self.beta!r}",
            f"psi = {self.psi}",
            f"p = {self.p.format()}",
            f"g = {self.g.format()}",
            f"u0 = {self.u0.format()}",
            f"u1 = {self.u1.format()}",
            f"seed = {self.seed}",
            f"record_every = {self.record_every}",
            f"t_min = {self.t_min!r}",
            f"stationary_tol = {self.stationary_tol!r}",
        ]
        return "\n".join(lines) + "\n"

    # }}}

    # {{{ problem construction

    def make_grid(self) -> Grid:
        psi = parse_psi(self.psi, self.L)
        if self.grid == "uniform-psi":
            return Grid.uniform_in_psi(self.L, self.N, psi)
        return Grid.uniform(self.L, self.N)

    def _read_nodal(self, path: str, name: str) -> np.ndarray:
        full = Path(self.base_dir) / path
        try:
            values = np.loadtxt(full, dtype=float, ndmin=1, comments="#")
        except (OSError, ValueError) as exc:
            raise ConfigError(f"{name}: cannot read nodal file {full}: {exc}") from exc
        if values.shape != (self.N,):
            raise ConfigError(f"{name}: file {full} has {values.size} values, grid has N={self.N}")
        return values

    def _exponent(self, x: np.ndarray) -> np.ndarray:
        kind, a = self.p.kind, self.p.params
        if kind == "constant":
            return np.full_like(x, a[0])
        if kind == "affine":
            return a[0] + a[1] * x / self.L
        return a[0] + a[1] * np.sin(np.pi * x / self.L) ** 2

    def _field(self, spec: FieldSpec, x: np.ndarray, name: str) -> np.ndarray:
        if spec.kind == "zero":
            return np.zeros_like(x)
        if spec.kind == "constant":
            return np.full_like(x, spec.params[0])
        if spec.kind == "file":
            return self._read_nodal(spec.path, name)
        k = spec.params[0]
        amp = spec.params[1] if len(spec.params) > 1 else 1.0
        v = amp * np.sin(k * np.pi * x / self.L)
        v[[0, -1]] = 0.0
        return v

    def build(self) -> ProblemSetup:
        """Turn the configuration into a validated :class:`ProblemSetup`."""
        try:
            psi = parse_psi(self.psi, self.L)
            grid = self.make_grid()
            x = grid.nodes
            alpha = 1.0 if self.solver == "classical-fd" else self.alpha
            beta = 1.0 if self.solver == "classical-fd" else self.beta
            return ProblemSetup(
                grid=grid,
                psi=psi,
                order=FracOrder(alpha, beta),
                p=ExponentField(grid, self._exponent(x)),
                epsilon=self.epsilon,
                g=GridFunction(grid, self._field(self.g, x, "g")),
                u0=GridFunction(grid, self._field(self.u0, x, "u0")),
                u1=GridFunction(grid, self._field(self.u1, x, "u1")),
            )
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(f"{self.name}: {exc}") from exc

    # }}}


_CONVERTERS = {
    "L": float,
    "N": int,
    "T": float,
    "epsilon": float,
    "alpha": float,
    "beta": float,
    "seed": int,
    "record_every": int,
    "t_min": float,
    "stationary_tol": float,
    "name": str,
    "psi": str,
    "solver": str,
    "grid": str,
}


def _dt(text: str) -> float | None:
    return None if text.strip().lower() == "auto" else float(text)


def parse_config(text: str, base_dir: str | Path = ".", source: str = "<config>") -> ScenarioConfig:
    """Parse flat ``key = value`` text; errors name the line and key."""
    values: dict[str, object] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        where = f"{source}:{lineno}"
        if not sep or not key:
            raise ConfigError(f"{where}: expected 'key = value', got {raw.strip()!r}")
        if key in values:
            raise ConfigError(f"{where}: duplicate key {key!r}")
        try:
            if key in _CONVERTERS:
                values[key] = _CONVERTERS[key](value)
            elif key == "dt":
                values[key] = _dt(value)
            elif key == "p":
                values[key] = FieldSpec.parse(value, _EXPONENT_KINDS)
            elif key == "g":
                values[key] = FieldSpec.parse(value, _FORCING_KINDS)
            elif key in ("u0", "u1"):
                values[key] = FieldSpec.parse(value, _INITIAL_KINDS)
            else:
                raise ConfigError(f"unknown key {key!r}")
        except ConfigError as exc:
            raise ConfigError(f"{where}: {key}: {exc}") from None
        except ValueError as exc:
            raise ConfigError(f"{where}: {key}: {exc}") from None
        if isinstance(values[key], float) and not math.isfinite(values[key]):
            raise ConfigError(f"{where}: {key} must be finite")

    missing = [k for k in REQUIRED if k not in values]
    if missing:
        raise ConfigError(f"{source}: missing required key(s): {', '.join(missing)}")
    try:
        return ScenarioConfig(**values, base_dir=str(base_dir))
    except ConfigError as exc:
        raise ConfigError(f"{source}: {exc}") from None


def load_config(path: str | Path) -> ScenarioConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    return parse_config(text, base_dir=path.parent, source=str(path))


# {{{ builtins

_REFERENCE = """\
name = caputo-reference
L = 1
N = 201
T = 50
dt = auto
epsilon = 1
alpha = 0.75
beta = 1
psi = identity
p = affine:2,0.5
g = constant:1
u0 = sine:1
"""


def _variant(base: str, **changes: str) -> str:
    lines = []
    for line in base.splitlines():
        key = line.partition("=")[0].strip()
        lines.append(f"{key} = {changes.pop(key)}" if key in changes else line)
    lines.extend(f"{k} = {v}" for k, v in changes.items())
    return "\n".join(lines) + "\n"


BUILTINS: dict[str, str] = {
    "caputo-reference": _REFERENCE,
    "riemann-liouville": _variant(_REFERENCE, name="riemann-liouville", beta="0"),
    "zero": _variant(
        _REFERENCE, name="zero", T="5", p="constant:2", g="zero", u0="zero"
    ),
    "classical-limit": _variant(
        _REFERENCE,
        name="classical-limit",
        T="1",
        alpha="0.999",
        p="constant:2",
        record_every="1",
        t_min="0.5",
    ),
    "classical-fd": _variant(
        _REFERENCE,
        name="classical-fd",
        solver="classical-fd",
        T="1",
        alpha="0.999",
        p="constant:2",
        record_every="1",
        t_min="0.5",
    ),
    "exponential-psi": _variant(
        _REFERENCE,
        name="exponential-psi",
        T="20",
        alpha="0.8",
        beta="0.5",
        psi="exponential:1",
        p="bump:2,1",
    ),
}

DESCRIPTIONS = {
    "caputo-reference": "Caputo-type derivative (beta=1), p(x)=2+0.5x/L, g=1, T=50",
    "riemann-liouville": "same as caputo-reference with beta=0",
    "zero": "all-zero data and forcing; everything stays 0",
    "classical-limit": "alpha=0.999, beta=1, p=2: close to the classical damped wave",
    "classical-fd": "independent three-point finite-difference damped wave solver",
    "exponential-psi": "psi(x)=exp(x), alpha=0.8, beta=0.5, p(x)=2+sin^2(pi x/L)",
}


def builtin(name: str) -> ScenarioConfig:
    try:
        text = BUILTINS[name]
    except KeyError:
        raise ConfigError(
            f"unknown builtin scenario {name!r}; available: {', '.join(BUILTINS)}"
        ) from None
    return parse_config(text, source=f"builtin:{name}")


def resolve(spec: str) -> ScenarioConfig:
    """A config file path, or the name of a builtin scenario."""
    if spec in BUILTINS and not Path(spec).is_file():
        return builtin(spec)
    return load_config(spec)


# }}}
