"""Scenario files: INI-style sections of flat ``key = value`` pairs.

Every key has a default reproducing the unit-square plate experiment
(E=100, nu=0.5, t=0.1, all sides Signorini with g=0, gamma0 = 1e4 D).
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

from .mesh import BC_KINDS, SIDES, BoundarySpec, SideBC, StructuredMesh, build_mesh
from .plate import MaterialParams
from .solver import SolverOptions

PROBLEMS = ("plate_signorini", "plate_bilateral", "poisson_dirichlet", "poisson_signorini")

SCHEMA = {
    "problem": {"type"},
    "domain": {"origin", "extents", "nx", "ny"},
    "material": {"e", "nu", "t"},
    "boundary": {"g", *SIDES},
    "loads": {"point", "q"},
    "penalty": {"gamma0", "gamma0_factor"},
    "solver": {"tol_r", "rtol", "max_iters", "damping", "init"},
    "output": {"dir", "grid", "sweep", "sweep_reference"},
}


class ConfigError(ValueError):
    """Invalid scenario input; ``key`` names the offending ``section.key``."""

    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


@dataclass
class Scenario:
    problem: str = "plate_signorini"
    origin: tuple = (0.0, 0.0)
    extents: tuple = (1.0, 1.0)
    nx: int = 16
    ny: int = 16
    material: MaterialParams = field(default_factory=MaterialParams)
    boundary: BoundarySpec = field(default_factory=BoundarySpec)
    point_loads: tuple = ()
    q: float = 0.0
    gamma0: float | None = None
    gamma0_factor: float = 1e4
    solver: SolverOptions = field(default_factory=SolverOptions)
    out_dir: str = "out"
    grid: int = 41
    sweep: int = 0
    sweep_reference: str = "manufactured"

    @property
    def is_plate(self) -> bool:
        return self.problem.startswith("plate")

    def mesh(self) -> StructuredMesh:
        return build_mesh(self.origin, self.extents, self.nx, self.ny)

    def plate_gamma0(self) -> float:
        return self.gamma0 if self.gamma0 is not None else self.gamma0_factor * self.material.D

    def poisson_gamma0(self) -> float:
        return self.gamma0 if self.gamma0 is not None else 10.0

    def as_dict(self) -> dict:
        return {
            "problem": self.problem,
            "origin": list(self.origin), "extents": list(self.extents),
            "nx": self.nx, "ny": self.ny,
            "material": {"E": self.material.E, "nu": self.material.nu, "t": self.material.t,
                         "D": self.material.D},
            "boundary": {s: {"kind": self.boundary[s].kind, "g": self.boundary[s].g} for s in SIDES},
            "point_loads": [list(p) for p in self.point_loads],
            "q": self.q,
            "gamma0": self.plate_gamma0() if self.is_plate else self.poisson_gamma0(),
            "solver": {"tol_r": self.solver.tol_r, "rtol": self.solver.rtol,
                       "max_iters": self.solver.max_iters, "damping": self.solver.damping,
                       "init": self.solver.init},
            "grid": self.grid, "sweep": self.sweep, "sweep_reference": self.sweep_reference,
        }


def _float(key, raw) -> float:
    try:
        v = float(raw)
    except ValueError:
        raise ConfigError(key, f"expected a number, got {raw!r}") from None
    if not math.isfinite(v):
        raise ConfigError(key, f"expected a finite number, got {raw!r}")
    return v


def _int(key, raw, minimum=None) -> int:
    try:
        v = int(raw)
    except ValueError:
        raise ConfigError(key, f"expected an integer, got {raw!r}") from None
    if minimum is not None and v < minimum:
        raise ConfigError(key, f"must be >= {minimum}, got {v}")
    return v


def _pair(key, raw) -> tuple:
    parts = [p for p in raw.replace(",", " ").split()]
    if len(parts) != 2:
        raise ConfigError(key, f"expected two numbers, got {raw!r}")
    return tuple(_float(key, p) for p in parts)


def _bool(key, raw) -> bool:
    v = raw.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ConfigError(key, f"expected a boolean, got {raw!r}")


def _point_loads(key, raw) -> tuple:
    loads = []
    for chunk in raw.split(";"):
        if not chunk.strip():
            continue
        parts = chunk.replace(",", " ").split()
        if len(parts) != 3:
            raise ConfigError(key, f"point loads are 'x, y, P' separated by ';', got {chunk.strip()!r}")
        loads.append(tuple(_float(key, p) for p in parts))
    return tuple(loads)


def _side(key, raw, default_g) -> SideBC:
    kind, _, g = raw.strip().partition(":")
    kind = kind.strip().lower()
    if kind not in BC_KINDS:
        raise ConfigError(key, f"unknown boundary condition {kind!r}; expected one of {', '.join(BC_KINDS)}")
    return SideBC(kind, _float(key, g) if g.strip() else default_g)


def parse_overrides(items) -> dict:
    out = {}
    for item in items or ():
        name, sep, value = item.partition("=")
        if not sep or "." not in name:
            raise ConfigError(item, "overrides must look like section.key=value")
        section, _, key = name.strip().partition(".")
        out[(section.lower(), key.lower())] = value.strip()
    return out


def load_scenario(path=None, overrides=None, text: str | None = None) -> Scenario:
    """Parse and validate a scenario file (or ``text``) plus ``section.key=value`` overrides."""
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";;"))
    try:
        if text is not None:
            cp.read_string(text)
        elif path is not None:
            with open(path) as fh:
                cp.read_file(fh)
    except FileNotFoundError:
        raise ConfigError(str(path), "config file not found") from None
    except configparser.Error as exc:
        raise ConfigError(str(path or "<text>"), f"malformed config: {exc}") from None
    if isinstance(overrides, (list, tuple)):
        overrides = parse_overrides(overrides)
    for (section, key), value in (overrides or {}).items():
        try:
            if not cp.has_section(section):
                cp.add_section(section)
            cp.set(section, key, value)
        except (ValueError, configparser.Error) as exc:
            raise ConfigError(f"{section}.{key}", f"invalid override: {exc}") from None

    for section in cp.sections():
        if section not in SCHEMA:
            raise ConfigError(section, "unknown section")
        for key in cp[section]:
            if key not in SCHEMA[section]:
                raise ConfigError(f"{section}.{key}", "unknown key")

    def get(section, key):
        return cp.get(section, key, fallback=None)

    sc = Scenario()
    if (v := get("problem", "type")) is not None:
        if v.strip() not in PROBLEMS:
            raise ConfigError("problem.type", f"expected one of {', '.join(PROBLEMS)}, got {v!r}")
        sc.problem = v.strip()

    if (v := get("domain", "origin")) is not None:
        sc.origin = _pair("domain.origin", v)
    if (v := get("domain", "extents")) is not None:
        sc.extents = _pair("domain.extents", v)
        if min(sc.extents) <= 0:
            raise ConfigError("domain.extents", "extents must be positive")
    if (v := get("domain", "nx")) is not None:
        sc.nx = _int("domain.nx", v, 1)
    if (v := get("domain", "ny")) is not None:
        sc.ny = _int("domain.ny", v, 1)

    mat = {}
    for key, name in (("e", "E"), ("nu", "nu"), ("t", "t")):
        if (v := get("material", key)) is not None:
            mat[name] = _float(f"material.{key}", v)
    for key, name in (("e", "E"), ("t", "t")):
        if name in mat and mat[name] <= 0:
            raise ConfigError(f"material.{key}", "must be positive")
    if "nu" in mat and not 0.0 <= mat["nu"] < 1.0:
        raise ConfigError("material.nu", "Poisson ratio must satisfy 0 <= nu < 1")
    sc.material = MaterialParams(**mat)

    g = _float("boundary.g", get("boundary", "g")) if get("boundary", "g") is not None else 0.0
    sides = {}
    for s in SIDES:
        raw = get("boundary", s)
        sides[s] = _side(f"boundary.{s}", raw, g) if raw is not None else SideBC("signorini", g)
    sc.boundary = BoundarySpec(**sides)

    if (v := get("loads", "point")) is not None:
        sc.point_loads = _point_loads("loads.point", v)
        for x, y, _ in sc.point_loads:
            if not sc.mesh().contains((x, y)):
                raise ConfigError("loads.point", f"load position ({x}, {y}) lies outside the domain")
    if (v := get("loads", "q")) is not None:
        sc.q = _float("loads.q", v)

    if (v := get("penalty", "gamma0")) is not None:
        sc.gamma0 = _float("penalty.gamma0", v)
        if sc.gamma0 <= 0:
            raise ConfigError("penalty.gamma0", "must be positive")
    if (v := get("penalty", "gamma0_factor")) is not None:
        sc.gamma0_factor = _float("penalty.gamma0_factor", v)
        if sc.gamma0_factor <= 0:
            raise ConfigError("penalty.gamma0_factor", "must be positive")

    opts = {}
    if (v := get("solver", "tol_r")) is not None:
        opts["tol_r"] = _float("solver.tol_r", v)
    if (v := get("solver", "rtol")) is not None:
        opts["rtol"] = _float("solver.rtol", v)
    if (v := get("solver", "max_iters")) is not None:
        opts["max_iters"] = _int("solver.max_iters", v, 1)
    if (v := get("solver", "damping")) is not None:
        opts["damping"] = _bool("solver.damping", v)
    if (v := get("solver", "init")) is not None:
        opts["init"] = v.strip()
        if opts["init"] not in ("nitsche", "zero"):
            raise ConfigError("solver.init", "expected 'nitsche' or 'zero'")
    for key in ("tol_r", "rtol"):
        if key in opts and opts[key] <= 0:
            raise ConfigError(f"solver.{key}", "must be positive")
    sc.solver = SolverOptions(**opts)

    if (v := get("output", "dir")) is not None:
        sc.out_dir = v.strip()
    if (v := get("output", "grid")) is not None:
        sc.grid = _int("output.grid", v, 2)
    if (v := get("output", "sweep")) is not None:
        sc.sweep = _int("output.sweep", v, 0)
        if 0 < sc.sweep < 3:
            raise ConfigError("output.sweep", "a sweep needs at least 3 levels")
    if (v := get("output", "sweep_reference")) is not None:
        if v.strip() not in ("manufactured", "finest"):
            raise ConfigError("output.sweep_reference", "expected 'manufactured' or 'finest'")
        sc.sweep_reference = v.strip()

    if sc.is_plate:
        for s in SIDES:
            if sc.boundary[s].kind == "dirichlet":
                raise ConfigError(f"boundary.{s}", "'dirichlet' applies to Poisson problems only; "
                                  "use simply_supported or clamped")
    if not sc.boundary.sides_of("signorini", "simply_supported", "clamped", "dirichlet"):
        raise ConfigError("boundary", "at least one side must be signorini or essential")
    if sc.problem == "poisson_signorini" and not sc.boundary.sides_of("signorini"):
        raise ConfigError("boundary", "poisson_signorini needs at least one signorini side")
    return sc


def with_mesh(sc: Scenario, nx: int, ny: int) -> Scenario:
    return replace(sc, nx=nx, ny=ny)


def scenario_path(name: str) -> Path:
    """Path of a bundled scenario file."""
    return Path(__file__).parent / "scenarios" / name
