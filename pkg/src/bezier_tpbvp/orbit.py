"""Two-body dynamics, canonical units and the built-in orbit-determination cases."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import Iterable

import numpy as np

from .errors import ConfigError, DomainError, DynamicsDomainError
from .problem import BvpProblem

MU_EARTH = 398600.0  # km^3/s^2
EARTH_RADIUS_KM = 6378.0
SINGULAR_RADIUS_KM = 1e-6
#: Admissibility floor on |r| in canonical distance units.
SINGULAR_RADIUS_DU = 1e-6


@dataclass(frozen=True)
class TwoBodyParams:
    mu: float = MU_EARTH

    def __post_init__(self):
        if not self.mu > 0:
            raise DomainError(f"gravitational parameter must be positive, got {self.mu}")


def two_body_dynamics(params: TwoBodyParams, t, r, rdot=None) -> np.ndarray:
    """Point-mass gravity ``-mu r / |r|^3``; broadcasts over leading axes of ``r``."""
    r = np.asarray(r, dtype=float)
    radius = np.linalg.norm(r, axis=-1, keepdims=True)
    if np.any(radius < SINGULAR_RADIUS_KM):
        raise DynamicsDomainError(f"two-body singularity: |r| = {radius.min():.3e} km")
    return -params.mu * r / radius**3


def canonical_scaling(params: TwoBodyParams, r_i) -> tuple[float, float]:
    """Distance unit ``DU = |r_i|`` and time unit ``TU = sqrt(DU^3 / mu)``."""
    du = float(np.linalg.norm(r_i))
    if du <= 0:
        raise DomainError("canonical scaling needs a nonzero reference radius")
    return du, float(np.sqrt(du**3 / params.mu))


def cross_product_baseline_guess(params: TwoBodyParams, r_i, r_f, speed: str = "circular") -> np.ndarray:
    """Velocity guess along ``n x r_i/|r_i|`` with ``n`` the unit normal of ``r_i x r_f``.

    ``speed="circular"`` scales the direction by ``sqrt(mu/|r_i|)``;
    ``speed="unit"`` returns the bare unit vector (1 km/s).
    """
    r_i = np.asarray(r_i, dtype=float)
    r_f = np.asarray(r_f, dtype=float)
    normal = np.cross(r_i, r_f)
    ri_norm = np.linalg.norm(r_i)
    if np.linalg.norm(normal) < 1e-10 * ri_norm * np.linalg.norm(r_f):
        raise DomainError("r_i and r_f are collinear; the transfer plane is undefined")
    normal /= np.linalg.norm(normal)
    direction = np.cross(normal, r_i / ri_norm)
    if speed == "circular":
        return np.sqrt(params.mu / ri_norm) * direction
    if speed == "unit":
        return direction
    raise DomainError(f"unknown baseline speed rule {speed!r}")


@dataclass(frozen=True)
class OrbitCase:
    """One orbit-determination scenario plus published reference values (km, s)."""

    id: str
    tof_s: float
    r_i_km: tuple
    r_f_km: tuple
    ref_guess_kms: tuple = ()
    ref_shooting_kms: tuple = ()
    ref_error_pct: tuple = ()
    ref_speed_kms: float | None = None
    orbit: str = ""
    eccentricity: float | None = None
    initial_position: str = ""

    def __post_init__(self):
        for name in ("r_i_km", "r_f_km", "ref_guess_kms", "ref_shooting_kms", "ref_error_pct"):
            object.__setattr__(self, name, tuple(float(v) for v in getattr(self, name)))
        if not self.tof_s > 0:
            raise ConfigError(f"case {self.id}: time of flight must be positive")
        if len(self.r_i_km) != 3 or len(self.r_f_km) != 3:
            raise ConfigError(f"case {self.id}: positions must have three components")
        for name in ("r_i_km", "r_f_km"):
            if np.linalg.norm(getattr(self, name)) <= EARTH_RADIUS_KM:
                raise ConfigError(f"case {self.id}: {name} lies inside the Earth")

    def to_dict(self) -> dict:
        d = asdict(self)
        for key, value in d.items():
            if isinstance(value, tuple):
                d[key] = list(value)
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "OrbitCase":
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown case fields: {sorted(unknown)}")
        try:
            return cls(**{**data, "id": str(data["id"])})
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"malformed case {data.get('id', '?')!r}: {exc}") from exc

    def problem(self, params: TwoBodyParams = TwoBodyParams(), canonical: bool = True) -> BvpProblem:
        """The case as a TPBVP on ``[0, tof]``, in canonical units by default."""
        if canonical:
            du, tu = canonical_scaling(params, self.r_i_km)
            mu, scale_r, t_f, floor = 1.0, du, self.tof_s / tu, SINGULAR_RADIUS_DU
            units = f"DU={du:.6f} km, TU={tu:.6f} s"
        else:
            mu, scale_r, t_f, floor = params.mu, 1.0, self.tof_s, SINGULAR_RADIUS_KM
            units = "km, s"
        scaled = TwoBodyParams(mu)

        def dynamics(t, r, rdot):
            return two_body_dynamics(scaled, t, r, rdot)

        def admissible(t, r):
            return np.linalg.norm(r, axis=-1) > floor

        return BvpProblem(
            dynamics=dynamics,
            t_i=0.0,
            t_f=t_f,
            x_i=np.asarray(self.r_i_km) / scale_r,
            x_f=np.asarray(self.r_f_km) / scale_r,
            admissible=admissible,
            units=units,
            name=self.id,
        )


def velocity_unit(params: TwoBodyParams, case: OrbitCase) -> float:
    """km/s per canonical velocity unit for ``case``."""
    du, tu = canonical_scaling(params, case.r_i_km)
    return du / tu


def error_pct(guess, solution) -> np.ndarray:
    """Per-component ``100 |guess - solution| / |solution|``."""
    guess = np.asarray(guess, dtype=float)
    solution = np.asarray(solution, dtype=float)
    return 100.0 * np.abs(guess - solution) / np.abs(solution)


@dataclass(frozen=True)
class CaseCatalog:
    cases: tuple = field(default_factory=tuple)

    def __post_init__(self):
        ids = [c.id for c in self.cases]
        if len(set(ids)) != len(ids):
            raise ConfigError(f"duplicate case ids in catalog: {ids}")

    def __len__(self):
        return len(self.cases)

    def __iter__(self):
        return iter(self.cases)

    def __getitem__(self, case_id: str) -> OrbitCase:
        for case in self.cases:
            if case.id == case_id:
                return case
        raise KeyError(case_id)

    def ids(self) -> list[str]:
        return [c.id for c in self.cases]

    def to_json(self) -> str:
        return json.dumps([c.to_dict() for c in self.cases], indent=2)

    @classmethod
    def from_dicts(cls, rows: Iterable[dict]) -> "CaseCatalog":
        return cls(tuple(OrbitCase.from_dict(r) for r in rows))


_TABLE = [
    # id, orbit, e, position label, tof, r_i, r_f, guess, shooting, error %, |v|
    ("1", "circular", 0.000283, "near perigee", 1500,
     (-5641.484, -3331.740, 2204.246), (3329.045, -5754.978, -1871.615),
     (4.495, -7.470, -2.505), (3.188, -6.631, -1.875), (41.00, 12.65, 33.59), 7.5925),
    ("2-1", "tundra", 0.268, "near apogee", 25000,
     (15040.510, 22615.098, 45161.321), (-36285.493, 13559.482, 27077.646),
     (-2.614, 0.371, 0.740), (-2.202, 0.407, 0.814), (18.70, 9.01, 9.02), 2.3829),
    ("2-2", "tundra", 0.268, "intermediate", 15000,
     (-40292.402, 7484.694, 14946.572), (-17983.494, -11870.227, -23704.307),
     (-0.258, -1.622, -3.239), (-0.367, -1.320, -2.636), (29.63, 22.89, 22.88), 2.9709),
    ("2-3", "tundra", 0.268, "near perigee", 17000,
     (-24501.896, -9999.969, -19969.490), (33647.418, -5531.998, -11047.131),
     (3.926, -1.181, -2.359), (3.005, -1.056, -2.109), (30.62, 11.82, 11.83), 3.8206),
    ("3-1", "molniya", 0.74, "near apogee", 18000,
     (7062.077, 19756.303, 39452.426), (-16831.220, 12838.490, 25637.872),
     (-1.751, 0.358, 0.714), (-1.424, 0.407, 0.813), (22.98, 12.16, 12.17), 1.6894),
    ("3-2", "molniya", 0.74, "intermediate", 5000,
     (-17436.334, 11461.543, 22888.172), (-14505.515, 1846.234, 3686.843),
     (-0.715, -1.598, -3.191), (-0.498, -1.451, -2.898), (43.64, 10.12, 10.12), 3.2791),
    ("3-3", "molniya", 0.74, "near perigee", 5000,
     (-3653.531, -2844.545, -5680.425), (17638.454, 6821.862, 13622.943),
     (7.836, -2.445, -4.882), (9.250, -1.285, -2.567), (15.28, 90.21, 90.21), 9.6848),
]


def builtin_catalog() -> CaseCatalog:
    """The seven published orbit cases, in publication order."""
    return CaseCatalog(tuple(
        OrbitCase(
            id=cid, orbit=orbit, eccentricity=ecc, initial_position=pos, tof_s=tof,
            r_i_km=ri, r_f_km=rf, ref_guess_kms=g, ref_shooting_kms=v,
            ref_error_pct=err, ref_speed_kms=speed,
        )
        for cid, orbit, ecc, pos, tof, ri, rf, g, v, err, speed in _TABLE
    ))
