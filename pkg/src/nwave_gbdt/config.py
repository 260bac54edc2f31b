"""Run configuration: JSON-compatible ingestion and lossless serialization.

Complex numbers are written as ``[re, im]`` pairs; on input a bare real
number is accepted as well.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Optional, Tuple

import numpy as np

from .engine import GBDTParams, SeedSpec
from .errors import ConfigError

DEFAULT_TOLERANCES = {
    "identity_exact": 1e-10,
    "identity_rk4": 1e-7,
    "symmetry": 1e-12,
    "j_unitarity": 1e-10,
    "conservation": 1e-12,
    "bispectral": 1e-10,
    "nwave": 1e-5,
    "finite_difference": 1e-4,
    "real_fields": 1e-10,
}


def _cplx(v, where) -> complex:
    if isinstance(v, (int, float)) and not isinstance(v, bool):
        return complex(float(v), 0.0)
    if isinstance(v, (list, tuple)) and len(v) == 2:
        return complex(float(v[0]), float(v[1]))
    raise ConfigError(f"{where}: expected a number or [re, im] pair, got {v!r}")


def _cmatrix(v, where) -> Tuple[Tuple[complex, ...], ...]:
    if not isinstance(v, list) or not v or not all(isinstance(r, list) for r in v):
        raise ConfigError(f"{where}: expected a non-empty list of rows")
    rows = tuple(tuple(_cplx(e, f"{where}[{i}][{j}]") for j, e in enumerate(r)) for i, r in enumerate(v))
    if len({len(r) for r in rows}) != 1:
        raise ConfigError(f"{where}: ragged rows")
    return rows


def _pair(z: complex):
    return [z.real, z.imag]


def _reals(v, where):
    try:
        return tuple(float(e) for e in v)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: expected a list of reals") from exc


@dataclass(frozen=True)
class GridSpec:
    x0: float
    x1: float
    nx: int
    t0: float
    t1: float
    nt: int

    def __post_init__(self):
        if self.nx < 2 or self.nt < 2:
            raise ConfigError("grid needs nx >= 2 and nt >= 2")
        if not self.x1 > self.x0 or not self.t1 > self.t0:
            raise ConfigError("grid needs x1 > x0 and t1 > t0")

    @property
    def xs(self) -> np.ndarray:
        return np.linspace(self.x0, self.x1, self.nx)

    @property
    def ts(self) -> np.ndarray:
        return np.linspace(self.t0, self.t1, self.nt)


@dataclass(frozen=True)
class RunConfig:
    d: Tuple[float, ...]
    dhat: Tuple[float, ...]
    b: Tuple[float, ...]
    A: Tuple[Tuple[complex, ...], ...]
    Pi0: Tuple[Tuple[complex, ...], ...]
    S0: Tuple[Tuple[complex, ...], ...]
    grid: GridSpec
    z_samples: Tuple[complex, ...] = (1.0 + 0.5j,)
    method: str = "exact"
    h: float = 1e-3
    tolerances: Tuple[Tuple[str, float], ...] = tuple(sorted(DEFAULT_TOLERANCES.items()))
    output_dir: str = "out"
    formats: Tuple[str, ...] = ("csv", "json")
    allow_negative_domain: bool = False
    seed_type: str = "zero"
    name: str = ""
    dirac_m1: Optional[int] = None
    dirac_kind: Optional[str] = None
    verify_h: float = 1e-3
    verify_refine: bool = True
    verify_extent: float = 0.05

    def __post_init__(self):
        m = len(self.d)
        if not (len(self.dhat) == len(self.b) == m):
            raise ConfigError("seed: d, dhat, b must have the same length")
        n = len(self.A)
        if any(len(r) != n for r in self.A):
            raise ConfigError("gbdt.A must be square")
        if len(self.Pi0) != n or any(len(r) != m for r in self.Pi0):
            raise ConfigError(f"gbdt.Pi0 must be {n}x{m}")
        if len(self.S0) != n or any(len(r) != n for r in self.S0):
            raise ConfigError(f"gbdt.S0 must be {n}x{n}")
        if self.method not in ("exact", "rk4"):
            raise ConfigError(f"method.kind must be 'exact' or 'rk4', got {self.method!r}")
        if self.seed_type != "zero":
            raise ConfigError("only seed type 'zero' can be configured; callable seeds are library-only")
        if self.h <= 0 or self.verify_h <= 0:
            raise ConfigError("step sizes must be positive")

    # -- derived objects --------------------------------------------------
    @property
    def m(self) -> int:
        return len(self.d)

    @property
    def n(self) -> int:
        return len(self.A)

    @property
    def tol(self) -> dict:
        out = dict(DEFAULT_TOLERANCES)
        out.update(dict(self.tolerances))
        return out

    def seed_spec(self) -> SeedSpec:
        return SeedSpec(self.d, self.dhat, self.b)

    def gbdt_params(self) -> GBDTParams:
        return GBDTParams(np.array(self.A), np.array(self.Pi0), np.array(self.S0))

    # -- serialization ----------------------------------------------------
    def to_dict(self) -> dict:
        out = {
            "name": self.name,
            "seed": {"type": self.seed_type, "m": self.m, "d": list(self.d),
                     "dhat": list(self.dhat), "b": list(self.b)},
            "gbdt": {"n": self.n,
                     "A": [[_pair(e) for e in r] for r in self.A],
                     "Pi0": [[_pair(e) for e in r] for r in self.Pi0],
                     "S0": [[_pair(e) for e in r] for r in self.S0]},
            "grid": {f.name: getattr(self.grid, f.name) for f in fields(GridSpec)},
            "z_samples": [_pair(z) for z in self.z_samples],
            "method": {"kind": self.method, "h": self.h},
            "tolerances": dict(self.tolerances),
            "output": {"directory": self.output_dir, "formats": list(self.formats)},
            "allow_negative_domain": self.allow_negative_domain,
            "verify": {"h": self.verify_h, "refine": self.verify_refine, "extent": self.verify_extent},
            "dirac": None if self.dirac_m1 is None else {"m1": self.dirac_m1, "kind": self.dirac_kind},
        }
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, raw: dict) -> "RunConfig":
        try:
            seed = raw["seed"]
            gbdt = raw["gbdt"]
            grid = raw["grid"]
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"missing config block: {exc}") from exc
        d = _reals(seed["d"], "seed.d")
        if "m" in seed and int(seed["m"]) != len(d):
            raise ConfigError(f"seed.m={seed['m']} but d has {len(d)} entries")
        A = _cmatrix(gbdt["A"], "gbdt.A")
        if "n" in gbdt and int(gbdt["n"]) != len(A):
            raise ConfigError(f"gbdt.n={gbdt['n']} but A has {len(A)} rows")
        method = raw.get("method", {}) or {}
        output = raw.get("output", {}) or {}
        verify = raw.get("verify", {}) or {}
        dirac = raw.get("dirac")
        tol = raw.get("tolerances", {}) or {}
        unknown = set(tol) - set(DEFAULT_TOLERANCES)
        if unknown:
            raise ConfigError(f"unknown tolerances: {sorted(unknown)}")
        merged = dict(DEFAULT_TOLERANCES)
        merged.update({k: float(v) for k, v in tol.items()})
        try:
            g = GridSpec(float(grid["x0"]), float(grid["x1"]), int(grid["nx"]),
                         float(grid["t0"]), float(grid["t1"]), int(grid["nt"]))
        except KeyError as exc:
            raise ConfigError(f"grid block missing {exc}") from exc
        return cls(
            d=d,
            dhat=_reals(seed["dhat"], "seed.dhat"),
            b=_reals(seed["b"], "seed.b"),
            A=A,
            Pi0=_cmatrix(gbdt["Pi0"], "gbdt.Pi0"),
            S0=_cmatrix(gbdt["S0"], "gbdt.S0"),
            grid=g,
            z_samples=tuple(_cplx(z, "z_samples") for z in raw.get("z_samples", [[1.0, 0.5]])),
            method=method.get("kind", "exact"),
            h=float(method.get("h", 1e-3)),
            tolerances=tuple(sorted(merged.items())),
            output_dir=output.get("directory", "out"),
            formats=tuple(output.get("formats", ["csv", "json"])),
            allow_negative_domain=bool(raw.get("allow_negative_domain", False)),
            seed_type=seed.get("type", "zero"),
            name=raw.get("name", ""),
            dirac_m1=None if dirac is None else int(dirac["m1"]),
            dirac_kind=None if dirac is None else dirac.get("kind", "skewselfadjoint"),
            verify_h=float(verify.get("h", 1e-3)),
            verify_refine=bool(verify.get("refine", True)),
            verify_extent=float(verify.get("extent", 0.05)),
        )

    @classmethod
    def from_json(cls, text: str) -> "RunConfig":
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON: {exc}") from exc
        return cls.from_dict(raw)

    @classmethod
    def load(cls, path) -> "RunConfig":
        return cls.from_json(Path(path).read_text(encoding="utf-8"))
