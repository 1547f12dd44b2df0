"""Experiment configuration: a flat ``key = value`` document with dotted keys.

Example::

    experiment = rate
    params.s = 0.25, 0.5, 0.75
    datum.kind = shifted-kernel
    datum.h = 0.125
    ladder.t0 = 1
    ladder.count = 7

Blank lines and ``#`` comments are ignored.  List-valued keys take comma
separated values; point lists (``datum.locations``) separate points with
``;`` and coordinates with ``,``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import ConfigError
from .kernel import FracParams, sphere_area
from .solver import DEFAULT_POINTS

EXPERIMENTS = (
    "kernel-profile", "tail", "stationarity", "moments", "rate", "relative-error",
    "corrector", "counterexample", "fokker-planck", "cross-check",
)

DATUM_KINDS = ("point-masses", "indicator", "shifted-kernel", "dipole", "bump", "kernel")

# experiments whose evolution runs on the periodic box
SPECTRAL_EXPERIMENTS = ("cross-check",)

DEFAULT_DATUM = {
    "rate": "shifted-kernel",
    "relative-error": "indicator",
    "corrector": "shifted-kernel",
    "fokker-planck": "shifted-kernel",
    "cross-check": "bump",
}


def _float(text):
    t = text.strip().lower()
    if t in ("inf", "infinity"):
        return math.inf
    return float(t)


def _floats(text):
    return tuple(_float(v) for v in text.split(",") if v.strip())


def _ints(text):
    out = []
    for v in text.split(","):
        if v.strip():
            f = float(v)
            if f != int(f):
                raise ValueError(f"{v.strip()} is not an integer")
            out.append(int(f))
    return tuple(out)


def _int(text):
    (v,) = _ints(text)
    return v


def _points(text):
    return tuple(_floats(p) for p in text.split(";") if p.strip())


def _str(text):
    return text.strip()


# key -> (parser, default)
SCHEMA = {
    "experiment": (_str, None),
    "params.n": (_ints, (1,)),
    "params.s": (_floats, None),
    "grid.N": (_int, None),
    "grid.L": (_float, None),
    "datum.kind": (_str, None),
    "datum.h": (_float, 0.125),
    "datum.a": (_float, 0.0),
    "datum.b": (_float, 1.0),
    "datum.locations": (_points, ()),
    "datum.masses": (_floats, ()),
    "datum.radius": (_float, 1.0),
    "datum.warmup": (_float, 1.0),
    "ladder.t0": (_float, 1.0),
    "ladder.count": (_int, 7),
    "tol.quad": (_float, 1e-8),
    "tol.aliasing": (_float, 0.1),
    "tol.slope": (_float, None),
    "similarity.half_width": (_float, 40.0),
    "similarity.points": (_int, 2048),
    "rate.p": (_float, math.inf),
    "counterexample.phi": (_str, "power"),
    "counterexample.param": (_float, 0.1),
    "counterexample.K": (_int, 3),
    "profile.r_max": (_float, 200.0),
    "output.dir": (_str, None),
}


@dataclass(frozen=True)
class DatumSpec:
    kind: str
    h: float = 0.125
    a: float = 0.0
    b: float = 1.0
    locations: tuple = ()
    masses: tuple = ()
    radius: float = 1.0
    warmup: float = 1.0


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    dims: tuple
    orders: tuple
    points: int | None
    half_length: float | None
    datum: DatumSpec | None
    t0: float
    count: int
    quad_tol: float
    aliasing_tol: float
    slope_tol: float
    half_width: float
    similarity_points: int
    rate_p: float
    phi: str
    phi_param: float
    K: int
    r_max: float
    output_dir: str | None
    text: str = field(default="", repr=False, compare=False)

    @property
    def params(self) -> list[FracParams]:
        return [FracParams(n, s) for n in self.dims for s in self.orders]

    @property
    def times(self) -> list[float]:
        return [self.t0 * 2.0**j for j in range(self.count)]

    def grid_points(self, n: int) -> int:
        return self.points if self.points is not None else DEFAULT_POINTS[n]

    def box(self, params: FracParams) -> float:
        """Half-length of the periodic box for spectral runs."""
        if self.half_length is not None:
            return self.half_length
        return default_half_length(params, self.times[-1])


def default_half_length(params: FracParams, t_max: float) -> float:
    """8 t_max^{1/2s}, at least 40."""
    return max(40.0, 8.0 * params.length_scale(t_max))


def tail_constant(params: FracParams) -> float:
    """Closed-form tail constant 4^s Gamma(n/2 + s) / (pi^{n/2} |Gamma(-s)|), 0 for s = 1.

    Used only for budgeting before any profile is built; measured values
    come from :func:`kernel.tail_coefficient`.
    """
    n, s = params.n, params.s
    if s == 1.0:
        return 0.0
    return 4.0**s * math.gamma(n / 2.0 + s) / (math.pi ** (n / 2.0) * abs(math.gamma(-s)))


def admissible_time(params: FracParams, half_length: float, tol: float) -> float:
    c = tail_constant(params)
    if c == 0:
        return math.inf
    per_time = c * sphere_area(params.n) / (2.0 * params.s) * half_length ** (-2.0 * params.s)
    return tol / per_time


def parse_config(text: str) -> ExperimentConfig:
    """Parse and validate a configuration document.

    Raises
    ------
    ConfigError
        With the offending line number for malformed lines, unknown or
        repeated keys, bad values and aliasing-budget violations.
    """
    raw: dict[str, str] = {}
    where: dict[str, int] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"expected 'key = value', got {body!r}", lineno)
        key, _, value = body.partition("=")
        key, value = key.strip(), value.strip()
        if key not in SCHEMA:
            raise ConfigError(f"unknown key {key!r}", lineno)
        if key in raw:
            raise ConfigError(f"key {key!r} repeated (first on line {where[key]})", lineno)
        if not value:
            raise ConfigError(f"key {key!r} has no value", lineno)
        raw[key] = value
        where[key] = lineno

    vals = {}
    for key, (parse, default) in SCHEMA.items():
        if key in raw:
            try:
                vals[key] = parse(raw[key])
            except ValueError as exc:
                raise ConfigError(f"bad value for {key}: {exc}", where[key]) from None
        else:
            vals[key] = default

    exp = vals["experiment"]
    if exp is None:
        raise ConfigError("missing required key 'experiment'")
    if exp not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment id {exp!r}; expected one of {', '.join(EXPERIMENTS)}",
                          where["experiment"])
    if not vals["params.s"]:
        raise ConfigError("missing required key 'params.s'")
    line_s = where.get("params.s")
    for s in vals["params.s"]:
        if not (0.0 < s <= 1.0):
            raise ConfigError(f"order out of (0,1]: s={s:g}", line_s)
    for n in vals["params.n"]:
        if n not in (1, 2, 3):
            raise ConfigError(f"dimension must be 1, 2 or 3, got {n}", where.get("params.n"))

    def positive(key):
        v = vals[key]
        if v is not None and not v > 0:
            raise ConfigError(f"{key} must be positive", where.get(key))

    for key in ("grid.L", "tol.quad", "tol.aliasing", "tol.slope", "ladder.t0",
                "similarity.half_width", "datum.radius", "datum.warmup", "profile.r_max",
                "counterexample.param"):
        positive(key)
    N = vals["grid.N"]
    if N is not None and (N < 8 or N % 2):
        raise ConfigError("grid.N must be an even integer >= 8", where.get("grid.N"))
    if vals["similarity.points"] < 8 or vals["similarity.points"] % 2:
        raise ConfigError("similarity.points must be an even integer >= 8",
                          where.get("similarity.points"))
    if vals["ladder.count"] < 1:
        raise ConfigError("ladder.count must be at least 1", where.get("ladder.count"))
    if not (1e-12 <= vals["tol.quad"] <= 1e-4):
        raise ConfigError("tol.quad must lie in [1e-12, 1e-4]", where.get("tol.quad"))
    if vals["rate.p"] < 1:
        raise ConfigError("rate.p must be at least 1", where.get("rate.p"))
    if vals["counterexample.phi"] not in ("power", "log"):
        raise ConfigError("counterexample.phi must be 'power' or 'log'",
                          where.get("counterexample.phi"))
    if not 1 <= vals["counterexample.K"] <= 8:
        raise ConfigError("counterexample.K must lie in 1..8", where.get("counterexample.K"))

    datum = None
    kind = vals["datum.kind"] or DEFAULT_DATUM.get(exp)
    if kind is not None:
        if kind not in DATUM_KINDS:
            raise ConfigError(f"unknown datum kind {kind!r}; expected one of {', '.join(DATUM_KINDS)}",
                              where.get("datum.kind"))
        locs, masses = vals["datum.locations"], vals["datum.masses"]
        if kind == "point-masses":
            if not locs or len(locs) != len(masses):
                raise ConfigError("point-masses needs datum.locations and datum.masses of equal length",
                                  where.get("datum.locations"))
            for loc in locs:
                if any(len(loc) != n for n in vals["params.n"]):
                    raise ConfigError("point location dimension does not match params.n",
                                      where.get("datum.locations"))
        if kind == "indicator" and not vals["datum.a"] < vals["datum.b"]:
            raise ConfigError("indicator needs datum.a < datum.b", where.get("datum.a"))
        datum = DatumSpec(kind, vals["datum.h"], vals["datum.a"], vals["datum.b"], locs, masses,
                          vals["datum.radius"], vals["datum.warmup"])

    slope_tol = vals["tol.slope"]
    if slope_tol is None:
        slope_tol = 0.07 if exp == "fokker-planck" else 0.05

    cfg = ExperimentConfig(
        experiment=exp,
        dims=vals["params.n"],
        orders=vals["params.s"],
        points=N,
        half_length=vals["grid.L"],
        datum=datum,
        t0=vals["ladder.t0"],
        count=vals["ladder.count"],
        quad_tol=vals["tol.quad"],
        aliasing_tol=vals["tol.aliasing"],
        slope_tol=slope_tol,
        half_width=vals["similarity.half_width"],
        similarity_points=vals["similarity.points"],
        rate_p=vals["rate.p"],
        phi=vals["counterexample.phi"],
        phi_param=vals["counterexample.param"],
        K=vals["counterexample.K"],
        r_max=vals["profile.r_max"],
        output_dir=vals["output.dir"],
        text=text,
    )

    if exp in SPECTRAL_EXPERIMENTS:
        t_max = cfg.times[-1]
        for p in cfg.params:
            L = cfg.box(p)
            limit = admissible_time(p, L, cfg.aliasing_tol)
            if t_max > limit:
                line = where.get("grid.L") or where.get("ladder.count") or where.get("ladder.t0")
                raise ConfigError(
                    f"ladder reaches t={t_max:g} but the aliasing budget of L={L:g} "
                    f"(n={p.n}, s={p.s:g}, tol {cfg.aliasing_tol:g}) admits at most t={limit:.6g}",
                    line,
                )
    return cfg
