"""Disruption-rate models: closed-form intensity, cumulative intensity,
generalized inverse, and the analytic metadata the sequencing results need.

Every built-in family is defined by an elementary formula, so the cumulative
intensity and its generalized inverse are exact (piecewise closed forms).
``AnalyticRate`` admits rate functions outside the built-in families; its
cumulative intensity falls back to adaptive quadrature and its inverse to
bracketed bisection.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import integrate

from .errors import DomainError, InvalidModelError, UnreachableMassError

ArrayLike = Union[float, np.ndarray]

KINDS = (
    "Constant",
    "LinearIncreasing",
    "ConcaveIncreasing",
    "StepIncreasing",
    "LinearDecreasing",
    "ConvexDecreasing",
    "StepDecreasing",
    "Sinusoidal",
    "Bathtub",
    "ZeroThenConstant",
    "TwoPhaseConstant",
    "PiecewiseConstant",
)

_INVERSE_TIME_TOL = 1e-12


@dataclass(frozen=True)
class Monotonicity:
    """Direction of the rate over time.

    ``strict_on`` is the interval on which the rate is strictly monotone
    (None for step-like rates, which move only by jumps).  Outside that
    interval the rate is still weakly monotone in the stated direction.
    """

    direction: str  # 'constant' | 'increasing' | 'decreasing' | 'none'
    strict_on: Optional[Tuple[float, float]] = None

    def strictly_monotone_on(self, lo: float, hi: float) -> bool:
        if self.strict_on is None:
            return False
        return self.strict_on[0] <= lo and hi <= self.strict_on[1]


@dataclass(frozen=True)
class RateMetadata:
    """Per-model analytic constants consumed by the threshold checkers.

    ``lipschitz_L`` is the Lipschitz constant of the rate itself;
    ``math.inf`` records that no finite constant exists (step rates).
    ``f_minus``/``f_plus`` bound the normalized shape rate/lambda_bar.
    ``f_prime_0`` is the shape's one-sided derivative at 0 when defined.
    """

    f_minus: float
    f_plus: float
    lambda_bar: float
    lipschitz_L: float
    tail_time_t0: Optional[float]
    monotonicity: Monotonicity
    f_prime_0: Optional[float] = None

    @property
    def lipschitz_available(self) -> bool:
        return math.isfinite(self.lipschitz_L)


@dataclass(frozen=True)
class RateModel:
    """A named rate family with its parameters.

    Immutable and hashable; ``params`` is stored as a sorted tuple of
    (name, value) pairs.  Use :meth:`make` or the module factories.
    """

    kind: str
    params: Tuple[Tuple[str, object], ...]

    def __post_init__(self):
        object.__setattr__(self, "_params_cache", dict(self.params))

    @classmethod
    def make(cls, kind: str, **params) -> "RateModel":
        if kind not in KINDS:
            raise InvalidModelError(f"unknown rate kind {kind!r}")
        clean = _validate_params(kind, params)
        return cls(kind, tuple(sorted(clean.items())))

    @property
    def params_dict(self) -> dict:
        return self._params_cache

    def param(self, name: str):
        return self.params_dict[name]

    def to_descriptor(self) -> dict:
        params = {k: (list(v) if isinstance(v, tuple) else v)
                  for k, v in self.params}
        return {"kind": self.kind, "params": params}

    @classmethod
    def from_descriptor(cls, desc: Mapping) -> "RateModel":
        if "kind" not in desc:
            raise InvalidModelError("descriptor missing 'kind'")
        params = {k: (tuple(v) if isinstance(v, (list, tuple)) else v)
                  for k, v in dict(desc.get("params", {})).items()}
        return cls.make(desc["kind"], **params)


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise InvalidModelError(msg)


def _validate_params(kind: str, p: dict) -> dict:
    p = dict(p)

    def pop_real(name, cond, msg):
        _require(name in p, f"{kind}: missing parameter {name!r}")
        v = float(p.pop(name))
        _require(cond(v), f"{kind}: {msg} (got {name}={v})")
        return v

    out: dict = {}
    if kind == "Constant":
        out["lam"] = pop_real("lam", lambda v: v >= 0, "lam must be >= 0")
    elif kind == "LinearIncreasing":
        out["a"] = pop_real("a", lambda v: v > 0, "a must be > 0")
        out["lam"] = pop_real("lam", lambda v: v > 0, "lam must be > 0")
    elif kind == "ConcaveIncreasing":
        out["a"] = pop_real("a", lambda v: v > 0, "a must be > 0")
        out["lam"] = pop_real("lam", lambda v: v > 0, "lam must be > 0")
    elif kind in ("StepIncreasing", "StepDecreasing"):
        out["lam"] = pop_real("lam", lambda v: v > 0, "lam must be > 0")
        out["t0"] = pop_real("t0", lambda v: v > 0, "t0 must be > 0")
    elif kind == "LinearDecreasing":
        lam = pop_real("lam", lambda v: v > 0, "lam must be > 0")
        out["lam"] = lam
        out["a"] = pop_real("a", lambda v: v > 0, "a must be > 0")
        out["lam0"] = pop_real("lam0", lambda v: 0 <= v <= lam,
                               "lam0 must lie in [0, lam]")
    elif kind == "ConvexDecreasing":
        # shape 1/sqrt(t+1); optional scale (Table 1 uses lam=0.4)
        if "lam" in p:
            out["lam"] = pop_real("lam", lambda v: v > 0, "lam must be > 0")
        else:
            out["lam"] = 1.0
    elif kind == "Sinusoidal":
        out["lam"] = pop_real("lam", lambda v: v > 0, "lam must be > 0")
        out["a"] = pop_real("a", lambda v: v > 0, "a must be > 0")
    elif kind == "Bathtub":
        lam = pop_real("lam", lambda v: v > 0, "lam must be > 0")
        b1 = pop_real("b1", lambda v: v > 0, "b1 must be > 0")
        b2 = pop_real("b2", lambda v: v > b1, "b2 must be > b1")
        b3 = pop_real("b3", lambda v: v > b2, "b3 must be > b2")
        _require(abs((b3 - b2) - b1) <= 1e-9 * max(1.0, b1),
                 "Bathtub: continuity requires b3 - b2 == b1 "
                 "(ramp slope is lam/(2*b1))")
        out.update(lam=lam, b1=b1, b2=b2, b3=b3)
    elif kind == "ZeroThenConstant":
        out["b"] = pop_real("b", lambda v: v > 0, "b must be > 0")
        out["lam"] = pop_real("lam", lambda v: v > 0, "lam must be > 0")
    elif kind == "TwoPhaseConstant":
        out["lam1"] = pop_real("lam1", lambda v: v >= 0, "lam1 must be >= 0")
        out["lam2"] = pop_real("lam2", lambda v: v >= 0, "lam2 must be >= 0")
        out["b"] = pop_real("b", lambda v: v > 0, "b must be > 0")
    elif kind == "PiecewiseConstant":
        _require("breakpoints" in p and "levels" in p,
                 "PiecewiseConstant needs 'breakpoints' and 'levels'")
        bps = tuple(float(v) for v in p.pop("breakpoints"))
        lvl = tuple(float(v) for v in p.pop("levels"))
        _require(all(b > 0 for b in bps), "breakpoints must be positive")
        _require(all(np.diff(bps) > 0) if len(bps) > 1 else True,
                 "breakpoints must be strictly increasing")
        _require(len(lvl) == len(bps) + 1,
                 "need len(levels) == len(breakpoints) + 1")
        _require(all(v >= 0 for v in lvl), "levels must be nonnegative")
        out["breakpoints"] = bps
        out["levels"] = lvl
    if p:
        raise InvalidModelError(f"{kind}: unexpected parameters {sorted(p)}")
    return out


# -- factories ---------------------------------------------------------------

def constant(lam: float) -> RateModel:
    return RateModel.make("Constant", lam=lam)


def zero_rate() -> RateModel:
    """The no-disruption model (constant rate 0)."""
    return RateModel.make("Constant", lam=0.0)


def linear_increasing(a: float, lam: float) -> RateModel:
    return RateModel.make("LinearIncreasing", a=a, lam=lam)


def concave_increasing(a: float, lam: float) -> RateModel:
    return RateModel.make("ConcaveIncreasing", a=a, lam=lam)


def step_increasing(lam: float, t0: float) -> RateModel:
    return RateModel.make("StepIncreasing", lam=lam, t0=t0)


def linear_decreasing(lam: float, a: float, lam0: float) -> RateModel:
    return RateModel.make("LinearDecreasing", lam=lam, a=a, lam0=lam0)


def convex_decreasing(lam: float = 1.0) -> RateModel:
    return RateModel.make("ConvexDecreasing", lam=lam)


def step_decreasing(lam: float, t0: float) -> RateModel:
    return RateModel.make("StepDecreasing", lam=lam, t0=t0)


def sinusoidal(lam: float, a: float) -> RateModel:
    return RateModel.make("Sinusoidal", lam=lam, a=a)


def bathtub(lam: float, b1: float, b2: float, b3: float) -> RateModel:
    return RateModel.make("Bathtub", lam=lam, b1=b1, b2=b2, b3=b3)


def zero_then_constant(b: float, lam: float) -> RateModel:
    return RateModel.make("ZeroThenConstant", b=b, lam=lam)


def two_phase_constant(lam1: float, lam2: float, b: float) -> RateModel:
    return RateModel.make("TwoPhaseConstant", lam1=lam1, lam2=lam2, b=b)


def piecewise_constant(breakpoints: Sequence[float],
                       levels: Sequence[float]) -> RateModel:
    return RateModel.make("PiecewiseConstant",
                          breakpoints=tuple(breakpoints), levels=tuple(levels))


# -- piecewise-constant backbone ---------------------------------------------

_PWC_KINDS = {"StepIncreasing", "StepDecreasing", "ZeroThenConstant",
              "TwoPhaseConstant", "PiecewiseConstant"}


@lru_cache(maxsize=None)
def _pwc_tables(model: RateModel):
    """(knots, levels, cumulative-at-knots) arrays for step-like kinds."""
    p = model.params_dict
    if model.kind == "StepIncreasing":
        knots, levels = [0.0, p["t0"]], [p["lam"] / 2.0, p["lam"]]
    elif model.kind == "StepDecreasing":
        knots, levels = [0.0, p["t0"]], [p["lam"], p["lam"] / 2.0]
    elif model.kind == "ZeroThenConstant":
        knots, levels = [0.0, p["b"]], [0.0, p["lam"]]
    elif model.kind == "TwoPhaseConstant":
        knots, levels = [0.0, p["b"]], [p["lam1"], p["lam2"]]
    elif model.kind == "PiecewiseConstant":
        knots = [0.0] + list(p["breakpoints"])
        levels = list(p["levels"])
    else:  # pragma: no cover
        raise AssertionError(model.kind)
    knots_a = np.asarray(knots)
    levels_a = np.asarray(levels)
    cums = np.concatenate(([0.0], np.cumsum(levels_a[:-1] * np.diff(knots_a))))
    return knots_a, levels_a, cums


def _pwc_rate(model: RateModel, t: np.ndarray, side: str) -> np.ndarray:
    knots, levels, _ = _pwc_tables(model)
    idx = np.searchsorted(knots, t, side=side) - 1
    return levels[np.clip(idx, 0, len(levels) - 1)]


def _pwc_cum0(model: RateModel, t: np.ndarray) -> np.ndarray:
    knots, levels, cums = _pwc_tables(model)
    idx = np.clip(np.searchsorted(knots, t, side="right") - 1, 0, None)
    return cums[idx] + levels[idx] * (t - knots[idx])


def _pwc_inverse0(model: RateModel, x: np.ndarray) -> np.ndarray:
    knots, levels, cums = _pwc_tables(model)
    ends = np.concatenate((cums[1:], [np.inf] if levels[-1] > 0 else [cums[-1]]))
    j = np.searchsorted(ends, x, side="left")
    out = np.full(np.shape(x), np.inf)
    ok = j < len(knots)
    jj = np.where(ok, j, 0)
    lev = levels[jj]
    with np.errstate(divide="ignore", invalid="ignore"):
        pos = knots[jj] + np.where(lev > 0, (x - cums[jj]) / np.where(lev > 0, lev, 1.0), 0.0)
    out = np.where(ok, pos, np.inf)
    return np.where(np.asarray(x) <= 0, 0.0, out)


# -- per-kind closed forms ----------------------------------------------------

def _kind_rate(model: RateModel, t: np.ndarray, side: str) -> np.ndarray:
    p = model.params_dict
    k = model.kind
    if k == "Constant":
        return np.full_like(t, p["lam"], dtype=float)
    if k == "LinearIncreasing":
        return np.minimum(p["a"] * t, p["lam"])
    if k == "ConcaveIncreasing":
        return p["lam"] * np.sqrt(p["a"] * t)
    if k == "LinearDecreasing":
        return np.maximum(p["lam"] - p["a"] * t, p["lam0"])
    if k == "ConvexDecreasing":
        return p["lam"] / np.sqrt(t + 1.0)
    if k == "Sinusoidal":
        return p["lam"] * (1.0 + np.sin(p["a"] * t))
    if k == "Bathtub":
        lam, b1, b2, b3 = p["lam"], p["b1"], p["b2"], p["b3"]
        a = lam / (2.0 * b1)
        return np.select(
            [t <= b1, t <= b2, t <= b3],
            [lam - a * t, lam / 2.0, lam / 2.0 + a * (t - b2)],
            default=lam,
        )
    if k in _PWC_KINDS:
        return _pwc_rate(model, t, side)
    raise AssertionError(k)  # pragma: no cover


def _kind_cum0(model: RateModel, t: np.ndarray) -> np.ndarray:
    p = model.params_dict
    k = model.kind
    if k == "Constant":
        return p["lam"] * t
    if k == "LinearIncreasing":
        a, lam = p["a"], p["lam"]
        ts = lam / a
        cap = 0.5 * a * ts * ts
        return np.where(t <= ts, 0.5 * a * t * t, cap + lam * (t - ts))
    if k == "ConcaveIncreasing":
        c = p["lam"] * math.sqrt(p["a"])
        return (2.0 / 3.0) * c * np.power(t, 1.5)
    if k == "LinearDecreasing":
        lam, a, lam0 = p["lam"], p["a"], p["lam0"]
        ts = (lam - lam0) / a
        cap = lam * ts - 0.5 * a * ts * ts
        return np.where(t <= ts, lam * t - 0.5 * a * t * t,
                        cap + lam0 * (t - ts))
    if k == "ConvexDecreasing":
        return 2.0 * p["lam"] * (np.sqrt(t + 1.0) - 1.0)
    if k == "Sinusoidal":
        lam, a = p["lam"], p["a"]
        return lam * (t + (1.0 - np.cos(a * t)) / a)
    if k == "Bathtub":
        lam, b1, b2, b3 = p["lam"], p["b1"], p["b2"], p["b3"]
        a = lam / (2.0 * b1)
        c1 = lam * b1 - 0.5 * a * b1 * b1
        c2 = c1 + 0.5 * lam * (b2 - b1)
        c3 = c2 + 0.5 * lam * (b3 - b2) + 0.5 * a * (b3 - b2) ** 2
        u2 = t - b2
        return np.select(
            [t <= b1, t <= b2, t <= b3],
            [lam * t - 0.5 * a * t * t,
             c1 + 0.5 * lam * (t - b1),
             c2 + 0.5 * lam * u2 + 0.5 * a * u2 * u2],
            default=c3 + lam * (t - b3),
        )
    if k in _PWC_KINDS:
        return _pwc_cum0(model, t)
    raise AssertionError(k)  # pragma: no cover


def _kind_inverse0(model: RateModel, x: np.ndarray) -> np.ndarray:
    p = model.params_dict
    k = model.kind
    if k == "Constant":
        lam = p["lam"]
        if lam == 0.0:
            return np.where(x <= 0, 0.0, np.inf)
        return np.maximum(x, 0.0) / lam
    if k == "LinearIncreasing":
        a, lam = p["a"], p["lam"]
        ts = lam / a
        cap = 0.5 * a * ts * ts
        x = np.maximum(x, 0.0)
        return np.where(x <= cap, np.sqrt(2.0 * x / a), ts + (x - cap) / lam)
    if k == "ConcaveIncreasing":
        c = p["lam"] * math.sqrt(p["a"])
        return np.power(np.maximum(x, 0.0) * 1.5 / c, 2.0 / 3.0)
    if k == "LinearDecreasing":
        lam, a, lam0 = p["lam"], p["a"], p["lam0"]
        ts = (lam - lam0) / a
        cap = lam * ts - 0.5 * a * ts * ts
        x = np.maximum(x, 0.0)
        disc = np.sqrt(np.maximum(lam * lam - 2.0 * a * np.minimum(x, cap), 0.0))
        head = (lam - disc) / a
        if lam0 > 0:
            return np.where(x <= cap, head, ts + (x - cap) / lam0)
        return np.where(x <= cap, head, np.inf)
    if k == "ConvexDecreasing":
        x = np.maximum(x, 0.0) / p["lam"]
        return 0.25 * x * x + x
    if k == "Bathtub":
        lam, b1, b2, b3 = p["lam"], p["b1"], p["b2"], p["b3"]
        a = lam / (2.0 * b1)
        c1 = lam * b1 - 0.5 * a * b1 * b1
        c2 = c1 + 0.5 * lam * (b2 - b1)
        c3 = c2 + 0.5 * lam * (b3 - b2) + 0.5 * a * (b3 - b2) ** 2
        x = np.maximum(x, 0.0)
        seg0 = (lam - np.sqrt(np.maximum(lam * lam - 2.0 * a * np.minimum(x, c1), 0.0))) / a
        seg1 = b1 + (x - c1) / (0.5 * lam)
        xr = np.maximum(x - c2, 0.0)
        seg2 = b2 + (-0.5 * lam + np.sqrt(0.25 * lam * lam + 2.0 * a * xr)) / a
        seg3 = b3 + (x - c3) / lam
        return np.select([x <= c1, x <= c2, x <= c3], [seg0, seg1, seg2],
                         default=seg3)
    if k == "Sinusoidal":
        return _bisect_inverse(lambda s: _kind_cum0(model, s), x,
                               hi_guess=np.maximum(x, 0.0) / p["lam"] + 1.0)
    if k in _PWC_KINDS:
        return _pwc_inverse0(model, x)
    raise AssertionError(k)  # pragma: no cover


def _bisect_inverse(cum0: Callable[[np.ndarray], np.ndarray],
                    x: np.ndarray, hi_guess: ArrayLike = 1.0,
                    max_doublings: int = 200) -> np.ndarray:
    """Generalized inverse inf{s >= 0 : cum0(s) >= x} by bracketed bisection.

    Robust across zero-rate flats; 1e-12 absolute time tolerance.  Targets
    that exceed the total mass come back as +inf.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    lo = np.zeros_like(x)
    hi = np.maximum(np.atleast_1d(np.asarray(hi_guess, dtype=float)), 1.0) * np.ones_like(x)
    reachable = cum0(hi) >= x
    for _ in range(max_doublings):
        if reachable.all():
            break
        hi = np.where(reachable, hi, hi * 2.0)
        reachable = cum0(hi) >= x
    while np.max(hi - lo) > _INVERSE_TIME_TOL:
        mid = 0.5 * (lo + hi)
        ge = cum0(mid) >= x
        hi = np.where(ge, mid, hi)
        lo = np.where(ge, lo, mid)
    out = np.where(reachable, hi, np.inf)
    return np.where(x <= 0, 0.0, out)


# -- metadata ----------------------------------------------------------------

@lru_cache(maxsize=None)
def _kind_metadata(model: RateModel) -> RateMetadata:
    p = model.params_dict
    k = model.kind
    inf = math.inf
    if k == "Constant":
        lam = p["lam"]
        return RateMetadata(1.0, 1.0, lam, 0.0, 0.0,
                            Monotonicity("constant"), 0.0)
    if k == "LinearIncreasing":
        a, lam = p["a"], p["lam"]
        ts = lam / a
        return RateMetadata(0.0, 1.0, lam, a, ts,
                            Monotonicity("increasing", (0.0, ts)), a / lam)
    if k == "ConcaveIncreasing":
        return RateMetadata(0.0, inf, p["lam"], inf, None,
                            Monotonicity("increasing", (0.0, inf)), inf)
    if k == "StepIncreasing":
        return RateMetadata(0.5, 1.0, p["lam"], inf, p["t0"],
                            Monotonicity("increasing"), 0.0)
    if k == "LinearDecreasing":
        lam, a, lam0 = p["lam"], p["a"], p["lam0"]
        ts = (lam - lam0) / a
        return RateMetadata(lam0 / lam, 1.0, lam, a, ts,
                            Monotonicity("decreasing", (0.0, ts)), -a / lam)
    if k == "ConvexDecreasing":
        lam = p["lam"]
        return RateMetadata(0.0, 1.0, lam, 0.5 * lam, None,
                            Monotonicity("decreasing", (0.0, inf)), -0.5)
    if k == "StepDecreasing":
        return RateMetadata(0.5, 1.0, p["lam"], inf, p["t0"],
                            Monotonicity("decreasing"), 0.0)
    if k == "Sinusoidal":
        return RateMetadata(0.0, 2.0, p["lam"], p["lam"] * p["a"], None,
                            Monotonicity("none"), p["a"])
    if k == "Bathtub":
        lam, b1 = p["lam"], p["b1"]
        a = lam / (2.0 * b1)
        return RateMetadata(0.5, 1.0, lam, a, p["b3"],
                            Monotonicity("none"), -a / lam)
    if k == "ZeroThenConstant":
        return RateMetadata(0.0, 1.0, p["lam"], inf, p["b"],
                            Monotonicity("increasing"), 0.0)
    if k == "TwoPhaseConstant":
        lam1, lam2, b = p["lam1"], p["lam2"], p["b"]
        bar = max(lam1, lam2)
        if bar == 0.0:
            return RateMetadata(1.0, 1.0, 0.0, 0.0, 0.0,
                                Monotonicity("constant"), 0.0)
        direction = ("constant" if lam1 == lam2
                     else "increasing" if lam2 > lam1 else "decreasing")
        lips = 0.0 if lam1 == lam2 else inf
        t0 = 0.0 if lam1 == lam2 else b
        return RateMetadata(min(lam1, lam2) / bar, 1.0, bar, lips, t0,
                            Monotonicity(direction), 0.0)
    if k == "PiecewiseConstant":
        levels = np.asarray(p["levels"])
        bps = p["breakpoints"]
        bar = float(levels.max())
        if bar == 0.0:
            return RateMetadata(1.0, 1.0, 0.0, 0.0, 0.0,
                                Monotonicity("constant"), 0.0)
        d = np.diff(levels)
        if np.all(d == 0):
            direction, lips = "constant", 0.0
        elif np.all(d >= 0):
            direction, lips = "increasing", inf
        elif np.all(d <= 0):
            direction, lips = "decreasing", inf
        else:
            direction, lips = "none", inf
        t0 = bps[-1] if bps else 0.0
        return RateMetadata(float(levels.min()) / bar, 1.0, bar, lips, t0,
                            Monotonicity(direction), 0.0)
    raise AssertionError(k)  # pragma: no cover


@lru_cache(maxsize=None)
def _kind_breakpoints(model: RateModel) -> Tuple[float, ...]:
    p = model.params_dict
    k = model.kind
    if k == "LinearIncreasing":
        return (p["lam"] / p["a"],)
    if k == "LinearDecreasing":
        return ((p["lam"] - p["lam0"]) / p["a"],)
    if k in ("StepIncreasing", "StepDecreasing"):
        return (p["t0"],)
    if k == "Bathtub":
        return (p["b1"], p["b2"], p["b3"])
    if k == "ZeroThenConstant":
        return (p["b"],)
    if k == "TwoPhaseConstant":
        return (p["b"],)
    if k == "PiecewiseConstant":
        return tuple(p["breakpoints"])
    return ()


_JUMP_KINDS = {"StepIncreasing", "StepDecreasing", "ZeroThenConstant",
               "TwoPhaseConstant", "PiecewiseConstant"}


# -- the custom escape hatch ---------------------------------------------------

@dataclass(frozen=True)
class AnalyticRate:
    """A rate outside the built-in families, with caller-supplied metadata.

    ``rate_fn`` must accept numpy arrays.  When ``cumulative0_fn`` is not
    given, the cumulative intensity uses adaptive quadrature (relative
    tolerance 1e-10) and the inverse uses bracketed bisection, so closed
    forms are strongly preferred for anything performance-sensitive.
    """

    rate_fn: Callable[[np.ndarray], np.ndarray]
    lambda_bar: float
    f_plus: float
    f_minus: float
    lipschitz_L: float
    monotonicity: Monotonicity
    tail_time_t0: Optional[float] = None
    f_prime_0: Optional[float] = None
    cumulative0_fn: Optional[Callable[[np.ndarray], np.ndarray]] = None
    kinks: Tuple[float, ...] = ()
    name: str = "analytic"

    @property
    def kind(self) -> str:
        return f"Analytic({self.name})"

    def _cum0(self, t: np.ndarray) -> np.ndarray:
        if self.cumulative0_fn is not None:
            return self.cumulative0_fn(t)
        flat = np.atleast_1d(np.asarray(t, dtype=float)).ravel()
        order = np.argsort(flat)
        vals = np.empty_like(flat)
        acc, prev = 0.0, 0.0
        for i in order:
            ti = flat[i]
            if ti > prev:
                acc += _quad_rate(self.rate_fn, prev, ti, self.kinks)
                prev = ti
            vals[i] = acc
        return vals.reshape(np.shape(t)) if np.ndim(t) else float(vals[0])


def _quad_rate(fn, lo: float, hi: float, kinks: Sequence[float]) -> float:
    pts = [p for p in kinks if lo < p < hi] or None
    val, _ = integrate.quad(lambda s: float(fn(np.asarray(s))), lo, hi,
                            points=pts, limit=200, epsabs=0.0, epsrel=1e-10)
    return val


# -- public operations ---------------------------------------------------------

def _as_nonneg_times(t: ArrayLike, what: str) -> np.ndarray:
    arr = np.asarray(t, dtype=float)
    if np.any(arr < 0):
        raise DomainError(f"{what} must be nonnegative")
    return arr


def _maybe_scalar(value: np.ndarray, like: ArrayLike):
    if np.ndim(like) == 0:
        return float(np.asarray(value).item())
    return value


def rate(model, t: ArrayLike, side: str = "right") -> ArrayLike:
    """Instantaneous disruption intensity at time ``t`` (>= 0).

    ``side`` picks the one-sided value at jump points of step-like rates;
    the default is the right-continuous value.
    """
    arr = _as_nonneg_times(t, "t")
    if isinstance(model, AnalyticRate):
        out = np.asarray(model.rate_fn(arr), dtype=float)
    else:
        out = _kind_rate(model, arr, side)
    return _maybe_scalar(out, t)


def cumulative_intensity(model, t1: ArrayLike, t2: ArrayLike) -> ArrayLike:
    """Expected disruption count on [t1, t2]; exact closed form per kind."""
    a1 = _as_nonneg_times(t1, "t1")
    a2 = np.asarray(t2, dtype=float)
    if np.any(a2 < a1):
        raise DomainError("need t1 <= t2")
    if isinstance(model, AnalyticRate):
        out = np.asarray(model._cum0(a2)) - np.asarray(model._cum0(a1))
    else:
        out = _kind_cum0(model, a2) - _kind_cum0(model, a1)
    like = t1 if np.ndim(t1) else t2
    return _maybe_scalar(np.maximum(out, 0.0), like)


def cumulative_from_zero(model, t: ArrayLike) -> ArrayLike:
    """Cumulative intensity on [0, t]."""
    arr = _as_nonneg_times(t, "t")
    if isinstance(model, AnalyticRate):
        out = np.asarray(model._cum0(arr), dtype=float)
    else:
        out = _kind_cum0(model, arr)
    return _maybe_scalar(out, t)


def inverse_cumulative(model, x: ArrayLike) -> ArrayLike:
    """Generalized inverse inf{s >= 0 : cumulative(0, s) >= x}.

    Raises :class:`UnreachableMassError` when ``x`` exceeds the total mass
    of a rate with finite cumulative intensity.
    """
    arr = np.asarray(x, dtype=float)
    if np.any(arr < 0):
        raise DomainError("x must be nonnegative")
    out = inverse_cumulative_or_inf(model, arr)
    if np.any(np.isinf(out)):
        raise UnreachableMassError(
            "target cumulative intensity exceeds the rate's total mass")
    return _maybe_scalar(out, x)


def inverse_cumulative_or_inf(model, x: ArrayLike) -> np.ndarray:
    """Like :func:`inverse_cumulative` but returns +inf for unreachable mass."""
    arr = np.asarray(x, dtype=float)
    if isinstance(model, AnalyticRate):
        return _bisect_inverse(model._cum0, arr)
    return _kind_inverse0(model, arr)


def metadata(model) -> RateMetadata:
    """Analytic constants (shape bounds, scale, Lipschitz, tail time)."""
    if isinstance(model, AnalyticRate):
        return RateMetadata(model.f_minus, model.f_plus, model.lambda_bar,
                            model.lipschitz_L, model.tail_time_t0,
                            model.monotonicity, model.f_prime_0)
    return _kind_metadata(model)


def breakpoints(model) -> Tuple[float, ...]:
    """Interior kink or jump times of the rate (quadrature split points)."""
    if isinstance(model, AnalyticRate):
        return model.kinks
    return _kind_breakpoints(model)


def has_jumps(model) -> bool:
    if isinstance(model, AnalyticRate):
        return False
    return model.kind in _JUMP_KINDS


def rate_sup(model, t1: float, t2: float) -> float:
    """Exact supremum of the rate over [t1, t2]."""
    if t2 < t1:
        raise DomainError("need t1 <= t2")
    if isinstance(model, AnalyticRate):
        d = model.monotonicity.direction
        if d in ("increasing", "constant"):
            return float(rate(model, t2))
        if d == "decreasing":
            return float(rate(model, t1))
        grid = np.linspace(t1, t2, 257)
        return float(np.max(model.rate_fn(grid)))
    k = model.kind
    meta = _kind_metadata(model)
    d = meta.monotonicity.direction
    if d in ("increasing", "constant"):
        return float(max(rate(model, t2, "left"), rate(model, t2, "right")))
    if d == "decreasing":
        return float(rate(model, t1, "right"))
    if k == "Sinusoidal":
        a, lam = model.param("a"), model.param("lam")
        k_lo = math.ceil((a * t1 - math.pi / 2.0) / (2.0 * math.pi))
        peak = (math.pi / 2.0 + 2.0 * math.pi * k_lo) / a
        if t1 <= peak <= t2:
            return 2.0 * lam
        return float(max(rate(model, t1), rate(model, t2)))
    if k == "Bathtub":
        return float(max(rate(model, t1), rate(model, t2)))
    if k == "PiecewiseConstant":
        knots, levels, _ = _pwc_tables(model)
        i1 = max(np.searchsorted(knots, t1, side="right") - 1, 0)
        i2 = max(np.searchsorted(knots, t2, side="right") - 1, 0)
        return float(np.max(levels[i1:i2 + 1]))
    raise AssertionError(k)  # pragma: no cover


def total_mass(model) -> float:
    """Total cumulative intensity on [0, inf)."""
    if isinstance(model, AnalyticRate):
        meta = metadata(model)
        if meta.tail_time_t0 is not None and float(rate(model, meta.tail_time_t0)) == 0.0:
            return float(cumulative_from_zero(model, meta.tail_time_t0))
        return math.inf
    k = model.kind
    p = model.params_dict
    if k == "Constant":
        return 0.0 if p["lam"] == 0.0 else math.inf
    if k == "LinearDecreasing" and p["lam0"] == 0.0:
        ts = p["lam"] / p["a"]
        return float(_kind_cum0(model, np.asarray(ts)))
    if k in _PWC_KINDS:
        knots, levels, cums = _pwc_tables(model)
        return float(cums[-1]) if levels[-1] == 0.0 else math.inf
    return math.inf


def fast_cumulative0(model) -> Callable[[np.ndarray], np.ndarray]:
    """Closure computing the cumulative intensity from 0 without argument
    validation; simulation hot path (times are nonnegative by construction)."""
    if isinstance(model, AnalyticRate):
        return model._cum0
    if model.kind == "Constant":
        lam = model.param("lam")
        return lambda t: lam * t
    return lambda t: _kind_cum0(model, t)


def fast_inverse_or_inf(model) -> Callable[[np.ndarray], np.ndarray]:
    """Closure for the generalized inverse, +inf on unreachable mass."""
    if isinstance(model, AnalyticRate):
        return lambda x: _bisect_inverse(model._cum0, x)
    if model.kind == "Constant":
        lam = model.param("lam")
        if lam == 0.0:
            return lambda x: np.where(np.asarray(x) <= 0, 0.0, np.inf)
        return lambda x: np.maximum(x, 0.0) / lam
    return lambda x: _kind_inverse0(model, x)


def fast_next_arrival(model) -> Callable[[np.ndarray, np.ndarray], np.ndarray]:
    """Closure (t, e) -> next arrival time; fused per-kind where possible."""
    if not isinstance(model, AnalyticRate) and model.kind == "Constant":
        lam = model.param("lam")
        if lam == 0.0:
            return lambda t, e: np.full_like(np.asarray(t, dtype=float), np.inf)
        inv = 1.0 / lam
        return lambda t, e: t + e * inv
    cum0 = fast_cumulative0(model)
    inverse = fast_inverse_or_inf(model)
    return lambda t, e: np.asarray(inverse(cum0(t) + e))


def fast_scalar_cumulative0(model) -> Callable[[float], float]:
    """Scalar-float twin of :func:`fast_cumulative0` (straggler path)."""
    if not isinstance(model, AnalyticRate) and model.kind == "Constant":
        lam = model.param("lam")
        return lambda t: lam * t
    arr_fn = fast_cumulative0(model)
    return lambda t: float(np.asarray(arr_fn(np.float64(t))).item())


def fast_scalar_inverse_or_inf(model) -> Callable[[float], float]:
    """Scalar-float twin of :func:`fast_inverse_or_inf`."""
    if not isinstance(model, AnalyticRate) and model.kind == "Constant":
        lam = model.param("lam")
        if lam == 0.0:
            return lambda x: 0.0 if x <= 0 else math.inf
        return lambda x: max(x, 0.0) / lam
    arr_fn = fast_inverse_or_inf(model)
    return lambda x: float(np.asarray(arr_fn(np.float64(x))).item())


def cumulative_by_quadrature(model, t1: float, t2: float) -> float:
    """Adaptive-quadrature cumulative intensity (independent cross-check)."""
    if t2 < t1 or t1 < 0:
        raise DomainError("need 0 <= t1 <= t2")
    fn = (model.rate_fn if isinstance(model, AnalyticRate)
          else (lambda s: _kind_rate(model, np.asarray(s), "right")))
    return _quad_rate(fn, float(t1), float(t2), breakpoints(model))


def probe_nonnegative(model, n_points: int = 1000) -> bool:
    """Probe the rate for nonnegativity on [0, 2*t0 + 100]."""
    meta = metadata(model)
    t0 = meta.tail_time_t0 if meta.tail_time_t0 is not None else 0.0
    grid = np.linspace(0.0, 2.0 * t0 + 100.0, n_points)
    return bool(np.all(np.asarray(rate(model, grid)) >= 0.0))
