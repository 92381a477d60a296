"""Benchmark objectives (maximization form), target regions and bump constructions."""

from __future__ import annotations

import enum
import functools
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate, optimize

from .kernels import as_points

GRID_CAP = 5_000_000


@dataclass(frozen=True)
class TargetRegion:
    """Closed axis-aligned box given by its centroid and full side lengths."""

    centroid: tuple
    lengths: tuple

    def __post_init__(self):
        c = tuple(float(v) for v in np.atleast_1d(self.centroid))
        lengths = np.atleast_1d(np.asarray(self.lengths, dtype=float))
        if lengths.size == 1 and len(c) > 1:
            lengths = np.repeat(lengths, len(c))
        if lengths.size != len(c):
            raise ValueError("centroid and lengths differ in dimension")
        if np.any(lengths <= 0):
            raise ValueError("region lengths must be positive")
        object.__setattr__(self, "centroid", c)
        object.__setattr__(self, "lengths", tuple(float(v) for v in lengths))

    @property
    def dim(self) -> int:
        return len(self.centroid)

    @property
    def lower(self) -> np.ndarray:
        return np.asarray(self.centroid) - 0.5 * np.asarray(self.lengths)

    @property
    def upper(self) -> np.ndarray:
        return np.asarray(self.centroid) + 0.5 * np.asarray(self.lengths)

    @property
    def volume(self) -> float:
        return float(np.prod(self.lengths))

    def shrink(self, margin: float) -> "TargetRegion":
        lengths = np.asarray(self.lengths) - 2 * margin
        if np.any(lengths <= 0):
            raise ValueError(f"cannot shrink region by {margin}: it would vanish")
        return TargetRegion(self.centroid, tuple(lengths))

    def contains(self, X) -> np.ndarray:
        X = as_points(X)
        if X.shape[1] != self.dim:
            raise ValueError(f"dimension mismatch: {X.shape[1]} vs {self.dim}")
        half = 0.5 * np.asarray(self.lengths)
        return np.all(np.abs(X - np.asarray(self.centroid)) <= half, axis=1)

    def signed_distance(self, X) -> np.ndarray:
        """Depth inside the box (positive) or Euclidean distance outside it (negative)."""
        X = as_points(X)
        lo, hi = self.lower, self.upper
        outside = np.maximum(np.maximum(lo - X, X - hi), 0.0)
        out_dist = np.sqrt(np.sum(outside**2, axis=1))
        depth = np.min(np.minimum(X - lo, hi - X), axis=1)
        return np.where(out_dist > 0, -out_dist, np.maximum(depth, 0.0))

    def intersects(self, bounds) -> bool:
        bounds = np.asarray(bounds, dtype=float)
        return bool(np.all(self.lower <= bounds[:, 1]) and np.all(self.upper >= bounds[:, 0]))


def region_contains(region: TargetRegion, x) -> bool:
    return bool(region.contains(np.atleast_1d(np.asarray(x, dtype=float))[None, :])[0])


# --------------------------------------------------------------------------
# Objectives
# --------------------------------------------------------------------------


@dataclass
class Objective:
    """A noiseless objective to be maximized over a box.

    ``func`` maps an ``(n, d)`` array to ``n`` values. The function range and
    maximizer are certified on a dense reference grid (plus a local polish)
    and cached on first use.
    """

    name: str
    bounds: np.ndarray
    func: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    region: TargetRegion = None
    global_peak_in_region: bool = False
    reference_resolution: int = 2001

    def __post_init__(self):
        self.bounds = np.asarray(self.bounds, dtype=float).reshape(-1, 2)
        if self.region is not None and not self.region.intersects(self.bounds):
            raise ValueError(f"target region of {self.name} misses the domain")

    @property
    def dim(self) -> int:
        return self.bounds.shape[0]

    @property
    def diagonal(self) -> float:
        return float(np.linalg.norm(self.bounds[:, 1] - self.bounds[:, 0]))

    def in_domain(self, X, tol: float = 1e-9) -> np.ndarray:
        X = as_points(X)
        span = self.bounds[:, 1] - self.bounds[:, 0]
        return np.all((X >= self.bounds[:, 0] - tol * span) & (X <= self.bounds[:, 1] + tol * span), axis=1)

    def values(self, X) -> np.ndarray:
        X = as_points(X)
        if X.shape[1] != self.dim:
            raise ValueError(f"{self.name} is {self.dim}-D, got points of dimension {X.shape[1]}")
        if not np.all(self.in_domain(X)):
            raise ValueError(f"point outside the domain of {self.name}")
        return np.asarray(self.func(X), dtype=float)

    def __call__(self, x) -> float:
        return objective_eval(self, x)

    def reference_grid(self) -> np.ndarray:
        per_dim = max(2, int(round(self.reference_resolution ** (1.0 / self.dim))))
        return tensor_grid(self.bounds, [per_dim] * self.dim)

    @functools.cached_property
    def _reference(self):
        X = self.reference_grid()
        f = self.values(X)
        i_max, i_min = int(np.argmax(f)), int(np.argmin(f))
        x_star, f_max = _polish(self, X[i_max], f[i_max], sign=1.0)
        _, f_min = _polish(self, X[i_min], f[i_min], sign=-1.0)
        return x_star, f_max, f_min

    @property
    def x_star(self) -> np.ndarray:
        return self._reference[0]

    @property
    def f_max(self) -> float:
        return self._reference[1]

    @property
    def f_min(self) -> float:
        return self._reference[2]

    @property
    def f_range(self) -> float:
        return self.f_max - self.f_min


def _polish(obj: Objective, x0, f0, sign: float):
    """Bounded local refinement of a grid extremum; never worse than the grid point."""
    res = optimize.minimize(
        lambda x: -sign * obj.func(np.clip(x, obj.bounds[:, 0], obj.bounds[:, 1])[None, :])[0],
        x0,
        method="L-BFGS-B",
        bounds=obj.bounds,
    )
    x1 = np.clip(res.x, obj.bounds[:, 0], obj.bounds[:, 1])
    f1 = float(obj.func(x1[None, :])[0])
    if sign * f1 > sign * f0:
        return x1, f1
    return np.asarray(x0, dtype=float), float(f0)


def objective_eval(obj: Objective, x) -> float:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    return float(obj.values(x[None, :])[0])


def tensor_grid(bounds, resolution) -> np.ndarray:
    """Points of the tensor grid in lexicographic (C) order."""
    bounds = np.asarray(bounds, dtype=float).reshape(-1, 2)
    resolution = np.broadcast_to(np.asarray(resolution, dtype=int), (bounds.shape[0],))
    total = int(np.prod(resolution.astype(float)))
    if total > GRID_CAP:
        raise ValueError(f"grid of {total} points exceeds the cap of {GRID_CAP}")
    axes = [np.linspace(lo, hi, n) for (lo, hi), n in zip(bounds, resolution)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def grid_maximum(obj: Objective, resolution, region: TargetRegion | None = None):
    """Argmax over the tensor grid (optionally restricted to ``region``).

    Ties go to the lowest lexicographic grid index.
    """
    X = tensor_grid(obj.bounds, resolution)
    f = obj.values(X)
    if region is not None:
        mask = region.contains(X)
        if not mask.any():
            raise ValueError("the region contains no grid point")
        f = np.where(mask, f, -np.inf)
    i = int(np.argmax(f))
    return X[i], float(f[i])


# --- benchmark formulas (minimization form, as published) ---------------


def _forrester(X):
    x = X[:, 0]
    return (6 * x - 2) ** 2 * np.sin(12 * x - 4)


def _levy(X):
    z = 1 + (X[:, 0] - 1) / 4
    return np.sin(np.pi * z) ** 2 + (z - 1) ** 2 * (1 + np.sin(2 * np.pi * z) ** 2)


def _bohachevsky(X):
    x1, x2 = X[:, 0], X[:, 1]
    return 0.7 + x1**2 + 2 * x2**2 - 0.3 * np.cos(3 * np.pi * x1) - 0.4 * np.cos(4 * np.pi * x2)


def _branin(X):
    x1, x2 = X[:, 0], X[:, 1]
    b, c, t = 5.1 / (4 * np.pi**2), 5 / np.pi, 1 / (8 * np.pi)
    return (x2 - b * x1**2 + c * x1 - 6) ** 2 + 10 * (1 - t) * np.cos(x1) + 10


def _camelback(X):
    x1, x2 = X[:, 0], X[:, 1]
    return (4 - 2.1 * x1**2 + x1**4 / 3) * x1**2 + x1 * x2 + (-4 + 4 * x2**2) * x2**2


_H6_ALPHA = np.array([1.0, 1.2, 3.0, 3.2])
_H6_A = np.array(
    [
        [10, 3, 17, 3.5, 1.7, 8],
        [0.05, 10, 17, 0.1, 8, 14],
        [3, 3.5, 1.7, 10, 17, 8],
        [17, 8, 0.05, 10, 0.1, 14],
    ]
)
_H6_P = 1e-4 * np.array(
    [
        [1312, 1696, 5569, 124, 8283, 5886],
        [2329, 4135, 8307, 3736, 1004, 9991],
        [2348, 1451, 3522, 2883, 3047, 6650],
        [4047, 8828, 8732, 5743, 1091, 381],
    ]
)


def _hartmann6(X):
    inner = np.einsum("ij,nij->ni", _H6_A, (X[:, None, :] - _H6_P[None, :, :]) ** 2)
    return -np.exp(-inner) @ _H6_ALPHA


BOHACHEVSKY_SCALE = 1.0 / 100.0
LEVY_HARD_BOUNDS = [[-15.0, 10.0]]


def synthetic1d_raw(x) -> float:
    """``(6x - 2)^2 sin(12x - 4)`` as written, before negation for maximization."""
    return float(_forrester(np.array([[x]], dtype=float))[0])


def _negated(f, scale=1.0):
    return lambda X: -scale * f(X)


def _catalog():
    return {
        "synthetic1d": dict(bounds=[[-1.0, 1.0]], func=_negated(_forrester), region=((0.0,), 1.0)),
        "forrester1d": dict(bounds=[[0.0, 1.0]], func=_negated(_forrester), region=((0.25,), 0.5)),
        "levy1d": dict(bounds=[[-15.0, 10.0]], func=_negated(_levy), region=((-2.915,), 4.0)),
        "levy_hard1d": dict(bounds=LEVY_HARD_BOUNDS, func=_negated(_levy), region=((-11.56,), 6.881)),
        "bohachevsky2d": dict(
            bounds=[[-100.0, 100.0]] * 2,
            func=_negated(_bohachevsky, BOHACHEVSKY_SCALE),
            region=((55.0, 55.0), 90.0),
        ),
        "bohachevsky_hard2d": dict(
            bounds=[[-100.0, 100.0]] * 2,
            func=_negated(_bohachevsky, BOHACHEVSKY_SCALE),
            region=((75.0, 75.0), 50.0),
        ),
        "branin2d": dict(
            bounds=[[-5.0, 10.0], [0.0, 15.0]],
            func=_negated(_branin),
            region=((-1.0, 11.0), 8.0),
            global_peak_in_region=True,
        ),
        "camelback2d": dict(
            bounds=[[-3.0, 3.0], [-2.0, 2.0]],
            func=_negated(_camelback),
            region=((0.090, -0.713), 1.425),
            global_peak_in_region=True,
        ),
        "hartmann6d": dict(
            bounds=[[0.0, 1.0]] * 6,
            func=_negated(_hartmann6),
            region=((0.6,) * 6, 0.8),
            reference_resolution=9**6,
        ),
    }


OBJECTIVE_NAMES = tuple(_catalog())


@functools.lru_cache(maxsize=None)
def get_objective(name: str) -> Objective:
    """Catalog lookup; instances are shared so cached reference stats are reused."""
    entries = _catalog()
    if name not in entries:
        raise KeyError(f"unknown objective {name!r}; choose from {', '.join(entries)}")
    spec = entries[name]
    centroid, lengths = spec.pop("region")
    defaults = {"reference_resolution": 20001 if len(spec["bounds"]) == 1 else 1001**2}
    defaults.update(spec)
    return Objective(name=name, region=TargetRegion(centroid, lengths), **defaults)


# --------------------------------------------------------------------------
# Bumps
# --------------------------------------------------------------------------


class Profile(str, enum.Enum):
    SMOOTH = "smooth"
    INDICATOR = "indicator"


@dataclass(frozen=True)
class BumpSpec:
    """A bump of peak ``height`` supported on the ball of radius ``width``."""

    center: tuple
    width: float
    height: float
    profile: Profile = Profile.SMOOTH

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(v) for v in np.atleast_1d(self.center)))
        object.__setattr__(self, "profile", Profile(self.profile))
        if self.width <= 0:
            raise ValueError("bump width must be positive")

    def values(self, X) -> np.ndarray:
        X = as_points(X)
        r = np.sqrt(np.sum((X - np.asarray(self.center)) ** 2, axis=1)) / self.width
        if self.profile is Profile.INDICATOR:
            return np.where(r <= 1.0, self.height, 0.0)
        out = np.zeros_like(r)
        inside = r < 1.0
        # e * exp(-1/(1-r^2)) = exp(1 - 1/(1-r^2)) = exp(-r^2/(1-r^2)); exact 1 at r=0
        r2 = r[inside] ** 2
        out[inside] = self.height * np.exp(-r2 / (1.0 - r2))
        return out


def bump_eval(spec: BumpSpec, x) -> float:
    return float(spec.values(np.atleast_1d(np.asarray(x, dtype=float))[None, :])[0])


@functools.lru_cache(maxsize=1)
def bump_cdf_profile(n: int = 1024):
    """Normalized cumulative mass of the 1-D unit bump on ``n`` nodes of [-1, 1]."""
    nodes = np.linspace(-1.0, 1.0, n)
    unit = BumpSpec((0.0,), 1.0, 1.0)

    def density(u):
        return bump_eval(unit, u)

    pieces = [integrate.quad(density, a, b, epsabs=1e-14, epsrel=1e-12)[0] for a, b in zip(nodes[:-1], nodes[1:])]
    cdf = np.concatenate([[0.0], np.cumsum(pieces)])
    cdf /= cdf[-1]
    # the profile is symmetric: enforce it so cdf(0) is exactly 1/2
    cdf = 0.5 * (cdf + (1.0 - cdf[::-1]))
    return nodes, cdf


def _bump_cdf(s):
    nodes, cdf = bump_cdf_profile()
    return np.interp(s, nodes, cdf, left=0.0, right=1.0)


class Side(str, enum.Enum):
    INSIDE = "inside"
    OUTSIDE = "outside"


def convolved_bump_values(region: TargetRegion, w: float, tau: float, X, side=Side.INSIDE) -> np.ndarray:
    """Box indicator smoothed by a width-``w`` bump, scaled to plateau ``tau``.

    In 1-D this is the exact convolution. In higher dimensions the 1-D
    edge profile is applied to the signed distance to the box boundary.
    """
    if w <= 0:
        raise ValueError("transition width must be positive")
    if w >= min(region.lengths):
        raise ValueError("transition width must be below the smallest region extent")
    X = as_points(X)
    if region.dim == 1:
        a, b = region.lower[0], region.upper[0]
        frac = _bump_cdf((X[:, 0] - a) / w) - _bump_cdf((X[:, 0] - b) / w)
    else:
        frac = _bump_cdf(region.signed_distance(X) / w)
    frac = np.clip(frac, 0.0, 1.0)
    if Side(side) is Side.OUTSIDE:
        frac = 1.0 - frac
    return tau * frac


def convolved_bump_eval(region: TargetRegion, w: float, tau: float, side, x) -> float:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    return float(convolved_bump_values(region, w, tau, x[None, :], side)[0])


@dataclass(frozen=True)
class ConvolvedBump:
    region: TargetRegion
    width: float
    tau: float


def rkhs_norm_bound(bump, nu: float) -> float:
    """Scaling-law estimate (unit constant) of a bump's RKHS norm.

    ``height / w**nu`` for a plain bump, ``tau * vol(S) / w**nu`` for a
    convolved bump. Only meaningful for relative comparisons.
    """
    if isinstance(bump, ConvolvedBump):
        return abs(bump.tau) * bump.region.volume / bump.width**nu
    return abs(bump.height) / bump.width**nu
