"""Deterministic and random environments: realization, mass, and sampling.

An environment is a locally finite measure on the plane (or the line) that
drives every Poisson draw in the package.  Six models are provided:

* ``HomogeneousLebesgue`` -- a constant multiple of Lebesgue measure;
* ``DensityField`` -- any user density with a declared sup bound;
* ``ShotNoise`` -- indicator-kernel shot noise over a Poisson germ process;
* ``RandomSetIndicator`` -- two levels inside/outside a Boolean germ-grain set;
* ``VoronoiEdges`` -- length measure on the edges of a Poisson-Voronoi
  tessellation (dimension 2);
* ``ManhattanGrid`` -- length measure on a grid of Poisson axis-parallel
  lines (dimension 2).

``realize_environment`` freezes one random draw of a model into an
:class:`EnvironmentRealization`: either a density handle with a sup bound, or
a list of segments carrying mass per unit length.  Realizations are immutable
and may be shared across threads; all randomness flows through explicit seeds.
"""
from __future__ import annotations

import bisect
import json
import math
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np
from scipy.spatial import Voronoi, cKDTree

from .geometry import Configuration, Window
from .rng import UniformBlocks, as_generator, spawn


@dataclass(frozen=True)
class HomogeneousLebesgue:
    """Constant density ``z0`` per unit volume."""

    z0: float

    def __post_init__(self):
        if self.z0 < 0:
            raise ValueError("z0 must be >= 0")


@dataclass(frozen=True)
class DensityField:
    """User-supplied density with a declared supremum over the window.

    ``density`` must accept an (n, d) array and return (n,) values.  The sup
    bound is spot-checked at every evaluation; an evaluation above it aborts
    the run (the thinning sampler would silently be wrong otherwise).
    """

    density: Callable[[np.ndarray], np.ndarray]
    sup_bound: float

    def __post_init__(self):
        if self.sup_bound < 0:
            raise ValueError("sup_bound must be >= 0")


@dataclass(frozen=True)
class ShotNoise:
    """Sum of indicator kernels around a homogeneous Poisson germ process.

    The kernel is ``kernel_amplitude * 1{|x - germ| <= kernel_radius}``; its
    integral is amplitude times the ball volume, which makes every mean mass
    available in closed form for the validation suite.
    """

    pp_intensity: float
    kernel_radius: float
    kernel_amplitude: float

    def __post_init__(self):
        if self.pp_intensity < 0 or self.kernel_amplitude < 0:
            raise ValueError("rates must be >= 0")
        if not self.kernel_radius > 0:
            raise ValueError("kernel_radius must be positive")


@dataclass(frozen=True)
class RandomSetIndicator:
    """Density ``lambda_inside`` on a Boolean germ-grain set, else ``lambda_outside``."""

    lambda_inside: float
    lambda_outside: float
    germ_intensity: float
    grain_radius: float

    def __post_init__(self):
        if min(self.lambda_inside, self.lambda_outside, self.germ_intensity) < 0:
            raise ValueError("rates must be >= 0")
        if not self.grain_radius > 0:
            raise ValueError("grain_radius must be positive")


@dataclass(frozen=True)
class VoronoiEdges:
    """Unit length measure on Poisson-Voronoi cell boundaries (d = 2)."""

    seed_intensity: float

    def __post_init__(self):
        if not self.seed_intensity > 0:
            raise ValueError("seed_intensity must be positive")


@dataclass(frozen=True)
class ManhattanGrid:
    """Unit length measure on Poisson vertical and horizontal lines (d = 2)."""

    line_intensity: float

    def __post_init__(self):
        if self.line_intensity < 0:
            raise ValueError("line_intensity must be >= 0")


IntensityModel = Union[
    HomogeneousLebesgue,
    DensityField,
    ShotNoise,
    RandomSetIndicator,
    VoronoiEdges,
    ManhattanGrid,
]

SEGMENT_MODELS = (VoronoiEdges, ManhattanGrid)


@dataclass(frozen=True)
class Segment:
    """A line segment carrying mass per unit length.

    ``generators`` holds the pair of germ points whose bisector the segment
    lies on (Voronoi edges only); it exists so tests can verify equidistance.
    """

    start: np.ndarray
    end: np.ndarray
    linear_density: float
    generators: np.ndarray | None = None

    def __post_init__(self):
        s = np.asarray(self.start, dtype=float)
        e = np.asarray(self.end, dtype=float)
        if np.allclose(s, e):
            raise ValueError("segment endpoints must be distinct")
        if self.linear_density < 0:
            raise ValueError("linear_density must be >= 0")
        s.flags.writeable = False
        e.flags.writeable = False
        object.__setattr__(self, "start", s)
        object.__setattr__(self, "end", e)

    @property
    def length(self) -> float:
        return float(np.linalg.norm(self.end - self.start))

    @property
    def mass(self) -> float:
        return self.length * self.linear_density


class SupBoundViolation(RuntimeError):
    """A density evaluated above its declared supremum."""

    def __init__(self, location, value, bound):
        self.location = np.asarray(location)
        self.value = float(value)
        self.bound = float(bound)
        super().__init__(
            f"density {value:.6g} exceeds declared sup bound {bound:.6g} "
            f"at {self.location}"
        )


class GuardMarginError(ValueError):
    """Guard margin missing, non-positive, or too small for the model."""


@dataclass(frozen=True)
class EnvironmentRealization:
    """One frozen draw of an intensity model, valid on ``guard_window``.

    Exactly one of (``density``, ``segments``) is set.  ``constant_density``
    marks the exact-mass fast path; ``grid_hint`` is the midpoint-rule cell
    side used when a general density has to be integrated numerically.
    """

    model: IntensityModel
    guard_window: Window
    density: Callable[[np.ndarray], np.ndarray] | None = None
    sup_bound: float | None = None
    constant_density: float | None = None
    segments: tuple[Segment, ...] | None = None
    grid_hint: float = 0.25

    @property
    def kind(self) -> str:
        return "segments" if self.segments is not None else "density"

    def density_at(self, points: np.ndarray) -> np.ndarray:
        """Evaluate the density, enforcing the declared sup bound."""
        if self.density is None:
            raise ValueError("segment realizations have no density handle")
        pts = np.asarray(points, dtype=float)
        vals = np.asarray(self.density(pts), dtype=float)
        if self.sup_bound is not None and vals.size:
            worst = int(np.argmax(vals))
            if vals[worst] > self.sup_bound * (1.0 + 1e-9) + 1e-12:
                raise SupBoundViolation(pts[worst], vals[worst], self.sup_bound)
        return vals


def default_guard_margin(model: IntensityModel) -> float:
    """Edge-effect margin per model: the influence radius where one exists."""
    if isinstance(model, ShotNoise):
        return model.kernel_radius
    if isinstance(model, RandomSetIndicator):
        return model.grain_radius
    if isinstance(model, VoronoiEdges):
        return 4.0 / math.sqrt(model.seed_intensity)
    # Lebesgue, DensityField and ManhattanGrid have no edge effect.
    return 1.0


def _influence_radius(model: IntensityModel) -> float:
    if isinstance(model, ShotNoise):
        return model.kernel_radius
    if isinstance(model, RandomSetIndicator):
        return model.grain_radius
    return 0.0


def _poisson_points(rng: np.random.Generator, rate: float, window: Window) -> np.ndarray:
    n = rng.poisson(rate * window.volume)
    return rng.uniform(window.lower, window.upper, size=(n, window.dim))


def _clip_segment(p: np.ndarray, q: np.ndarray, window: Window):
    """Liang-Barsky clip of segment pq to a box; None if disjoint."""
    d = q - p
    t0, t1 = 0.0, 1.0
    for k in range(window.dim):
        if d[k] == 0.0:
            if p[k] < window.lower[k] or p[k] > window.upper[k]:
                return None
            continue
        ta = (window.lower[k] - p[k]) / d[k]
        tb = (window.upper[k] - p[k]) / d[k]
        if ta > tb:
            ta, tb = tb, ta
        t0 = max(t0, ta)
        t1 = min(t1, tb)
        if t0 > t1:
            return None
    return p + t0 * d, p + t1 * d


def _realize_voronoi(
    model: VoronoiEdges, window: Window, margin: float, seed
) -> tuple[tuple[Segment, ...], float]:
    """Voronoi edge segments clipped to the window, with a correctness check.

    The tessellation inside the window is trusted only if, at every clipped
    edge endpoint, the distance to the generating germs is smaller than the
    distance to the guard boundary: no germ outside the guard region could
    then alter the edge.  On failure the draw is rejected and retried with a
    doubled margin.
    """
    if window.dim != 2:
        raise ValueError("VoronoiEdges environments require dimension 2")
    max_attempts = 6
    children = spawn(seed, max_attempts)
    for attempt in range(max_attempts):
        rng = as_generator(children[attempt])
        guard = window.expand(margin)
        germs = _poisson_points(rng, model.seed_intensity, guard)
        if len(germs) < 4:
            margin *= 2.0
            continue
        vor = Voronoi(germs)
        tree = cKDTree(germs)
        center = germs.mean(axis=0)
        span = float(np.linalg.norm(guard.sides)) * 4.0
        segments: list[Segment] = []
        ok = True
        for (i, j), ridge in zip(vor.ridge_points, vor.ridge_vertices):
            v0, v1 = ridge
            if v0 == -1 and v1 == -1:
                continue
            unbounded = v0 == -1 or v1 == -1
            if unbounded:
                # extend the unbounded ridge far beyond the guard box
                known = vor.vertices[v1 if v0 == -1 else v0]
                tangent = germs[j] - germs[i]
                norm = np.linalg.norm(tangent)
                if norm == 0.0:
                    continue
                normal = np.array([-tangent[1], tangent[0]]) / norm
                midpoint = (germs[i] + germs[j]) / 2.0
                if np.dot(midpoint - center, normal) < 0:
                    normal = -normal
                p, q = known, known + normal * span
            else:
                p, q = vor.vertices[v0], vor.vertices[v1]
            clipped = _clip_segment(np.asarray(p), np.asarray(q), window)
            if clipped is None:
                continue
            cp, cq = clipped
            if np.allclose(cp, cq):
                continue
            gi, gj = germs[i], germs[j]
            probes = np.array([cp, (cp + cq) / 2.0, cq])
            bisector_dist = np.linalg.norm(probes - gi, axis=1)
            nearest_dist, _ = tree.query(probes)
            # a true edge point is exactly at nearest-germ distance from its
            # generators; anything closer to a third germ is not edge at all
            # (an unbounded ridge extended the wrong way), so drop it
            if (nearest_dist < bisector_dist - 1e-9).any():
                if unbounded:
                    continue
                ok = False
                break
            # endpoint germ distance must beat the guard-boundary distance,
            # else a germ outside the guard region could alter the edge
            guard_dist = guard.boundary_distance(np.array([cp, cq]))
            if (np.linalg.norm(np.array([cp, cq]) - gi, axis=1) >= guard_dist).any():
                ok = False
                break
            segments.append(Segment(cp, cq, 1.0, generators=np.array([gi, gj])))
        if ok:
            return tuple(segments), margin
        margin *= 2.0
    raise RuntimeError(
        "Voronoi realization rejected by the guard diagnostic "
        f"after {max_attempts} margin doublings"
    )


def _realize_manhattan(
    model: ManhattanGrid, window: Window, margin: float, seed
) -> tuple[Segment, ...]:
    if window.dim != 2:
        raise ValueError("ManhattanGrid environments require dimension 2")
    rng = as_generator(seed)
    (x0, y0), (x1, y1) = window.lower, window.upper
    segments: list[Segment] = []
    # vertical lines from germs on the guarded x-interval, then horizontal
    n_v = rng.poisson(model.line_intensity * ((x1 - x0) + 2 * margin))
    xs = rng.uniform(x0 - margin, x1 + margin, size=n_v)
    for x in xs:
        if x0 <= x <= x1:
            segments.append(Segment(np.array([x, y0]), np.array([x, y1]), 1.0))
    n_h = rng.poisson(model.line_intensity * ((y1 - y0) + 2 * margin))
    ys = rng.uniform(y0 - margin, y1 + margin, size=n_h)
    for y in ys:
        if y0 <= y <= y1:
            segments.append(Segment(np.array([x0, y]), np.array([x1, y]), 1.0))
    return tuple(segments)


def realize_environment(
    model: IntensityModel,
    window: Window,
    guard_margin: float | None = None,
    seed=0,
) -> EnvironmentRealization:
    """Freeze one draw of ``model`` valid on (at least) ``window``.

    Germ processes are drawn on the window enlarged by ``guard_margin`` so
    that the realization restricted to the window has the correct law; the
    margin must cover the model's influence radius.  Deterministic in
    (model, window, guard_margin, seed).
    """
    if guard_margin is None:
        guard_margin = default_guard_margin(model)
    if not guard_margin > 0:
        raise GuardMarginError(f"guard_margin must be positive, got {guard_margin}")
    influence = _influence_radius(model)
    if guard_margin < influence - 1e-12:
        raise GuardMarginError(
            f"guard_margin {guard_margin} smaller than influence radius {influence}"
        )

    if isinstance(model, HomogeneousLebesgue):
        level = model.z0
        return EnvironmentRealization(
            model=model,
            guard_window=window.expand(guard_margin),
            density=lambda pts, _c=level: np.full(len(np.atleast_2d(pts)), _c),
            sup_bound=level,
            constant_density=level,
        )

    if isinstance(model, DensityField):
        return EnvironmentRealization(
            model=model,
            guard_window=window.expand(guard_margin),
            density=model.density,
            sup_bound=model.sup_bound,
            grid_hint=min(1.0, max(window.sides.min() / 16.0, 1e-3)),
        )

    if isinstance(model, ShotNoise):
        rng = as_generator(seed)
        draw_window = window.expand(guard_margin)
        germs = _poisson_points(rng, model.pp_intensity, draw_window)
        valid = window.expand(guard_margin - model.kernel_radius) if guard_margin > model.kernel_radius else window
        r = model.kernel_radius
        amp = model.kernel_amplitude
        if len(germs) == 0:
            dens = lambda pts: np.zeros(len(np.atleast_2d(pts)))
            sup = 0.0
        else:
            tree = cKDTree(germs)
            # sup over x of the germ count within r is bounded by the max,
            # over germs g, of the germ count within 2r of g
            pack = tree.query_ball_point(germs, 2.0 * r, return_length=True)
            sup = amp * float(pack.max())

            def dens(pts, _tree=tree, _r=r, _amp=amp):
                pts = np.atleast_2d(np.asarray(pts, dtype=float))
                return _amp * _tree.query_ball_point(pts, _r, return_length=True).astype(float)

        return EnvironmentRealization(
            model=model,
            guard_window=valid,
            density=dens,
            sup_bound=sup,
            grid_hint=r / 4.0,
        )

    if isinstance(model, RandomSetIndicator):
        rng = as_generator(seed)
        draw_window = window.expand(guard_margin)
        germs = _poisson_points(rng, model.germ_intensity, draw_window)
        valid = window.expand(guard_margin - model.grain_radius) if guard_margin > model.grain_radius else window
        lo, hi = model.lambda_outside, model.lambda_inside
        if len(germs) == 0:
            dens = lambda pts, _lo=lo: np.full(len(np.atleast_2d(pts)), _lo)
        else:
            tree = cKDTree(germs)

            def dens(pts, _tree=tree, _r=model.grain_radius, _lo=lo, _hi=hi):
                pts = np.atleast_2d(np.asarray(pts, dtype=float))
                covered = _tree.query_ball_point(pts, _r, return_length=True) > 0
                return np.where(covered, _hi, _lo)

        return EnvironmentRealization(
            model=model,
            guard_window=valid,
            density=dens,
            sup_bound=max(lo, hi),
            grid_hint=model.grain_radius / 4.0,
        )

    if isinstance(model, VoronoiEdges):
        segments, _ = _realize_voronoi(model, window, guard_margin, seed)
        return EnvironmentRealization(
            model=model, guard_window=window, segments=segments
        )

    if isinstance(model, ManhattanGrid):
        segments = _realize_manhattan(model, window, guard_margin, seed)
        return EnvironmentRealization(
            model=model, guard_window=window, segments=segments
        )

    raise TypeError(f"unknown intensity model {type(model).__name__}")


def _check_region(env: EnvironmentRealization, region: Window) -> None:
    if not env.guard_window.contains_window(region):
        raise ValueError(
            f"region {region.lower}..{region.upper} outside the realization's "
            f"valid window {env.guard_window.lower}..{env.guard_window.upper}"
        )


def _clipped_segments(env: EnvironmentRealization, region: Window) -> list[tuple[np.ndarray, np.ndarray, float]]:
    out = []
    for seg in env.segments:
        clipped = _clip_segment(seg.start, seg.end, region)
        if clipped is None:
            continue
        p, q = clipped
        length = float(np.linalg.norm(q - p))
        if length > 0.0:
            out.append((p, q, length * seg.linear_density))
    return out


def _midpoint_grid(region: Window, cell: float) -> tuple[np.ndarray, float]:
    counts = np.maximum(1, np.ceil(region.sides / cell).astype(int))
    axes = [
        region.lower[k] + (np.arange(counts[k]) + 0.5) * region.sides[k] / counts[k]
        for k in range(region.dim)
    ]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=1)
    cell_volume = float(np.prod(region.sides / counts))
    return pts, cell_volume


def total_mass(
    env: EnvironmentRealization, region: Window, with_tolerance: bool = False
):
    """Mass of the environment on a box region.

    Exact for constant densities and segment measures; midpoint-rule for
    general densities.  With ``with_tolerance=True`` the return value is a
    ``(mass, abs_tolerance)`` pair, the tolerance being the difference
    between the fine and a coarser grid.
    """
    _check_region(env, region)
    if env.constant_density is not None:
        mass = env.constant_density * region.volume
        return (mass, 0.0) if with_tolerance else mass
    if env.segments is not None:
        mass = float(sum(m for _, _, m in _clipped_segments(env, region)))
        return (mass, 0.0) if with_tolerance else mass

    cell = env.grid_hint / 2.0
    pts, vol = _midpoint_grid(region, cell)
    fine = float(env.density_at(pts).sum() * vol)
    if not with_tolerance:
        return fine
    pts_c, vol_c = _midpoint_grid(region, env.grid_hint)
    coarse = float(env.density_at(pts_c).sum() * vol_c)
    return fine, abs(fine - coarse)


def sample_poisson(
    env: EnvironmentRealization, window: Window, z: float, seed=0
) -> Configuration:
    """Poisson configuration with intensity ``z *`` environment on ``window``.

    Absolutely continuous environments go through a dominating homogeneous
    draw at rate ``z * sup_bound`` thinned by density / sup_bound; segment
    measures draw a Poisson count per clipped segment, uniform along it.
    """
    if z < 0:
        raise ValueError("z must be >= 0")
    _check_region(env, window)
    rng = as_generator(seed)
    dim = window.dim
    if z == 0.0:
        return Configuration.empty(dim)

    if env.segments is not None:
        pieces = _clipped_segments(env, window)
        points = []
        for p, q, mass in pieces:
            k = rng.poisson(z * mass)
            if k:
                t = rng.random(k)
                points.append(p[None, :] + t[:, None] * (q - p)[None, :])
        if not points:
            return Configuration.empty(dim)
        return Configuration(np.concatenate(points, axis=0))

    sup = env.sup_bound
    if sup is None:
        raise ValueError("density realization lacks a sup bound")
    if sup == 0.0:
        return Configuration.empty(dim)
    n = rng.poisson(z * sup * window.volume)
    if n == 0:
        return Configuration.empty(dim)
    pts = rng.uniform(window.lower, window.upper, size=(n, dim))
    keep = rng.random(n) <= env.density_at(pts) / sup
    return Configuration(pts[keep]) if keep.any() else Configuration.empty(dim)


class LocationSampler:
    """Repeated draws from the normalized environment on a fixed window.

    Used as the birth proposal inside the chains; one instance precomputes
    the clipped segment table / rejection setup and then serves single
    points from a :class:`UniformBlocks` source.
    """

    def __init__(self, env: EnvironmentRealization, window: Window, max_tries: int = 100000):
        _check_region(env, window)
        self.env = env
        self.window = window
        self.dim = window.dim
        self.max_tries = max_tries
        self._lo = window.lower.tolist()
        self._sides = window.sides.tolist()
        if env.segments is not None:
            pieces = _clipped_segments(env, window)
            self._pieces = [(p.tolist(), (q - p).tolist(), m) for p, q, m in pieces]
            self._cum = np.cumsum([m for _, _, m in pieces]).tolist()
            if not self._cum or self._cum[-1] <= 0.0:
                raise ValueError("environment has zero total mass on the window")
        elif env.constant_density is not None:
            if env.constant_density <= 0.0:
                raise ValueError("environment has zero total mass on the window")
            self._pieces = None
        else:
            if not env.sup_bound or env.sup_bound <= 0.0:
                raise ValueError("environment has zero total mass on the window")
            self._pieces = None

    def draw(self, ub: UniformBlocks):
        lo, sides, dim = self._lo, self._sides, self.dim
        env = self.env
        if env.segments is not None:
            u = ub.next() * self._cum[-1]
            i = bisect.bisect_left(self._cum, u)
            start, direction, _ = self._pieces[min(i, len(self._pieces) - 1)]
            t = ub.next()
            return tuple(start[k] + t * direction[k] for k in range(dim))
        if env.constant_density is not None:
            return tuple(lo[k] + ub.next() * sides[k] for k in range(dim))
        sup = env.sup_bound
        for _ in range(self.max_tries):
            pos = tuple(lo[k] + ub.next() * sides[k] for k in range(dim))
            dens = float(env.density_at(np.array([pos]))[0])
            if ub.next() * sup <= dens:
                return pos
        raise RuntimeError(
            "location rejection budget exhausted; environment mass on the "
            "window may be zero or extremely sparse"
        )


def sample_location(env: EnvironmentRealization, window: Window, seed=0) -> np.ndarray:
    """One point distributed as environment mass normalized on the window."""
    sampler = LocationSampler(env, window)
    ub = UniformBlocks(as_generator(seed), block=64)
    return np.asarray(sampler.draw(ub))


def dominating_measure(env: EnvironmentRealization, window: Window, z: float, color_doubled: bool = False):
    """Birth-move reference measure for the chain samplers.

    Returns ``(total_mass, draw, thin)`` where ``draw(ub)`` proposes a point
    from the normalized reference and ``thin(pos)`` is the density of the
    environment relative to it (None when identically 1).  For absolutely
    continuous environments the reference is the dominating homogeneous
    measure at the sup bound, so the total mass is exact and the thinning
    factor enters the acceptance ratio; constant and segment environments
    have exact mass directly.  ``color_doubled`` doubles the mass for
    two-colored processes with a fair color coin.
    """
    _check_region(env, window)
    factor = (2.0 if color_doubled else 1.0) * z
    lo = window.lower.tolist()
    sides = window.sides.tolist()
    dim = window.dim

    def uniform_draw(ub, _lo=lo, _sides=sides, _dim=dim):
        return tuple(_lo[k] + ub.next() * _sides[k] for k in range(_dim))

    if env.segments is not None:
        pieces = _clipped_segments(env, window)
        total = factor * float(sum(m for _, _, m in pieces))
        if total == 0.0:
            return 0.0, uniform_draw, None
        table = [(p.tolist(), (q - p).tolist(), m) for p, q, m in pieces]
        cum = np.cumsum([m for _, _, m in pieces]).tolist()

        def seg_draw(ub, _table=table, _cum=cum, _dim=dim):
            u = ub.next() * _cum[-1]
            i = bisect.bisect_left(_cum, u)
            start, direction, _ = _table[min(i, len(_table) - 1)]
            t = ub.next()
            return tuple(start[k] + t * direction[k] for k in range(_dim))

        return total, seg_draw, None

    if env.constant_density is not None:
        total = factor * env.constant_density * window.volume
        return total, uniform_draw, None

    sup = env.sup_bound or 0.0
    total = factor * sup * window.volume
    if total == 0.0:
        return 0.0, uniform_draw, None

    def thin(pos, _env=env, _sup=sup):
        return float(_env.density_at(np.array([pos]))[0]) / _sup

    return total, uniform_draw, thin


def covariance_decay_probe(
    model: IntensityModel,
    box_size: float,
    separations,
    replicates: int,
    seed=0,
    guard_margin: float | None = None,
) -> list[dict]:
    """Empirical covariance of box masses at increasing separations.

    For each replicate one environment is realized over a window that covers
    the base box and all shifted boxes; the probe then estimates
    ``Cov(mass(Q), mass(Q + s*e1))`` per separation, with a standard error
    from the spread of the centered products.
    """
    if replicates < 2:
        raise ValueError("replicates must be >= 2")
    seps = sorted(float(s) for s in separations)
    if seps and seps[0] < 0:
        raise ValueError("separations must be >= 0")
    b = float(box_size)
    base = Window(np.array([0.0, 0.0]), np.array([b, b]))
    cover = Window(np.array([0.0, 0.0]), np.array([b + (seps[-1] if seps else 0.0), b]))
    children = spawn(seed, replicates)
    masses = np.zeros((replicates, 1 + len(seps)))
    for r in range(replicates):
        env = realize_environment(model, cover, guard_margin, children[r])
        masses[r, 0] = total_mass(env, base)
        for k, s in enumerate(seps):
            shifted = Window(np.array([s, 0.0]), np.array([s + b, b]))
            masses[r, k + 1] = total_mass(env, shifted)
    out = []
    m0 = masses[:, 0] - masses[:, 0].mean()
    for k, s in enumerate(seps):
        ms = masses[:, k + 1] - masses[:, k + 1].mean()
        products = m0 * ms
        cov = float(products.sum() / (replicates - 1))
        se = float(products.std(ddof=1) / math.sqrt(replicates))
        out.append(
            {"separation": s, "covariance": cov, "stderr": se, "replicates": replicates}
        )
    return out


def dump_environment_jsonl(
    env: EnvironmentRealization, path, region: Window | None = None, cell: float | None = None
) -> None:
    """Debug dump: segments, or a density snapshot on a midpoint grid."""
    region = region or env.guard_window
    with open(path, "w") as fh:
        if env.segments is not None:
            for seg in env.segments:
                rec = {
                    "record": "segment",
                    "start": seg.start.tolist(),
                    "end": seg.end.tolist(),
                    "linear_density": seg.linear_density,
                }
                fh.write(json.dumps(rec, sort_keys=True) + "\n")
        else:
            pts, vol = _midpoint_grid(region, cell or env.grid_hint)
            vals = env.density_at(pts)
            for pt, val in zip(pts, vals):
                rec = {"record": "density", "point": pt.tolist(), "value": float(val), "cell_volume": vol}
                fh.write(json.dumps(rec, sort_keys=True) + "\n")
