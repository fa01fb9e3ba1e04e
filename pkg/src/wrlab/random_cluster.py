"""The continuum random-cluster model and its domination machinery.

The model reweights a Poisson configuration by ``2**(C - 1)`` where ``C``
counts the connected components of the Boolean model with the window boundary
wired in as a ghost component.  It is sampled two independent ways: a direct
birth-death chain on the weighted density (this module) and color-dropping
from the plus-wired two-colored chain; the two samplers cross-validate each
other.  The conditional-intensity ratio ``2**dC / tau`` drives the stochastic
domination check: with ``tau <= 2**(-K)`` for a merge bound ``K`` the ratio
never drops below 1, so the thinned Poisson process is dominated in every
increasing statistic.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.spatial import cKDTree

from .geometry import (
    Configuration,
    ConnectivityParams,
    GridIndex,
    Window,
    build_components,
)
from .intensity import EnvironmentRealization, dominating_measure, sample_poisson
from .rng import UniformBlocks, as_generator, spawn
from .stats import batch_means, pool_independent, summarize_replicates
from .wr_gibbs import MCMCSettings, PLUS_WIRED, WRParams, estimate_order_parameter, run_wr_chain


@dataclass(frozen=True)
class RCParams:
    """Ball radius, activity, frozen environment, and simulation window."""

    a: float
    z: float
    env: EnvironmentRealization
    window: Window

    def __post_init__(self):
        if not self.a > 0:
            raise ValueError("a must be positive")
        if self.z < 0:
            raise ValueError("z must be >= 0")
        if not self.env.guard_window.contains_window(self.window):
            raise ValueError("window must lie inside the environment's valid window")

    def as_wr(self) -> WRParams:
        return WRParams(self.a, self.z, self.env, self.window)


@dataclass(frozen=True)
class DominationConfig:
    """Thinning factor and the merge bound that justifies it."""

    tau: float
    merge_bound: int

    def __post_init__(self):
        if not 0.0 < self.tau <= 1.0:
            raise ValueError("tau must be in (0, 1]")
        if self.merge_bound < 1:
            raise ValueError("merge_bound must be >= 1")
        if self.tau > 2.0 ** (-self.merge_bound) + 1e-15:
            raise ValueError(
                f"tau={self.tau} violates tau <= 2^-{self.merge_bound}; "
                "the domination hypothesis fails"
            )


@dataclass(frozen=True)
class IncreasingStatistic:
    """A named functional required to be monotone under point insertion."""

    name: str
    fn: Callable[[Configuration], float]

    def __call__(self, conf: Configuration) -> float:
        return float(self.fn(conf))


def rc_component_exponent(conf: Configuration, a: float, window: Window) -> int:
    """Wired component count minus one (the weight is 2 to this power)."""
    labeling = build_components(conf, ConnectivityParams(a, wired=True), window)
    return labeling.num_components_wired - 1


def _wired_merge_delta(k_free: int, touching: int, x_touches: bool) -> int:
    """Change of the wired component count when one point is inserted.

    ``k_free`` distinct free components sit within 2a of the new point, of
    which ``touching`` already touch the boundary; ``x_touches`` says whether
    the point itself lands within 2a of the boundary.
    """
    merged_touch = 1 if (touching >= 1 or x_touches) else 0
    return (1 - k_free) - (merged_touch - touching)


class _RcChain:
    """Birth-death chain with an incrementally maintained component count.

    Point ids are stable; the union-find forest keeps tombstones for removed
    points (dead internal nodes are harmless) and is rebuilt from scratch
    when they accumulate.  Deaths that might split a component trigger a
    local regrouping of the affected cluster before the acceptance decision.
    """

    def __init__(
        self,
        params: RCParams,
        settings: MCMCSettings,
        rng: np.random.Generator,
    ):
        self.params = params
        self.settings = settings
        self.r = 2.0 * params.a
        self.r2 = self.r * self.r
        self.dim = params.window.dim
        self.lo = params.window.lower.tolist()
        self.hi = params.window.upper.tolist()
        self.total, self.draw, self.thin = dominating_measure(
            params.env, params.window, params.z, color_doubled=False
        )
        # sweep length tracks the expected point count, not the dominating mass
        if self.thin is None:
            self.sweep_mass = self.total
        else:
            from .intensity import total_mass

            self.sweep_mass = params.z * total_mass(params.env, params.window)
        mix = settings.move_mix
        # the recolor slot is dead weight here; fold it into (birth, death)
        pb = mix[0] + mix[2] / 2.0
        pd = mix[1] + mix[2] / 2.0
        self.c_birth = pb
        self.pd_over_pb = pd / pb if pb > 0 else 1.0
        self.ub = UniformBlocks(rng)
        self.grid = GridIndex(params.window, self.r)
        self.pos: dict[int, tuple] = {}
        self.active: list[int] = []
        self.slot: dict[int, int] = {}
        self.parent: dict[int, int] = {}
        self.size: dict[int, int] = {}
        self.touch: dict[int, int] = {}
        self.bnear: dict[int, bool] = {}
        self.tvals: dict[int, float] = {}
        self.free_count = 0
        self.touching_count = 0
        self.next_id = 0
        self.accepted = {"birth": 0, "death": 0}
        self.proposed = {"birth": 0, "death": 0}

    # -- component bookkeeping ---------------------------------------------

    @property
    def n(self) -> int:
        return len(self.active)

    @property
    def wired_components(self) -> int:
        return self.free_count - self.touching_count + 1

    def find(self, i: int) -> int:
        parent = self.parent
        root = i
        while parent[root] != root:
            root = parent[root]
        while parent[i] != root:
            parent[i], i = root, parent[i]
        return root

    def _boundary_near(self, pos) -> bool:
        lo, hi, r = self.lo, self.hi, self.r
        for k in range(self.dim):
            if pos[k] - lo[k] <= r or hi[k] - pos[k] <= r:
                return True
        return False

    def _dist2(self, p, q) -> float:
        s = 0.0
        for k in range(self.dim):
            diff = p[k] - q[k]
            s += diff * diff
        return s

    def _neighbors(self, pos, exclude: int = -1) -> list[int]:
        out = []
        pos_map = self.pos
        r2 = self.r2
        for j in self.grid.nearby(pos):
            if j != exclude and self._dist2(pos, pos_map[j]) <= r2:
                out.append(j)
        return out

    def _insert(self, pos, roots: set, x_touches: bool, tval: float) -> None:
        nid = self.next_id
        self.next_id += 1
        self.pos[nid] = pos
        self.slot[nid] = len(self.active)
        self.active.append(nid)
        self.grid.add(nid, pos)
        self.bnear[nid] = x_touches
        self.tvals[nid] = tval
        self.parent[nid] = nid
        self.size[nid] = 1
        self.touch[nid] = 1 if x_touches else 0
        # merge the adjacent components into the new point's component
        k = len(roots)
        touching_before = sum(1 for r in roots if self.touch[r] > 0)
        merged_root = nid
        for r in roots:
            a, b = merged_root, r
            if self.size[a] < self.size[b]:
                a, b = b, a
            self.parent[b] = a
            self.size[a] += self.size[b]
            self.touch[a] += self.touch[b]
            merged_root = a
        merged_touch = 1 if self.touch[merged_root] > 0 else 0
        self.free_count += 1 - k
        self.touching_count += merged_touch - touching_before

    def _remove_point(self, i: int) -> None:
        pos = self.pos.pop(i)
        self.grid.remove(i, pos)
        last = self.active[-1]
        spot = self.slot.pop(i)
        if last != i:
            self.active[spot] = last
            self.slot[last] = spot
        self.active.pop()
        self.bnear.pop(i)
        self.tvals.pop(i)

    def _regroup(self, members_by_part: list[set]) -> None:
        """Re-point a split cluster: one star per surviving part."""
        for part in members_by_part:
            rep = next(iter(part))
            tc = 0
            for m in part:
                self.parent[m] = rep
                if self.bnear[m]:
                    tc += 1
            self.size[rep] = len(part)
            self.touch[rep] = tc

    def _split_parts(self, i: int, contacts: list[int]) -> list[set]:
        """Connected parts of i's cluster after removing i (grid BFS)."""
        parts: list[set] = []
        assigned: set[int] = set()
        for start in contacts:
            if start in assigned:
                continue
            part = {start}
            stack = [start]
            while stack:
                j = stack.pop()
                pj = self.pos[j]
                for k in self._neighbors(pj, exclude=i):
                    if k not in part and k not in assigned:
                        part.add(k)
                        stack.append(k)
            assigned |= part
            parts.append(part)
        return parts

    def rebuild(self) -> None:
        """Recompute the whole forest from live points, clearing tombstones."""
        self.parent = {}
        self.size = {}
        self.touch = {}
        seen: set[int] = set()
        self.free_count = 0
        self.touching_count = 0
        for i in self.active:
            if i in seen:
                continue
            part = {i}
            stack = [i]
            while stack:
                j = stack.pop()
                for k in self._neighbors(self.pos[j]):
                    if k not in part:
                        part.add(k)
                        stack.append(k)
            seen |= part
            rep = next(iter(part))
            tc = 0
            for m in part:
                self.parent[m] = rep
                if self.bnear[m]:
                    tc += 1
            self.size[rep] = len(part)
            self.touch[rep] = tc
            self.free_count += 1
            if tc > 0:
                self.touching_count += 1

    # -- moves ---------------------------------------------------------------

    def _birth(self) -> None:
        self.proposed["birth"] += 1
        if self.total == 0.0:
            return
        ub = self.ub
        pos = self.draw(ub)
        neighbors = self._neighbors(pos)
        roots = {self.find(j) for j in neighbors}
        touching = sum(1 for r in roots if self.touch[r] > 0)
        x_touches = self._boundary_near(pos)
        delta_c = _wired_merge_delta(len(roots), touching, x_touches)
        n = self.n
        ratio = self.total / (n + 1) * (2.0**delta_c) * self.pd_over_pb
        tval = 1.0
        if self.thin is not None:
            tval = self.thin(pos)
            if tval <= 0.0:
                return
            ratio *= tval
        if ratio < 1.0 and ub.next() >= ratio:
            return
        self._insert(pos, roots, x_touches, tval)
        self.accepted["birth"] += 1

    def _death(self) -> None:
        self.proposed["death"] += 1
        n = self.n
        if n == 0:
            return
        ub = self.ub
        i = self.active[ub.next_index(n)]
        contacts = self._neighbors(self.pos[i], exclude=i)
        root = self.find(i)
        old_flag = 1 if self.touch[root] > 0 else 0
        parts: list[set] | None = None
        if len(contacts) == 0:
            delta_c = -1 + (1 if self.bnear[i] else 0)
        elif len(contacts) == 1:
            new_touch = self.touch[root] - (1 if self.bnear[i] else 0)
            delta_c = old_flag - (1 if new_touch > 0 else 0)
        else:
            parts = self._split_parts(i, contacts)
            new_touching = sum(
                1 for part in parts if any(self.bnear[m] for m in part)
            )
            delta_c = (len(parts) - 1) - (new_touching - old_flag)
        ratio = n / self.total * (2.0**delta_c) / self.pd_over_pb
        if self.thin is not None:
            ratio /= self.tvals[i]
        if ratio < 1.0 and ub.next() >= ratio:
            return
        # apply the removal to the component bookkeeping
        if len(contacts) == 0:
            self.free_count -= 1
            self.touching_count -= old_flag
        elif len(contacts) == 1:
            self.touch[root] -= 1 if self.bnear[i] else 0
            new_flag = 1 if self.touch[root] > 0 else 0
            self.touching_count += new_flag - old_flag
        else:
            new_touching = sum(
                1 for part in parts if any(self.bnear[m] for m in part)
            )
            self._regroup(parts)
            self.free_count += len(parts) - 1
            self.touching_count += new_touching - old_flag
        self._remove_point(i)
        self.accepted["death"] += 1
        if len(self.parent) > 4 * self.n + 64:
            self.rebuild()

    def step(self) -> None:
        if self.ub.next() < self.c_birth:
            self._birth()
        else:
            self._death()

    def moves_per_sweep(self) -> int:
        if self.settings.moves_per_sweep is not None:
            return self.settings.moves_per_sweep
        return max(1, int(round(self.sweep_mass)))

    # -- views ---------------------------------------------------------------

    def to_configuration(self) -> Configuration:
        if not self.active:
            return Configuration.empty(self.dim)
        return Configuration(np.array([self.pos[i] for i in self.active]))

    def boundary_connected_in(self, delta_lo, delta_hi) -> int:
        count = 0
        for i in self.active:
            p = self.pos[i]
            inside = True
            for k in range(self.dim):
                if not delta_lo[k] <= p[k] <= delta_hi[k]:
                    inside = False
                    break
            if inside and self.touch[self.find(i)] > 0:
                count += 1
        return count

    def load(self, conf: Configuration) -> None:
        for pos in conf.points:
            p = tuple(float(v) for v in pos)
            neighbors = self._neighbors(p)
            roots = {self.find(j) for j in neighbors}
            tval = self.thin(p) if self.thin is not None else 1.0
            if tval <= 0.0:
                raise ValueError(
                    f"initial point {p} sits where the environment density is zero"
                )
            self._insert(p, roots, self._boundary_near(p), tval)

    def assert_consistent(self) -> None:
        """Debug: the incremental count must match a from-scratch labeling."""
        conf = self.to_configuration()
        expected = rc_component_exponent(conf, self.params.a, self.params.window) + 1
        if expected != self.wired_components:
            raise AssertionError(
                f"incremental component count {self.wired_components} "
                f"!= recomputed {expected}"
            )


def run_rc_chain(
    params: RCParams,
    settings: MCMCSettings,
    seed=0,
    record=None,
    init: Configuration | None = None,
):
    """Run the direct chain; returns (records, final configuration, info)."""
    rng = as_generator(seed)
    chain = _RcChain(params, settings, rng)
    if init is not None:
        if len(init) and not params.window.contains(init.points).all():
            raise ValueError("initial state must lie inside the window")
        chain.load(init)
    moves = chain.moves_per_sweep()
    records = []
    for sweep in range(settings.sweeps):
        for _ in range(moves):
            chain.step()
        if sweep >= settings.burn_in and (sweep - settings.burn_in) % settings.thinning == 0:
            if settings.debug_checks:
                chain.assert_consistent()
            if record is not None:
                records.append(record(chain))
    info = {
        "proposed": dict(chain.proposed),
        "accepted": dict(chain.accepted),
        "moves_per_sweep": moves,
        "final_n": chain.n,
    }
    return records, chain.to_configuration(), info


def step_rc_mcmc(
    state: Configuration, params: RCParams, settings: MCMCSettings, seed=0
) -> Configuration:
    """One elementary birth/death transition of the weighted chain."""
    rng = as_generator(seed)
    chain = _RcChain(params, settings, rng)
    if len(state) and not params.window.contains(state.points).all():
        raise ValueError("state must lie inside the window")
    chain.load(state)
    chain.step()
    return chain.to_configuration()


def sample_rc_by_color_dropping(
    params: RCParams, settings: MCMCSettings, seed=0
) -> list[Configuration]:
    """Positions of the plus-wired two-colored chain, colors dropped.

    The color marginal of the plus-wired two-colored measure is exactly the
    weighted model, so this trace and the direct chain are mutual oracles.
    """
    records, _, _ = run_wr_chain(
        params.as_wr(),
        PLUS_WIRED,
        settings,
        seed,
        record=lambda ch: Configuration(ch.positions_array()),
    )
    return records


def papangelou_ratio(
    x, conf: Configuration, dom: DominationConfig, a: float, window: Window
) -> float:
    """Conditional intensity ``2**dC / tau`` of the weighted model at x."""
    ratios = papangelou_ratio_batch(np.asarray(x, dtype=float)[None, :], conf, dom, a, window)
    return float(ratios[0])


def papangelou_ratio_batch(
    xs: np.ndarray, conf: Configuration, dom: DominationConfig, a: float, window: Window
) -> np.ndarray:
    """Vectorized conditional-intensity probes sharing one labeling."""
    xs = np.asarray(xs, dtype=float)
    if not window.contains(xs).all():
        raise ValueError("probe points must lie inside the window")
    r = 2.0 * a
    labeling = build_components(conf, ConnectivityParams(a, wired=True), window)
    x_touches = window.boundary_distance(xs) <= r
    out = np.zeros(len(xs))
    if len(conf):
        tree = cKDTree(conf.points)
        neighbor_lists = tree.query_ball_point(xs, r)
    else:
        neighbor_lists = [[] for _ in range(len(xs))]
    for i, neighbors in enumerate(neighbor_lists):
        if neighbors:
            labels = np.unique(labeling.labels[neighbors])
            touching = int(labeling.touches_boundary[labels].sum())
            k_free = len(labels)
        else:
            touching = 0
            k_free = 0
        delta_c = _wired_merge_delta(k_free, touching, bool(x_touches[i]))
        out[i] = (2.0**delta_c) / dom.tau
    return out


def merge_bound_cap(d: int) -> int:
    """Packing ceiling on the components one inserted point can merge.

    In dimension 1 at most two points can sit in a radius-2a interval more
    than 2a apart; in dimension 2 at most five points fit in a closed
    radius-2a disc with pairwise distances above 2a (a hexagon needs ties).
    The wired boundary can contribute one more component.
    """
    if d == 1:
        return 3
    if d == 2:
        return 6
    raise ValueError("merge bound is implemented for dimensions 1 and 2")


def estimate_merge_bound(d: int, a: float, probes: int = 100000, seed=0) -> int:
    """Largest observed number of components merged by one inserted point.

    Randomized adversarial search: jittered regular packings at radius just
    under 2a around the insertion point, near-wall and near-corner variants
    (where the boundary component joins in), and uniform-random probes.  The
    result is capped by the analytic packing ceiling; exceeding it would mean
    a geometry bug.
    """
    if d not in (1, 2):
        raise ValueError("merge bound is implemented for dimensions 1 and 2")
    if probes < 100000:
        raise ValueError("need at least 1e5 probes for the adversarial search")
    rng = as_generator(seed)
    cap = merge_bound_cap(d)
    side = 20.0 * a
    r = 2.0 * a
    best = 0

    def count_probe(x, candidates, wall_distance_x):
        """Distinct components merged: packed interior points + the boundary.

        Candidates within 2a of the wall belong to the boundary component
        already; they only count through the single ghost component, and any
        interior candidate within 2a of them is dropped (it would not be a
        distinct component either).
        """
        ghost = wall_distance_x <= r
        kept: list[np.ndarray] = []
        ghost_members: list[np.ndarray] = []
        for c in candidates:
            dist_x = np.linalg.norm(c - x)
            if dist_x > r:
                continue
            wall = min(min(c), side - max(c)) if d == 2 else min(c[0], side - c[0])
            if wall <= r:
                ghost = True
                ghost_members.append(c)
                continue
            kept.append(c)
        interior = []
        for c in kept:
            if all(np.linalg.norm(c - other) > r for other in interior) and all(
                np.linalg.norm(c - g) > r for g in ghost_members
            ):
                interior.append(c)
        return len(interior) + (1 if ghost else 0)

    for probe in range(probes):
        kind = probe % 4
        if d == 1:
            if kind == 0:
                x = np.array([side / 2.0])
            elif kind == 1:
                x = np.array([rng.uniform(0.0, r)])
            elif kind == 2:
                x = np.array([side - rng.uniform(0.0, r)])
            else:
                x = rng.uniform(0.0, side, size=1)
            if probe % 2 == 0:
                shrink = 1.0 - rng.uniform(0.02, 0.4)
                candidates = [x - r * shrink, x + r * shrink]
            else:
                candidates = list(
                    x + rng.uniform(-r, r, size=(4, 1))
                )
        else:
            if kind == 0:
                x = np.array([side / 2.0, side / 2.0])
            elif kind == 1:
                x = np.array([rng.uniform(0.0, r), side / 2.0])
            elif kind == 2:
                x = np.array([rng.uniform(0.0, r), rng.uniform(0.0, r)])
            else:
                x = rng.uniform(0.0, side, size=2)
            if probe % 2 == 0:
                k = int(rng.integers(2, 8))
                radius = r * (1.0 - rng.uniform(0.02, 0.15))
                angles = (
                    2.0 * math.pi * np.arange(k) / k
                    + rng.uniform(0, 2 * math.pi)
                    + rng.uniform(-0.15, 0.15, size=k) / k
                )
                candidates = [
                    x + radius * np.array([math.cos(t), math.sin(t)]) for t in angles
                ]
            else:
                offsets = rng.uniform(-r, r, size=(8, 2))
                candidates = [x + off for off in offsets]
        candidates = [
            c for c in candidates if (c >= 0.0).all() and (c <= side).all()
        ]
        wall_x = min(min(x), side - max(x)) if d == 2 else min(x[0], side - x[0])
        merged = count_probe(x, candidates, wall_x)
        if merged > best:
            best = merged
            if best > cap:
                raise RuntimeError(
                    f"observed merge count {best} exceeds the packing ceiling {cap}"
                )
    return best


def check_es_identity(
    params: RCParams,
    delta: Window,
    settings: MCMCSettings,
    replicates: int = 2,
    seed=0,
) -> dict:
    """Two independent estimates of the same number.

    The order-parameter gap from the plus-wired colored chain must equal the
    mean boundary-connected count in ``delta`` under the weighted unmarked
    model; the two sides come from entirely separate samplers.
    """
    if not params.window.contains_window(delta):
        raise ValueError("delta must lie inside the window")
    wr_seed, rc_seed = spawn(seed, 2)
    psi = estimate_order_parameter(
        params.as_wr(), delta, settings, replicates, wr_seed, mode="single"
    )
    dlo = delta.lower.tolist()
    dhi = delta.upper.tolist()
    estimates = []
    for child in spawn(rc_seed, replicates):
        records, _, _ = run_rc_chain(
            params,
            settings,
            child,
            record=lambda ch: ch.boundary_connected_in(dlo, dhi),
        )
        est, _ = batch_means(records, settings.batch_count)
        estimates.append(est)
    nb = estimates[0] if len(estimates) == 1 else pool_independent(estimates, "replicate-variance")
    difference = psi.value - nb.value
    combined = math.hypot(psi.stderr, nb.stderr)
    sigma_units = abs(difference) / combined if combined > 0 else (0.0 if difference == 0 else math.inf)
    return {
        "order_parameter": psi.as_dict(),
        "boundary_connected": nb.as_dict(),
        "difference": difference,
        "combined_stderr": combined,
        "sigma_units": sigma_units,
        "pass": bool(sigma_units <= 3.0),
    }


def check_domination(
    params: RCParams,
    dom: DominationConfig,
    stats: list[IncreasingStatistic],
    settings: MCMCSettings,
    replicates: int = 2,
    seed=0,
    poisson_draws: int = 2000,
) -> dict:
    """Thinned-Poisson means must not exceed weighted-model means.

    The left side is sampled exactly (independent Poisson draws at activity
    ``tau * z``); the right side runs the direct chain.  Passing means every
    increasing statistic satisfies ``poisson <= chain + 3 combined stderr``.
    """
    if dom.tau > 2.0 ** (-dom.merge_bound) + 1e-15:
        raise ValueError("tau violates the merge bound; refusing to run")
    if not stats:
        raise ValueError("need at least one increasing statistic")
    poisson_seed, rc_seed = spawn(seed, 2)
    rng = as_generator(poisson_seed)
    poisson_values = {s.name: [] for s in stats}
    for _ in range(poisson_draws):
        conf = sample_poisson(params.env, params.window, dom.tau * params.z, rng)
        for s in stats:
            poisson_values[s.name].append(s(conf))
    chain_estimates = {s.name: [] for s in stats}
    for child in spawn(rc_seed, replicates):
        records, _, _ = run_rc_chain(
            params,
            settings,
            child,
            record=lambda ch: ch.to_configuration(),
        )
        for s in stats:
            values = [s(conf) for conf in records]
            est, _ = batch_means(values, settings.batch_count)
            chain_estimates[s.name].append(est)
    report = {"tau": dom.tau, "merge_bound": dom.merge_bound, "statistics": {}, "pass": True}
    for s in stats:
        left = summarize_replicates(poisson_values[s.name])
        rights = chain_estimates[s.name]
        right = rights[0] if len(rights) == 1 else pool_independent(rights, "replicate-variance")
        combined = math.hypot(left.stderr, right.stderr)
        ok = left.value <= right.value + 3.0 * combined
        report["statistics"][s.name] = {
            "poisson": left.as_dict(),
            "random_cluster": right.as_dict(),
            "margin_sigma": (right.value - left.value) / combined if combined > 0 else math.inf,
            "pass": bool(ok),
        }
        report["pass"] = report["pass"] and bool(ok)
    return report
