"""Finite-volume two-colored hard-exclusion measures in a fixed environment.

A marked configuration is viable when opposite-colored points are more than
2a apart; a wired boundary additionally forbids the opposite color within 2a
of the window boundary.  Two exact-in-law samplers are provided: plain
rejection (small mass only) and a birth-death-recolor Metropolis chain whose
stationary law is the finite-volume conditional measure.  Both feed the
order-parameter estimate and the consistency check against the defining
conditional-resampling property.
"""
from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .geometry import Configuration, GridIndex, Window
from .intensity import EnvironmentRealization, dominating_measure, sample_poisson
from .rng import UniformBlocks, as_generator, spawn
from .stats import EstimateWithError, batch_means, pool_independent

PLUS = 1
MINUS = -1

FREE = "free"
PLUS_WIRED = "plus-wired"
MINUS_WIRED = "minus-wired"
BOUNDARIES = (FREE, PLUS_WIRED, MINUS_WIRED)


def wired_color(boundary: str) -> int | None:
    """The color painted on the boundary, or None for a free boundary."""
    if boundary == PLUS_WIRED:
        return PLUS
    if boundary == MINUS_WIRED:
        return MINUS
    if boundary == FREE:
        return None
    raise ValueError(f"unknown boundary condition {boundary!r}")


def flip_boundary(boundary: str) -> str:
    return {PLUS_WIRED: MINUS_WIRED, MINUS_WIRED: PLUS_WIRED, FREE: FREE}[boundary]


@dataclass(frozen=True)
class MarkedConfiguration:
    """Finite colored point set; colors are +1 (plus) and -1 (minus)."""

    positions: np.ndarray
    colors: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.positions, dtype=float)
        cols = np.asarray(self.colors, dtype=np.int8)
        if pts.ndim != 2:
            raise ValueError("positions must be an (n, d) array")
        if cols.shape != (pts.shape[0],):
            raise ValueError("colors must be one per point")
        if not np.isfinite(pts).all():
            raise ValueError("positions must be finite")
        if cols.size and not np.isin(cols, (PLUS, MINUS)).all():
            raise ValueError("colors must be +1 or -1")
        if len(pts) > 1 and len(np.unique(pts, axis=0)) != len(pts):
            raise ValueError("duplicate positions are not allowed")
        pts.flags.writeable = False
        cols.flags.writeable = False
        object.__setattr__(self, "positions", pts)
        object.__setattr__(self, "colors", cols)

    @classmethod
    def empty(cls, dim: int) -> "MarkedConfiguration":
        return cls(np.zeros((0, dim)), np.zeros(0, dtype=np.int8))

    def __len__(self) -> int:
        return self.positions.shape[0]

    @property
    def dim(self) -> int:
        return self.positions.shape[1]

    @property
    def n_plus(self) -> int:
        return int((self.colors == PLUS).sum())

    @property
    def n_minus(self) -> int:
        return int((self.colors == MINUS).sum())

    def counts_in(self, delta: Window) -> tuple[int, int]:
        """(plus, minus) counts inside a box."""
        if len(self) == 0:
            return 0, 0
        inside = delta.contains(self.positions)
        return int((inside & (self.colors == PLUS)).sum()), int(
            (inside & (self.colors == MINUS)).sum()
        )

    def flipped(self) -> "MarkedConfiguration":
        return MarkedConfiguration(self.positions, -self.colors)

    def drop_colors(self) -> Configuration:
        return Configuration(self.positions.copy())


@dataclass(frozen=True)
class WRParams:
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


@dataclass(frozen=True)
class MCMCSettings:
    """Schedule for the chains.

    A sweep is ``moves_per_sweep`` elementary moves (by default one per unit
    of expected mass); one value is recorded every ``thinning`` sweeps after
    ``burn_in``.  ``recolor_cluster_cap`` bounds the cluster size the recolor
    move will flip; larger same-color clusters are left alone, which keeps
    the move O(cap) without touching the stationary law (the proposal stays
    self-inverse).
    """

    sweeps: int = 2000
    burn_in: int = 500
    thinning: int = 2
    move_mix: tuple[float, float, float] = (0.4, 0.4, 0.2)
    batch_count: int = 16
    moves_per_sweep: int | None = None
    recolor_cluster_cap: int = 128
    debug_checks: bool = False

    def __post_init__(self):
        if abs(sum(self.move_mix) - 1.0) > 1e-9:
            raise ValueError("move_mix must sum to 1")
        if any(p < 0 for p in self.move_mix):
            raise ValueError("move_mix entries must be >= 0")
        if not (self.sweeps > self.burn_in >= 0):
            raise ValueError("need sweeps > burn_in >= 0")
        if self.thinning < 1:
            raise ValueError("thinning must be >= 1")
        if self.batch_count < 8:
            raise ValueError("batch_count must be >= 8")

    @property
    def retained(self) -> int:
        return (self.sweeps - self.burn_in + self.thinning - 1) // self.thinning


class ChainDiagnosticsError(RuntimeError):
    """Batch series autocorrelated beyond the trust threshold."""


class RejectionBudgetError(RuntimeError):
    """Rejection sampler exhausted its attempts without a viable draw."""

    def __init__(self, attempts: int, accepted: int = 0):
        self.attempts = attempts
        self.accepted = accepted
        self.acceptance_rate = accepted / attempts if attempts else 0.0
        super().__init__(
            f"no viable draw in {attempts} attempts "
            f"(empirical acceptance {self.acceptance_rate:.2e}); "
            "the viable-fraction normalization is too small for rejection"
        )


def is_viable(
    conf: MarkedConfiguration, a: float, boundary: str, window: Window
) -> bool:
    """No opposite pair within 2a; wired boundaries exclude the opposite color
    within 2a of the window boundary."""
    b = wired_color(boundary)
    n = len(conf)
    if n == 0:
        return True
    r = 2.0 * a
    if b is not None:
        opposite = conf.colors == -b
        if opposite.any():
            if (window.boundary_distance(conf.positions[opposite]) <= r).any():
                return False
    if n >= 2:
        pairs = cKDTree(conf.positions).query_pairs(r, output_type="ndarray")
        if len(pairs) and (conf.colors[pairs[:, 0]] != conf.colors[pairs[:, 1]]).any():
            return False
    return True


def sample_wr_rejection(
    params: WRParams,
    boundary: str,
    seed=0,
    max_attempts: int = 100000,
    return_attempts: bool = False,
):
    """Exact draw by rejection: marked Poisson proposals until viable.

    The marked intensity is sampled as an unmarked Poisson at doubled rate
    plus an independent fair color coin (exact by the marking theorem).
    Raises :class:`RejectionBudgetError` when the budget runs out.
    """
    rng = as_generator(seed)
    for attempt in range(1, max_attempts + 1):
        base = sample_poisson(params.env, params.window, 2.0 * params.z, rng)
        colors = rng.integers(0, 2, size=len(base)).astype(np.int8) * 2 - 1
        candidate = MarkedConfiguration(base.points, colors)
        if is_viable(candidate, params.a, boundary, params.window):
            return (candidate, attempt) if return_attempts else candidate
    raise RejectionBudgetError(max_attempts)


class _WrChain:
    """Mutable chain state: positions, colors, grid index, and box counters."""

    def __init__(
        self,
        params: WRParams,
        boundary: str,
        settings: MCMCSettings,
        rng: np.random.Generator,
        audit_birth_factor: float = 1.0,
    ):
        self.params = params
        self.settings = settings
        self.a = params.a
        self.r = 2.0 * params.a
        self.r2 = self.r * self.r
        self.dim = params.window.dim
        self.wired = wired_color(boundary)
        self.lo = params.window.lower.tolist()
        self.hi = params.window.upper.tolist()
        self.total, self.draw, self.thin = dominating_measure(
            params.env, params.window, params.z, color_doubled=True
        )
        # sweep length tracks the expected point count, not the dominating
        # mass (which can be far larger for peaked densities)
        if self.thin is None:
            self.sweep_mass = self.total
        else:
            from .intensity import total_mass

            self.sweep_mass = 2.0 * params.z * total_mass(params.env, params.window)
        mix = settings.move_mix
        self.c_birth = mix[0]
        self.c_death = mix[0] + mix[1]
        # detailed balance needs the proposal-probability ratio when the mix
        # is asymmetric; it is 1 for the default mix
        self.pd_over_pb = mix[1] / mix[0] if mix[0] > 0 else 1.0
        # audit knob: scales the birth jump rate (and the death rate down),
        # so a factor f makes the chain target activity f * z exactly; the
        # consistency check uses it as its corrupted-kernel negative control
        self.audit = audit_birth_factor
        self.grid = GridIndex(params.window, self.r)
        self.ub = UniformBlocks(rng)
        self.xs: list[tuple] = []
        self.cols: list[int] = []
        self.bnear: list[bool] = []
        self.tvals: list[float] = []
        self.box = None
        self.box_counts = [0, 0]  # plus, minus inside the registered box
        self.accepted = {"birth": 0, "death": 0, "recolor": 0}
        self.proposed = {"birth": 0, "death": 0, "recolor": 0}

    # -- bookkeeping ------------------------------------------------------

    def _boundary_near(self, pos) -> bool:
        lo, hi, r = self.lo, self.hi, self.r
        for k in range(self.dim):
            if pos[k] - lo[k] <= r or hi[k] - pos[k] <= r:
                return True
        return False

    def register_count_box(self, delta: Window) -> None:
        self.box = (delta.lower.tolist(), delta.upper.tolist())
        self.box_counts = [0, 0]
        for pos, c in zip(self.xs, self.cols):
            if self._in_box(pos):
                self.box_counts[0 if c == PLUS else 1] += 1

    def _in_box(self, pos) -> bool:
        blo, bhi = self.box
        for k in range(self.dim):
            if not blo[k] <= pos[k] <= bhi[k]:
                return False
        return True

    def load(self, conf: MarkedConfiguration) -> None:
        for pos, c in zip(conf.positions, conf.colors):
            p = tuple(float(v) for v in pos)
            tval = self.thin(p) if self.thin is not None else 1.0
            if tval <= 0.0:
                raise ValueError(
                    f"initial point {p} sits where the environment density is zero"
                )
            self.xs.append(p)
            self.cols.append(int(c))
            self.bnear.append(self._boundary_near(p))
            self.tvals.append(tval)
            self.grid.add(len(self.xs) - 1, p)
        if self.box is not None:
            self.register_count_box(
                Window(np.array(self.box[0]), np.array(self.box[1]))
            )

    def to_marked_configuration(self) -> MarkedConfiguration:
        if not self.xs:
            return MarkedConfiguration.empty(self.dim)
        return MarkedConfiguration(
            np.array(self.xs, dtype=float), np.array(self.cols, dtype=np.int8)
        )

    def positions_array(self) -> np.ndarray:
        if not self.xs:
            return np.zeros((0, self.dim))
        return np.array(self.xs, dtype=float)

    def colors_array(self) -> np.ndarray:
        return np.array(self.cols, dtype=np.int8)

    @property
    def n(self) -> int:
        return len(self.xs)

    def order_parameter_value(self) -> int:
        return self.box_counts[0] - self.box_counts[1]

    # -- moves -------------------------------------------------------------

    def _dist2(self, p, q) -> float:
        s = 0.0
        for k in range(self.dim):
            diff = p[k] - q[k]
            s += diff * diff
        return s

    def _birth(self) -> None:
        self.proposed["birth"] += 1
        if self.total == 0.0:
            return
        ub = self.ub
        pos = self.draw(ub)
        color = PLUS if ub.next() < 0.5 else MINUS
        near = self._boundary_near(pos)
        if self.wired is not None and color == -self.wired and near:
            return
        xs, cols = self.xs, self.cols
        r2 = self.r2
        if self.dim == 2:
            px, py = pos
            for j in self.grid.nearby(pos):
                if cols[j] != color:
                    q = xs[j]
                    dx = px - q[0]
                    dy = py - q[1]
                    if dx * dx + dy * dy <= r2:
                        return
        else:
            for j in self.grid.nearby(pos):
                if cols[j] != color and self._dist2(pos, xs[j]) <= r2:
                    return
        n = len(xs)
        ratio = self.total / (n + 1) * self.pd_over_pb * self.audit
        tval = 1.0
        if self.thin is not None:
            tval = self.thin(pos)
            if tval <= 0.0:
                return
            ratio *= tval
        if ratio < 1.0 and ub.next() >= ratio:
            return
        xs.append(pos)
        cols.append(color)
        self.bnear.append(near)
        self.tvals.append(tval)
        self.grid.add(n, pos)
        if self.box is not None and self._in_box(pos):
            self.box_counts[0 if color == PLUS else 1] += 1
        self.accepted["birth"] += 1

    def _death(self) -> None:
        self.proposed["death"] += 1
        n = len(self.xs)
        if n == 0:
            return
        ub = self.ub
        victim = ub.next_index(n)
        ratio = n / self.total / self.pd_over_pb / self.audit
        if self.thin is not None:
            ratio /= self.tvals[victim]
        if ratio < 1.0 and ub.next() >= ratio:
            return
        self._remove(victim)
        self.accepted["death"] += 1

    def _remove(self, victim: int) -> None:
        xs, cols, bnear, tvals = self.xs, self.cols, self.bnear, self.tvals
        pos = xs[victim]
        color = cols[victim]
        self.grid.remove(victim, pos)
        last = len(xs) - 1
        if victim != last:
            self.grid.remove(last, xs[last])
            xs[victim] = xs[last]
            cols[victim] = cols[last]
            bnear[victim] = bnear[last]
            tvals[victim] = tvals[last]
            self.grid.add(victim, xs[victim])
        xs.pop()
        cols.pop()
        bnear.pop()
        tvals.pop()
        if self.box is not None and self._in_box(pos):
            self.box_counts[0 if color == PLUS else 1] -= 1

    def _recolor(self) -> None:
        """Flip the whole same-color cluster of a uniform point.

        Flipping a maximal 2a-connected same-color cluster can never create
        an opposite-color conflict, so the only veto is the wired boundary
        clause; clusters above the size cap are left untouched (the reverse
        move sees the same cluster, so the kernel stays symmetric).
        """
        self.proposed["recolor"] += 1
        n = len(self.xs)
        if n == 0:
            return
        seed_idx = self.ub.next_index(n)
        color = self.cols[seed_idx]
        check_boundary = self.wired is not None and color == self.wired
        if check_boundary and self.bnear[seed_idx]:
            return
        cap = self.settings.recolor_cluster_cap
        xs, cols, bnear = self.xs, self.cols, self.bnear
        r2 = self.r2
        nearby = self.grid.nearby
        fast2d = self.dim == 2
        comp = {seed_idx}
        stack = [seed_idx]
        while stack:
            j = stack.pop()
            pj = xs[j]
            if fast2d:
                px, py = pj
                for k in nearby(pj):
                    if k in comp or cols[k] != color:
                        continue
                    q = xs[k]
                    dx = px - q[0]
                    dy = py - q[1]
                    if dx * dx + dy * dy > r2:
                        continue
                    if check_boundary and bnear[k]:
                        return
                    if len(comp) >= cap:
                        return
                    comp.add(k)
                    stack.append(k)
            else:
                for k in nearby(pj):
                    if k in comp or cols[k] != color:
                        continue
                    if self._dist2(pj, xs[k]) > r2:
                        continue
                    if check_boundary and bnear[k]:
                        return
                    if len(comp) >= cap:
                        return
                    comp.add(k)
                    stack.append(k)
        flip = -color
        in_box = self._in_box if self.box is not None else None
        for j in comp:
            cols[j] = flip
            if in_box is not None and in_box(xs[j]):
                self.box_counts[0 if flip == PLUS else 1] += 1
                self.box_counts[0 if color == PLUS else 1] -= 1
        self.accepted["recolor"] += 1

    def step(self) -> None:
        u = self.ub.next()
        if u < self.c_birth:
            self._birth()
        elif u < self.c_death:
            self._death()
        else:
            self._recolor()

    def moves_per_sweep(self) -> int:
        if self.settings.moves_per_sweep is not None:
            return self.settings.moves_per_sweep
        return max(1, int(round(self.sweep_mass)))

    def assert_viable(self) -> None:
        conf = self.to_marked_configuration()
        boundary = (
            FREE
            if self.wired is None
            else (PLUS_WIRED if self.wired == PLUS else MINUS_WIRED)
        )
        if not is_viable(conf, self.a, boundary, self.params.window):
            raise AssertionError("chain state lost viability")


def run_wr_chain(
    params: WRParams,
    boundary: str,
    settings: MCMCSettings,
    seed=0,
    record=None,
    init: MarkedConfiguration | None = None,
    count_box: Window | None = None,
    audit_birth_factor: float = 1.0,
):
    """Run the chain; returns (records, final configuration, info dict).

    ``record(chain)`` is called at every retained sweep.  When ``count_box``
    is given the chain maintains O(1) plus/minus counters for that box and
    ``chain.order_parameter_value()`` reads their difference.
    """
    rng = as_generator(seed)
    chain = _WrChain(params, boundary, settings, rng, audit_birth_factor)
    if count_box is not None:
        if not params.window.contains_window(count_box):
            raise ValueError("count box must lie inside the window")
        chain.register_count_box(count_box)
    if init is not None:
        if not is_viable(init, params.a, boundary, params.window):
            raise ValueError("initial state is not viable")
        chain.load(init)
    moves = chain.moves_per_sweep()
    records = []
    for sweep in range(settings.sweeps):
        for _ in range(moves):
            chain.step()
        if sweep >= settings.burn_in and (sweep - settings.burn_in) % settings.thinning == 0:
            if settings.debug_checks:
                chain.assert_viable()
            if record is not None:
                records.append(record(chain))
    info = {
        "proposed": dict(chain.proposed),
        "accepted": dict(chain.accepted),
        "moves_per_sweep": moves,
        "final_n": chain.n,
    }
    return records, chain.to_marked_configuration(), info


def step_wr_mcmc(
    state: MarkedConfiguration,
    params: WRParams,
    boundary: str,
    settings: MCMCSettings,
    seed=0,
    audit_birth_factor: float = 1.0,
) -> MarkedConfiguration:
    """One elementary transition of the chain from a viable state."""
    if not is_viable(state, params.a, boundary, params.window):
        raise ValueError("input state is not viable")
    rng = as_generator(seed)
    chain = _WrChain(params, boundary, settings, rng, audit_birth_factor)
    chain.load(state)
    chain.step()
    return chain.to_marked_configuration()


def birth_death_log_ratio(n: int, total_mass: float) -> float:
    """log of the unnormalized birth ratio total/(n+1); the death ratio from
    n+1 points is its exact negative.  Exposed for detailed-balance audits."""
    if total_mass <= 0:
        return -math.inf
    return math.log(total_mass) - math.log(n + 1)


def estimate_order_parameter(
    params: WRParams,
    delta: Window,
    settings: MCMCSettings,
    replicates: int = 1,
    seed=0,
    mode: str = "single",
    strict: bool = False,
) -> EstimateWithError:
    """Mean plus-minus count gap in ``delta`` under the plus-wired measure.

    ``single`` runs one plus-wired chain per replicate and averages
    ``n_plus - n_minus``; ``two-chain`` runs plus- and minus-wired chains and
    differences the plus counts (equal in law by color symmetry, exposed as a
    cross-check).  Batch-means errors per chain, replicate variance across
    chains; a lag-1 batch autocorrelation above 0.5 warns (or raises when
    ``strict``).
    """
    if mode not in ("single", "two-chain"):
        raise ValueError(f"unknown mode {mode!r}")
    if not params.window.contains_window(delta):
        raise ValueError("delta must lie inside the window")
    if params.z == 0.0:
        return EstimateWithError(0.0, 0.0, 1, "batch-means")
    children = spawn(seed, replicates)
    estimates = []
    flagged = False
    for child in children:
        if mode == "single":
            records, _, _ = run_wr_chain(
                params,
                PLUS_WIRED,
                settings,
                child,
                record=lambda ch: ch.order_parameter_value(),
                count_box=delta,
            )
            est, lag1 = batch_means(records, settings.batch_count)
            flagged = flagged or lag1 > 0.5
            estimates.append(est)
        else:
            sub = spawn(child, 2)
            sides = []
            for branch, boundary in zip(sub, (PLUS_WIRED, MINUS_WIRED)):
                records, _, _ = run_wr_chain(
                    params,
                    boundary,
                    settings,
                    branch,
                    record=lambda ch: ch.box_counts[0],
                    count_box=delta,
                )
                est, lag1 = batch_means(records, settings.batch_count)
                flagged = flagged or lag1 > 0.5
                sides.append(est)
            plus_side, minus_side = sides
            estimates.append(
                EstimateWithError(
                    plus_side.value - minus_side.value,
                    math.hypot(plus_side.stderr, minus_side.stderr),
                    plus_side.n + minus_side.n,
                    "batch-means",
                )
            )
    if flagged:
        message = "batch series autocorrelation above 0.5; lengthen the chain"
        if strict:
            raise ChainDiagnosticsError(message)
        warnings.warn(message, RuntimeWarning)
    if len(estimates) == 1:
        return estimates[0]
    return pool_independent(estimates, "replicate-variance")


def _delta_statistics(positions: np.ndarray, colors: np.ndarray, delta: Window, r: float) -> tuple:
    """(plus count, minus count, 2a-pair count) inside a box."""
    if len(positions) == 0:
        return 0.0, 0.0, 0.0
    inside = delta.contains(positions)
    pts = positions[inside]
    n_plus = float((colors[inside] == PLUS).sum())
    n_minus = float((colors[inside] == MINUS).sum())
    edges = 0.0
    if len(pts) >= 2:
        edges = float(len(cKDTree(pts).query_pairs(r)))
    return n_plus, n_minus, edges


def dlr_consistency_check(
    params: WRParams,
    boundary: str,
    delta: Window,
    settings: MCMCSettings,
    seed=0,
    corrupt_birth_factor: float = 1.0,
    alpha: float = 0.01,
    resample_attempts: int = 5000,
) -> dict:
    """Conditional-resampling self-consistency of the chain.

    For every retained chain state the content of ``delta`` is erased and
    redrawn from the exact conditional law given the outside (rejection with
    bounded attempts).  If the chain is stationary for the target measure,
    the paired differences of inside-``delta`` statistics are centered at
    zero; batch-means z-tests with a Bonferroni correction give the verdict.
    ``corrupt_birth_factor`` != 1 deliberately breaks the chain's birth
    acceptance (negative control).
    """
    if not params.window.contains_window(delta):
        raise ValueError("delta must lie inside the window")
    r = 2.0 * params.a
    b = wired_color(boundary)
    ss = spawn(seed, 2)
    chain_seed, resample_root = ss
    resample_rng = as_generator(resample_root)
    stat_names = ("plus_count", "minus_count", "pair_count")

    def resample_inside(chain: _WrChain):
        positions = chain.positions_array()
        colors = chain.colors_array()
        inside = delta.contains(positions) if len(positions) else np.zeros(0, dtype=bool)
        out_pts = positions[~inside]
        out_cols = colors[~inside]
        if len(out_pts):
            near = delta.distance_to_box(out_pts) <= r
            out_pts, out_cols = out_pts[near], out_cols[near]
        for _ in range(resample_attempts):
            base = sample_poisson(params.env, delta, 2.0 * params.z, resample_rng)
            new_pts = base.points
            k = len(new_pts)
            new_cols = resample_rng.integers(0, 2, size=k).astype(np.int8) * 2 - 1
            if k:
                if b is not None:
                    opp = new_cols == -b
                    if opp.any() and (
                        params.window.boundary_distance(new_pts[opp]) <= r
                    ).any():
                        continue
                if k >= 2:
                    pairs = cKDTree(new_pts).query_pairs(r, output_type="ndarray")
                    if len(pairs) and (
                        new_cols[pairs[:, 0]] != new_cols[pairs[:, 1]]
                    ).any():
                        continue
                if len(out_pts):
                    dists = np.linalg.norm(
                        new_pts[:, None, :] - out_pts[None, :, :], axis=2
                    )
                    conflict = (dists <= r) & (new_cols[:, None] != out_cols[None, :])
                    if conflict.any():
                        continue
            return new_pts, new_cols
        raise RejectionBudgetError(resample_attempts)

    diffs: list[tuple] = []

    def record(chain: _WrChain):
        positions = chain.positions_array()
        colors = chain.colors_array()
        original = _delta_statistics(positions, colors, delta, r)
        new_pts, new_cols = resample_inside(chain)
        resampled = _delta_statistics(new_pts, new_cols, delta, r)
        diffs.append(tuple(o - s for o, s in zip(original, resampled)))
        return None

    run_wr_chain(
        params,
        boundary,
        settings,
        chain_seed,
        record=record,
        audit_birth_factor=corrupt_birth_factor,
    )

    from scipy.stats import norm

    report: dict = {"alpha": alpha, "retained": len(diffs), "statistics": {}}
    p_values = []
    for i, name in enumerate(stat_names):
        series = [d[i] for d in diffs]
        est, lag1 = batch_means(series, settings.batch_count)
        if est.stderr == 0.0:
            zscore = 0.0 if est.value == 0.0 else math.inf
        else:
            zscore = est.value / est.stderr
        p = 2.0 * (1.0 - norm.cdf(abs(zscore)))
        p_values.append(p)
        report["statistics"][name] = {
            "mean_difference": est.value,
            "stderr": est.stderr,
            "z": zscore,
            "p": p,
            "batch_lag1": lag1,
        }
    # Bonferroni across the statistic battery
    report["rejected"] = bool(min(p_values) < alpha / len(stat_names))
    return report


def write_trace_jsonl(states, path, sweep_indices=None) -> None:
    """One JSON record per retained state: sweep index and colored points."""
    if sweep_indices is None:
        sweep_indices = range(len(states))
    with open(path, "w") as fh:
        for sweep, conf in zip(sweep_indices, states):
            points = [
                [float(x) for x in pos] + ["plus" if c == PLUS else "minus"]
                for pos, c in zip(conf.positions, conf.colors)
            ]
            fh.write(json.dumps({"sweep": int(sweep), "points": points}) + "\n")
