"""Monte Carlo for the Markov process with transition density Z(x, t).

States live in a fixed digit window: coordinate digits at valuations
``lo .. hi-1``, stored as small integer arrays, so that addition is a
carry loop vectorised over paths.  Increments are exact in law: the radius
comes from the sphere masses of Z by inverse CDF and the point is uniform
on that sphere.

Each path owns a counter-based Philox stream keyed by (seed, path index),
so paths are reproducible one by one and independent of how many are run.
"""
from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy import stats

from .errors import WindowTooSmallError
from .heat_kernel import KernelParams, radial_cdf, radial_ccdf, sphere_mass
from .padic_core import PAdicPoint, PAdicScalar

DEFAULT_WINDOW = (-48, 48)
MAX_CLIPPED = 1e-9


@dataclass(frozen=True)
class IncrementLaw:
    params: KernelParams
    t: float
    m_lo: int
    pmf: np.ndarray
    clipped_lo: float
    clipped_hi: float

    @property
    def m_hi(self) -> int:
        return self.m_lo + len(self.pmf) - 1

    @property
    def clipped_mass(self) -> float:
        return self.clipped_lo + self.clipped_hi

    @property
    def support(self) -> np.ndarray:
        return np.arange(self.m_lo, self.m_hi + 1)

    def prob(self, m: int) -> float:
        if self.m_lo <= m <= self.m_hi:
            return float(self.pmf[m - self.m_lo])
        return 0.0

    @property
    def cumulative(self) -> np.ndarray:
        """clipped_lo + running pmf sums: the inverse-CDF table."""
        return self.clipped_lo + np.cumsum(self.pmf)


def _auto_window(params: KernelParams, t: float, max_clipped: float, bounds: tuple[int, int]):
    lo_b, hi_b = bounds
    half = max_clipped / 2
    peak = int(round(math.log(params.a * t) / (params.alpha * params.lnp)))
    m_hi = max(peak, lo_b)
    while radial_ccdf(m_hi, t, params) > half:
        m_hi += 1
        if m_hi > hi_b:
            raise WindowTooSmallError(
                f"upper tail mass {radial_ccdf(hi_b, t, params):.3g} beyond radius p^{hi_b} "
                f"exceeds {half:.3g}; widen the state window"
            )
    m_lo = min(peak, m_hi)
    while radial_cdf(m_lo - 1, t, params) > half:
        m_lo -= 1
        if m_lo < lo_b:
            raise WindowTooSmallError(
                f"lower tail mass below radius p^{lo_b} exceeds {half:.3g}; widen the state window"
            )
    return m_lo, m_hi


def build_increment_law(params: KernelParams, t: float, window: Optional[tuple[int, int]] = None,
                        max_clipped: float = MAX_CLIPPED,
                        state_window: tuple[int, int] = DEFAULT_WINDOW) -> IncrementLaw:
    """Radial law of one increment over time t.

    Radii must fit the state window: a sphere p^m needs the digit at
    valuation -m, so m ranges over [1 - hi, -lo].
    """
    lo, hi = state_window
    bounds = (1 - hi, -lo)
    if window is None:
        m_lo, m_hi = _auto_window(params, t, max_clipped, bounds)
    else:
        m_lo, m_hi = window
        if m_lo < bounds[0] or m_hi > bounds[1]:
            raise WindowTooSmallError(f"radius window {window} exceeds state window bounds {bounds}")
    ms = np.arange(m_lo, m_hi + 1)
    pmf = np.asarray(sphere_mass(ms, t, params), dtype=float)
    law = IncrementLaw(params, float(t), int(m_lo), pmf,
                       float(radial_cdf(m_lo - 1, t, params)), float(radial_ccdf(m_hi, t, params)))
    if law.clipped_mass > max_clipped:
        raise WindowTooSmallError(f"clipped mass {law.clipped_mass:.3g} exceeds {max_clipped:.3g}")
    return law


# --------------------------------------------------------------------------
# digit-window states


@dataclass(frozen=True)
class StateWindow:
    prime: int
    n: int
    lo: int = DEFAULT_WINDOW[0]
    hi: int = DEFAULT_WINDOW[1]

    @property
    def width(self) -> int:
        return self.hi - self.lo

    def zeros(self, *shape) -> np.ndarray:
        return np.zeros(shape + (self.n, self.width), dtype=np.int16)

    def add(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """Digit-wise sum with carries; carries out of the window are dropped."""
        p = self.prime
        out = np.empty_like(a)
        carry = np.zeros(a.shape[:-1], dtype=np.int16)
        for j in range(self.width):
            s = a[..., j] + b[..., j] + carry
            out[..., j] = s % p
            carry = s // p
        return out

    def neg(self, a: np.ndarray) -> np.ndarray:
        """Additive inverse modulo p^width (p-complement plus one)."""
        p = self.prime
        comp = (p - 1 - a).astype(np.int16)
        one = np.zeros_like(a)
        one[..., 0] = 1
        return self.add(comp, one)

    def sub(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        return self.add(a, self.neg(b))

    def radius_exps(self, a: np.ndarray) -> np.ndarray:
        """Radius exponent of each state (over the coordinate axis); -inf at 0."""
        nz = a != 0
        any_nz = nz.any(axis=-1)
        first = np.where(any_nz, nz.argmax(axis=-1), self.width)  # per coordinate
        first = first.min(axis=-1)
        out = -(self.lo + first).astype(float)
        out[first == self.width] = -np.inf
        return out

    def to_point(self, digits: np.ndarray) -> PAdicPoint:
        coords = []
        for row in digits:
            nz = np.nonzero(row)[0]
            if len(nz) == 0:
                coords.append(PAdicScalar.zero(self.prime))
            else:
                j0 = int(nz[0])
                coords.append(PAdicScalar(self.prime, self.lo + j0, tuple(int(d) for d in row[j0:])))
        return PAdicPoint(tuple(coords))

    def from_point(self, x: PAdicPoint) -> np.ndarray:
        out = np.zeros((self.n, self.width), dtype=np.int16)
        for i, c in enumerate(x.coords):
            if c.is_zero:
                continue
            for j, d in enumerate(c.digits):
                k = c.order + j - self.lo
                if 0 <= k < self.width:
                    out[i, k] = d
                elif k < 0 and d:
                    raise WindowTooSmallError("point has digits below the state window")
        return out


def path_rng(seed: int, path: int) -> np.random.Generator:
    """Philox stream keyed by (seed, path index)."""
    key = np.array([seed & 0xFFFFFFFFFFFFFFFF, path & 0xFFFFFFFFFFFFFFFF], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def draw_radius(law: IncrementLaw, rng: np.random.Generator) -> tuple[int, bool]:
    """Inverse-CDF radius; draws that land in the clipped mass are redrawn and flagged."""
    cum = law.cumulative
    clipped = False
    while True:
        u = rng.random()
        if u < law.clipped_lo or u >= cum[-1]:
            clipped = True
            continue
        idx = int(np.searchsorted(cum, u, side="right"))
        return law.m_lo + idx, clipped


def draw_on_sphere(m: int, win: StateWindow, rng: np.random.Generator) -> tuple[np.ndarray, int]:
    """Uniform point with ||y|| = p^m, digits above the window dropped.

    Coordinates are drawn uniformly in the ball p^-m Z_p and the draw is
    kept when some coordinate reaches the full radius.  For n = 1 the
    leading digit is drawn from 1..p-1 directly.  Returns (digits, attempts).
    """
    p, n = win.prime, win.n
    j0 = -m - win.lo
    D = win.width - j0
    out = np.zeros((n, win.width), dtype=np.int16)
    attempts = 0
    while True:
        attempts += 1
        body = rng.integers(0, p, size=(n, D), dtype=np.int16)
        if n == 1:
            body[0, 0] = rng.integers(1, p)
        if body[:, 0].any():
            out[:, j0:] = body
            return out, attempts


def sample_increment(law: IncrementLaw, rng: np.random.Generator,
                     win: Optional[StateWindow] = None) -> tuple[PAdicPoint, int, bool]:
    """One increment as a point, with its radius exponent and clipped flag."""
    win = win or StateWindow(law.params.p, law.params.n)
    m, clipped = draw_radius(law, rng)
    digits, _ = draw_on_sphere(m, win, rng)
    return win.to_point(digits), m, clipped


@dataclass
class Trajectory:
    seed: int
    path: int
    times: np.ndarray
    states: np.ndarray  # (steps+1, n, width) digits
    radius_exps: list  # increment radius per step; None at step 0
    clipped: list
    window: StateWindow = field(repr=False)

    def points(self) -> list[PAdicPoint]:
        return [self.window.to_point(s) for s in self.states]

    def records(self) -> Iterable[dict]:
        from .radial import encode_point

        for k, t in enumerate(self.times):
            yield {
                "path": self.path, "step": k, "t": float(t),
                "state": encode_point(self.window.to_point(self.states[k])),
                "radius_exp": self.radius_exps[k], "clipped": bool(self.clipped[k]),
            }


@dataclass
class TrajectorySet:
    seed: int
    times: np.ndarray
    states: np.ndarray  # (paths, steps+1, n, width)
    radii: np.ndarray  # (paths, steps) drawn increment radius exponents
    clipped: np.ndarray  # (paths, steps)
    window: StateWindow
    law: IncrementLaw

    @property
    def n_paths(self) -> int:
        return self.states.shape[0]

    def __len__(self) -> int:
        return self.n_paths

    def trajectory(self, i: int) -> Trajectory:
        return Trajectory(self.seed, i, self.times, self.states[i],
                          [None] + [int(r) for r in self.radii[i]],
                          [False] + [bool(c) for c in self.clipped[i]], self.window)

    def __iter__(self):
        return (self.trajectory(i) for i in range(self.n_paths))

    def displacement_radii(self, k0: int, k1: int) -> np.ndarray:
        """Radius exponents of X_{k1} - X_{k0}, from the stored digits."""
        d = self.window.sub(self.states[:, k1], self.states[:, k0])
        return self.window.radius_exps(d)

    def write_jsonl(self, path: str):
        with open(path, "w") as fh:
            for tr in self:
                for rec in tr.records():
                    fh.write(json.dumps(rec) + "\n")


def _draw_paths(law: IncrementLaw, win: StateWindow, seed: int, paths: range, n_steps: int,
                incs: np.ndarray, radii: np.ndarray, clipped: np.ndarray):
    for i in paths:
        rng = path_rng(seed, i)
        for k in range(n_steps):
            m, c = draw_radius(law, rng)
            incs[i, k], _ = draw_on_sphere(m, win, rng)
            radii[i, k] = m
            clipped[i, k] = c


def simulate(params: KernelParams, t_step: float, n_steps: int, n_paths: int, seed: int,
             x0: Optional[PAdicPoint] = None, state_window: tuple[int, int] = DEFAULT_WINDOW,
             max_clipped: float = MAX_CLIPPED, law: Optional[IncrementLaw] = None,
             workers: int = 1) -> TrajectorySet:
    """Independent paths with i.i.d. exact increments at spacing t_step.

    ``workers`` > 1 draws disjoint blocks of paths in threads; the output
    does not depend on it because every path has its own stream.
    """
    win = StateWindow(params.p, params.n, *state_window)
    law = law or build_increment_law(params, t_step, None, max_clipped, state_window)
    states = win.zeros(n_paths, n_steps + 1)
    if x0 is not None:
        states[:, 0] = win.from_point(x0)
    radii = np.zeros((n_paths, n_steps), dtype=np.int64)
    clipped = np.zeros((n_paths, n_steps), dtype=bool)
    incs = win.zeros(n_paths, max(n_steps, 1))
    workers = max(1, min(int(workers), n_paths))
    if workers == 1:
        _draw_paths(law, win, seed, range(n_paths), n_steps, incs, radii, clipped)
    else:
        edges = np.linspace(0, n_paths, workers + 1).astype(int)
        with ThreadPoolExecutor(workers) as pool:
            futs = [pool.submit(_draw_paths, law, win, seed, range(a, b), n_steps, incs, radii, clipped)
                    for a, b in zip(edges[:-1], edges[1:])]
            for f in futs:
                f.result()
    for k in range(n_steps):
        states[:, k + 1] = win.add(states[:, k], incs[:, k])
    times = t_step * np.arange(n_steps + 1)
    return TrajectorySet(seed, times, states, radii, clipped, win, law)


def sample_radii(law: IncrementLaw, n: int, seed: int) -> np.ndarray:
    """n radius draws, the i-th from stream (seed, i)."""
    return np.array([draw_radius(law, path_rng(seed, i))[0] for i in range(n)])


# --------------------------------------------------------------------------
# statistics


@dataclass
class LawComparison:
    chi2: float
    dof: int
    p_value: float
    tv: float
    n: int
    bins: int


def empirical_vs_exact(radii: Sequence[int] | TrajectorySet, law: IncrementLaw,
                       min_expected: float = 5.0) -> LawComparison:
    """Chi-square and total variation between empirical radii and the exact pmf.

    A TrajectorySet contributes all its drawn increment radii.  Sparse
    outer bins are pooled until each expects ``min_expected`` counts.
    """
    if isinstance(radii, TrajectorySet):
        radii = radii.radii.ravel()
    r = np.asarray(radii, dtype=np.int64)
    N = len(r)
    counts = np.bincount(r - law.m_lo, minlength=len(law.pmf)).astype(float)
    probs = law.pmf / law.pmf.sum()
    tv = 0.5 * float(np.abs(counts / N - probs).sum())
    obs, exp = _pool(counts, probs * N, min_expected)
    chi2, pval = stats.chisquare(obs, exp * obs.sum() / exp.sum())
    return LawComparison(float(chi2), len(obs) - 1, float(pval), tv, N, len(obs))


def two_step_check(params: KernelParams, t: float, n_paths: int, seed: int,
                   state_window: tuple[int, int] = DEFAULT_WINDOW,
                   max_clipped: float = MAX_CLIPPED) -> LawComparison:
    """Radius of X_2 - X_0 after two steps of length t against the one-step law at 2t."""
    ts = simulate(params, t, 2, n_paths, seed, state_window=state_window, max_clipped=max_clipped)
    law2 = build_increment_law(params, 2 * t, None, max_clipped, state_window)
    r = ts.displacement_radii(0, 2)
    if not np.all(np.isfinite(r)):
        raise WindowTooSmallError("two increments cancelled inside the state window")
    return empirical_vs_exact(r.astype(np.int64), law2)


def _pool(counts: np.ndarray, expected: np.ndarray, min_expected: float):
    obs, exp = [], []
    co, ce = 0.0, 0.0
    for c, e in zip(counts, expected):
        co += c
        ce += e
        if ce >= min_expected:
            obs.append(co)
            exp.append(ce)
            co, ce = 0.0, 0.0
    if ce > 0 or co > 0:
        if exp:
            obs[-1] += co
            exp[-1] += ce
        else:
            obs.append(co)
            exp.append(ce)
    return np.array(obs), np.array(exp)


def leading_pattern_check(m: int, law: IncrementLaw, n_draws: int, seed: int,
                          win: Optional[StateWindow] = None) -> float:
    """Chi-square p-value for uniformity of the leading digit pattern on the sphere p^m."""
    win = win or StateWindow(law.params.p, law.params.n)
    p, n = win.prime, win.n
    j0 = -m - win.lo
    codes = np.empty(n_draws, dtype=np.int64)
    for i in range(n_draws):
        d, _ = draw_on_sphere(m, win, path_rng(seed, i))
        codes[i] = int(np.dot(d[:, j0], p ** np.arange(n)))
    counts = np.bincount(codes, minlength=p**n)[1:]  # the all-zero pattern never occurs
    return float(stats.chisquare(counts).pvalue)


def homogeneity_check(ts: TrajectorySet, step: int = 1) -> float:
    """Chi-square contingency p-value: increment radius vs radius of the current state.

    Both radii are recomputed from the stored digits.
    """
    cur = ts.window.radius_exps(ts.states[:, step])
    inc = ts.displacement_radii(step, step + 1)
    finite = np.isfinite(cur)
    cur_b = np.where(finite, cur, cur[finite].min() - 1 if finite.any() else 0)
    # condition on terciles of the current radius, increments pooled into common bins
    edges = np.unique(np.quantile(cur_b, [1 / 3, 2 / 3]))
    cond = np.digitize(cur_b, edges)
    inc_vals, inc_idx = np.unique(inc, return_inverse=True)
    table = np.zeros((cond.max() + 1, len(inc_vals)))
    np.add.at(table, (cond, inc_idx), 1)
    table = table[table.sum(axis=1) > 0]
    # pool sparse increment columns
    keep = table.sum(axis=0) >= 5 * table.shape[0]
    if (~keep).any():
        table = np.column_stack([table[:, keep], table[:, ~keep].sum(axis=1)])
    table = table[:, table.sum(axis=0) > 0]
    if table.shape[0] < 2 or table.shape[1] < 2:
        return 1.0
    return float(stats.chi2_contingency(table)[1])
