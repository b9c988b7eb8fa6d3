"""First-return inducing schemes, induced potentials and Abramov projection."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np

from .equilibria import MeasureApprox
from .errors import DivergentSum, DomainError, NonFiniteWeight, NotMarkovBase
from .maps import MapSpec, Potential
from .pressure import PressureCurve, logsumexp
from .symbolic import (
    DEFAULT_CYLINDER_BUDGET,
    cylinder_intervals,
    digit,
    encode,
    periodic_points_for_words,
    pullback,
    rotate,
    split_potential,
)

DEFAULT_MAX_BRANCHES = 100_000
TAIL_RATIO_MAX = 0.95
BASE_MAX_DEPTH = 16
DISTORTION_GRID = 2**6
ENDPOINT_TOL = 1e-9


@dataclass(frozen=True)
class InducingBase:
    """An interval X that is one cylinder, or a run of adjacent depth-1 cylinders."""

    interval: tuple[float, float]
    words: tuple[tuple[int, ...], ...]

    @property
    def depth(self) -> int:
        return len(self.words[0])


@dataclass(frozen=True)
class SchemeBranch:
    domain: tuple[float, float]
    tau: int
    log_deriv: float
    word: tuple[int, ...]
    representative: float = 0.0
    orbit: np.ndarray = field(default=None, repr=False, compare=False)


@dataclass
class InducingScheme:
    fmap: MapSpec = field(repr=False)
    base: InducingBase
    branches: list[SchemeBranch] = field(repr=False)
    distortion_bound: float
    complete_mass: float
    max_time: int

    @property
    def taus(self) -> np.ndarray:
        return np.array([b.tau for b in self.branches], dtype=float)

    @property
    def log_derivs(self) -> np.ndarray:
        return np.array([b.log_deriv for b in self.branches])

    @property
    def is_complete(self) -> bool:
        return self.complete_mass >= 1.0 - 1e-14

    def truncated(self, n: int) -> "InducingScheme":
        if not 1 <= n <= len(self.branches):
            raise DomainError(f"N={n} outside 1..{len(self.branches)}")
        kept = self.branches[:n]
        width = self.base.interval[1] - self.base.interval[0]
        mass = sum(b.domain[1] - b.domain[0] for b in kept) / width
        return InducingScheme(self.fmap, self.base, kept, self.distortion_bound,
                              min(mass, 1.0), self.max_time)

    def endpoint_defect(self) -> float:
        """max distance of f^tau(branch endpoints) from the base endpoints."""
        fmap = self.fmap
        lo, hi = self.base.interval
        worst = 0.0
        for b in self.branches:
            ends = np.array(b.domain, dtype=float)
            for s in b.word:
                ends = fmap.forward_on(ends, np.full(2, s))
            ends = np.sort(ends)
            worst = max(worst, abs(ends[0] - lo), abs(ends[1] - hi))
        return worst


@dataclass(frozen=True)
class InducedPotential:
    values: np.ndarray
    taus: np.ndarray
    variation_bound: tuple[float, ...] = ()


@dataclass(frozen=True)
class InducedSum:
    value: float
    partial_value: float
    tail_estimate: float
    tail_ratio: float | None


@dataclass(frozen=True)
class TruncationReport:
    N: int
    t_grid: np.ndarray
    p_N_values: np.ndarray
    p_values: np.ndarray
    delta: float


# --------------------------------------------------------------------- bases


def base_from_word(fmap: MapSpec, word: Sequence[int]) -> InducingBase:
    word = tuple(int(s) for s in word)
    if not word or any(not 0 <= s < fmap.m for s in word):
        raise NotMarkovBase(f"invalid base word {word}")
    lo, hi = pullback(fmap, np.array([encode(word, fmap.m)]), len(word))
    return InducingBase((float(lo[0]), float(hi[0])), (word,))


def base_from_interval(fmap: MapSpec, a: float, b: float,
                       max_depth: int = BASE_MAX_DEPTH, tol: float = 1e-12) -> InducingBase:
    """Identify [a, b] with a single cylinder or a run of depth-1 cylinders."""
    if not 0.0 <= a < b <= 1.0:
        raise NotMarkovBase(f"[{a}, {b}] is not a sub-interval of [0, 1]")
    m = fmap.m
    for d in range(1, max_depth + 1):
        if m ** d > DEFAULT_CYLINDER_BUDGET:
            break
        lo, hi = cylinder_intervals(fmap, d)
        inside = np.nonzero((lo >= a - tol) & (hi <= b + tol))[0]
        if inside.size == 0:
            continue
        covered = (hi[inside] - lo[inside]).sum()
        if abs(covered - (b - a)) > tol:
            continue
        words = tuple(tuple(int(digit(np.array(i), m, d, p)) for p in range(d)) for i in inside)
        if d > 1 and len(words) > 1:
            raise NotMarkovBase("unions of several cylinders deeper than level 1 are not supported")
        return InducingBase((float(a), float(b)), words)
    raise NotMarkovBase(f"[{a}, {b}] is not a union of cylinders up to depth {max_depth}")


# ------------------------------------------------------------------- schemes


def _return_words(base: InducingBase, m: int, max_time: int, max_branches: int):
    """Words w (tau = len(w)) with w.c starting in the base and re-entering first at tau."""
    d = base.depth
    targets = set(base.words)
    open_strings = list(base.words)
    found: list[tuple[int, ...]] = []
    length = d
    while open_strings and length - d + 1 <= max_time:
        nxt = []
        for s in open_strings:
            returned = False
            for b in range(m):
                u = s + (b,)
                if u[-d:] in targets:
                    # several depth-1 base cells give the same return word once
                    if not returned:
                        found.append(u[:len(u) - d])
                        returned = True
                else:
                    nxt.append(u)
        # breadth-first over symbols, so found is already in (tau, word) order
        if len(found) >= max_branches:
            return found[:max_branches], True
        open_strings = nxt
        length += 1
        if len(open_strings) > DEFAULT_CYLINDER_BUDGET:
            raise DomainError("return-word enumeration exceeded the cylinder budget")
    return found, False


def _branch_records(fmap: MapSpec, base: InducingBase, words: list[tuple[int, ...]]):
    m = fmap.m
    lo_x, hi_x = base.interval
    by_tau: dict[int, list[int]] = {}
    for i, w in enumerate(words):
        by_tau.setdefault(len(w), []).append(i)
    out: list[SchemeBranch | None] = [None] * len(words)
    for tau, members in sorted(by_tau.items()):
        idx = np.array([encode(words[i], m) for i in members], dtype=np.int64)
        lo, hi = pullback(fmap, idx, tau, lo_x, hi_x)
        orbit = np.empty((idx.size, tau))
        logd = np.empty((idx.size, tau))
        cur = idx
        for j in range(tau):
            orbit[:, j], logd[:, j] = periodic_points_for_words(fmap, cur, tau)
            cur = rotate(cur, m, tau)
        for k, i in enumerate(members):
            out[i] = SchemeBranch((float(lo[k]), float(hi[k])), tau, math.fsum(logd[k]),
                                  words[i], float(orbit[k, 0]), orbit[k])
    return out


def _distortion(fmap: MapSpec, branches: list[SchemeBranch]) -> float:
    if fmap.is_piecewise_linear:
        return 1.0
    worst = 0.0
    frac = (np.arange(DISTORTION_GRID) + 0.5) / DISTORTION_GRID
    for b in branches:
        x = b.domain[0] + frac * (b.domain[1] - b.domain[0])
        total = np.zeros_like(x)
        for s in b.word:
            sym = np.full(x.shape, s)
            total += fmap.log_abs_deriv_on(x, sym)
            x = fmap.forward_on(x, sym)
        if np.all(np.isfinite(total)):
            worst = max(worst, float(total.max() - total.min()))
    return math.exp(worst)


def first_return_scheme(fmap: MapSpec, base: InducingBase | tuple[float, float] | Sequence[int],
                        max_time: int = 20,
                        max_branches: int = DEFAULT_MAX_BRANCHES) -> InducingScheme:
    """All first-return branches to X with return time at most ``max_time``.

    Branches are ordered by return time, then lexicographically by word.
    """
    if not fmap.markov:
        raise NotMarkovBase("inducing needs a Markov map")
    if max_time < 1:
        raise DomainError("max_time must be >= 1")
    if not isinstance(base, InducingBase):
        seq = tuple(base)
        if len(seq) == 2 and any(isinstance(v, float) for v in seq):
            base = base_from_interval(fmap, float(seq[0]), float(seq[1]))
        else:
            base = base_from_word(fmap, seq)
    words, _ = _return_words(base, fmap.m, max_time, max_branches)
    branches = _branch_records(fmap, base, words)
    width = base.interval[1] - base.interval[0]
    mass = math.fsum(b.domain[1] - b.domain[0] for b in branches) / width
    return InducingScheme(fmap, base, branches, _distortion(fmap, branches), min(mass, 1.0),
                          max_time)


# ---------------------------------------------------------------- potentials


def _branch_sums(scheme: InducingScheme, phi: Potential, branches) -> np.ndarray:
    fmap = scheme.fmap
    t, rest = split_potential(phi)
    vals = np.array([-t * b.log_deriv if t != 0.0 else 0.0 for b in branches])
    for c, psi in rest:
        for i, b in enumerate(branches):
            syms = np.array(b.word)
            vals[i] += c * math.fsum(psi.values(fmap, b.orbit, syms))
    return vals


def _variation(scheme: InducingScheme, phi: Potential, depths: int, width: int,
               samples: int = 16) -> tuple[float, ...]:
    """Spread of Phi over induced cylinders of depth 1..``depths``.

    Induced cylinders use only the first ``width`` branches; depth n means
    n consecutive branch words.  V_{n+1} <= V_n holds exactly (nested
    sets), so sampling noise is removed by a running minimum.
    """
    fmap = scheme.fmap
    branches = scheme.branches[:width]
    if not branches:
        return ()
    t, rest = split_potential(phi)
    frac = (np.arange(samples) + 0.5) / samples
    lo_x, hi_x = scheme.base.interval
    out = []
    seqs = [(i,) for i in range(len(branches))]
    for n in range(1, depths + 1):
        worst = 0.0
        for seq in seqs:
            words = [branches[i].word for i in seq]
            head = words[0]
            full = sum(words, ())
            idx = np.array([encode(full, fmap.m)], dtype=np.int64)
            lo, hi = pullback(fmap, idx, len(full), lo_x, hi_x)
            x = lo[0] + frac * (hi[0] - lo[0])
            total = np.zeros_like(x)
            for s in head:
                sym = np.full(x.shape, s)
                if t != 0.0:
                    total += -t * fmap.log_abs_deriv_on(x, sym)
                for c, psi in rest:
                    total += c * psi.values(fmap, x, sym)
                x = fmap.forward_on(x, sym)
            if np.all(np.isfinite(total)):
                worst = max(worst, float(total.max() - total.min()))
        out.append(worst if not out else min(worst, out[-1]))
        seqs = [s + (j,) for s in seqs for j in range(len(branches))]
    return tuple(out)


def induce_potential(scheme: InducingScheme, phi: Potential, variation_depth: int = 3,
                     variation_width: int = 6) -> InducedPotential:
    """Phi_i = S_{tau_i} phi at each branch representative."""
    vals = _branch_sums(scheme, phi, scheme.branches)
    if not np.all(np.isfinite(vals)):
        raise NonFiniteWeight("induced potential is not finite on every branch")
    var = _variation(scheme, phi, variation_depth, variation_width)
    return InducedPotential(vals, scheme.taus, var)


# ------------------------------------------------------------------ pressure


def induced_sum(scheme: InducingScheme, Phi: InducedPotential, shift: float,
                extrapolate_tail: bool = True) -> InducedSum:
    """log sum_i exp(Phi_i - shift * tau_i) with a geometric tail beyond max_time.

    For an incomplete scheme the per-tau log weights over the last decade of
    return times are fitted by a line; a ratio per unit tau below 0.95
    counts as geometric decay and the remaining tail is added in closed
    form, otherwise the sum is declared divergent.
    """
    w = Phi.values - shift * Phi.taus
    partial = logsumexp(w)
    if scheme.is_complete or not extrapolate_tail:
        return InducedSum(partial, partial, 0.0, None)
    taus = np.unique(Phi.taus)
    per_tau = np.array([logsumexp(w[Phi.taus == tau]) for tau in taus])
    tmax = taus[-1]
    window = max(3, int(math.ceil(0.1 * tmax)))
    sel = taus > tmax - window
    if sel.sum() < 3:
        sel = np.ones_like(taus, dtype=bool)
    if sel.sum() < 2:
        raise DivergentSum("too few return times to test the tail")
    slope = float(np.polyfit(taus[sel], per_tau[sel], 1)[0])
    ratio = math.exp(slope)
    if not ratio < TAIL_RATIO_MAX:
        raise DivergentSum(
            f"branch weights decay by {ratio:.4f} per unit return time (need < {TAIL_RATIO_MAX})")
    tail = math.exp(per_tau[-1] - partial) * ratio / (1.0 - ratio)
    return InducedSum(partial + math.log1p(tail), partial, tail, ratio)


def induced_pressure(scheme: InducingScheme, Phi: InducedPotential, shift: float,
                     extrapolate_tail: bool = True) -> float:
    return induced_sum(scheme, Phi, shift, extrapolate_tail).value


def gibbs_branch_probs(Phi: InducedPotential, shift: float) -> np.ndarray:
    """p_i proportional to exp(Phi_i - shift * tau_i), normalised over the listed branches."""
    w = Phi.values - shift * Phi.taus
    p = np.exp(w - w.max())
    return p / math.fsum(p)


# ---------------------------------------------------------------- projection


def _concatenation_blocks(words: list[tuple[int, ...]], probs: np.ndarray, m: int,
                          L: int) -> np.ndarray:
    """Exact depth-L cylinder masses of the projected measure.

    The projected symbolic process is a stationary renewal sequence of
    i.i.d. branch words; a block starting at offset j of a word is that
    word's suffix followed by fresh words.
    """
    probs = [float(p) for p in probs]

    @lru_cache(maxsize=None)
    def fresh(u: tuple[int, ...]) -> float:
        # P(a fresh concatenation starts with u)
        if not u:
            return 1.0
        total = 0.0
        for w, p in zip(words, probs):
            k = min(len(w), len(u))
            if w[:k] == u[:k]:
                total += p * (fresh(u[k:]) if len(w) < len(u) else 1.0)
        return total

    mean_tau = sum(p * len(w) for w, p in zip(words, probs))
    out = np.zeros(m ** L)
    for code in range(m ** L):
        u = tuple(int(digit(np.array(code), m, L, pos)) for pos in range(L))
        acc = 0.0
        for w, p in zip(words, probs):
            for j in range(len(w)):
                suffix = w[j:]
                k = min(len(suffix), L)
                if suffix[:k] == u[:k]:
                    acc += p * (fresh(u[k:]) if len(suffix) < L else 1.0)
        out[code] = acc / mean_tau
    return out


def project_measure(scheme: InducingScheme, branch_probs: Sequence[float],
                    Phi: InducedPotential | None = None, depth: int = 1) -> MeasureApprox:
    """Abramov projection of the induced Bernoulli measure with the given branch weights.

    h(mu) = h(mu_F) / int tau, lambda(mu) = sum p_i log|DF_i| / int tau and
    int phi d mu = sum p_i Phi_i / int tau.  Cylinder masses are exact to
    depth+1 and extended as an order-``depth`` Markov chain beyond.
    """
    p = np.asarray(branch_probs, dtype=float)
    if p.size != len(scheme.branches):
        raise DomainError("one probability per branch is required")
    if np.any(p < 0) or abs(math.fsum(p) - 1.0) > 1e-9:
        raise DomainError("branch probabilities must be non-negative and sum to 1")
    taus = scheme.taus
    mean_tau = math.fsum(p * taus)
    nz = p > 0
    h_F = -math.fsum(p[nz] * np.log(p[nz]))
    lyap = math.fsum(p * scheme.log_derivs) / mean_tau
    m = scheme.fmap.m
    blocks = _concatenation_blocks([b.word for b in scheme.branches], p, m, depth + 1)
    block_probs = blocks.reshape(m ** depth, m).sum(axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        nxt = blocks.reshape(m ** depth, m) / block_probs[:, None]
    nxt = np.where(np.isfinite(nxt), nxt, 1.0 / m)
    mu = MeasureApprox(fmap=scheme.fmap, depth=depth, block_probs=block_probs, next_probs=nxt,
                       entropy=h_F / mean_tau + 0.0, lyapunov=lyap,
                       potential_integral=float("nan"), construction="AbramovProjection")
    if Phi is not None:
        mu.potential_integral = math.fsum(p * Phi.values) / mean_tau
    return mu


# ---------------------------------------------------------------- truncation


def bowen_root(scheme: InducingScheme, Phi: InducedPotential, tol: float = 1e-13,
               extrapolate_tail: bool = False) -> float:
    """s with induced_pressure(Phi, s) = 0 (strictly decreasing in s).

    With tail extrapolation, shifts whose series fails the tail test count
    as +inf, which keeps the bracket on the convergent side.
    """

    def g(s):
        try:
            return induced_pressure(scheme, Phi, s, extrapolate_tail)
        except DivergentSum:
            return math.inf

    lo, hi = -1.0, 1.0
    while g(lo) < 0:
        lo *= 2.0
        if lo < -1e6:
            raise DomainError("no bracket for the Bowen root")
    while g(hi) > 0:
        hi *= 2.0
        if hi > 1e6:
            raise DomainError("no bracket for the Bowen root")
    while hi - lo > tol * max(1.0, abs(lo)):
        mid = 0.5 * (lo + hi)
        if g(mid) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def truncate_and_pressure(scheme: InducingScheme, N: int, t_grid: Sequence[float],
                          p_curve: PressureCurve | None = None, t_ref: float = 1.0,
                          family=None) -> TruncationReport:
    """p_N(t): Bowen root of the N-branch truncation for phi_t = -t log|Df|.

    p(t) is read from ``p_curve`` (re-evaluated when it carries an
    evaluator).
    """
    from .maps import Geometric

    family = Geometric if family is None else family
    sub = scheme.truncated(N)
    t_grid = np.asarray(t_grid, dtype=float)

    def p_N(t):
        return bowen_root(sub, induce_potential(sub, family(float(t)), variation_depth=0))

    p_N_vals = np.array([p_N(t) for t in t_grid])
    if p_curve is not None:
        p_vals = np.array([p_curve.at(t) for t in t_grid])
        delta = p_curve.at(t_ref) - p_N(t_ref)
    else:
        p_vals = np.full_like(t_grid, np.nan)
        delta = float("nan")
    return TruncationReport(N, t_grid, p_N_vals, p_vals, float(delta))


__all__ = [
    "InducedPotential",
    "InducedSum",
    "InducingBase",
    "InducingScheme",
    "SchemeBranch",
    "TruncationReport",
    "base_from_interval",
    "base_from_word",
    "bowen_root",
    "first_return_scheme",
    "gibbs_branch_probs",
    "induce_potential",
    "induced_pressure",
    "induced_sum",
    "project_measure",
    "truncate_and_pressure",
]
