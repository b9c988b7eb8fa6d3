"""Finite approximations of equilibrium and Gibbs measures.

Every measure is stored as a stationary Markov chain of some order r on the
symbolic coding: ``block_probs`` are the masses of the depth-r cylinders and
``next_probs[s, b]`` the probability that the r-block s is followed by b.
That one representation covers Bernoulli measures (r = 1, identical rows),
depth-k Markov approximations and periodic-orbit equidistributions (r = n,
deterministic rows), and extends to cylinders of any depth.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import BudgetError, DepthError, DomainError
from .maps import Geometric, LocallyConstant, MapSpec, Potential, locally_constant_values
from .pressure import perron, transition_log_weights
from .symbolic import (
    DEFAULT_CYLINDER_BUDGET,
    check_budget,
    cylinder_intervals,
    decode,
    digit,
    encode,
    periodic_birkhoff,
    periodic_orbit,
    periodic_table,
    pullback,
    rotate,
    split_potential,
    word_to_str,
)

QUADRATURE_EXTRA_DEPTH = 4
MAX_INDEX_DEPTH_BITS = 62


@dataclass
class MeasureApprox:
    fmap: MapSpec = field(repr=False)
    depth: int
    block_probs: np.ndarray = field(repr=False)
    next_probs: np.ndarray = field(repr=False)
    entropy: float
    lyapunov: float
    potential_integral: float
    construction: str

    @property
    def order(self) -> int:
        return int(round(math.log(self.block_probs.size, self.fmap.m)))

    @property
    def dimension(self) -> float:
        return self.entropy / self.lyapunov

    @property
    def cylinder_weights(self) -> dict[str, float]:
        w = self.weights(self.depth)
        m = self.fmap.m
        return {word_to_str(decode(i, m, self.depth)): float(w[i]) for i in range(w.size)}

    def weights(self, n: int, budget: int = DEFAULT_CYLINDER_BUDGET) -> np.ndarray:
        """Masses of all m^n cylinders of depth n, in encoded word order."""
        m = self.fmap.m
        r = self.order
        check_budget(m, n, budget)
        if n <= r:
            return self.block_probs.reshape(m ** n, m ** (r - n)).sum(axis=1)
        w = self.block_probs
        top = m ** (r - 1) if r > 1 else 1
        for _ in range(n - r):
            states = np.arange(w.size) % (top * m)
            w = (w[:, None] * self.next_probs[states]).reshape(-1)
        return w

    def word_weights(self, idx: np.ndarray, n: int) -> np.ndarray:
        """Masses of selected depth-n cylinders (encoded words)."""
        m = self.fmap.m
        r = self.order
        idx = np.asarray(idx, dtype=np.int64)
        if n <= r:
            return self.weights(n)[idx]
        head = idx // m ** (n - r)
        w = self.block_probs[head].astype(float)
        state = head
        for pos in range(r, n):
            b = digit(idx, m, n, pos)
            w = w * self.next_probs[state, b]
            state = (state % m ** (r - 1)) * m + b if r > 1 else b
        return w

    def marginal_shift_defect(self, n: int | None = None) -> float:
        """max |mu[w] - mu[sigma^{-1} w]| over depth-(n-1) marginals."""
        n = self.depth if n is None else n
        if n < 2:
            return 0.0
        m = self.fmap.m
        w = self.weights(n).reshape(m, m ** (n - 1))
        drop_first = w.sum(axis=0)
        drop_last = self.weights(n).reshape(m ** (n - 1), m).sum(axis=1)
        return float(np.max(np.abs(drop_first - drop_last)))


@dataclass(frozen=True)
class GibbsCheckReport:
    depth_checked: int
    best_constant: float
    worst_cylinder: tuple[int, ...]
    P_used: float


# ------------------------------------------------------------------ helpers


def _chain_entropy(block_probs: np.ndarray, next_probs: np.ndarray) -> float:
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(next_probs > 0, next_probs * np.log(next_probs), 0.0)
    return float(-np.sum(block_probs * terms.sum(axis=1))) + 0.0


def _normalise_rows(rows: np.ndarray) -> np.ndarray:
    sums = rows.sum(axis=1, keepdims=True)
    return rows / sums


def _quadrature_depth(measure: MeasureApprox) -> int:
    return max(measure.order, measure.depth) + QUADRATURE_EXTRA_DEPTH


def _midpoint_integral(measure: MeasureApprox, phi: Potential) -> float:
    """sum over depth-(k+4) cylinders of weight times phi at the midpoint."""
    fmap = measure.fmap
    depth = _quadrature_depth(measure)
    lo, hi = cylinder_intervals(fmap, depth)
    mid = 0.5 * (lo + hi)
    first = np.arange(mid.size) // fmap.m ** (depth - 1)
    vals = phi.values(fmap, mid, first)
    return float(np.dot(measure.weights(depth), vals))


def lyapunov_exponent(measure: MeasureApprox) -> float:
    fmap = measure.fmap
    if fmap.is_piecewise_linear:
        slopes = np.log([b.slope for b in fmap.branches])
        return float(np.dot(measure.weights(1), slopes))
    return -_midpoint_integral(measure, Geometric(1.0))


def integrate(measure: MeasureApprox, phi: Potential) -> float:
    """int phi d mu; the geometric part uses the stored Lyapunov exponent."""
    fmap = measure.fmap
    t, rest = split_potential(phi)
    total = -t * measure.lyapunov if t != 0.0 else 0.0
    for c, psi in rest:
        if psi.is_locally_constant(fmap):
            total += c * float(np.dot(measure.weights(1), locally_constant_values(fmap, psi)))
        else:
            total += c * _midpoint_integral(measure, psi)
    return total


def _finish(fmap, depth, block_probs, next_probs, construction, phi=None,
            lyapunov=None) -> MeasureApprox:
    mu = MeasureApprox(fmap=fmap, depth=depth, block_probs=block_probs, next_probs=next_probs,
                       entropy=_chain_entropy(block_probs, next_probs), lyapunov=float("nan"),
                       potential_integral=float("nan"), construction=construction)
    mu.lyapunov = lyapunov_exponent(mu) if lyapunov is None else float(lyapunov)
    if phi is not None:
        mu.potential_integral = integrate(mu, phi)
    return mu


# ------------------------------------------------------------- constructions


def bernoulli_measure(fmap: MapSpec, phi: Potential | Sequence[float]) -> MeasureApprox:
    """Exact Gibbs measure of a locally constant potential: p_i ∝ exp(phi_i)."""
    if not isinstance(phi, Potential):
        phi = LocallyConstant.from_probabilities(phi)
    vals = locally_constant_values(fmap, phi)
    p = np.exp(vals - vals.max())
    p /= p.sum()
    next_probs = np.tile(p, (fmap.m, 1))
    return _finish(fmap, 1, p, next_probs, "BernoulliFromLocallyConstant", phi)


def markov_measure_from_matrix(fmap: MapSpec, phi: Potential, depth: int) -> MeasureApprox:
    """Depth-k Markov approximation to the equilibrium state of phi.

    With A the cylinder weight matrix, v and u its right and left Perron
    vectors and rho its eigenvalue, the chain has transitions
    P(s -> s') = A[s, s'] v[s'] / (rho v[s]) and stationary law u v.
    """
    if depth < 1:
        raise DomainError("depth must be >= 1")
    m = fmap.m
    lw = transition_log_weights(fmap, phi, depth)
    res = perron(lw, m, depth, want_left=True)
    v = np.abs(res.right)
    u = np.abs(res.left)
    top = m ** (depth - 1)
    states = np.arange(m ** depth)
    targets = (states % top)[:, None] * m + np.arange(m)[None, :]
    A = np.exp(lw - res.log_radius)
    P = _normalise_rows(A * v[targets] / v[:, None])
    pi = u * v
    pi /= pi.sum()
    mu = _finish(fmap, depth, pi, P, "MarkovFromMatrix")
    # integral at the same representatives that define the matrix
    mu.potential_integral = float(np.sum(pi[:, None] * P * lw))
    return mu


def orbit_measure(fmap: MapSpec, word: Sequence[int], phi: Potential | None = None,
                  budget: int = DEFAULT_CYLINDER_BUDGET) -> MeasureApprox:
    """Equidistribution on the periodic orbit with the given itinerary."""
    word = tuple(int(s) for s in word)
    n = len(word)
    m = fmap.m
    count = check_budget(m, n, budget)
    idx = np.array([encode(word, m)], dtype=np.int64)
    orbit = {int(idx[0])}
    cur = idx
    for _ in range(n - 1):
        cur = rotate(cur, m, n)
        orbit.add(int(cur[0]))
    block = np.zeros(count)
    block[list(orbit)] = 1.0 / len(orbit)
    nxt = np.full((count, m), 1.0 / m)
    for s in orbit:
        nxt[s] = 0.0
        nxt[s, s // m ** (n - 1)] = 1.0
    lyap = periodic_orbit(fmap, word).birkhoff_log_deriv / n
    mu = _finish(fmap, n, block, nxt, "PeriodicOrbitEquidistribution", lyapunov=lyap)
    if phi is not None:
        table = periodic_table(fmap, n, budget=budget)
        mu.potential_integral = float(periodic_birkhoff(fmap, phi, table)[idx[0]]) / n
    return mu


# ------------------------------------------------------------------- checks


def check_gibbs(measure: MeasureApprox, phi: Potential, P: float, depth: int,
                budget: int = DEFAULT_CYLINDER_BUDGET) -> GibbsCheckReport:
    """Smallest C with 1/C <= mu(C_w) / exp(-nP + S_n phi) <= C for |w| <= depth.

    S_n phi is taken at the periodic point of each word, which is a point
    of the cylinder.
    """
    if depth < 1:
        raise DomainError("depth must be >= 1")
    fmap = measure.fmap
    best, worst = 1.0, ()
    for n in range(1, depth + 1):
        check_budget(fmap.m, n, budget)
        table = periodic_table(fmap, n, budget=budget)
        s = periodic_birkhoff(fmap, phi, table)
        with np.errstate(divide="ignore"):
            log_ratio = np.log(measure.weights(n)) - (s - n * P)
        dev = np.abs(log_ratio)
        i = int(np.argmax(dev))
        c = math.exp(dev[i])
        if c > best:
            best, worst = c, decode(i, fmap.m, n)
    return GibbsCheckReport(depth, best, worst, float(P))


def equilibrium_check(measure: MeasureApprox, phi: Potential, P: float) -> float:
    """Free-energy defect P - (h(mu) + int phi d mu)."""
    return float(P - (measure.entropy + integrate(measure, phi)))


# -------------------------------------------------------------- ball masses


def interval_mass(measure: MeasureApprox, a: float, b: float, resolution: float = 1e-3,
                  max_depth: int | None = None) -> float:
    """mu((a, b)) by cylinder descent with length-prorated boundary cylinders.

    Cylinders inside (a, b) contribute fully; cylinders straddling an end
    are refined until shorter than ``resolution * (b - a)`` and then
    prorated by overlap length.
    """
    fmap = measure.fmap
    m = fmap.m
    a, b = max(a, 0.0), min(b, 1.0)
    if b <= a:
        return 0.0
    cap = int(MAX_INDEX_DEPTH_BITS / math.log2(m)) if m > 1 else 64
    max_depth = cap if max_depth is None else min(max_depth, cap)
    target = resolution * (b - a)
    total = 0.0
    words = np.arange(m, dtype=np.int64)
    n = 1
    while True:
        lo, hi = pullback(fmap, words, n)
        inside = (lo >= a) & (hi <= b)
        partial = (hi > a) & (lo < b) & ~inside
        w = measure.word_weights(words, n)
        total += float(w[inside].sum())
        if not np.any(partial):
            return total
        lengths = hi[partial] - lo[partial]
        if np.all(lengths <= target):
            overlap = np.minimum(hi, b) - np.maximum(lo, a)
            frac = overlap[partial] / np.where(lengths > 0, lengths, 1.0)
            return total + float(np.dot(w[partial], frac))
        if n >= max_depth:
            raise DepthError(
                f"cylinders at depth {n} (length {lengths.max():.3g}) cannot resolve "
                f"an interval of length {b - a:.3g}")
        parents = words[partial]
        words = (parents[:, None] * m + np.arange(m)[None, :]).reshape(-1)
        n += 1


__all__ = [
    "BudgetError",
    "GibbsCheckReport",
    "MeasureApprox",
    "bernoulli_measure",
    "check_gibbs",
    "equilibrium_check",
    "integrate",
    "interval_mass",
    "lyapunov_exponent",
    "markov_measure_from_matrix",
    "orbit_measure",
]
