"""Symbolic coding of full-branch maps: cylinders, itineraries, periodic points.

Words of length n over an m-letter alphabet are encoded as integers in
base m with the first symbol most significant; ``rotate`` realises the
shift on periodic words.
"""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import BudgetError, ConvergenceError, DomainError
from .maps import MapSpec, Potential, chebyshev_conjugacy

DEFAULT_CYLINDER_BUDGET = 10**7
PERIODIC_TOL = 1e-12
_INVERSE_ITER_TOL = 1e-14
_INVERSE_ITER_MAX = 200


@dataclass(frozen=True)
class Cylinder:
    word: tuple[int, ...]
    interval: tuple[float, float]
    representative: float

    @property
    def length(self) -> float:
        return self.interval[1] - self.interval[0]


@dataclass(frozen=True)
class PeriodicOrbit:
    word: tuple[int, ...]
    point: float
    birkhoff_log_deriv: float

    @property
    def period(self) -> int:
        return len(self.word)


@dataclass(frozen=True)
class PeriodicTable:
    """All period-n points of a full-branch map, indexed by encoded word."""

    m: int
    n: int
    points: np.ndarray
    logd: np.ndarray  # log|Df| at each point
    birkhoff: np.ndarray  # sum of log|Df| along the orbit

    @property
    def first_symbol(self) -> np.ndarray:
        return np.arange(self.m ** self.n) // self.m ** (self.n - 1)

    def word(self, index: int) -> tuple[int, ...]:
        return decode(index, self.m, self.n)


def check_budget(m: int, n: int, budget: int = DEFAULT_CYLINDER_BUDGET) -> int:
    count = m ** n
    if count > budget:
        raise BudgetError(f"{m}^{n} = {count} words exceeds the budget {budget}")
    return count


def encode(word: Sequence[int], m: int) -> int:
    idx = 0
    for s in word:
        idx = idx * m + int(s)
    return idx


def decode(index: int, m: int, n: int) -> tuple[int, ...]:
    out = []
    for _ in range(n):
        index, s = divmod(index, m)
        out.append(s)
    return tuple(reversed(out))


def digit(idx: np.ndarray, m: int, n: int, position: int) -> np.ndarray:
    """Symbol at ``position`` (0 = first) of every encoded word."""
    return (idx // m ** (n - 1 - position)) % m


def rotate(idx: np.ndarray, m: int, n: int) -> np.ndarray:
    """Encoded word of sigma(w): drop the first symbol, append it at the end."""
    top = m ** (n - 1)
    return (idx % top) * m + idx // top


def word_to_str(word: Sequence[int]) -> str:
    return "".join(str(s) for s in word) if all(s < 10 for s in word) else "-".join(map(str, word))


def word_from_str(text: str) -> tuple[int, ...]:
    return tuple(int(s) for s in (text.split("-") if "-" in text else text))


# ------------------------------------------------------------------ cylinders


def _affine_inverse_coeffs(fmap: MapSpec) -> tuple[np.ndarray, np.ndarray]:
    alpha = np.array([b.orientation * b.length for b in fmap.branches])
    beta = np.array([b.domain[0] if b.orientation > 0 else b.domain[1] for b in fmap.branches])
    return alpha, beta


def pullback(fmap: MapSpec, words: np.ndarray, n: int, lo: np.ndarray | float = 0.0,
             hi: np.ndarray | float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    """Image of [lo, hi] under the inverse-branch composition g_{w_0} o ... o g_{w_{n-1}}."""
    words = np.asarray(words)
    lo = np.broadcast_to(np.asarray(lo, dtype=float), words.shape).copy()
    hi = np.broadcast_to(np.asarray(hi, dtype=float), words.shape).copy()
    m = fmap.m
    if fmap.is_piecewise_linear:
        # compose the affine inverse branches into A y + B
        alpha, beta = _affine_inverse_coeffs(fmap)
        A = np.ones(words.shape)
        B = np.zeros(words.shape)
        for pos in range(n - 1, -1, -1):
            s = digit(words, m, n, pos)
            A, B = alpha[s] * A, alpha[s] * B + beta[s]
        a, b = A * lo + B, A * hi + B
        return np.minimum(a, b), np.maximum(a, b)
    for pos in range(n - 1, -1, -1):
        s = digit(words, m, n, pos)
        a = fmap.inverse_on(lo, s)
        b = fmap.inverse_on(hi, s)
        lo, hi = np.minimum(a, b), np.maximum(a, b)
    return lo, hi


def cylinder_intervals(fmap: MapSpec, k: int,
                       budget: int = DEFAULT_CYLINDER_BUDGET) -> tuple[np.ndarray, np.ndarray]:
    if k < 1:
        raise DomainError("cylinder depth must be >= 1")
    count = check_budget(fmap.m, k, budget)
    return pullback(fmap, np.arange(count), k)


def enumerate_cylinders(fmap: MapSpec, depth: int,
                        budget: int = DEFAULT_CYLINDER_BUDGET) -> list[Cylinder]:
    """All m^k cylinders of length ``depth`` in lexicographic word order.

    The representative of each cylinder is the periodic point of its
    cyclically repeated word.
    """
    if not fmap.markov:
        raise DomainError("cylinder enumeration needs a Markov map")
    lo, hi = cylinder_intervals(fmap, depth, budget)
    reps = periodic_table(fmap, depth, budget=budget).points
    m = fmap.m
    return [Cylinder(decode(i, m, depth), (float(lo[i]), float(hi[i])), float(reps[i]))
            for i in range(m ** depth)]


# ------------------------------------------------------------ periodic points


def _affine_points(fmap: MapSpec, idx: np.ndarray, n: int,
                   alpha: np.ndarray, beta: np.ndarray) -> np.ndarray:
    A = np.ones(idx.shape)
    B = np.zeros(idx.shape)
    for pos in range(n - 1, -1, -1):
        s = digit(idx, fmap.m, n, pos)
        A, B = alpha[s] * A, alpha[s] * B + beta[s]
    return np.clip(B / (1.0 - A), 0.0, 1.0)


def _compose_forward(fmap: MapSpec, x: np.ndarray, idx: np.ndarray, n: int) -> np.ndarray:
    for pos in range(n):
        x = fmap.forward_on(x, digit(idx, fmap.m, n, pos))
    return x


def _bisection_points(fmap: MapSpec, idx: np.ndarray, n: int,
                      lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    # f^n maps the cylinder onto [0, 1], so f^n(x) - x changes sign on it
    lo = lo.copy()
    hi = hi.copy()
    g_lo = _compose_forward(fmap, lo, idx, n) - lo
    g_hi = _compose_forward(fmap, hi, idx, n) - hi
    exact_lo = g_lo == 0.0
    exact_hi = g_hi == 0.0
    s_lo = np.sign(g_lo)
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        s_mid = np.sign(_compose_forward(fmap, mid, idx, n) - mid)
        move_lo = s_mid == s_lo
        lo = np.where(move_lo, mid, lo)
        hi = np.where(move_lo, hi, mid)
    x = 0.5 * (lo + hi)
    x = np.where(exact_hi, hi, x)
    return np.where(exact_lo, lo, x)


def _inverse_iteration_points(fmap: MapSpec, idx: np.ndarray, n: int) -> np.ndarray:
    lo, hi = pullback(fmap, idx, n)
    x = 0.5 * (lo + hi)
    done = np.zeros(idx.shape, dtype=bool)
    for _ in range(_INVERSE_ITER_MAX):
        y, _ = pullback(fmap, idx, n, x, x)
        delta = np.abs(y - x)
        x = y
        done = delta < _INVERSE_ITER_TOL
        if np.all(done):
            break
    if not np.all(done):
        stuck = ~done
        x[stuck] = _bisection_points(fmap, idx[stuck], n, lo[stuck], hi[stuck])
    return x


def periodic_points_for_words(fmap: MapSpec, idx: np.ndarray, n: int
                              ) -> tuple[np.ndarray, np.ndarray]:
    """Periodic points of the words ``idx`` (encoded, length n) and log|Df| there.

    The log-derivative is evaluated on the branch named by the word's first
    symbol, which matters for points sitting on a branch endpoint.
    """
    idx = np.asarray(idx, dtype=np.int64)
    first = digit(idx, fmap.m, n, 0)
    solver = fmap.periodic_solver
    if solver == "affine":
        alpha, beta = _affine_inverse_coeffs(fmap)
        x = _affine_points(fmap, idx, n, alpha, beta)
        logd = np.log(np.array([b.slope for b in fmap.branches]))[first]
        return x, logd
    if solver == "tent_conjugacy":
        # Chebyshev: compute on the tent model, where everything is affine
        alpha = np.array([0.5, -0.5])
        beta = np.array([0.0, 1.0])
        y = _affine_points(fmap, idx, n, alpha, beta)
        x = chebyshev_conjugacy(y)
        with np.errstate(divide="ignore"):
            logd = np.log(4.0 * np.abs(np.cos(np.pi * y)))
        return x, logd
    if solver == "bisection":
        lo, hi = pullback(fmap, idx, n)
        x = _bisection_points(fmap, idx, n, lo, hi)
    elif solver == "inverse_iteration":
        x = _inverse_iteration_points(fmap, idx, n)
    else:
        raise DomainError(f"unknown periodic solver {solver!r}")
    lo, hi = pullback(fmap, idx, n, x, x)
    resid = np.abs(lo - x)
    if np.any(resid > PERIODIC_TOL):
        bad = int(idx[np.argmax(resid)])
        raise ConvergenceError(
            f"periodic point for word {decode(bad, fmap.m, n)} has residual {resid.max():.3g}")
    return x, fmap.log_abs_deriv_on(x, first)


def _orbit_sums(values: np.ndarray, m: int, n: int) -> np.ndarray:
    """sum_j values[sigma^j w] for every encoded word w (in-place safe)."""
    total = np.zeros_like(values)
    idx = np.arange(values.size)
    for _ in range(n):
        total += values[idx]
        idx = rotate(idx, m, n)
    return total


def periodic_table(fmap: MapSpec, n: int, budget: int = DEFAULT_CYLINDER_BUDGET,
                   cache: "PeriodicCache | None" = None) -> PeriodicTable:
    """Every period-n point (one per word, non-primitive words retained)."""
    if n < 1:
        raise DomainError("period must be >= 1")
    memo = fmap.__dict__.setdefault("_periodic_memo", {})
    if n in memo:
        return memo[n]
    count = check_budget(fmap.m, n, budget)
    table = cache.load(fmap, n) if cache is not None else None
    if table is None:
        idx = np.arange(count, dtype=np.int64)
        points, logd_exact = periodic_points_for_words(fmap, idx, n)
        birkhoff = _orbit_sums(logd_exact, fmap.m, n)
        # Recompute log|Df| from the stored points so that cached and fresh
        # tables are bit-identical.
        table = _table_from_points(fmap, n, points, birkhoff)
        if cache is not None:
            cache.save(fmap, table)
    memo[n] = table
    return table


def _table_from_points(fmap: MapSpec, n: int, points: np.ndarray,
                       birkhoff: np.ndarray) -> PeriodicTable:
    first = np.arange(points.size) // fmap.m ** (n - 1)
    if fmap.periodic_solver == "affine":
        logd = np.log(np.array([b.slope for b in fmap.branches]))[first]
    else:
        logd = fmap.log_abs_deriv_on(points, first)
    return PeriodicTable(fmap.m, n, points, logd, birkhoff)


def locate_periodic(fmap: MapSpec, period: int,
                    budget: int = DEFAULT_CYLINDER_BUDGET) -> list[PeriodicOrbit]:
    """One record per length-``period`` word, in lexicographic order."""
    table = periodic_table(fmap, period, budget=budget)
    return [PeriodicOrbit(table.word(i), float(table.points[i]), float(table.birkhoff[i]))
            for i in range(table.points.size)]


def periodic_orbit(fmap: MapSpec, word: Sequence[int]) -> PeriodicOrbit:
    """Periodic point and Birkhoff log-derivative of a single word."""
    n = len(word)
    if n == 0:
        raise DomainError("empty word")
    m = fmap.m
    idx = np.array([encode(word, m)], dtype=np.int64)
    rots = [idx]
    for _ in range(n - 1):
        rots.append(rotate(rots[-1], m, n))
    all_idx = np.concatenate(rots)
    points, logd = periodic_points_for_words(fmap, all_idx, n)
    return PeriodicOrbit(tuple(int(s) for s in word), float(points[0]), float(math.fsum(logd)))


def orbit_points(fmap: MapSpec, word: Sequence[int]) -> tuple[np.ndarray, np.ndarray]:
    """Points f^j(x) and log|Df| there, j < n, for the periodic point of ``word``."""
    n = len(word)
    m = fmap.m
    idx = [encode(word, m)]
    for _ in range(n - 1):
        idx.append(int(rotate(np.array(idx[-1]), m, n)))
    return periodic_points_for_words(fmap, np.array(idx, dtype=np.int64), n)


def itinerary(fmap: MapSpec, x: float, length: int) -> tuple[int, ...]:
    """First ``length`` symbols of x; shared endpoints take the left branch."""
    if not 0.0 <= x <= 1.0:
        raise DomainError(f"x={x!r} lies outside [0, 1]")
    word = []
    y = np.array([float(x)])
    for _ in range(length):
        s = fmap.branch_index(y)
        word.append(int(s[0]))
        y = fmap.forward_on(y, s)
    return tuple(word)


# --------------------------------------------------------------- birkhoff sums


def split_potential(phi: Potential) -> tuple[float, list[tuple[float, Potential]]]:
    """Write phi as -t log|Df| + sum c_i psi_i with no geometric part in psi_i."""
    from .maps import Combined, Geometric

    if isinstance(phi, Geometric):
        return phi.t, []
    if isinstance(phi, Combined):
        t_base, rest = split_potential(phi.base)
        return phi.t + phi.q * t_base, [(phi.q * c, p) for c, p in rest if phi.q != 0.0]
    return 0.0, [(1.0, phi)]


def point_values(fmap: MapSpec, phi: Potential, table: PeriodicTable) -> np.ndarray:
    """phi at every point of the table."""
    t, rest = split_potential(phi)
    first = table.first_symbol
    out = -t * table.logd if t != 0.0 else np.zeros_like(table.points)
    for c, psi in rest:
        out = out + c * psi.values(fmap, table.points, first)
    return out


def periodic_birkhoff(fmap: MapSpec, phi: Potential, table: PeriodicTable) -> np.ndarray:
    """S_n phi at every period-n point."""
    t, rest = split_potential(phi)
    out = -t * table.birkhoff if t != 0.0 else np.zeros_like(table.points)
    first = table.first_symbol
    for c, psi in rest:
        vals = psi.values(fmap, table.points, first)
        out = out + c * _orbit_sums(vals, table.m, table.n)
    return out


# --------------------------------------------------------------------- cache


class PeriodicCache:
    """On-disk CSV cache of periodic tables keyed by the map's content hash."""

    HEADER = ("period", "word", "point", "birkhoff_log_deriv")

    def __init__(self, directory: str | os.PathLike):
        self.directory = Path(directory)

    def path(self, fmap: MapSpec, n: int) -> Path:
        return self.directory / f"{fmap.name}-{fmap.key}-p{n}.csv"

    def load(self, fmap: MapSpec, n: int) -> PeriodicTable | None:
        path = self.path(fmap, n)
        if not path.exists():
            return None
        count = fmap.m ** n
        points = np.empty(count)
        birk = np.empty(count)
        with path.open(newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if tuple(header or ()) != self.HEADER:
                return None
            rows = 0
            for row in reader:
                i = encode(word_from_str(row[1]), fmap.m)
                points[i] = float(row[2])
                birk[i] = float(row[3])
                rows += 1
        if rows != count:
            return None
        return _table_from_points(fmap, n, points, birk)

    def save(self, fmap: MapSpec, table: PeriodicTable) -> Path:
        self.directory.mkdir(parents=True, exist_ok=True)
        path = self.path(fmap, table.n)
        tmp = path.with_suffix(".tmp")
        with tmp.open("w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(self.HEADER)
            for i in range(table.points.size):
                writer.writerow((table.n, word_to_str(table.word(i)),
                                 repr(float(table.points[i])), repr(float(table.birkhoff[i]))))
        tmp.replace(path)
        return path


def all_words(m: int, n: int) -> Iterable[tuple[int, ...]]:
    for i in range(m ** n):
        yield decode(i, m, n)
