"""Full-branch Markov interval maps, built-in families and potentials.

Every map is a finite list of branches, each a monotone bijection of its
domain onto [0, 1].  All evaluation helpers accept numpy arrays; the scalar
operations ``evaluate``, ``log_abs_deriv`` and ``potential_at`` add the
error checks required at the public surface.  Logarithms are natural.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Mapping, Sequence

import numpy as np

from .errors import ConfigError, CriticalPointError, DomainError

ArrayFn = Callable[[np.ndarray], np.ndarray]

DEFAULT_DERIV_FLOOR = 1e-300


@dataclass(frozen=True)
class Branch:
    """One monotone piece of the map, sending ``domain`` onto [0, 1]."""

    domain: tuple[float, float]
    forward: ArrayFn
    derivative: ArrayFn
    orientation: int
    inverse: ArrayFn | None = None
    # |Df| on the branch when it is affine; None for nonlinear branches.
    slope: float | None = None

    @property
    def length(self) -> float:
        return self.domain[1] - self.domain[0]


@dataclass(frozen=True)
class AnalyticMetadata:
    """Closed-form facts about a family; consumed only by test oracles."""

    closed_form_pressure: str | None = None
    known_acip_lyapunov: float | None = None
    known_topological_entropy: float | None = None
    critical_order: float | None = None


@dataclass(frozen=True, eq=False)
class MapSpec:
    name: str
    branches: tuple[Branch, ...]
    critical_points: tuple[float, ...] = ()
    markov: bool = True
    analytic_metadata: AnalyticMetadata | None = None
    params: Mapping[str, object] = field(default_factory=dict)
    # How periodic points are located: "affine", "tent_conjugacy",
    # "inverse_iteration" or "bisection".
    periodic_solver: str = "inverse_iteration"
    # False for fixtures with a parabolic fixed point (no uniform expansion)
    in_model_class: bool = True
    deriv_floor: float = DEFAULT_DERIV_FLOOR

    def __post_init__(self) -> None:
        if not self.branches:
            raise DomainError("a map needs at least one branch")
        edges = [b.domain for b in self.branches]
        if abs(edges[0][0]) > 1e-12 or abs(edges[-1][1] - 1.0) > 1e-12:
            raise DomainError("branch domains must cover [0, 1]")
        for (_, right), (left, _) in zip(edges, edges[1:]):
            if abs(right - left) > 1e-12:
                raise DomainError("branch domains must be contiguous")
        object.__setattr__(
            self, "_breaks", np.array([b.domain[1] for b in self.branches[:-1]], dtype=float)
        )

    @property
    def m(self) -> int:
        return len(self.branches)

    @property
    def is_piecewise_linear(self) -> bool:
        return all(b.slope is not None for b in self.branches)

    @property
    def key(self) -> str:
        """Content hash of the family name and parameters (cache key)."""
        payload = json.dumps({"family": self.name, "params": dict(self.params)},
                             sort_keys=True, default=str)
        return hashlib.sha256(payload.encode()).hexdigest()[:16]

    def branch_index(self, x: np.ndarray | float) -> np.ndarray:
        # points on a shared endpoint take the left branch
        return np.searchsorted(self._breaks, np.asarray(x, dtype=float), side="left")

    def forward_on(self, x: np.ndarray, branch: np.ndarray) -> np.ndarray:
        """Apply the forward rule of the given branch (no tie-breaking)."""
        x = np.asarray(x, dtype=float)
        branch = np.broadcast_to(branch, x.shape)
        out = np.empty_like(x)
        for i, b in enumerate(self.branches):
            sel = branch == i
            if np.any(sel):
                out[sel] = b.forward(x[sel])
        return np.clip(out, 0.0, 1.0)

    def derivative_on(self, x: np.ndarray, branch: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        branch = np.broadcast_to(branch, x.shape)
        out = np.empty_like(x)
        for i, b in enumerate(self.branches):
            sel = branch == i
            if np.any(sel):
                out[sel] = b.derivative(x[sel])
        return out

    def inverse_on(self, y: np.ndarray, branch: np.ndarray) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        branch = np.broadcast_to(branch, y.shape)
        out = np.empty_like(y)
        for i, b in enumerate(self.branches):
            sel = branch == i
            if np.any(sel):
                if b.inverse is None:
                    raise DomainError(f"branch {i} of {self.name} has no inverse rule")
                out[sel] = b.inverse(y[sel])
        return out

    def forward(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return self.forward_on(x, self.branch_index(x))

    def log_abs_deriv_on(self, x: np.ndarray, branch: np.ndarray) -> np.ndarray:
        """log|Df| without the floor check (vectorised internal helper)."""
        x = np.asarray(x, dtype=float)
        branch = np.broadcast_to(branch, x.shape)
        out = np.empty_like(x)
        for i, b in enumerate(self.branches):
            sel = branch == i
            if not np.any(sel):
                continue
            if b.slope is not None:
                out[sel] = math.log(b.slope)
            else:
                with np.errstate(divide="ignore"):
                    out[sel] = np.log(np.abs(b.derivative(x[sel])))
        return out

    def __call__(self, x: float) -> float:
        return evaluate(self, x)


def _check_unit(x: float) -> float:
    x = float(x)
    if not (0.0 <= x <= 1.0):
        raise DomainError(f"x={x!r} lies outside [0, 1]")
    return x


def evaluate(fmap: MapSpec, x: float) -> float:
    """f(x) for a single point of [0, 1]."""
    x = _check_unit(x)
    return float(fmap.forward(np.array([x]))[0])


def log_abs_deriv(fmap: MapSpec, x: float, deriv_floor: float | None = None) -> float:
    """log|Df(x)| in nats; raises CriticalPointError below the derivative floor."""
    x = _check_unit(x)
    floor = fmap.deriv_floor if deriv_floor is None else deriv_floor
    idx = fmap.branch_index(np.array([x]))
    d = abs(float(fmap.derivative_on(np.array([x]), idx)[0]))
    if d < floor:
        raise CriticalPointError(f"|Df({x})| = {d:g} is below the floor {floor:g}")
    return math.log(d)


# ---------------------------------------------------------------- potentials


@dataclass(frozen=True)
class Potential:
    holder_exponent_hint: float | None = field(default=None, kw_only=True)

    has_geometric_part = False

    def values(self, fmap: MapSpec, x: np.ndarray, branch: np.ndarray,
               logd: np.ndarray | None = None) -> np.ndarray:
        """phi at points ``x`` lying in branches ``branch``.

        ``logd`` optionally supplies precomputed log|Df| at ``x`` (used where
        a more accurate value than direct evaluation is available).
        """
        raise NotImplementedError

    def is_locally_constant(self, fmap: MapSpec) -> bool:
        return False


@dataclass(frozen=True)
class Geometric(Potential):
    """-t log|Df|."""

    t: float = 1.0

    @property
    def has_geometric_part(self) -> bool:  # type: ignore[override]
        return self.t != 0.0

    def values(self, fmap, x, branch, logd=None):
        x = np.asarray(x, dtype=float)
        if self.t == 0.0:
            return np.zeros_like(x)
        if logd is None:
            logd = fmap.log_abs_deriv_on(x, branch)
        return -self.t * np.asarray(logd, dtype=float)

    def is_locally_constant(self, fmap):
        return self.t == 0.0 or fmap.is_piecewise_linear


@dataclass(frozen=True)
class LocallyConstant(Potential):
    """One value (nats) per branch."""

    values_per_branch: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        vals = tuple(float(v) for v in self.values_per_branch)
        if not all(math.isfinite(v) for v in vals):
            raise DomainError("locally constant potential values must be finite")
        object.__setattr__(self, "values_per_branch", vals)

    def values(self, fmap, x, branch, logd=None):
        if len(self.values_per_branch) != fmap.m:
            raise DomainError(
                f"{len(self.values_per_branch)} values for a {fmap.m}-branch map")
        table = np.asarray(self.values_per_branch)
        return table[np.broadcast_to(branch, np.shape(x))].astype(float)

    def is_locally_constant(self, fmap):
        return True

    @classmethod
    def from_probabilities(cls, probs: Sequence[float]) -> "LocallyConstant":
        return cls(tuple(math.log(p) for p in probs))


@dataclass(frozen=True)
class Pointwise(Potential):
    rule: Callable[[np.ndarray], np.ndarray] = field(default=lambda x: np.zeros_like(x))

    def values(self, fmap, x, branch, logd=None):
        return np.asarray(self.rule(np.asarray(x, dtype=float)), dtype=float)


@dataclass(frozen=True)
class Combined(Potential):
    """-t log|Df| + q * base."""

    t: float = 0.0
    q: float = 1.0
    base: Potential = field(default_factory=lambda: LocallyConstant(()))

    @property
    def has_geometric_part(self) -> bool:  # type: ignore[override]
        return self.t != 0.0 or (self.q != 0.0 and self.base.has_geometric_part)

    def values(self, fmap, x, branch, logd=None):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        if self.t != 0.0:
            out += Geometric(self.t).values(fmap, x, branch, logd)
        if self.q != 0.0:
            out += self.q * self.base.values(fmap, x, branch, logd)
        return out

    def is_locally_constant(self, fmap):
        geo_ok = self.t == 0.0 or fmap.is_piecewise_linear
        return geo_ok and (self.q == 0.0 or self.base.is_locally_constant(fmap))


def constant_potential(fmap: MapSpec, c: float) -> LocallyConstant:
    return LocallyConstant((float(c),) * fmap.m)


def potential_at(fmap: MapSpec, phi: Potential, x: float) -> float:
    """phi(x); geometric parts raise CriticalPointError near critical points."""
    x = _check_unit(x)
    if phi.has_geometric_part:
        log_abs_deriv(fmap, x)
    arr = np.array([x])
    return float(phi.values(fmap, arr, fmap.branch_index(arr))[0])


def locally_constant_values(fmap: MapSpec, phi: Potential) -> np.ndarray:
    """Per-branch values of a potential that is constant on each branch."""
    if not phi.is_locally_constant(fmap):
        raise DomainError("potential is not constant on branches of this map")
    mids = np.array([0.5 * (b.domain[0] + b.domain[1]) for b in fmap.branches])
    return phi.values(fmap, mids, np.arange(fmap.m))


# ------------------------------------------------------------------ families


def _affine_branch(a: float, b: float, orientation: int) -> Branch:
    width = b - a
    if width <= 0:
        raise DomainError("breakpoints must be strictly increasing")
    if orientation > 0:
        return Branch(
            domain=(a, b),
            forward=lambda x: (x - a) / width,
            derivative=lambda x: np.full_like(np.asarray(x, dtype=float), 1.0 / width),
            orientation=1,
            inverse=lambda y: a + y * width,
            slope=1.0 / width,
        )
    return Branch(
        domain=(a, b),
        forward=lambda x: (b - x) / width,
        derivative=lambda x: np.full_like(np.asarray(x, dtype=float), -1.0 / width),
        orientation=-1,
        inverse=lambda y: b - y * width,
        slope=1.0 / width,
    )


def piecewise_linear(breakpoints: Sequence[float],
                     orientations: Sequence[int] | None = None,
                     name: str = "piecewise_linear") -> MapSpec:
    """Full-branch piecewise-linear map with the given interior breakpoints."""
    edges = [0.0, *[float(b) for b in breakpoints], 1.0]
    m = len(edges) - 1
    orient = [1] * m if orientations is None else [int(o) for o in orientations]
    if len(orient) != m or any(o not in (1, -1) for o in orient):
        raise DomainError("orientations must be +1/-1, one per branch")
    branches = tuple(_affine_branch(edges[i], edges[i + 1], orient[i]) for i in range(m))
    htop = math.log(m)
    params = {"breakpoints": [repr(float(b)) for b in breakpoints], "orientations": orient}
    meta = AnalyticMetadata(
        closed_form_pressure="log_sum_branch_lengths_pow_t",
        known_acip_lyapunov=-sum(b.length * math.log(b.length) for b in branches),
        known_topological_entropy=htop,
    )
    return MapSpec(name=name, branches=branches, markov=True, analytic_metadata=meta,
                   params=params, periodic_solver="affine")


def doubling() -> MapSpec:
    fmap = piecewise_linear([0.5], name="doubling")
    object.__setattr__(fmap, "params", {})
    return fmap


def tent(peak: float = 0.5, slope: float | None = None) -> MapSpec:
    """Full-branch tent map; a symmetric tent is full only for slope 2."""
    if slope is not None and abs(slope - 2.0) > 1e-12:
        raise DomainError("only full-branch tents are supported (slope 2, or set peak)")
    if not 0.0 < peak < 1.0:
        raise DomainError("tent peak must lie in (0, 1)")
    fmap = piecewise_linear([peak], orientations=(1, -1), name="tent")
    object.__setattr__(fmap, "params", {"peak": repr(float(peak))})
    return fmap


def chebyshev() -> MapSpec:
    """x -> 4x(1-x), conjugate to the slope-2 tent map by sin^2(pi y / 2)."""
    left = Branch(
        domain=(0.0, 0.5),
        forward=lambda x: 4.0 * x * (1.0 - x),
        derivative=lambda x: 4.0 - 8.0 * x,
        orientation=1,
        inverse=lambda y: 0.5 * (1.0 - np.sqrt(np.clip(1.0 - y, 0.0, 1.0))),
    )
    right = Branch(
        domain=(0.5, 1.0),
        forward=lambda x: 4.0 * x * (1.0 - x),
        derivative=lambda x: 4.0 - 8.0 * x,
        orientation=-1,
        inverse=lambda y: 0.5 * (1.0 + np.sqrt(np.clip(1.0 - y, 0.0, 1.0))),
    )
    meta = AnalyticMetadata(
        closed_form_pressure="max((1-t)log2,-2t*log2)",
        known_acip_lyapunov=math.log(2.0),
        known_topological_entropy=math.log(2.0),
        critical_order=2.0,
    )
    return MapSpec(name="chebyshev", branches=(left, right), critical_points=(0.5,),
                   analytic_metadata=meta, params={}, periodic_solver="tent_conjugacy")


def chebyshev_conjugacy(y: np.ndarray) -> np.ndarray:
    """h(y) = sin^2(pi y / 2), with f o h = h o tent."""
    return np.sin(0.5 * np.pi * np.asarray(y, dtype=float)) ** 2


def _solve_increasing(h: ArrayFn, dh: ArrayFn, target: np.ndarray, start: np.ndarray,
                      lo: float, hi: float) -> np.ndarray:
    # Newton from the right on a convex increasing function; bounded to [lo, hi]
    x = np.clip(np.asarray(start, dtype=float), lo, hi)
    for _ in range(100):
        step = (h(x) - target) / dh(x)
        x_new = np.clip(x - step, lo, hi)
        if np.all(np.abs(x_new - x) <= 1e-16 * np.maximum(1.0, np.abs(x))):
            return x_new
        x = x_new
    return x


def manneville_pomeau(gamma: float = 0.5) -> MapSpec:
    """x -> x + x^(1+gamma) mod 1.

    Test fixture only: the neutral fixed point at 0 puts this map outside
    the non-flat, non-parabolic class the theory is stated for.
    """
    if gamma <= 0:
        raise DomainError("gamma must be positive")
    g1 = 1.0 + gamma

    def h(x):
        return x + np.power(x, g1)

    def dh(x):
        return 1.0 + g1 * np.power(x, gamma)

    lo_c, hi_c = 0.0, 1.0
    for _ in range(200):
        mid = 0.5 * (lo_c + hi_c)
        if mid + mid ** g1 < 1.0:
            lo_c = mid
        else:
            hi_c = mid
    c = 0.5 * (lo_c + hi_c)

    left = Branch(
        domain=(0.0, c),
        forward=h,
        derivative=dh,
        orientation=1,
        inverse=lambda y: _solve_increasing(h, dh, y, y, 0.0, c),
    )
    right = Branch(
        domain=(c, 1.0),
        forward=lambda x: h(x) - 1.0,
        derivative=dh,
        orientation=1,
        inverse=lambda y: _solve_increasing(h, dh, np.asarray(y) + 1.0,
                                            np.ones_like(np.asarray(y, dtype=float)), c, 1.0),
    )
    meta = AnalyticMetadata(known_topological_entropy=math.log(2.0))
    return MapSpec(name="manneville_pomeau", branches=(left, right), analytic_metadata=meta,
                   params={"gamma": repr(float(gamma))}, periodic_solver="bisection",
                   in_model_class=False)


# -------------------------------------------------------------------- config

FAMILY_KEYS: dict[str, set[str]] = {
    "doubling": set(),
    "tent": {"peak", "slope"},
    "piecewise_linear": {"breakpoints", "orientations"},
    "chebyshev": set(),
    "manneville_pomeau": {"gamma"},
}


def parse_number(text: str | float) -> float:
    """Parse '0.25', '1/3' or 'log(3)' style literals."""
    if isinstance(text, (int, float)):
        return float(text)
    s = str(text).strip()
    if s.startswith("log(") and s.endswith(")"):
        return math.log(parse_number(s[4:-1]))
    if s.startswith("-log(") and s.endswith(")"):
        return -math.log(parse_number(s[5:-1]))
    try:
        return float(Fraction(s))
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"cannot parse number {text!r}") from exc


def parse_list(text: str | Sequence) -> list[float]:
    if isinstance(text, str):
        parts = [p for p in text.replace(";", ",").split(",") if p.strip()]
        return [parse_number(p) for p in parts]
    return [parse_number(p) for p in text]


def map_from_config(section: Mapping[str, str]) -> MapSpec:
    """Build a map from a ``[map]`` config section: ``family`` plus parameters."""
    if "family" not in section:
        raise ConfigError("map section needs a 'family' key")
    family = str(section["family"]).strip()
    if family not in FAMILY_KEYS:
        raise ConfigError(f"unknown map family {family!r}; known: {sorted(FAMILY_KEYS)}")
    extra = set(section) - {"family"} - FAMILY_KEYS[family]
    if extra:
        raise ConfigError(f"unknown keys for family {family!r}: {sorted(extra)}")
    try:
        if family == "doubling":
            return doubling()
        if family == "chebyshev":
            return chebyshev()
        if family == "tent":
            slope = section.get("slope")
            return tent(parse_number(section.get("peak", "0.5")),
                        None if slope is None else parse_number(slope))
        if family == "manneville_pomeau":
            return manneville_pomeau(parse_number(section.get("gamma", "0.5")))
        bps = parse_list(section.get("breakpoints", "0.5"))
        orient = section.get("orientations")
        return piecewise_linear(bps, None if orient is None else [int(v) for v in parse_list(orient)])
    except DomainError as exc:
        raise ConfigError(str(exc)) from exc
