"""Ideal measures, computable-measure descriptors, exact Prokhorov and
Wasserstein distances, staged valuations and staged integrals.
"""
from __future__ import annotations

import hashlib
import json
import threading
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Callable, Iterable, Optional, Sequence

from .cms import CantorSpace, FiniteOpenSet, IdealBall, MetricSpace, REOpenSet, UnitInterval
from .core import RatInterval, RationalLike, StagedLowerReal, as_rational, fmt_rational, pow2
from .errors import FastCauchyViolation, InvalidParameter, SupportTooLarge, UnboundedSpace
from .lsc import LscFunction, ScaleNode, SumNode, SupNode
from .transport import TransportSolution, bipartite_max_flow, solve_transport

PROKHOROV_CAP = 12
WASSERSTEIN_CAP = 64


# --------------------------------------------------------------------------
# Ideal measures
# --------------------------------------------------------------------------


class IdealMeasure:
    """Finitely many ideal points with positive rational weights summing to 1."""

    def __init__(self, atoms: Iterable[tuple[int, RationalLike]]):
        merged: dict[int, Fraction] = {}
        for i, w in atoms:
            w = as_rational(w)
            if w <= 0:
                raise InvalidParameter("atom weights must be positive")
            if i in merged:
                raise InvalidParameter(f"duplicate atom at ideal point {i}")
            merged[i] = w
        if sum(merged.values(), Fraction(0)) != 1:
            raise InvalidParameter("atom weights must sum to exactly 1")
        self._atoms = tuple(sorted(merged.items()))

    @property
    def atoms(self) -> tuple[tuple[int, Fraction], ...]:
        return self._atoms

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(i for i, _ in self.atoms)

    @property
    def weights(self) -> tuple[Fraction, ...]:
        return tuple(w for _, w in self.atoms)

    def __len__(self) -> int:
        return len(self.atoms)

    def mass(self, space: MetricSpace, balls: Sequence[IdealBall], closed: bool = False) -> Fraction:
        """Exact mass of the union of open (or closed) balls."""
        total = Fraction(0)
        for i, w in self.atoms:
            for b in balls:
                d = space.exact_distance(i, b.center)
                if d < b.radius or (closed and d == b.radius):
                    total += w
                    break
        return total

    def to_json(self) -> dict:
        return {"atoms": [{"point": i, "weight": fmt_rational(w)} for i, w in self.atoms]}

    def __eq__(self, other) -> bool:
        return isinstance(other, IdealMeasure) and self.atoms == other.atoms

    def __hash__(self) -> int:
        return hash(self.atoms)

    def __repr__(self) -> str:
        if len(self.atoms) <= 6:
            return f"IdealMeasure({[(i, str(w)) for i, w in self.atoms]})"
        return f"IdealMeasure(<{len(self.atoms)} atoms>)"


def dirac(i: int) -> IdealMeasure:
    return IdealMeasure([(i, 1)])


def convex_ideal(parts: Sequence[tuple[RationalLike, IdealMeasure]]) -> IdealMeasure:
    acc: dict[int, Fraction] = {}
    for w, mu in parts:
        for i, a in mu.atoms:
            acc[i] = acc.get(i, Fraction(0)) + as_rational(w) * a
    return IdealMeasure(acc.items())


class DyadicMidpoints(IdealMeasure):
    """Uniform weights on the ``2**(n+2)`` midpoints ``(2k+1)/2**(n+3)`` of [0, 1]."""

    def __init__(self, n: int):
        if n < 0:
            raise InvalidParameter("stage must be natural")
        self.n = n
        self.count = 2 ** (n + 2)

    @cached_property
    def _atom_cache(self):
        space = UnitInterval()
        w = Fraction(1, self.count)
        return tuple(sorted((space.index_of(Fraction(2 * k + 1, 2 * self.count)), w) for k in range(self.count)))

    @property
    def atoms(self):
        return self._atom_cache

    def __len__(self) -> int:
        return self.count

    def mass(self, space, balls, closed=False):
        if not isinstance(space, UnitInterval):
            return super().mass(space, balls, closed)
        intervals = sorted(space.ball_interval(b) for b in balls)
        merged: list[list[Fraction]] = []
        for a, b in intervals:
            if merged and (a < merged[-1][1] or (closed and a == merged[-1][1])):
                merged[-1][1] = max(merged[-1][1], b)
            else:
                merged.append([a, b])
        scale = 2 * self.count
        hits = 0
        for a, b in merged:
            A, B = a * scale, b * scale
            if closed:
                lo, hi = -((-A.numerator) // A.denominator), B.numerator // B.denominator
            else:
                lo, hi = A.numerator // A.denominator + 1, -((-B.numerator) // B.denominator) - 1
            lo, hi = max(lo, 1), min(hi, scale - 1)
            if lo <= hi:
                hits += (hi + 1) // 2 - lo // 2  # odd integers in [lo, hi]
        return Fraction(hits, self.count)

    def __repr__(self) -> str:
        return f"DyadicMidpoints(n={self.n})"


def _cylinder_weight(bits: int, length: int, p: Fraction) -> Fraction:
    ones = bin(bits & ((1 << length) - 1)).count("1")
    return p**ones * (1 - p) ** (length - ones)


class BernoulliWords(IdealMeasure):
    """All words of a fixed length (zero-padded) with i.i.d. bit weights.

    ``p`` is the probability of a 1.
    """

    def __init__(self, p: Fraction, length: int):
        self.p = p
        self.length = length

    @cached_property
    def _atom_cache(self):
        return tuple((w, _cylinder_weight(w, self.length, self.p)) for w in range(2**self.length))

    @property
    def atoms(self):
        return self._atom_cache

    def __len__(self) -> int:
        return 2**self.length

    def mass(self, space, balls, closed=False):
        if not isinstance(space, CantorSpace):
            return super().mass(space, balls, closed)
        cyls = set()
        for b in balls:
            K = space.cylinder_length(b.radius, closed=closed)
            cyls.add((b.center & ((1 << K) - 1), K))
        # drop cylinders nested in another; the rest are pairwise disjoint
        kept = [
            (u, K)
            for u, K in cyls
            if not any(K2 < K and (u & ((1 << K2) - 1)) == u2 for u2, K2 in cyls)
        ]
        L = self.length
        total = Fraction(0)
        for u, K in kept:
            if K <= L:
                total += _cylinder_weight(u, K, self.p)
            elif u >> L == 0:
                total += _cylinder_weight(u, L, self.p)
        return total

    def __repr__(self) -> str:
        return f"BernoulliWords(p={self.p}, length={self.length})"


class MixtureIdeal(IdealMeasure):
    """Convex combination of ideal measures with lazily merged atoms."""

    def __init__(self, parts: Sequence[tuple[Fraction, IdealMeasure]]):
        self.parts = tuple(parts)

    @cached_property
    def _atom_cache(self):
        return convex_ideal(self.parts).atoms

    @property
    def atoms(self):
        return self._atom_cache

    def __len__(self) -> int:
        return len(self.atoms)

    def mass(self, space, balls, closed=False):
        return sum((w * mu.mass(space, balls, closed) for w, mu in self.parts), Fraction(0))


def valuation_ideal_union(
    mu: IdealMeasure, balls: Sequence[IdealBall], space: MetricSpace, mode: str = "open"
) -> Fraction:
    if mode not in ("open", "closed"):
        raise InvalidParameter("mode is 'open' or 'closed'")
    return mu.mass(space, balls, closed=(mode == "closed"))


# --------------------------------------------------------------------------
# Exact distances between ideal measures
# --------------------------------------------------------------------------


def _distance_matrix(space: MetricSpace, xs: Sequence[int], ys: Sequence[int]) -> list[list[Fraction]]:
    return [[space.exact_distance(i, j) for j in ys] for i in xs]


def _one_sided_prokhorov(mu: IdealMeasure, nu: IdealMeasure, space: MetricSpace) -> Fraction:
    """``max_A inf{eps : mu(A) <= nu(A^eps) + eps}`` over nonempty A ⊆ supp(mu)."""
    D = _distance_matrix(space, mu.support, nu.support)
    m = len(D)
    nw = nu.weights
    best = Fraction(0)
    dist_to: list[Optional[list[Fraction]]] = [None] * (1 << m)
    mass_of = [Fraction(0)] * (1 << m)
    mw = mu.weights
    for mask in range(1, 1 << m):
        low = (mask & -mask).bit_length() - 1
        rest = mask & (mask - 1)
        mass_of[mask] = mass_of[rest] + mw[low]
        if rest:
            dist_to[mask] = [min(a, b) for a, b in zip(dist_to[rest], D[low])]
        else:
            dist_to[mask] = list(D[low])
        need = mass_of[mask]
        # nu(A^eps) counts targets with d(y, A) < eps: a left-continuous step in eps
        levels: dict[Fraction, Fraction] = {}
        for d, w in zip(dist_to[mask], nw):
            levels[d] = levels.get(d, Fraction(0)) + w
        ts = sorted(levels)
        covered = Fraction(0)
        lower_end = Fraction(0)
        value = None
        for t in ts:
            if need - covered <= t:
                value = max(lower_end, need - covered)
                break
            covered += levels[t]
            lower_end = t
        if value is None:
            value = max(lower_end, need - covered)
        if value > best:
            best = value
    return best


def prokhorov_exact(mu: IdealMeasure, nu: IdealMeasure, space: MetricSpace, cap: int = PROKHOROV_CAP) -> Fraction:
    """Exact Prokhorov distance between two ideal measures."""
    if len(mu) > cap or len(nu) > cap:
        raise SupportTooLarge(f"support sizes {len(mu)}, {len(nu)} exceed the cap {cap}")
    return max(_one_sided_prokhorov(mu, nu, space), _one_sided_prokhorov(nu, mu, space))


def coupling_mass_within(mu: IdealMeasure, nu: IdealMeasure, space: MetricSpace, eps: Fraction) -> Fraction:
    """Largest mass a coupling can move along pairs at distance ``< eps``."""
    pairs = space.close_pairs(mu.support, nu.support, eps)
    return bipartite_max_flow(mu.weights, nu.weights, pairs)


def prokhorov_less_than(mu: IdealMeasure, nu: IdealMeasure, space: MetricSpace, eps: RationalLike) -> bool:
    """Decide ``rho(mu, nu) < eps`` by a max-flow feasibility check.

    With edges ``d < eps``, ``rho < eps`` holds iff the max flow exceeds
    ``1 - eps``; no support cap applies.
    """
    eps = as_rational(eps)
    if eps <= 0:
        return False
    return coupling_mass_within(mu, nu, space, eps) > 1 - eps


@dataclass(frozen=True)
class WassersteinResult:
    value: Fraction
    plan: TransportSolution


def wasserstein_with_plan(
    mu: IdealMeasure, nu: IdealMeasure, space: MetricSpace, cap: int = WASSERSTEIN_CAP
) -> WassersteinResult:
    if space.diameter_bound is None:
        raise UnboundedSpace("Wasserstein distance needs a bounded space")
    if len(mu) > cap or len(nu) > cap:
        raise SupportTooLarge(f"support sizes {len(mu)}, {len(nu)} exceed the cap {cap}")
    cost = _distance_matrix(space, mu.support, nu.support)
    sol = solve_transport(mu.weights, nu.weights, cost)
    return WassersteinResult(sol.value, sol)


def wasserstein_exact(mu: IdealMeasure, nu: IdealMeasure, space: MetricSpace, cap: int = WASSERSTEIN_CAP) -> Fraction:
    return wasserstein_with_plan(mu, nu, space, cap).value


@dataclass
class EquivalenceReport:
    rho: Fraction
    wasserstein: Fraction
    diameter_bound: Fraction
    w_le_scaled_rho: bool
    rho_squared_le_w: bool
    eps_checked: list[Fraction] = field(default_factory=list)
    eps_violations: list[Fraction] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.w_le_scaled_rho and self.rho_squared_le_w and not self.eps_violations

    def to_json(self) -> dict:
        return {
            "rho": fmt_rational(self.rho),
            "wasserstein": fmt_rational(self.wasserstein),
            "diameter_bound": fmt_rational(self.diameter_bound),
            "w_le_scaled_rho": self.w_le_scaled_rho,
            "rho_squared_le_w": self.rho_squared_le_w,
            "eps_checked": len(self.eps_checked),
            "eps_violations": [fmt_rational(e) for e in self.eps_violations],
            "ok": self.ok,
        }


def equivalence_eps_grid(w: Fraction, grid: int = 32) -> list[Fraction]:
    """Rationals ``eps < 1`` with ``eps**2 > w`` drawn from ``{w + j/grid} ∪ {k/grid}``."""
    cands = {w + Fraction(j, grid) for j in range(1, grid + 1)} | {Fraction(k, grid) for k in range(1, grid)}
    return sorted(e for e in cands if e < 1 and e * e > w)


def check_equivalence_bounds(mu: IdealMeasure, nu: IdealMeasure, space: MetricSpace) -> EquivalenceReport:
    """Check ``W <= (M+1) rho`` and ``eps**2 > W, eps < 1  =>  rho < eps``."""
    M = space.diameter_bound
    if M is None:
        raise UnboundedSpace("the bounds need a diameter bound")
    rho = prokhorov_exact(mu, nu, space)
    w = wasserstein_exact(mu, nu, space)
    eps = equivalence_eps_grid(w)
    return EquivalenceReport(
        rho=rho,
        wasserstein=w,
        diameter_bound=M,
        w_le_scaled_rho=w <= (M + 1) * rho,
        rho_squared_le_w=rho * rho <= w,
        eps_checked=eps,
        eps_violations=[e for e in eps if not rho < e],
    )


# --------------------------------------------------------------------------
# Measure descriptors
# --------------------------------------------------------------------------


class MeasureDescriptor:
    """A computable measure as a fast Cauchy stream of ideal measures.

    ``trusted`` descriptors are fast by construction (the built-ins); others
    are checked lazily with exact feasibility tests on consumed stages.
    """

    def __init__(
        self,
        space: MetricSpace,
        ideal_at: Callable[[int], IdealMeasure],
        trusted: bool = False,
        atomless: bool = False,
        doc: Optional[dict] = None,
    ):
        self.space = space
        self._ideal_at = ideal_at
        self.trusted = trusted
        self.atomless = atomless
        self.doc = doc
        self._verified = 0
        self._lock = threading.Lock()
        self._cache: dict[int, IdealMeasure] = {}

    def ideal_at(self, n: int) -> IdealMeasure:
        if n < 0:
            raise ValueError("stages are natural numbers")
        if not self.trusted:
            self.verify_prefix(n)
        return self._get(n)

    def _get(self, n: int) -> IdealMeasure:
        with self._lock:
            hit = self._cache.get(n)
        if hit is None:
            hit = self._ideal_at(n)
            with self._lock:
                self._cache[n] = hit
        return hit

    def verify_prefix(self, upto: int) -> None:
        with self._lock:
            done = self._verified
        for n in range(done, upto):
            if not prokhorov_less_than(self._get(n), self._get(n + 1), self.space, pow2(-n)):
                raise FastCauchyViolation(f"rho(mu_{n}, mu_{n + 1}) >= 2^-{n}")
        with self._lock:
            self._verified = max(self._verified, upto)

    def valuation_lower(self, u: REOpenSet, stage: int) -> Fraction:
        """``max_{1<=n<=stage} [mu_n(U_n) - eps_n]^+`` with ``eps_n = 2**(1-n)``.

        ``U_n`` shrinks every ball enumerated by ``stage`` by ``eps_n`` and
        drops the ones with nonpositive radius.
        """
        balls = u.balls_upto(stage)
        best = Fraction(0)
        if not balls:
            return best
        for n in range(1, stage + 1):
            eps = pow2(1 - n)
            shrunk = [IdealBall(b.center, b.radius - eps) for b in balls if b.radius > eps]
            if not shrunk:
                continue
            best = max(best, self.ideal_at(n).mass(self.space, shrunk) - eps)
        return best

    def valuation_staged(self, u: REOpenSet) -> StagedLowerReal:
        return StagedLowerReal(lambda n: self.valuation_lower(u, n))

    def digest(self, stages: int = 6) -> str:
        """Fingerprint of the descriptor: its document and its first stages."""
        payload = {
            "doc": self.doc,
            "stages": [[[i, fmt_rational(w)] for i, w in self._get(n).atoms] for n in range(stages)],
        }
        return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()

    def __repr__(self) -> str:
        return f"MeasureDescriptor({self.doc!r})"


def lebesgue_unit() -> MeasureDescriptor:
    return MeasureDescriptor(
        UnitInterval(), DyadicMidpoints, trusted=True, atomless=True, doc={"builtin": "lebesgue_unit"}
    )


def bernoulli(p: RationalLike) -> MeasureDescriptor:
    """Product measure on Cantor space with ``P(bit = 1) = p``; stage n uses words of length n+1."""
    p = as_rational(p)
    if not 0 < p < 1:
        raise InvalidParameter("bernoulli parameter must lie in (0, 1)")
    return MeasureDescriptor(
        CantorSpace(),
        lambda n: BernoulliWords(p, n + 1),
        trusted=True,
        atomless=True,
        doc={"builtin": {"bernoulli": fmt_rational(p)}},
    )


def dirac_measure(space: MetricSpace, i: int) -> MeasureDescriptor:
    space.check_index(i)
    mu = dirac(i)
    return MeasureDescriptor(space, lambda _n: mu, trusted=True, doc={"builtin": {"dirac": i}})


def convex_combo(parts: Sequence[tuple[RationalLike, MeasureDescriptor]]) -> MeasureDescriptor:
    """Rational mixture, combined stage by stage."""
    weights = [as_rational(w) for w, _ in parts]
    if not parts or any(w <= 0 for w in weights) or sum(weights) != 1:
        raise InvalidParameter("mixture weights must be positive and sum to 1")
    descs = [d for _, d in parts]
    space = descs[0].space
    if any(d.space != space for d in descs):
        raise InvalidParameter("mixture components must share a space")

    def ideal_at(n: int) -> IdealMeasure:
        return MixtureIdeal([(w, d.ideal_at(n)) for w, d in zip(weights, descs)])

    return MeasureDescriptor(
        space,
        ideal_at,
        trusted=all(d.trusted for d in descs),
        atomless=all(d.atomless for d in descs),
        doc={"convex_combo": [{"weight": fmt_rational(w), "measure": d.doc} for w, d in zip(weights, descs)]},
    )


def from_stages(space: MetricSpace, stages: Sequence[IdealMeasure]) -> MeasureDescriptor:
    """Finite prefix of a stream; the last ideal measure repeats forever."""
    if not stages:
        raise InvalidParameter("need at least one stage")
    frozen = tuple(stages)
    return MeasureDescriptor(
        space,
        lambda n: frozen[min(n, len(frozen) - 1)],
        doc={"stages": [m.to_json() for m in frozen]},
    )


def builtin_measures() -> dict[str, Callable]:
    return {
        "lebesgue_unit": lebesgue_unit,
        "bernoulli": bernoulli,
        "dirac": dirac_measure,
        "convex_combo": convex_combo,
    }


def valuation_lower(mu, u: REOpenSet, stage: int) -> Fraction:
    return mu.valuation_lower(u, stage)


# --------------------------------------------------------------------------
# Integration
# --------------------------------------------------------------------------


def integrate_steps_lower(mu, steps: Sequence, stage: int) -> Fraction:
    """Peeling recursion over a finite supremum of steps.

    Subtract the smallest value times the staged mass of the union of all
    balls, lower every value by it, drop the steps that reach zero, repeat.
    """
    current = [(s.ball, s.value) for s in steps]
    total = Fraction(0)
    while current:
        qmin = min(v for _, v in current)
        # concentric balls: only the largest matters for the union
        widest: dict[int, Fraction] = {}
        for b, _ in current:
            if b.radius > widest.get(b.center, Fraction(0)):
                widest[b.center] = b.radius
        union = FiniteOpenSet([IdealBall(c, r) for c, r in sorted(widest.items())], all_at_once=True)
        total += qmin * mu.valuation_lower(union, stage)
        current = [(b, v - qmin) for b, v in current if v > qmin]
    return total


def integrate_lower(mu, f: LscFunction, stage: int) -> Fraction:
    """Staged lower bound of ``∫ f dmu``, nondecreasing in ``stage``."""
    custom = getattr(f, "custom_integral_lower", None)
    if custom is not None:
        return custom(mu, stage)
    if isinstance(f, SumNode):
        return sum((w * integrate_lower(mu, g, stage) for w, g in f.terms), Fraction(0))
    if isinstance(f, ScaleNode):
        return f.weight * integrate_lower(mu, f.f, stage)
    steps = f.step_minorant(mu.space, stage)
    if steps is not None:
        return integrate_steps_lower(mu, steps, stage)
    if isinstance(f, SupNode):
        # sup of non-step nodes: the largest child integral is still below
        return max((integrate_lower(mu, g, stage) for g in f.children), default=Fraction(0))
    raise TypeError(f"cannot integrate {type(f).__name__}")


def integrate_staged(mu, f: LscFunction) -> StagedLowerReal:
    return StagedLowerReal(lambda n: integrate_lower(mu, f, n))


def integrate_bounded(mu, f_plus_m: LscFunction, m_minus_f: LscFunction, bound: RationalLike, stage: int) -> RatInterval:
    """Enclosure of ``∫ f dmu`` from the lsc functions ``f + M`` and ``M - f``."""
    M = as_rational(bound)
    lo = integrate_lower(mu, f_plus_m, stage) - M
    hi = M - integrate_lower(mu, m_minus_f, stage)
    return RatInterval(lo, hi)


# --------------------------------------------------------------------------
# From valuations back to ideal measures
# --------------------------------------------------------------------------


def reconstruct_from_valuations(
    mu, centers: Sequence[int], radius: RationalLike, stage: int
) -> IdealMeasure:
    """Ideal measure built from staged valuations of disjoint balls.

    Each center gets the staged lower bound of its ball's mass; the mass not
    yet certified is put on the first center.  When the balls cover the
    space up to a null set, the result is within ``radius + missing`` of mu.
    """
    radius = as_rational(radius)
    weights = [mu.valuation_lower(FiniteOpenSet([IdealBall(c, radius)], all_at_once=True), stage) for c in centers]
    missing = 1 - sum(weights, Fraction(0))
    if missing < 0:
        raise InvalidParameter("balls are not disjoint")
    weights[0] += missing
    return IdealMeasure([(c, w) for c, w in zip(centers, weights) if w > 0])
