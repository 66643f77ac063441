"""Measure systems: weights, moments, Cauchy transforms and quadrature.

A system is a vector of r weight components, each absolutely continuous with
respect to a common reference measure, plus the reference itself.  Moments
are exact rationals whenever a closed form exists (Lebesgue pieces on
rational intervals, fully rational Beta values, finite atom lists); anything
else is evaluated by adaptive Gauss-Legendre quadrature with doubling node
counts until two successive estimates agree to tolerance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional, Tuple

import mpmath
from mpmath import mp

from .errors import ConstructionError, PrecisionFailure, SupportDomainError, ValidationError
from .scalars import Scalar, as_fraction, as_mpf, default_precision, is_exact, workprec

CLOSED_FORM_RATIONAL = "closed-form-rational"
CLOSED_FORM_REAL = "closed-form-real"
QUADRATURE = "quadrature"

SUM_OF_COMPONENTS = "sum-of-components"
FIRST_COMPONENT = "first-component"
EXPLICIT = "explicit"


@dataclass(frozen=True)
class Interval:
    a: Fraction
    b: Fraction

    def __post_init__(self):
        object.__setattr__(self, "a", as_fraction(self.a))
        object.__setattr__(self, "b", as_fraction(self.b))
        if not self.a < self.b:
            raise ValidationError(f"interval requires a < b, got [{self.a}, {self.b}]", code="E_INTERVAL")

    def contains(self, x, closed: bool = True) -> bool:
        # mpf points compare exactly through their dyadic value
        xf = as_fraction(x)
        if closed:
            return self.a <= xf <= self.b
        return self.a <= xf < self.b

    @property
    def length(self) -> Fraction:
        return self.b - self.a

    def __str__(self):
        return f"[{self.a}, {self.b}]"


def rational(v) -> Fraction:
    """Parse ints, Fractions, decimal strings and 'p/q' strings exactly."""
    if isinstance(v, Fraction):
        return v
    if isinstance(v, int):
        return Fraction(v)
    if isinstance(v, float):
        return Fraction(str(v))
    if isinstance(v, str):
        return Fraction(v)
    raise ValidationError(f"cannot parse rational from {v!r}", code="E_CONFIG")


# ---------------------------------------------------------------------------
# quadrature

def quad_interval(f, a, b, tol=None, maxdegree: int = 9):
    """Adaptive Gauss-Legendre on [a, b], returning (value, error estimate).

    Degree doubling first; on failure the interval is bisected recursively.
    Raises PrecisionFailure if the tolerance cannot be met.
    """
    a = mpmath.mpmathify(a)
    b = mpmath.mpmathify(b)
    if tol is None:
        tol = mpmath.mpf(2) ** (24 - mp.prec)

    def _quad(lo, hi, depth):
        val, err = mpmath.quad(f, [lo, hi], method="gauss-legendre", error=True, maxdegree=maxdegree)
        scale = max(mpmath.mpf(1), abs(val))
        if err <= tol * scale or hi - lo < tol:
            return val, err
        if depth >= 12:
            raise PrecisionFailure(
                f"quadrature on [{mpmath.nstr(lo, 8)}, {mpmath.nstr(hi, 8)}] stalled at error {mpmath.nstr(err, 4)}"
            )
        mid = (lo + hi) / 2
        v1, e1 = _quad(lo, mid, depth + 1)
        v2, e2 = _quad(mid, hi, depth + 1)
        return v1 + v2, e1 + e2

    return _quad(a, b, 0)


# ---------------------------------------------------------------------------
# Beta moments for Jacobi-type weights

def beta_value(p: Fraction, q: Fraction):
    """B(p, q) for positive rationals; exact when either argument is an integer."""
    p = as_fraction(p)
    q = as_fraction(q)
    if p <= 0 or q <= 0:
        raise ValidationError(f"beta arguments must be positive, got ({p}, {q})")
    if q.denominator == 1:
        n = int(q)
        val = Fraction(math.factorial(n - 1))
        for i in range(n):
            val /= p + i
        return val
    if p.denominator == 1:
        return beta_value(q, p)
    return mpmath.beta(as_mpf(p), as_mpf(q))


# ---------------------------------------------------------------------------
# components

@dataclass(frozen=True, eq=False)
class WeightComponent:
    """One measure of the vector: weight against the reference + moment oracle.

    `weight` evaluates the Radon-Nikodym derivative w_j relative to the
    system's reference measure.  A component used standalone (for instance a
    Nikishin generator) interprets `weight` as its Lebesgue density.
    `density_form` tags closed-form densities so Cauchy transforms can take
    the analytic route: ("const", scale) or ("jacobi", alpha, beta) or None.
    """

    support: Optional[Interval]
    weight: Callable
    moments: Callable
    moment_kind: str
    atoms: Tuple[Tuple[Fraction, Fraction], ...] = ()
    nonnegative: bool = True
    density_form: Optional[tuple] = None
    label: str = ""

    def moment(self, k: int) -> Scalar:
        if k < 0:
            raise ValidationError(f"moment degree must be nonnegative, got {k}")
        return self.moments(k)

    def weight_at(self, x):
        if self.support is not None and self.support.contains(x):
            return self.weight(x), True
        xf = as_fraction(x)
        for loc, _mass in self.atoms:
            if xf == loc:
                return self.weight(x), True
        return Fraction(0), False


def lebesgue(a, b, scale=Fraction(1), atoms=(), label="") -> WeightComponent:
    """Constant density `scale` on [a, b], plus optional atoms."""
    iv = Interval(rational(a), rational(b))
    scale = rational(scale)
    atoms = tuple((rational(loc), rational(mass)) for loc, mass in atoms)
    for loc, mass in atoms:
        if mass <= 0:
            raise ValidationError(f"atom mass must be positive, got {mass}")

    def moments(k):
        val = scale * (iv.b ** (k + 1) - iv.a ** (k + 1)) / (k + 1)
        for loc, mass in atoms:
            val += mass * loc**k
        return val

    return WeightComponent(
        support=iv,
        weight=lambda x: scale,
        moments=moments,
        moment_kind=CLOSED_FORM_RATIONAL,
        atoms=atoms,
        density_form=("const", scale),
        label=label or f"lebesgue{iv}",
    )


def atoms_only(atoms, label="") -> WeightComponent:
    """Purely atomic measure (finite support)."""
    atoms = tuple((rational(loc), rational(mass)) for loc, mass in atoms)
    if not atoms:
        raise ValidationError("atoms_only needs at least one atom")

    def moments(k):
        return sum((mass * loc**k for loc, mass in atoms), Fraction(0))

    return WeightComponent(
        support=None,
        weight=lambda x: Fraction(0),
        moments=moments,
        moment_kind=CLOSED_FORM_RATIONAL,
        atoms=atoms,
        density_form=("const", Fraction(0)),
        label=label or "atoms",
    )


def jacobi01(alpha, beta, label="") -> WeightComponent:
    """Weight x^alpha (1-x)^beta on [0, 1].

    Moments are B(alpha+k+1, beta+1): exact rationals when alpha or beta is a
    nonnegative integer, otherwise closed-form Beta values at the ambient
    precision.
    """
    alpha = rational(alpha)
    beta = rational(beta)
    if alpha <= -1 or beta <= -1:
        raise ValidationError(f"jacobi exponents must exceed -1, got ({alpha}, {beta})")
    exact = (alpha.denominator == 1 and alpha >= 0) or (beta.denominator == 1 and beta >= 0)

    def weight(x):
        if alpha.denominator == 1 and beta.denominator == 1:
            return x ** int(alpha) * (1 - x) ** int(beta)
        xm = as_mpf(x)
        left = xm ** as_mpf(alpha) if alpha != 0 else mpmath.mpf(1)
        right = (1 - xm) ** as_mpf(beta) if beta != 0 else mpmath.mpf(1)
        return left * right

    def moments(k):
        return beta_value(alpha + k + 1, beta + 1)

    return WeightComponent(
        support=Interval(0, 1),
        weight=weight,
        moments=moments,
        moment_kind=CLOSED_FORM_RATIONAL if exact else CLOSED_FORM_REAL,
        density_form=("jacobi", alpha, beta),
        label=label or f"x^{alpha}(1-x)^{beta}",
    )


def cauchy_transform(sigma: WeightComponent, x, tol=None) -> Scalar:
    """Integral of 1/(x - y) against sigma, for x outside the support.

    Uses the log closed form for constant densities and adaptive quadrature
    otherwise; atoms contribute mass/(x - loc).
    """
    if sigma.support is not None and sigma.support.contains(x):
        raise SupportDomainError(f"{x} lies inside the support {sigma.support}")
    total = Fraction(0)
    xf = as_fraction(x)
    for loc, mass in sigma.atoms:
        if xf == loc:
            raise SupportDomainError(f"{x} coincides with an atom")
        total += mass / (x - loc)
    if sigma.support is None:
        return total
    a, b = sigma.support.a, sigma.support.b
    if sigma.density_form is not None and sigma.density_form[0] == "const":
        scale = sigma.density_form[1]
        if scale == 0:
            return total
        return total + scale * mpmath.log(as_mpf((x - a) / (x - b)))
    xm = as_mpf(x)
    val, _err = quad_interval(lambda y: sigma.weight(y) / (xm - y), a, b, tol=tol)
    return total + val


# ---------------------------------------------------------------------------
# reference measure and systems

@dataclass(frozen=True, eq=False)
class ReferenceMeasure:
    pieces: Tuple[Tuple[Interval, Callable], ...]
    atoms: Tuple[Tuple[Fraction, Fraction], ...] = ()
    moments: Optional[Callable] = None


@dataclass(frozen=True, eq=False)
class MeasureSystem:
    components: Tuple[WeightComponent, ...]
    reference: ReferenceMeasure
    reference_rule: str
    name: str = ""

    @property
    def r(self) -> int:
        return len(self.components)

    def hull(self) -> Tuple[Fraction, Fraction]:
        los, his = [], []
        for c in self.components:
            if c.support is not None:
                los.append(c.support.a)
                his.append(c.support.b)
            for loc, _ in c.atoms:
                los.append(loc)
                his.append(loc)
        return min(los), max(his)

    def in_support(self, x) -> bool:
        for iv, _dens in self.reference.pieces:
            if iv.contains(x):
                return True
        return any(x == loc for loc, _ in self.reference.atoms)

    def weights_at(self, x):
        """All w_j(x) with the zero extension off-support; second item flags
        whether x was outside every support."""
        values = []
        inside_any = False
        for c in self.components:
            v, inside = c.weight_at(x)
            values.append(v)
            inside_any = inside_any or inside
        return values, not inside_any

    def moment(self, j: int, k: int) -> Scalar:
        if not 1 <= j <= self.r:
            raise ValidationError(f"component index {j} outside 1..{self.r}")
        return self.components[j - 1].moment(k)

    def exact_moments(self) -> bool:
        return all(c.moment_kind == CLOSED_FORM_RATIONAL for c in self.components)


def moment(system: MeasureSystem, j: int, k: int) -> Scalar:
    """k-th moment of the j-th measure (j is 1-based)."""
    return system.moment(j, k)


def integrate(f, system: MeasureSystem, tol=None):
    """Integral of f against the reference measure; returns (value, error)."""
    total = mpmath.mpf(0)
    err = mpmath.mpf(0)
    for iv, dens in system.reference.pieces:
        v, e = quad_interval(lambda y: as_mpf(f(y)) * as_mpf(dens(y)), iv.a, iv.b, tol=tol)
        total += v
        err += e
    for loc, mass in system.reference.atoms:
        total += as_mpf(f(loc)) * as_mpf(mass)
    return total, err


def integrate_component(f, system: MeasureSystem, j: int, tol=None):
    """Integral of f against the j-th measure via its weight; (value, error)."""
    if not 1 <= j <= system.r:
        raise ValidationError(f"component index {j} outside 1..{system.r}")
    comp = system.components[j - 1]
    total = mpmath.mpf(0)
    err = mpmath.mpf(0)
    for iv, dens in system.reference.pieces:
        if comp.support is None:
            continue
        lo = max(iv.a, comp.support.a)
        hi = min(iv.b, comp.support.b)
        if not lo < hi:
            continue
        v, e = quad_interval(
            lambda y: as_mpf(f(y)) * as_mpf(comp.weight(y)) * as_mpf(dens(y)), lo, hi, tol=tol
        )
        total += v
        err += e
    for loc, mass in comp.atoms:
        total += as_mpf(f(loc)) * as_mpf(mass)
    return total, err


# ---------------------------------------------------------------------------
# preset systems

def legendre_system() -> MeasureSystem:
    """r = 1, Lebesgue on [-1, 1]."""
    comp = lebesgue(-1, 1, label="lebesgue[-1,1]")
    one = lambda x: Fraction(1)
    ref = ReferenceMeasure(pieces=((comp.support, one),), moments=comp.moments)
    sys_comp = WeightComponent(
        support=comp.support,
        weight=one,
        moments=comp.moments,
        moment_kind=CLOSED_FORM_RATIONAL,
        density_form=("const", Fraction(1)),
        label=comp.label,
    )
    return MeasureSystem((sys_comp,), ref, SUM_OF_COMPONENTS, name="legendre")


def angelesco_system(intervals) -> MeasureSystem:
    """Lebesgue components on intervals with pairwise disjoint interiors.

    Reference is the sum of the components, so each weight is the indicator
    of its own interval (half-open at shared endpoints to keep the weights a
    pointwise partition).
    """
    ivs = [Interval(rational(a), rational(b)) for a, b in intervals]
    order = sorted(range(len(ivs)), key=lambda i: ivs[i].a)
    for t in range(len(order) - 1):
        left, right = ivs[order[t]], ivs[order[t + 1]]
        if right.a < left.b:
            raise ConstructionError(f"intervals {left} and {right} overlap")
    comps = []
    rightmost = max(iv.b for iv in ivs)
    for iv in ivs:
        closed_right = iv.b == rightmost

        def make_weight(iv=iv, closed_right=closed_right):
            def w(x):
                xf = as_fraction(x)
                if iv.a <= xf < iv.b or (closed_right and xf == iv.b):
                    return Fraction(1)
                return Fraction(0)

            return w

        base = lebesgue(iv.a, iv.b)
        comps.append(
            WeightComponent(
                support=iv,
                weight=make_weight(),
                moments=base.moments,
                moment_kind=CLOSED_FORM_RATIONAL,
                density_form=("const", Fraction(1)),
                label=f"lebesgue{iv}",
            )
        )

    def ref_moments(k):
        return sum((c.moments(k) for c in comps), Fraction(0))

    one = lambda x: Fraction(1)
    ref = ReferenceMeasure(pieces=tuple((c.support, one) for c in comps), moments=ref_moments)
    return MeasureSystem(tuple(comps), ref, SUM_OF_COMPONENTS, name="angelesco")


def jacobi_pineiro_system(alphas, beta) -> MeasureSystem:
    """Weights x^alpha_j (1-x)^beta on [0, 1] against the Lebesgue reference."""
    alphas = [rational(a) for a in alphas]
    beta = rational(beta)
    comps = tuple(jacobi01(a, beta) for a in alphas)
    base = lebesgue(0, 1)
    one = lambda x: Fraction(1)
    ref = ReferenceMeasure(pieces=((Interval(0, 1), one),), moments=base.moments)
    return MeasureSystem(comps, ref, EXPLICIT, name="jacobi-pineiro")


def lebesgue_with_atoms_system(a, b, atoms) -> MeasureSystem:
    """r = 1 Lebesgue plus finitely many off- or on-interval atoms."""
    comp = lebesgue(a, b, atoms=atoms)
    one = lambda x: Fraction(1)

    def weight(x):
        return Fraction(1)

    sys_comp = WeightComponent(
        support=comp.support,
        weight=weight,
        moments=comp.moments,
        moment_kind=CLOSED_FORM_RATIONAL,
        atoms=comp.atoms,
        density_form=("const", Fraction(1)),
        label=comp.label,
    )
    ref = ReferenceMeasure(pieces=((comp.support, one),), atoms=comp.atoms, moments=comp.moments)
    return MeasureSystem((sys_comp,), ref, SUM_OF_COMPONENTS, name="single-with-atom")


class _ChainMeasure:
    """Measure with density cauchy(inner) against a generator; used to build
    the iterated compositions of a Nikishin chain."""

    def __init__(self, generator: WeightComponent, inner=None):
        self.generator = generator
        self.inner = inner

    def cauchy(self, x, tol=None):
        if self.inner is None:
            return cauchy_transform(self.generator, x, tol=tol)
        gen = self.generator
        xm = as_mpf(x)
        inner = self.inner
        val, _ = quad_interval(
            lambda y: as_mpf(inner.cauchy(y, tol=tol)) * as_mpf(gen.weight(y)) / (xm - y),
            gen.support.a,
            gen.support.b,
            tol=tol,
        )
        return val


def nikishin_system(sigmas, precision: int | None = None) -> MeasureSystem:
    """System generated by measures on consecutively disjoint intervals.

    The first measure is kept as-is; the k-th acquires the density given by
    the Cauchy transform of the chain composition of the later generators,
    evaluated on the support of the first.  The reference is the first
    measure, and all downstream moments are computed by adaptive quadrature
    at `precision` bits.
    """
    sigmas = list(sigmas)
    if not sigmas:
        raise ConstructionError("need at least one generating measure")
    for s in sigmas:
        if s.support is None:
            raise ConstructionError("generators must have interval support")
        if s.atoms:
            raise ConstructionError("generators with atoms are not supported")
    for j in range(len(sigmas) - 1):
        a1, b1 = sigmas[j].support.a, sigmas[j].support.b
        a2, b2 = sigmas[j + 1].support.a, sigmas[j + 1].support.b
        if max(a1, a2) <= min(b1, b2):
            raise ConstructionError(
                f"consecutive supports {sigmas[j].support} and {sigmas[j + 1].support} intersect"
            )
    prec = precision if precision is not None else default_precision()
    first = sigmas[0]
    base = Interval(first.support.a, first.support.b)

    comps = []
    one = lambda x: Fraction(1)
    comps.append(
        WeightComponent(
            support=base,
            weight=one,
            moments=first.moments,
            moment_kind=first.moment_kind,
            density_form=first.density_form,
            label=first.label,
        )
    )
    for k in range(2, len(sigmas) + 1):
        chain = _ChainMeasure(sigmas[k - 1])
        for j in range(k - 2, 0, -1):
            chain = _ChainMeasure(sigmas[j], chain)

        def make_weight(chain=chain):
            def w(x):
                with workprec(prec):
                    return chain.cauchy(x)

            return w

        weight = make_weight()
        memo = {}

        def make_moments(weight=weight, memo=memo):
            def moments(t):
                key = (t, prec)
                if key not in memo:
                    with workprec(prec):
                        val, _ = quad_interval(
                            lambda y: y**t * as_mpf(weight(y)) * as_mpf(first.weight(y)),
                            base.a,
                            base.b,
                        )
                    memo[key] = val
                return memo[key]

            return moments

        comps.append(
            WeightComponent(
                support=base,
                weight=weight,
                moments=make_moments(),
                moment_kind=QUADRATURE,
                nonnegative=False,
                label=f"nikishin-level-{k}",
            )
        )
    ref = ReferenceMeasure(pieces=((base, first.weight),), moments=first.moments)
    return MeasureSystem(tuple(comps), ref, FIRST_COMPONENT, name="nikishin")


# ---------------------------------------------------------------------------
# config loading

SYSTEM_KINDS = ("angelesco", "jacobi-pineiro", "nikishin", "single-with-atom")


def from_config(cfg: dict) -> MeasureSystem:
    """Build a system from a key-value config (see README for the schema)."""
    if not isinstance(cfg, dict):
        raise ValidationError("config must be a mapping", code="E_CONFIG")
    kind = cfg.get("kind")
    if kind not in SYSTEM_KINDS:
        raise ValidationError(f"unknown system kind {kind!r}; expected one of {SYSTEM_KINDS}", code="E_CONFIG")
    if kind == "angelesco":
        intervals = cfg.get("intervals")
        if not intervals:
            raise ValidationError("angelesco config needs 'intervals'", code="E_CONFIG")
        return angelesco_system([(rational(a), rational(b)) for a, b in intervals])
    if kind == "jacobi-pineiro":
        alphas = cfg.get("alphas")
        if not alphas:
            raise ValidationError("jacobi-pineiro config needs 'alphas'", code="E_CONFIG")
        return jacobi_pineiro_system([rational(a) for a in alphas], rational(cfg.get("beta", 0)))
    if kind == "nikishin":
        intervals = cfg.get("intervals")
        if not intervals or len(intervals) < 1:
            raise ValidationError("nikishin config needs 'intervals'", code="E_CONFIG")
        gens = [lebesgue(rational(a), rational(b)) for a, b in intervals]
        return nikishin_system(gens, precision=cfg.get("precision"))
    interval = cfg.get("interval")
    if not interval:
        raise ValidationError("single-with-atom config needs 'interval'", code="E_CONFIG")
    atoms = [(rational(loc), rational(mass)) for loc, mass in cfg.get("atoms", [])]
    return lebesgue_with_atoms_system(rational(interval[0]), rational(interval[1]), atoms)
