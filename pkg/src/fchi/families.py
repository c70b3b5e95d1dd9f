"""Distributions: finite discrete vectors and affine exponential families.

An affine exponential family (AEF) is parameterized so that densities are
``h(x) exp(theta . t(x) - F(theta))`` with t affine and theta ranging over
an affine slice of R^d; what this package needs from a family is its
log-normalizer F, the parameter domain, and (when available) a density
for quadrature oracles.  Closed-form chi values only touch F, which is
why the von Mises-Fisher family participates without any density.

Five families ship: gaussian_iso(d) (unit covariance, mean as natural
parameter), poisson, categorical(d) (d+1 atoms, log-odds against atom 0),
vmf(d) (unit sphere in R^d), and trunc_exp(a, b) (exponential restricted
to [a, b], b may be +inf).  The truncated exponential is the deliberately
awkward guest: its singly truncated parameter domain (0, inf) is a half
line, so binomial interpolations can leave it, and that is exactly the
divergence mechanism the chi module must detect.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence, Union

import numpy as np

from .errors import DivergenceError, InputError

__all__ = [
    "DiscreteDistribution",
    "bernoulli",
    "ratio_bounds_discrete",
    "AefFamily",
    "GaussianIso",
    "Poisson",
    "Categorical",
    "VonMisesFisher",
    "TruncatedExponential",
    "gaussian_iso",
    "poisson",
    "categorical",
    "vmf",
    "trunc_exp",
    "family_from_name",
    "MixtureSpec",
    "PairSpec",
    "load_pair_spec",
]

Number = Union[int, float, Fraction]

_SUM_TOL = 1e-12


def _as_number(x) -> Number:
    """JSON scalar (or 'num/den' / decimal string) to a number; strings stay exact."""
    if isinstance(x, bool):
        raise InputError(f"probability entries must be numbers, got {x!r}")
    if isinstance(x, (int, float)):
        return x
    if isinstance(x, str):
        try:
            return Fraction(x)
        except (ValueError, ZeroDivisionError) as exc:
            raise InputError(f"cannot parse {x!r} as a rational number") from exc
    if isinstance(x, Fraction):
        return x
    raise InputError(f"probability entries must be numbers, got {type(x).__name__}")


@dataclass(frozen=True)
class DiscreteDistribution:
    """Probability vector over finitely many atoms.

    Entries may be floats or exact Fractions; rational vectors keep every
    downstream chi value exact.  Validation: entries >= 0 and the total
    within 1e-12 of 1.
    """

    probs: tuple

    def __init__(self, probs: Sequence[Number]):
        entries = tuple(_as_number(p) for p in probs)
        if len(entries) < 1:
            raise InputError("a discrete distribution needs at least one atom")
        for p in entries:
            if p < 0:
                raise InputError(f"negative probability {p!r}")
        total = sum(entries) if all(
            isinstance(p, (int, Fraction)) for p in entries
        ) else math.fsum(float(p) for p in entries)
        if abs(float(total) - 1.0) > _SUM_TOL:
            raise InputError(f"probabilities sum to {float(total)!r}, not 1")
        object.__setattr__(self, "probs", entries)

    def __len__(self) -> int:
        return len(self.probs)

    def __getitem__(self, s: int) -> Number:
        return self.probs[s]

    @property
    def is_exact(self) -> bool:
        return all(isinstance(p, (int, Fraction)) for p in self.probs)

    def describe(self) -> str:
        return f"discrete[{len(self.probs)}]"


def bernoulli(lam: Number) -> DiscreteDistribution:
    """Two-atom distribution (lam, 1 - lam); Fractions stay exact."""
    if isinstance(lam, (int, Fraction)):
        return DiscreteDistribution((Fraction(lam), 1 - Fraction(lam)))
    return DiscreteDistribution((lam, 1.0 - lam))


def ratio_bounds_discrete(p: DiscreteDistribution, q: DiscreteDistribution):
    """(m, M) = extremes of q_s/p_s over the union support.

    m = 0 when q misses mass somewhere p has it; M = +inf when q has mass
    where p has none.  Exact inputs give exact Fractions back (except the
    inf case).
    """
    if len(p) != len(q):
        raise InputError(f"support sizes differ: {len(p)} vs {len(q)}")
    ratios = []
    m_zero = False
    M_inf = False
    for ps, qs in zip(p.probs, q.probs):
        if ps == 0 and qs == 0:
            continue
        if ps == 0:
            M_inf = True
        elif qs == 0:
            m_zero = True
        else:
            ratios.append(Fraction(qs) / Fraction(ps) if isinstance(ps, (int, Fraction))
                          and isinstance(qs, (int, Fraction)) else qs / ps)
    if not ratios and not (m_zero or M_inf):
        raise InputError("distributions share no support")
    m = 0 if m_zero else (min(ratios) if ratios else 0)
    M = math.inf if M_inf else max(ratios)
    return m, M


# ---------------------------------------------------------------------------
# affine exponential families


class AefFamily:
    """Base for the exponential-family descriptors.

    Subclasses set `name`, `dim` and `has_density`, and implement
    `log_normalizer`, `in_domain`, and the parameter maps.  `support`
    describes where quadrature or summation oracles should work:
    ("real_line",), ("integers",), ("atoms", n), ("interval", lo, hi), or
    None when no density is exposed.
    """

    name: str = ""
    dim: int = 0
    has_density: bool = False
    support: Optional[tuple] = None

    # -- parameters ---------------------------------------------------------

    def theta(self, value) -> np.ndarray:
        """Coerce a scalar/sequence to a validated natural-parameter vector."""
        arr = np.atleast_1d(np.asarray(value, dtype=float))
        if arr.shape != (self.dim,):
            raise InputError(
                f"{self.describe()} expects a {self.dim}-dimensional natural "
                f"parameter, got shape {arr.shape}"
            )
        return self.check_domain(arr)

    def in_domain(self, theta: np.ndarray) -> bool:
        return bool(np.all(np.isfinite(theta)))

    def check_domain(self, theta: np.ndarray) -> np.ndarray:
        if not self.in_domain(theta):
            raise InputError(
                f"natural parameter {np.asarray(theta).tolist()!r} outside the "
                f"domain of {self.describe()}"
            )
        return theta

    def natural_param(self, source) -> np.ndarray:
        """Map the family's usual parameterization to theta."""
        raise NotImplementedError

    def source_param(self, theta):
        """Inverse of natural_param."""
        raise NotImplementedError

    # -- structure ----------------------------------------------------------

    def log_normalizer(self, theta: np.ndarray) -> float:
        raise NotImplementedError

    def density(self, x, theta: np.ndarray) -> float:
        raise InputError(f"{self.describe()} exposes no density")

    def ratio_bounds(self, theta_p: np.ndarray, theta_q: np.ndarray):
        """(m, M) bounds on the density ratio q/p; M = +inf means unbounded."""
        raise InputError(f"no density-ratio bounds available for {self.describe()}")

    def describe(self) -> str:
        return self.name


@dataclass(frozen=True)
class GaussianIso(AefFamily):
    """Gaussian with identity covariance; natural parameter = mean vector.

    F(theta) = |theta|^2 / 2.  The density ratio of two distinct members
    is unbounded in both directions, so remainder certification is never
    available here; that is what makes it the canonical divergent case.
    """

    d: int = 1

    def __post_init__(self):
        if self.d < 1:
            raise InputError("gaussian_iso needs d >= 1")
        object.__setattr__(self, "name", "gaussian_iso")
        object.__setattr__(self, "dim", self.d)
        object.__setattr__(self, "has_density", True)
        object.__setattr__(self, "support", ("real_line",))

    def log_normalizer(self, theta):
        theta = np.asarray(theta, dtype=float)
        return 0.5 * float(theta @ theta)

    def natural_param(self, source):
        return self.theta(source)

    def source_param(self, theta):
        return np.asarray(theta, dtype=float)

    def density(self, x, theta):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        theta = np.asarray(theta, dtype=float)
        z = -0.5 * float((x - theta) @ (x - theta))
        return (2.0 * math.pi) ** (-0.5 * self.d) * math.exp(z)

    def ratio_bounds(self, theta_p, theta_q):
        if np.array_equal(np.asarray(theta_p, float), np.asarray(theta_q, float)):
            return 1.0, 1.0
        return 0.0, math.inf

    def describe(self):
        return f"gaussian_iso(d={self.d})"


@dataclass(frozen=True)
class Poisson(AefFamily):
    """Poisson family; theta = log rate, F(theta) = e^theta."""

    def __post_init__(self):
        object.__setattr__(self, "name", "poisson")
        object.__setattr__(self, "dim", 1)
        object.__setattr__(self, "has_density", True)
        object.__setattr__(self, "support", ("integers",))

    def log_normalizer(self, theta):
        return math.exp(float(np.asarray(theta).reshape(())))

    def natural_param(self, source):
        lam = float(np.asarray(source).reshape(()))
        if lam <= 0:
            raise InputError(f"poisson rate must be positive, got {lam!r}")
        return np.array([math.log(lam)])

    def source_param(self, theta):
        return math.exp(float(np.asarray(theta).reshape(())))

    def density(self, x, theta):
        if x < 0 or x != int(x):
            return 0.0
        t = float(np.asarray(theta).reshape(()))
        return math.exp(x * t - math.exp(t) - math.lgamma(x + 1))

    def ratio_bounds(self, theta_p, theta_q):
        lp = self.source_param(theta_p)
        lq = self.source_param(theta_q)
        if lp == lq:
            return 1.0, 1.0
        if lq < lp:
            # ratio e^(lp-lq) (lq/lp)^x decreases in x: max at x=0, inf at m
            return 0.0, math.exp(lp - lq)
        return math.exp(lp - lq), math.inf


@dataclass(frozen=True)
class Categorical(AefFamily):
    """Categorical on d+1 atoms; theta_i = log(p_i / p_0), i = 1..d.

    F(theta) = log(1 + sum e^theta_i).  Full support is part of the
    parameterization: a zero probability has no finite log-odds.
    """

    d: int = 1

    def __post_init__(self):
        if self.d < 1:
            raise InputError("categorical needs d >= 1")
        object.__setattr__(self, "name", "categorical")
        object.__setattr__(self, "dim", self.d)
        object.__setattr__(self, "has_density", True)
        object.__setattr__(self, "support", ("atoms", self.d + 1))

    def log_normalizer(self, theta):
        theta = np.asarray(theta, dtype=float)
        hi = max(0.0, float(np.max(theta)))
        return hi + math.log(
            math.exp(-hi) + float(np.sum(np.exp(theta - hi)))
        )

    def natural_param(self, source):
        probs = np.asarray(source, dtype=float)
        if probs.shape != (self.d + 1,):
            raise InputError(
                f"categorical(d={self.d}) expects {self.d + 1} probabilities"
            )
        if np.any(probs <= 0):
            raise InputError("categorical probabilities must all be positive")
        if abs(float(probs.sum()) - 1.0) > _SUM_TOL:
            raise InputError(f"probabilities sum to {float(probs.sum())!r}, not 1")
        return np.log(probs[1:] / probs[0])

    def source_param(self, theta):
        theta = np.asarray(theta, dtype=float)
        hi = max(0.0, float(np.max(theta)))
        w = np.concatenate(([math.exp(-hi)], np.exp(theta - hi)))
        return w / w.sum()

    def probs(self, theta) -> np.ndarray:
        return self.source_param(theta)

    def density(self, x, theta):
        x = int(x)
        if not 0 <= x <= self.d:
            return 0.0
        return float(self.source_param(theta)[x])

    def ratio_bounds(self, theta_p, theta_q):
        r = self.source_param(theta_q) / self.source_param(theta_p)
        return float(r.min()), float(r.max())

    def describe(self):
        return f"categorical(d={self.d})"


_HYP0F1_CAP = 10_000


def _log_hyp0f1(b: float, z: float) -> float:
    """log 0F1(; b; z) for z >= 0 by direct series summation.

    Terms z^n / ((b)_n n!) fall superexponentially; summation stops when
    the relative term drops under 1e-16.  The iteration cap only guards
    pathological input.
    """
    term = 1.0
    acc = 1.0
    for n in range(_HYP0F1_CAP):
        term *= z / ((b + n) * (n + 1))
        acc += term
        if term < 1e-16 * acc:
            return math.log(acc)
    raise DivergenceError(
        f"0F1 series did not settle within {_HYP0F1_CAP} terms (b={b}, z={z})"
    )


@dataclass(frozen=True)
class VonMisesFisher(AefFamily):
    """von Mises-Fisher on the unit sphere in R^d; no density is exposed.

    F(theta) = log 0F1(; d/2; |theta|^2/4).  Only the log-normalizer is
    needed for closed-form chi values, which is the point of carrying a
    family without a practical density evaluator.
    """

    d: int = 3

    def __post_init__(self):
        if self.d < 2:
            raise InputError("vmf needs ambient dimension d >= 2")
        object.__setattr__(self, "name", "vmf")
        object.__setattr__(self, "dim", self.d)
        object.__setattr__(self, "has_density", False)
        object.__setattr__(self, "support", None)

    def log_normalizer(self, theta):
        theta = np.asarray(theta, dtype=float)
        return _log_hyp0f1(0.5 * self.d, 0.25 * float(theta @ theta))

    def natural_param(self, source):
        return self.theta(source)

    def source_param(self, theta):
        return np.asarray(theta, dtype=float)

    def ratio_bounds(self, theta_p, theta_q):
        # ratio = exp((tq-tp).x + F(tp) - F(tq)) on |x| = 1; extremes along Delta
        tp = np.asarray(theta_p, dtype=float)
        tq = np.asarray(theta_q, dtype=float)
        gap = float(np.linalg.norm(tq - tp))
        if gap == 0.0:
            return 1.0, 1.0
        shift = self.log_normalizer(tp) - self.log_normalizer(tq)
        return math.exp(-gap + shift), math.exp(gap + shift)

    def describe(self):
        return f"vmf(d={self.d})"


@dataclass(frozen=True)
class TruncatedExponential(AefFamily):
    """Exponential density e^(-theta x), renormalized to [a, b].

    Doubly truncated (finite b): any real theta, F = log((e^(-a theta) -
    e^(-b theta)) / theta) with the removable singularity at theta = 0
    filled by log(b - a).  Singly truncated (b = +inf): theta > 0 and
    F = -a theta - log theta.  Densities are exp(-theta x - F(theta)).
    """

    a: float = 0.0
    b: float = math.inf

    def __post_init__(self):
        if not math.isfinite(self.a):
            raise InputError("trunc_exp needs a finite left endpoint")
        if self.b <= self.a:
            raise InputError(f"need a < b, got a={self.a}, b={self.b}")
        object.__setattr__(self, "name", "trunc_exp")
        object.__setattr__(self, "dim", 1)
        object.__setattr__(self, "has_density", True)
        object.__setattr__(self, "support", ("interval", self.a, self.b))

    @property
    def doubly(self) -> bool:
        return math.isfinite(self.b)

    def in_domain(self, theta):
        t = float(np.asarray(theta).reshape(()))
        if not math.isfinite(t):
            return False
        return True if self.doubly else t > 0.0

    def log_normalizer(self, theta):
        t = float(np.asarray(theta).reshape(()))
        if not self.doubly:
            if t <= 0.0:
                raise InputError(
                    f"singly truncated exponential needs theta > 0, got {t!r}"
                )
            return -self.a * t - math.log(t)
        if t == 0.0:
            return math.log(self.b - self.a)
        width = self.b - self.a
        s = width * t
        # (e^(-a t) - e^(-b t))/t = width * e^(-a t) * (-expm1(-s))/s
        if s < -36.0:
            tail = -s - math.log(-s)
        elif s > 36.0:
            tail = -math.log(s)
        else:
            tail = math.log(-math.expm1(-s) / s)
        return -self.a * t + math.log(width) + tail

    def mass(self, theta) -> float:
        """Untruncated-density mass e^(-a theta) - e^(-b theta) over [a, b]."""
        t = float(np.asarray(theta).reshape(()))
        lo = math.exp(-self.a * t)
        hi = 0.0 if not self.doubly else math.exp(-self.b * t)
        return lo - hi

    def natural_param(self, source):
        return self.theta(source)

    def source_param(self, theta):
        return float(np.asarray(theta).reshape(()))

    def density(self, x, theta):
        t = float(np.asarray(theta).reshape(()))
        if x < self.a or x > self.b:
            return 0.0
        return math.exp(-t * x - self.log_normalizer(theta))

    def ratio_bounds(self, theta_p, theta_q):
        tp = float(np.asarray(theta_p).reshape(()))
        tq = float(np.asarray(theta_q).reshape(()))
        if tp == tq:
            return 1.0, 1.0
        if self.doubly:
            ends = [
                self.density(self.a, theta_q) / self.density(self.a, theta_p),
                self.density(self.b, theta_q) / self.density(self.b, theta_p),
            ]
            return min(ends), max(ends)
        at_a = tq / tp
        if tq > tp:
            return 0.0, at_a
        return at_a, math.inf

    def describe(self):
        return f"trunc_exp(a={self.a}, b={self.b})"


def gaussian_iso(d: int = 1) -> GaussianIso:
    return GaussianIso(d)


def poisson() -> Poisson:
    return Poisson()


def categorical(d: int) -> Categorical:
    return Categorical(d)


def vmf(d: int) -> VonMisesFisher:
    return VonMisesFisher(d)


def trunc_exp(a: float = 0.0, b: float = math.inf) -> TruncatedExponential:
    return TruncatedExponential(float(a), math.inf if b is None else float(b))


def family_from_name(name: str, *, dim: Optional[int] = None,
                     a: float = 0.0, b: Optional[float] = None) -> AefFamily:
    """Build a family from its external name, as used in spec files."""
    if name == "gaussian_iso":
        return gaussian_iso(dim or 1)
    if name == "poisson":
        return poisson()
    if name == "categorical":
        return categorical(dim or 1)
    if name == "vmf":
        return vmf(dim or 3)
    if name == "trunc_exp":
        return trunc_exp(a, math.inf if b is None else b)
    raise InputError(
        f"unknown family {name!r}; expected gaussian_iso, poisson, "
        f"categorical, vmf or trunc_exp"
    )


# ---------------------------------------------------------------------------
# mixtures and pair specs


@dataclass(frozen=True)
class MixtureSpec:
    """Finite mixture of members of one family: weights and component thetas."""

    weights: tuple
    thetas: tuple

    def __init__(self, weights: Sequence[float], thetas: Sequence):
        w = tuple(float(x) for x in weights)
        if len(w) != len(thetas):
            raise InputError(
                f"{len(w)} weights against {len(thetas)} component parameters"
            )
        if len(w) == 0:
            raise InputError("a mixture needs at least one component")
        if any(x <= 0 for x in w):
            raise InputError("mixture weights must be positive")
        if abs(math.fsum(w) - 1.0) > _SUM_TOL:
            raise InputError(f"mixture weights sum to {math.fsum(w)!r}, not 1")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "thetas", tuple(thetas))

    def validated(self, fam: AefFamily) -> "MixtureSpec":
        for t in self.thetas:
            fam.theta(t)
        return self


@dataclass(frozen=True)
class PairSpec:
    """A (p, q) pair as described by a JSON spec file.

    kind = "discrete": p and q are DiscreteDistributions.
    kind = "aef": fam plus two natural parameters.
    kind = "mixture": fam, theta_p, and a MixtureSpec for q.
    """

    kind: str
    p: Optional[DiscreteDistribution] = None
    q: Optional[DiscreteDistribution] = None
    fam: Optional[AefFamily] = None
    theta_p: Optional[np.ndarray] = None
    theta_q: Optional[np.ndarray] = None
    mixture: Optional[MixtureSpec] = None

    def describe(self) -> str:
        if self.kind == "discrete":
            return self.p.describe()
        if self.kind == "aef":
            return self.fam.describe()
        return f"mixture[{len(self.mixture.weights)}] of {self.fam.describe()}"


def _require(obj: dict, key: str):
    if key not in obj:
        raise InputError(f"distribution spec is missing the {key!r} field")
    return obj[key]


def load_pair_spec(source) -> PairSpec:
    """Parse a pair spec from a dict, a JSON string, or a file path."""
    if isinstance(source, PairSpec):
        return source
    if isinstance(source, dict):
        obj = source
    else:
        text = str(source)
        if text.lstrip().startswith("{"):
            raw = text
        else:
            try:
                with open(text, "r", encoding="utf-8") as fh:
                    raw = fh.read()
            except OSError as exc:
                raise InputError(f"cannot read spec file {text!r}: {exc}") from exc
        try:
            obj = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise InputError(f"spec is not valid JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise InputError("spec must be a JSON object")

    kind = _require(obj, "kind")
    if kind == "discrete":
        return PairSpec(
            kind="discrete",
            p=DiscreteDistribution(_require(obj, "p")),
            q=DiscreteDistribution(_require(obj, "q")),
        )

    if kind in ("aef", "mixture"):
        fam_name = _require(obj, "family")
        theta_p_raw = _require(obj, "theta_p")
        tp_len = len(np.atleast_1d(np.asarray(theta_p_raw, dtype=float)))
        fam = family_from_name(
            fam_name,
            dim=obj.get("d", tp_len),
            a=obj.get("a", 0.0),
            b=obj.get("b", None),
        )
        theta_p = fam.theta(theta_p_raw)
        if kind == "aef":
            return PairSpec(
                kind="aef",
                fam=fam,
                theta_p=theta_p,
                theta_q=fam.theta(_require(obj, "theta_q")),
            )
        mix = MixtureSpec(_require(obj, "weights"), tuple(_require(obj, "thetas")))
        return PairSpec(
            kind="mixture", fam=fam, theta_p=theta_p,
            mixture=mix.validated(fam),
        )

    raise InputError(
        f"unknown spec kind {kind!r}; expected discrete, aef or mixture"
    )
