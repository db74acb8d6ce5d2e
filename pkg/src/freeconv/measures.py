"""Probability measures on the real line and their moment-level transforms.

Three measure kinds are supported: finite atomic measures with exact
rational atoms, the semicircle family, and tabulated densities on a grid.
Atomic measures are carried in exact rational arithmetic end to end; the
analytic path (transform evaluation on grids) uses binary64, with an
additional exact evaluation path for atomic measures on the negative real
axis.

For a measure ``mu`` supported on [0, inf) the module evaluates

    psi(z)  = integral of z*x / (1 - z*x) d mu(x),   z outside [0, inf),
    K(z)    = psi(z) / (1 + psi(z)),

the moment generating transform and its Krein-class companion.  K is
analytic and nonpositive on the negative real axis and vanishes at 0-;
multiplicative free convolution is subordinated at the level of K.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence, Union

import numpy as np

from .errors import DomainError, ParseError

__all__ = [
    "Atomic",
    "Semicircle",
    "DensityGrid",
    "Measure",
    "MomentSequence",
    "as_fraction",
    "format_fraction",
    "moments",
    "absolute_moment",
    "fractional_moment",
    "hankel_psd",
    "psi",
    "psi_exact",
    "krein_k",
    "krein_k_exact",
    "is_positive_supported",
    "in_m_plus",
    "measure_from_json",
    "measure_to_json",
]

#: How close to the positive real axis an evaluation point may get.
AXIS_TOLERANCE = 1e-14

#: How close 1 + psi may get to zero before K is considered at a pole.
POLE_TOLERANCE = 1e-14

RationalLike = Union[Fraction, int, str, float]


def as_fraction(value: RationalLike) -> Fraction:
    """Coerce ``value`` to an exact Fraction.

    Accepts Fractions, ints, "p/q" strings and floats.  Floats are
    promoted by their exact binary64 ratio, so the quantization is the
    one already present in the input.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (int, str, float)):
        try:
            return Fraction(value)
        except (ValueError, ZeroDivisionError) as exc:
            raise ParseError(f"cannot interpret {value!r} as a rational") from exc
    raise ParseError(f"cannot interpret {type(value).__name__} as a rational")


def format_fraction(value: Fraction) -> str:
    """Render a Fraction as "p/q" (or plain "p" for integers)."""
    return str(value)


# ---------------------------------------------------------------------------
# measure kinds
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Atomic:
    """Finite atomic measure: rational locations with rational weights.

    Weights must be nonnegative and sum exactly to one.  Atoms are
    normalized to ascending location order; zero-weight atoms are dropped.
    """

    atoms: tuple[tuple[Fraction, Fraction], ...]

    def __init__(self, atoms: Iterable[tuple[RationalLike, RationalLike]]):
        pairs = sorted(
            (as_fraction(loc), as_fraction(w)) for loc, w in atoms
        )
        pairs = [(loc, w) for loc, w in pairs if w != 0]
        if not pairs:
            raise DomainError("atomic measure needs at least one atom")
        if any(w < 0 for _, w in pairs):
            raise DomainError("atom weights must be nonnegative")
        if len({loc for loc, _ in pairs}) != len(pairs):
            raise DomainError("atom locations must be distinct")
        total = sum(w for _, w in pairs)
        if total != 1:
            raise DomainError(f"atom weights must sum to 1, got {total}")
        object.__setattr__(self, "atoms", tuple(pairs))

    def weight_at(self, location: RationalLike) -> Fraction:
        loc = as_fraction(location)
        for x, w in self.atoms:
            if x == loc:
                return w
        return Fraction(0)


@dataclass(frozen=True)
class Semicircle:
    """Semicircle distribution with density 2/(pi r^2) * sqrt((r^2 - (x-m)^2)+).

    ``center`` and ``radius`` are stored as exact rationals so that the
    moment recursion stays exact; floats are promoted by their binary64
    ratio.
    """

    center: Fraction
    radius: Fraction

    def __init__(self, center: RationalLike, radius: RationalLike):
        c = as_fraction(center)
        r = as_fraction(radius)
        if r <= 0:
            raise DomainError("semicircle radius must be positive")
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "radius", r)


@dataclass(frozen=True, eq=False)
class DensityGrid:
    """Density tabulated on an ascending grid, trapezoid-normalized.

    The trapezoid integral of ``f`` over ``x`` must equal 1 within 1e-12;
    use :meth:`normalized` to rescale raw samples.
    """

    x: np.ndarray
    f: np.ndarray

    def __init__(self, x: Sequence[float], f: Sequence[float]):
        xa = np.asarray(x, dtype=float)
        fa = np.asarray(f, dtype=float)
        if xa.ndim != 1 or fa.shape != xa.shape:
            raise DomainError("grid abscissae and density must be 1-d and equal length")
        if xa.size < 2:
            raise DomainError("density grid needs at least 2 nodes")
        if not np.all(np.diff(xa) > 0):
            raise DomainError("grid abscissae must be strictly ascending")
        if np.any(fa < 0):
            raise DomainError("density values must be nonnegative")
        mass = float(np.trapezoid(fa, xa))
        if abs(mass - 1.0) > 1e-12:
            raise DomainError(f"density must integrate to 1 within 1e-12, got {mass!r}")
        xa.setflags(write=False)
        fa.setflags(write=False)
        object.__setattr__(self, "x", xa)
        object.__setattr__(self, "f", fa)

    @classmethod
    def normalized(cls, x: Sequence[float], f: Sequence[float]) -> "DensityGrid":
        xa = np.asarray(x, dtype=float)
        fa = np.asarray(f, dtype=float)
        mass = float(np.trapezoid(fa, xa))
        if mass <= 0:
            raise DomainError("cannot normalize a density with nonpositive mass")
        return cls(xa, fa / mass)


Measure = Union[Atomic, Semicircle, DensityGrid]


def is_positive_supported(mu: Measure) -> bool:
    """True when the support of ``mu`` lies in [0, inf)."""
    if isinstance(mu, Atomic):
        return all(loc >= 0 for loc, _ in mu.atoms)
    if isinstance(mu, Semicircle):
        return mu.center - mu.radius >= 0
    if isinstance(mu, DensityGrid):
        lo = float(mu.x[0])
        return lo >= 0 or (lo < 0 and not np.any(mu.f[mu.x < 0] > 0))
    raise TypeError(f"not a measure: {mu!r}")


def in_m_plus(mu: Measure) -> bool:
    """True when ``mu`` is supported on [0, inf) with mass at 0 below 1."""
    if not is_positive_supported(mu):
        return False
    if isinstance(mu, Atomic):
        return mu.weight_at(0) < 1
    return True


# ---------------------------------------------------------------------------
# moments
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MomentSequence:
    """Exact rational moments m_1..m_D of a distribution (m_0 = 1 implicit)."""

    moments: tuple[Fraction, ...]

    def __init__(self, values: Iterable[RationalLike]):
        vals = tuple(as_fraction(v) for v in values)
        if not vals:
            raise DomainError("a moment sequence needs order >= 1")
        object.__setattr__(self, "moments", vals)

    @property
    def order(self) -> int:
        return len(self.moments)

    def m(self, k: int) -> Fraction:
        """Moment m_k, with m_0 = 1."""
        if k == 0:
            return Fraction(1)
        if not 1 <= k <= self.order:
            raise DomainError(f"moment m_{k} outside stored order {self.order}")
        return self.moments[k - 1]

    def truncate(self, order: int) -> "MomentSequence":
        if not 1 <= order <= self.order:
            raise DomainError(f"cannot truncate order-{self.order} sequence to {order}")
        return MomentSequence(self.moments[:order])

    def __iter__(self):
        return iter(self.moments)


def _catalan(k: int) -> int:
    return math.comb(2 * k, k) // (k + 1)


def _semicircle_centered_moments(radius: Fraction, order: int) -> list[Fraction]:
    out = []
    for k in range(1, order + 1):
        if k % 2:
            out.append(Fraction(0))
        else:
            out.append(_catalan(k // 2) * (radius / 2) ** k)
    return out


def moments(mu: Measure, order: int) -> MomentSequence:
    """Exact moments m_k = integral of x^k d mu for k = 1..order.

    Atomic and semicircle measures are exact; grid measures are integrated
    by the composite trapezoid rule and the binary64 results promoted to
    rationals by their exact float ratio.
    """
    if order < 1:
        raise DomainError("moment order must be >= 1")
    if isinstance(mu, Atomic):
        vals = [
            sum((w * loc ** k for loc, w in mu.atoms), start=Fraction(0))
            for k in range(1, order + 1)
        ]
    elif isinstance(mu, Semicircle):
        centered = [Fraction(1)] + _semicircle_centered_moments(mu.radius, order)
        vals = [
            sum(
                (
                    math.comb(k, j) * mu.center ** (k - j) * centered[j]
                    for j in range(0, k + 1)
                ),
                start=Fraction(0),
            )
            for k in range(1, order + 1)
        ]
    elif isinstance(mu, DensityGrid):
        vals = [
            as_fraction(float(np.trapezoid(mu.f * mu.x ** k, mu.x)))
            for k in range(1, order + 1)
        ]
    else:
        raise TypeError(f"not a measure: {mu!r}")
    seq = MomentSequence(vals)
    if not hankel_psd(seq, shifted=is_positive_supported(mu)):
        raise DomainError("moment sequence from measure failed the Hankel check")
    return seq


def absolute_moment(mu: Measure, alpha: int) -> Fraction:
    """Exact absolute moment of integer order: integral of |x|^alpha d mu."""
    if alpha < 0:
        raise DomainError("absolute moment order must be >= 0")
    if alpha == 0:
        return Fraction(1)
    if isinstance(mu, Atomic):
        return sum((w * abs(loc) ** alpha for loc, w in mu.atoms), start=Fraction(0))
    if isinstance(mu, Semicircle):
        if is_positive_supported(mu):
            return moments(mu, alpha).m(alpha)
        raise DomainError("exact absolute moments only for positively supported semicircles")
    if isinstance(mu, DensityGrid):
        return as_fraction(float(np.trapezoid(mu.f * np.abs(mu.x) ** alpha, mu.x)))
    raise TypeError(f"not a measure: {mu!r}")


def fractional_moment(mu: Measure, alpha: float) -> float:
    """m_alpha = integral of x^alpha d mu for a positively supported measure."""
    if alpha < 0:
        raise DomainError("fractional moment order must be >= 0")
    if not is_positive_supported(mu):
        raise DomainError("fractional moments require support in [0, inf)")
    if isinstance(mu, Atomic):
        return sum(float(w) * float(loc) ** alpha for loc, w in mu.atoms if loc > 0) + (
            float(mu.weight_at(0)) if alpha == 0 else 0.0
        )
    if isinstance(mu, Semicircle):
        from scipy.integrate import quad

        c, r = float(mu.center), float(mu.radius)
        val, _ = quad(
            lambda t: 2.0 / (math.pi * r * r) * math.sqrt(max(r * r - (t - c) ** 2, 0.0)) * t ** alpha,
            c - r,
            c + r,
        )
        return float(val)
    if isinstance(mu, DensityGrid):
        xs = np.where(mu.x > 0, mu.x, 0.0)
        return float(np.trapezoid(mu.f * xs ** alpha, mu.x))
    raise TypeError(f"not a measure: {mu!r}")


def hankel_psd(seq: MomentSequence, shifted: bool = False, tol: float = 1e-9) -> bool:
    """Check positive semidefiniteness of the Hankel matrices of a sequence.

    ``shifted`` additionally checks the once-shifted Hankel matrix, the
    extra condition satisfied by measures on [0, inf).  The check runs in
    binary64 with tolerance ``tol`` relative to the matrix scale.
    """
    ms = [Fraction(1)] + list(seq.moments)

    def psd(mat: np.ndarray) -> bool:
        scale = max(1.0, float(np.abs(mat).max()))
        return bool(np.linalg.eigvalsh(mat).min() >= -tol * scale)

    n = (len(ms) - 1) // 2 + 1
    hank = np.array([[float(ms[i + j]) for j in range(n)] for i in range(n)])
    if not psd(hank):
        return False
    if shifted:
        n1 = len(ms) // 2
        if n1 >= 1:
            hank1 = np.array(
                [[float(ms[i + j + 1]) for j in range(n1)] for i in range(n1)]
            )
            if not psd(hank1):
                return False
    return True


# ---------------------------------------------------------------------------
# transforms
# ---------------------------------------------------------------------------


def _require_transform_domain(mu: Measure, z: complex) -> complex:
    if isinstance(mu, Semicircle):
        raise DomainError(
            "transform evaluation is not supported for semicircle measures; "
            "they participate through moments only"
        )
    if not is_positive_supported(mu):
        raise DomainError("transform evaluation requires support in [0, inf)")
    z = complex(z)
    if abs(z.imag) <= AXIS_TOLERANCE and z.real >= 0.0:
        raise DomainError(f"evaluation point {z} lies on [0, inf)")
    return z


def psi(mu: Measure, z: complex) -> complex:
    """Moment generating transform: integral of z*x/(1 - z*x) d mu(x)."""
    z = _require_transform_domain(mu, z)
    if isinstance(mu, Atomic):
        return sum(
            complex(w) * z * complex(loc) / (1.0 - z * complex(loc))
            for loc, w in mu.atoms
        )
    vals = z * mu.x / (1.0 - z * mu.x)
    return complex(np.trapezoid(mu.f * vals, mu.x))


def krein_k(mu: Measure, z: complex) -> complex:
    """Krein transform K = psi / (1 + psi).

    On the negative real axis K is real, nonpositive, and tends to 0 at
    0-.  Raises when 1 + psi comes within ``POLE_TOLERANCE`` of zero.
    """
    p = psi(mu, z)
    denom = 1.0 + p
    if abs(denom) <= POLE_TOLERANCE:
        raise DomainError(f"K evaluated too close to a pole at z={z}")
    return p / denom


def psi_exact(mu: Atomic, x: RationalLike) -> Fraction:
    """Exact psi at a rational point off [0, inf), for atomic measures."""
    if not isinstance(mu, Atomic):
        raise DomainError("exact transform evaluation needs an atomic measure")
    if not is_positive_supported(mu):
        raise DomainError("transform evaluation requires support in [0, inf)")
    xq = as_fraction(x)
    if xq >= 0:
        raise DomainError(f"evaluation point {xq} lies on [0, inf)")
    total = Fraction(0)
    for loc, w in mu.atoms:
        total += w * xq * loc / (1 - xq * loc)
    return total


def krein_k_exact(mu: Atomic, x: RationalLike) -> Fraction:
    """Exact Krein transform at a rational point, for atomic measures."""
    p = psi_exact(mu, x)
    denom = 1 + p
    if denom == 0:
        raise DomainError(f"K has a pole at x={x}")
    return p / denom


# ---------------------------------------------------------------------------
# JSON interchange
# ---------------------------------------------------------------------------


def measure_to_json(mu: Measure) -> str:
    """Serialize a measure to its JSON interchange form."""
    if isinstance(mu, Atomic):
        payload = {
            "kind": "atomic",
            "atoms": [[format_fraction(loc), format_fraction(w)] for loc, w in mu.atoms],
        }
    elif isinstance(mu, Semicircle):
        payload = {
            "kind": "semicircle",
            "center": float(mu.center),
            "radius": float(mu.radius),
        }
    elif isinstance(mu, DensityGrid):
        payload = {"kind": "grid", "x": mu.x.tolist(), "f": mu.f.tolist()}
    else:
        raise TypeError(f"not a measure: {mu!r}")
    return json.dumps(payload)


def measure_from_json(source: Union[str, dict]) -> Measure:
    """Parse a measure from JSON text or an already-decoded dict.

    Schemas::

        {"kind": "atomic", "atoms": [["0", "1/2"], ["1", "1/2"]]}
        {"kind": "semicircle", "center": 0.0, "radius": 2.0}
        {"kind": "grid", "x": [...], "f": [...]}
    """
    if isinstance(source, str):
        try:
            data = json.loads(source)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid measure JSON: {exc}") from exc
    else:
        data = source
    if not isinstance(data, dict) or "kind" not in data:
        raise ParseError("measure JSON must be an object with a 'kind' field")
    kind = data["kind"]
    try:
        if kind == "atomic":
            return Atomic([(loc, w) for loc, w in data["atoms"]])
        if kind == "semicircle":
            return Semicircle(data["center"], data["radius"])
        if kind == "grid":
            return DensityGrid(data["x"], data["f"])
    except KeyError as exc:
        raise ParseError(f"measure JSON missing field: {exc}") from exc
    except (TypeError, ValueError) as exc:
        if isinstance(exc, DomainError):
            raise
        raise ParseError(f"malformed measure JSON: {exc}") from exc
    raise ParseError(f"unknown measure kind: {kind!r}")
