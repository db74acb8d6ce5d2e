"""Moment-level test of the semicircle characterization.

From a symmetric coefficient matrix A and a vector b this module builds
the linear form L = sum b_j T_j and the quadratic form
Q = sum a_jk T_j T_k over free, identically distributed variables, and
probes whether L and Q behave like a free pair.

The probe compares, for every alternating pattern in the centered forms,
the exact joint moment (multinomial expansion into words, summed through
the non-crossing engine) against the value obtained by treating (L, Q)
as a genuinely free pair with their individual moment sequences.  Both
sides are exact rationals, so a verdict of "consistent with freeness" is
a certified zero of every deviation up to the configured degree, and a
nonzero deviation is an exact witness against freeness.

The admissibility conditions on (A, b) are: A b = 0, the diagonal power
sums sum_j b_j^m a_jj never vanish, and b_j a_jj != 0 for some j.  The
power-sum condition quantifies over every positive integer m; grouping
indices with equal b_j reduces it to a generalized power sum over at
most n distinct values, which a Vandermonde argument pins down by the
first n exponents.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from typing import Iterable, Sequence

from .errors import DomainError
from .measures import MomentSequence, RationalLike, as_fraction, format_fraction
from .word_engine import centered_product_moment, mixed_moment, Word

__all__ = [
    "QuadraticFormSpec",
    "ValidityReport",
    "validate_spec",
    "preset_sample_mean_variance",
    "joint_moment",
    "form_moments",
    "DichotomyReport",
    "freeness_dichotomy",
    "alternating_form_patterns",
]

Pattern = tuple[tuple[str, int], ...]


@dataclass(frozen=True)
class QuadraticFormSpec:
    """Coefficients (A, b) of the quadratic form Q and linear form L."""

    n: int
    a: tuple[tuple[Fraction, ...], ...]
    b: tuple[Fraction, ...]

    def __init__(
        self,
        a: Iterable[Iterable[RationalLike]],
        b: Iterable[RationalLike],
    ):
        rows = tuple(tuple(as_fraction(v) for v in row) for row in a)
        vec = tuple(as_fraction(v) for v in b)
        n = len(vec)
        if n < 2:
            raise DomainError("need at least 2 variables")
        if len(rows) != n or any(len(r) != n for r in rows):
            raise DomainError(f"A must be {n}x{n} to match b")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "a", rows)
        object.__setattr__(self, "b", vec)


@dataclass(frozen=True)
class ValidityReport:
    """Exact pass/fail for each admissibility condition on (A, b)."""

    symmetric: bool
    annihilates_b: bool
    power_sums_nonzero: bool
    power_sums: tuple[Fraction, ...]
    has_diagonal_coupling: bool
    failures: tuple[str, ...]

    @property
    def passed(self) -> bool:
        return not self.failures


def validate_spec(spec: QuadraticFormSpec) -> ValidityReport:
    """Check symmetry, A b = 0, nonvanishing diagonal power sums, coupling."""
    n = spec.n
    symmetric = all(
        spec.a[i][j] == spec.a[j][i] for i in range(n) for j in range(i + 1, n)
    )
    annihilates = all(
        sum((spec.a[i][j] * spec.b[j] for j in range(n)), start=Fraction(0)) == 0
        for i in range(n)
    )
    # Group equal b-values: the power sum is sum_v c_v v^m over at most n
    # distinct values, determined by exponents m = 1..n.
    grouped: dict[Fraction, Fraction] = {}
    for j in range(n):
        grouped[spec.b[j]] = grouped.get(spec.b[j], Fraction(0)) + spec.a[j][j]
    sums = tuple(
        sum((c * v ** m for v, c in grouped.items()), start=Fraction(0))
        for m in range(1, n + 1)
    )
    power_ok = all(s != 0 for s in sums)
    coupling = any(spec.b[j] * spec.a[j][j] != 0 for j in range(n))

    failures = []
    if not symmetric:
        failures.append("coefficient matrix is not symmetric")
    if not annihilates:
        failures.append("mean-annihilation condition A b = 0 fails")
    if not power_ok:
        failures.append("diagonal power-sum condition sum b_j^m a_jj != 0 fails")
    if not coupling:
        failures.append("diagonal coupling condition b_j a_jj != 0 for some j fails")
    return ValidityReport(
        symmetric=symmetric,
        annihilates_b=annihilates,
        power_sums_nonzero=power_ok,
        power_sums=sums,
        has_diagonal_coupling=coupling,
        failures=tuple(failures),
    )


def preset_sample_mean_variance(n: int) -> QuadraticFormSpec:
    """Coefficients of the sample mean and sample variance of n variables.

    b_j = 1/n makes L the sample mean; a_jk = delta_jk/n - 1/n^2 makes Q
    the sample variance (1/n) sum (T_j - mean)^2.
    """
    if n < 2:
        raise DomainError("need at least 2 variables")
    inv = Fraction(1, n)
    inv2 = Fraction(1, n * n)
    a = [
        [(inv if j == k else Fraction(0)) - inv2 for k in range(n)]
        for j in range(n)
    ]
    b = [inv] * n
    return QuadraticFormSpec(a, b)


# ---------------------------------------------------------------------------
# joint moments of L/Q patterns
# ---------------------------------------------------------------------------


def _normalize_pattern(pattern: Sequence[tuple[str, int]]) -> Pattern:
    if not pattern:
        raise DomainError("empty pattern")
    out = []
    for name, exp in pattern:
        if name not in ("L", "Q"):
            raise DomainError(f"pattern letters must be 'L' or 'Q', got {name!r}")
        if exp < 1:
            raise DomainError("pattern exponents must be >= 1")
        out.append((name, int(exp)))
    return tuple(out)


def pattern_degree(pattern: Sequence[tuple[str, int]]) -> int:
    return sum((1 if name == "L" else 2) * exp for name, exp in pattern)


def _canonical_word_value(
    marginal: MomentSequence, n: int, letters: Sequence[int], cache: dict
) -> Fraction:
    # Identically distributed marginals: words equal up to variable
    # relabeling share one cache slot.
    mapping: dict[int, int] = {}
    canon = []
    for l in letters:
        if l not in mapping:
            mapping[l] = len(mapping) + 1
        canon.append(mapping[l])
    key = tuple(canon)
    hit = cache.get(key)
    if hit is None:
        marginals = [marginal] * len(mapping)
        hit = mixed_moment(marginals, Word(key))
        cache[key] = hit
    return hit


def joint_moment(
    spec: QuadraticFormSpec,
    marginal: MomentSequence,
    pattern: Sequence[tuple[str, int]],
) -> Fraction:
    """Exact trace of an (uncentered) L/Q pattern such as L Q^2 L.

    Expands every L into its weighted letters and every Q into weighted
    letter pairs, preserving noncommutative order, and sums the word
    traces.  All variables carry the same marginal.
    """
    pattern = _normalize_pattern(pattern)
    degree = pattern_degree(pattern)
    if marginal.order < degree:
        raise DomainError(
            f"pattern has degree {degree} but marginal order is {marginal.order}"
        )
    n = spec.n
    factors: list[str] = []
    for name, exp in pattern:
        factors.extend([name] * exp)

    l_options = [
        (spec.b[j], (j + 1,)) for j in range(n) if spec.b[j] != 0
    ]
    q_options = [
        (spec.a[j][k], (j + 1, k + 1))
        for j in range(n)
        for k in range(n)
        if spec.a[j][k] != 0
    ]

    grouped: dict[tuple[int, ...], Fraction] = {}
    for combo in product(*[l_options if f == "L" else q_options for f in factors]):
        coeff = Fraction(1)
        letters: list[int] = []
        for c, ls in combo:
            coeff *= c
            letters.extend(ls)
        key = tuple(letters)
        grouped[key] = grouped.get(key, Fraction(0)) + coeff

    cache = _word_cache(marginal)
    total = Fraction(0)
    for letters, coeff in grouped.items():
        if coeff == 0:
            continue
        total += coeff * _canonical_word_value(marginal, n, letters, cache)
    return total


_WORD_CACHES: dict[MomentSequence, dict] = {}


def _word_cache(marginal: MomentSequence) -> dict:
    cache = _WORD_CACHES.get(marginal)
    if cache is None:
        cache = {}
        _WORD_CACHES[marginal] = cache
    return cache


def form_moments(
    spec: QuadraticFormSpec,
    marginal: MomentSequence,
    which: str,
    order: int,
) -> MomentSequence:
    """Moment sequence of L or Q itself, through the word engine."""
    if which not in ("L", "Q"):
        raise DomainError("which must be 'L' or 'Q'")
    return MomentSequence(
        joint_moment(spec, marginal, ((which, k),)) for k in range(1, order + 1)
    )


# ---------------------------------------------------------------------------
# the dichotomy
# ---------------------------------------------------------------------------


def alternating_form_patterns(max_degree: int) -> list[Pattern]:
    """All alternating patterns in L and Q with total degree <= max_degree.

    Patterns are sequences of single L and Q letters with adjacent
    letters distinct, at least two letters long, sorted by degree.
    """
    if max_degree < 3:
        return []
    out: list[Pattern] = []
    for start in ("L", "Q"):
        letters = [start]
        while True:
            letters.append("Q" if letters[-1] == "L" else "L")
            pattern = tuple((name, 1) for name in letters)
            if pattern_degree(pattern) > max_degree:
                break
            out.append(pattern)
    out.sort(key=lambda p: (pattern_degree(p), p))
    return out


@dataclass(frozen=True)
class DichotomyReport:
    """Exact deviations from the freeness prediction, pattern by pattern."""

    max_word_length: int
    deviations: tuple[tuple[Pattern, Fraction], ...]
    max_abs_deviation: Fraction
    verdict: str
    note: str = field(default="")

    @property
    def consistent_with_free(self) -> bool:
        return self.verdict == "consistent-with-free"

    def first_nonzero(self):
        for pattern, dev in self.deviations:
            if dev != 0:
                return pattern, dev
        return None


def _centered_pattern_true_value(
    spec: QuadraticFormSpec,
    marginal: MomentSequence,
    pattern: Pattern,
    centers: dict[str, Fraction],
) -> Fraction:
    # Expand prod (W_i - c_i) over subsets of letters with nonzero center.
    droppable = [i for i, (name, _) in enumerate(pattern) if centers[name] != 0]
    total = Fraction(0)
    for mask in range(1 << len(droppable)):
        coeff = Fraction(1)
        dropped = set()
        for bit, idx in enumerate(droppable):
            if mask >> bit & 1:
                dropped.add(idx)
                coeff *= -centers[pattern[idx][0]]
        kept = [pattern[i] for i in range(len(pattern)) if i not in dropped]
        if kept:
            merged: list[tuple[str, int]] = []
            for name, exp in kept:
                if merged and merged[-1][0] == name:
                    merged[-1] = (name, merged[-1][1] + exp)
                else:
                    merged.append((name, exp))
            value = joint_moment(spec, marginal, merged)
        else:
            value = Fraction(1)
        total += coeff * value
    return total


def freeness_dichotomy(
    spec: QuadraticFormSpec,
    marginal: MomentSequence,
    max_word_length: int,
) -> DichotomyReport:
    """Compare true joint moments of (L, Q) against the free prediction.

    For every alternating pattern in the centered forms with total degree
    up to ``max_word_length``, the true side expands the pattern into
    words of the underlying variables, while the prediction side treats
    (L, Q) as a free pair with their individual moment sequences and
    evaluates the same centered pattern through the word engine.  The two
    code paths share no intermediate results, so agreement is a genuine
    cross-check.  Scanning runs in increasing degree; the verdict names
    the first degree at which a deviation appears, if any.
    """
    report = validate_spec(spec)
    if not report.passed:
        raise DomainError(
            "refusing to run the dichotomy on an inadmissible form: "
            + "; ".join(report.failures)
        )
    if marginal.m(1) != 0:
        raise DomainError("the dichotomy assumes centered variables (m_1 = 0)")
    if marginal.order < max_word_length:
        raise DomainError(
            f"marginal order {marginal.order} below requested degree {max_word_length}"
        )

    patterns = alternating_form_patterns(max_word_length)
    if not patterns:
        return DichotomyReport(
            max_word_length=max_word_length,
            deviations=(),
            max_abs_deviation=Fraction(0),
            verdict="consistent-with-free",
            note="no alternating pattern fits below degree 3",
        )
    centers = {
        "L": joint_moment(spec, marginal, (("L", 1),)),
        "Q": joint_moment(spec, marginal, (("Q", 1),)),
    }

    max_l = max((sum(1 for n, _ in p if n == "L") for p in patterns), default=1)
    max_q = max((sum(1 for n, _ in p if n == "Q") for p in patterns), default=1)
    l_moments = form_moments(spec, marginal, "L", max(max_l, 1))
    q_moments = form_moments(spec, marginal, "Q", max(max_q, 1))

    deviations: list[tuple[Pattern, Fraction]] = []
    for pattern in patterns:
        true_value = _centered_pattern_true_value(spec, marginal, pattern, centers)
        letters = tuple((1 if name == "L" else 2, 1) for name, _ in pattern)
        predicted = centered_product_moment((l_moments, q_moments), letters)
        deviations.append((pattern, true_value - predicted))

    max_abs = max((abs(d) for _, d in deviations), default=Fraction(0))
    verdict = "consistent-with-free"
    for pattern, dev in deviations:
        if dev != 0:
            verdict = f"not-free-at-order-{pattern_degree(pattern)}"
            break
    note = (
        "scan depth is an empirical default; freeness violations are only "
        "guaranteed to surface at some finite degree"
    )
    return DichotomyReport(
        max_word_length=max_word_length,
        deviations=tuple(deviations),
        max_abs_deviation=max_abs,
        verdict=verdict,
        note=note,
    )
