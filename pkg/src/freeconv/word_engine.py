"""Mixed moments of free families via monochromatic non-crossing partitions.

For free variables T_1..T_m with known marginal moments, the trace of a
word T_{j_1}...T_{j_n} equals the sum over non-crossing partitions of
{1..n} whose blocks are monochromatic in the variable index, of the
product of free cumulants kappa_{|V|} of the block's variable.  The sum
is evaluated by recursing on the block containing the leftmost letter;
partitions are never materialized and per-variable cumulants are reused,
so memory stays linear in the truncation order.

Results are exact rationals, which is what certifies the zero-vs-nonzero
verdicts of the alternating-word checks downstream.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Iterable, Iterator, Sequence

from .errors import DomainError, ParseError
from .measures import MomentSequence
from .transforms import free_from_moments

__all__ = [
    "catalan",
    "NonCrossingPartition",
    "enumerate_nc",
    "Word",
    "mixed_moment",
    "centered_product_moment",
    "alternating_index_words",
    "alternating_centered_check",
    "AlternatingCheckReport",
    "clear_cache",
]

MAX_NC_ORDER = 14  # Catalan(14) = 2674440 caps enumeration cost


def catalan(n: int) -> int:
    """n-th Catalan number, the cardinality of NC(n)."""
    if n < 0:
        raise DomainError("Catalan index must be >= 0")
    return math.comb(2 * n, n) // (n + 1)


@dataclass(frozen=True)
class NonCrossingPartition:
    """Partition of {1..n} with no two blocks interleaving."""

    blocks: tuple[tuple[int, ...], ...]

    def __init__(self, blocks: Iterable[Iterable[int]]):
        blks = tuple(tuple(sorted(b)) for b in blocks)
        blks = tuple(sorted(blks))
        elems = sorted(e for b in blks for e in b)
        n = len(elems)
        if n == 0 or elems != list(range(1, n + 1)):
            raise DomainError("blocks must partition {1..n}")
        if _has_crossing(blks):
            raise DomainError("blocks cross")
        object.__setattr__(self, "blocks", blks)

    @property
    def n(self) -> int:
        return sum(len(b) for b in self.blocks)

    def block_of(self, element: int) -> tuple[int, ...]:
        for b in self.blocks:
            if element in b:
                return b
        raise DomainError(f"element {element} not in partition")


def _has_crossing(blocks: Sequence[Sequence[int]]) -> bool:
    # a < b < c < d with {a, c} and {b, d} in different blocks
    for b1, b2 in combinations(blocks, 2):
        for a, c in combinations(b1, 2):
            for b, d in combinations(b2, 2):
                if a < b < c < d or b < a < d < c:
                    return True
    return False


def enumerate_nc(n: int) -> Iterator[NonCrossingPartition]:
    """Yield every non-crossing partition of {1..n} exactly once."""
    if not 1 <= n <= MAX_NC_ORDER:
        raise DomainError(f"enumeration supports 1 <= n <= {MAX_NC_ORDER}")
    for blocks in _nc_blocks(tuple(range(1, n + 1))):
        yield NonCrossingPartition(blocks)


def _nc_blocks(elements: tuple[int, ...]) -> Iterator[list[tuple[int, ...]]]:
    # The block of elements[0] splits the rest into independent gaps.
    if not elements:
        yield []
        return
    first, rest = elements[0], elements[1:]
    for k in range(len(rest) + 1):
        for chosen in combinations(range(len(rest)), k):
            block = (first,) + tuple(rest[i] for i in chosen)
            bounds = [*chosen, len(rest)]
            gaps = []
            prev = -1
            for b in bounds:
                gaps.append(rest[prev + 1 : b])
                prev = b
            for combo in _product_of_gap_partitions(gaps):
                yield [block, *combo]


def _product_of_gap_partitions(gaps: Sequence[tuple[int, ...]]) -> Iterator[list[tuple[int, ...]]]:
    if not gaps:
        yield []
        return
    head, tail = gaps[0], gaps[1:]
    for head_blocks in _nc_blocks(head):
        for tail_blocks in _product_of_gap_partitions(tail):
            yield [*head_blocks, *tail_blocks]


# ---------------------------------------------------------------------------
# words
# ---------------------------------------------------------------------------

_LETTER_RE = re.compile(r"^T(\d+)(?:\^(\d+))?$")


@dataclass(frozen=True)
class Word:
    """Word in noncommuting variables, flattened to exponent-1 letters."""

    letters: tuple[int, ...]

    def __init__(self, letters: Iterable[int]):
        ls = tuple(int(l) for l in letters)
        if not ls:
            raise DomainError("a word needs length >= 1")
        if any(l < 1 for l in ls):
            raise DomainError("variable indices are 1-based")
        object.__setattr__(self, "letters", ls)

    @classmethod
    def from_exponents(cls, pairs: Iterable[tuple[int, int]]) -> "Word":
        letters: list[int] = []
        for var, exp in pairs:
            if exp < 1:
                raise DomainError("exponents must be >= 1")
            letters.extend([var] * exp)
        return cls(letters)

    @classmethod
    def from_text(cls, text: str) -> "Word":
        """Parse "T1^2 T2 T1" style notation (whitespace-separated)."""
        pairs: list[tuple[int, int]] = []
        for token in text.split():
            match = _LETTER_RE.match(token)
            if not match:
                raise ParseError(f"bad word letter: {token!r}")
            var = int(match.group(1))
            exp = int(match.group(2) or 1)
            if var < 1 or exp < 1:
                raise ParseError(f"bad word letter: {token!r}")
            pairs.append((var, exp))
        if not pairs:
            raise ParseError("empty word")
        return cls.from_exponents(pairs)

    def __len__(self) -> int:
        return len(self.letters)

    @property
    def variables(self) -> tuple[int, ...]:
        return tuple(sorted(set(self.letters)))

    def multiplicity(self, var: int) -> int:
        return sum(1 for l in self.letters if l == var)

    def as_text(self) -> str:
        parts = []
        for var, exp in _run_lengths(self.letters):
            parts.append(f"T{var}" if exp == 1 else f"T{var}^{exp}")
        return " ".join(parts)


def _run_lengths(letters: Sequence[int]) -> list[tuple[int, int]]:
    out: list[tuple[int, int]] = []
    for l in letters:
        if out and out[-1][0] == l:
            out[-1] = (l, out[-1][1] + 1)
        else:
            out.append((l, 1))
    return out


# ---------------------------------------------------------------------------
# the moment engine
# ---------------------------------------------------------------------------

_CUMULANT_CACHE: dict[MomentSequence, int] = {}
_KAPPA_VALUES: list[tuple[Fraction, ...]] = []
_KAPPA_IDS: dict[tuple[Fraction, ...], int] = {}
_MOMENT_CACHE: dict[tuple, Fraction] = {}


def clear_cache() -> None:
    """Drop all memoized cumulants and word moments."""
    _CUMULANT_CACHE.clear()
    _KAPPA_VALUES.clear()
    _KAPPA_IDS.clear()
    _MOMENT_CACHE.clear()


def _intern_kappa(values: tuple[Fraction, ...]) -> int:
    kid = _KAPPA_IDS.get(values)
    if kid is None:
        kid = len(_KAPPA_VALUES)
        _KAPPA_IDS[values] = kid
        _KAPPA_VALUES.append(values)
    return kid


def _cumulants_of(marginal: MomentSequence) -> int:
    """Free-cumulant id of a marginal; memo keys stay small integers."""
    kid = _CUMULANT_CACHE.get(marginal)
    if kid is None:
        kid = _intern_kappa(free_from_moments(marginal).values)
        _CUMULANT_CACHE[marginal] = kid
    return kid


def _canonical(kappa_ids: Sequence[int], letters: Sequence[int]):
    """Relabel variables by first occurrence so equivalent words share cache."""
    mapping: dict[int, int] = {}
    order: list[int] = []
    relabeled = []
    for l in letters:
        if l not in mapping:
            mapping[l] = len(order)
            order.append(l)
        relabeled.append(mapping[l])
    return tuple(kappa_ids[v] for v in order), tuple(relabeled)


def _nc_moment(kappa_ids: tuple[int, ...], letters: tuple[int, ...]) -> Fraction:
    # letters are canonical: variable of letters[0] is 0. Sum over the
    # block containing position 0; gaps between block elements recurse.
    if not letters:
        return Fraction(1)
    key = (kappa_ids, letters)
    hit = _MOMENT_CACHE.get(key)
    if hit is not None:
        return hit
    kv = _KAPPA_VALUES[kappa_ids[0]]
    same = [i for i, l in enumerate(letters) if l == 0]
    n = len(letters)
    total = Fraction(0)
    for size in range(1, min(len(same), len(kv)) + 1):
        if kv[size - 1] == 0:
            continue
        for chosen in combinations(same[1:], size - 1):
            block = (0, *chosen)
            term = kv[size - 1]
            prev = 0
            for bound in (*block[1:], n):
                seg = letters[prev + 1 : bound]
                prev = bound
                if not seg:
                    continue
                term *= _nc_moment(*_canonical(kappa_ids, seg))
                if term == 0:
                    break
            total += term
    _MOMENT_CACHE[key] = total
    return total


def mixed_moment(marginals: Sequence[MomentSequence], word: Word) -> Fraction:
    """Trace of a word in free variables with the given marginal moments.

    ``marginals[j-1]`` supplies the moments of variable T_j.  Each
    marginal must cover the multiplicity of its variable in the word.
    """
    nvars = max(word.letters)
    if len(marginals) < nvars:
        raise DomainError(f"word uses T{nvars} but only {len(marginals)} marginals given")
    for v in word.variables:
        need = word.multiplicity(v)
        if marginals[v - 1].order < need:
            raise DomainError(
                f"marginal of T{v} has order {marginals[v - 1].order}, need {need}"
            )
    kappa_ids = tuple(_cumulants_of(m) for m in marginals)
    zero_based = tuple(l - 1 for l in word.letters)
    return _nc_moment(*_canonical(kappa_ids, zero_based))


def centered_product_moment(
    marginals: Sequence[MomentSequence],
    letters: Sequence[tuple[int, int]],
) -> Fraction:
    """Trace of a product of centered powers prod_l (T_{j_l}^{p_l} - m_{p_l}).

    Expands the product over subsets of letters; letters whose centering
    constant vanishes never contribute a dropped term, so the expansion
    only branches on letters with nonzero m_{p_l}.
    """
    letters = [(int(v), int(p)) for v, p in letters]
    if not letters:
        raise DomainError("empty centered product")
    nvars = max(v for v, _ in letters)
    if len(marginals) < nvars:
        raise DomainError(f"need marginals for T1..T{nvars}")
    centers = []
    for v, p in letters:
        if p < 1:
            raise DomainError("exponents must be >= 1")
        centers.append(marginals[v - 1].m(p))
    kappa_ids = tuple(_cumulants_of(m) for m in marginals)

    droppable = [i for i, c in enumerate(centers) if c != 0]
    total = Fraction(0)
    for k in range(len(droppable) + 1):
        for dropped in combinations(droppable, k):
            coeff = Fraction(1)
            for i in dropped:
                coeff *= -centers[i]
            flat: list[int] = []
            for i, (v, p) in enumerate(letters):
                if i not in dropped:
                    flat.extend([v - 1] * p)
            if flat:
                value = _nc_moment(*_canonical(kappa_ids, tuple(flat)))
            else:
                value = Fraction(1)
            total += coeff * value
    return total


# ---------------------------------------------------------------------------
# alternating centered words
# ---------------------------------------------------------------------------


def alternating_index_words(n_vars: int, length: int) -> Iterator[tuple[int, ...]]:
    """All index words j_1 != j_2 != ... != j_length over {1..n_vars}."""
    if n_vars < 1 or length < 1:
        raise DomainError("need n_vars >= 1 and length >= 1")

    def extend(prefix: tuple[int, ...]) -> Iterator[tuple[int, ...]]:
        if len(prefix) == length:
            yield prefix
            return
        for j in range(1, n_vars + 1):
            if not prefix or j != prefix[-1]:
                yield from extend(prefix + (j,))

    yield from extend(())


@dataclass(frozen=True)
class AlternatingCheckReport:
    """Every alternating centered word evaluated, with its exact trace."""

    words: tuple[tuple[tuple[int, int], ...], ...]
    values: tuple[Fraction, ...]
    all_zero: bool


def alternating_centered_check(
    marginals: Sequence[MomentSequence],
    max_len: int,
    exponents: Sequence[int] = (1,),
) -> AlternatingCheckReport:
    """Evaluate all alternating centered words up to ``max_len`` letters.

    Letter l of a word with indices j_1 != ... != j_n is the centered
    power T_{j_l}^{p_l} - m_{p_l}, with p_l drawn cyclically from
    ``exponents``.  Freeness forces every such trace to vanish; the
    report carries the exact values so the caller can assert that.
    """
    if max_len < 1:
        raise DomainError("max_len must be >= 1")
    if any(p < 1 for p in exponents):
        raise DomainError("exponents must be >= 1")
    words: list[tuple[tuple[int, int], ...]] = []
    values: list[Fraction] = []
    n_vars = len(marginals)
    for length in range(1, max_len + 1):
        for idx in alternating_index_words(n_vars, length):
            lettered = tuple(
                (j, exponents[l % len(exponents)]) for l, j in enumerate(idx)
            )
            words.append(lettered)
            values.append(centered_product_moment(marginals, lettered))
    return AlternatingCheckReport(
        words=tuple(words),
        values=tuple(values),
        all_zero=all(v == 0 for v in values),
    )
