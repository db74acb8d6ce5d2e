"""Brute-force reference implementations used only by the test suite.

Everything here trades efficiency for obviousness: set partitions are
enumerated exhaustively and filtered, cumulant relations are solved
directly from their defining sums, and the lattice Moebius function is
assembled from the complementation map.  The library must agree with
these exactly.
"""

from __future__ import annotations

import math
from fractions import Fraction
from itertools import combinations, product


def set_partitions(elems: list) -> list[list[list]]:
    if not elems:
        return [[]]
    first, rest = elems[0], elems[1:]
    out = []
    for part in set_partitions(rest):
        out.append([[first]] + [list(b) for b in part])
        for i in range(len(part)):
            clone = [list(b) for b in part]
            clone[i] = [first] + clone[i]
            out.append(clone)
    return out


def is_noncrossing(blocks) -> bool:
    for b1, b2 in combinations(blocks, 2):
        for a, c in combinations(sorted(b1), 2):
            for b, d in combinations(sorted(b2), 2):
                if a < b < c < d or b < a < d < c:
                    return False
    return True


def nc_partitions(n: int) -> list[list[list[int]]]:
    return [p for p in set_partitions(list(range(1, n + 1))) if is_noncrossing(p)]


def catalan(n: int) -> int:
    return math.comb(2 * n, n) // (n + 1)


def free_cumulants_bruteforce(moments: list[Fraction]) -> list[Fraction]:
    """Solve m_n = sum over NC(n) of prod kappa_|V| directly."""
    kappa: dict[int, Fraction] = {}
    for n in range(1, len(moments) + 1):
        partial = Fraction(0)
        for part in nc_partitions(n):
            if len(part) == 1:
                continue
            term = Fraction(1)
            for blk in part:
                term *= kappa[len(blk)]
            partial += term
        kappa[n] = Fraction(moments[n - 1]) - partial
    return [kappa[n] for n in range(1, len(moments) + 1)]


def moments_from_free_bruteforce(kappa: list[Fraction]) -> list[Fraction]:
    out = []
    for n in range(1, len(kappa) + 1):
        total = Fraction(0)
        for part in nc_partitions(n):
            term = Fraction(1)
            for blk in part:
                term *= Fraction(kappa[len(blk) - 1])
            total += term
        out.append(total)
    return out


def mixed_moment_bruteforce(marginals: dict[int, list[Fraction]], word) -> Fraction:
    """Monochromatic non-crossing sum with explicit partition filtering."""
    kappas = {v: free_cumulants_bruteforce(m) for v, m in marginals.items()}
    total = Fraction(0)
    for part in nc_partitions(len(word)):
        term = Fraction(1)
        for blk in part:
            vs = {word[i - 1] for i in blk}
            if len(vs) != 1:
                term = Fraction(0)
                break
            term *= kappas[vs.pop()][len(blk) - 1]
        total += term
    return total


def kreweras_complement(blocks: list[list[int]], n: int) -> list[list[int]]:
    """Complement partition on interleaved points 1' .. n'.

    Primes i' sit at positions 2i on the doubled line; i' and j' share a
    block exactly when no block of the original partition separates them.
    """

    def separated(i: int, j: int) -> bool:
        lo, hi = 2 * min(i, j), 2 * max(i, j)
        for blk in blocks:
            pos = [2 * e - 1 for e in blk]
            inside = [p for p in pos if lo < p < hi]
            outside = [p for p in pos if p < lo or p > hi]
            if inside and outside:
                return True
        return False

    parent = list(range(n + 1))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(1, n + 1):
        for j in range(i + 1, n + 1):
            if not separated(i, j):
                parent[find(i)] = find(j)
    groups: dict[int, list[int]] = {}
    for i in range(1, n + 1):
        groups.setdefault(find(i), []).append(i)
    return list(groups.values())


def nc_moebius_to_top(blocks: list[list[int]], n: int) -> int:
    """Moebius function mu(pi, full block) in the non-crossing lattice.

    The interval [pi, 1_n] factors over the blocks of the Kreweras
    complement, and mu(0_m, 1_m) = (-1)^(m-1) * Catalan(m-1).
    """
    value = 1
    for blk in kreweras_complement(blocks, n):
        m = len(blk)
        value *= (-1) ** (m - 1) * catalan(m - 1)
    return value


def free_cumulants_moebius(moments: list[Fraction]) -> list[Fraction]:
    """kappa_n = sum over NC(n) of mu(pi, 1_n) prod m_|V|."""
    out = []
    for n in range(1, len(moments) + 1):
        total = Fraction(0)
        ms = [Fraction(1)] + [Fraction(m) for m in moments]
        for part in nc_partitions(n):
            term = Fraction(nc_moebius_to_top(part, n))
            for blk in part:
                term *= ms[len(blk)]
            total += term
        out.append(total)
    return out


def boolean_cumulants_closed_form(m: list[Fraction]) -> list[Fraction]:
    """The universal low-order formulas for boolean cumulants r_1..r_4."""
    m1, m2, m3, m4 = (Fraction(v) for v in m[:4])
    return [
        m1,
        m2 - m1 ** 2,
        m3 - 2 * m1 * m2 + m1 ** 3,
        m4 - m2 ** 2 - 2 * m1 * m3 + 3 * m1 ** 2 * m2 - m1 ** 4,
    ]


class WordPoly:
    """Minimal noncommutative polynomial: dict from letter tuple to coeff."""

    def __init__(self, terms: dict[tuple[int, ...], Fraction] | None = None):
        self.terms = dict(terms or {})

    @classmethod
    def letter(cls, j: int, coeff=Fraction(1)) -> "WordPoly":
        return cls({(j,): Fraction(coeff)})

    @classmethod
    def scalar(cls, c) -> "WordPoly":
        return cls({(): Fraction(c)})

    def __add__(self, other: "WordPoly") -> "WordPoly":
        out = dict(self.terms)
        for w, c in other.terms.items():
            out[w] = out.get(w, Fraction(0)) + c
        return WordPoly(out)

    def __mul__(self, other: "WordPoly") -> "WordPoly":
        out: dict[tuple[int, ...], Fraction] = {}
        for w1, c1 in self.terms.items():
            for w2, c2 in other.terms.items():
                w = w1 + w2
                out[w] = out.get(w, Fraction(0)) + c1 * c2
        return WordPoly(out)

    def trace(self, tau) -> Fraction:
        total = Fraction(0)
        for w, c in self.terms.items():
            if c == 0:
                continue
            total += c * (Fraction(1) if not w else tau(w))
        return total
