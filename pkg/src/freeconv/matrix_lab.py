"""Random-matrix realization of free families and L^p inequality checks.

Matrix models approximate freeness only asymptotically in the dimension,
so every comparison against exact word moments carries both a statistical
tolerance (standard errors over independent trials) and an explicit
finite-dimension allowance of order 1/N.

The noncommutative L^p norm is ||x||_p = tau(|x|^p)^(1/p) with
|x| = (x^T x)^(1/2) and tau the normalized trace.  Singular values are
produced by a cyclic Jacobi eigensolver on x^T x (batched over stacks of
matrices, since the inequality sweeps process thousands of small
instances); the rotations run until the off-diagonal norm is below
1e-12.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import ConvergenceError, DomainError
from .measures import Atomic, Measure, MomentSequence, Semicircle, moments
from .word_engine import Word, mixed_moment

__all__ = [
    "MatrixEnsembleSpec",
    "TraceEstimate",
    "haar_orthogonal",
    "sample_family",
    "estimate_word_trace",
    "estimate_word_traces",
    "jacobi_eigenvalues",
    "singular_values",
    "ncLp_norm",
    "operator_norm",
    "InequalityReport",
    "verify_inequalities",
    "exact_word_moment",
]

MEMORY_BUDGET_BYTES = 1 << 30
ENSEMBLE_KINDS = ("goe", "diagonal", "wishart")


@dataclass(frozen=True)
class MatrixEnsembleSpec:
    """Reproducible description of a family of independent random matrices.

    ``kind`` selects standardized GOE (symmetric, off-diagonal variance
    1/N, diagonal 2/N, spectral law approaching the radius-2 semicircle),
    Haar-rotated diagonal matrices drawn from an atomic measure, or a
    Wishart-style Gram matrix.  The seed determines the full sample
    stream.
    """

    dimension: int
    count: int
    kind: str
    seed: int
    measure: Optional[Measure] = None

    def __post_init__(self):
        if self.dimension < 2:
            raise DomainError("dimension must be >= 2")
        if self.count < 1:
            raise DomainError("count must be >= 1")
        if self.kind not in ENSEMBLE_KINDS:
            raise DomainError(f"kind must be one of {ENSEMBLE_KINDS}")
        if not 0 <= self.seed < 2 ** 64:
            raise DomainError("seed must fit in 64 bits")
        if self.kind == "diagonal" and not isinstance(self.measure, Atomic):
            raise DomainError("diagonal ensembles need an atomic measure")


@dataclass(frozen=True)
class TraceEstimate:
    """Monte Carlo estimate of a normalized trace with its standard error."""

    expression: str
    mean: float
    standard_error: float
    trials: int


def haar_orthogonal(n: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed orthogonal matrix via QR with sign-fixed diagonal."""
    q, r = np.linalg.qr(rng.standard_normal((n, n)))
    signs = np.sign(np.diag(r))
    signs[signs == 0] = 1.0
    return q * signs


def _sample_one(spec: MatrixEnsembleSpec, rng: np.random.Generator) -> np.ndarray:
    n = spec.dimension
    if spec.kind == "goe":
        a = rng.standard_normal((n, n))
        return (a + a.T) / math.sqrt(2.0 * n)
    if spec.kind == "diagonal":
        locs = np.array([float(loc) for loc, _ in spec.measure.atoms])
        weights = np.array([float(w) for _, w in spec.measure.atoms])
        weights = weights / weights.sum()
        diag = rng.choice(locs, size=n, p=weights)
        q = haar_orthogonal(n, rng)
        return (q * diag) @ q.T
    if spec.kind == "wishart":
        g = rng.standard_normal((n, n))
        return g @ g.T / n
    raise DomainError(f"unsupported ensemble kind {spec.kind!r}")


def _check_budget(spec: MatrixEnsembleSpec) -> None:
    needed = spec.dimension ** 2 * spec.count * 8
    if needed > MEMORY_BUDGET_BYTES:
        raise DomainError(
            f"family needs {needed} bytes, over the {MEMORY_BUDGET_BYTES} budget"
        )


def sample_family(
    spec: MatrixEnsembleSpec, rng: Optional[np.random.Generator] = None
) -> list[np.ndarray]:
    """Draw the independent matrices described by ``spec``.

    With no generator supplied the family is the trial-0 stream of the
    spec's seed, so repeated calls are bitwise identical.
    """
    _check_budget(spec)
    if rng is None:
        rng = np.random.default_rng(np.random.SeedSequence(spec.seed, spawn_key=(0,)))
    return [_sample_one(spec, rng) for _ in range(spec.count)]


def _trial_rng(spec: MatrixEnsembleSpec, trial: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(spec.seed, spawn_key=(trial,)))


def _word_trace(family: Sequence[np.ndarray], letters: Sequence[int]) -> float:
    mats = [family[l - 1] for l in letters]
    if len(mats) == 1:
        prod = mats[0]
        return float(np.trace(prod)) / prod.shape[0]
    head = mats[0]
    for m in mats[1:-1]:
        head = head @ m
    # tau(AB) = sum(A * B^T) / N without forming the last product.
    return float(np.sum(head * mats[-1].T)) / head.shape[0]


def estimate_word_trace(spec: MatrixEnsembleSpec, word: Word, trials: int) -> TraceEstimate:
    """Monte Carlo mean of the normalized trace of a word of family members."""
    return estimate_word_traces(spec, [word], trials)[0]


def estimate_word_traces(
    spec: MatrixEnsembleSpec,
    words: Sequence[Word],
    trials: int,
    max_workers: int = 1,
) -> list[TraceEstimate]:
    """Estimate several words over the same trial stream.

    Each trial samples one family (its own generator derived from
    (seed, trial), so results are independent of scheduling) and
    evaluates every word on it; estimates for different words are
    therefore correlated but individually unbiased.
    """
    if trials < 2:
        raise DomainError("need at least 2 trials for a standard error")
    _check_budget(spec)
    for word in words:
        if max(word.letters) > spec.count:
            raise DomainError(
                f"word {word.as_text()!r} references T{max(word.letters)} "
                f"but the family has {spec.count} matrices"
            )

    def run_trial(trial: int) -> list[float]:
        family = sample_family(spec, _trial_rng(spec, trial))
        return [_word_trace(family, w.letters) for w in words]

    if max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            rows = list(pool.map(run_trial, range(trials)))
    else:
        rows = [run_trial(t) for t in range(trials)]

    table = np.array(rows)
    means = table.mean(axis=0)
    ses = table.std(axis=0, ddof=1) / math.sqrt(trials)
    return [
        TraceEstimate(
            expression=w.as_text(), mean=float(m), standard_error=float(s), trials=trials
        )
        for w, m, s in zip(words, means, ses)
    ]


def exact_word_moment(spec: MatrixEnsembleSpec, word: Word) -> float:
    """Infinite-dimension prediction of a word trace for this ensemble.

    GOE matrices converge to the radius-2 semicircle and independent
    draws become asymptotically free, so the prediction is the word
    engine's mixed moment with the matching marginals.
    """
    need = max(word.multiplicity(v) for v in word.variables)
    if spec.kind == "goe":
        marginal = moments(Semicircle(0, 2), max(need, 1))
    elif spec.kind == "diagonal":
        marginal = moments(spec.measure, max(need, 1))
    else:
        raise DomainError("exact predictions cover goe and diagonal ensembles")
    marginals = [marginal] * max(word.letters)
    return float(mixed_moment(marginals, word))


# ---------------------------------------------------------------------------
# Jacobi eigenvalues and noncommutative L^p norms
# ---------------------------------------------------------------------------


def _offdiagonal_norms(stack: np.ndarray) -> np.ndarray:
    # Summing the off-diagonal entries directly; total minus diagonal
    # would cancel catastrophically near convergence.
    off = np.array(stack, copy=True)
    idx = np.arange(off.shape[-1])
    off[..., idx, idx] = 0.0
    return np.sqrt(np.sum(off * off, axis=(-2, -1)))


def _jacobi_batch(stack: np.ndarray, tol: float, max_sweeps: int) -> np.ndarray:
    a = np.array(stack, dtype=float, copy=True)
    if a.ndim == 2:
        a = a[None, :, :]
    _, n, n2 = a.shape
    if n != n2:
        raise DomainError("Jacobi needs square matrices")
    for _ in range(max_sweeps):
        if np.all(_offdiagonal_norms(a) < tol):
            return np.sort(np.einsum("bii->bi", a), axis=1)
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[:, p, q]
                active = np.abs(apq) > 0.0
                if not np.any(active):
                    continue
                theta = np.zeros_like(apq)
                np.divide(
                    a[:, q, q] - a[:, p, p],
                    2.0 * apq,
                    out=theta,
                    where=active,
                )
                # theta may overflow to inf for denormal pivots; the rotation
                # then degenerates to the identity, which is what we want.
                with np.errstate(over="ignore"):
                    t = np.where(
                        active,
                        np.sign(theta) / (np.abs(theta) + np.sqrt(theta * theta + 1.0)),
                        0.0,
                    )
                t = np.where(active & (theta == 0.0), 1.0, t)
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                rp = a[:, p, :].copy()
                rq = a[:, q, :].copy()
                a[:, p, :] = c[:, None] * rp - s[:, None] * rq
                a[:, q, :] = s[:, None] * rp + c[:, None] * rq
                cp = a[:, :, p].copy()
                cq = a[:, :, q].copy()
                a[:, :, p] = c[:, None] * cp - s[:, None] * cq
                a[:, :, q] = s[:, None] * cp + c[:, None] * cq
        a = (a + np.swapaxes(a, -1, -2)) / 2.0
    raise ConvergenceError(f"Jacobi sweep limit {max_sweeps} hit before off-norm < {tol}")


def jacobi_eigenvalues(
    matrix: np.ndarray, tol: float = 1e-12, max_sweeps: int = 100
) -> np.ndarray:
    """Eigenvalues of a symmetric matrix (or stack) by cyclic Jacobi.

    Returns sorted eigenvalues; shape (n,) for a single matrix and
    (batch, n) for a stack.
    """
    arr = np.asarray(matrix, dtype=float)
    single = arr.ndim == 2
    vals = _jacobi_batch(arr, tol, max_sweeps)
    return vals[0] if single else vals


def singular_values(matrix: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Singular values via Jacobi eigenvalues of x^T x."""
    arr = np.asarray(matrix, dtype=float)
    gram = np.swapaxes(arr, -1, -2) @ arr
    vals = jacobi_eigenvalues(gram, tol=tol)
    return np.sqrt(np.clip(vals, 0.0, None))


def _norm_from_sigma(sigma: np.ndarray, p: float) -> float:
    return float(np.mean(sigma ** p) ** (1.0 / p))


def ncLp_norm(matrix: np.ndarray, p: float) -> float:
    """Noncommutative L^p norm tau(|x|^p)^(1/p) with normalized trace."""
    if p < 1:
        raise DomainError("p must be >= 1")
    return _norm_from_sigma(singular_values(matrix), p)


def operator_norm(matrix: np.ndarray) -> float:
    """Largest singular value."""
    return float(singular_values(matrix).max())


# ---------------------------------------------------------------------------
# inequality sweeps
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class InequalityReport:
    """Outcome of a batch of L^p inequality checks."""

    checks: int
    violations: tuple[str, ...]
    max_margin: float
    families: dict

    @property
    def passed(self) -> bool:
        return not self.violations


def verify_inequalities(
    tuples: Sequence[Sequence[np.ndarray]],
    exponents: Sequence[float],
    p_minkowski: float = 4.0,
    slack: float = 1e-9,
) -> InequalityReport:
    """Check the L^p inequality families on every sampled tuple.

    Per tuple (x_1..x_k) with Hoelder exponents p_i (sum of 1/p_i = 1):

    * trace form       |tau(x_1...x_k)| <= prod ||x_i||_{p_i}
    * product form     ||x_1...x_k||_1  <= prod ||x_i||_{p_i}
    * Minkowski        ||sum x_i||_p    <= sum ||x_i||_p
    * ideal property   ||x_1 x_2||_p    <= ||x_1||_op ||x_2||_p  (both sides)
    * Hoelder chains for the grouped words x_1^2 x_2 x_3...x_k and
      x_1 x_2^2 x_3, the splittings used to bound traces of mixed
      powers.

    All norms in a call are produced by one batched Jacobi pass.  The
    report counts every individual inequality as one check; ``slack``
    absorbs binary64 rounding.
    """
    if not tuples:
        raise DomainError("no tuples supplied")
    k = len(tuples[0])
    if any(len(t) != k for t in tuples):
        raise DomainError("all tuples must have equal length")
    if len(exponents) != k:
        raise DomainError("need one exponent per tuple entry")
    if any(p <= 1 for p in exponents):
        raise DomainError("Hoelder exponents must exceed 1")
    if abs(sum(1.0 / p for p in exponents) - 1.0) > 1e-12:
        raise DomainError("Hoelder exponents must satisfy sum 1/p_i = 1")
    if p_minkowski < 1:
        raise DomainError("Minkowski exponent must be >= 1")

    n = tuples[0][0].shape[0]
    stack: list[np.ndarray] = []

    def push(mat: np.ndarray) -> int:
        stack.append(mat)
        return len(stack) - 1

    layout = []
    for mats in tuples:
        product = mats[0]
        for m in mats[1:]:
            product = product @ m
        pair01 = mats[0] @ mats[1] if k >= 2 else None
        pair10 = mats[1] @ mats[0] if k >= 2 else None
        pair12 = mats[1] @ mats[2] if k >= 3 else None
        entry = {
            "singles": [push(m) for m in mats],
            "product": push(product),
            "sum": push(sum(mats[1:], start=mats[0].copy())),
            "trace": float(np.trace(product)) / n,
        }
        if pair01 is not None:
            entry["pair01"] = push(pair01)
            entry["pair10"] = push(pair10)
            entry["word59"] = push(mats[0] @ pair01 @ _tail_product(mats, 2))
        if pair12 is not None:
            entry["pair12"] = push(pair12)
            entry["word513"] = push(mats[0] @ mats[1] @ pair12)
        layout.append(entry)

    sigma = np.sqrt(
        np.clip(
            _jacobi_batch(
                np.einsum("bji,bjk->bik", np.array(stack), np.array(stack)),
                1e-12,
                100,
            ),
            0.0,
            None,
        )
    )

    def lp(idx: int, p: float) -> float:
        return _norm_from_sigma(sigma[idx], p)

    checks = 0
    margin = -math.inf
    violations: list[str] = []
    families: dict[str, int] = {}

    def record(family: str, lhs: float, rhs: float, label: str):
        nonlocal checks, margin
        checks += 1
        families[family] = families.get(family, 0) + 1
        margin = max(margin, lhs - rhs)
        if lhs > rhs + slack:
            violations.append(f"{family}: {label}: {lhs!r} > {rhs!r}")

    for i, entry in enumerate(layout):
        singles = entry["singles"]
        holder_rhs = 1.0
        for idx, p in zip(singles, exponents):
            holder_rhs *= lp(idx, p)
        record("holder-trace", abs(entry["trace"]), holder_rhs, f"tuple {i}")
        record("holder-product", lp(entry["product"], 1.0), holder_rhs, f"tuple {i}")

        mink_lhs = lp(entry["sum"], p_minkowski)
        mink_rhs = sum(lp(idx, p_minkowski) for idx in singles)
        record("minkowski", mink_lhs, mink_rhs, f"tuple {i}")

        if "pair01" in entry:
            opn = float(sigma[singles[0]].max())
            xnorm = lp(singles[1], p_minkowski)
            record("ideal", lp(entry["pair01"], p_minkowski), opn * xnorm, f"tuple {i} ax")
            record("ideal", lp(entry["pair10"], p_minkowski), opn * xnorm, f"tuple {i} xa")

            # chain for x_0^2 x_1 x_2 ... x_{k-1}: letter count k+1, d = k
            d = float(k)
            rhs = lp(singles[0], d) * lp(entry["pair01"], d)
            for idx in singles[2:]:
                rhs *= lp(idx, d)
            record("chain-even", lp(entry["word59"], 1.0), rhs, f"tuple {i}")

        if "pair12" in entry:
            rhs = lp(entry["pair01"], 2.0) * lp(entry["pair12"], 2.0)
            record("chain-grouped", lp(entry["word513"], 1.0), rhs, f"tuple {i}")

    return InequalityReport(
        checks=checks,
        violations=tuple(violations),
        max_margin=margin,
        families=families,
    )


def _tail_product(mats: Sequence[np.ndarray], start: int) -> np.ndarray:
    out = np.eye(mats[0].shape[0])
    for m in mats[start:]:
        out = out @ m
    return out
