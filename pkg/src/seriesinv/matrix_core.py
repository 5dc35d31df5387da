"""Dense matrix primitives with an instrumented multiplication counter.

Everything downstream (splittings, series evaluation, the iteration family)
works on plain float64 numpy arrays validated by :func:`square_matrix` /
:func:`vector`.  Matrix products that belong to an algorithm's cost model go
through :func:`mat_mul` / :func:`mat_vec`, which tick a :class:`MulCounter`;
oracle helpers such as :func:`mat_pow` stay uncounted on purpose so that cost
comparisons between algorithms remain honest.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

__all__ = [
    "MulCounter",
    "Norms",
    "SpectralRadiusError",
    "identity",
    "inf_norm",
    "fro_norm",
    "load_matrix",
    "load_vector",
    "mat_mul",
    "mat_pow",
    "mat_pow_counted",
    "mat_vec",
    "norms",
    "save_matrix",
    "save_vector",
    "spectral_radius",
    "square_matrix",
    "vector",
]


def square_matrix(entries) -> np.ndarray:
    """Validate and return a read-only float64 square matrix.

    Accepts anything ``np.asarray`` does.  Rejects non-square shapes and
    non-finite entries.  The returned array is frozen so it can be shared
    freely across concurrent workers.
    """
    a = np.array(entries, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix entries must be finite")
    a.flags.writeable = False
    return a


def vector(entries) -> np.ndarray:
    """Validate and return a read-only float64 vector."""
    v = np.array(entries, dtype=np.float64).reshape(-1)
    if v.size < 1:
        raise ValueError("vector must have at least one entry")
    if not np.all(np.isfinite(v)):
        raise ValueError("vector entries must be finite")
    v.flags.writeable = False
    return v


def identity(dim: int) -> np.ndarray:
    return np.eye(dim, dtype=np.float64)


@dataclass
class MulCounter:
    """Running tally of matrix-matrix (mmm) and matrix-vector (mvm) products.

    Counters are per-experiment; parallel branches use private counters that
    are merged back by summation, so totals are independent of scheduling.
    """

    mmm: int = 0
    mvm: int = 0

    def count_mmm(self, n: int = 1) -> None:
        if n < 0:
            raise ValueError("counter increments must be non-negative")
        self.mmm += n

    def count_mvm(self, n: int = 1) -> None:
        if n < 0:
            raise ValueError("counter increments must be non-negative")
        self.mvm += n

    def merge(self, other: "MulCounter") -> None:
        """Fold another counter into this one (summation merge)."""
        self.mmm += other.mmm
        self.mvm += other.mvm

    def copy(self) -> "MulCounter":
        return MulCounter(self.mmm, self.mvm)


def mat_mul(a: np.ndarray, b: np.ndarray, ctr: MulCounter) -> np.ndarray:
    """Dense product ``a @ b``; increments ``ctr.mmm`` by exactly one."""
    if a.shape[1] != b.shape[0]:
        raise ValueError(f"dimension mismatch: {a.shape} @ {b.shape}")
    ctr.count_mmm()
    return a @ b


def mat_vec(a: np.ndarray, v: np.ndarray, ctr: MulCounter) -> np.ndarray:
    """Matrix-vector product; increments ``ctr.mvm`` by exactly one."""
    if a.shape[1] != v.shape[0]:
        raise ValueError(f"dimension mismatch: {a.shape} @ {v.shape}")
    ctr.count_mvm()
    return a @ v


def mat_pow(a: np.ndarray, e: int) -> np.ndarray:
    """``a**e`` by binary exponentiation, ``a**0 == I``.

    Deliberately uncounted: this is the oracle used to check the closed-form
    residual exponents, not an algorithm under test.  Use
    :func:`mat_pow_counted` when the powers belong to a cost model.
    """
    if e < 0:
        raise ValueError("exponent must be non-negative")
    result = identity(a.shape[0])
    base = np.array(a)
    while e > 0:
        if e & 1:
            result = result @ base
        e >>= 1
        if e:
            base = base @ base
    return result


def mat_pow_counted(a: np.ndarray, e: int, ctr: MulCounter) -> np.ndarray:
    """Binary exponentiation with every product ticked on the counter."""
    if e < 0:
        raise ValueError("exponent must be non-negative")
    if e == 0:
        return identity(a.shape[0])
    base = np.array(a)
    result = None
    while e > 0:
        if e & 1:
            result = base if result is None else mat_mul(result, base, ctr)
        e >>= 1
        if e:
            base = mat_mul(base, base, ctr)
    return result


class Norms(NamedTuple):
    frobenius: float
    inf_norm: float


def norms(a: np.ndarray) -> Norms:
    """Frobenius norm and maximum-row-sum (infinity) norm."""
    return Norms(
        frobenius=float(np.sqrt(np.sum(a * a))),
        inf_norm=float(np.max(np.sum(np.abs(a), axis=1))),
    )


def fro_norm(a: np.ndarray) -> float:
    return norms(a).frobenius


def inf_norm(a: np.ndarray) -> float:
    return norms(a).inf_norm


class SpectralRadiusError(RuntimeError):
    """Power iteration failed to settle; carries the best estimate seen."""

    def __init__(self, message: str, best_estimate: float):
        super().__init__(message)
        self.best_estimate = best_estimate


def spectral_radius(
    a: np.ndarray,
    tol: float = 1e-12,
    max_iter: int = 10000,
    seed: int = 0,
) -> float:
    """Dominant eigenvalue magnitude via norm-ratio power iteration.

    Tracks ``||a x_k||`` for unit ``x_k`` and stops once the estimate is
    stable to ``tol`` (relative) over a few consecutive iterations.  The
    norm-ratio form also handles paired ``+r/-r`` dominant eigenvalues, which
    the plain Rayleigh quotient does not.  Restarts with a fresh random
    vector if the iterate falls into the null space; raises
    :class:`SpectralRadiusError` (with the best estimate attached) when the
    iteration does not converge within ``max_iter`` steps.
    """
    dim = a.shape[0]
    if a.shape != (dim, dim):
        raise ValueError("spectral_radius expects a square matrix")
    rng = np.random.default_rng(seed)

    best = 0.0
    restarts = 0
    x = rng.standard_normal(dim)
    x /= np.linalg.norm(x)
    prev = None
    streak = 0
    for _ in range(max_iter):
        y = a @ x
        est = float(np.linalg.norm(y))
        if est == 0.0:
            # x is (numerically) in the null space; either a == 0 or the
            # start vector was unlucky.
            if not np.any(a):
                return 0.0
            restarts += 1
            if restarts > 3:
                return 0.0
            x = rng.standard_normal(dim)
            x /= np.linalg.norm(x)
            prev = None
            streak = 0
            continue
        best = est
        if prev is not None and abs(est - prev) <= tol * est:
            streak += 1
            if streak >= 3:
                return est
        else:
            streak = 0
        prev = est
        x = y / est
    raise SpectralRadiusError(
        f"power iteration did not converge within {max_iter} iterations "
        f"(best estimate {best:.6e})",
        best_estimate=best,
    )


# ---------------------------------------------------------------------------
# Text file format (shared with the CLI):
#   matrix: first line "dim", then dim lines of dim reals; '#' starts a
#   comment line.  Vectors use the same layout with one value per line.
# ---------------------------------------------------------------------------


def _data_lines(text: str) -> list[str]:
    lines = []
    for raw in text.splitlines():
        stripped = raw.strip()
        if not stripped or stripped.startswith("#"):
            continue
        lines.append(stripped)
    return lines


def load_matrix(path) -> np.ndarray:
    """Read a square matrix from the plain-text format."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = _data_lines(fh.read())
    if not lines:
        raise ValueError(f"{path}: empty matrix file")
    dim = int(lines[0])
    if dim < 1:
        raise ValueError(f"{path}: dimension must be positive, got {dim}")
    if len(lines) != 1 + dim:
        raise ValueError(f"{path}: expected {dim} data rows, got {len(lines) - 1}")
    rows = []
    for i, line in enumerate(lines[1:]):
        row = [float(tok) for tok in line.split()]
        if len(row) != dim:
            raise ValueError(f"{path}: row {i} has {len(row)} entries, expected {dim}")
        rows.append(row)
    return square_matrix(rows)


def save_matrix(path, a: np.ndarray, comment: str | None = None) -> None:
    a = square_matrix(a)
    with open(path, "w", encoding="utf-8") as fh:
        if comment:
            for line in comment.splitlines():
                fh.write(f"# {line}\n")
        fh.write(f"{a.shape[0]}\n")
        for row in a:
            fh.write(" ".join(format(x, ".17g") for x in row) + "\n")


def load_vector(path) -> np.ndarray:
    with open(path, "r", encoding="utf-8") as fh:
        lines = _data_lines(fh.read())
    if not lines:
        raise ValueError(f"{path}: empty vector file")
    dim = int(lines[0])
    values = [float(tok) for line in lines[1:] for tok in line.split()]
    if len(values) != dim:
        raise ValueError(f"{path}: expected {dim} entries, got {len(values)}")
    return vector(values)


def save_vector(path, v: np.ndarray, comment: str | None = None) -> None:
    v = vector(v)
    with open(path, "w", encoding="utf-8") as fh:
        if comment:
            for line in comment.splitlines():
                fh.write(f"# {line}\n")
        fh.write(f"{v.size}\n")
        for x in v:
            fh.write(format(x, ".17g") + "\n")
