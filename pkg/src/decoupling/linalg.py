import logging
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.linalg import spsolve
from sympy import Rational
from sympy.polys.domains import QQ
from sympy.polys.matrices import DomainMatrix

logger = logging.getLogger(__name__)

EXACT_SOLVE_LIMIT = 2_000
RESIDUAL_TOLERANCE = 1e-12

type SparseRows = Sequence[dict[int, Fraction]]


def solve(rows: SparseRows, rhs: Sequence[Fraction],
          exact_limit: int = EXACT_SOLVE_LIMIT) -> list[Fraction] | list[float]:
    """Solve A x = rhs for a nonsingular sparse A given row by row."""
    if not rows:
        return []
    if len(rows) <= exact_limit:
        return solve_exact(rows, rhs)
    return solve_float(rows, rhs)


def solve_exact(rows: SparseRows, rhs: Sequence[Fraction]) -> list[Fraction]:
    n: int = len(rows)
    entries = {i: {j: QQ(p.numerator, p.denominator) for j, p in row.items() if p != 0}
               for i, row in enumerate(rows)}
    a = DomainMatrix({i: row for i, row in entries.items() if row}, (n, n), QQ)
    b = DomainMatrix({i: {0: QQ(p.numerator, p.denominator)} for i, p in enumerate(rhs) if p != 0}, (n, 1), QQ)
    x = a.lu_solve(b).to_Matrix()
    return [Fraction(int(Rational(x[i, 0]).p), int(Rational(x[i, 0]).q)) for i in range(n)]


def solve_float(rows: SparseRows, rhs: Sequence[Fraction]) -> list[float]:
    n: int = len(rows)
    data: list[float] = []
    row_index: list[int] = []
    col_index: list[int] = []
    for i, row in enumerate(rows):
        for j, p in row.items():
            row_index.append(i)
            col_index.append(j)
            data.append(float(p))
    a = csr_matrix((data, (row_index, col_index)), shape=(n, n))
    b = np.array([float(p) for p in rhs])
    x = spsolve(a, b)
    residual: float = float(np.max(np.abs(a @ x - b)))
    if residual > RESIDUAL_TOLERANCE * max(1.0, float(np.max(np.abs(b)))):
        logger.warning("float solve of %d unknowns left residual %.3g", n, residual)
    return [float(v) for v in x]
