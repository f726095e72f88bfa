"""Exact linear algebra over Z, Q and F_p.

Lattices (column spans over Z, subspaces over a field) are kept in a
canonical column form at every public boundary so downstream page data is
bit-reproducible:

* over Z, the column Hermite normal form: pivot rows strictly increase
  column by column, pivots are positive, and in a pivot row every entry
  to the left of the pivot is reduced into ``[0, pivot)``;
* over a field, the reduced column echelon form: pivots are 1 and are the
  only nonzero entries in their rows.

All values are immutable after construction and all operations are pure.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

from .errors import ConsistencyError
from .rings import Ring, Scalar


def _xgcd(a: int, b: int) -> tuple[int, int, int]:
    """Return (g, x, y) with g = gcd(a, b) = x*a + y*b and g >= 0."""
    x, nx = 1, 0
    y, ny = 0, 1
    g, ng = a, b
    while ng:
        q = g // ng
        x, nx = nx, x - q * nx
        y, ny = ny, y - q * ny
        g, ng = ng, g - q * ng
    if g < 0:
        x, y, g = -x, -y, -g
    return g, x, y


@dataclass(frozen=True)
class ExactMatrix:
    """An immutable matrix with exact entries over ``ring``.

    Empty shapes (zero rows or columns) are valid and stand for zero maps.
    """

    ring: Ring
    rows: int
    cols: int
    entries: tuple[tuple[Scalar, ...], ...]

    def __post_init__(self):
        if self.rows < 0 or self.cols < 0:
            raise ValueError("matrix dimensions must be non-negative")
        if len(self.entries) != self.rows:
            raise ValueError("row count mismatch")
        for row in self.entries:
            if len(row) != self.cols:
                raise ValueError("column count mismatch")

    @classmethod
    def from_rows(cls, ring: Ring, rows: Sequence[Sequence[Scalar]], cols: Optional[int] = None) -> "ExactMatrix":
        data = tuple(tuple(ring.normalize(x) for x in row) for row in rows)
        ncols = cols if cols is not None else (len(data[0]) if data else 0)
        return cls(ring, len(data), ncols, data)

    @classmethod
    def from_columns(cls, ring: Ring, columns: Sequence[Sequence[Scalar]], rows: int) -> "ExactMatrix":
        cols = [list(c) for c in columns]
        for c in cols:
            if len(c) != rows:
                raise ValueError("column length mismatch")
        data = tuple(tuple(ring.normalize(c[i]) for c in cols) for i in range(rows))
        return cls(ring, rows, len(cols), data)

    @classmethod
    def identity(cls, ring: Ring, n: int) -> "ExactMatrix":
        one, zero = ring.one(), ring.zero()
        return cls(ring, n, n, tuple(tuple(one if i == j else zero for j in range(n)) for i in range(n)))

    @classmethod
    def zeros(cls, ring: Ring, rows: int, cols: int) -> "ExactMatrix":
        zero = ring.zero()
        return cls(ring, rows, cols, tuple(tuple(zero for _ in range(cols)) for _ in range(rows)))

    def column(self, j: int) -> tuple[Scalar, ...]:
        return tuple(self.entries[i][j] for i in range(self.rows))

    def columns(self) -> list[list[Scalar]]:
        return [[self.entries[i][j] for i in range(self.rows)] for j in range(self.cols)]

    def mat_vec(self, v: Sequence[Scalar]) -> tuple[Scalar, ...]:
        if len(v) != self.cols:
            raise ValueError("vector length mismatch")
        R = self.ring
        out = []
        for i in range(self.rows):
            acc = R.zero()
            row = self.entries[i]
            for j, x in enumerate(v):
                if not R.is_zero(x):
                    acc = R.add(acc, R.mul(row[j], x))
            out.append(acc)
        return tuple(out)

    def mul(self, other: "ExactMatrix") -> "ExactMatrix":
        if self.cols != other.rows:
            raise ValueError("shape mismatch in matrix product")
        R = self.ring
        data = []
        for i in range(self.rows):
            row = self.entries[i]
            out = []
            for j in range(other.cols):
                acc = R.zero()
                for k in range(self.cols):
                    acc = R.add(acc, R.mul(row[k], other.entries[k][j]))
                out.append(acc)
            data.append(tuple(out))
        return ExactMatrix(R, self.rows, other.cols, tuple(data))

    def hstack(self, other: "ExactMatrix") -> "ExactMatrix":
        if self.rows != other.rows:
            raise ValueError("row mismatch in hstack")
        data = tuple(self.entries[i] + other.entries[i] for i in range(self.rows))
        return ExactMatrix(self.ring, self.rows, self.cols + other.cols, data)

    def is_zero(self) -> bool:
        R = self.ring
        return all(R.is_zero(x) for row in self.entries for x in row)


def _require_z(M: ExactMatrix, op: str) -> None:
    if M.ring.is_field or M.ring.characteristic != 0:
        raise ValueError(f"{op} requires a matrix over Z, got {M.ring.name}")


# -- column echelon machinery -------------------------------------------------

def _echelon_columns_z(cols: list[list[int]], nrows: int, transform: Optional[list[list[int]]] = None):
    """Bring integer columns to echelon form by unimodular column operations.

    Returns (pivots, cols) where pivots is a list of (row, col) pairs with
    strictly increasing rows, pivot entries positive, and all entries above
    a pivot zero.  Columns past the pivots are zero.  If ``transform`` is
    given (a list of columns, typically an identity), the same operations
    are applied to it.
    """
    ncols = len(cols)
    r = 0
    pivots: list[tuple[int, int]] = []
    for row in range(nrows):
        if r >= ncols:
            break
        j0 = None
        for j in range(r, ncols):
            if cols[j][row] != 0:
                j0 = j
                break
        if j0 is None:
            continue
        for j in range(j0 + 1, ncols):
            if cols[j][row] == 0:
                continue
            a, b = cols[j0][row], cols[j][row]
            if b % a == 0:
                q = b // a
                for i in range(row, nrows):
                    cols[j][i] -= q * cols[j0][i]
                if transform is not None:
                    for i in range(len(transform[j])):
                        transform[j][i] -= q * transform[j0][i]
            else:
                g, x, y = _xgcd(a, b)
                ag, bg = a // g, b // g
                for i in range(nrows):
                    u, v = cols[j0][i], cols[j][i]
                    cols[j0][i] = x * u + y * v
                    cols[j][i] = -bg * u + ag * v
                if transform is not None:
                    for i in range(len(transform[j0])):
                        u, v = transform[j0][i], transform[j][i]
                        transform[j0][i] = x * u + y * v
                        transform[j][i] = -bg * u + ag * v
        if j0 != r:
            cols[j0], cols[r] = cols[r], cols[j0]
            if transform is not None:
                transform[j0], transform[r] = transform[r], transform[j0]
        if cols[r][row] < 0:
            cols[r] = [-x for x in cols[r]]
            if transform is not None:
                transform[r] = [-x for x in transform[r]]
        pivots.append((row, r))
        r += 1
    return pivots, cols


def _reduce_hnf_columns_z(pivots: list[tuple[int, int]], cols: list[list[int]]) -> None:
    """Second HNF pass: reduce entries left of each pivot into [0, pivot)."""
    for row, col in pivots:
        d = cols[col][row]
        for j in range(col):
            q = cols[j][row] // d
            if q:
                for i in range(row, len(cols[j])):
                    cols[j][i] -= q * cols[col][i]


def _echelon_columns_field(ring: Ring, cols: list[list[Scalar]], nrows: int,
                           transform: Optional[list[list[Scalar]]] = None):
    """Reduced column echelon form over a field (pivots 1, pivot rows cleared)."""
    ncols = len(cols)
    r = 0
    pivots: list[tuple[int, int]] = []
    for row in range(nrows):
        if r >= ncols:
            break
        j0 = None
        for j in range(r, ncols):
            if not ring.is_zero(cols[j][row]):
                j0 = j
                break
        if j0 is None:
            continue
        if j0 != r:
            cols[j0], cols[r] = cols[r], cols[j0]
            if transform is not None:
                transform[j0], transform[r] = transform[r], transform[j0]
        inv = ring.inverse(cols[r][row])
        cols[r] = [ring.mul(inv, x) for x in cols[r]]
        if transform is not None:
            transform[r] = [ring.mul(inv, x) for x in transform[r]]
        for j in range(ncols):
            if j == r or ring.is_zero(cols[j][row]):
                continue
            c = cols[j][row]
            cols[j] = [ring.add(x, ring.neg(ring.mul(c, y))) for x, y in zip(cols[j], cols[r])]
            if transform is not None:
                transform[j] = [ring.add(x, ring.neg(ring.mul(c, y)))
                                for x, y in zip(transform[j], transform[r])]
        pivots.append((row, r))
        r += 1
    return pivots, cols


def canonical_columns(M: ExactMatrix) -> ExactMatrix:
    """Canonical generating set of the column span: HNF over Z, RCEF over fields."""
    cols = M.columns()
    if M.ring.is_field:
        pivots, cols = _echelon_columns_field(M.ring, cols, M.rows)
    else:
        pivots, cols = _echelon_columns_z(cols, M.rows)
        _reduce_hnf_columns_z(pivots, cols)
    kept = cols[: len(pivots)]
    return ExactMatrix.from_columns(M.ring, kept, M.rows)


def hermite_normal_form(M: ExactMatrix) -> ExactMatrix:
    """Column Hermite normal form of an integer matrix.

    The result spans the same column lattice as ``M``; zero columns are
    dropped, so the zero matrix maps to an empty matrix.
    """
    _require_z(M, "hermite_normal_form")
    return canonical_columns(M)


def rank(M: ExactMatrix) -> int:
    """Rank of the column span (over the fraction field for Z matrices)."""
    if M.ring.is_field:
        pivots, _ = _echelon_columns_field(M.ring, M.columns(), M.rows)
    else:
        pivots, _ = _echelon_columns_z(M.columns(), M.rows)
    return len(pivots)


def solve_columns(M: ExactMatrix, b: Sequence[Scalar]) -> Optional[tuple[Scalar, ...]]:
    """Solve ``M x = b`` exactly; return None when no solution exists.

    Over Z the solution must be integral (membership of ``b`` in the column
    lattice); over a field, membership in the column span.
    """
    R = M.ring
    if len(b) != M.rows:
        raise ValueError("vector length mismatch")
    cols = M.columns()
    transform = [[R.one() if i == j else R.zero() for i in range(M.cols)] for j in range(M.cols)]
    if R.is_field:
        pivots, cols = _echelon_columns_field(R, cols, M.rows, transform)
    else:
        pivots, cols = _echelon_columns_z(cols, M.rows, transform)
    residue = [R.normalize(x) for x in b]
    coeffs = [R.zero()] * M.cols
    for row, col in pivots:
        val = residue[row]
        if R.is_zero(val):
            continue
        d = cols[col][row]
        if R.is_field:
            q = R.mul(val, R.inverse(d))
        else:
            if val % d != 0:
                return None
            q = val // d
        coeffs[col] = q
        for i in range(M.rows):
            residue[i] = R.add(residue[i], R.neg(R.mul(q, cols[col][i])))
    if any(not R.is_zero(x) for x in residue):
        return None
    x = [R.zero()] * M.cols
    for j in range(M.cols):
        c = coeffs[j]
        if R.is_zero(c):
            continue
        for i in range(M.cols):
            x[i] = R.add(x[i], R.mul(c, transform[j][i]))
    return tuple(x)


def kernel(M: ExactMatrix) -> "Lattice":
    """Kernel of the map given by ``M``; over Z this lattice is saturated."""
    R = M.ring
    cols = M.columns()
    transform = [[R.one() if i == j else R.zero() for i in range(M.cols)] for j in range(M.cols)]
    if R.is_field:
        pivots, cols = _echelon_columns_field(R, cols, M.rows, transform)
    else:
        pivots, cols = _echelon_columns_z(cols, M.rows, transform)
    gens = [transform[j] for j in range(len(pivots), M.cols)]
    return Lattice.from_columns(R, M.cols, gens)


# -- lattices ------------------------------------------------------------------

@dataclass(frozen=True)
class Lattice:
    """A sublattice of Z^n (or a subspace of k^n) in canonical column form."""

    ambient_rank: int
    basis: ExactMatrix

    def __post_init__(self):
        if self.basis.rows != self.ambient_rank:
            raise ValueError("basis rows must equal the ambient rank")

    @classmethod
    def from_columns(cls, ring: Ring, ambient_rank: int, columns: Sequence[Sequence[Scalar]]) -> "Lattice":
        M = ExactMatrix.from_columns(ring, columns, ambient_rank)
        return cls(ambient_rank, canonical_columns(M))

    @classmethod
    def from_matrix(cls, M: ExactMatrix) -> "Lattice":
        return cls(M.rows, canonical_columns(M))

    @classmethod
    def zero(cls, ring: Ring, ambient_rank: int) -> "Lattice":
        return cls(ambient_rank, ExactMatrix.zeros(ring, ambient_rank, 0))

    @classmethod
    def full(cls, ring: Ring, ambient_rank: int) -> "Lattice":
        return cls(ambient_rank, ExactMatrix.identity(ring, ambient_rank))

    @property
    def ring(self) -> Ring:
        return self.basis.ring

    @property
    def rank(self) -> int:
        return self.basis.cols

    def coords(self, v: Sequence[Scalar]) -> Optional[tuple[Scalar, ...]]:
        return solve_columns(self.basis, v)

    def contains(self, v: Sequence[Scalar]) -> bool:
        return self.coords(v) is not None

    def contains_lattice(self, other: "Lattice") -> bool:
        if other.ambient_rank != self.ambient_rank:
            raise ValueError("ambient rank mismatch")
        return all(self.contains(other.basis.column(j)) for j in range(other.basis.cols))

    def sum(self, other: "Lattice") -> "Lattice":
        if other.ambient_rank != self.ambient_rank:
            raise ValueError("ambient rank mismatch")
        return Lattice.from_matrix(self.basis.hstack(other.basis))


def lattice_preimage(M: ExactMatrix, L: Lattice) -> Lattice:
    """The lattice {x : M x in L}, via one stacked kernel computation.

    The kernel of ``[M | -B_L]`` projects onto exactly the preimage in the
    source coordinates; the projection is re-canonicalized.
    """
    if L.ambient_rank != M.rows:
        raise ValueError(
            f"lattice lives in ambient rank {L.ambient_rank}, map targets rank {M.rows}")
    R = M.ring
    if L.rank == 0:
        return kernel(M)
    neg = ExactMatrix(R, L.basis.rows, L.basis.cols,
                      tuple(tuple(R.neg(x) for x in row) for row in L.basis.entries))
    stacked = M.hstack(neg)
    K = kernel(stacked)
    projected = [K.basis.column(j)[: M.cols] for j in range(K.basis.cols)]
    return Lattice.from_columns(R, M.cols, projected)


# -- Smith normal form and subquotients ---------------------------------------

@dataclass(frozen=True)
class SubquotientInvariants:
    """Invariant-factor description of a finitely generated abelian group."""

    free_rank: int
    torsion: tuple[int, ...] = ()

    def __post_init__(self):
        if self.free_rank < 0:
            raise ValueError("free rank must be non-negative")
        prev = 1
        for d in self.torsion:
            if d <= 1:
                raise ValueError("torsion invariants must exceed 1")
            if d % prev != 0:
                raise ValueError("torsion invariants must form a divisibility chain")
            prev = d

    def is_trivial(self) -> bool:
        return self.free_rank == 0 and not self.torsion

    def direct_sum(self, other: "SubquotientInvariants") -> tuple[int, tuple[int, ...]]:
        """Rank and unsorted torsion multiset of the direct sum (no re-chaining)."""
        return self.free_rank + other.free_rank, tuple(sorted(self.torsion + other.torsion))


def _smith_diagonal(A: list[list[int]], nrows: int, ncols: int,
                    uinv: Optional[list[list[int]]] = None) -> list[int]:
    """Diagonalize an integer matrix in place by unimodular operations.

    Returns the non-negative diagonal, with each entry dividing the next.
    If ``uinv`` is given (an identity matrix as a list of columns), it
    accumulates the inverse of the row transform: after the call, column i
    of ``uinv`` is the preimage of the i-th standard generator, so it maps
    generators of the diagonalized cokernel back to original coordinates.
    """

    def row_swap(i, j):
        A[i], A[j] = A[j], A[i]
        if uinv is not None:
            uinv[i], uinv[j] = uinv[j], uinv[i]

    def row_addmul(i, j, q):
        # row_i += q * row_j  =>  uinv col_j -= q * uinv col_i
        A[i] = [x + q * y for x, y in zip(A[i], A[j])]
        if uinv is not None:
            uinv[j] = [x - q * y for x, y in zip(uinv[j], uinv[i])]

    def row_combine(i, j, x, y, ag, bg):
        # rows (i, j) <- (x*r_i + y*r_j, -bg*r_i + ag*r_j), det 1
        ri, rj = A[i], A[j]
        A[i] = [x * u + y * v for u, v in zip(ri, rj)]
        A[j] = [-bg * u + ag * v for u, v in zip(ri, rj)]
        if uinv is not None:
            ci, cj = uinv[i], uinv[j]
            uinv[i] = [ag * u + bg * v for u, v in zip(ci, cj)]
            uinv[j] = [-y * u + x * v for u, v in zip(ci, cj)]

    def row_negate(i):
        A[i] = [-x for x in A[i]]
        if uinv is not None:
            uinv[i] = [-x for x in uinv[i]]

    def col_addmul(j, k, q):
        for row in A:
            row[j] += q * row[k]

    def col_combine(j, k, x, y, ag, bg):
        # cols (j, k) <- (x*c_j + y*c_k, -bg*c_j + ag*c_k), det 1
        for row in A:
            u, v = row[j], row[k]
            row[j] = x * u + y * v
            row[k] = -bg * u + ag * v

    def col_swap(j, k):
        for row in A:
            row[j], row[k] = row[k], row[j]

    diag: list[int] = []
    t = 0
    while t < nrows and t < ncols:
        # locate a nonzero entry of minimal magnitude in the submatrix
        best = None
        for i in range(t, nrows):
            for j in range(t, ncols):
                v = abs(A[i][j])
                if v and (best is None or v < best[0]):
                    best = (v, i, j)
        if best is None:
            break
        _, bi, bj = best
        if bi != t:
            row_swap(t, bi)
        if bj != t:
            col_swap(t, bj)
        while True:
            for i in range(t + 1, nrows):
                a, b = A[t][t], A[i][t]
                if b == 0:
                    continue
                if b % a == 0:
                    row_addmul(i, t, -(b // a))
                else:
                    g, x, y = _xgcd(a, b)
                    row_combine(t, i, x, y, a // g, b // g)
            for j in range(t + 1, ncols):
                a, b = A[t][t], A[t][j]
                if b == 0:
                    continue
                if b % a == 0:
                    col_addmul(j, t, -(b // a))
                else:
                    g, x, y = _xgcd(a, b)
                    col_combine(t, j, x, y, a // g, b // g)
            if any(A[i][t] for i in range(t + 1, nrows)) or any(A[t][j] for j in range(t + 1, ncols)):
                continue
            # pivot must divide the remaining submatrix for the chain to hold
            offender = None
            for i in range(t + 1, nrows):
                for j in range(t + 1, ncols):
                    if A[i][j] % A[t][t] != 0:
                        offender = i
                        break
                if offender is not None:
                    break
            if offender is None:
                break
            row_addmul(t, offender, 1)
        if A[t][t] < 0:
            row_negate(t)
        diag.append(A[t][t])
        t += 1
    return diag


def smith_invariants(M: ExactMatrix) -> SubquotientInvariants:
    """Invariant factors of the cokernel of an integer matrix.

    Trivial factors (= 1) are dropped; the free rank is ``rows - rank``.
    """
    _require_z(M, "smith_invariants")
    A = [list(row) for row in M.entries]
    diag = _smith_diagonal(A, M.rows, M.cols)
    nonzero = [d for d in diag if d != 0]
    torsion = tuple(d for d in nonzero if d > 1)
    return SubquotientInvariants(M.rows - len(nonzero), torsion)


def _inclusion_matrix(C: Lattice, B: Lattice) -> ExactMatrix:
    if B.ambient_rank != C.ambient_rank:
        raise ValueError("ambient rank mismatch between cycles and boundaries")
    cols = []
    for j in range(B.basis.cols):
        x = C.coords(B.basis.column(j))
        if x is None:
            raise ConsistencyError("boundaries not inside cycles")
        cols.append(list(x))
    return ExactMatrix.from_columns(C.ring, cols, C.rank)


def subquotient(C: Lattice, B: Lattice) -> SubquotientInvariants:
    """Invariants of C/B; raises ConsistencyError unless B is contained in C."""
    A = _inclusion_matrix(C, B)
    if C.ring.is_field:
        return SubquotientInvariants(C.rank - rank(A))
    return smith_invariants(A)


def subquotient_with_representatives(C: Lattice, B: Lattice):
    """Invariants of C/B plus ambient-coordinate representatives.

    Returns ``(invariants, reps)`` where reps lists one generator per
    torsion factor (in invariant order) followed by one per free summand,
    all as vectors in the ambient of C.
    """
    A = _inclusion_matrix(C, B)
    R = C.ring
    if R.is_field:
        # representatives: C-basis vectors completing B to a basis of C
        cols = A.columns()
        pivots, _ = _echelon_columns_field(R, cols, A.rows)
        pivot_rows = {row for row, _ in pivots}
        inv = SubquotientInvariants(C.rank - len(pivots))
        reps = [C.basis.column(i) for i in range(C.rank) if i not in pivot_rows]
        return inv, reps
    work = [list(row) for row in A.entries]
    uinv = [[1 if i == j else 0 for i in range(A.rows)] for j in range(A.rows)]
    diag = _smith_diagonal(work, A.rows, A.cols, uinv)
    nonzero = [d for d in diag if d != 0]
    inv = SubquotientInvariants(A.rows - len(nonzero), tuple(d for d in nonzero if d > 1))
    reps = []
    for i, d in enumerate(diag):
        if d > 1:
            reps.append(C.basis.mat_vec(uinv[i]))
    for i in range(len(diag), A.rows):
        reps.append(C.basis.mat_vec(uinv[i]))
    return inv, reps
