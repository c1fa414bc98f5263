"""Exact integer algebra of antisymmetric matrices.

Everything here uses Python integers, so results are exact regardless of
entry size. The main entry points are :func:`skew_normal_form`, which returns
a unimodular witness ``T`` with ``T @ A @ T.T`` block diagonal, the
:func:`build_A` / :func:`build_B` families, and the extended quadratic form
helpers used to read off the boundary of a handlebody.
"""

from __future__ import annotations

import enum
import math
import random
from dataclasses import dataclass, field
from functools import lru_cache, reduce
from typing import Iterable, Sequence

from sympy import ZZ
from sympy.polys.matrices import DomainMatrix

from .errors import DomainMismatch, EllTooSmall, ParityBoundViolation, ShapeMismatch

IntRows = tuple[tuple[int, ...], ...]


def _rows(entries) -> IntRows:
    return tuple(tuple(int(x) for x in row) for row in entries)


@dataclass(frozen=True)
class SkewIntMatrix:
    """Antisymmetric integer matrix.

    Args:
        entries: square nested sequence of integers. Values are converted with
            ``int`` so numpy integer rows are accepted.
    """

    entries: IntRows

    def __post_init__(self):
        rows = _rows(self.entries)
        n = len(rows)
        for i, row in enumerate(rows):
            if len(row) != n:
                raise ShapeMismatch("matrix is not square", row=i, length=len(row), n=n)
            if row[i] != 0:
                raise ShapeMismatch("nonzero diagonal entry", index=i, value=row[i])
            for j in range(i):
                if row[j] != -rows[j][i]:
                    raise ShapeMismatch("matrix is not antisymmetric", i=i, j=j)
        object.__setattr__(self, "entries", rows)

    @property
    def n(self) -> int:
        return len(self.entries)

    def __getitem__(self, ij) -> int:
        i, j = ij
        return self.entries[i][j]

    def to_list(self) -> list[list[int]]:
        return [list(r) for r in self.entries]

    @classmethod
    def zeros(cls, n: int) -> "SkewIntMatrix":
        return cls(tuple((0,) * n for _ in range(n)))

    @classmethod
    def from_upper(cls, n: int, upper: dict) -> "SkewIntMatrix":
        """Build from ``{(i, j): value}`` with ``i < j``."""
        m = [[0] * n for _ in range(n)]
        for (i, j), v in upper.items():
            m[i][j] = int(v)
            m[j][i] = -int(v)
        return cls(m)


@dataclass(frozen=True)
class UnimodularWitness:
    """Integer change of basis with determinant +-1.

    Row ``i`` of ``T`` expresses the ``i``-th new basis vector in the old
    basis, so a form ``A`` becomes ``T A T^T``.
    """

    T: IntRows

    def __post_init__(self):
        rows = _rows(self.T)
        n = len(rows)
        if any(len(r) != n for r in rows):
            raise ShapeMismatch("witness is not square", n=n)
        object.__setattr__(self, "T", rows)
        d = determinant(rows)
        if abs(d) != 1:
            raise DomainMismatch("witness is not unimodular", det=d)

    @property
    def n(self) -> int:
        return len(self.T)

    def apply(self, A: SkewIntMatrix) -> SkewIntMatrix:
        if A.n != self.n:
            raise ShapeMismatch("size mismatch", matrix=A.n, witness=self.n)
        return SkewIntMatrix(congruence(self.T, A.entries))

    def inverse(self) -> "UnimodularWitness":
        dm = DomainMatrix([[ZZ(x) for x in r] for r in self.T], (self.n, self.n), ZZ)
        inv = dm.to_field().inv().to_list()
        return UnimodularWitness(tuple(tuple(int(x) for x in r) for r in inv))

    def to_list(self) -> list[list[int]]:
        return [list(r) for r in self.T]

    @classmethod
    def identity(cls, n: int) -> "UnimodularWitness":
        return cls(_identity(n))


@dataclass(frozen=True)
class SkewNormalForm:
    """Blocks ``K_{d_1}, ..., K_{d_k}`` followed by ``zero_count`` zeros."""

    blocks: tuple[int, ...]
    zero_count: int

    def __post_init__(self):
        blocks = tuple(int(b) for b in self.blocks)
        if any(b <= 0 for b in blocks):
            raise DomainMismatch("blocks must be positive", blocks=blocks)
        for a, b in zip(blocks, blocks[1:]):
            if b % a:
                raise DomainMismatch("blocks do not form a divisibility chain", blocks=blocks)
        if self.zero_count < 0:
            raise DomainMismatch("negative zero count", zero_count=self.zero_count)
        object.__setattr__(self, "blocks", blocks)

    @property
    def n(self) -> int:
        return 2 * len(self.blocks) + self.zero_count

    def matrix(self) -> SkewIntMatrix:
        return block_diagonal(self.blocks, self.zero_count)

    def to_dict(self) -> dict:
        return {"blocks": list(self.blocks), "zero_count": self.zero_count}


# ---------------------------------------------------------------------------
# basic exact arithmetic


def _identity(n: int) -> IntRows:
    return tuple(tuple(1 if i == j else 0 for j in range(n)) for i in range(n))


def matmul(a: Sequence[Sequence[int]], b: Sequence[Sequence[int]]) -> IntRows:
    cols = list(zip(*b))
    return tuple(tuple(sum(x * y for x, y in zip(row, col)) for col in cols) for row in a)


def transpose(a: Sequence[Sequence[int]]) -> IntRows:
    return tuple(tuple(c) for c in zip(*a))


def congruence(T: Sequence[Sequence[int]], A: Sequence[Sequence[int]]) -> IntRows:
    """Return ``T A T^T``."""
    if not A:
        return ()
    return matmul(matmul(T, A), transpose(T))


def determinant(M: Sequence[Sequence[int]]) -> int:
    """Exact determinant (fraction-free elimination over ZZ, via sympy)."""
    n = len(M)
    if n == 0:
        return 1
    return int(DomainMatrix([[ZZ(int(x)) for x in r] for r in M], (n, n), ZZ).det())


def block_diagonal(blocks: Iterable[int], zero_count: int = 0) -> SkewIntMatrix:
    """``D_N(n_1, ..., n_k)``: ``K_{n_j}`` blocks followed by zeros."""
    blocks = [int(b) for b in blocks]
    n = 2 * len(blocks) + int(zero_count)
    upper = {(2 * i, 2 * i + 1): b for i, b in enumerate(blocks)}
    return SkewIntMatrix.from_upper(n, upper)


def direct_sum(*mats: SkewIntMatrix) -> SkewIntMatrix:
    n = sum(m.n for m in mats)
    out = [[0] * n for _ in range(n)]
    off = 0
    for m in mats:
        for i in range(m.n):
            for j in range(m.n):
                out[off + i][off + j] = m[i, j]
        off += m.n
    return SkewIntMatrix(out)


def canonical_blocks(values: Iterable[int]) -> tuple[int, ...]:
    """Reduce a multiset of block values to a divisibility chain.

    Pairs are merged into ``(gcd, lcm)`` until the chain condition holds. The
    product is preserved, as are the elementary divisors of the block sum.
    """
    vals = sorted(abs(int(v)) for v in values if v != 0)
    changed = True
    while changed:
        changed = False
        for i in range(len(vals)):
            for j in range(i + 1, len(vals)):
                a, b = vals[i], vals[j]
                if b % a:
                    g = math.gcd(a, b)
                    vals[i], vals[j] = g, a // g * b
                    changed = True
        vals.sort()
    return tuple(vals)


# ---------------------------------------------------------------------------
# normal form


class _Work:
    """Mutable matrix plus witness rows under simultaneous operations."""

    def __init__(self, A: SkewIntMatrix):
        self.M = [list(r) for r in A.entries]
        self.T = [list(r) for r in _identity(A.n)]
        self.n = A.n

    def swap(self, i: int, j: int):
        if i == j:
            return
        M = self.M
        M[i], M[j] = M[j], M[i]
        for row in M:
            row[i], row[j] = row[j], row[i]
        self.T[i], self.T[j] = self.T[j], self.T[i]

    def add(self, src: int, dst: int, c: int):
        """Basis move ``e_dst += c e_src``."""
        if c == 0:
            return
        M = self.M
        M[dst] = [x + c * y for x, y in zip(M[dst], M[src])]
        for row in M:
            row[dst] += c * row[src]
        self.T[dst] = [x + c * y for x, y in zip(self.T[dst], self.T[src])]

    def negate(self, i: int):
        M = self.M
        M[i] = [-x for x in M[i]]
        for row in M:
            row[i] = -row[i]
        self.T[i] = [-x for x in self.T[i]]


def _min_entry(M, k: int, n: int):
    best = None
    for i in range(k, n):
        row = M[i]
        for j in range(i + 1, n):
            v = row[j]
            if v and (best is None or abs(v) < best[0]):
                best = (abs(v), i, j)
    return best


def skew_normal_form(A: SkewIntMatrix) -> tuple[UnimodularWitness, SkewNormalForm]:
    """Congruence normal form of an antisymmetric integer matrix.

    Pivots on the smallest nonzero entry of the active block, clears its two
    rows and columns by simultaneous row/column operations and splits off a
    ``K_d`` block. When the pivot does not divide some remaining entry, that
    entry's row is added to the pivot row first, so the blocks come out as a
    divisibility chain directly.

    Returns:
        ``(T, form)`` with ``T A T^T == form.matrix()`` exactly.
    """
    w = _Work(A)
    M, n = w.M, w.n
    blocks: list[int] = []
    k = 0
    while k + 1 < n:
        best = _min_entry(M, k, n)
        if best is None:
            break
        _, i, j = best
        w.swap(k, i)
        w.swap(k + 1, j)
        if M[k][k + 1] < 0:
            w.negate(k + 1)
        p = M[k][k + 1]
        dirty = False
        for j in range(k + 2, n):
            w.add(k + 1, j, -(M[k][j] // p))
            w.add(k, j, M[k + 1][j] // p)
            if M[k][j] or M[k + 1][j]:
                dirty = True
        if dirty:
            continue
        bad = None
        for i in range(k + 2, n):
            for j in range(i + 1, n):
                if M[i][j] % p:
                    bad = i
                    break
            if bad is not None:
                break
        if bad is not None:
            w.add(bad, k, 1)
            continue
        blocks.append(p)
        k += 2
    T = UnimodularWitness(w.T)
    form = SkewNormalForm(tuple(blocks), n - 2 * len(blocks))
    if congruence(T.T, A.entries) != form.matrix().entries:
        raise AssertionError("normal form witness does not reproduce the block matrix")
    return T, form


def congruent(A: SkewIntMatrix, B: SkewIntMatrix) -> bool:
    """Whether ``B = T A T^T`` for some unimodular integer ``T``."""
    if A.n != B.n:
        raise ShapeMismatch("size mismatch", a=A.n, b=B.n)
    return skew_normal_form(A)[1] == skew_normal_form(B)[1]


def pfaffian(A: SkewIntMatrix) -> int:
    """Pfaffian by recursive expansion along the first row (memoized).

    Exponential in ``n`` but independent of the normal form code; intended as
    an oracle for ``n`` up to about 16.
    """
    if A.n % 2:
        return 0
    M = A.entries

    @lru_cache(maxsize=None)
    def pf(idx: tuple[int, ...]) -> int:
        if not idx:
            return 1
        i, rest = idx[0], idx[1:]
        total = 0
        for pos, j in enumerate(rest):
            a = M[i][j]
            if a:
                sign = 1 if pos % 2 == 0 else -1
                total += sign * a * pf(rest[:pos] + rest[pos + 1:])
        return total

    return pf(tuple(range(A.n)))


def random_skew(n: int, rng: random.Random, bound: int = 5) -> SkewIntMatrix:
    upper = {(i, j): rng.randint(-bound, bound) for i in range(n) for j in range(i + 1, n)}
    return SkewIntMatrix.from_upper(n, upper)


def random_unimodular(n: int, rng: random.Random, steps: int = 20, bound: int = 2) -> UnimodularWitness:
    """Product of random elementary moves, swaps and sign flips."""
    T = [list(r) for r in _identity(n)]
    if n == 0:
        return UnimodularWitness(())
    for _ in range(steps):
        kind = rng.random()
        i = rng.randrange(n)
        if n > 1 and kind < 0.7:
            j = rng.randrange(n - 1)
            j += j >= i
            c = rng.randint(-bound, bound)
            T[i] = [x + c * y for x, y in zip(T[i], T[j])]
        elif n > 1 and kind < 0.85:
            j = rng.randrange(n)
            T[i], T[j] = T[j], T[i]
        else:
            T[i] = [-x for x in T[i]]
    return UnimodularWitness(T)


# ---------------------------------------------------------------------------
# the A and B families


def build_S(dim: int) -> SkewIntMatrix:
    """Antisymmetric ``dim x dim`` matrix with every entry above the diagonal 1."""
    if dim < 1 or dim % 2 == 0:
        raise ValueError(f"dimension must be a positive odd integer, got {dim}")
    return SkewIntMatrix.from_upper(dim, {(i, j): 1 for i in range(dim) for j in range(i + 1, dim)})


def check_parity_bound(n: int, ell: int):
    if n < 1 or ell < 1:
        raise ParityBoundViolation("n and ell must be positive", n=n, ell=ell)
    bound = 2 * ell - 2 if n % 2 == 0 else 2 * ell - 1
    if n > bound:
        raise ParityBoundViolation(f"n={n} exceeds {bound} for ell={ell}", n=n, ell=ell, bound=bound)


def build_v(n: int, ell: int) -> tuple[int, ...]:
    """The last column of ``A_{n, ell}`` above the corner."""
    check_parity_bound(n, ell)
    out = []
    for i in range(1, 2 * ell):
        if i <= n:
            out.append((-1) ** (i - 1))
        elif i == 2 * ell - 1 and n % 2 == 0:
            out.append(0)
        else:
            out.append(1)
    return tuple(out)


def build_A(n: int, ell: int) -> SkewIntMatrix:
    """``A_{n, ell}``: ``S_{2 ell - 1}`` bordered by ``v_{n, ell}``."""
    v = build_v(n, ell)
    S = build_S(2 * ell - 1)
    N = 2 * ell
    m = [[0] * N for _ in range(N)]
    for i in range(N - 1):
        for j in range(N - 1):
            m[i][j] = S[i, j]
        m[i][N - 1] = v[i]
        m[N - 1][i] = -v[i]
    return SkewIntMatrix(m)


def minimal_ell(nu: Sequence[int]) -> int:
    """Smallest ``ell`` accepted by :func:`build_B` for ``nu``."""
    k = len(nu)
    return max(1, math.ceil(max(max(n + 1 for n in nu), k) / 2))


def build_B(nu: Sequence[int], ell: int) -> SkewIntMatrix:
    """``B_{nu, ell}``, assembled inductively from ``A_{n_j, ell}`` blocks.

    The off-diagonal block joining step ``k`` repeats column ``k - 1`` of the
    previous matrix (1-based) in all ``2 ell`` columns.
    """
    nu = [int(n) for n in nu]
    if not nu or any(n <= 0 for n in nu):
        raise ValueError(f"nu must be a nonempty sequence of positive integers, got {nu}")
    k = len(nu)
    if 2 * ell < max(max(n + 1 for n in nu), k):
        raise EllTooSmall(f"ell={ell} below {minimal_ell(nu)} for nu={tuple(nu)}",
                          ell=ell, minimal=minimal_ell(nu))
    B = [list(r) for r in build_A(nu[0], ell).entries]
    for step in range(2, k + 1):
        Ak = build_A(nu[step - 1], ell)
        size = len(B)
        col = [B[r][step - 2] for r in range(size)]
        N = size + 2 * ell
        out = [[0] * N for _ in range(N)]
        for i in range(size):
            out[i][:size] = B[i]
            for j in range(2 * ell):
                out[i][size + j] = col[i]
                out[size + j][i] = -col[i]
        for i in range(2 * ell):
            for j in range(2 * ell):
                out[size + i][size + j] = Ak[i, j]
        B = out
    return SkewIntMatrix(B)


def expected_A_form(n: int, ell: int) -> SkewIntMatrix:
    """``D_{2 ell}(1, ..., 1, n)``."""
    return block_diagonal([1] * (ell - 1) + [n])


def expected_B_form(nu: Sequence[int], ell: int) -> SkewIntMatrix:
    """``D_{2 ell k}(1, ..., 1, n_1, ..., n_k)``."""
    return block_diagonal([1] * (len(nu) * (ell - 1)) + list(nu))


def anl_reduction_steps(A: SkewIntMatrix) -> list[tuple[int, ...]]:
    """Border vectors produced by repeatedly splitting off a ``K_1``.

    Each step replaces ``v`` by ``(v_3 + (v_1 - v_2), ..., v_{2r+1} + (v_1 - v_2))``.
    """
    N = A.n
    if N % 2 or N < 2:
        raise ShapeMismatch("expected an even-sized bordered matrix", n=N)
    S = build_S(N - 1)
    for i in range(N - 1):
        for j in range(N - 1):
            if A[i, j] != S[i, j]:
                raise ShapeMismatch("upper-left block is not S", i=i, j=j)
    v = tuple(A[i, N - 1] for i in range(N - 1))
    steps = [v]
    while len(v) > 1:
        d = v[0] - v[1]
        v = tuple(x + d for x in v[2:])
        steps.append(v)
    return steps


def anl_reduction_trace(A: SkewIntMatrix) -> int:
    """Residual block value after the bordered reduction; equals ``n`` for ``A_{n, ell}``."""
    v = anl_reduction_steps(A)[-1]
    return -sum((-1) ** i * x for i, x in enumerate(v, start=1))


# ---------------------------------------------------------------------------
# extended quadratic forms


def _group_elem(x, factors: tuple[int, ...]) -> tuple[int, ...]:
    if isinstance(x, int):
        x = (x,) if factors else ()
    x = tuple(int(v) for v in x)
    if len(x) != len(factors):
        raise ShapeMismatch("group element has wrong length", element=x, factors=factors)
    return tuple(v % f if f else v for v, f in zip(x, factors))


@dataclass(frozen=True)
class ExtendedQuadraticForm:
    """``(Z^rank, lambda, mu)`` over a finite abelian coefficient group.

    Args:
        lam: the skew form on the basis.
        coeff_group: invariant factors of the coefficient group; ``()`` is trivial.
        p_image: image of ``1`` under ``p``.
        mu: values on the basis vectors.
    """

    lam: SkewIntMatrix
    coeff_group: tuple[int, ...] = ()
    p_image: tuple[int, ...] = ()
    mu: tuple[tuple[int, ...], ...] = field(default=())

    def __post_init__(self):
        factors = tuple(int(f) for f in self.coeff_group)
        if any(f < 0 or f == 1 for f in factors):
            raise DomainMismatch("invariant factors must be 0 or at least 2", factors=factors)
        object.__setattr__(self, "coeff_group", factors)
        object.__setattr__(self, "p_image", _group_elem(self.p_image, factors))
        mu = self.mu or tuple(_group_elem((0,) * len(factors), factors) for _ in range(self.lam.n))
        mu = tuple(_group_elem(m, factors) for m in mu)
        if len(mu) != self.lam.n:
            raise ShapeMismatch("mu needs one value per basis vector", rank=self.lam.n, mu=len(mu))
        object.__setattr__(self, "mu", mu)
        # order independence of the extension needs p(2 lambda(x, y)) = 0
        for i in range(self.rank):
            for j in range(i + 1, self.rank):
                if any(self.p(2 * self.lam[i, j])):
                    raise DomainMismatch("mu cannot be extended: p(2 lambda) != 0",
                                         i=i, j=j, lam=self.lam[i, j])

    @property
    def rank(self) -> int:
        return self.lam.n

    def zero(self) -> tuple[int, ...]:
        return _group_elem((0,) * len(self.coeff_group), self.coeff_group)

    def add(self, a, b) -> tuple[int, ...]:
        return _group_elem(tuple(x + y for x, y in zip(a, b)), self.coeff_group)

    def neg(self, a) -> tuple[int, ...]:
        return _group_elem(tuple(-x for x in a), self.coeff_group)

    def p(self, k: int) -> tuple[int, ...]:
        return _group_elem(tuple(k * x for x in self.p_image), self.coeff_group)

    def pairing(self, x: Sequence[int], y: Sequence[int]) -> int:
        L = self.lam.entries
        return sum(x[i] * L[i][j] * y[j] for i in range(self.rank) for j in range(self.rank) if x[i] and y[j])

    def mu_neg_basis(self, i: int) -> tuple[int, ...]:
        """``mu(-e_i)`` from ``0 = mu(0) = mu(e) + mu(-e) + p(lambda(e, -e))``."""
        e = [0] * self.rank
        e[i] = 1
        minus_e = [-x for x in e]
        return self.neg(self.add(self.mu[i], self.p(self.pairing(e, minus_e))))

    def mu_of(self, x: Sequence[int], order: Sequence[int] | None = None) -> tuple[int, ...]:
        """Extend ``mu`` to ``x`` by adding one signed basis vector at a time.

        Args:
            x: integer coordinates.
            order: basis indices in the order they are added (default ascending).
        """
        x = [int(v) for v in x]
        if len(x) != self.rank:
            raise ShapeMismatch("vector has wrong length", rank=self.rank, length=len(x))
        acc = [0] * self.rank
        val = self.zero()
        for i in (order if order is not None else range(self.rank)):
            s = 1 if x[i] > 0 else -1
            step = [0] * self.rank
            step[i] = s
            mu_step = self.mu[i] if s > 0 else self.mu_neg_basis(i)
            for _ in range(abs(x[i])):
                val = self.add(self.add(val, mu_step), self.p(self.pairing(acc, step)))
                acc[i] += s
        return val

    def to_dict(self) -> dict:
        return {
            "rank": self.rank,
            "lambda": self.lam.to_list(),
            "coeff_group": list(self.coeff_group),
            "p_image": list(self.p_image),
            "mu": [list(m) for m in self.mu],
        }


def eqf_change_basis(form: ExtendedQuadraticForm, T: UnimodularWitness) -> ExtendedQuadraticForm:
    """Express ``form`` in the basis whose ``i``-th vector is row ``i`` of ``T``."""
    if T.n != form.rank:
        raise ShapeMismatch("size mismatch", rank=form.rank, witness=T.n)
    lam = T.apply(form.lam)
    mu = tuple(form.mu_of(row) for row in T.T)
    return ExtendedQuadraticForm(lam, form.coeff_group, form.p_image, mu)


class BoundaryType(str, enum.Enum):
    SPHERE_BUNDLE = "SphereBundleOverSphere"
    HOMOTOPY_SPHERE = "HomotopySphere"
    UNCLASSIFIED = "Unclassified"


def classify_boundary(form: ExtendedQuadraticForm) -> BoundaryType:
    """What the boundary of the handlebody with this form is known to be.

    Only the two recognisable cases are reported; everything else is
    ``Unclassified``.
    """
    if form.rank == 1:
        return BoundaryType.SPHERE_BUNDLE
    if form.rank == 2 and congruent(form.lam, block_diagonal([1])):
        return BoundaryType.HOMOTOPY_SPHERE
    return BoundaryType.UNCLASSIFIED


def pfaffian_abs_product(form: SkewNormalForm) -> int:
    """``|Pf|`` implied by a normal form (0 when there are zeros)."""
    if form.zero_count:
        return 0
    return reduce(lambda a, b: a * b, form.blocks, 1)
