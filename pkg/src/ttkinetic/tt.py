"""Order-3 tensors in Tensor-Train format.

A tensor ``A`` of shape ``(n1, n2, n3)`` is stored as three cores ``G1, G2, G3``
of shapes ``(1, n1, r1)``, ``(r1, n2, r2)`` and ``(r2, n3, 1)`` so that::

    A[i, j, k] = G1[:, i, :] @ G2[:, j, :] @ G3[:, k, :]

Everything here is a pure function of its arguments; cores are locked
read-only once wrapped in a :class:`TtTensor`.
"""
from __future__ import annotations

from typing import Sequence

import numpy as np

__all__ = [
    "TtTensor",
    "tt_rank1",
    "tt_ones",
    "tt_zeros",
    "tt_from_full",
    "tt_to_full",
    "tt_add",
    "tt_sub",
    "tt_lincomb",
    "tt_hadamard",
    "tt_round",
    "tt_convolve",
    "tt_sum",
    "tt_dot",
    "tt_norm",
    "tt_scale",
    "tt_divide_by_rank1",
    "tt_flip",
]


def _locked(arr):
    view = arr.view()
    view.flags.writeable = False
    return view


class TtTensor:
    """Immutable order-3 TT tensor."""

    __slots__ = ("cores",)

    def __init__(self, cores: Sequence[np.ndarray]):
        if len(cores) != 3:
            raise ValueError(f"expected 3 cores, got {len(cores)}")
        cs = tuple(_locked(np.asarray(c, dtype=np.float64)) for c in cores)
        for k, c in enumerate(cs):
            if c.ndim != 3:
                raise ValueError(f"core {k} must be 3-dimensional, got shape {c.shape}")
        if cs[0].shape[0] != 1 or cs[2].shape[2] != 1:
            raise ValueError("boundary ranks must equal 1")
        if cs[0].shape[2] != cs[1].shape[0] or cs[1].shape[2] != cs[2].shape[0]:
            raise ValueError(
                "inconsistent core ranks: " + ", ".join(str(c.shape) for c in cs)
            )
        object.__setattr__(self, "cores", cs)

    def __setattr__(self, name, value):
        raise AttributeError("TtTensor is immutable")

    def __reduce__(self):
        return (TtTensor, ([np.array(c) for c in self.cores],))

    @property
    def mode_sizes(self) -> tuple[int, int, int]:
        return tuple(c.shape[1] for c in self.cores)

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.mode_sizes

    @property
    def ranks(self) -> tuple[int, int, int, int]:
        c = self.cores
        return (1, c[0].shape[2], c[1].shape[2], 1)

    @property
    def storage_count(self) -> int:
        return sum(c.size for c in self.cores)

    def __getitem__(self, idx):
        i, j, k = idx
        g1, g2, g3 = self.cores
        return float(g1[0, i, :] @ g2[:, j, :] @ g3[:, k, 0])

    def full(self) -> np.ndarray:
        return tt_to_full(self)

    def norm(self) -> float:
        return tt_norm(self)

    def round(self, eps: float, max_rank: int | None = None) -> "TtTensor":
        return tt_round(self, eps, max_rank)

    def __add__(self, other):
        return tt_add(self, other)

    def __sub__(self, other):
        return tt_sub(self, other)

    def __neg__(self):
        return tt_scale(self, -1.0)

    def __mul__(self, other):
        if isinstance(other, TtTensor):
            return tt_hadamard(self, other)
        return tt_scale(self, other)

    __rmul__ = __mul__

    def __truediv__(self, s):
        return tt_scale(self, 1.0 / s)

    def __repr__(self):
        return f"TtTensor(mode_sizes={self.mode_sizes}, ranks={self.ranks})"


def _check_same_modes(a: TtTensor, b: TtTensor):
    if a.mode_sizes != b.mode_sizes:
        raise ValueError(f"mode size mismatch: {a.mode_sizes} vs {b.mode_sizes}")


def tt_rank1(u, v, w) -> TtTensor:
    """Rank-one tensor ``u(i) v(j) w(k)``."""
    vecs = [np.asarray(x, dtype=np.float64).ravel() for x in (u, v, w)]
    if any(x.size == 0 for x in vecs):
        raise ValueError("rank-1 factors must be nonempty")
    return TtTensor([x.reshape(1, -1, 1) for x in vecs])


def _as_shape(n) -> tuple[int, int, int]:
    if np.isscalar(n):
        return (int(n),) * 3
    shape = tuple(int(x) for x in n)
    if len(shape) != 3:
        raise ValueError(f"expected 3 mode sizes, got {shape}")
    return shape


def tt_ones(n) -> TtTensor:
    return tt_rank1(*(np.ones(m) for m in _as_shape(n)))


def tt_zeros(n) -> TtTensor:
    n1, n2, n3 = _as_shape(n)
    return tt_rank1(np.zeros(n1), np.ones(n2), np.ones(n3))


def _svd(m: np.ndarray):
    """Thin SVD that retries when LAPACK's divide-and-conquer fails to converge.

    gesdd occasionally gives up on finite, badly scaled matrices; the same
    factorization of the scaled matrix or of its transpose goes through.
    """
    try:
        return np.linalg.svd(m, full_matrices=False)
    except np.linalg.LinAlgError:
        if not np.all(np.isfinite(m)):
            raise FloatingPointError("non-finite values in TT core") from None
    scale = float(np.max(np.abs(m)))
    try:
        u, s, vt = np.linalg.svd(m / scale, full_matrices=False)
        return u, s * scale, vt
    except np.linalg.LinAlgError:
        pass
    v, s, ut = np.linalg.svd(m.T / scale, full_matrices=False)
    return ut.T, s * scale, v.T


def _truncation_rank(s: np.ndarray, delta2: float, max_rank: int | None) -> int:
    # smallest r with sum_{k >= r} s_k^2 <= delta2
    tail = np.cumsum((s * s)[::-1])[::-1]
    r = int(np.count_nonzero(tail > delta2))
    r = max(r, 1)
    if max_rank is not None:
        r = min(r, max_rank)
    return r


def tt_from_full(full, eps: float, max_rank: int | None = None) -> TtTensor:
    """TT-SVD of a dense 3-way array to relative Frobenius accuracy ``eps``.

    The squared error budget ``eps**2 * ||A||**2`` is split evenly over the two
    unfoldings, so the reconstruction satisfies ``||A - B|| <= eps * ||A||``
    (unless ``max_rank`` forces a coarser result).
    """
    a = np.asarray(full, dtype=np.float64)
    if a.ndim != 3:
        raise ValueError(f"expected a 3-way array, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        bad = np.argwhere(~np.isfinite(a))[0]
        raise ValueError(f"non-finite entry at index {tuple(int(i) for i in bad)}")
    if eps <= 0:
        raise ValueError("eps must be positive")
    n1, n2, n3 = a.shape
    nrm2 = float(np.sum(a * a))
    if nrm2 == 0.0:
        return tt_zeros(a.shape)
    delta2 = eps * eps * nrm2 / 2.0

    u, s, vt = _svd(a.reshape(n1, n2 * n3))
    r1 = _truncation_rank(s, delta2, max_rank)
    g1 = u[:, :r1].reshape(1, n1, r1)
    rest = (s[:r1, None] * vt[:r1]).reshape(r1 * n2, n3)

    u, s, vt = _svd(rest)
    r2 = _truncation_rank(s, delta2, max_rank)
    g2 = u[:, :r2].reshape(r1, n2, r2)
    g3 = (s[:r2, None] * vt[:r2]).reshape(r2, n3, 1)
    return TtTensor([g1, g2, g3])


def tt_to_full(a: TtTensor) -> np.ndarray:
    g1, g2, g3 = a.cores
    n1, n2, n3 = a.mode_sizes
    left = g1[0] @ g2.reshape(g2.shape[0], -1)  # (n1, n2*r2)
    return (left.reshape(n1 * n2, -1) @ g3[:, :, 0]).reshape(n1, n2, n3)


def tt_lincomb(coeffs: Sequence[float], tensors: Sequence[TtTensor]) -> TtTensor:
    """``sum_k coeffs[k] * tensors[k]`` by block concatenation of cores.

    Ranks of the result are the sums of the operand ranks; no arithmetic
    beyond copying (and one scaling per term) is performed.
    """
    if len(coeffs) != len(tensors) or not tensors:
        raise ValueError("need equally many (>0) coefficients and tensors")
    shape = tensors[0].mode_sizes
    for t in tensors[1:]:
        _check_same_modes(tensors[0], t)
    if len(tensors) == 1:
        return tt_scale(tensors[0], coeffs[0])
    n1, n2, n3 = shape
    r1s = [t.ranks[1] for t in tensors]
    r2s = [t.ranks[2] for t in tensors]
    R1, R2 = sum(r1s), sum(r2s)

    g1 = np.empty((1, n1, R1))
    g2 = np.zeros((R1, n2, R2))
    g3 = np.empty((R2, n3, 1))
    o1 = o2 = 0
    for c, t, r1, r2 in zip(coeffs, tensors, r1s, r2s):
        a1, a2, a3 = t.cores
        g1[:, :, o1:o1 + r1] = a1 if c == 1 else c * a1
        g2[o1:o1 + r1, :, o2:o2 + r2] = a2
        g3[o2:o2 + r2] = a3
        o1 += r1
        o2 += r2
    return TtTensor([g1, g2, g3])


def tt_add(a: TtTensor, b: TtTensor) -> TtTensor:
    return tt_lincomb((1.0, 1.0), (a, b))


def tt_sub(a: TtTensor, b: TtTensor) -> TtTensor:
    return tt_lincomb((1.0, -1.0), (a, b))


def tt_scale(a: TtTensor, s: float) -> TtTensor:
    g1, g2, g3 = a.cores
    return TtTensor([g1 * float(s), g2, g3])


def tt_hadamard(a: TtTensor, b: TtTensor) -> TtTensor:
    """Element-wise product; core slices are Kronecker products."""
    _check_same_modes(a, b)
    cores = []
    for ca, cb in zip(a.cores, b.cores):
        ra0, n, ra1 = ca.shape
        rb0, _, rb1 = cb.shape
        if ra0 * ra1 == 1:
            c = ca.reshape(1, n, 1) * cb
        elif rb0 * rb1 == 1:
            c = ca * cb.reshape(1, n, 1)
        else:
            c = (ca[:, None, :, :, None] * cb[None, :, :, None, :]).reshape(
                ra0 * rb0, n, ra1 * rb1
            )
        cores.append(c)
    return TtTensor(cores)


def _orthogonalize_rl(a: TtTensor):
    """Right-to-left QR sweep; returns cores with G2, G3 right-orthonormal."""
    g1, g2, g3 = a.cores
    r1, n2, r2 = g2.shape
    n3 = g3.shape[1]

    q, r = np.linalg.qr(g3[:, :, 0].T)  # (n3, k), (k, r2)
    k2 = q.shape[1]
    g3 = q.T.reshape(k2, n3, 1)
    g2 = (g2.reshape(r1 * n2, r2) @ r.T).reshape(r1, n2 * k2)

    g1 = g1[0]
    if r1 > g1.shape[0]:
        # sums of Hadamard products have r1 >> n1: cut r1 down to n1 with a
        # cheap QR of the first core before the (n2 k2 x r1) QR below
        q1, r = np.linalg.qr(g1)  # (n1, n1), (n1, r1)
        g1, g2 = q1, r @ g2
        r1 = g1.shape[1]

    q, r = np.linalg.qr(g2.T)  # (n2*k2, k1), (k1, r1)
    k1 = q.shape[1]
    g2 = q.T.reshape(k1, n2, k2)
    g1 = g1 @ r.T  # (n1, k1)
    return g1, g2, g3


def tt_round(a: TtTensor, eps: float, max_rank: int | None = None) -> TtTensor:
    """Recompress ``a`` to relative Frobenius accuracy ``eps``.

    QR orthogonalization right-to-left, then truncated SVDs left-to-right.
    Ranks never increase.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    g1, g2, g3 = _orthogonalize_rl(a)
    n1, k1 = g1.shape
    _, n2, k2 = g2.shape
    n3 = g3.shape[1]
    nrm2 = float(np.sum(g1 * g1))
    if nrm2 == 0.0 or not np.isfinite(nrm2):
        if not np.isfinite(nrm2):
            raise FloatingPointError("non-finite TT tensor cannot be rounded")
        return tt_zeros(a.mode_sizes)
    delta2 = eps * eps * nrm2 / 2.0

    u, s, vt = _svd(g1)
    r1 = _truncation_rank(s, delta2, max_rank)
    new1 = u[:, :r1].reshape(1, n1, r1)
    carry = s[:r1, None] * vt[:r1]  # (r1, k1)
    g2 = (carry @ g2.reshape(k1, n2 * k2)).reshape(r1 * n2, k2)

    u, s, vt = _svd(g2)
    r2 = _truncation_rank(s, delta2, max_rank)
    new2 = u[:, :r2].reshape(r1, n2, r2)
    carry = s[:r2, None] * vt[:r2]  # (r2, k2)
    new3 = (carry @ g3.reshape(k2, n3)).reshape(r2, n3, 1)
    return TtTensor([new1, new2, new3])


def tt_convolve(a: TtTensor, u, v, w) -> float:
    """``sum_ijk A[i,j,k] u[i] v[j] w[k]`` in O(n r^2), never densified."""
    vecs = [np.asarray(x, dtype=np.float64).ravel() for x in (u, v, w)]
    for m, (x, n) in enumerate(zip(vecs, a.mode_sizes)):
        if x.size != n:
            raise ValueError(f"weight {m} has length {x.size}, mode size is {n}")
    g1, g2, g3 = a.cores
    left = vecs[0] @ g1[0]  # (r1,)
    mid = np.einsum("ajb,j->ab", g2, vecs[1])
    right = g3[:, :, 0] @ vecs[2]  # (r2,)
    return float(left @ mid @ right)


def tt_sum(a: TtTensor) -> float:
    g1, g2, g3 = a.cores
    return float(g1[0].sum(axis=0) @ g2.sum(axis=1) @ g3[:, :, 0].sum(axis=1))


def tt_dot(a: TtTensor, b: TtTensor) -> float:
    """Frobenius inner product by core-wise contraction."""
    _check_same_modes(a, b)
    a1, a2, a3 = a.cores
    b1, b2, b3 = b.cores
    m = a1[0].T @ b1[0]  # (ra1, rb1)
    m = np.einsum("ac,ajb,cjd->bd", m, a2, b2, optimize=True)
    return float(np.einsum("bd,bk,dk->", m, a3[:, :, 0], b3[:, :, 0]))


def tt_norm(a: TtTensor) -> float:
    g1, _, _ = _orthogonalize_rl(a)
    return float(np.linalg.norm(g1))


def tt_divide_by_rank1(a: TtTensor, u1, u2, u3) -> TtTensor:
    """Exact element-wise division by the rank-one tensor ``u1 x u2 x u3``."""
    divs = [np.asarray(x, dtype=np.float64).ravel() for x in (u1, u2, u3)]
    for m, (d, n) in enumerate(zip(divs, a.mode_sizes)):
        if d.size != n:
            raise ValueError(f"divisor {m} has length {d.size}, mode size is {n}")
        if not np.all(d > 0):
            raise ValueError(f"divisor {m} has nonpositive entries")
    return TtTensor([c / d.reshape(1, -1, 1) for c, d in zip(a.cores, divs)])


def tt_flip(a: TtTensor, axis: int) -> TtTensor:
    """Reverse index order along mode ``axis`` (0-based); exact, ranks kept."""
    cores = list(a.cores)
    cores[axis] = cores[axis][:, ::-1, :]
    return TtTensor(cores)
