"""Dense complex linear-algebra primitives.

Conventions used throughout the package:

* ``<u, v> = v^H u`` -- linear in the first slot, conjugate-linear in the second.
* An antilinear operator is stored as a matrix ``K`` and acts as ``v -> K @ conj(v)``.
* Random numbers come from a counter-based Philox stream; Gaussians are drawn with
  Box-Muller from its uniforms so that a seed pins every generated matrix.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import IllConditioned, NotHermitian, Singular

__all__ = [
    "TolerancePolicy",
    "DEFAULT_TOL",
    "Rng",
    "make_rng",
    "herm_eig",
    "lin_solve",
    "AntilinearOp",
    "antilinear_polar",
    "rand_hermitian",
    "rand_unitary",
    "cluster_values",
    "spectral_projections",
    "DEGENERACY_GAP",
    "null_space",
    "orthonormal_range",
    "psd_sqrt",
    "matrix_to_json",
    "matrix_from_json",
]


@dataclass(frozen=True)
class TolerancePolicy:
    eq_rel: float = 1e-8
    psd_rel: float = 1e-9
    cluster_abs: float = 1e-6
    cond_max: float = 1e10

    def __post_init__(self):
        for name in ("eq_rel", "psd_rel", "cluster_abs", "cond_max"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be strictly positive")
        if not self.eq_rel > self.psd_rel:
            raise ValueError("eq_rel must exceed psd_rel")

    def with_overrides(self, **kw) -> "TolerancePolicy":
        values = {k: getattr(self, k) for k in ("eq_rel", "psd_rel", "cluster_abs", "cond_max")}
        values.update({k: float(v) for k, v in kw.items() if v is not None})
        return TolerancePolicy(**values)

    def to_dict(self) -> dict:
        return {
            "eq_rel": self.eq_rel,
            "psd_rel": self.psd_rel,
            "cluster_abs": self.cluster_abs,
            "cond_max": self.cond_max,
        }


DEFAULT_TOL = TolerancePolicy()


class Rng:
    """Seeded random stream; ``spawn`` derives independent child streams."""

    def __init__(self, seed, key=()):
        self.seed = int(seed)
        self.key = tuple(int(k) for k in key)
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=self.key)
        self._gen = np.random.Generator(np.random.Philox(ss))

    def spawn(self, *key) -> "Rng":
        return Rng(self.seed, self.key + tuple(key))

    def uniform(self, size=None, low=0.0, high=1.0):
        return low + (high - low) * self._gen.random(size)

    def integers(self, low, high=None):
        return int(self._gen.integers(low, high))

    def choice(self, seq):
        return seq[self.integers(len(seq))]

    def normal(self, size=None):
        shape = () if size is None else (size,) if np.isscalar(size) else tuple(size)
        count = int(np.prod(shape, dtype=int))
        pairs = (count + 1) // 2
        u1 = 1.0 - self._gen.random(pairs)  # (0, 1]
        u2 = self._gen.random(pairs)
        r = np.sqrt(-2.0 * np.log(u1))
        z = np.concatenate([r * np.cos(2 * np.pi * u2), r * np.sin(2 * np.pi * u2)])[:count]
        return float(z[0]) if size is None else z.reshape(shape)

    def complex_normal(self, shape):
        shape = (shape,) if np.isscalar(shape) else tuple(shape)
        z = self.normal((2,) + shape)
        return (z[0] + 1j * z[1]) / np.sqrt(2.0)


def make_rng(seed, *key) -> Rng:
    return Rng(seed, key)


def _as_rng(seed) -> Rng:
    return seed if isinstance(seed, Rng) else Rng(seed)


def herm_eig(A, tol: TolerancePolicy = DEFAULT_TOL):
    """Eigen-decomposition of a Hermitian matrix, eigenvalues ascending."""
    A = np.asarray(A, dtype=complex)
    scale = np.linalg.norm(A)
    if np.linalg.norm(A - A.conj().T) > tol.eq_rel * scale:
        raise NotHermitian("matrix is not Hermitian within eq_rel")
    w, v = np.linalg.eigh((A + A.conj().T) / 2)
    return w, v


def lin_solve(A, b, tol: TolerancePolicy = DEFAULT_TOL):
    """Least-squares solve ``A x = b``; returns ``(x, residual)``.

    Raises IllConditioned when the singular-value ratio of a nonzero ``A`` exceeds
    ``cond_max``; the zero map is answered with ``x = 0``.
    """
    A = np.asarray(A, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if A.ndim != 2 or A.shape[0] < A.shape[1]:
        raise ValueError("lin_solve needs a tall or square matrix")
    s = np.linalg.svd(A, compute_uv=False)
    if s.size == 0 or s[0] == 0:
        x = np.zeros(A.shape[1:] + b.shape[1:], dtype=complex)
        return x, float(np.linalg.norm(b))
    if s[-1] == 0 or s[0] / s[-1] > tol.cond_max:
        raise IllConditioned(f"condition estimate {s[0] / max(s[-1], 1e-300):.3e} exceeds cond_max")
    x, *_ = np.linalg.lstsq(A, b, rcond=None)
    return x, float(np.linalg.norm(A @ x - b))


@dataclass(frozen=True, eq=False)
class AntilinearOp:
    """``v -> mat @ conj(v)``."""

    mat: np.ndarray

    @property
    def dim(self) -> int:
        return self.mat.shape[0]

    def __call__(self, v):
        return self.mat @ np.conj(v)

    def compose(self, other: "AntilinearOp") -> np.ndarray:
        """Linear matrix of ``self o other``."""
        return self.mat @ np.conj(other.mat)

    def after_linear(self, L) -> "AntilinearOp":
        """``self o L`` for a linear ``L``."""
        return AntilinearOp(self.mat @ np.conj(L))

    def adjoint(self) -> "AntilinearOp":
        # <S u, v> = <S^dag v, u>
        return AntilinearOp(self.mat.T.copy())

    def conjugate_linear(self, X) -> np.ndarray:
        """Linear matrix of ``self o X o self`` (e.g. ``J x J``)."""
        return self.mat @ np.conj(X) @ np.conj(self.mat)


def antilinear_polar(S: AntilinearOp, tol: TolerancePolicy = DEFAULT_TOL):
    """Split an invertible antilinear ``S`` as ``J Delta^(1/2)``.

    With ``S v = K conj(v)`` and ``K = U P`` the linear polar decomposition,
    ``J = U conj(.)`` and ``Delta = S^dag S = conj(K^H K)``.
    """
    K = np.asarray(S.mat, dtype=complex)
    W, s, Vh = np.linalg.svd(K)
    if s.size == 0 or s[-1] <= s[0] / tol.cond_max:
        raise Singular("antilinear operator is not invertible within cond_max")
    U = W @ Vh
    V = Vh.conj().T
    delta = np.conj((V * s**2) @ Vh)
    delta = (delta + delta.conj().T) / 2
    return AntilinearOp(U), delta


def rand_hermitian(dim: int, seed) -> np.ndarray:
    g = _as_rng(seed).complex_normal((dim, dim))
    return (g + g.conj().T) / 2


def rand_unitary(dim: int, seed) -> np.ndarray:
    """Haar unitary from the QR factorisation of a complex Gaussian matrix."""
    g = _as_rng(seed).complex_normal((dim, dim))
    q, r = np.linalg.qr(g)
    d = np.diagonal(r)
    phases = np.where(np.abs(d) > 0, d / np.abs(d), 1.0)
    return q * phases


def cluster_values(values, gap: float):
    """Group ascending real values into runs separated by more than ``gap``."""
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        return []
    groups = [[0]]
    for i in range(1, values.size):
        if values[i] - values[i - 1] > gap:
            groups.append([i])
        else:
            groups[-1].append(i)
    return [np.array(g) for g in groups]


# relative eigenvalue gap treated as exact degeneracy in functional calculus, where
# merging a wider cluster would shift f(A) by about the cluster width
DEGENERACY_GAP = 1e-12


def spectral_projections(A, tol: TolerancePolicy = DEFAULT_TOL, gap: float | None = None):
    """Clustered spectral decomposition ``A = sum c_k P_k`` of a Hermitian matrix.

    Returns a list of ``(c_k, P_k)`` with ascending ``c_k``.  Eigenvalues closer than
    ``gap`` (default ``tol.cluster_abs``, relative to the spectral radius) share a projection.
    """
    w, v = herm_eig(A, tol)
    scale = max(1.0, float(np.max(np.abs(w))) if w.size else 1.0)
    out = []
    for idx in cluster_values(w, (tol.cluster_abs if gap is None else gap) * scale):
        vecs = v[:, idx]
        out.append((float(np.mean(w[idx])), vecs @ vecs.conj().T))
    return out


def null_space(A, rel: float = 1e-10, atol: float = 0.0) -> np.ndarray:
    """Orthonormal basis (columns) of the kernel of ``A``.

    Singular values up to ``max(rel * s_max, atol)`` count as zero; pass ``atol`` when
    ``A`` may vanish up to rounding so that noise is not mistaken for rank.
    """
    A = np.asarray(A)
    n = A.shape[1]
    if A.shape[0] == 0:
        return np.eye(n, dtype=A.dtype)
    _, s, vh = np.linalg.svd(A, full_matrices=A.shape[0] < n)
    smax = s[0] if s.size else 0.0
    rank = int(np.sum(s > max(rel * smax, atol))) if smax > 0 else 0
    return vh[rank:].conj().T


def orthonormal_range(A, rel: float = 1e-10) -> np.ndarray:
    """Orthonormal basis (columns) of the column space of ``A``."""
    A = np.asarray(A)
    if A.size == 0:
        return np.zeros((A.shape[0], 0), dtype=complex)
    u, s, _ = np.linalg.svd(A, full_matrices=False)
    smax = s[0] if s.size else 0.0
    rank = int(np.sum(s > rel * smax)) if smax > 0 else 0
    return u[:, :rank]


def psd_sqrt(A) -> np.ndarray:
    w, v = np.linalg.eigh((A + A.conj().T) / 2)
    return (v * np.sqrt(np.clip(w, 0, None))) @ v.conj().T


def matrix_to_json(M) -> list:
    M = np.asarray(M, dtype=complex)
    if M.ndim == 1:
        # + 0.0 folds -0.0 into 0.0 so files are stable under a load/dump cycle
        return [[float(z.real) + 0.0, float(z.imag) + 0.0] for z in M]
    return [matrix_to_json(row) for row in M]


def matrix_from_json(data) -> np.ndarray:
    arr = np.asarray(data, dtype=float)
    if arr.shape[-1] != 2:
        raise ValueError("complex entries must be [re, im] pairs")
    out = np.empty(arr.shape[:-1], dtype=complex)
    out.real, out.imag = arr[..., 0], arr[..., 1]
    return out
