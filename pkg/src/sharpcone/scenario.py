"""Scenario files: an algebra in standard form, optional second algebra, named data.

Generated scenarios are deterministic in ``(profile, seed)``.  Embedding scenarios are
built so that the cone inclusion holds by construction and carry their ground truth.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .algebra import Algebra, OperatorSubspace, double_commutant
from .errors import InvalidProfile, NotCyclicSeparating, ScenarioError, ShapeMismatch
from .linalg import DEFAULT_TOL, TolerancePolicy, make_rng, matrix_from_json, matrix_to_json, psd_sqrt, rand_unitary
from .modular import ModularData, standard_form

PROFILES = ("abelian", "single-factor", "multi-block", "tracial-mix", "recovery-suite", "embedding-suite")
_PROFILE_KEY = {name: i for i, name in enumerate(PROFILES)}


@dataclass(eq=False)
class Scenario:
    algebra: Algebra
    xi0: np.ndarray
    seed: int = 0
    profile: str = "custom"
    N: list | None = None  # operators on H
    N_mode: str = "span"  # "span": already a *-algebra; "generate": take the double commutant
    operators: dict = field(default_factory=dict)
    vectors: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=dict)
    ground_truth: dict = field(default_factory=dict)

    @property
    def tol(self) -> TolerancePolicy:
        return DEFAULT_TOL.with_overrides(**self.tolerances)

    def modular(self, tol: TolerancePolicy | None = None) -> ModularData:
        return standard_form(self.algebra, self.xi0, tol or self.tol)

    def N_space(self, tol: TolerancePolicy | None = None) -> OperatorSubspace | None:
        if self.N is None:
            return None
        if self.N_mode == "generate":
            return double_commutant(self.N, tol or self.tol, self.seed)
        return OperatorSubspace.span(self.N, self.algebra.dim, is_algebra=True, is_selfadjoint=True)

    def truth(self, key):
        return self.ground_truth.get(key)

    # serialization

    def to_dict(self) -> dict:
        A = self.algebra
        out = {
            "profile": self.profile,
            "seed": self.seed,
            "algebra": A.to_json(),
            "xi0": A.vector_to_json(self.xi0),
        }
        if self.N is not None:
            out["N"] = {"mode": self.N_mode, "operators": [matrix_to_json(x) for x in self.N]}
        out["operators"] = {k: _encode(v) for k, v in self.operators.items()}
        out["vectors"] = {k: A.vector_to_json(v) for k, v in self.vectors.items()}
        out["tolerances"] = dict(self.tolerances)
        out["ground_truth"] = {k: _encode(v) for k, v in self.ground_truth.items()}
        return out

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=1) + "\n"

    @classmethod
    def from_dict(cls, data: dict, validate: bool = True) -> "Scenario":
        try:
            A = Algebra.from_json(data["algebra"])
            xi0 = A.vector_from_json(data["xi0"])
            N = data.get("N")
            sc = cls(
                algebra=A,
                xi0=xi0,
                seed=int(data.get("seed", 0)),
                profile=data.get("profile", "custom"),
                N=[matrix_from_json(x) for x in N["operators"]] if N else None,
                N_mode=N.get("mode", "span") if N else "span",
                operators={k: _decode(v) for k, v in data.get("operators", {}).items()},
                vectors={k: A.vector_from_json(v) for k, v in data.get("vectors", {}).items()},
                tolerances=dict(data.get("tolerances", {})),
                ground_truth={k: _decode(v) for k, v in data.get("ground_truth", {}).items()},
            )
        except (KeyError, TypeError, ValueError, ShapeMismatch) as exc:
            raise ScenarioError(f"malformed scenario: {exc}") from exc
        if validate:
            sc.validate()
        return sc

    @classmethod
    def loads(cls, text: str, validate: bool = True) -> "Scenario":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ScenarioError(f"scenario is not valid JSON: {exc}") from exc
        return cls.from_dict(data, validate)

    def validate(self):
        d = self.algebra.dim
        for name, op in self.operators.items():
            if isinstance(op, np.ndarray) and op.shape != (d, d):
                raise ScenarioError(f"operator {name!r} must be {d}x{d}")
        if self.N is not None and any(x.shape != (d, d) for x in self.N):
            raise ScenarioError("operators of N must act on H")
        try:
            self.tol
        except ValueError as exc:
            raise ScenarioError(str(exc)) from exc
        try:
            self.modular()
        except NotCyclicSeparating as exc:
            raise ScenarioError(f"xi0 is not cyclic and separating: {exc}") from exc


def _encode(v):
    if isinstance(v, np.ndarray):
        return {"matrix": matrix_to_json(v)}
    return v


def _decode(v):
    if isinstance(v, dict) and set(v) == {"matrix"}:
        return matrix_from_json(v["matrix"])
    return v


def resolve_operator(sc: Scenario, spec, md: ModularData | None = None) -> np.ndarray:
    """An operator on H from a matrix, a scenario name, or a constructor tag.

    Tags: ``{"left_mult": blocks}`` embeds an element of M, ``{"right_mult": blocks}``
    gives ``J x J`` for that element, ``{"rank_one_xi0": true}`` projects onto ``xi0``.
    """
    A = sc.algebra
    if isinstance(spec, str):
        if spec in sc.operators:
            return resolve_operator(sc, sc.operators[spec], md)
        try:
            spec = json.loads(spec)
        except json.JSONDecodeError as exc:
            raise ScenarioError(f"unknown operator {spec!r}") from exc
    if isinstance(spec, np.ndarray):
        return spec
    if isinstance(spec, dict):
        if "left_mult" in spec:
            return A.embed([matrix_from_json(b) for b in spec["left_mult"]])
        if "right_mult" in spec:
            md = md or sc.modular()
            return md.conjugate(A.embed([matrix_from_json(b) for b in spec["right_mult"]]))
        if spec.get("rank_one_xi0"):
            v = sc.xi0 / np.linalg.norm(sc.xi0)
            return np.outer(v, v.conj())
        if "matrix" in spec:
            return matrix_from_json(spec["matrix"])
        raise ScenarioError(f"unknown operator tag {sorted(spec)}")
    if isinstance(spec, list):
        M = matrix_from_json(spec)
        if M.shape != (A.dim, A.dim):
            raise ScenarioError(f"operator must be {A.dim}x{A.dim}")
        return M
    raise ScenarioError(f"cannot interpret operator {spec!r}")


def resolve_vector(sc: Scenario, spec) -> np.ndarray:
    if isinstance(spec, str):
        if spec == "xi0":
            return sc.xi0
        if spec in sc.vectors:
            return sc.vectors[spec]
        try:
            spec = json.loads(spec)
        except json.JSONDecodeError as exc:
            raise ScenarioError(f"unknown vector {spec!r}") from exc
    try:
        return sc.algebra.vector_from_json(spec)
    except (ShapeMismatch, ValueError, TypeError) as exc:
        raise ScenarioError(f"bad vector: {exc}") from exc


# generators


def random_density(n: int, rng) -> np.ndarray:
    """Full-rank density matrix with spectrum in a moderate range."""
    lam = rng.uniform(n, 0.2, 1.0)
    U = rand_unitary(n, rng)
    rho = (U * lam) @ U.conj().T
    rho = (rho + rho.conj().T) / 2
    return rho / np.trace(rho).real


def _weights(k, rng):
    w = rng.uniform(k, 0.5, 1.5)
    return w / w.sum()


def _block_sizes(rng, count, choices, cap=14):
    sizes = []
    for _ in range(count):
        n = int(rng.choice(choices))
        if sum(s * s for s in sizes) + n * n <= cap:
            sizes.append(n)
    return sizes or [1]


def _mixture(rng, seed):
    """N = (left action on q-blocks) + (right action on tracial q-perp blocks)."""
    count = rng.integers(2, 4)
    sizes = _block_sizes(rng, count, [1, 2, 3])
    if all(n == 1 for n in sizes):
        sizes[0] = 2
    sides = [bool(rng.integers(0, 2)) for _ in sizes]  # True: homomorphic side
    for i, n in enumerate(sizes):
        if n == 1:
            sides[i] = True  # abelian summands go to the homomorphic side
    if all(sides):
        i = next(i for i, n in enumerate(sizes) if n > 1)
        sides[i] = False
    A = Algebra(tuple((n, n) for n in sizes))
    w = _weights(len(sizes), rng)
    blocks, N = [], []
    d = A.dim
    e = np.zeros((d, d), dtype=complex)
    for k, (n, left) in enumerate(zip(sizes, sides)):
        if left:
            blocks.append(np.sqrt(w[k]) * psd_sqrt(random_density(n, rng)))
            e = e + A.embed(A.block_identity(k))
        else:
            blocks.append(np.sqrt(w[k] / n) * rand_unitary(n, rng))
        for i in range(n):
            for j in range(n):
                y = [np.zeros((m, m), dtype=complex) for m in sizes]
                y[k][i, j] = 1.0
                N.append(A.embed(y) if left else A.embed_right(y))
    xi0 = A.vector(blocks)
    truth = {"variant": "mixture", "case": 1, "cyclic": True, "g": e, "e": e, "f": np.eye(d) - e}
    return A, xi0, N, truth


def _twin(rng, seed):
    """N = {x on block 1, right action of x^T on a tracial block 2}: both parts on one summand."""
    n = int(rng.choice([2, 3]))
    A = Algebra(((n, n), (n, n)))
    w = _weights(2, rng)
    xi0 = A.vector([np.sqrt(w[0]) * psd_sqrt(random_density(n, rng)), np.sqrt(w[1] / n) * rand_unitary(n, rng)])
    N = []
    for i in range(n):
        for j in range(n):
            x = np.zeros((n, n), dtype=complex)
            x[i, j] = 1.0
            N.append(A.embed([x, np.zeros((n, n))]) + A.embed_right([np.zeros((n, n)), x.T]))
    d = A.dim
    g = A.embed(A.block_identity(0))
    truth = {"variant": "twin", "case": 2, "cyclic": False, "g": g, "e": np.eye(d, dtype=complex), "f": np.eye(d, dtype=complex)}
    return A, xi0, N, truth


def _kernel(rng, seed):
    """Diagonal left action on M_n plus the projection onto off-diagonal entries, which kills xi0."""
    n = int(rng.choice([2, 3]))
    A = Algebra(((n, n),))
    lam = rng.uniform(n, 0.2, 1.0)
    xi0 = A.vector([np.diag(np.sqrt(lam / lam.sum())).astype(complex)])
    d = A.dim
    off = np.diag([0.0 if i == j else 1.0 for i in range(n) for j in range(n)]).astype(complex)
    N = []
    for i in range(n):
        x = np.zeros((n, n), dtype=complex)
        x[i, i] = 1.0
        row = A.embed([x])
        N.extend([row @ off, row @ (np.eye(d) - off)])
    truth = {"variant": "kernel", "case": 1, "cyclic": False, "g": np.eye(d, dtype=complex),
             "e": np.eye(d) - off, "f": np.zeros((d, d), dtype=complex)}
    return A, xi0, N, truth


def _recovery(A: Algebra, rng, units):
    """A projection ``p = q e + J q-perp e J`` with ``q-perp e`` commuting with the state."""
    q_blocks = [bool(rng.integers(0, 2)) for _ in A.blocks]
    e_blocks = []
    for k, (n, _) in enumerate(A.blocks):
        if q_blocks[k]:
            r = rng.integers(0, n + 1)
            V = rand_unitary(n, rng)
            e_blocks.append(V[:, :r] @ V[:, :r].conj().T)
        else:
            mask = np.array([float(rng.integers(0, 2)) for _ in range(n)])
            e_blocks.append((units[k] * mask) @ units[k].conj().T)
    q = A.embed([np.eye(n) if t else np.zeros((n, n)) for (n, _), t in zip(A.blocks, q_blocks)])
    e = A.embed(e_blocks)
    return e, q


def generate(profile: str, seed: int) -> Scenario:
    if profile not in _PROFILE_KEY:
        raise InvalidProfile(f"unknown profile {profile!r}; choose from {', '.join(PROFILES)}")
    seed = int(seed)
    rng = make_rng(seed, 0x5CE, _PROFILE_KEY[profile])
    truth: dict = {}
    operators: dict = {}
    N = None

    if profile == "abelian":
        k = rng.integers(2, 5)
        A = Algebra(tuple((1, 1) for _ in range(k)))
        xi0 = A.vector([np.array([[np.sqrt(x)]], dtype=complex) for x in _weights(k, rng)])
        truth["positive_blocks"] = True
    elif profile == "single-factor":
        A = Algebra(((2, 2),))
        xi0 = A.vector([psd_sqrt(random_density(2, rng))])
        truth["positive_blocks"] = True
    elif profile == "multi-block":
        sizes = _block_sizes(rng, rng.integers(2, 4), [1, 2, 3])
        A = Algebra(tuple((n, n) for n in sizes))
        w = _weights(len(sizes), rng)
        positive = seed % 2 == 0
        blocks = []
        for k, n in enumerate(sizes):
            b = np.sqrt(w[k]) * psd_sqrt(random_density(n, rng))
            if not positive:
                b = b @ rand_unitary(n, rng)
            blocks.append(b)
        xi0 = A.vector(blocks)
        truth["positive_blocks"] = positive
    elif profile == "tracial-mix":
        A, xi0, N, truth = _mixture(rng, seed)
    elif profile == "embedding-suite":
        A, xi0, N, truth = (_mixture, _twin, _kernel)[seed % 3](rng, seed)
    else:  # recovery-suite
        sizes = _block_sizes(rng, rng.integers(1, 4), [1, 2, 3], cap=9)
        if sizes == [1]:
            sizes = [2]
        A = Algebra(tuple((n, n) for n in sizes))
        w = _weights(len(sizes), rng)
        units, rhos = [], []
        for n in sizes:
            U = rand_unitary(n, rng)
            lam = np.sort(rng.uniform(n, 0.2, 1.0))
            units.append(U)
            rhos.append((U * (lam / lam.sum())) @ U.conj().T)
        xi0 = A.vector([np.sqrt(w[k]) * psd_sqrt(r) for k, r in enumerate(rhos)])
        e, q = _recovery(A, rng, units)
        truth.update(e=e, q=q, positive_blocks=True)
        d = A.dim
        central = A.embed([np.eye(n) * float(rng.integers(0, 2)) for n in sizes])
        r = rng.integers(1, d)
        V = rand_unitary(d, rng)
        operators.update(central=central, noncentral=V[:, :r] @ V[:, :r].conj().T)
        truth["central_e"] = central

    sc = Scenario(A, xi0, seed=seed, profile=profile, N=N, operators=operators, ground_truth=truth)
    if profile == "recovery-suite":
        md = sc.modular()
        e, q = truth["e"], truth["q"]
        p = q @ e + md.conjugate((np.eye(A.dim) - q) @ e)
        sc.operators["p"] = (p + p.conj().T) / 2
        rank = int(round(np.trace(p).real))
        if 0 < rank < A.dim:
            H = rng.complex_normal((A.dim, A.dim))
            w_, v_ = np.linalg.eigh((H + H.conj().T) / 2)
            rot = (v_ * np.exp(1e-2j * w_)) @ v_.conj().T
            sc.operators["p_perturbed"] = rot @ sc.operators["p"] @ rot.conj().T
        else:
            # rotating 0 or I changes nothing; use a Haar-random projection instead
            V = rand_unitary(A.dim, rng)
            r = rng.integers(1, A.dim)
            sc.operators["p_perturbed"] = V[:, :r] @ V[:, :r].conj().T
    return sc


__all__ = ["PROFILES", "Scenario", "generate", "random_density", "resolve_operator", "resolve_vector"]
