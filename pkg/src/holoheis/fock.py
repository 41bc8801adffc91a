"""Graded tensor coefficients of holomorphic polynomials: the Taylor map built
from left-invariant derivatives at the identity, its inverse, the weighted
tensor norms, annihilation residuals for the commutation ideal, the grading
automorphism, and Fejer finite-rank truncation.

A FockTensor holds components alpha_0..alpha_N; alpha_n maps length-n tuples
over the k+d basis directions to complex numbers. The coefficient convention
is <alpha_n, h_1 x ... x h_n> = (lid_{h_1} ... lid_{h_n} f)(e) with lid_{h_n}
applied first (innermost).
"""

from __future__ import annotations

import math

from .group import GroupConfig
from .poly import CLEANUP_TOL, Polynomial, lid

__all__ = [
    "FockTensor",
    "taylor",
    "inverse_taylor",
    "fock_norm_sq",
    "fock_inner",
    "j0_residual",
    "grading_pullback",
    "fejer_truncate",
]


class FockTensor:
    """Graded family (alpha_0, ..., alpha_N) of sparse basis-indexed tensors."""

    __slots__ = ("config", "ranks", "maxrank")

    def __init__(self, config: GroupConfig, ranks: list[dict], maxrank: int | None = None):
        if maxrank is None:
            maxrank = len(ranks) - 1
        clean = []
        for n in range(maxrank + 1):
            component = ranks[n] if n < len(ranks) else {}
            kept = {}
            for key, coeff in component.items():
                if len(key) != n:
                    raise ValueError(f"rank-{n} component holds a length-{len(key)} tuple")
                if any(not 0 <= i < config.n for i in key):
                    raise ValueError(f"tuple {key} has indices outside [0, {config.n})")
                z = complex(coeff)
                if abs(z) > CLEANUP_TOL:
                    kept[key] = z
            clean.append(kept)
        self.config = config
        self.ranks = clean
        self.maxrank = maxrank

    @classmethod
    def zero(cls, config: GroupConfig, maxrank: int = 0) -> "FockTensor":
        return cls(config, [{} for _ in range(maxrank + 1)], maxrank)

    def entry(self, key: tuple) -> complex:
        n = len(key)
        if n > self.maxrank:
            return 0j
        return self.ranks[n].get(key, 0j)

    @property
    def scalar(self) -> complex:
        return self.ranks[0].get((), 0j)

    def rank_norm_sq(self, n: int) -> float:
        if n > self.maxrank:
            return 0.0
        return sum(abs(v) ** 2 for v in self.ranks[n].values())

    def nonzero_maxrank(self) -> int:
        for n in range(self.maxrank, -1, -1):
            if self.ranks[n]:
                return n
        return 0

    def scale(self, z: complex) -> "FockTensor":
        return FockTensor(
            self.config,
            [{k: z * v for k, v in comp.items()} for comp in self.ranks],
            self.maxrank,
        )

    def add(self, other: "FockTensor") -> "FockTensor":
        top = max(self.maxrank, other.maxrank)
        ranks = []
        for n in range(top + 1):
            merged = dict(self.ranks[n]) if n <= self.maxrank else {}
            if n <= other.maxrank:
                for key, v in other.ranks[n].items():
                    merged[key] = merged.get(key, 0j) + v
            ranks.append(merged)
        return FockTensor(self.config, ranks, top)

    def sub(self, other: "FockTensor") -> "FockTensor":
        return self.add(other.scale(-1.0))

    def close_to(self, other: "FockTensor", tol: float = 1e-10) -> bool:
        top = max(self.maxrank, other.maxrank)
        for n in range(top + 1):
            keys = set()
            if n <= self.maxrank:
                keys |= set(self.ranks[n])
            if n <= other.maxrank:
                keys |= set(other.ranks[n])
            for key in keys:
                if abs(self.entry(key) - other.entry(key)) > tol:
                    return False
        return True

    def to_records(self) -> list:
        """Flat serialization: (rank, index list, [re, im]) per stored entry."""
        records = []
        for n, component in enumerate(self.ranks):
            for key in sorted(component):
                z = component[key]
                records.append((n, list(key), [z.real, z.imag]))
        return records

    @classmethod
    def from_records(cls, config: GroupConfig, records) -> "FockTensor":
        maxrank = max((int(r[0]) for r in records), default=0)
        ranks: list[dict] = [{} for _ in range(maxrank + 1)]
        for rank, key, (re, im) in records:
            ranks[int(rank)][tuple(int(i) for i in key)] = complex(re, im)
        return cls(config, ranks, maxrank)

    def __repr__(self) -> str:
        sizes = ",".join(str(len(c)) for c in self.ranks)
        return f"FockTensor(maxrank={self.maxrank}, entries=[{sizes}])"


def taylor(f: Polynomial, maxrank: int | None = None) -> FockTensor:
    """All left derivatives of f at the identity, graded by rank.

    The rank-n coefficient at tuple (i_1, ..., i_n) is the iterated derivative
    along basis directions with direction i_n applied first. Requires f
    holomorphic and maxrank at least the graded degree of f (the tensor
    vanishes beyond it).
    """
    if not f.is_holomorphic():
        raise ValueError("taylor is defined for holomorphic polynomials only")
    cfg = f.config
    degree = f.graded_degree()
    if maxrank is None:
        maxrank = degree
    if maxrank < degree:
        raise ValueError(
            f"maxrank {maxrank} below the graded degree {degree}; tail would be lost"
        )
    basis = cfg.basis()
    ranks: list[dict] = [{} for _ in range(maxrank + 1)]
    if abs(f.constant_term()) > CLEANUP_TOL:
        ranks[0][()] = f.constant_term()
    chains: dict[tuple, Polynomial] = {(): f}
    for n in range(1, maxrank + 1):
        extended: dict[tuple, Polynomial] = {}
        for key, chain in chains.items():
            for j, direction in enumerate(basis):
                derived = lid(chain, direction)
                if derived.is_zero():
                    continue
                new_key = (j,) + key
                extended[new_key] = derived
                value = derived.constant_term()
                if abs(value) > CLEANUP_TOL:
                    ranks[n][new_key] = value
        chains = extended
        if not chains:
            break
    return FockTensor(cfg, ranks, maxrank)


def inverse_taylor(alpha: FockTensor) -> Polynomial:
    """Rebuild the polynomial g -> sum_n (1/n!) <alpha_n, g^(x n)>.

    Each index tuple contributes its coefficient/n! times the monomial whose
    exponents count the tuple's indices (coordinates of g expand the tensor
    powers; the ordering washes out because coordinates commute).
    """
    cfg = alpha.config
    nv = 2 * cfg.n
    terms: dict[tuple, complex] = {}
    for n, component in enumerate(alpha.ranks):
        if not component:
            continue
        weight = 1.0 / math.factorial(n)
        for key, coeff in component.items():
            exps = [0] * nv
            for index in key:
                exps[index] += 1
            ek = tuple(exps)
            terms[ek] = terms.get(ek, 0j) + coeff * weight
    return Polynomial(cfg, terms)


def fock_norm_sq(alpha: FockTensor, T: float) -> float:
    """sum_n (T^n / n!) * sum_tuples |<alpha_n, .>|^2."""
    if T <= 0:
        raise ValueError(f"fock_norm_sq requires T > 0, got {T}")
    total = 0.0
    for n, component in enumerate(alpha.ranks):
        if component:
            total += (T**n / math.factorial(n)) * sum(
                abs(v) ** 2 for v in component.values()
            )
    return total


def fock_inner(alpha: FockTensor, beta: FockTensor, T: float) -> complex:
    """sum_n (T^n / n!) * sum_tuples alpha_n conj(beta_n); matches fock_norm_sq
    on the diagonal."""
    if T <= 0:
        raise ValueError(f"fock_inner requires T > 0, got {T}")
    total = 0j
    top = min(alpha.maxrank, beta.maxrank)
    for n in range(top + 1):
        a, b = alpha.ranks[n], beta.ranks[n]
        if not a or not b:
            continue
        small, big, conj_small = (a, b, False) if len(a) <= len(b) else (b, a, True)
        acc = 0j
        for key, v in small.items():
            other = big.get(key)
            if other is not None:
                acc += (v.conjugate() * other) if conj_small else (v * other.conjugate())
        total += (T**n / math.factorial(n)) * acc
    return total


def j0_residual(alpha: FockTensor) -> float:
    """Largest violation of the commutation-ideal annihilation conditions.

    Checks |<alpha, u x (h x k - k x h - [h,k]) x v>| over all basis words u, v
    and basis pairs (h, k) with |u| + |v| + 2 <= maxrank. The bracket term has
    one factor less, so the pairing mixes adjacent ranks. Zero (within
    tolerance) certifies annihilation up to the stored rank, nothing beyond.

    Enumeration is support-driven: a candidate (u, h, k, v) only matters if at
    least one of the three entries it reads is stored.
    """
    cfg = alpha.config
    k = cfg.k
    omega = cfg.omega
    N = alpha.maxrank

    candidates: set[tuple] = set()
    # entries at rank p+q+2 seen through the h x k or k x h slot
    for r in range(2, N + 1):
        for key in alpha.ranks[r]:
            for p in range(r - 1):
                candidates.add((key[:p], key[p], key[p + 1], key[p + 2:]))
    # entries at rank p+q+1 seen through the bracket slot at a central index
    for r in range(1, N):
        for key in alpha.ranks[r]:
            for p in range(r):
                if key[p] >= k:
                    m = key[p] - k
                    u, v = key[:p], key[p + 1:]
                    rows, cols = omega[m].nonzero()
                    for h, kk in zip(rows, cols):
                        candidates.add((u, int(h), int(kk), v))

    worst = 0.0
    for u, h, kk, v in candidates:
        if len(u) + len(v) + 2 > N:
            continue
        value = alpha.entry(u + (h, kk) + v) - alpha.entry(u + (kk, h) + v)
        if h < k and kk < k:
            for m in range(cfg.d):
                coeff = omega[m, h, kk]
                if coeff != 0:
                    value -= coeff * alpha.entry(u + (k + m,) + v)
        worst = max(worst, abs(value))
    return worst


def _central_count(key: tuple, k: int) -> int:
    return sum(1 for i in key if i >= k)


def grading_pullback(alpha: FockTensor, theta: float) -> FockTensor:
    """Pull back along the grading automorphism (A, a) -> (e^{i theta} A,
    e^{2 i theta} a): a rank-n entry with j central indices picks up the
    phase e^{i theta (n + j)}. Unimodular weights, so every Fock norm is
    preserved."""
    k = alpha.config.k
    ranks = []
    for n, component in enumerate(alpha.ranks):
        ranks.append(
            {
                key: coeff * complex(math.cos(theta * (n + j)), math.sin(theta * (n + j)))
                for key, coeff in component.items()
                for j in (_central_count(key, k),)
            }
        )
    return FockTensor(alpha.config, ranks, alpha.maxrank)


def fejer_truncate(alpha: FockTensor, n: int) -> FockTensor:
    """Average the grading pullbacks against the order-n Fejer kernel.

    Exact Fourier weights are used instead of quadrature: the homogeneous
    component of degree l (= rank + number of central indices) is scaled by
    max(0, 1 - l/n). Every rank above n is annihilated since degree >= rank,
    and the degree-0 part is untouched (the kernel integrates to 1).
    """
    if n < 1:
        raise ValueError(f"fejer_truncate requires n >= 1, got {n}")
    k = alpha.config.k
    ranks = []
    for r, component in enumerate(alpha.ranks):
        kept = {}
        for key, coeff in component.items():
            degree = r + _central_count(key, k)
            weight = max(0.0, 1.0 - degree / n)
            if weight > 0.0:
                kept[key] = coeff * weight
        ranks.append(kept)
    return FockTensor(alpha.config, ranks, alpha.maxrank)
