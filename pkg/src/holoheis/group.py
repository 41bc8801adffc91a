"""Group and Lie-algebra arithmetic for the step-2 nilpotent groups G = W x C.

W = C^k and the center C = C^d. The group law is

    (w1, c1) . (w2, c2) = (w1 + w2, c1 + c2 + (1/2) omega(w1, w2))

where omega(w, w')_m = w^T Omega_m w' for d exactly skew-symmetric complex
k x k matrices Omega_m. The Lie algebra shares the carrier (w, c); the
exponential chart is the identity, so GroupElement doubles as an algebra
element throughout.
"""

from __future__ import annotations

import hashlib
import json

import numpy as np

__all__ = [
    "GroupConfig",
    "GroupElement",
    "group_mul",
    "group_inv",
    "bracket",
    "omega_uniform_norm",
    "k_omega",
    "rho_sq",
]

SKEW_TOL = 1e-12


class GroupConfig:
    """Dimensions (k, d) and the skew form omega; the single source of structure.

    omega is stored as a (d, k, k) complex array of exactly skew matrices
    (validated on construction: zero diagonal, Omega^T = -Omega entry-wise).
    Instances are immutable; arrays are frozen.
    """

    __slots__ = ("k", "d", "omega")

    def __init__(self, k: int, d: int, omega) -> None:
        if k < 1 or d < 1:
            raise ValueError(f"config: need k >= 1 and d >= 1, got k={k}, d={d}")
        om = np.asarray(omega, dtype=complex)
        if om.shape != (d, k, k):
            raise ValueError(
                f"config: omega must have shape ({d},{k},{k}), got {om.shape}"
            )
        skew_err = float(np.max(np.abs(om + np.transpose(om, (0, 2, 1)))))
        if skew_err > SKEW_TOL:
            raise ValueError(
                f"config: omega matrices must be skew-symmetric, max |O + O^T| = {skew_err:g}"
            )
        om.flags.writeable = False
        object.__setattr__(self, "k", int(k))
        object.__setattr__(self, "d", int(d))
        object.__setattr__(self, "omega", om)

    def __setattr__(self, name, value):
        raise AttributeError("GroupConfig is immutable")

    @property
    def n(self) -> int:
        """Number of complex coordinates, k + d."""
        return self.k + self.d

    def omega_form(self, w1, w2):
        """omega(w1, w2) as a length-d complex vector; bilinear, antisymmetric."""
        w1 = np.asarray(w1, dtype=complex)
        w2 = np.asarray(w2, dtype=complex)
        return np.einsum("i,mij,j->m", w1, self.omega, w2)

    def omega_batch(self, W1, W2):
        """Row-wise omega for stacked inputs of shape (n, k); returns (n, d)."""
        return np.einsum("pi,mij,pj->pm", W1, self.omega, W2)

    def identity(self) -> "GroupElement":
        return GroupElement(self, np.zeros(self.k, complex), np.zeros(self.d, complex))

    def element(self, w, c) -> "GroupElement":
        return GroupElement(self, w, c)

    def basis_direction(self, index: int) -> "GroupElement":
        """Basis element of the algebra: [0,k) are (e_j, 0), [k, k+d) are (0, f_m)."""
        if not 0 <= index < self.n:
            raise ValueError(f"basis index {index} out of range [0, {self.n})")
        w = np.zeros(self.k, complex)
        c = np.zeros(self.d, complex)
        if index < self.k:
            w[index] = 1.0
        else:
            c[index - self.k] = 1.0
        return GroupElement(self, w, c)

    def basis(self) -> list["GroupElement"]:
        return [self.basis_direction(i) for i in range(self.n)]

    # -- serialization ------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "d": self.d,
            "omega": [
                [[[float(z.real), float(z.imag)] for z in row] for row in mat]
                for mat in self.omega
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "GroupConfig":
        for field in ("k", "d", "omega"):
            if field not in data:
                raise KeyError(f"config: {field} required")
        k, d = int(data["k"]), int(data["d"])
        raw = data["omega"]
        if len(raw) != d:
            raise ValueError(f"config: omega must list {d} matrices, got {len(raw)}")
        om = np.empty((d, k, k), dtype=complex)
        for m, mat in enumerate(raw):
            for i, row in enumerate(mat):
                for j, pair in enumerate(row):
                    re, im = pair
                    om[m, i, j] = complex(re, im)
        return cls(k, d, om)

    @property
    def config_hash(self) -> str:
        """Short stable hash of (k, d, omega); recorded in every CSV row."""
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:12]

    def __repr__(self) -> str:
        return f"GroupConfig(k={self.k}, d={self.d}, hash={self.config_hash})"


class GroupElement:
    """A point (w, c) of G, and equally an element of the Lie algebra."""

    __slots__ = ("config", "w", "c")

    def __init__(self, config: GroupConfig, w, c) -> None:
        w = np.array(w, dtype=complex).reshape(-1)
        c = np.array(c, dtype=complex).reshape(-1)
        if w.shape != (config.k,) or c.shape != (config.d,):
            raise ValueError(
                f"element dimensions ({w.shape[0]},{c.shape[0]}) do not match "
                f"config (k={config.k}, d={config.d})"
            )
        w.flags.writeable = False
        c.flags.writeable = False
        object.__setattr__(self, "config", config)
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "c", c)

    def __setattr__(self, name, value):
        raise AttributeError("GroupElement is immutable")

    def norm_sq(self) -> float:
        """Squared Hermitian norm ||w||^2 + ||c||^2 of the algebra element."""
        return float(np.sum(np.abs(self.w) ** 2) + np.sum(np.abs(self.c) ** 2))

    def norm(self) -> float:
        return float(np.sqrt(self.norm_sq()))

    def scale(self, t: complex) -> "GroupElement":
        return GroupElement(self.config, t * self.w, t * self.c)

    def add(self, other: "GroupElement") -> "GroupElement":
        _check_same_config(self, other)
        return GroupElement(self.config, self.w + other.w, self.c + other.c)

    def close_to(self, other: "GroupElement", tol: float = 1e-12) -> bool:
        return (
            float(np.max(np.abs(self.w - other.w), initial=0.0)) <= tol
            and float(np.max(np.abs(self.c - other.c), initial=0.0)) <= tol
        )

    def __repr__(self) -> str:
        return f"GroupElement(w={self.w.tolist()}, c={self.c.tolist()})"


def _check_same_config(a: GroupElement, b: GroupElement) -> None:
    ca, cb = a.config, b.config
    if ca is cb:
        return
    if ca.k != cb.k or ca.d != cb.d or not np.array_equal(ca.omega, cb.omega):
        raise ValueError("elements belong to different group configurations")


def group_mul(g1: GroupElement, g2: GroupElement) -> GroupElement:
    """(w1+w2, c1+c2+omega(w1,w2)/2)."""
    _check_same_config(g1, g2)
    cfg = g1.config
    return GroupElement(
        cfg,
        g1.w + g2.w,
        g1.c + g2.c + 0.5 * cfg.omega_form(g1.w, g2.w),
    )


def group_inv(g: GroupElement) -> GroupElement:
    """(-w, -c); the omega term vanishes since omega(w, w) = 0."""
    return GroupElement(g.config, -g.w, -g.c)


def bracket(h1: GroupElement, h2: GroupElement) -> GroupElement:
    """[(A1,a1), (A2,a2)] = (0, omega(A1, A2)); lands in the center."""
    _check_same_config(h1, h2)
    cfg = h1.config
    return GroupElement(cfg, np.zeros(cfg.k, complex), cfg.omega_form(h1.w, h2.w))


def rho_sq(g: GroupElement) -> float:
    """||w||^2 + ||c|| -- the center enters at the first power of its norm."""
    return float(np.sum(np.abs(g.w) ** 2) + np.sqrt(np.sum(np.abs(g.c) ** 2)))


def omega_uniform_norm(config: GroupConfig, restarts: int = 32, seed: int = 0) -> float:
    """sup{ ||omega(w1,w2)||_C : ||w1|| = ||w2|| = 1 }.

    For d = 1 this is the largest singular value of Omega_1, computed exactly.
    For d > 1 the bilinear maximization is nonconvex; alternating maximization
    over unit vectors from `restarts` random starts reports the best value
    found, a certified lower bound.
    """
    if config.d == 1:
        return float(np.linalg.svd(config.omega[0], compute_uv=False)[0])

    rng = np.random.Generator(np.random.Philox(key=np.array([seed, 0], np.uint64)))
    best = 0.0
    for _ in range(restarts):
        w1 = rng.standard_normal(config.k) + 1j * rng.standard_normal(config.k)
        w1 /= np.linalg.norm(w1)
        val = 0.0
        for _ in range(200):
            # fix w1: omega(w1, .) is the d x k matrix with rows (Omega_m^T w1)^T
            mat = np.einsum("i,mij->mj", w1, config.omega)
            _, s, vh = np.linalg.svd(mat)
            w2 = vh[0].conj()
            # fix w2 and flip roles (antisymmetry keeps the value)
            mat = np.einsum("j,mij->mi", w2, config.omega)
            _, s2, vh2 = np.linalg.svd(mat)
            w1_new = vh2[0].conj()
            new_val = float(s2[0])
            if abs(new_val - val) <= 1e-13 * max(1.0, new_val):
                val = new_val
                break
            w1, val = w1_new, new_val
        best = max(best, val)
    return best


def k_omega(config: GroupConfig, tol: float = 1e-12, max_iter: int = 100_000) -> float:
    """-lambda_max(M) with M = sum_m Omega_m^dagger Omega_m (Hermitian PSD).

    Power iteration to relative tolerance `tol`. Always <= 0; bounded below by
    minus the squared Hilbert-Schmidt norm of omega.
    """
    M = np.einsum("mji,mjl->il", config.omega.conj(), config.omega)
    if float(np.max(np.abs(M))) == 0.0:
        return 0.0
    # deterministic start with a nonzero overlap guard
    v = np.ones(config.k, complex) + 1j * np.linspace(0.1, 0.9, config.k)
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(max_iter):
        u = M @ v
        nu = np.linalg.norm(u)
        if nu == 0.0:
            # started in the kernel; perturb once
            v = v + 1e-3
            v /= np.linalg.norm(v)
            continue
        u /= nu
        lam_new = float(np.real(np.conj(u) @ (M @ u)))
        if abs(lam_new - lam) <= tol * max(abs(lam_new), 1.0):
            lam = lam_new
            break
        v, lam = u, lam_new
    return -lam
