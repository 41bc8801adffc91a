"""Sparse polynomial algebra in (w, c, wbar, cbar), left-invariant derivatives,
the second-order operator L, and the exact heat-semigroup expectation.

Variables are indexed 0..2(k+d)-1 in blocks: w_1..w_k, c_1..c_d, then the
conjugate blocks wbar_1..wbar_k, cbar_1..cbar_d. A polynomial is holomorphic
iff both conjugate blocks are untouched. Conjugate variables exist so that
|f|^2 and L|f|^2 live in the same ring as f.

The graded degree weights w and wbar by 1 and c and cbar by 2; L strictly
lowers it by 2, which is what makes the heat expectation a finite sum.
"""

from __future__ import annotations

import math
import re

import numpy as np

from .group import GroupConfig, GroupElement

__all__ = [
    "Polynomial",
    "parse_poly",
    "lid",
    "apply_L",
    "heat_expectation",
    "DEGREE_CAP",
    "CLEANUP_TOL",
]

# Graded-degree cap: ring operations reject results beyond this, bounding the
# term explosion of repeated L applications.
DEGREE_CAP = 16

# Coefficients at or below this magnitude are dropped after arithmetic; every
# identity asserted downstream uses tolerances at least four orders looser.
CLEANUP_TOL = 1e-14


class Polynomial:
    """Sparse map from exponent vectors (tuples of length 2(k+d)) to complex."""

    __slots__ = ("config", "terms")

    def __init__(self, config: GroupConfig, terms: dict | None = None) -> None:
        clean = {}
        if terms:
            for key, coeff in terms.items():
                z = complex(coeff)
                if abs(z) > CLEANUP_TOL:
                    clean[key] = z
        self.config = config
        self.terms = clean
        if clean:
            deg = self.graded_degree()
            if deg > DEGREE_CAP:
                raise ValueError(
                    f"polynomial graded degree {deg} exceeds cap {DEGREE_CAP}"
                )

    # -- constructors ---------------------------------------------------------

    @classmethod
    def zero(cls, config: GroupConfig) -> "Polynomial":
        return cls(config, {})

    @classmethod
    def constant(cls, config: GroupConfig, value: complex) -> "Polynomial":
        return cls(config, {cls._zero_key(config): complex(value)})

    @classmethod
    def coordinate(cls, config: GroupConfig, index: int) -> "Polynomial":
        """Variable by flat index in [0, 2(k+d))."""
        nv = 2 * config.n
        if not 0 <= index < nv:
            raise ValueError(f"variable index {index} out of range [0, {nv})")
        key = [0] * nv
        key[index] = 1
        return cls(config, {tuple(key): 1.0 + 0j})

    @classmethod
    def w(cls, config: GroupConfig, j: int) -> "Polynomial":
        """w_j, 1-based."""
        return cls.coordinate(config, j - 1)

    @classmethod
    def c(cls, config: GroupConfig, m: int) -> "Polynomial":
        """c_m, 1-based."""
        return cls.coordinate(config, config.k + m - 1)

    @staticmethod
    def _zero_key(config: GroupConfig) -> tuple:
        return (0,) * (2 * config.n)

    # -- structure ------------------------------------------------------------

    def is_zero(self) -> bool:
        return not self.terms

    def is_holomorphic(self) -> bool:
        n = self.config.n
        return all(not any(key[n:]) for key in self.terms)

    def constant_term(self) -> complex:
        return self.terms.get(self._zero_key(self.config), 0j)

    def degree(self) -> int:
        if not self.terms:
            return 0
        return max(sum(key) for key in self.terms)

    def graded_degree(self) -> int:
        """Total degree with w, wbar weighted 1 and c, cbar weighted 2."""
        if not self.terms:
            return 0
        k, d = self.config.k, self.config.d
        weights = ([1] * k + [2] * d) * 2
        return max(sum(e * wt for e, wt in zip(key, weights)) for key in self.terms)

    # -- ring operations --------------------------------------------------------

    def _require_same_config(self, other: "Polynomial") -> None:
        if self.config is not other.config and (
            self.config.k != other.config.k
            or self.config.d != other.config.d
            or not np.array_equal(self.config.omega, other.config.omega)
        ):
            raise ValueError("polynomials belong to different group configurations")

    def __add__(self, other):
        if isinstance(other, (int, float, complex)):
            other = Polynomial.constant(self.config, other)
        self._require_same_config(other)
        out = dict(self.terms)
        for key, coeff in other.terms.items():
            out[key] = out.get(key, 0j) + coeff
        return Polynomial(self.config, out)

    __radd__ = __add__

    def __neg__(self):
        return Polynomial(self.config, {k: -v for k, v in self.terms.items()})

    def __sub__(self, other):
        if isinstance(other, (int, float, complex)):
            other = Polynomial.constant(self.config, other)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, float, complex)):
            z = complex(other)
            return Polynomial(self.config, {k: z * v for k, v in self.terms.items()})
        self._require_same_config(other)
        out: dict = {}
        for k1, v1 in self.terms.items():
            for k2, v2 in other.terms.items():
                key = tuple(a + b for a, b in zip(k1, k2))
                out[key] = out.get(key, 0j) + v1 * v2
        return Polynomial(self.config, out)

    __rmul__ = __mul__

    def __pow__(self, exponent: int):
        if exponent < 0:
            raise ValueError("negative powers are not polynomials")
        result = Polynomial.constant(self.config, 1.0)
        base = self
        e = exponent
        while e:
            if e & 1:
                result = result * base
            base_needed = e > 1
            if base_needed:
                base = base * base
            e >>= 1
        return result

    def conj(self) -> "Polynomial":
        """Complex conjugate: swaps each block with its conjugate block."""
        n = self.config.n
        out = {}
        for key, coeff in self.terms.items():
            out[key[n:] + key[:n]] = coeff.conjugate()
        return Polynomial(self.config, out)

    def abs_sq(self) -> "Polynomial":
        """|f|^2 = f * conj(f) as a polynomial in all four blocks."""
        return self * self.conj()

    def partial(self, index: int) -> "Polynomial":
        """Formal partial derivative with respect to flat variable `index`."""
        out = {}
        for key, coeff in self.terms.items():
            e = key[index]
            if e:
                new = list(key)
                new[index] = e - 1
                out[tuple(new)] = out.get(tuple(new), 0j) + e * coeff
        return Polynomial(self.config, out)

    # -- evaluation --------------------------------------------------------------

    def eval(self, g: GroupElement) -> complex:
        coords = np.concatenate([g.w, g.c])
        values = np.concatenate([coords, coords.conj()])
        total = 0j
        for key, coeff in self.terms.items():
            term = coeff
            for e, z in zip(key, values):
                if e:
                    term *= z**e
            total += term
        return total

    def eval_batch(self, W: np.ndarray, C: np.ndarray) -> np.ndarray:
        """Evaluate on stacked points: W is (n, k), C is (n, d); returns (n,)."""
        Z = np.concatenate([W, C], axis=1)
        values = np.concatenate([Z, Z.conj()], axis=1)
        out = np.zeros(len(Z), dtype=complex)
        for key, coeff in self.terms.items():
            term = np.full(len(Z), coeff)
            for idx, e in enumerate(key):
                if e:
                    term = term * values[:, idx] ** e
            out += term
        return out

    # -- formatting ---------------------------------------------------------------

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        k, d, n = self.config.k, self.config.d, self.config.n
        names = (
            [f"w{j + 1}" for j in range(k)]
            + [f"c{m + 1}" for m in range(d)]
            + [f"wbar{j + 1}" for j in range(k)]
            + [f"cbar{m + 1}" for m in range(d)]
        )
        parts = []
        for key in sorted(self.terms, key=lambda t: (sum(t), t)):
            coeff = self.terms[key]
            factors = []
            for idx, e in enumerate(key):
                if e == 1:
                    factors.append(names[idx])
                elif e > 1:
                    factors.append(f"{names[idx]}^{e}")
            if coeff.imag == 0:
                cs = f"{coeff.real:g}"
            elif coeff.real == 0:
                cs = f"{coeff.imag:g}i"
            else:
                cs = f"({coeff.real:g}{coeff.imag:+g}i)"
            if factors and cs == "1":
                parts.append(" * ".join(factors))
            elif factors and cs == "-1":
                parts.append("-" + " * ".join(factors))
            else:
                parts.append(" * ".join([cs] + factors))
        return " + ".join(parts).replace("+ -", "- ")

    __repr__ = __str__

    def __eq__(self, other) -> bool:
        if not isinstance(other, Polynomial):
            return NotImplemented
        return self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def close_to(self, other: "Polynomial", tol: float = 1e-10) -> bool:
        keys = set(self.terms) | set(other.terms)
        return all(
            abs(self.terms.get(k, 0j) - other.terms.get(k, 0j)) <= tol for k in keys
        )


_TOKEN = re.compile(
    r"\s*(?:(?P<cplx>\([^()]*\))|(?P<num>\d+(?:\.\d*)?(?:[eE][+-]?\d+)?)"
    r"|(?P<var>(?:w|c)(?:bar)?\d+)|(?P<imag>i\b)|(?P<op>[*^+\-]))"
)


def parse_poly(config: GroupConfig, text: str) -> Polynomial:
    """Parse the literal syntax, e.g. ``(1.5-2i) * w1^2 * cbar1 + 3 * c1``.

    Variables: w<j>, c<m>, wbar<j>, cbar<m> (1-based). Coefficients: bare
    reals, the token ``i``, or a parenthesized complex like ``(1.5-2i)``.
    """
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            if text[pos:].strip():
                raise ValueError(f"polynomial syntax error at {text[pos:]!r}")
            break
        tokens.append(m)
        pos = m.end()

    k, d, n = config.k, config.d, config.n

    def var_index(name: str) -> int:
        bar = "bar" in name
        base = name[0]
        num = int(name.replace("bar", "")[1:])
        if base == "w":
            if not 1 <= num <= k:
                raise ValueError(f"variable {name} out of range for k={k}")
            idx = num - 1
        else:
            if not 1 <= num <= d:
                raise ValueError(f"variable {name} out of range for d={d}")
            idx = k + num - 1
        return idx + (n if bar else 0)

    result = Polynomial.zero(config)
    i = 0
    total = len(tokens)

    def parse_factor(i):
        tok = tokens[i]
        if tok.group("cplx"):
            body = tok.group("cplx")[1:-1].replace(" ", "").replace("i", "j")
            try:
                value = complex(body)
            except ValueError:
                raise ValueError(f"bad complex literal {tok.group('cplx')}") from None
            return Polynomial.constant(config, value), i + 1
        if tok.group("num"):
            return Polynomial.constant(config, float(tok.group("num"))), i + 1
        if tok.group("imag"):
            return Polynomial.constant(config, 1j), i + 1
        if tok.group("var"):
            base = Polynomial.coordinate(config, var_index(tok.group("var")))
            i += 1
            if i < total and tokens[i].group("op") == "^":
                if i + 1 >= total or not tokens[i + 1].group("num"):
                    raise ValueError("expected integer exponent after '^'")
                base = base ** int(tokens[i + 1].group("num"))
                i += 2
            return base, i
        raise ValueError(f"unexpected token {tok.group(0)!r}")

    while i < total:
        sign = 1.0
        while i < total and tokens[i].group("op") in ("+", "-"):
            if tokens[i].group("op") == "-":
                sign = -sign
            i += 1
        if i >= total:
            raise ValueError("dangling sign at end of polynomial")
        term, i = parse_factor(i)
        while i < total and tokens[i].group("op") == "*":
            factor, i = parse_factor(i + 1)
            term = term * factor
        result = result + sign * term
    return result


def lid(f: Polynomial, h: GroupElement) -> Polynomial:
    """Left-invariant derivative of f along the direction h = (A, a).

    The derivative of t -> f(g . (tA, ta)) at t = 0:

        sum_j A_j df/dw_j + conj(A_j) df/dwbar_j
      + sum_m v_m(w) df/dc_m + conj(v_m)(wbar) df/dcbar_m,

    with v(w) = a + omega(w, A)/2, a vector of degree-1 polynomials in w.
    Holomorphic f stays holomorphic (the conjugate terms vanish).
    """
    cfg = f.config
    k, d, n = cfg.k, cfg.d, cfg.n
    out = Polynomial.zero(cfg)
    A, a = h.w, h.c
    # omega(w, A)_m = sum_i (Omega_m A)_i w_i
    OmA = np.einsum("mij,j->mi", cfg.omega, A)
    for j in range(k):
        if A[j] != 0:
            df = f.partial(j)
            if not df.is_zero():
                out = out + A[j] * df
        if A[j].conjugate() != 0:
            df = f.partial(n + j)
            if not df.is_zero():
                out = out + A[j].conjugate() * df
    for m in range(d):
        df = f.partial(k + m)
        if not df.is_zero():
            v = Polynomial.constant(cfg, a[m])
            for i in range(k):
                if OmA[m, i] != 0:
                    v = v + 0.5 * OmA[m, i] * Polynomial.coordinate(cfg, i)
            out = out + v * df
        df = f.partial(n + k + m)
        if not df.is_zero():
            vbar = Polynomial.constant(cfg, a[m].conjugate())
            for i in range(k):
                if OmA[m, i].conjugate() != 0:
                    vbar = vbar + 0.5 * OmA[m, i].conjugate() * Polynomial.coordinate(
                        cfg, n + i
                    )
            out = out + vbar * df
    return out


def apply_L(F: Polynomial) -> Polynomial:
    """Sum of squared left-invariant derivatives over the real basis directions:

        L = sum_j [lid^2_(e_j,0) + lid^2_(ie_j,0)]
          + sum_m [lid^2_(0,f_m) + lid^2_(0,if_m)].

    Annihilates holomorphic polynomials; strictly lowers graded degree by 2.
    """
    cfg = F.config
    out = Polynomial.zero(cfg)
    for index in range(cfg.n):
        h = cfg.basis_direction(index)
        ih = h.scale(1j)
        for direction in (h, ih):
            out = out + lid(lid(F, direction), direction)
    return out


def heat_expectation(F: Polynomial, T: float) -> complex:
    """Exact expectation of F under the terminal-time-T heat kernel measure:

        sum_{m>=0} (T/4)^m / m! * (L^m F)(e),

    a finite sum because L lowers graded degree by 2 per application. Serves
    as the exact oracle that every Monte Carlo estimate is judged against.
    """
    if T <= 0:
        raise ValueError(f"heat_expectation requires T > 0, got {T}")
    total = 0j
    cur = F
    m = 0
    max_m = F.graded_degree() // 2 + 1
    while not cur.is_zero():
        if m > max_m:
            raise RuntimeError("heat expectation failed to terminate; L did not lower degree")
        total += (T / 4.0) ** m / math.factorial(m) * cur.constant_term()
        cur = apply_L(cur)
        m += 1
    return total
