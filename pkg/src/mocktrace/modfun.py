"""The Faber basis j_m, its q-expansions, and cusp-stable evaluation.

j_0 = 1, j_1 = j - 744, and for m >= 2 the unique modular function
q^-m + O(q), built by the Faber recursion from exact integer power series.
Evaluation anywhere on the upper half-plane goes through fundamental-domain
reduction; the cusp-corrected functions j_{m,Q} (square discriminant Q)
subtract one sinh-type term per root of Q and are evaluated with the
exponentially large parts cancelled analytically near the cusps.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from functools import lru_cache

from .qform import IDENTITY, QuadForm, S, UnimodularMatrix, translation

__all__ = [
    "QExpansion",
    "CuspMatrix",
    "j_coeffs",
    "jm_coeffs",
    "reduce_to_fundamental",
    "eval_jm",
    "cusp_matrix",
    "eval_jmQ",
]

N_DEFAULT = 48
N_MAX = 64
M_MAX = 10

# Above this imaginary part of a cusp-scaled point, j_{m,Q} is evaluated in
# grouped form (the e^{2 pi m v} parts cancelled symbolically).
V_STAR = 2.0

REDUCE_MAX_ITER = 10_000


@dataclass
class QExpansion:
    """Truncated Fourier series sum_{n >= lead} c(n) q^n with real coefficients."""

    lead: int
    coeffs: list[float]

    def coeff(self, n: int) -> float:
        idx = n - self.lead
        if idx < 0 or idx >= len(self.coeffs):
            return 0.0
        return self.coeffs[idx]

    def eval(self, q: complex) -> complex:
        # Horner from the highest power down, then the principal part.
        total = 0.0 + 0.0j
        for c in reversed(self.coeffs):
            total = total * q + c
        return total * q**self.lead


def _mul_trunc(f: list[int], g: list[int], n: int) -> list[int]:
    """Product of integer power series (index = exponent), truncated below n."""
    out = [0] * n
    for i, fi in enumerate(f[:n]):
        if fi == 0:
            continue
        for j, gj in enumerate(g[: n - i]):
            out[i + j] += fi * gj
    return out


def _eta24_over_q(n: int) -> list[int]:
    """Coefficients of Delta/q = prod (1-q^k)^24 as integers, through q^(n-1)."""
    eta = [0] * n
    k = 0
    while True:  # pentagonal number theorem
        for g in (k * (3 * k - 1) // 2, k * (3 * k + 1) // 2):
            if g >= n:
                break
            eta[g] += (-1) ** k
            if k == 0:
                break
        if k * (3 * k - 1) // 2 >= n:
            break
        k += 1
    e3 = _mul_trunc(_mul_trunc(eta, eta, n), eta, n)  # eta^3
    e6 = _mul_trunc(e3, e3, n)
    e12 = _mul_trunc(e6, e6, n)
    return _mul_trunc(e12, e12, n)


def _sigma(k: int, n: int) -> int:
    return sum(d**k for d in range(1, n + 1) if n % d == 0)


def _eisenstein(weight: int, n: int) -> list[int]:
    if weight == 4:
        return [1] + [240 * _sigma(3, k) for k in range(1, n)]
    if weight == 6:
        return [1] + [-504 * _sigma(5, k) for k in range(1, n)]
    raise ValueError(weight)


def _series_inverse(f: list[int], n: int) -> list[int]:
    """Inverse of an integer power series with f[0] = 1."""
    assert f[0] == 1
    inv = [0] * n
    inv[0] = 1
    for k in range(1, n):
        inv[k] = -sum(f[j] * inv[k - j] for j in range(1, k + 1) if j < len(f))
    return inv


@lru_cache(maxsize=8)
def _j_int_coeffs(N: int) -> tuple[int, ...]:
    """Exact integer coefficients c(-1), c(0), ..., c(N) of the j-invariant.

    Computed as E4^3 / Delta; the coefficient list is indexed from q^-1.
    """
    n = N + 2
    e4 = _eisenstein(4, n)
    num = _mul_trunc(_mul_trunc(e4, e4, n), e4, n)
    den_inv = _series_inverse(_eta24_over_q(n), n)
    return tuple(_mul_trunc(num, den_inv, n))


@lru_cache(maxsize=8)
def _j_int_coeffs_e6(N: int) -> tuple[int, ...]:
    """Independent route j = E6^2/Delta + 1728, same indexing; used as an oracle."""
    n = N + 2
    e6 = _eisenstein(6, n)
    num = _mul_trunc(e6, e6, n)
    den_inv = _series_inverse(_eta24_over_q(n), n)
    out = list(_mul_trunc(num, den_inv, n))
    out[1] += 1728
    return tuple(out)


@lru_cache(maxsize=128)
def _jm_int_coeffs(m: int, N: int) -> tuple[int, ...]:
    """Exact coefficients of j_m from q^-m through q^N (length m + N + 1)."""
    if m < 0 or m > M_MAX:
        raise ValueError(f"m must be in [0, {M_MAX}], got {m}")
    if N < 1 or N > N_MAX:
        raise ValueError(f"N must be in [1, {N_MAX}], got {N}")
    if m == 0:
        return (1,) + (0,) * N
    j = _j_int_coeffs(N + m)  # indexed from q^-1
    if m == 1:
        out = list(j[: N + 2])
        out[1] -= 744
        return tuple(out)
    j1 = _jm_int_coeffs(1, N + m - 1)  # from q^-1
    prev = _jm_int_coeffs(m - 1, N + 1)  # from q^-(m-1)
    # multiply: indices from q^-m; truncate at q^N
    length = m + N + 1
    prod = [0] * length
    for i, a in enumerate(j1):
        if a == 0:
            continue
        for k, b in enumerate(prev):
            n = (i - 1) + (k - (m - 1))
            if -m <= n <= N:
                prod[n + m] += a * b
    # subtract multiples of j_k, k = m-1 ... 0, to kill q^-k ... q^0
    for k in range(m - 1, -1, -1):
        coef = prod[m - k]  # coefficient of q^-k
        if coef == 0:
            continue
        jk = _jm_int_coeffs(k, N) if k > 0 else (1,) + (0,) * N
        for idx, b in enumerate(jk):
            n = idx - k
            if -m <= n <= N:
                prod[n + m] -= coef * b
    assert prod[0] == 1 and all(prod[m - k] == 0 for k in range(m - 1, -1, -1))
    return tuple(prod)


def j_coeffs(N: int) -> QExpansion:
    """q-expansion of the j-invariant through q^N."""
    if N < 1 or N > N_MAX:
        raise ValueError(f"N must be in [1, {N_MAX}], got {N}")
    return QExpansion(-1, [float(c) for c in _j_int_coeffs(N)[: N + 2]])


def jm_coeffs(m: int, N: int) -> QExpansion:
    """q-expansion of the Faber basis function j_m through q^N."""
    return QExpansion(-m if m > 0 else 0, [float(c) for c in _jm_int_coeffs(m, N)])


def reduce_to_fundamental(tau: complex) -> tuple[complex, UnimodularMatrix]:
    """Move tau to the standard fundamental domain; returns (tau', gamma) with tau' = gamma tau."""
    if tau.imag <= 0:
        raise ValueError(f"tau must be in the upper half-plane, got {tau}")
    gamma = IDENTITY
    tau0 = tau
    for _ in range(REDUCE_MAX_ITER):
        n = round(tau.real)
        if n != 0:
            tau -= n
            gamma = translation(-n) @ gamma
        norm = tau.real * tau.real + tau.imag * tau.imag
        if norm >= 1.0 - 1e-12:
            # one exact-matrix Moebius application avoids accumulated rounding
            return gamma.moebius(tau0), gamma
        tau = -1.0 / tau
        gamma = S @ gamma
    raise RuntimeError("fundamental-domain reduction did not terminate")


def eval_jm(m: int, tau: complex, N: int = N_DEFAULT) -> complex:
    """Evaluate j_m on the upper half-plane via fundamental-domain reduction."""
    if m == 0:
        return 1.0 + 0.0j
    tau0, _ = reduce_to_fundamental(tau)
    q = cmath.exp(2j * math.pi * tau0)
    return jm_coeffs(m, N).eval(q)


@dataclass(frozen=True)
class CuspMatrix:
    """A matrix sending the cusp alpha = r/s to infinity (bottom row (s, -r))."""

    alpha_num: int
    alpha_den: int
    gamma: UnimodularMatrix


def cusp_matrix(r: int, s: int) -> CuspMatrix:
    """Scaling matrix for the cusp r/s, gcd(r, s) = 1; bottom row exactly (s, -r)."""
    if math.gcd(abs(r), abs(s)) != 1:
        raise ValueError(f"cusp ({r}, {s}) is not in lowest terms")
    # det [[p, q], [s, -r]] = -(p r + q s) = 1
    g, x, y = _xgcd(r, s)
    # r x + s y = 1 -> p = -x, q = -y
    return CuspMatrix(r, s, UnimodularMatrix(-x, -y, s, -r))


def _xgcd(a: int, b: int):
    old_r, r = a, b
    old_s, s = 1, 0
    old_t, t = 0, 1
    while r != 0:
        q = old_r // r
        old_r, r = r, old_r - q * r
        old_s, s = s, old_s - q * s
        old_t, t = t, old_t - q * t
    if old_r < 0:
        old_r, old_s, old_t = -old_r, -old_s, -old_t
    return old_r, old_s, old_t


def _cusp_term(m: int, w: complex, phase_sign: int) -> complex:
    """2 sinh(2 pi m Im w) e(phase_sign * m * Re w)."""
    return 2.0 * math.sinh(2.0 * math.pi * m * w.imag) * cmath.exp(
        2j * math.pi * phase_sign * m * w.real
    )


def eval_jmQ(
    m: int,
    Q: QuadForm,
    tau: complex,
    N: int = N_DEFAULT,
    v_star: float = V_STAR,
    phase_sign: int = -1,
) -> complex:
    """The cusp-corrected function j_{m,Q} at tau, for Q of square discriminant.

    Subtracts, for each root alpha of Q, the term
    2 sinh(2 pi m Im(gamma_alpha tau)) e(phase_sign * m * Re(gamma_alpha tau)).
    When Im(gamma_alpha tau) > v_star the difference is formed analytically:
    with w = gamma_alpha tau, Gamma-invariance gives j_m(tau) = j_m(w), and
    j_m(w) - 2 sinh(2 pi m Im w) e(-m Re w) = e(-m conj(w)) + sum_{n>0} c_m(n) e(n w),
    so only exponentially small summands are ever combined.
    """
    if m < 1 or m > M_MAX:
        raise ValueError(f"m must be in [1, {M_MAX}], got {m}")
    if tau.imag <= 0:
        raise ValueError(f"tau must be in the upper half-plane, got {tau}")
    roots = Q.roots()  # validates the square discriminant
    mats = [cusp_matrix(p, q).gamma for (p, q) in roots]
    ws = [g.moebius(tau) for g in mats]
    vmax = max(w.imag for w in ws)
    if phase_sign == -1 and vmax > v_star:
        i_big = max(range(len(ws)), key=lambda i: ws[i].imag)
        w = ws[i_big]
        jm = jm_coeffs(m, N)
        total = cmath.exp(-2j * math.pi * m * w.conjugate())
        qw = cmath.exp(2j * math.pi * w)
        qn = 1.0 + 0.0j
        for n in range(1, N + 1):
            qn *= qw
            total += jm.coeff(n) * qn
        for i, wi in enumerate(ws):
            if i != i_big:
                total -= _cusp_term(m, wi, phase_sign)
        return total
    total = eval_jm(m, tau, N)
    for w in ws:
        total -= _cusp_term(m, w, phase_sign)
    return total
