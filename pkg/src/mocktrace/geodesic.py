"""Geodesic cycles and the trace integrals attached to quadratic forms.

Three regimes, split by the discriminant of the twisted family: CM point
sums (negative), closed-geodesic cycle integrals (positive nonsquare), and
convergent cusp-to-cusp integrals of the corrected functions j_{m,Q}
(positive square).  All quadrature is adaptive Gauss-Kronrod via scipy.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Callable

from scipy.integrate import quad

from .arith import pell_fundamental
from .modfun import eval_jm, eval_jmQ
from .qform import (
    QuadForm,
    UnimodularMatrix,
    apply,
    automorph_generator,
    chi_D,
    classes_negative,
    classes_nonsquare,
    classes_square,
)

__all__ = [
    "GeodesicCycle",
    "TraceResult",
    "geodesic_cycle",
    "cycle_integral_closed",
    "trace_negative",
    "trace_nonsquare",
    "trace_square",
]

QUAD_TOL = 1e-9
QUAD_LIMIT = 400

# Cusp-to-cusp semicircles are sampled on the open range (eps, pi - eps);
# the clipped remainder is bounded by the finite endpoint limit times eps.
THETA_EPS = 1e-6

# Vertical-line truncation: the integrand decays like e^{-t}, so T = 30
# leaves a tail below 4 pi m e^-30 ~ 1e-12 for the m in range.
T_VERTICAL = 30.0

IMAG_RESIDUE_TOL = 1e-8


@dataclass
class GeodesicCycle:
    """A parametrized piece of the geodesic S_Q used for one cycle integral."""

    form: QuadForm
    kind: str  # "closed" | "cusp_to_cusp" | "vertical_line"
    apex: complex
    theta_range: tuple[float, float] | None = None
    t_range: tuple[float, float] | None = None
    orientation: int = 1

    def point(self, param: float) -> complex:
        if self.kind == "vertical_line":
            return complex(0.0, math.exp(param))
        c0 = self.apex.real
        r = self.apex.imag
        return complex(c0 + r * math.cos(param), r * math.sin(param))


@dataclass
class TraceResult:
    value: float
    d: int
    D: int
    m: int
    method: str
    err_estimate: float
    params: dict = field(default_factory=dict)


def _check_twist(d: int, D: int) -> None:
    for name, v in (("d", d), ("D", D)):
        if v % 4 not in (0, 1):
            raise ValueError(f"{name} = {v} is not congruent to 0 or 1 mod 4")


def geodesic_cycle(Q: QuadForm) -> GeodesicCycle:
    """The parametrized cycle for a form of positive discriminant."""
    d = Q.disc
    if d <= 0:
        raise ValueError(f"geodesic requires positive discriminant, got {d}")
    rt = math.isqrt(d)
    square = rt * rt == d
    if Q.a == 0:
        if not square:
            raise ValueError(f"form {Q} with a = 0 must have square discriminant")
        return GeodesicCycle(
            Q, "vertical_line", complex(0.0, 1.0), t_range=(-T_VERTICAL, T_VERTICAL)
        )
    c0 = -Q.b / (2 * Q.a)
    r = math.sqrt(d) / (2 * abs(Q.a))
    apex = complex(c0, r)
    if square:
        return GeodesicCycle(
            Q,
            "cusp_to_cusp",
            apex,
            theta_range=(THETA_EPS, math.pi - THETA_EPS),
            orientation=1 if Q.a > 0 else -1,
        )
    g = automorph_generator(Q)
    end = g.moebius(apex)
    theta_end = math.atan2(end.imag - 0.0, end.real - c0)
    # end lies on the same semicircle, so theta_end in (0, pi)
    return GeodesicCycle(
        Q,
        "closed",
        apex,
        theta_range=(math.pi / 2, theta_end),
        orientation=1 if Q.a > 0 else -1,
    )


def cycle_integral_closed(Q: QuadForm, integrand: Callable[[complex], complex]) -> complex:
    """One period of the cycle integral of integrand * dtau / Q(tau, 1).

    The discriminant must be positive and nonsquare.  The path runs along
    the semicircle S_Q from the apex to its image under the automorph, on
    which d tau / Q(tau, 1) = sign(a) dtheta / (sqrt(d) sin theta).
    """
    d = Q.disc
    if d <= 0 or math.isqrt(d) ** 2 == d:
        raise ValueError(f"closed cycles need a positive nonsquare discriminant, got {d}")
    cyc = geodesic_cycle(Q)
    th0, th1 = cyc.theta_range

    def f_re(theta: float) -> float:
        return (integrand(cyc.point(theta)) / math.sin(theta)).real

    def f_im(theta: float) -> float:
        return (integrand(cyc.point(theta)) / math.sin(theta)).imag

    re, _ = quad(f_re, th0, th1, epsabs=QUAD_TOL, limit=QUAD_LIMIT)
    im, _ = quad(f_im, th0, th1, epsabs=QUAD_TOL, limit=QUAD_LIMIT)
    return cyc.orientation * complex(re, im) / math.sqrt(d)


def trace_negative(d: int, D: int, m: int) -> TraceResult:
    """The CM trace (1/sqrt(D)) sum chi_D(Q)/|Gamma_Q| j_m(tau_Q) over classes."""
    if d >= 0 or D <= 0 or d * D >= 0:
        raise ValueError(f"trace_negative needs d < 0 < D, got d={d}, D={D}")
    if m < 1:
        raise ValueError(f"m must be positive, got {m}")
    _check_twist(d, D)
    cl = classes_negative(d * D)
    total = 0.0 + 0.0j
    for Q, order in zip(cl.reps, cl.stab_orders):
        ch = chi_D(D, Q)
        if ch == 0:
            continue
        tau = complex(-Q.b, math.sqrt(-Q.disc)) / (2 * Q.a)
        total += ch / order * eval_jm(m, tau)
    total /= math.sqrt(D)
    if abs(total.imag) > IMAG_RESIDUE_TOL:
        raise ArithmeticError(f"imaginary residue {total.imag} in trace_negative({d},{D},{m})")
    return TraceResult(
        value=total.real,
        d=d,
        D=D,
        m=m,
        method="cm_points",
        err_estimate=1e-9 * max(1.0, abs(total.real)),
        params={"classes": len(cl.reps)},
    )


def trace_nonsquare(d: int, D: int, m: int) -> TraceResult:
    """(1/2pi) sum chi_D(Q) int_{C_Q} j_m dtau/Q over nonsquare-discriminant classes."""
    if d <= 0 or D <= 0:
        raise ValueError(f"trace_nonsquare needs d, D > 0, got d={d}, D={D}")
    dD = d * D
    if math.isqrt(dD) ** 2 == dD:
        raise ValueError(f"dD = {dD} is a square; use trace_square")
    _check_twist(d, D)
    cl = classes_nonsquare(dD)
    total = 0.0 + 0.0j
    for Q in cl.reps:
        ch = chi_D(D, Q)
        if ch == 0:
            continue
        total += ch * cycle_integral_closed(Q, lambda tau: eval_jm(m, tau))
    total /= 2 * math.pi
    if abs(total.imag) > IMAG_RESIDUE_TOL:
        raise ArithmeticError(f"imaginary residue {total.imag} in trace_nonsquare({d},{D},{m})")
    eps_d = pell_fundamental(dD).unit
    # quadrature tolerance per class, scaled by the cycle length as a proxy
    err = len(cl.reps) * (QUAD_TOL * 2 * math.log(eps_d) / math.sqrt(dD) + 1e-9)
    return TraceResult(
        value=total.real,
        d=d,
        D=D,
        m=m,
        method="closed_cycle",
        err_estimate=err,
        params={"classes": len(cl.reps)},
    )


def _cusp_integral_semicircle(m: int, Q: QuadForm, N: int) -> complex:
    """Integral of j_{m,Q} dtau_Q over the semicircle, theta in (eps, pi - eps)."""
    cyc = geodesic_cycle(Q)
    th0, th1 = cyc.theta_range

    def f_re(theta: float) -> float:
        return (eval_jmQ(m, Q, cyc.point(theta), N=N) / math.sin(theta)).real

    def f_im(theta: float) -> float:
        return (eval_jmQ(m, Q, cyc.point(theta), N=N) / math.sin(theta)).imag

    re, _ = quad(f_re, th0, th1, epsabs=QUAD_TOL, limit=QUAD_LIMIT)
    im, _ = quad(f_im, th0, th1, epsabs=QUAD_TOL, limit=QUAD_LIMIT)
    # rectangle-rule estimate for the two clipped endpoint slivers; the
    # integrand extends continuously to the cusps, so this leaves O(eps^2)
    sliver = THETA_EPS * (complex(f_re(th0), f_im(th0)) + complex(f_re(th1), f_im(th1)))
    return cyc.orientation * (complex(re, im) + sliver)


def _cusp_integral_vertical(m: int, Q: QuadForm, N: int) -> complex:
    """Integral of j_{m,Q}(iy) dy/y over y = e^t, |t| < T."""

    def f_re(t: float) -> float:
        return eval_jmQ(m, Q, complex(0.0, math.exp(t)), N=N).real

    def f_im(t: float) -> float:
        return eval_jmQ(m, Q, complex(0.0, math.exp(t)), N=N).imag

    re, _ = quad(f_re, -T_VERTICAL, T_VERTICAL, epsabs=QUAD_TOL, limit=QUAD_LIMIT)
    im, _ = quad(f_im, -T_VERTICAL, T_VERTICAL, epsabs=QUAD_TOL, limit=QUAD_LIMIT)
    return complex(re, im)


def _semicircle_equivalent(Q: QuadForm) -> QuadForm:
    # [[1,0],[-1,1]] sends [0,b,0] to [b,b,0], moving the vertical line
    # onto a genuine semicircle while leaving the trace summand unchanged.
    g = UnimodularMatrix(1, 0, -1, 1)
    return apply(g, Q)


def trace_square(d: int, D: int, m: int, route: str = "vertical", N: int = 48) -> TraceResult:
    """Cusp-to-cusp trace (1/2pi) sum chi_D(Q) int j_{m,Q} dtau/Q for square dD.

    The a = 0 representative integrates along the vertical line by default;
    route="semicircle" replaces it by an equivalent form with a > 0 and uses
    the semicircle parametrization (a cross-check of the same number).
    """
    if d <= 0 or D <= 0:
        raise ValueError(f"trace_square needs d, D > 0, got d={d}, D={D}")
    dD = d * D
    b = math.isqrt(dD)
    if b * b != dD:
        raise ValueError(f"dD = {dD} is not a square; use trace_nonsquare")
    if m < 1:
        raise ValueError(f"m must be positive (the m = 0 integral diverges), got {m}")
    if route not in ("vertical", "semicircle"):
        raise ValueError(f"unknown route {route!r}")
    _check_twist(d, D)
    cl = classes_square(dD)
    total = 0.0 + 0.0j
    for Q in cl.reps:
        ch = chi_D(D, Q)
        if ch == 0:
            continue
        if Q.a == 0:
            if route == "semicircle":
                Qs = _semicircle_equivalent(Q)
                contrib = _cusp_integral_semicircle(m, Qs, N)
            else:
                contrib = _cusp_integral_vertical(m, Q, N)
        else:
            contrib = _cusp_integral_semicircle(m, Q, N)
        total += ch * contrib
    # dtau_Q = sqrt(dD) dtau / Q(tau,1): divide by sqrt(dD) once, here
    total /= 2 * math.pi * b
    if abs(total.imag) > IMAG_RESIDUE_TOL:
        raise ArithmeticError(f"imaginary residue {total.imag} in trace_square({d},{D},{m})")
    # endpoint clip + vertical tail + quadrature, all scaled out of 2 pi b
    err = (
        len(cl.reps)
        * (2 * THETA_EPS * 4 * math.pi * m + 8 * math.pi * m * math.exp(-T_VERTICAL) + QUAD_TOL)
        / (2 * math.pi * b)
    )
    return TraceResult(
        value=total.real,
        d=d,
        D=D,
        m=m,
        method="cusp_cycle",
        err_estimate=err,
        params={"classes": len(cl.reps), "route": route, "N": N},
    )
