"""Parameter estimation for A theta = b with an inversion accelerator.

Each step advances the two-loop inversion iteration and applies the
combined weight

    theta_k = theta_(k-1) - [L_k + (I - L_k A) (I + F_k + ... + F_k^(q-1))
              G_k] (A theta_(k-1) - b)

which contracts the mismatch theta_k - theta_star by (I - L_k A) F_k^q, a
pure power of the splitting residual B.  With q == n the cumulative
exponent has a closed form (:func:`cumulative_exponent_closed`), and the
weight admits a recursive evaluation (:func:`richardson_recursive_step`)
that re-derives G_k from the previous step's weight with a single product
and splits the remaining work into two independent parts.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .matrix_core import MulCounter, identity, mat_mul, mat_vec
from .newton_schulz import DoubleNsState, double_ns_step, initial_double
from .series_toolkit import horner_eval
from .splitting import Splitting

__all__ = [
    "RichardsonState",
    "TransientModel",
    "cumulative_exponent",
    "cumulative_exponent_closed",
    "initial_richardson",
    "richardson_recursive_step",
    "richardson_step",
    "step_exponent_general",
    "step_exponent_qn",
    "transient_model",
]


@dataclass
class RichardsonState:
    """Estimate theta_k plus the embedded inversion state.

    ``omega`` and ``ns_part`` are the recursive form's carry-overs (the
    previous combined weight and the previous geometric sum applied to the
    estimate); they stay None on the direct path and before the first
    recursive step.
    """

    theta: np.ndarray
    inner: DoubleNsState
    q: int
    omega: np.ndarray | None
    ns_part: np.ndarray | None
    step: int
    ctr: MulCounter


def initial_richardson(
    split: Splitting,
    b: np.ndarray,
    p: int = 0,
    w: int = 1,
    order: int = 2,
    q: int | None = None,
) -> RichardsonState:
    """Initialize with theta_0 = L_0 b from the two-loop inversion init."""
    inner = initial_double(split, p, w, order)
    if q is None:
        q = order
    if q < 1:
        raise ValueError("q must be >= 1")
    theta0 = mat_vec(inner.accel_estimate, b, inner.ctr)
    return RichardsonState(
        theta=theta0, inner=inner, q=q, omega=None, ns_part=None, step=0, ctr=inner.ctr
    )


def richardson_step(st: RichardsonState, a: np.ndarray, b: np.ndarray) -> RichardsonState:
    """Direct form: advance the inversion, build the weight, correct theta."""
    if a.shape[0] != st.theta.shape[0] or b.shape != st.theta.shape:
        raise ValueError("dimension mismatch")
    inner = double_ns_step(st.inner, a)
    sum_fg = horner_eval(inner.residual, inner.estimate, st.q, st.ctr)
    weight = inner.accel_estimate + mat_mul(inner.accel_residual, sum_fg, st.ctr)
    resid = mat_vec(a, st.theta, st.ctr) - b
    theta = st.theta - mat_vec(weight, resid, st.ctr)
    return RichardsonState(
        theta=theta,
        inner=inner,
        q=st.q,
        omega=None,
        ns_part=None,
        step=st.step + 1,
        ctr=st.ctr,
    )


def _power_sum(gamma: np.ndarray, n: int, ctr: MulCounter) -> np.ndarray:
    """I + gamma + ... + gamma^(n-1) in matrix form (n - 2 products)."""
    acc = identity(gamma.shape[0])
    cur = None
    for _ in range(n - 1):
        cur = gamma if cur is None else mat_mul(cur, gamma, ctr)
        acc = acc + cur
    return acc


def richardson_recursive_step(
    st: RichardsonState, a: np.ndarray, b: np.ndarray, executor=None
) -> RichardsonState:
    """Recursive form, valid for q == n only.

    The step reuses the previous residual power as the new inner residual
    (no product), recovers G_k from the previous weight with one product,

        G_k = S (omega_prev - P_prev) + P_prev,
        S = I + R + ... + R^(n-1),  R = previous (I - L A),

    and otherwise mirrors the direct form.  After the shared S, the two
    halves (G_k with its sums, and the L update) are independent;
    ``executor`` runs them concurrently with bitwise-identical results.
    The first call after initialization also has to build the carried
    weight, which is why the per-step saving starts at the second step.
    """
    n = st.inner.order
    if st.q != n:
        raise ValueError("the recursive form requires q == n")
    if a.shape[0] != st.theta.shape[0] or b.shape != st.theta.shape:
        raise ValueError("dimension mismatch")
    prev = st.inner
    eye = identity(a.shape[0])

    if st.omega is None or st.ns_part is None:
        ns_prev = horner_eval(prev.residual, prev.estimate, n, st.ctr)
        omega_prev = prev.accel_estimate + mat_mul(prev.accel_residual, ns_prev, st.ctr)
    else:
        ns_prev, omega_prev = st.ns_part, st.omega

    # New inner residual: the previous step's residual power, no product.
    gamma = prev.accel_residual
    s_gamma = _power_sum(gamma, n, st.ctr)

    def estimate_part(ctr: MulCounter):
        g_new = mat_mul(s_gamma, omega_prev - ns_prev, ctr) + ns_prev
        f_new = eye - mat_mul(g_new, a, ctr)
        ns_new = horner_eval(f_new, g_new, n, ctr)
        return g_new, f_new, ns_new

    def accel_part(ctr: MulCounter):
        l_new = mat_mul(s_gamma, prev.accel_estimate, ctr)
        return l_new, eye - mat_mul(l_new, a, ctr)

    if executor is None:
        g_new, f_new, ns_new = estimate_part(st.ctr)
        l_new, accel_res = accel_part(st.ctr)
    else:
        c1, c2 = MulCounter(), MulCounter()
        fut_a = executor.submit(estimate_part, c1)
        fut_b = executor.submit(accel_part, c2)
        g_new, f_new, ns_new = fut_a.result()
        l_new, accel_res = fut_b.result()
        st.ctr.merge(c1)
        st.ctr.merge(c2)

    omega_new = l_new + mat_mul(accel_res, ns_new, st.ctr)
    resid = mat_vec(a, st.theta, st.ctr) - b
    theta = st.theta - mat_vec(omega_new, resid, st.ctr)
    inner_new = DoubleNsState(
        estimate=g_new,
        residual=f_new,
        accel_estimate=l_new,
        accel_residual=accel_res,
        step=prev.step + 1,
        order=n,
        series_order=prev.series_order,
        ctr=st.ctr,
    )
    return RichardsonState(
        theta=theta,
        inner=inner_new,
        q=st.q,
        omega=omega_new,
        ns_part=ns_new,
        step=st.step + 1,
        ctr=st.ctr,
    )


# ---------------------------------------------------------------------------
# Transient models: the mismatch contracts by B**e_k at step k.
# ---------------------------------------------------------------------------


def step_exponent_general(k: int, n: int, h: int, q: int) -> int:
    """Step-k mismatch exponent for general Neumann order q."""
    return h * ((k * n ** (k + 1) + n**k) * q + n ** (k + 1))


def step_exponent_qn(k: int, n: int, h: int) -> int:
    """Step-k mismatch exponent for q == n."""
    return h * (k * n ** (k + 2) + 2 * n ** (k + 1))


def cumulative_exponent(k: int, n: int, h: int, q: int | None = None) -> int:
    """Sum of per-step exponents over steps 1..k (telescoped form)."""
    if q is None or q == n:
        return sum(step_exponent_qn(j, n, h) for j in range(1, k + 1))
    return sum(step_exponent_general(j, n, h, q) for j in range(1, k + 1))


def cumulative_exponent_closed(k: int, n: int, h: int) -> int:
    """Closed form of the cumulative exponent for q == n, n >= 2.

    The division by (n - 1)^2 must be exact in integer arithmetic; a
    non-zero remainder means the formula was fed invalid arguments.
    """
    if n < 2:
        raise ValueError("closed form requires n >= 2")
    if k < 1 or h < 1:
        raise ValueError("requires k >= 1 and h >= 1")
    num = h * n * n * (k * n ** (k + 2) - (k - 1) * n ** (k + 1) - 2 * n**k - n + 2)
    quo, rem = divmod(num, (n - 1) ** 2)
    if rem:
        raise ArithmeticError(f"closed form not divisible: {num} / {(n - 1) ** 2}")
    return quo


@dataclass(frozen=True)
class TransientModel:
    """Predicted contraction at step k: ||mismatch_k|| <= bound.

    ``bound`` is rho**total_exponent scaled by the initial mismatch norm
    (1.0 when not supplied, i.e. a pure contraction factor).
    """

    total_exponent: int
    step_exponent: int
    rho: float
    bound: float


def transient_model(
    k: int,
    n: int,
    h: int,
    rho: float,
    q: int | None = None,
    theta0_norm: float = 1.0,
) -> TransientModel:
    """Evaluate the transient model at step k for measured radius rho."""
    if k < 1:
        raise ValueError("transient model starts at step 1")
    if q is None or q == n:
        step = step_exponent_qn(k, n, h)
    else:
        step = step_exponent_general(k, n, h, q)
    total = cumulative_exponent(k, n, h, q)
    return TransientModel(
        total_exponent=total,
        step_exponent=step,
        rho=rho,
        bound=float(rho) ** total * theta0_norm,
    )
