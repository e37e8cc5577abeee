"""Log-domain quadrature kernels shared by the estimator, policy and analytics code.

Every popularity integral in this package reduces, after the substitution
w = -alpha * ln z, to the one workhorse integral

    W(a, x) = int_0^inf exp(a*w - x*exp(w)) dw,        x > 0, a real,

which is an upper incomplete gamma function in disguise:
W(a, x) = x^(-a) * Gamma_upper(a, x), valid for any real a.  Two facts are
used throughout:

* recurrence        x * W(a+1, x) = a * W(a, x) + exp(-x)
* Poisson tails     P(Pois(x) >= k) = P(k, x)  (regularized lower gamma)

The integrand of W is a single analytic bump: its exponent
phi(w) = a*w - x*e^w has one maximum on [0, inf) and decays doubly
exponentially to the right.  A fixed-order Gauss-Legendre rule placed on the
window where phi stays within ``_CUT`` of its peak therefore converges to
near machine precision; window placement is deterministic (closed-form
bounds sharpened by a few Newton steps), not adaptive subdivision.
"""

from __future__ import annotations

import numpy as np
from scipy import special

__all__ = [
    "gauss_legendre_01",
    "log_bump_integral",
    "log_gamma",
    "poisson_tail",
    "bracketed_root",
]

# exp(-_CUT) ~ 3e-20 relative to the peak: beyond this the integrand cannot
# move a float64 result.
_CUT = 45.0
_DEFAULT_NODES = 256
_TINY = 1e-300

_gl_cache: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def gauss_legendre_01(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights of the n-point Gauss-Legendre rule mapped to [0, 1]."""
    got = _gl_cache.get(n)
    if got is None:
        x, w = np.polynomial.legendre.leggauss(n)
        got = ((x + 1.0) / 2.0, w / 2.0)
        _gl_cache[n] = got
    return got


def _phi(w: np.ndarray, a: np.ndarray, x: np.ndarray) -> np.ndarray:
    return a * w - x * np.exp(w)


def log_bump_integral(a, x, nodes: int = _DEFAULT_NODES) -> np.ndarray:
    """log W(a, x) for broadcastable arrays ``a`` (real) and ``x`` (> 0).

    Parameters
    ----------
    a, x : array_like
        Exponent slope and decay scale.  x must be positive; values below
        1e-300 are clamped.
    nodes : int
        Gauss-Legendre order used on the bump window.

    Returns
    -------
    ndarray
        log of int_0^inf exp(a*w - x*exp(w)) dw, elementwise.
    """
    a = np.asarray(a, dtype=float)
    x = np.maximum(np.asarray(x, dtype=float), _TINY)
    a, x = np.broadcast_arrays(a, x)
    shape = a.shape
    a = a.ravel()
    x = x.ravel()
    out = np.empty(a.shape)
    block = 16384  # keeps the (block, nodes) temporaries around 30 MB
    for i in range(0, a.size, block):
        out[i : i + block] = _log_bump_block(a[i : i + block], x[i : i + block], nodes)
    return out.reshape(shape)


def _log_bump_block(a: np.ndarray, x: np.ndarray, nodes: int) -> np.ndarray:
    interior = a > x
    wstar = np.where(interior, np.log(np.maximum(a, _TINY) / x), 0.0)
    phimax = _phi(wstar, a, x)
    target = phimax - _CUT
    # Curvature scale at the peak: x * exp(wstar), which is a when interior.
    xs = np.where(interior, a, x)

    # Right edge: solve drop(s) = xs*(e^s - 1) - a*s = _CUT for s > 0.
    # drop is increasing and convex, and both starting points below sit at or
    # beyond the root (the quadratic minorant e^s - 1 >= s + s^2/2 certifies
    # the first; the second lands where xs*(e^s - 1) = _CUT + 60*a+), so
    # undamped Newton descends monotonically onto the root.  exp(s) stays
    # finite because s never exceeds the log1p bound.
    b = xs - a
    s = 2.0 * _CUT / (b + np.sqrt(b * b + 2.0 * _CUT * xs))
    s = np.minimum(s, np.log1p((_CUT + 60.0 * np.maximum(a, 0.0)) / xs))
    for _ in range(3):
        es = np.exp(s)
        grad = np.maximum(xs * es - a, _TINY)
        s -= (xs * (es - 1.0) - a * s - _CUT) / grad
    w_hi = wstar + s

    # Left edge: 0 unless the peak is interior and phi(0) is negligible, in
    # which case solve a*(u - 1 + e^-u) = _CUT for the offset u below the
    # peak.  Again convex and increasing with a right-of-root start: for
    # a >= 153 the 1.3*sqrt window covers the quadratic regime (u <= 1),
    # otherwise 1 + _CUT/a overshoots by exactly a*e^-u.
    w_lo = np.zeros_like(wstar)
    need_left = interior & (_phi(w_lo, a, x) < target)
    if need_left.any():
        ax = np.where(need_left, a, 1.0)
        u = np.where(
            ax >= 153.0, 1.3 * np.sqrt(2.0 * _CUT / ax), 1.0 + _CUT / ax
        )
        for _ in range(3):
            eu = np.exp(-u)
            grad = np.maximum(ax * (1.0 - eu), _TINY)
            u -= (ax * (u - 1.0 + eu) - _CUT) / grad
        w_lo = np.where(need_left, wstar - u, 0.0)

    gx, gw = gauss_legendre_01(nodes)
    span = w_hi - w_lo
    # (points, nodes) evaluation of exp(phi - phimax)
    w = w_lo[:, None] + span[:, None] * gx[None, :]
    vals = np.exp(_phi(w, a[:, None], x[:, None]) - phimax[:, None])
    integral = span * (vals @ gw)
    return phimax + np.log(integral)


def log_gamma(v) -> np.ndarray:
    """log Gamma(v) for positive v (thin wrapper, kept for one import site)."""
    return special.gammaln(v)


def poisson_tail(k, m) -> np.ndarray:
    """P(Poisson(m) >= k) elementwise; k integer >= 0, m >= 0."""
    k = np.asarray(k)
    m = np.asarray(m, dtype=float)
    k_pos = np.maximum(k, 1)
    tail = special.gammainc(k_pos, m)
    return np.where(k <= 0, 1.0, tail)


def bracketed_root(
    f,
    lo: float,
    hi: float,
    *,
    ytol: float,
    xrtol: float,
    maxiter: int = 200,
) -> float:
    """Root of scalar f on a bracket [lo, hi] with f(lo) >= 0 >= f(hi).

    Illinois-damped regula falsi with a bisection fallback.  Stops when
    |f| < ytol or the bracket has shrunk below xrtol relative width.
    """
    flo = f(lo)
    fhi = f(hi)
    if abs(flo) < ytol:
        return lo
    if abs(fhi) < ytol:
        return hi
    if flo < 0.0 or fhi > 0.0:
        raise ValueError("root not bracketed")
    side = 0
    for _ in range(maxiter):
        denom = flo - fhi
        if denom != 0.0:
            mid = (lo * -fhi + hi * flo) / denom
        else:
            mid = 0.5 * (lo + hi)
        # guard against stagnation at the bracket edges
        width = hi - lo
        if not (lo + 1e-3 * width < mid < hi - 1e-3 * width):
            mid = 0.5 * (lo + hi)
        fmid = f(mid)
        if abs(fmid) < ytol:
            return mid
        if fmid > 0.0:
            lo, flo = mid, fmid
            if side == 1:
                fhi *= 0.5
            side = 1
        else:
            hi, fhi = mid, fmid
            if side == -1:
                flo *= 0.5
            side = -1
        if hi - lo <= xrtol * max(abs(lo), abs(hi)):
            return 0.5 * (lo + hi)
    return 0.5 * (lo + hi)
