"""Bayesian popularity estimation from request counts and content ages.

Content request volumes follow the bounded Pareto prior

    mu = mu_bar * (1 - alpha) * Z**(-alpha),      Z ~ Uniform(0, 1],

i.e. a Pareto law with shape 1/alpha and scale mu_bar * (1 - alpha), whose
mean is mu_bar.  A content of age tau observed with N requests (a Poisson
count with rate mu * tau) has the conjugate-free posterior mean

    E[mu | N, tau] = mu_bar*(1-alpha) * W(N+1-1/alpha, m) / W(N-1/alpha, m),

with m = mu_bar*(1-alpha)*tau and W the bump integral from
:mod:`snmcache.numerics`.  When content ages are uniform on [0, T] (the
stationary age distribution of live contents), the induced distribution of
the estimate E[mu | N, tau] is represented by :class:`EstimateDistribution`,
whose tail probabilities and quantiles drive threshold construction.

All distribution-level integrals reduce to two closed forms in W (k >= 1,
m > 0, both bounded by 1 and equal to 1 at k = 0):

    occupancy integrand   int_0^1 P(Pois(m z^-alpha) >= k) dz
        = P(k, m) + m^k W(k - 1/alpha, m) / Gamma(k)
    captured-mass integrand   int_0^1 (mu(z)/mu_bar) P(Pois(m z^-alpha) >= k) dz
        = P(k, m) + m^k W(k + 1 - 1/alpha, m) / Gamma(k)

where P is the regularized lower incomplete gamma.  An optional array of
environment factors generalizes both to priors of the form mu * K (used for
cluster-aware thresholds, where K is a smoothed kernel value at a random
torus coordinate): every factor multiplies m, posterior-mean numerators and
denominators pick up K^N weights, and the captured mass is reweighted by
K / E[K].
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .numerics import log_bump_integral, poisson_tail, bracketed_root, gauss_legendre_01

__all__ = [
    "ParetoPrior",
    "PosteriorQuery",
    "UnboundedEstimateError",
    "likelihood",
    "posterior_mean",
    "EstimateDistribution",
    "estimate_tail",
    "theta_quantile",
]


class UnboundedEstimateError(ValueError):
    """Raised when the posterior mean at age zero has no finite value.

    At tau = 0 the posterior mean equals
    mu_bar*(1-alpha)*(1-N*alpha)/(1-(N+1)*alpha), which is finite only when
    (N+1)*alpha < 1; otherwise the heavy prior tail makes the estimate
    diverge.  Threshold logic treats this condition as +inf (the content
    passes any threshold).
    """


@dataclass(frozen=True)
class ParetoPrior:
    """Popularity prior: Pareto with shape 1/alpha, scale mu_bar*(1-alpha).

    alpha = 0 degenerates to a point mass at mu_bar.  alpha must lie in
    [0, 1) so that the mean exists and equals mu_bar.
    """

    mu_bar: float
    alpha: float

    def __post_init__(self) -> None:
        if not (self.mu_bar > 0.0):
            raise ValueError(f"mu_bar must be positive, got {self.mu_bar}")
        if not (0.0 <= self.alpha < 1.0):
            raise ValueError(f"alpha must lie in [0, 1), got {self.alpha}")

    @property
    def support_min(self) -> float:
        """Smallest possible volume, mu_bar * (1 - alpha)."""
        return self.mu_bar * (1.0 - self.alpha)

    def volume(self, z):
        """Request volume generated by the uniform seed z in (0, 1]."""
        if self.alpha == 0.0:
            return np.broadcast_to(self.mu_bar, np.shape(z)).copy() if np.ndim(z) else self.mu_bar
        return self.support_min * np.asarray(z, dtype=float) ** (-self.alpha)

    def pdf(self, v):
        """Prior density at volume v (zero below support_min)."""
        if self.alpha == 0.0:
            raise ValueError("point-mass prior has no density")
        v = np.asarray(v, dtype=float)
        c = self.support_min
        inv = 1.0 / self.alpha
        out = np.where(v >= c, inv / c * (np.maximum(v, c) / c) ** (-inv - 1.0), 0.0)
        return out


@dataclass(frozen=True)
class PosteriorQuery:
    """A request count together with the age over which it was observed."""

    count: int
    age: float

    def __post_init__(self) -> None:
        if self.count < 0 or self.count != int(self.count):
            raise ValueError(f"count must be a nonnegative integer, got {self.count}")
        if not (self.age >= 0.0):
            raise ValueError(f"age must be nonnegative, got {self.age}")


def likelihood(count: int, rate_age_product: float) -> float:
    """Poisson probability of ``count`` requests given mu * tau.

    likelihood(0, 0.0) == 1 and likelihood(k, 0.0) == 0 for k >= 1.
    """
    if count < 0:
        raise ValueError("count must be nonnegative")
    x = float(rate_age_product)
    if x < 0.0:
        raise ValueError("rate_age_product must be nonnegative")
    if x == 0.0:
        return 1.0 if count == 0 else 0.0
    return math.exp(count * math.log(x) - x - math.lgamma(count + 1))


def _posterior_mean_zero(count: int, prior: ParetoPrior) -> float:
    if prior.alpha == 0.0:
        return prior.mu_bar
    a = prior.alpha
    if (count + 1) * a >= 1.0:
        raise UnboundedEstimateError(
            f"posterior mean at age 0 diverges for count={count}, alpha={a}"
        )
    return prior.support_min * (1.0 - count * a) / (1.0 - (count + 1) * a)


def posterior_mean(query: PosteriorQuery, prior: ParetoPrior) -> float:
    """Posterior mean popularity E[mu | N = count, age = tau].

    Monotone: nondecreasing in the count, nonincreasing in the age.  At
    age 0 the closed form mu_bar*(1-alpha)*(1-N*alpha)/(1-(N+1)*alpha)
    applies when (N+1)*alpha < 1; otherwise UnboundedEstimateError is
    raised.
    """
    if query.age == 0.0:
        return _posterior_mean_zero(query.count, prior)
    if prior.alpha == 0.0:
        return prior.mu_bar
    m = prior.support_min * query.age
    a = query.count - 1.0 / prior.alpha
    log_ratio = log_bump_integral(a + 1.0, m) - log_bump_integral(a, m)
    return float(prior.support_min * np.exp(log_ratio))


class _ThresholdSolver:
    """Shared machinery behind estimate distributions and threshold tables.

    Carries the prior, the shot duration T, and an optional set of
    environment factors with quadrature weights.  The plain prior is the
    single factor 1.0; cluster priors supply kernel values at torus
    quadrature nodes.  Everything is evaluated in log space over the factor
    axis so that factors spanning many orders of magnitude stay exact.
    """

    def __init__(
        self,
        prior: ParetoPrior,
        shot_duration: float,
        factors: np.ndarray | None = None,
        factor_weights: np.ndarray | None = None,
        nodes: int = 256,
        panel_order: int = 12,
    ) -> None:
        if not (shot_duration > 0.0):
            raise ValueError(f"shot_duration must be positive, got {shot_duration}")
        if not (0.0 < prior.alpha < 1.0):
            raise ValueError("threshold machinery requires 0 < alpha < 1")
        self.prior = prior
        self.T = float(shot_duration)
        self.nodes = nodes
        self.panel_order = panel_order
        if factors is None:
            factors = np.array([1.0])
            factor_weights = np.array([1.0])
        factors = np.asarray(factors, dtype=float)
        factor_weights = np.asarray(factor_weights, dtype=float)
        if factors.shape != factor_weights.shape or factors.ndim != 1:
            raise ValueError("factors and weights must be matching 1-d arrays")
        if np.any(factors <= 0.0) or np.any(factor_weights <= 0.0):
            raise ValueError("factors and weights must be positive")
        self.factors = factors
        self.log_factors = np.log(factors)
        self.factor_weights = factor_weights
        self.log_factor_weights = np.log(factor_weights)
        self.mean_factor = float(factor_weights @ factors)
        self.inv_alpha = 1.0 / prior.alpha
        self.scale = prior.support_min  # mu_bar * (1 - alpha)
        # root finding only needs ~1e-10 relative posterior means; the
        # reported integrals keep the full rule
        self.solve_nodes = min(64, nodes)

    # ---- posterior means ------------------------------------------------

    def posterior_mean_batch(self, counts, ages, nodes: int | None = None) -> np.ndarray:
        """Posterior means for arrays of counts and strictly positive ages."""
        counts = np.asarray(counts, dtype=float)
        ages = np.asarray(ages, dtype=float)
        counts, ages = np.broadcast_arrays(counts, ages)
        shape = counts.shape
        counts = counts.ravel()
        ages = ages.ravel()
        out = np.empty(counts.shape)
        j = self.log_factors.size
        block = max(1, 65536 // j)
        for i in range(0, counts.size, block):
            out[i : i + block] = self._pm_block(
                counts[i : i + block], ages[i : i + block], nodes or self.nodes
            )
        return out.reshape(shape)

    def _pm_block(self, counts: np.ndarray, ages: np.ndarray, nodes: int) -> np.ndarray:
        m = self.scale * ages
        a = counts - self.inv_alpha
        x = m[:, None] * self.factors[None, :]
        lw = self.log_factor_weights[None, :]
        lk = self.log_factors[None, :]
        log_den = counts[:, None] * lk + log_bump_integral(a[:, None], x, nodes) + lw
        log_num = (
            (counts + 1.0)[:, None] * lk
            + log_bump_integral((a + 1.0)[:, None], x, nodes)
            + lw
        )
        ratio = special.logsumexp(log_num, axis=1) - special.logsumexp(log_den, axis=1)
        return self.scale * np.exp(ratio)

    def posterior_mean_zero(self, count: int) -> float:
        """Age-0 limit; +inf when the estimate is unbounded."""
        a = self.prior.alpha
        if (count + 1) * a >= 1.0:
            return math.inf
        base = self.scale * (1.0 - count * a) / (1.0 - (count + 1) * a)
        if self.factors.size == 1:
            return base * float(self.factors[0])
        lw = self.log_factor_weights
        lk = self.log_factors
        log_num = special.logsumexp((count + 1.0) * lk + lw)
        log_den = special.logsumexp(count * lk + lw)
        return base * math.exp(log_num - log_den)

    # ---- threshold geometry ---------------------------------------------

    def zero_age_threshold(self, theta: float) -> int:
        """Smallest count whose age-0 posterior mean reaches theta."""
        k = 0
        while True:
            if self.posterior_mean_zero(k) >= theta:
                return k
            k += 1

    def count_threshold_at(self, age: float, theta: float) -> int:
        """Smallest count k with posterior_mean(k, age) >= theta."""
        lo = 0
        if self._pm_scalar(lo, age) >= theta:
            return 0
        hi = 1
        while self._pm_scalar(hi, age) < theta:
            lo = hi
            hi *= 2
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if self._pm_scalar(mid, age) >= theta:
                hi = mid
            else:
                lo = mid
        return hi

    def _pm_scalar(self, count: int, age: float) -> float:
        return float(self.posterior_mean_batch([count], [age], self.solve_nodes)[0])

    def crossing_ages(self, theta: float) -> tuple[int, np.ndarray, int]:
        """Ages where the count threshold jumps.

        Returns (n0, ages, n_end): the threshold equals n0 at age 0,
        increases by one at each entry of ``ages`` (sorted, within (0, T]),
        and equals n_end = n0 + len(ages) at age T.  Entry i is the age at
        which posterior_mean(n0 + i, age) crosses theta from above.
        """
        n0 = self.zero_age_threshold(theta)
        n_end = self.count_threshold_at(self.T, theta)
        ks = np.arange(n0, n_end, dtype=float)
        if ks.size == 0:
            return n0, np.empty(0), n_end
        # log-age bisection: pm(k, age) decreases in age, so the crossing is
        # the rightmost age with pm >= theta.
        lo = np.full(ks.shape, math.log(self.T) - 41.0)
        hi = np.full(ks.shape, math.log(self.T))
        for _ in range(42):
            mid = 0.5 * (lo + hi)
            above = self.posterior_mean_batch(ks, np.exp(mid), self.solve_nodes) >= theta
            lo = np.where(above, mid, lo)
            hi = np.where(above, hi, mid)
        # upper edge: at the returned age the lower count has verifiably
        # dropped below theta, so a step table placed here satisfies
        # pm(k, age) >= theta > pm(k - 1, age) at its own breakpoints.
        return n0, np.exp(hi), n_end

    # ---- distribution-level integrals -----------------------------------

    def _weighted_integrand(self, ks: np.ndarray, ms: np.ndarray, shift: float) -> np.ndarray:
        """sum_j w_j * f(k, m * K_j) for flat arrays ks >= 1, ms > 0.

        shift = 0 gives the occupancy integrand (probability of reaching the
        count threshold), shift = 1 the captured-mass integrand reweighted
        by K_j (caller divides by E[K]).
        """
        x = ms[:, None] * self.factors[None, :]
        low = special.gammainc(ks[:, None], x)
        a = (ks - self.inv_alpha + shift)[:, None]
        log_extra = ks[:, None] * np.log(x) - special.gammaln(ks)[:, None]
        log_extra += log_bump_integral(a, x, self.nodes)
        vals = np.minimum(low + np.exp(log_extra), 1.0)
        if shift:
            return (vals * self.factors[None, :]) @ self.factor_weights
        return vals @ self.factor_weights

    def _panel_sum(self, theta: float, shift: float) -> float:
        n0, ages, n_end = self.crossing_ages(theta)
        edges = np.concatenate(([0.0], ages, [self.T]))
        ks = np.arange(n0, n_end + 1)
        widths = np.diff(edges)
        gx, gw = gauss_legendre_01(self.panel_order)
        total = 0.0
        live = ks >= 1
        # panels with k = 0 integrate the constant 1 (optionally times E[K]/E[K])
        total += float(np.sum(widths[~live]))
        if np.any(live):
            w = widths[live]
            taus = edges[:-1][live][:, None] + w[:, None] * gx[None, :]
            kk = np.repeat(ks[live].astype(float), self.panel_order)
            ms = self.scale * taus.ravel()
            vals = self._weighted_integrand(kk, ms, shift)
            if shift:
                vals = vals / self.mean_factor
            total += float((vals.reshape(-1, self.panel_order) @ gw) @ w)
        return total / self.T

    def storage_fraction(self, theta: float) -> float:
        """P(estimate >= theta) under uniform ages; the cache occupancy."""
        return self._panel_sum(theta, 0.0)

    def hit_fraction(self, theta: float) -> float:
        """Fraction of requests captured by caching estimates above theta."""
        return self._panel_sum(theta, 1.0)

    def estimate_floor(self) -> float:
        """Smallest achievable estimate: zero requests at full age T."""
        return self._pm_scalar(0, self.T)

    def quantile(self, gamma: float) -> float:
        """theta with storage_fraction(theta) = gamma.

        Stops when |storage_fraction - gamma| < 1e-6 or the bracket is
        narrower than 1e-10 relative.
        """
        if not (0.0 < gamma < 1.0):
            raise ValueError(f"gamma must lie in (0, 1), got {gamma}")
        lo = self.estimate_floor()
        if self.factors.size == 1:
            hi = self.scale * gamma ** (-self.prior.alpha)
        else:
            hi = max(lo * 2.0, self.scale * self.mean_factor * gamma ** (-self.prior.alpha))
        while self.storage_fraction(hi) > gamma:
            hi *= 2.0
        return bracketed_root(
            lambda t: self.storage_fraction(t) - gamma,
            lo,
            hi,
            ytol=1e-6,
            xrtol=1e-10,
        )


class EstimateDistribution:
    """Distribution of the posterior-mean estimate for a live content.

    A live content of a shot process with duration T has age uniform on
    [0, T]; its request count given (volume, age) is Poisson.  This class
    exposes tail probabilities and quantiles of the induced estimate
    E[mu | N, tau], the quantities that calibrate cache admission
    thresholds.
    """

    def __init__(self, prior: ParetoPrior, shot_duration: float) -> None:
        self.prior = prior
        self.shot_duration = float(shot_duration)
        self._solver = _ThresholdSolver(prior, shot_duration)

    def tail(self, theta: float) -> float:
        if theta <= self._solver.estimate_floor():
            return 1.0
        return self._solver.storage_fraction(theta)

    def quantile(self, gamma: float) -> float:
        return self._solver.quantile(gamma)


def estimate_tail(theta: float, dist: EstimateDistribution) -> float:
    """P(posterior-mean estimate >= theta) for a uniformly aged content."""
    return dist.tail(theta)


def theta_quantile(gamma: float, dist: EstimateDistribution) -> float:
    """Upper gamma-quantile of the estimate distribution.

    The returned theta satisfies estimate_tail(theta, dist) = gamma to
    within 1e-6 (or a 1e-10 relative bracket).
    """
    return dist.quantile(gamma)
