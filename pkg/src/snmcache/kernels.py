"""Location kernels on the unit torus.

A kernel is a continuous, symmetric, 1-periodic function g of torus distance,
nonincreasing on [0, 1/2] and normalized so that int_0^1 g(d(x, y)) dy = 1
for every x.  Kernels couple content features X to cache locations Y: the
finite-L local request rate of a content is proportional to g(d(X, Y_l)),
and a cluster of caches covering the window [0, omega] sees the content
through the smoothed kernel K_omega(x) = int_0^omega g(d(x, y)) dy.

Families are registered by name; the quartic reference family
g(x) = 5 * (1 - 2x)^4 ships by default, together with the flat kernel
g == 1 (the uncorrelated special case).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .numerics import gauss_legendre_01

__all__ = [
    "KernelSpec",
    "register_kernel_family",
    "kernel_families",
    "smoothed_kernel",
    "torus_distance",
]

_FAMILIES: dict[str, Callable[[tuple[float, ...]], Callable[[np.ndarray], np.ndarray]]] = {}


def register_kernel_family(name: str, builder) -> None:
    """Register a kernel family: builder(params) -> g(distance array)."""
    _FAMILIES[name] = builder


def kernel_families() -> tuple[str, ...]:
    return tuple(sorted(_FAMILIES))


def _quartic(params: tuple[float, ...]) -> Callable[[np.ndarray], np.ndarray]:
    if params:
        raise ValueError("quartic kernel takes no parameters")
    return lambda d: 5.0 * (1.0 - 2.0 * np.asarray(d, dtype=float)) ** 4


def _flat(params: tuple[float, ...]) -> Callable[[np.ndarray], np.ndarray]:
    if params:
        raise ValueError("flat kernel takes no parameters")
    return lambda d: np.ones_like(np.asarray(d, dtype=float))


register_kernel_family("quartic", _quartic)
register_kernel_family("flat", _flat)


def torus_distance(x, y):
    """d(x, y) = min(|x - y|, 1 - |x - y|) on the unit torus."""
    d = np.abs(np.asarray(x, dtype=float) - np.asarray(y, dtype=float)) % 1.0
    return np.minimum(d, 1.0 - d)


@dataclass(frozen=True)
class KernelSpec:
    """A named, normalized torus kernel.

    Construction validates normalization (2 * int_0^{1/2} g = 1 within 1e-9)
    and monotonicity (nonincreasing on [0, 1/2]; the flat kernel is the
    boundary case).  Strictly increasing profiles are rejected.
    """

    family: str
    params: tuple[float, ...] = ()
    _g: Callable[[np.ndarray], np.ndarray] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        try:
            builder = _FAMILIES[self.family]
        except KeyError:
            raise ValueError(f"unknown kernel family {self.family!r}") from None
        g = builder(tuple(self.params))
        object.__setattr__(self, "_g", g)
        gx, gw = gauss_legendre_01(256)
        half = 0.5 * gx
        vals = np.asarray(g(half), dtype=float)
        mass = 2.0 * 0.5 * float(gw @ vals)
        if abs(mass - 1.0) > 1e-9:
            raise ValueError(f"kernel {self.family!r} not normalized: mass {mass!r}")
        grid = np.asarray(g(np.linspace(0.0, 0.5, 513)), dtype=float)
        if np.any(np.diff(grid) > 1e-12):
            raise ValueError(f"kernel {self.family!r} must be nonincreasing on [0, 1/2]")
        if np.any(grid < -1e-12):
            raise ValueError(f"kernel {self.family!r} must be nonnegative")

    def profile(self, distance):
        """g at torus distance(s) in [0, 1/2]."""
        return self._g(np.asarray(distance, dtype=float))

    def __call__(self, x, y):
        """g(d(x, y)) for torus coordinates x, y."""
        return self._g(torus_distance(x, y))

    @property
    def strictly_decreasing(self) -> bool:
        grid = np.asarray(self._g(np.linspace(0.0, 0.5, 513)), dtype=float)
        return bool(np.all(np.diff(grid) < 0))

    # decreasing-branch machinery used by the known-popularity analytics

    def at_zero(self) -> float:
        return float(self._g(np.array(0.0)))

    def at_half(self) -> float:
        return float(self._g(np.array(0.5)))

    def inverse(self, t: float) -> float:
        """Decreasing-branch inverse: sup{x in [0, 1/2] : g(x) >= t}.

        Clipped to 1/2 for t <= g(1/2) and to 0 for t > g(0).
        """
        if t <= self.at_half():
            return 0.5
        if t > self.at_zero():
            return 0.0
        lo, hi = 0.0, 0.5
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            if float(self._g(np.array(mid))) >= t:
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi)

    def mass_within(self, x: float) -> float:
        """G(x) = 2 * int_0^x g(t) dt, the kernel mass within distance x."""
        if x <= 0.0:
            return 0.0
        x = min(x, 0.5)
        gx, gw = gauss_legendre_01(256)
        t = x * gx
        return 2.0 * x * float(gw @ np.asarray(self._g(t), dtype=float))


def smoothed_kernel(kernel: KernelSpec, omega: float, x) -> np.ndarray | float:
    """K_omega(x) = int_0^omega g(d(x, y)) dy for torus coordinate(s) x.

    The cluster [0, omega] aggregates local popularities; the smoothed
    kernel is the effective coupling a content at x has to the whole
    cluster.  Its torus average is omega for any kernel.
    """
    if not (0.0 < omega <= 1.0):
        raise ValueError(f"omega must lie in (0, 1], got {omega}")
    x_arr = np.atleast_1d(np.asarray(x, dtype=float))
    gx, gw = gauss_legendre_01(64)
    out = np.empty(x_arr.shape)
    for i, xi in enumerate(x_arr):
        # panel split at the distance kinks y = xi + j/2 inside (0, omega)
        cuts = [0.0, omega]
        for j in (-2, -1, 0, 1, 2):
            c = xi + 0.5 * j
            if 0.0 < c < omega:
                cuts.append(c)
        cuts = sorted(set(cuts))
        total = 0.0
        for a, b in zip(cuts, cuts[1:]):
            y = a + (b - a) * gx
            total += (b - a) * float(gw @ np.asarray(kernel(xi, y), dtype=float))
        out[i] = total
    if np.ndim(x) == 0:
        return float(out[0])
    return out
