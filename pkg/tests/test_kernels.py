import numpy as np
import pytest

from snmcache.kernels import KernelSpec, kernel_families, smoothed_kernel, torus_distance


QUARTIC = KernelSpec("quartic")
FLAT = KernelSpec("flat")


def quartic_profile(x):
    return 5.0 * (1.0 - 2.0 * np.asarray(x, dtype=float)) ** 4


def test_registry_ships_reference_families():
    assert "quartic" in kernel_families()
    assert "flat" in kernel_families()
    with pytest.raises(ValueError):
        KernelSpec("no-such-family")


def test_torus_distance():
    assert torus_distance(0.1, 0.9) == pytest.approx(0.2)
    assert torus_distance(0.0, 0.5) == pytest.approx(0.5)
    assert torus_distance(0.25, 0.25) == 0.0
    # symmetry and 1-periodicity
    x = np.linspace(0, 1, 17)
    np.testing.assert_allclose(torus_distance(x, 0.3), torus_distance(0.3, x))
    np.testing.assert_allclose(torus_distance(x + 1.0, 0.3), torus_distance(x, 0.3),
                               atol=1e-12)


def test_quartic_profile_values():
    assert QUARTIC.profile(0.0) == pytest.approx(5.0)
    assert QUARTIC.profile(0.5) == pytest.approx(0.0)
    assert QUARTIC.profile(0.25) == pytest.approx(5.0 * 0.5 ** 4)
    assert QUARTIC.strictly_decreasing
    assert not FLAT.strictly_decreasing


def test_unnormalized_and_increasing_profiles_rejected():
    from snmcache.kernels import register_kernel_family

    register_kernel_family("_bad_mass", lambda p: (lambda d: 2.0 * np.ones_like(d)))
    with pytest.raises(ValueError, match="not normalized"):
        KernelSpec("_bad_mass")
    # mass 1 but increasing on [0, 1/2]
    register_kernel_family("_increasing", lambda p: (lambda d: 4.0 * np.asarray(d, dtype=float)))
    with pytest.raises(ValueError, match="nonincreasing"):
        KernelSpec("_increasing")


def test_smoothed_kernel_flat_at_full_width():
    x = np.linspace(0, 1, 21)
    vals = smoothed_kernel(QUARTIC, 1.0, x)
    np.testing.assert_allclose(vals, 1.0, atol=1e-12)


def test_smoothed_kernel_torus_average_is_omega():
    gx, gw = np.polynomial.legendre.leggauss(64)
    for omega in (0.5, 0.1, 0.01):
        # K(x) is smooth between the window-edge kinks in x
        cuts = sorted({0.0, omega, 0.5, min(0.5 + omega, 1.0), 1.0})
        total = 0.0
        for a, b in zip(cuts, cuts[1:]):
            nodes = a + (b - a) * 0.5 * (gx + 1.0)
            total += (b - a) * 0.5 * (gw @ smoothed_kernel(QUARTIC, omega, nodes))
        assert total == pytest.approx(omega, abs=1e-9)


def test_smoothed_kernel_matches_midpoint_oracle():
    # omega = 0.01, x = 0: midpoint rule with 1e5 subdivisions
    omega, x = 0.01, 0.0
    n = 10 ** 5
    y = (np.arange(n) + 0.5) * (omega / n)
    d = np.minimum(np.abs(x - y), 1.0 - np.abs(x - y))
    oracle = float(np.sum(quartic_profile(d))) * (omega / n)
    assert smoothed_kernel(QUARTIC, omega, x) == pytest.approx(oracle, abs=1e-6)


def test_smoothed_kernel_closed_form_quartic():
    # int_0^omega g(d(x, y)) dy with G(u) = 1 - (1 - 2u)^5 the mass within u:
    # for x inside [0, omega] with omega <= 1/2 the window splits at y = x.
    def closed(omega, x):
        G = lambda u: 1.0 - (1.0 - 2.0 * np.clip(u, 0.0, 0.5)) ** 5
        return 0.5 * (G(x) + G(omega - x))

    for omega in (0.5, 0.2, 0.05):
        for x in (0.0, 0.01, omega / 2, omega):
            assert smoothed_kernel(QUARTIC, omega, x) == pytest.approx(
                closed(omega, x), abs=1e-12)


def test_smoothed_kernel_rejects_bad_omega():
    for omega in (0.0, -0.1, 1.5):
        with pytest.raises(ValueError):
            smoothed_kernel(QUARTIC, omega, 0.3)


def test_inverse_and_mass_within():
    # quartic closed forms: G(x) = 1 - (1-2x)^5, ginv(t) = (1 - (t/5)^(1/4)) / 2
    for x in (0.0, 0.1, 0.25, 0.4, 0.5):
        assert QUARTIC.mass_within(x) == pytest.approx(1.0 - (1.0 - 2.0 * x) ** 5,
                                                       abs=1e-12)
    for t in (0.01, 0.5, 1.0, 3.0, 4.99):
        assert QUARTIC.inverse(t) == pytest.approx((1.0 - (t / 5.0) ** 0.25) / 2.0,
                                                   abs=1e-10)
    assert QUARTIC.inverse(0.0) == 0.5
    assert QUARTIC.inverse(5.0 + 1e-9) == 0.0
    assert FLAT.inverse(1.0) == 0.5
    assert FLAT.inverse(1.1) == 0.0
