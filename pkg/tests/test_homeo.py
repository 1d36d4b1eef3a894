import logging

import numpy as np
import pytest

from latsphere import (Convexified, DomainError, FiniteProbabilitySpace, LInfinity, Lorentz,
                       WeightedLp, build_direct_smooth, build_l1_to_X, build_X_to_Y,
                       entropy_max, linf_degeneracy_probe, mazur_map, mazur_upper_bound,
                       normalize, profile_modulus)
from latsphere.convexity import estimate_ucx_modulus
from latsphere.homeo import envelope_check, single_stage
from latsphere._sampling import sphere_points

from conftest import random_l1_sphere, random_space


def mazur_power(h, s):
    return np.sign(h) * np.abs(h) ** s


class TestL1ToX:
    def test_identity_over_l1(self, rng):
        space = random_space(rng, 6)
        pipe = build_l1_to_X(WeightedLp(space, 1), 1)
        h = random_l1_sphere(rng, space, 1000, signed=True)
        err = max(space.l1(pipe(x) - x) for x in h)
        assert err <= 1e-8

    @pytest.mark.parametrize("p", [1.5, 2, 3])
    def test_mazur_over_lp(self, p, rng):
        space = random_space(rng, 5)
        pipe = build_l1_to_X(WeightedLp(space, p), p)
        for h in random_l1_sphere(rng, space, 100, signed=True):
            np.testing.assert_allclose(pipe(h), mazur_power(h, 1 / p), atol=1e-7)

    def test_constant_input(self):
        space = FiniteProbabilitySpace.uniform(5)
        for norm, q in [(WeightedLp(space, 2), 2), (Lorentz.power_decay(space), 1)]:
            out = build_l1_to_X(norm, q)(np.ones(5))
            np.testing.assert_allclose(out, np.ones(5) / norm(np.ones(5)), rtol=1e-9)

    def test_sphere_preservation_and_inverse(self, rng):
        space = random_space(rng, 5)
        norm = Lorentz.power_decay(space)
        pipe = build_l1_to_X(norm, 1)
        assert pipe.stage_names[-1] == "u"
        back = pipe.inverse()
        for h in random_l1_sphere(rng, space, 30, signed=True):
            assert pipe.sphere_defect(h) <= 1e-8
            assert space.l1(back(pipe(h)) - h) <= 1e-6

    def test_size_fallback_warns(self, caplog):
        space = FiniteProbabilitySpace.uniform(14)
        with caplog.at_level(logging.WARNING):
            pipe = build_l1_to_X(Lorentz.power_decay(space), 1)
        assert pipe.warnings and "assuming" in pipe.warnings[0]
        assert pipe.describe()["warnings"] == pipe.warnings

    def test_rejects_q(self, half):
        with pytest.raises(DomainError):
            build_l1_to_X(WeightedLp(half, 2), 0.5)


class TestXToY:
    def test_cancellation(self, rng):
        space = random_space(rng, 5)
        for norm, q in [(WeightedLp(space, 1.5), 1.5), (Lorentz.power_decay(space), 1)]:
            pipe = build_X_to_Y(norm, q, norm, q)
            x = sphere_points(rng, norm, 100)
            err = max(norm(pipe(a) - a) for a in x)
            assert err <= 1e-6

    def test_round_trip(self, rng):
        space = random_space(rng, 5)
        nx, ny = WeightedLp(space, 1.5), Lorentz.power_decay(space)
        pipe = build_X_to_Y(nx, 1.5, ny, 1)
        for a in sphere_points(rng, nx, 50):
            assert nx(pipe.inverse()(pipe(a)) - a) <= 1e-5
            assert pipe.sphere_defect(a) <= 1e-8

    @pytest.mark.parametrize("p,r", [(1.5, 3), (3, 1.5), (2, 4)])
    def test_lp_to_lr(self, p, r, rng):
        space = random_space(rng, 6)
        nx, ny = WeightedLp(space, p), WeightedLp(space, r)
        pipe = build_X_to_Y(nx, p, ny, r)
        for a in sphere_points(rng, nx, 100):
            np.testing.assert_allclose(pipe(a), mazur_power(a, p / r), atol=1e-6)

    def test_space_mismatch(self, rng):
        with pytest.raises(DomainError):
            build_X_to_Y(WeightedLp(random_space(rng, 3), 2), 2,
                          WeightedLp(random_space(rng, 3), 2), 2)


class TestDirect:
    def test_examples(self, rng):
        space = random_space(rng, 5)
        same = build_direct_smooth(WeightedLp(space, 2), WeightedLp(space, 2))
        to4 = build_direct_smooth(WeightedLp(space, 2), WeightedLp(space, 4))
        for x in sphere_points(rng, WeightedLp(space, 2), 50):
            np.testing.assert_allclose(same(x), x, atol=1e-7)
            np.testing.assert_allclose(to4(x), mazur_power(x, 0.5), atol=1e-6)
            assert to4.sphere_defect(x) <= 1e-8
        assert not same.warnings

    def test_degenerate_warning(self, rng):
        space = random_space(rng, 3)
        pipe = build_direct_smooth(LInfinity(space), WeightedLp(space, 2))
        assert pipe.warnings


class TestProfile:
    def test_identity_below_edges(self, rng):
        space = random_space(rng, 5)
        pipe = build_l1_to_X(WeightedLp(space, 1), 1)
        prof = profile_modulus(pipe, 400, [1e-3, 1e-2, 0.1, 1.0], seed=0)
        maxima = [m for _, m, _ in prof.bins]
        assert all(m <= t * (1 + 1e-7) for t, m, _ in prof.bins)
        assert maxima == sorted(maxima)

    def test_mazur_envelope(self, rng):
        space = random_space(rng, 5)
        base = WeightedLp(space, 1)
        conv = Convexified(base, 2)
        pipe = single_stage("G_2", lambda f: mazur_map(f, 2), conv, base)
        edges = [1e-3, 1e-2, 0.1, 0.5, 0.9]
        prof = profile_modulus(pipe, 2000, edges, seed=1)
        for t, m, _ in prof.bins:
            assert m <= mazur_upper_bound(t, 2) + 1e-12

    def test_empty_bins_absent(self, rng):
        space = random_space(rng, 4)
        pipe = build_l1_to_X(WeightedLp(space, 1), 1)
        prof = profile_modulus(pipe, 100, [1e-9, 1e-3, 10.0], seed=0, lo=1e-2, hi=0.5)
        assert [t for t, _, _ in prof.bins] == [10.0]

    def test_envelope_soft_check(self, rng):
        space = random_space(rng, 4)
        norm = WeightedLp(space, 1.5)
        pipe = build_l1_to_X(norm, 1.5)
        curve = estimate_ucx_modulus(Convexified(norm, 2), [0.05, 0.1, 0.3, 0.6, 1.0, 1.5, 2.0],
                                     n_pairs=500, seed=0)
        prof = profile_modulus(pipe, 300, [0.01, 0.1, 0.5], seed=0)
        assert isinstance(envelope_check(prof, curve), list)

    def test_bad_edges(self, half):
        pipe = build_l1_to_X(WeightedLp(half, 1), 1)
        with pytest.raises(DomainError):
            profile_modulus(pipe, 10, [0.1, 0.05])


class TestDegeneracy:
    @staticmethod
    def grid_oracle(h, step=1e-4):
        # sup-norm ball at two atoms: brute force over [0, 1]^2, zero off the support
        t = np.arange(step, 1 + step / 2, step)
        f = np.zeros(2)
        for i in range(2):
            if h[i] > 0:
                f[i] = t[np.argmax(h[i] * np.log(t))]
        return f

    @pytest.mark.parametrize("eps", [1e-2, 1e-3, 1e-4])
    def test_gap(self, eps):
        (a, b), gap = linf_degeneracy_probe(2, eps)
        space = FiniteProbabilitySpace.uniform(2)
        assert space.l1(a - b) <= eps * (1 + 1e-9)
        assert abs(gap - 1) <= 1e-9
        fa, fb = self.grid_oracle(a), self.grid_oracle(b)
        assert np.abs(fa - fb).max() >= 1 - 1e-6
        np.testing.assert_allclose(entropy_max(LInfinity(space), a).maximizer, fa, atol=1e-12)

    def test_zero_eps(self):
        _, gap = linf_degeneracy_probe(3, 0.0)
        assert gap == 0.0
