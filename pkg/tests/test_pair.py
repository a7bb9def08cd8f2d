import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import ndimage

from fnlab.core import PAPER, ModelParams, StabilityClass, single_equilibrium, single_hopf_points
from fnlab.errors import BoundaryPoint, InvalidParams, NoHopfInB, Unbounded
from fnlab.pair import (
    DrivePoint,
    Region,
    alpha_B,
    boundary_curves,
    gamma_star,
    hopf_curves_B,
    hopf_hopf_points,
    pair_eigenvalues,
    pair_equilibrium,
    pair_jacobian,
    pair_rhs,
    phase_lock_threshold,
    region_classify,
    region_map,
)

import oracles

A, B, EPS = PAPER.a, PAPER.b, PAPER.epsilon
I0B_05, I1B_05 = 1.0778645307353323, 10.01315146748689

drive_st = st.builds(DrivePoint, I=st.floats(0.0, 3.0), gamma=st.floats(0.0, 1.5))


def test_drive_point_validation():
    with pytest.raises(InvalidParams):
        DrivePoint(-0.1, 0.2)
    with pytest.raises(InvalidParams):
        DrivePoint(0.1, -0.2)
    with pytest.raises(InvalidParams):
        DrivePoint(math.nan, 0.2)


class TestEquilibrium:
    def test_decoupled_symmetric(self):
        eq = pair_equilibrium(PAPER, DrivePoint(A, 0.0))
        assert eq.yA_star == 0.0
        assert eq.yB_star == single_equilibrium(PAPER, 0.0).y

    def test_region3_example(self):
        eq = pair_equilibrium(PAPER, DrivePoint(1.7, 0.5))
        yA, yB = oracles.pair_eq_bisect(A, B, 1.7, 0.5)
        assert eq.yA_star == pytest.approx(yA, abs=1e-10)
        assert eq.yB_star == pytest.approx(yB, abs=1e-10)
        assert eq.sigma2 == pytest.approx(0.3023907631547679, abs=1e-12)
        assert (round(eq.yA_star, 4), round(eq.yB_star, 4)) == (1.1692, -0.3655)

    @given(drive_st)
    @settings(max_examples=1000, deadline=None)
    def test_residual_and_invariants(self, pt):
        eq = pair_equilibrium(PAPER, pt)
        assert np.linalg.norm(pair_rhs(PAPER, pt, eq.as_array())) < 1e-9
        assert eq.zA_star == pytest.approx(eq.yA_star / B, abs=1e-12)
        assert eq.zB_star == pytest.approx(eq.yB_star / B, abs=1e-12)
        assert eq.sigma1 == pytest.approx(1 - B * EPS - eq.yA_star ** 2, abs=1e-14)
        assert eq.sigma2 == pytest.approx(1 - B * EPS - pt.gamma - eq.yB_star ** 2, abs=1e-14)

    def test_uniqueness_of_cubic_roots(self):
        # both cubics have positive linear coefficient, so exactly one real root
        rng = np.random.default_rng(7)
        for I, g in zip(rng.uniform(0, 3, 1000), rng.uniform(0, 1.5, 1000)):
            eq = pair_equilibrium(PAPER, DrivePoint(I, g))
            for p, q, y in ((1 / B - 1, A - I, eq.yA_star), (1 / B - 1 + g, A - g * eq.yA_star, eq.yB_star)):
                xs = np.linspace(-10, 10, 4001)
                vals = xs ** 3 / 3 + p * xs + q
                assert np.count_nonzero(np.diff(np.sign(vals))) == 1
                assert abs(y ** 3 / 3 + p * y + q) < 1e-10

    @pytest.mark.parametrize("I,g,cls", [(0.2, 0.2, StabilityClass.ATTRACTING),
                                         (1.0, 1.1, StabilityClass.SADDLE),
                                         (1.2, 0.5, StabilityClass.REPELLING)])
    def test_stability_class(self, I, g, cls):
        assert pair_equilibrium(PAPER, DrivePoint(I, g)).stability is cls


class TestEigenvalues:
    def test_examples(self):
        pt = DrivePoint(1.0, 1.1)
        lam = pair_eigenvalues(PAPER, pair_equilibrium(PAPER, pt), pt)
        assert lam[0].real > 0 and lam[1].real > 0
        assert lam[2].real < 0 and lam[3].real < 0
        pt = DrivePoint(0.2, 0.2)
        assert all(l.real < 0 for l in pair_eigenvalues(PAPER, pair_equilibrium(PAPER, pt), pt))

    def test_block_vs_charpoly(self):
        rng = np.random.default_rng(11)
        for I, g in zip(rng.uniform(0, 3, 200), rng.uniform(0, 1.5, 200)):
            pt = DrivePoint(I, g)
            eq = pair_equilibrium(PAPER, pt)
            lam = pair_eigenvalues(PAPER, eq, pt)
            J = pair_jacobian(PAPER, pt, eq.as_array())
            assert oracles.match_multisets(lam, oracles.charpoly_roots(J)) < 1e-8

    def test_jacobian_matches_fd(self):
        rng = np.random.default_rng(3)
        for _ in range(100):
            pt = DrivePoint(rng.uniform(0, 3), rng.uniform(0, 1.5))
            x = rng.uniform(-2.5, 2.5, 4)
            J = oracles.fd_jacobian(lambda v: pair_rhs(PAPER, pt, v), x)
            assert np.abs(J - pair_jacobian(PAPER, pt, x)).max() < 1e-6

    @given(drive_st)
    @settings(max_examples=300, deadline=None)
    def test_sigma_sign_matches_real_part(self, pt):
        eq = pair_equilibrium(PAPER, pt)
        lam = pair_eigenvalues(PAPER, eq, pt)
        if abs(eq.sigma1) > 1e-6:
            assert np.sign(eq.sigma1) == np.sign(lam[0].real) == np.sign(lam[1].real)
        if abs(eq.sigma2) > 1e-6:
            assert np.sign(eq.sigma2) == np.sign(lam[2].real) == np.sign(lam[3].real)


class TestHopfB:
    def _oracle(self, g):
        s = math.sqrt(1 - g - B * EPS)
        yb = lambda I: oracles.pair_eq_bisect(A, B, I, g)[1]  # noqa: E731
        return (oracles.bisect(lambda I: yb(I) + s, 0.0, 5.0, tol=1e-12),
                oracles.bisect(lambda I: yb(I) - s, 5.0, 60.0, tol=1e-11))

    def test_gamma_half(self):
        lo, hi = hopf_curves_B(PAPER, 0.5)
        olo, ohi = self._oracle(0.5)
        assert lo == pytest.approx(olo, abs=1e-8)
        assert hi == pytest.approx(ohi, abs=1e-8)
        assert (lo, hi) == pytest.approx((I0B_05, I1B_05), abs=1e-12)

    def test_errors(self):
        with pytest.raises(NoHopfInB):
            hopf_curves_B(PAPER, 0.936)
        with pytest.raises(NoHopfInB):
            hopf_curves_B(PAPER, phase_lock_threshold(PAPER))
        with pytest.raises(Unbounded):
            hopf_curves_B(PAPER, 0.0)

    def test_sigma2_zero_random(self):
        rng = np.random.default_rng(5)
        for g in rng.uniform(0.05, 0.9, 100):
            for I in hopf_curves_B(PAPER, g):
                assert abs(pair_equilibrium(PAPER, DrivePoint(I, g)).sigma2) < 1e-9

    def test_curves_merge_and_continuous(self):
        gs = np.linspace(0.05, 0.936 - 1e-9, 2000)
        curves = np.array([hopf_curves_B(PAPER, g) for g in gs])
        lo, hi = curves[-1]
        assert abs(hi - lo) < 1e-3
        # no jumps: increments shrink with the grid spacing
        rel = np.abs(np.diff(curves, axis=0)) / np.abs(curves[1:])
        assert rel.max() < 0.05

    def test_alpha_B_matches_fd_normal_form(self):
        for g in (0.1, 0.343, 0.6):
            I0B = hopf_curves_B(PAPER, g)[0]
            eq = pair_equilibrium(PAPER, DrivePoint(I0B, g))
            f = oracles.fn_block_field(A, B, EPS, g * eq.yA_star, g)
            J = oracles.fd_jacobian(f, [eq.yB_star, eq.zB_star])
            fd = oracles.cubic_coefficient_fd(f, np.array([eq.yB_star, eq.zB_star]), J)
            assert fd == pytest.approx(alpha_B(PAPER, g), abs=1e-6)

    def test_alpha_B_at_zero_coupling_is_alpha(self):
        from fnlab.core import cubic_coefficient_single
        assert alpha_B(PAPER, 0.0) == cubic_coefficient_single(PAPER)


class TestGammaStar:
    def test_value_and_sign_change(self):
        gs = gamma_star(PAPER)
        assert gs == pytest.approx(0.343, abs=1e-12)
        assert gs == pytest.approx(oracles.bisect(lambda g: alpha_B(PAPER, g), 0.0, 0.9), abs=1e-10)
        assert alpha_B(PAPER, gs - 1e-3) > 0 > alpha_B(PAPER, gs + 1e-3)
        assert abs(alpha_B(PAPER, gs)) < 1e-15

    def test_eps_zero(self):
        assert gamma_star(ModelParams.unchecked(0.875, 0.8, 0.0)) == pytest.approx(0.375, abs=1e-15)


def test_phase_lock_threshold():
    assert phase_lock_threshold(PAPER) == 1 - 0.8 * 0.08
    assert phase_lock_threshold(PAPER) == pytest.approx(0.936, abs=1e-15)
    assert phase_lock_threshold(ModelParams.unchecked(0.875, 0.8, 0.0)) == 1.0
    assert phase_lock_threshold(ModelParams.unchecked(0.875, 0.0, 0.08)) == 1.0


class TestRegions:
    @pytest.mark.parametrize("I,g,r", [(0.2, 0.2, 1), (1.7, 0.1, 2), (1.7, 0.5, 3), (1.7, 1.1, 4),
                                       (1.0, 1.1, 5), (0.75, 0.3, 6), (1.2, 0.5, 7), (1.0, 0.08, 6)])
    def test_representative_points(self, I, g, r):
        assert region_classify(PAPER, DrivePoint(I, g)) == r

    def test_boundaries_raise(self):
        I0A, I1A = single_hopf_points(PAPER)
        for pt in (DrivePoint(I0A, 0.5), DrivePoint(I1A, 0.5), DrivePoint(1.0, 0.936),
                   DrivePoint(hopf_curves_B(PAPER, 0.2)[0], 0.2)):
            with pytest.raises(BoundaryPoint):
                region_classify(PAPER, pt)

    def test_istar_boundary(self):
        from fnlab.desing import fsn2_Istar
        with pytest.raises(BoundaryPoint):
            region_classify(PAPER, DrivePoint(fsn2_Istar(PAPER, 0.4), 0.4))

    def test_decoupled_B_quiescent(self):
        for I in np.linspace(0, 2.5, 501):
            eq = pair_equilibrium(PAPER, DrivePoint(I, 0.0))
            assert eq.sigma2 < 0 and eq.yB_star < 0
            try:
                r = region_classify(PAPER, DrivePoint(I, 0.0))
            except BoundaryPoint:
                continue
            assert r in (Region.BOTH_QUIESCENT, Region.A_SAT_B_QUIESCENT, Region.CANARD_MMO_CANDIDATE)

    def test_below_codim2_always_mmo_candidate(self):
        from fnlab.desing import codim2_gamma
        gc = codim2_gamma(PAPER)
        I0A, I1A = single_hopf_points(PAPER)
        for g in np.linspace(1e-3, gc - 1e-3, 25):
            for I in np.linspace(I0A + 1e-3, I1A - 1e-3, 25):
                assert region_classify(PAPER, DrivePoint(I, g)) == Region.CANARD_MMO_CANDIDATE

    @pytest.fixture(scope="class")
    @classmethod
    def grid(cls):
        Is = np.linspace(0, 2.5, 200)
        gs = np.linspace(0, 1.2, 200)
        return Is, gs, region_map(PAPER, Is, gs)

    def test_partition(self, grid):
        _, _, m = grid
        assert m.shape == (200, 200)
        assert set(np.unique(m)) <= set(range(8))
        assert set(np.unique(m)) >= set(range(1, 8))

    def test_topology(self, grid):
        Is, _, m = grid
        adj = set()
        for a_, b_ in ((m[:, :-1], m[:, 1:]), (m[:-1, :], m[1:, :])):
            for u, v in zip(a_.ravel(), b_.ravel()):
                if u != v and u and v:
                    adj.add(frozenset((int(u), int(v))))
        for pair in ({6, 1}, {6, 7}, {7, 5}):
            assert frozenset(pair) in adj
        # region 7 reaches the I1A line (it borders regions on the saturated side)
        I1A = single_hopf_points(PAPER)[1]
        k = np.searchsorted(Is, I1A)
        assert (m[:, k - 1] == 7).any()
        # each region is one connected piece
        for r in range(1, 8):
            _, n = ndimage.label(m == r)
            assert n == 1, f"region {r} has {n} components"

    def test_workers_identical(self):
        Is = np.linspace(0, 2.5, 40)
        gs = np.linspace(0, 1.2, 30)
        assert np.array_equal(region_map(PAPER, Is, gs), region_map(PAPER, Is, gs, workers=2))


class TestCurves:
    @pytest.fixture(scope="class")
    @classmethod
    def cs(cls):
        return boundary_curves(PAPER)

    def test_contents(self, cs):
        assert {"I0A", "I1A", "I0B", "I1B", "phase_lock", "Istar"} <= set(cs.curves)
        assert np.all(cs.curves["I0A"][:, 1] == single_hopf_points(PAPER)[0])
        assert cs.curves["I0A"][0, 1] == pytest.approx(0.331281, abs=1e-6)
        assert np.all(cs.curves["phase_lock"][:, 2] == pytest.approx(0.936))
        assert all(len(v) == 400 for v in cs.curves.values())
        assert {"HH", "GH"} <= set(cs.markers)

    def test_gh_marker(self, cs):
        I, g = cs.markers["GH"]
        assert g == gamma_star(PAPER)
        assert I == hopf_curves_B(PAPER, g)[0]

    def test_hh_markers_against_nested_bisection(self, cs):
        I0A, I1A = single_hopf_points(PAPER)
        expected = []
        for IA in (I0A, I1A):
            def s2(g):
                yA, yB = oracles.pair_eq_bisect(A, B, IA, g)
                return 1 - B * EPS - g - yB ** 2
            gs = np.linspace(1e-4, 0.936 - 1e-6, 400)
            v = np.array([s2(g) for g in gs])
            for k in np.nonzero(np.sign(v[:-1]) != np.sign(v[1:]))[0]:
                expected.append((IA, oracles.bisect(s2, gs[k], gs[k + 1], tol=1e-12)))
        found = hopf_hopf_points(PAPER)
        assert len(found) == len(expected) >= 1
        for (I, g), (Ie, ge) in zip(found, sorted(expected, key=lambda p: p[1])):
            assert I == Ie
            assert g == pytest.approx(ge, abs=1e-8)
        assert cs.markers["HH"] == found[0]

    def test_rows(self, cs):
        rows = list(cs.rows())
        assert sum(1 for r in rows if math.isnan(r[1])) == len(cs.markers)
