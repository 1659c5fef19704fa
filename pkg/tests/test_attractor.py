import numpy as np
import pytest

from fraclattice.attractor import (
    absorbing_radius,
    absorption_check,
    contraction_experiment,
    forward_stationarity_check,
    pullback_experiment,
    random_equilibrium,
    sphere_starts,
)
from fraclattice.errors import InsufficientHorizonError
from fraclattice.fbm import TimeGrid
from fraclattice.lattice import (
    Boundary,
    LatticeParams,
    LatticeVector,
    NonlinearitySpec,
    laplacian_modes,
)
from fraclattice.noise import build_noise_field
from fraclattice.solver import SolverConfig

CUBIC = NonlinearitySpec.cubic(1.0, 1.0)
LINEAR = NonlinearitySpec.linear(1.0)
N = 16
DT = 1e-2


def make_params(boundary=Boundary.ZERO_PADDING, sigma=None, forcing=None):
    return LatticeParams(
        coupling=1.0,
        damping=1.0,
        forcing=LatticeVector.from_support(N, forcing if forcing is not None else {0: 0.3}),
        noise_amp=LatticeVector.from_support(
            N, sigma if sigma is not None else {0: 0.8, 1: 0.5, -2: 0.4}
        ),
        half_width=N,
        boundary=boundary,
    )


@pytest.fixture(scope="module")
def field():
    grid = TimeGrid(dt=DT, n_steps=round(30 / DT), i_start=-round(24 / DT))  # [-24, 6]
    return build_noise_field(make_params(), grid, 314)


@pytest.fixture(scope="module")
def zero_field():
    grid = TimeGrid(dt=DT, n_steps=round(30 / DT), i_start=-round(24 / DT))
    return build_noise_field(make_params(sigma={}, forcing={}), grid, 1)


CFG = SolverConfig(dt=DT, t_end=5.0)


class TestContraction:
    def test_cubic_pair_contracts(self, field):
        u0 = LatticeVector.from_support(N, {0: 2.0, 1: -1.0})
        w0 = LatticeVector.from_support(N, {0: -1.5, -3: 0.4})
        rep = contraction_experiment(u0, w0, field, make_params(), CUBIC, CFG)
        assert rep.passed  # the pass criterion uses the guaranteed rate
        assert rep.fitted_slope <= -2.0  # observed rate reaches damping + a
        d = rep.distances
        assert ((np.diff(d) <= 1e-9) | (d[1:] < 1e-12)).all()

    def test_identical_starts_flagged_degenerate(self, field):
        u0 = LatticeVector.from_support(N, {0: 2.0})
        rep = contraction_experiment(u0, u0, field, make_params(), CUBIC, CFG)
        assert rep.degenerate and not rep.passed
        assert (rep.distances == 0.0).all()

    def test_linear_slope_matches_slowest_mode(self, field):
        # periodic linear pair differing in the constant mode decays at
        # exactly damping + a; the fit must land within 1%
        params = make_params(boundary=Boundary.PERIODIC)
        u0 = LatticeVector.from_support(N, {0: 2.0, 3: -1.0})
        w0 = LatticeVector(u0.values + 2.0 / np.sqrt(2 * N + 1))
        rep = contraction_experiment(u0, w0, field, params, LINEAR, CFG)
        assert rep.passed
        assert abs(rep.fitted_slope + 2.0) <= 0.02


class TestSphereStarts:
    def test_radius_and_count(self):
        pts = sphere_starts(3.0, 7, N, seed=1)
        assert pts.shape == (7, 2 * N + 1)
        np.testing.assert_allclose(np.linalg.norm(pts, axis=1), 3.0, rtol=1e-12)

    def test_zero_radius(self):
        assert np.all(sphere_starts(0.0, 4, N, seed=1) == 0.0)


class TestPullback:
    def test_diameters_shrink_under_bound(self, field):
        rep = pullback_experiment(10.0, 16, field, make_params(), CUBIC, CFG,
                                  horizons=[1, 2, 4, 8], seed=5)
        assert rep.passed
        assert (np.diff(rep.diameters) < 0).all()

    def test_single_start_has_zero_diameter(self, field):
        rep = pullback_experiment(5.0, 1, field, make_params(), CUBIC, CFG,
                                  horizons=[1, 2], seed=5)
        assert (rep.diameters == 0.0).all()

    def test_zero_radius_has_zero_diameter(self, field):
        rep = pullback_experiment(0.0, 8, field, make_params(), CUBIC, CFG,
                                  horizons=[1, 2], seed=5)
        assert rep.start_diameter == 0.0
        assert (rep.diameters == 0.0).all()

    def test_hausdorff_reported_against_equilibrium(self, field):
        eq = random_equilibrium(field, make_params(), CUBIC, CFG, tol=1e-6)
        rep = pullback_experiment(10.0, 8, field, make_params(), CUBIC, CFG,
                                  horizons=[1, 4, 8], seed=5, equilibrium=eq.u0)
        assert rep.hausdorff is not None
        assert rep.hausdorff[-1] <= 1e-5


class TestRandomEquilibrium:
    def test_zero_field_zero_forcing_gives_origin(self, zero_field):
        eq = random_equilibrium(zero_field, make_params(sigma={}, forcing={}),
                                CUBIC, CFG, tol=1e-6)
        assert eq.u0.norm() == 0.0

    def test_linear_deterministic_case_matches_spectral_solution(self):
        # no noise, constant forcing: the equilibrium solves
        # (coupling A + (damping + a) I) u = g, diagonal in the mode basis
        params = make_params(boundary=Boundary.PERIODIC, sigma={},
                             forcing={0: 0.3, 2: -0.1})
        grid = TimeGrid(dt=DT, n_steps=round(30 / DT), i_start=-round(24 / DT))
        f = build_noise_field(params, grid, 1)
        eq = random_equilibrium(f, params, LINEAR, CFG, tol=1e-8)
        eigs, modes = laplacian_modes(N)
        target = modes @ (modes.T @ params.forcing.values / (2.0 + eigs))
        np.testing.assert_allclose(eq.u0.values, target, rtol=0.0, atol=1e-7)

    def test_start_independence(self, field):
        eq1 = random_equilibrium(field, make_params(), CUBIC, CFG, tol=1e-6)
        eq2 = random_equilibrium(
            field, make_params(), CUBIC, CFG, tol=1e-6,
            start=LatticeVector.from_support(N, {2: 10.0}),
            verify_start=LatticeVector.from_support(N, {-1: -7.0}),
        )
        gap = float(np.linalg.norm(eq1.u0.values - eq2.u0.values))
        assert gap <= 2e-6
        assert eq1.cauchy_gap <= 1e-6 and eq1.start_gap <= 2e-6

    def test_horizon_exhaustion_raises(self):
        grid = TimeGrid(dt=DT, n_steps=round(3 / DT), i_start=-round(2 / DT))
        f = build_noise_field(make_params(), grid, 3)
        with pytest.raises(InsufficientHorizonError):
            random_equilibrium(f, make_params(), CUBIC, CFG, tol=1e-12)


class TestForwardStationarity:
    def test_residuals_within_tolerance(self, field):
        params = make_params()
        eq = random_equilibrium(field, params, CUBIC, CFG, tol=1e-6)
        rep = forward_stationarity_check(eq, field, params, CUBIC, CFG, times=[1.0, 2.0])
        assert rep.passed
        assert (rep.residuals <= 5e-6).all()

    def test_forward_attraction_envelope(self, field):
        # every start falls onto the moving equilibrium at least as fast
        # as e^(-damping t), with the discretization cushion
        from fraclattice.attractor import _pullback_point
        from fraclattice.noise import shift_noise
        from fraclattice.solver import cocycle_map

        params = make_params()
        eq = random_equilibrium(field, params, CUBIC, CFG, tol=1e-8)
        u0 = LatticeVector.from_support(N, {0: 3.0, -2: 1.0})
        d0 = float(np.linalg.norm(u0.values - eq.u0.values))
        for t in (1.0, 2.0, 4.0):
            forward = cocycle_map(t, field, u0, params, CUBIC, CFG)
            eq_shifted = _pullback_point(
                eq.horizon, shift_noise(field, t), LatticeVector.zeros(N),
                params, CUBIC, CFG,
            )
            gap = float(np.linalg.norm(forward.values - eq_shifted.values))
            assert gap <= d0 * np.exp(-params.damping * t) * (1.0 + 5.0 * DT) + 1e-7


class TestAbsorbingRadius:
    def test_zero_field_zero_forcing_is_exactly_one(self, zero_field):
        params = make_params(sigma={}, forcing={})
        rad = absorbing_radius(zero_field, params, CUBIC, t_past=2.0, ou_tail_tol=1.0)
        assert rad.value == 1.0

    def test_at_least_one_and_monotone_in_depth(self, field):
        params = make_params()
        shallow = absorbing_radius(field, params, CUBIC, t_past=2.0, ou_tail_tol=1e-2)
        deep = absorbing_radius(field, params, CUBIC, t_past=4.0, ou_tail_tol=1e-2)
        assert shallow.value >= 1.0
        assert deep.value + 1e-12 >= shallow.value
        assert abs(deep.value - shallow.value) <= shallow.tail_bound

    def test_demands_enough_past(self, field):
        with pytest.raises(InsufficientHorizonError):
            absorbing_radius(field, make_params(), CUBIC, t_past=100.0)


class TestAbsorption:
    def test_bound_holds_from_entry_horizon(self, field):
        params = make_params()
        rep = absorption_check(10.0, field, params, CUBIC, CFG,
                               horizons=[0.5, 1, 2, 4], n_starts=8, seed=2,
                               t_past=4.0, ou_tail_tol=1e-2)
        assert rep.passed
        assert rep.radius.value >= 1.0
        assert rep.entry_horizon is not None
        held = rep.horizons >= rep.entry_horizon
        assert (rep.max_norms[held] <= rep.bound).all()

    def test_entry_horizon_monotone_in_ball_size(self, field):
        params = make_params()
        horizons = [0.05, 0.1, 0.2, 0.5, 1, 2, 4]
        entries = []
        for radius in (0.5, 5.0, 30.0):
            rep = absorption_check(radius, field, params, CUBIC, CFG,
                                   horizons=horizons, n_starts=8, seed=2,
                                   t_past=4.0, ou_tail_tol=1e-2)
            assert rep.passed
            entries.append(rep.entry_horizon)
        assert entries == sorted(entries)
        assert entries[0] < entries[-1]
