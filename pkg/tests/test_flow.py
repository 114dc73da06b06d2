import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hypflow import hyperbolic as hg
from hypflow.douady_earle import de_extend_field, make_test_boundary_map
from hypflow.errors import DegenerateMap
from hypflow.flow import (
    Diagnostics,
    FlowConfig,
    FlowState,
    assemble_linearized,
    estimate_report,
    flow_step,
    run_flow,
    solve_velocity,
)
from hypflow.mesh import MapField, SectionField, identity_map, lambda0_estimate, mesh_generate, tension_field


def bump_map(mesh, amp=0.3, radius=None, direction=1.0):
    radius = radius or mesh.R_max * 0.6
    r = mesh.ring_distance
    b = np.where(r < radius, (1 - (r / radius) ** 2) ** 3, 0.0) * amp
    x = mesh.vertices
    return MapField(hg.exp_map(hg.DOMAIN, x, hg.from_frame(hg.DOMAIN, x, b * direction)))


def random_section(mesh, u, rng):
    c = rng.normal(size=mesh.n_vertices) + 1j * rng.normal(size=mesh.n_vertices)
    c[mesh.boundary] = 0
    return SectionField(u, hg.from_frame(u.space, u.points, c))


def energy(mesh, u):
    e = mesh.edges
    d = hg.hyp_distance(u.space, u.points[e[:, 0]], u.points[e[:, 1]])
    return 0.5 * np.sum(mesh.weights * d**2)


@pytest.fixture(scope="module")
def small():
    return mesh_generate(1.5, 0.25)


@pytest.fixture(scope="module")
def bumped(small):
    return bump_map(small)


class TestConfig:
    def test_defaults(self):
        c = FlowConfig()
        assert c.dt == 0.01 and c.boundary == "fixed"

    @pytest.mark.parametrize("kw", [{"dt": 0}, {"dt": 0.2}, {"solver_tol": 1e-6},
                                    {"boundary": "free"}, {"preconditioner": "ilu"}])
    def test_rejects(self, kw):
        with pytest.raises(ValueError):
            FlowConfig(**kw)


class TestOperator:
    def test_symmetric(self, small, bumped, rng):
        op = assemble_linearized(small, bumped)
        for _ in range(10):
            v, w = random_section(small, bumped, rng), random_section(small, bumped, rng)
            lhs, rhs = op.inner(op.apply(v), w), op.inner(v, op.apply(w))
            assert abs(lhs - rhs) < 1e-10 * max(1.0, abs(lhs))

    def test_positive(self, small, bumped, rng):
        op = assemble_linearized(small, bumped)
        for _ in range(100):
            v = random_section(small, bumped, rng)
            assert op.inner(op.apply(v), v) > 0

    def test_boundary_rows_identity(self, small, bumped, rng):
        op = assemble_linearized(small, bumped)
        c = rng.normal(size=small.n_vertices) + 0j
        v = SectionField(bumped, hg.from_frame(bumped.space, bumped.points, c))
        assert np.allclose(op.apply(v).frame()[small.boundary], c[small.boundary])

    def test_constant_map_spectrum(self, small):
        u = MapField(np.full(small.n_vertices, 0.2 - 0.1j))
        lam = np.linalg.eigvals(assemble_linearized(small, u).dense()).real.min()
        assert lam == pytest.approx(lambda0_estimate(small), abs=1e-6)

    @pytest.mark.parametrize("K", [1.0, 2.0])
    def test_is_energy_hessian(self, small, K, rng):
        # second derivative of the edge energy along product geodesics s -> exp_u(s xi)
        sp = hg.Space(K)
        base = bump_map(small)
        u = MapField(base.points, sp)
        op = assemble_linearized(small, u)
        xi = random_section(small, u, rng)
        s = 1e-4

        def E(t):
            return energy(small, MapField(hg.exp_map(sp, u.points, t * xi.vectors), sp))

        fd = (E(s) - 2 * E(0) + E(-s)) / s**2
        x = op._to_dofs(xi.frame())
        assert x @ (op.H @ x) == pytest.approx(fd, rel=1e-6)

    def test_energy_gradient_is_tension(self, small, bumped):
        # dE(xi) = -<tension, xi> in the dual-area inner product
        T = tension_field(small, bumped)
        c = np.where(small.boundary, 0, 1 + 0.5j)
        xi = SectionField(bumped, hg.from_frame(bumped.space, bumped.points, c))
        s = 1e-6
        E = lambda t: energy(small, MapField(hg.exp_map(hg.DOMAIN, bumped.points, t * xi.vectors)))  # noqa: E731
        fd = (E(s) - E(-s)) / (2 * s)
        op = assemble_linearized(small, bumped)
        assert -op.inner(T, xi) == pytest.approx(fd, rel=1e-5)


class TestSolve:
    def test_zero_rhs(self, small, bumped):
        w = SectionField(bumped, np.zeros(small.n_vertices, dtype=complex))
        v = solve_velocity(small, bumped, w)
        assert np.all(v.vectors == 0)

    @pytest.mark.parametrize("pre", ["lu", "jacobi", "none"])
    def test_matches_dense(self, small, bumped, pre):
        T = tension_field(small, bumped)
        op = assemble_linearized(small, bumped)
        v = solve_velocity(small, bumped, T, 1e-12, preconditioner=pre)
        ref = np.linalg.solve(op.dense(), op._to_dofs(T.frame()))
        assert np.abs(op._to_dofs(v.frame()) - ref).max() < 1e-8
        assert np.all(v.vectors[small.boundary] == 0)

    def test_residual(self, small, bumped):
        T = tension_field(small, bumped)
        op = assemble_linearized(small, bumped)
        v = solve_velocity(small, bumped, T, 1e-10, op=op)
        r = SectionField(bumped, op.apply(v).vectors - T.vectors)
        assert np.sqrt(op.inner(r, r)) <= 1e-10 * np.sqrt(op.inner(T, T)) * 1.001


class TestStep:
    def test_boundary_unchanged(self, small, bumped):
        s = flow_step(FlowState(0.0, bumped, bumped), small, FlowConfig(dt=0.05))
        assert np.array_equal(s.u.points[small.boundary], bumped.points[small.boundary])
        assert s.t == 0.05

    @given(st.floats(0.005, 0.05), st.floats(0.05, 0.4))
    @settings(max_examples=10)
    def test_decreases_tension(self, dt, amp):
        m = mesh_generate(1.5, 0.25)
        u = bump_map(m, amp)
        s = flow_step(FlowState(0.0, u, u), m, FlowConfig(dt=dt))
        assert tension_field(m, s.u).norms().max() < tension_field(m, u).norms().max()

    def test_tension_contracts_by_one_minus_dt(self, small, bumped):
        # the linearized operator is the Hessian, so one Euler step scales the tension by 1 - dt
        dt = 1e-3
        T0 = tension_field(small, bumped).frame()
        s = flow_step(FlowState(0.0, bumped, bumped), small, FlowConfig(dt=dt))
        T1 = tension_field(small, s.u)
        # compare as magnitudes: frames at the moved points differ by O(dt) rotations
        ratio = np.abs(T1.frame())[small.interior] / np.abs(T0)[small.interior]
        assert np.median(ratio) == pytest.approx(1 - dt, abs=dt**2 * 50)

    def test_degenerate_guard(self, small):
        u = MapField(np.full(small.n_vertices, 0.1 + 0j))
        with pytest.raises(DegenerateMap):
            flow_step(FlowState(0.0, u, u), small, FlowConfig())

    def test_identity_nearly_fixed(self, mesh_r2):
        u = identity_map(mesh_r2)
        s = flow_step(FlowState(0.0, u, u), mesh_r2, FlowConfig(dt=0.01))
        assert hg.hyp_distance(hg.DOMAIN, s.u.points, u.points).max() < 0.01 * mesh_r2.h


class TestRun:
    def test_identity_converges_at_start(self, mesh_r2):
        from hypflow.verification import discretization_floor

        floor = discretization_floor(mesh_r2)
        u, diag = run_flow(mesh_r2, identity_map(mesh_r2), FlowConfig(initial_tol=floor))
        assert diag.converged and diag.converged_at == 0.0
        assert len(diag.records) == 1
        assert np.array_equal(u.points, mesh_r2.vertices)

    def test_records_and_dirichlet(self, small, bumped):
        u, diag = run_flow(small, bumped, FlowConfig(dt=0.05, t_end=1.0, p_norms=(2.0, 4.0)))
        assert len(diag.records) == 21
        assert set(Diagnostics.COLUMNS) <= set(diag.records[0])
        assert "tension_p4" in diag.records[0]
        assert np.array_equal(u.points[small.boundary], bumped.points[small.boundary])
        for r in diag.records:
            assert all(np.isfinite(v) for v in r.values())

    def test_decay_on_small_mesh(self, small, bumped):
        dt = 0.01
        _, diag = run_flow(small, bumped, FlowConfig(dt=dt, t_end=1.0))
        t, T = diag.column("t"), diag.column("tension_inf")
        # explicit Euler gives (1 - dt)^k exactly in the linear regime
        assert np.allclose(T / T[0], (1 - dt) ** np.round(t / dt), rtol=0.01)

    def test_reaches_converge_tol(self, small, bumped):
        _, diag = run_flow(small, bumped, FlowConfig(dt=0.1, t_end=30.0))
        assert diag.converged
        assert diag.records[-1]["tension_inf"] < 1e-9

    def test_snapshots(self, small, bumped):
        _, diag = run_flow(small, bumped, FlowConfig(dt=0.05, t_end=0.5, snapshot_times=(0.0, 0.25)))
        assert set(diag.snapshots) == {0.0, 0.25}
        assert len(diag.snapshots[0.25]) == small.n_vertices

    def test_step_halving(self, small, bumped):
        finals = {}
        for dt in (0.04, 0.02, 0.01):
            finals[dt], _ = run_flow(small, bumped, FlowConfig(dt=dt, t_end=0.8))
        d1 = hg.hyp_distance(hg.DOMAIN, finals[0.04].points, finals[0.02].points).max()
        d2 = hg.hyp_distance(hg.DOMAIN, finals[0.02].points, finals[0.01].points).max()
        assert d1 < 0.04 and d2 < 0.02
        assert d1 / d2 == pytest.approx(2.0, rel=0.1)

    def test_failure_carries_step(self, small):
        u = MapField(np.full(small.n_vertices, 0.1 + 0j))
        with pytest.raises(DegenerateMap, match="step 0"):
            run_flow(small, u, FlowConfig())

    def test_extension_flow_report(self, mesh_r2):
        u0, _ = de_extend_field(make_test_boundary_map("sine", eps=0.2, k=2), mesh_r2)
        _, diag = run_flow(mesh_r2, u0, FlowConfig(dt=0.02, t_end=2.6))
        rep = estimate_report(diag)
        assert rep["decay_slopes"]["tension_inf"] == pytest.approx(np.log(1 - 0.02) / 0.02, abs=1e-3)
        assert rep["tau"]["min"] >= 0.8 * rep["tau"]["initial"]
        assert all(rep["monotone"].values())
        assert rep["distance_constant"]["spread"] < 1.2


class TestReport:
    def test_exact_exponential(self):
        t = np.linspace(0, 3, 31)
        d = Diagnostics.from_columns(t=t, tension_inf=2 * np.exp(-t), tension_p2=np.exp(-t), du_inf=np.ones_like(t),
                                     tau=np.full_like(t, 0.7), dist_sup=1 - np.exp(-t), v_inf=2 * np.exp(-t))
        rep = estimate_report(d)
        assert rep["decay_slopes"]["tension_inf"] == pytest.approx(-1.0, abs=1e-6)
        assert rep["decay_slopes"]["tension_p2"] == pytest.approx(-1.0, abs=1e-6)
        assert rep["velocity_ratio"]["drift"] == pytest.approx(0.0, abs=1e-12)
        assert rep["velocity_ratio"]["median"] == pytest.approx(0.49)
        assert rep["velocity_ratio"]["bound_violation"] == 0.0
        assert rep["distance_constant"]["spread"] == pytest.approx(1.0)
        assert all(rep["monotone"].values())

    def test_flags_growth(self):
        t = np.linspace(0, 1, 11)
        d = Diagnostics.from_columns(t=t, tension_inf=np.exp(t), tension_p2=np.exp(t), du_inf=t, tau=1 - t / 2,
                                     dist_sup=t, v_inf=t)
        rep = estimate_report(d)
        assert not rep["monotone"]["tension_inf_decreasing"]
        assert rep["tau"]["min"] == 0.5

    def test_too_short(self):
        with pytest.raises(ValueError):
            estimate_report(Diagnostics.from_columns(t=[0, 1], tension_inf=[1, 1], tension_p2=[1, 1], du_inf=[1, 1],
                                                     tau=[1, 1], dist_sup=[0, 0], v_inf=[1, 1]))
