import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hypflow import hyperbolic as hg
from hypflow.douady_earle import (
    BoundaryMap,
    barycenter_field,
    bm_eval,
    compose_boundary,
    de_extend_field,
    de_extend_point,
    make_test_boundary_map,
    mobius_trace,
    perturbations,
    quasisymmetry_constant,
)
from hypflow.errors import InputError, MonotonicityViolation, NonConvergence
from hypflow.mesh import mesh_generate

from strategies import disk_points, mobius_maps

TOL = 1e-10

# scripts/de_bruteforce_oracle.py: 400x400 grid scan of |F| over |y| < 0.5 then box
# refinement, independent 2048-node quadrature; boundary map theta + 0.2 sin 2 theta
BRUTE_FORCE = {
    0j: 0j,
    0.3 + 0.1j: 0.22974516549595705 + 0.1324948955000359j,
    -0.2 + 0.35j: -0.14435508031422611 + 0.4482349014937142j,
}


@pytest.fixture(scope="module")
def sine():
    return make_test_boundary_map("sine", eps=0.2, k=2)


class TestBoundaryMap:
    def test_identity_eval(self):
        bm = make_test_boundary_map("identity")
        assert bm_eval(bm, 1.0) == 1.0
        assert bm_eval(bm.sampled(), 1.0) == pytest.approx(1.0, abs=1e-14)

    def test_sine_node_value(self):
        bm = make_test_boundary_map("sine", M=512, eps=0.2, k=2).sampled()
        assert abs(bm_eval(bm, np.pi / 4) - (np.pi / 4 + 0.2)) <= (2 * np.pi / 512) ** 2

    def test_sine_between_nodes(self):
        bm = make_test_boundary_map("sine", M=512, eps=0.2, k=2)
        t = np.linspace(0, 2 * np.pi, 1001)
        assert np.abs(bm_eval(bm.sampled(), t) - bm_eval(bm, t)).max() <= (2 * np.pi / 512) ** 2

    def test_degree_one(self, sine):
        t = np.linspace(-3, 3, 50)
        assert np.allclose(bm_eval(sine.sampled(), t + 2 * np.pi), bm_eval(sine.sampled(), t) + 2 * np.pi)

    @given(st.floats(-10, 10), st.floats(1e-3, 2 * np.pi - 1e-3))
    def test_monotone(self, t1, gap):
        bm = make_test_boundary_map("sine", M=128, eps=0.3, k=3).sampled()
        assert bm_eval(bm, t1) < bm_eval(bm, t1 + gap)

    def test_generators(self):
        bm = make_test_boundary_map("identity", M=64)
        assert np.array_equal(bm.theta, bm.phi)
        s = make_test_boundary_map("sine", eps=0.2, k=2)
        assert np.allclose(s.phi, s.theta + 0.2 * np.sin(2 * s.theta))
        with pytest.raises(MonotonicityViolation):
            make_test_boundary_map("sine", eps=0.6, k=2)
        with pytest.raises(InputError):
            make_test_boundary_map("sine", eps=0.1, k=1.5)
        with pytest.raises(InputError):
            make_test_boundary_map("spiral")

    def test_validation(self):
        th = 2 * np.pi * np.arange(64) / 64
        with pytest.raises(InputError):
            BoundaryMap(th[:32], th[:32])
        with pytest.raises(InputError):
            BoundaryMap(th + 0.01 * th**2, th)
        bad = th.copy()
        bad[[3, 4]] = bad[[4, 3]]
        with pytest.raises(MonotonicityViolation):
            BoundaryMap(th, bad)
        # degree two wraps past 2 pi
        with pytest.raises(MonotonicityViolation):
            BoundaryMap(th, 2 * th)
        # MonotonicityViolation is an input error
        assert issubclass(MonotonicityViolation, InputError)

    def test_composed_order(self):
        a = make_test_boundary_map("sine", eps=0.2, k=2)
        b = make_test_boundary_map("mobius", a=0.3j, rot=0.1)
        c = make_test_boundary_map("composed", parts=[a, b])
        t = np.linspace(0, 6, 13)
        assert np.allclose(bm_eval(c, t), bm_eval(b, bm_eval(a, t)), atol=1e-14)
        assert np.allclose(bm_eval(compose_boundary(b, a), t), bm_eval(c, t), atol=1e-14)

    def test_perturbations_rejects_fold(self, sine):
        with pytest.raises(MonotonicityViolation):
            perturbations(sine, [0.3], k=3)


class TestBarycenterField:
    def test_identity_origin(self):
        assert barycenter_field(make_test_boundary_map("identity"), 0, 0) == pytest.approx(0, abs=1e-15)

    def test_identity_offset(self):
        # mean value property: the uniform average of phi_y over the circle is phi_y(0) = -y
        F = barycenter_field(make_test_boundary_map("identity"), 0, 0.3)
        assert F.real < 0
        assert F == pytest.approx(-0.3, abs=1e-14)

    def test_broadcasts(self, sine):
        y = np.array([0.0, 0.1j, -0.2])
        F = barycenter_field(sine, 0.1, y)
        assert F.shape == (3,)
        assert F[1] == pytest.approx(barycenter_field(sine, 0.1, 0.1j))

    @given(mobius_maps(0.6))
    @settings(max_examples=20)
    def test_root_of_mobius_trace(self, m):
        # the extension of an isometry is the isometry itself: y = m(x) zeroes the field
        bm = mobius_trace(m)
        x = 0.2 - 0.1j
        assert abs(barycenter_field(bm, x, m(x))) < 1e-12


class TestExtendPoint:
    @given(disk_points(0.9))
    @settings(max_examples=30)
    def test_identity(self, x):
        r = de_extend_point(make_test_boundary_map("identity"), x)
        assert abs(r.point - x) < TOL
        assert r.residual < TOL

    @given(mobius_maps(0.7))
    @settings(max_examples=20)
    def test_mobius_at_origin(self, m):
        r = de_extend_point(mobius_trace(m), 0)
        assert hg.hyp_distance(hg.DOMAIN, r.point, m(0)) < 1e-9

    @pytest.mark.parametrize("x", list(BRUTE_FORCE))
    def test_brute_force_fixture(self, sine, x):
        r = de_extend_point(sine, x)
        assert abs(r.point - BRUTE_FORCE[x]) < 1e-9
        assert r.residual < TOL
        assert r.iterations <= 100

    def test_start_point_irrelevant(self, sine):
        a = de_extend_point(sine, 0.3 + 0.1j).point
        b = de_extend_point(sine, 0.3 + 0.1j, y0=-0.8 + 0.1j).point
        assert abs(a - b) < 1e-9

    def test_iteration_cap(self, sine):
        with pytest.raises(NonConvergence):
            de_extend_point(sine, 0.5, max_iter=1, tol=1e-15)

    def test_rejects_exterior(self, sine):
        with pytest.raises(ValueError):
            de_extend_point(sine, 1.2)


def _random_mobius(rng, r=0.5):
    a = r * np.sqrt(rng.uniform()) * np.exp(2j * np.pi * rng.uniform())
    return hg.Mobius(a, rng.uniform(0, 2 * np.pi))


def test_equivariance(sine):
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(3):
        phi, psi = _random_mobius(rng), _random_mobius(rng)
        conj = make_test_boundary_map("composed", parts=[mobius_trace(psi), sine, mobius_trace(phi)])
        for x in 0.6 * np.sqrt(rng.uniform(size=20)) * np.exp(2j * np.pi * rng.uniform(size=20)):
            lhs = de_extend_point(conj, x).point
            rhs = phi(de_extend_point(sine, psi(x)).point)
            worst = max(worst, hg.hyp_distance(hg.DOMAIN, lhs, rhs))
    assert worst < 5 * TOL


def test_continuity_in_boundary_data(sine):
    y0 = de_extend_point(sine, 0).point
    devs = [abs(de_extend_point(p, 0).point - y0) for p in perturbations(sine, (0.1, 0.05, 0.025))]
    assert devs[0] > devs[1] > devs[2]


@pytest.fixture(scope="module")
def mesh():
    return mesh_generate(2.0, 0.2)


class TestExtendField:
    def test_identity(self, mesh):
        u, res = de_extend_field(make_test_boundary_map("identity"), mesh)
        assert np.abs(u.points - mesh.vertices).max() < TOL
        assert res.max() < TOL

    def test_mobius(self, mesh):
        m = hg.Mobius(0.4 - 0.2j, 1.0)
        u, _ = de_extend_field(mobius_trace(m), mesh)
        assert hg.hyp_distance(hg.DOMAIN, u.points, m(mesh.vertices)).max() < 1e-8

    def test_residuals(self, mesh, sine):
        u, res = de_extend_field(sine, mesh)
        assert res.max() < TOL
        assert np.all(np.abs(u.points) < 1)

    def test_serial_matches_threaded(self, mesh, sine):
        a, _ = de_extend_field(sine, mesh, chunk=16)
        b, _ = de_extend_field(sine, mesh, chunk=16, serial=True)
        assert np.array_equal(a.points, b.points)

    def test_space_carried(self, mesh):
        u, _ = de_extend_field(make_test_boundary_map("identity"), mesh, hg.Space(2.0))
        assert u.space.K == 2.0

    def test_nonconvergence_names_vertex(self, mesh, sine):
        with pytest.raises(NonConvergence) as info:
            de_extend_field(sine, mesh, tol=1e-15, max_iter=1)
        assert info.value.vertex is not None


class TestQuasisymmetry:
    def test_identity(self):
        assert quasisymmetry_constant(make_test_boundary_map("identity")) == 1.0

    def test_sine_tends_to_one(self):
        q = [quasisymmetry_constant(make_test_boundary_map("sine", eps=e, k=2)) for e in (0.1, 0.05, 0.025)]
        assert q[0] > q[1] > q[2] > 1.0
        assert q[1] < 1.25

    def test_mobius_refinement(self):
        bm = make_test_boundary_map("mobius", a=0.5)
        q1 = quasisymmetry_constant(bm)
        q2 = quasisymmetry_constant(bm, n_theta=2048, n_scales=12)
        assert q1 > 1.0 and np.isfinite(q1)
        assert q2 == pytest.approx(q1, rel=0.01)
