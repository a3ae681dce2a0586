import numpy as np
import pytest

from hessform import (
    Domain,
    InputError,
    PositiveSystem,
    SimplexPoint,
    Verdict,
    dt_hess_feasibility_3,
    dt_iterates,
    is_controller_hessenberg,
    unproject,
    verify_cover_certificate,
)

from conftest import (
    INFEASIBLE_DT_A,
    INFEASIBLE_DT_B,
    INFEASIBLE_DT_LIMIT,
    INFEASIBLE_DT_POINTS,
)


class TestPositiveSystem:
    def test_dt_requires_nonnegative(self):
        with pytest.raises(InputError):
            PositiveSystem(np.array([[-1.0, 1.0], [1.0, 0.0]]),
                           np.ones(2), np.ones(2), Domain.DT)

    def test_ct_accepts_metzler(self):
        sys = PositiveSystem(np.array([[-1.0, 1.0], [1.0, -2.0]]),
                             np.ones(2), np.zeros(2), Domain.CT)
        assert sys.domain is Domain.CT

    def test_negative_input_vector_rejected(self):
        with pytest.raises(InputError):
            PositiveSystem(np.eye(2), np.array([1.0, -1.0]), np.zeros(2),
                           Domain.DT)


class TestIsControllerHessenberg:
    def test_bidiagonal_true(self):
        A = np.diag([1.0, 2.0, 3.0]) + np.diag([1.0, 1.0], 1)
        sys = PositiveSystem(A, np.array([1.0, 0.0, 0.0]), np.zeros(3), Domain.DT)
        assert is_controller_hessenberg(sys)

    def test_known_pair_false(self):
        sys = PositiveSystem(INFEASIBLE_DT_A, INFEASIBLE_DT_B,
                             np.zeros(3), Domain.DT)
        assert not is_controller_hessenberg(sys)

    def test_scaled_axis_input_accepted(self):
        A = np.triu(np.ones((3, 3))) + np.diag([1.0, 1.0], -1)
        sys = PositiveSystem(A, np.array([2.0, 0.0, 0.0]), np.ones(3), Domain.DT)
        assert is_controller_hessenberg(sys)


class TestDtIterates:
    def test_reference_coordinates(self):
        trace = dt_iterates(INFEASIBLE_DT_A, INFEASIBLE_DT_B, 10)
        assert trace.K == 10
        for point, (ex, ey) in zip(trace.points, INFEASIBLE_DT_POINTS):
            assert point.x == pytest.approx(ex, abs=1e-6)
            assert point.y == pytest.approx(ey, abs=1e-6)
        assert trace.limit_point.x == pytest.approx(0.0, abs=1e-6)
        assert trace.limit_point.y == pytest.approx(INFEASIBLE_DT_LIMIT[1], abs=1e-4)

    def test_limit_against_dominant_eigenvector(self):
        # independent oracle: eigendecomposition of the matrix
        vals, vecs = np.linalg.eig(INFEASIBLE_DT_A)
        lead = np.argmax(vals.real)
        u = np.abs(vecs[:, lead].real)
        u = u / u.sum()
        trace = dt_iterates(INFEASIBLE_DT_A, INFEASIBLE_DT_B, 5)
        assert trace.limit_point.x == pytest.approx(u[1], abs=1e-9)
        assert trace.limit_point.y == pytest.approx(u[2], abs=1e-9)

    def test_identity_fixed_point(self):
        trace = dt_iterates(np.eye(3), np.array([1.0, 1.0, 1.0]), 6)
        for p in trace.points:
            assert (p.x, p.y) == pytest.approx((1 / 3, 1 / 3), abs=1e-12)
        assert (trace.limit_point.x, trace.limit_point.y) == \
            pytest.approx((1 / 3, 1 / 3), abs=1e-12)

    def test_points_match_independent_recomputation(self, rng):
        for _ in range(20):
            A = rng.uniform(0.0, 3.0, size=(3, 3))
            b = rng.uniform(0.1, 2.0, size=3)
            K = int(rng.integers(2, 9))
            trace = dt_iterates(A, b, K)
            x = b.astype(float)
            for k in range(K):
                p = x / x.sum()
                assert trace.points[k].x == pytest.approx(p[1], abs=1e-12)
                assert trace.points[k].y == pytest.approx(p[2], abs=1e-12)
                x = A @ x

    def test_scale_invariance(self, rng):
        A = rng.uniform(0.0, 2.0, size=(3, 3))
        b = rng.uniform(0.1, 1.0, size=3)
        t1 = dt_iterates(A, b, 8)
        t2 = dt_iterates(A, 7.5 * b, 8)
        for p, q in zip(t1.points, t2.points):
            assert p == q

    def test_degenerate_sum_rejected(self):
        A = np.zeros((3, 3))
        with pytest.raises(InputError):
            dt_iterates(A, np.array([1.0, 0.0, 0.0]), 3)


class TestDtHessFeasibility:
    def test_reference_pair_infeasible(self):
        decision = dt_hess_feasibility_3(INFEASIBLE_DT_A, INFEASIBLE_DT_B, K=50)
        assert decision.verdict is Verdict.INFEASIBLE
        cert = decision.certificate
        assert cert.v0_edge == "bottom"
        assert set(cert.contacts) == {"left", "hypotenuse"}
        trace = dt_iterates(INFEASIBLE_DT_A, INFEASIBLE_DT_B, 50)
        cloud = list(trace.points) + [trace.limit_point]
        assert verify_cover_certificate(cert, cert.v0, cloud, tol=1e-9)

    def test_diagonal_feasible(self):
        decision = dt_hess_feasibility_3(np.diag([3.0, 2.0, 1.0]),
                                         np.array([1.0, 1.0, 1.0]), K=40)
        assert decision.verdict is Verdict.FEASIBLE
        assert decision.witnesses is not None

    def test_identity_axis_feasible(self):
        decision = dt_hess_feasibility_3(np.eye(3), np.array([1.0, 0.0, 0.0]), K=5)
        assert decision.verdict is Verdict.FEASIBLE

    def test_infeasible_backed_by_random_falsification(self, rng):
        # no nonnegative completion (b | p | q) conjugates A into the orthant
        A, b = INFEASIBLE_DT_A, INFEASIBLE_DT_B
        decision = dt_hess_feasibility_3(A, b, K=50)
        assert decision.verdict is Verdict.INFEASIBLE
        found = 0
        for _ in range(200):
            p = rng.uniform(0.0, 1.0, size=3)
            q = rng.uniform(0.0, 1.0, size=3)
            T = np.column_stack([b, p, q])
            if abs(np.linalg.det(T)) <= 1e-6:
                continue
            H = np.linalg.solve(T, A @ T)
            if np.min(H) >= -1e-9:
                found += 1
        assert found == 0

    def test_feasible_witnesses_unproject_to_simplex(self):
        decision = dt_hess_feasibility_3(np.diag([3.0, 2.0, 1.0]),
                                         np.array([1.0, 1.0, 1.0]), K=40)
        p, q = decision.witnesses
        for w in (p, q):
            lifted = unproject(w)
            assert np.min(lifted) >= -1e-9
            assert lifted.sum() == pytest.approx(1.0, abs=1e-9)

    def test_lifted_2x2_certificate_never_infeasible(self, rng):
        # embedding a solvable 2x2 pair into a block-diagonal 3x3 pair keeps
        # it solvable, so the planar analysis must not contradict it
        from hessform import SimilarityCertificate, dt_hess_2

        done = 0
        trial = 0
        while done < 15 and trial < 200:
            trial += 1
            A2 = np.maximum(rng.uniform(-3.0, 5.0, size=(2, 2)), 0.0)
            b2 = rng.uniform(0.1, 2.0, size=2)
            if not isinstance(dt_hess_2(A2, b2), SimilarityCertificate):
                continue
            A3 = np.zeros((3, 3))
            A3[:2, :2] = A2
            A3[2, 2] = rng.uniform(0.0, 1.0)
            b3 = np.array([b2[0], b2[1], 0.0])
            try:
                decision = dt_hess_feasibility_3(A3, b3, K=30)
            except InputError:
                continue  # nilpotent block: iterates legitimately degenerate
            done += 1
            assert decision.verdict is not Verdict.INFEASIBLE
        assert done == 15
