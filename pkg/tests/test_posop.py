import json

import numpy as np
import pytest

from elcone.cones import ConeDims, DimensionError, PointPQ, Tolerances, build_J, in_L, in_M, slack_M
from elcone.generators import make_positive_operator, sample_operator
from elcone.linalg import min_eigenvalue
from elcone.posop import (
    AnalyzeConfig,
    ExtremeRayWitness,
    LambdaCert,
    MuCert,
    NonUnitVectorError,
    Operator,
    PairWitness,
    Status,
    analyze,
    exact_oracle,
    exact_oracle_L,
    exp_automorphism_check,
    find_lyapunov_violation,
    lambda_search,
    loewy_schneider_p1,
    lyapunov_like_check,
    monte_carlo_check,
    nc_cols_in_M,
    nc_column_sums,
    nc_mixed_column,
    nc_mixed_column_sampled,
    nc_rows_in_L,
    oracle_slack_parts,
    sample_comp_pair,
    sufficient_lambda,
    transfer_witness,
    witness_slack,
)
from elcone.sampling import RngStream

D21 = ConeDims(2, 1)
I3 = Operator(D21, np.eye(3))
BAD = Operator.blkdiag(np.eye(2), [[2.0]])          # maps (e_1, 1) to ((1,0),(2))
GOOD = Operator.blkdiag([[1.0, 1.0], [0.0, 1.0]], [[0.5]])
CHAIN_DIMS = [ConeDims(2, 1), ConeDims(2, 2), ConeDims(3, 2), ConeDims(1, 3)]


def brute_force_slack(A: Operator, n_angles: int = 20_000) -> float:
    """Smallest M-slack of A(e_i, u) over a dense set of unit u (exact for q = 1)."""
    q = A.dims.q
    if q == 1:
        U = np.array([[1.0], [-1.0]])
    elif q == 2:
        th = np.linspace(0, 2 * np.pi, n_angles, endpoint=False)
        U = np.column_stack([np.cos(th), np.sin(th)])
    else:
        raise ValueError("brute force only for q <= 2")
    p = A.dims.p
    best = np.inf
    for i in range(p):
        imgs = A.matrix[:, i] + U @ A.matrix[:, p:].T
        X = imgs[:, :p]
        sl = np.minimum(X.min(axis=1), X.sum(axis=1) - np.linalg.norm(imgs[:, p:], axis=1))
        best = min(best, sl.min())
    return float(best)


# -- Operator ---------------------------------------------------------------

def test_operator_blocks_tile():
    A = Operator(ConeDims(2, 3), np.arange(25.0).reshape(5, 5))
    rebuilt = np.block([[A.A11, A.A12], [A.A21, A.A22]])
    np.testing.assert_array_equal(rebuilt, A.matrix)
    assert A.A12.shape == (2, 3) and A.A21.shape == (3, 2)


def test_operator_rejects_bad_input():
    with pytest.raises(DimensionError):
        Operator(D21, np.eye(4))
    with pytest.raises(ValueError):
        Operator(D21, np.full((3, 3), np.nan))


# -- necessary conditions ---------------------------------------------------

@pytest.mark.parametrize("dims", [ConeDims(1, 1), ConeDims(2, 1), ConeDims(3, 4)])
def test_necessary_checks_identity_and_zero(dims):
    for M in (np.eye(dims.n), np.zeros((dims.n, dims.n))):
        A = Operator(dims, M)
        assert all(nc_rows_in_L(A)) and all(nc_cols_in_M(A))
        assert nc_column_sums(A).all()


def test_rows_in_L_example():
    A = Operator.from_blocks([[1, 1], [1, 1]], [[2], [0]], [[0, 0]], [[1]])
    assert nc_rows_in_L(A) == [False, True]


def test_rows_in_L_closed_form_matches_predicate(rng):
    for dims in CHAIN_DIMS:
        for _ in range(100):
            A = Operator(dims, rng.standard_normal((dims.n, dims.n)) + 1.0)
            direct = [in_L(PointPQ.from_flat(A.matrix[k], dims), dims) for k in range(dims.p)]
            assert nc_rows_in_L(A) == direct


def test_cols_in_M_example():
    A = Operator.from_blocks([[1, 0], [0, 1]], [[0], [0]], [[-3, 0]], [[1]])
    assert nc_cols_in_M(A) == [False, True]


def test_mixed_column_examples():
    for i in (1, 2):
        for u in ([1.0], [-1.0]):
            assert nc_mixed_column(I3, i, u)
    assert not nc_mixed_column(BAD, 1, [1.0])
    assert BAD.ray_image(1, [1.0]) == PointPQ([1, 0], [2])


def test_mixed_column_requires_unit_vector():
    with pytest.raises(NonUnitVectorError):
        nc_mixed_column(I3, 1, [0.5])


def test_mixed_column_at_oracle_witness():
    v = exact_oracle(BAD)
    w = v.certificate
    assert not nc_mixed_column(BAD, w.i, w.u)
    assert slack_M(BAD.ray_image(w.i, w.u), D21) == pytest.approx(w.slack, abs=1e-15)


def test_column_sums_example():
    sums = nc_column_sums(BAD)
    assert sums.shape == (2, 1)
    assert not sums[0, 0] and not sums[1, 0]


# -- PSD certificate --------------------------------------------------------

@pytest.mark.parametrize("scale,expected", [(1.0, 1.0), (2.0, 4.0), (0.0, 0.0)])
def test_sufficient_lambda_examples(scale, expected):
    A = Operator(D21, scale * np.eye(3))
    lam = sufficient_lambda(A)
    assert lam == pytest.approx(expected, abs=1e-9)
    J = build_J(D21)
    assert min_eigenvalue(A.matrix.T @ J @ A.matrix - lam * J) >= -1e-9


def test_sufficient_lambda_none_for_bad():
    assert sufficient_lambda(BAD) is None


def test_lambda_upper_bound_is_valid(rng):
    # no feasible lambda lies above the search interval
    for dims in CHAIN_DIMS:
        J = build_J(dims)
        for _ in range(50):
            A = make_positive_operator(dims, rng, balanced=True)
            res = lambda_search(A)
            S0 = A.matrix.T @ J @ A.matrix
            assert min_eigenvalue(S0 - (res.upper + 1e-6) * J) < 0


# -- Lorentz cone (p = 1) ---------------------------------------------------

def test_loewy_schneider_diag():
    A = Operator(ConeDims(1, 1), np.diag([2.0, 1.0]))
    v = loewy_schneider_p1(A)
    assert v.status is Status.POSITIVE
    cert = v.certificate
    assert isinstance(cert, MuCert) and cert.cone == "L"
    # oracle: A^T J A - mu J = diag(4 - mu, mu - 1); eigenvalues read off directly
    grid = np.linspace(0, 6, 6001)
    feasible = grid[(4 - grid >= -1e-9) & (grid - 1 >= -1e-9)]
    assert cert.mu_low == pytest.approx(feasible.min(), abs=1e-6)
    assert cert.mu_high == pytest.approx(feasible.max(), abs=1e-6)


def test_loewy_schneider_swap_infeasible():
    A = Operator(ConeDims(1, 1), [[0.0, 1.0], [1.0, 0.0]])
    # A^T J A = -J, so A^T J A - mu J = -(1 + mu) J, indefinite for every mu >= 0
    J = build_J(ConeDims(1, 1))
    np.testing.assert_array_equal(A.matrix.T @ J @ A.matrix, -J)
    v = loewy_schneider_p1(A)
    assert v.status is Status.NOT_POSITIVE
    assert isinstance(v.certificate, PairWitness)
    assert v.certificate.plus.slack < -1e-9 and v.certificate.minus.slack < -1e-9


def test_loewy_schneider_minus_identity():
    v = loewy_schneider_p1(Operator(ConeDims(1, 2), -np.eye(3)))
    assert v.status is Status.POSITIVE and v.certificate.cone == "-L"
    assert v.certificate.mu_best == pytest.approx(1.0, abs=1e-6)


def test_loewy_schneider_rank_one_is_unknown():
    A = Operator(ConeDims(1, 2), np.outer([1.0, 0.5, 0.0], [1.0, 0.0, 0.0]))
    v = loewy_schneider_p1(A)
    assert v.status is Status.UNKNOWN


def test_loewy_schneider_requires_p1():
    with pytest.raises(DimensionError):
        loewy_schneider_p1(I3)


# -- exact oracle -----------------------------------------------------------

def test_oracle_examples():
    assert exact_oracle(I3).status is Status.POSITIVE
    v = exact_oracle(BAD)
    assert v.status is Status.NOT_POSITIVE
    assert v.certificate.i == 1 and v.certificate.u == pytest.approx([1.0])
    assert exact_oracle(GOOD).status is Status.POSITIVE
    assert monte_carlo_check(GOOD, 100_000, seed=5) is None


@pytest.mark.parametrize("dims", [ConeDims(1, 1), ConeDims(2, 1), ConeDims(3, 1), ConeDims(1, 2),
                                  ConeDims(2, 2), ConeDims(3, 2)])
def test_oracle_matches_brute_force(dims, rng):
    for k in range(60):
        kind = ("gaussian", "perturbed", "positive")[k % 3]
        A = sample_operator(dims, rng, kind, scale=0.2)
        v = exact_oracle(A)
        bf = brute_force_slack(A)
        if dims.q == 1:
            assert v.slack == pytest.approx(bf, abs=1e-9)
        else:
            assert v.slack <= bf + 1e-12
            assert bf - v.slack <= 1e-6
        assert witness_slack(A, v.certificate) == pytest.approx(v.slack, abs=1e-12)


def test_oracle_lower_bounds_sampling_in_higher_q(rng):
    for dims in (ConeDims(2, 4), ConeDims(3, 6)):
        for _ in range(30):
            A = sample_operator(dims, rng, "perturbed", scale=0.3)
            v = exact_oracle(A)
            U = rng.standard_normal((5000, dims.q))
            U /= np.linalg.norm(U, axis=1, keepdims=True)
            sampled = min(slack_M(A.ray_image(i, u), dims) for i in range(1, dims.p + 1) for u in U[:300])
            assert v.slack <= sampled + 1e-12


def test_oracle_witness_minimality(rng):
    for dims in CHAIN_DIMS:
        for _ in range(60):
            A = sample_operator(dims, rng, "perturbed", scale=0.3)
            parts = oracle_slack_parts(A)
            v = exact_oracle(A)
            assert v.slack == pytest.approx(min(parts["row"] + parts["norm"]), abs=1e-8)
            for s, t in zip(parts["sum_lower_bound"], parts["trs_value_at_zero"]):
                if t is not None:
                    assert s >= 0


def test_oracle_trs_sign_agrees_with_norm_slack(rng):
    # when s_i >= ||w||, the norm clause holds exactly when the TRS value at 0 is >= 0
    for dims in CHAIN_DIMS:
        for _ in range(60):
            parts = oracle_slack_parts(sample_operator(dims, rng, "perturbed", scale=0.3))
            for m, t in zip(parts["norm"], parts["trs_value_at_zero"]):
                if t is not None and abs(t) > 1e-9 and abs(m) > 1e-9:
                    assert (t >= 0) == (m >= 0)


def test_oracle_scaling_invariance(rng):
    for dims in CHAIN_DIMS:
        for _ in range(40):
            A = sample_operator(dims, rng, "perturbed", scale=0.3)
            v1 = exact_oracle(A)
            if abs(v1.slack) < 1e-6:
                continue
            for c in (1e-3, 0.5, 7.0, 1e3):
                vc = exact_oracle(A.scaled(c))
                assert vc.status is v1.status
                assert vc.slack == pytest.approx(c * v1.slack, rel=1e-7, abs=1e-10)
                if v1.status is Status.NOT_POSITIVE and dims.q == 1:
                    assert vc.certificate.i == v1.certificate.i


def test_transpose_duality(rng):
    for dims in CHAIN_DIMS:
        for k in range(50):
            A = sample_operator(dims, rng, ("perturbed", "positive", "gaussian")[k % 3], scale=0.2)
            v = exact_oracle(A)
            mc = monte_carlo_check(A.T, 10_000, seed=k, cone="L")
            if v.positive:
                assert mc is None
            else:
                w = transfer_witness(A, v.certificate)
                assert in_L(w.z, dims)
                assert not in_L(w.image, dims)
                assert w.slack <= v.slack + 1e-12


def test_exact_oracle_L(rng):
    assert exact_oracle_L(Operator(D21, np.eye(3))).positive
    for dims in CHAIN_DIMS:
        for k in range(30):
            B = sample_operator(dims, rng, "gaussian")
            v = exact_oracle_L(B)
            if v.status is Status.NOT_POSITIVE:
                assert in_L(v.certificate.z, dims)
                assert v.certificate.slack < -1e-9
                np.testing.assert_allclose(v.certificate.image.flat(), B.matrix @ v.certificate.z.flat())
            else:
                assert monte_carlo_check(B, 5000, seed=k, cone="L") is None


# -- Monte Carlo, complementarity, Lyapunov-like, exp -----------------------

def test_monte_carlo_examples():
    assert monte_carlo_check(I3, 1000, seed=3) is None
    assert monte_carlo_check(Operator(D21, np.zeros((3, 3))), 1000) is None
    w = monte_carlo_check(BAD, 10_000, seed=0)
    assert w is not None and in_M(w.z, D21) and w.slack < -1e-8
    np.testing.assert_allclose(w.image.flat(), BAD.matrix @ w.z.flat())
    assert monte_carlo_check(BAD, 10_000, seed=0).z == w.z
    with pytest.raises(ValueError):
        monte_carlo_check(I3, 0)


def test_comp_pair_example():
    z, s = PointPQ([1, 0], [1]), PointPQ([1, 2], [-1])
    assert in_M(z, D21) and in_L(s, D21)
    assert z.flat() @ s.flat() == 0.0
    # z scaled stays complementary
    assert in_M(z.scaled(2), D21) and z.scaled(2).flat() @ s.flat() == 0.0


@pytest.mark.parametrize("dims", [ConeDims(1, 1), ConeDims(2, 1), ConeDims(4, 3)])
def test_sample_comp_pair_valid(dims):
    for seed in range(50):
        pair = sample_comp_pair(dims, seed)
        assert in_M(pair.z, dims) and in_L(pair.s, dims)
        assert abs(pair.z.flat() @ pair.s.flat()) <= 1e-9
    assert sample_comp_pair(dims, 7).z == sample_comp_pair(dims, 7).z


def test_lyapunov_examples():
    assert lyapunov_like_check(I3, 500)
    assert lyapunov_like_check(Operator(D21, 3.7 * np.eye(3)), 500)
    assert not lyapunov_like_check(BAD, 500)
    z, s = np.array([1.0, 0, 1]), np.array([1.0, 2, -1])
    assert (BAD.matrix @ z) @ s == -1.0
    pair = find_lyapunov_violation(BAD, 500)
    assert abs((BAD.matrix @ pair.z.flat()) @ pair.s.flat()) > 1e-9


def lyapunov_candidate(dims, rng):
    a = rng.uniform(-1, 1)
    S = rng.standard_normal((dims.q, dims.q))
    return Operator.blkdiag(a * np.eye(dims.p), a * np.eye(dims.q) + (S - S.T))


def test_exp_automorphism_examples(rng):
    Z = Operator(D21, np.zeros((3, 3)))
    assert all(v.positive for v in exp_automorphism_check(Z, [1.0, -2.0]))
    assert all(v.positive for v in exp_automorphism_check(I3, [1.0]))
    for _ in range(10):
        A = lyapunov_candidate(ConeDims(3, 2), rng)
        assert lyapunov_like_check(A, 1000)
        assert all(v.positive for v in exp_automorphism_check(A, [1.0, -1.0, 0.1, -0.1]))


def test_exp_automorphism_refutes_non_automorphism():
    v = exp_automorphism_check(BAD, [1.0])[0]
    assert v.status is Status.NOT_POSITIVE
    assert v.certificate.slack < -1e-9 and v.certificate.label.startswith("exp(")


# -- analyze ----------------------------------------------------------------

def test_analyze_identity():
    v = analyze(I3)
    assert v.status is Status.POSITIVE
    assert isinstance(v.certificate, LambdaCert) and v.certificate.lam == pytest.approx(1.0, abs=1e-9)


def test_analyze_bad_short_circuits():
    v = analyze(BAD)
    assert v.status is Status.NOT_POSITIVE
    assert isinstance(v.certificate, ExtremeRayWitness)
    assert v.certificate.i == 1 and v.certificate.u == pytest.approx([1.0])
    assert v.check("extreme_ray_oracle") is None
    assert not v.check("column_sums_in_M").passed


def test_analyze_good_via_oracle():
    v = analyze(GOOD)
    assert v.status is Status.POSITIVE
    thm = v.check("psd_lambda").passed
    assert exact_oracle(GOOD).positive or not thm


def test_analyze_p1_flags_hypothesis_and_runs_lorentz_test():
    v = analyze(Operator(ConeDims(1, 2), np.diag([2.0, 1.0, 0.5])))
    assert v.status is Status.POSITIVE
    assert "note" in v.check("rows_in_L").detail
    assert v.check("lorentz_mu_union").passed


def test_analyze_refutes_column_with_valid_witness():
    A = Operator.from_blocks([[1, 0], [0, 1]], [[0], [0]], [[-3, 0]], [[0]])
    v = analyze(A)
    assert v.status is Status.NOT_POSITIVE
    assert witness_slack(A, v.certificate) < -1e-9


def test_verdict_json_shape():
    obj = json.loads(json.dumps(analyze(BAD).to_json()))
    assert set(obj) == {"status", "certificate", "checks"}
    assert obj["status"] == "NotPositive"
    assert obj["certificate"]["image"] == {"p": 2, "q": 1, "x": [1.0, 0.0], "u": [2.0]}
    assert all(set(c) == {"name", "pass", "detail"} for c in obj["checks"])


def test_implication_chain(rng):
    cfg = AnalyzeConfig(mc_samples=2000)
    for dims in CHAIN_DIMS:
        for k in range(80):
            A = sample_operator(dims, rng, ("balanced", "positive", "perturbed", "gaussian")[k % 4])
            lam = lambda_search(A)
            oracle = exact_oracle(A)
            if lam.feasible and all(nc_rows_in_L(A)):
                assert oracle.positive
            if oracle.positive:
                assert all(nc_rows_in_L(A)) and all(nc_cols_in_M(A)) and nc_column_sums(A).all()
                assert nc_mixed_column_sampled(A, 1000, RngStream(k)).all()
                assert monte_carlo_check(A, 2000, seed=k) is None
            v = analyze(A, cfg)
            assert v.status is not Status.UNKNOWN
            assert v.positive == oracle.positive


def test_refutation_soundness(rng):
    for dims in CHAIN_DIMS:
        for _ in range(100):
            A = sample_operator(dims, rng, "perturbed", scale=0.3)
            v = analyze(A, AnalyzeConfig(mc_samples=500))
            if v.status is Status.NOT_POSITIVE:
                assert witness_slack(A, v.certificate) < -Tolerances().abs_tol
