import itertools
import json
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fixtures import clamped_geometric_count
from privacy_frontier.errors import ParameterOutOfRange, PopulationTooLarge, RangeTooLarge
from privacy_frontier.frontier import rr_epsilon_of_rho
from privacy_frontier.histogram import DataDomain, QueryWorkload
from privacy_frontier.semantics import (
    ADD_REMOVE,
    SUBSTITUTE,
    DataGeneratingProcess,
    DpCertificate,
    all_secret_pair_bayes_factors,
    certify_discrete_mechanism,
    certify_laplace_mechanism,
    certify_population_mechanism,
    constant_mechanism,
    identity_publication,
    lift_histogram_mechanism,
    max_log_ratio,
    neighbor_pairs,
    post_process,
    rr_bayes_factor,
    rr_count_mechanism,
    rr_population_mechanism,
    secret_pair_bayes_factor,
)


class TestCertification:
    @pytest.mark.parametrize("rho", [0.2, 0.5, 0.8])
    @pytest.mark.parametrize("max_n", [1, 4])
    def test_randomized_response(self, rho, max_n):
        cert = certify_discrete_mechanism(
            rr_count_mechanism(rho), DataDomain(2), max_n, claimed_epsilon=rr_epsilon_of_rho(rho), neighbors=SUBSTITUTE
        )
        assert abs(cert.measured_max_log_ratio - math.log((1 + rho) / (1 - rho))) <= 1e-12
        assert cert.passes and cert.exhaustive

    def test_single_bit_by_hand(self):
        # Four (input, output) combinations; the worst ratio is P(report 1 | 1) / P(report 1 | 0).
        rho, mu = 0.5, 0.5
        p = {(v, o): (rho * (o == v) + (1 - rho) * (mu if o else 1 - mu)) for v in (0, 1) for o in (0, 1)}
        by_hand = max(abs(math.log(p[(1, o)] / p[(0, o)])) for o in (0, 1))
        cert = certify_discrete_mechanism(rr_count_mechanism(rho), DataDomain(2), 1, neighbors=SUBSTITUTE)
        assert cert.measured_max_log_ratio == pytest.approx(by_hand, abs=1e-12)
        assert by_hand == pytest.approx(math.log(3), abs=1e-15)

    def test_constant_is_zero(self):
        cert = certify_discrete_mechanism(constant_mechanism(), DataDomain(3), 3, claimed_epsilon=1e-6)
        assert cert.measured_max_log_ratio == 0.0
        assert cert.passes

    @pytest.mark.parametrize("claimed", [0.1, 10.0, 1e6])
    def test_identity_publication_fails(self, claimed):
        cert = certify_discrete_mechanism(identity_publication(0), DataDomain(2), 2, claimed_epsilon=claimed)
        assert cert.measured_max_log_ratio == math.inf
        assert not cert.passes
        assert json.loads(cert.to_json())["measured_max_log_ratio"] == "inf"

    @pytest.mark.parametrize("eps", [0.1, 0.7, 2.0])
    def test_geometric_fixture(self, eps):
        cert = certify_discrete_mechanism(clamped_geometric_count(eps), DataDomain(3), 4, claimed_epsilon=eps)
        assert cert.measured_max_log_ratio == pytest.approx(eps, abs=1e-12)
        assert cert.passes

    def test_size_caps(self):
        with pytest.raises(RangeTooLarge):
            certify_discrete_mechanism(constant_mechanism(), DataDomain(5), 1)
        with pytest.raises(RangeTooLarge):
            certify_discrete_mechanism(constant_mechanism(), DataDomain(2), 5)
        with pytest.raises(RangeTooLarge):
            certify_discrete_mechanism(lambda x: {i: 1e-6 for i in range(1_000_000)}, DataDomain(1), 1)

    def test_rejects_improper_distribution(self):
        with pytest.raises(ParameterOutOfRange):
            certify_discrete_mechanism(lambda x: {0: 0.5}, DataDomain(1), 1)

    def test_neighbor_pairs(self):
        add = list(neighbor_pairs(DataDomain(2), 2, ADD_REMOVE))
        assert all(sum(abs(a - b) for a, b in zip(x, y)) == 1 for x, y in add)
        # Every histogram with fewer than 2 records gains a record in either cell.
        assert len(add) == 3 * 2
        sub = list(neighbor_pairs(DataDomain(2), 2, SUBSTITUTE))
        assert sorted(sub) == [((0, 1), (1, 0)), ((0, 2), (1, 1)), ((1, 1), (2, 0))]
        with pytest.raises(ParameterOutOfRange):
            list(neighbor_pairs(DataDomain(2), 2, "swap"))

    def test_population_certification(self):
        rho, mu = 0.5, 0.5
        cert = certify_population_mechanism(rr_population_mechanism(rho, mu), DataDomain(2), 2)
        # Present with bit v reports v w.p. rho + (1 - rho) P(v); absent reports from Bernoulli(mu) alone.
        ratios = [
            (rho + (1 - rho) * mu) / mu,
            (1 - rho) * (1 - mu) / (1 - mu),
            (rho + (1 - rho) * (1 - mu)) / (1 - mu),
            (1 - rho) * mu / mu,
        ]
        oracle = max(abs(math.log(r)) for r in ratios)
        assert cert.measured_max_log_ratio == pytest.approx(oracle, abs=1e-12)

    def test_laplace_density_ratio(self):
        for q, eps in [(QueryWorkload.identity(3), 0.5), (QueryWorkload([[1, 0], [0, 1], [1, 1]]), 1.2)]:
            cert = certify_laplace_mechanism(q, eps)
            assert not cert.exhaustive
            assert cert.passes
            assert cert.measured_max_log_ratio == pytest.approx(eps, rel=1e-9)

    def test_max_log_ratio(self):
        assert max_log_ratio({0: 0.5, 1: 0.5}, {0: 0.25, 1: 0.75}) == pytest.approx(math.log(2))
        assert max_log_ratio({0: 1.0}, {1: 1.0}) == math.inf

    def test_unclaimed_certificate_does_not_pass(self):
        assert not DpCertificate("m", None, 0.0, True, "f").passes


POST_MAPS = [("parity", lambda o: o % 2), ("threshold", lambda o: o >= 2), ("collapse", lambda o: 0)]


@pytest.mark.parametrize("name, fn", POST_MAPS, ids=[n for n, _ in POST_MAPS])
@pytest.mark.parametrize(
    "mech, domain, neighbors",
    [
        (rr_count_mechanism(0.6), DataDomain(2), SUBSTITUTE),
        (clamped_geometric_count(0.9), DataDomain(2), ADD_REMOVE),
        (clamped_geometric_count(0.4, cells=[0]), DataDomain(3), ADD_REMOVE),
    ],
)
def test_post_processing_never_increases_loss(mech, domain, neighbors, name, fn):
    before = certify_discrete_mechanism(mech, domain, 3, neighbors=neighbors)
    after = certify_discrete_mechanism(post_process(mech, fn), domain, 3, neighbors=neighbors)
    assert after.measured_max_log_ratio <= before.measured_max_log_ratio + 1e-12


class TestBayesFactors:
    def test_rr_bayes_factor(self):
        assert rr_bayes_factor(0.5, 0.5) == pytest.approx(3.0)
        assert rr_bayes_factor(0.5, 0.5) == pytest.approx(math.exp(rr_epsilon_of_rho(0.5)))
        assert rr_bayes_factor(1e-12, 0.5) == pytest.approx(1.0)
        assert rr_bayes_factor(0.5, 0.25) == pytest.approx(5.0)
        with pytest.raises(ParameterOutOfRange):
            rr_bayes_factor(1.0, 0.5)

    @settings(max_examples=50, deadline=None)
    @given(rho=st.floats(0.01, 0.99), mu=st.floats(0.01, 0.99))
    def test_rr_bayes_factor_is_worst_report(self, rho, mu):
        # Odds that a respondent has the trait move by P(d | trait) / P(d | no trait).
        yes = (rho + (1 - rho) * mu) / ((1 - rho) * mu)
        no = (1 - rho) * (1 - mu) / (rho + (1 - rho) * (1 - mu))
        assert rr_bayes_factor(rho, mu) == pytest.approx(max(yes, 1 / no), rel=1e-9)

    def test_constant_mechanism_is_uninformative(self):
        dgp = DataGeneratingProcess.uniform(3, 3)
        mech = lift_histogram_mechanism(constant_mechanism(), 3)
        for _, _, _, factor in all_secret_pair_bayes_factors(dgp, mech):
            assert factor == pytest.approx(1.0, abs=1e-12)

    def test_randomized_response_uniform_dgp(self):
        dgp = DataGeneratingProcess.uniform(2, 2)
        factors = [f for *_, f in all_secret_pair_bayes_factors(dgp, rr_population_mechanism(0.5, 0.5))]
        assert factors
        assert all(1 / 3 - 1e-12 <= f <= 3 + 1e-12 for f in factors)

    def test_independence_of_other_records(self):
        mech = rr_population_mechanism(0.5, 0.5)
        a = DataGeneratingProcess((0.5, 0.4), ((0.5, 0.5), (0.5, 0.5)))
        b = DataGeneratingProcess((0.5, 0.4), ((0.5, 0.5), (0.9, 0.1)))
        for attribute, outcome in itertools.product((0, 1), itertools.product((0, 1), repeat=2)):
            fa = secret_pair_bayes_factor(a, mech, 0, attribute, outcome)
            fb = secret_pair_bayes_factor(b, mech, 0, attribute, outcome)
            assert fa == pytest.approx(fb, rel=1e-12)

    def test_bayes_factor_by_hand(self):
        # One person, RR: the posterior-odds ratio is P(report | present with a) / P(report | absent).
        dgp = DataGeneratingProcess((0.3,), ((0.4, 0.6),))
        mech = rr_population_mechanism(0.5, 0.5)
        assert secret_pair_bayes_factor(dgp, mech, 0, 1, (1,)) == pytest.approx(0.75 / 0.5)
        assert secret_pair_bayes_factor(dgp, mech, 0, 0, (1,)) == pytest.approx(0.25 / 0.5)

    def test_limits_and_validation(self):
        with pytest.raises(PopulationTooLarge):
            secret_pair_bayes_factor(DataGeneratingProcess.uniform(4, 2), rr_population_mechanism(0.5), 0, 0, (0,) * 4)
        dgp = DataGeneratingProcess.uniform(2, 2)
        with pytest.raises(ParameterOutOfRange):
            secret_pair_bayes_factor(dgp, rr_population_mechanism(0.5), 5, 0, (0, 0))
        with pytest.raises(ParameterOutOfRange):
            DataGeneratingProcess((1.0,), ((1.0,),))
        with pytest.raises(ParameterOutOfRange):
            DataGeneratingProcess((0.5,), ((0.5, 0.4),))
