import math
import numpy as np
import pytest
from sfst.automata import Automaton, Transition, is_stochastic
from sfst.counting import AggCountTable, CountTable, count_phi
from sfst.errors import BackoffError, DCInvariantError, SfstError
from sfst.evaluate import kl_divergence
from sfst.forward_models import max_total_variation
from sfst.klmin import (BackoffIndex, approximate, assign_failure_weights,
                        identifiable_states, normalize_closed_form,
                        normalize_counts, solve_state_dc)
from conftest import (make_symbols, random_kgram_topology, random_weights,
                      unrolled_topology)


def unit(a):
    return a.reweight(lambda t: 1.0)


@pytest.fixture
def two_state():
    """State 0 reads a and backs off to state 1, which reads a and $."""

    sy = make_symbols(1)
    a, term, phi = 1, sy.terminator_id, sy.phi_id
    return Automaton(3, [Transition(0, a, 1.0, 0), Transition(0, phi, 1.0, 1),
                         Transition(1, a, 1.0, 0),
                         Transition(1, term, 1.0, 2)], 0, 2, sy)


def objective(ca, cterm, cphi, y):
    return ca * math.log(y) + cterm * math.log(1 - y) - \
        cphi * math.log(1 - y)


class TestClosedForm:

    def test_relative_frequencies(self, geometric_source):
        a = unit(geometric_source)
        counts = CountTable(a, {(0, 1): 3.0, (0, 2): 1.0})
        out = normalize_closed_form(counts, a)
        assert out.arc(0, 1).weight == 0.75
        assert out.arc(0, 2).weight == 0.25

    def test_zero_count_state_is_uniform(self, geometric_source):
        a = unit(geometric_source)
        out = normalize_closed_form(CountTable(a), a)
        assert out.arc(0, 1).weight == 0.5
        assert out.arc(0, 2).weight == 0.5

    def test_rejects_phi(self, two_state):
        with pytest.raises(SfstError):
            normalize_closed_form(AggCountTable(two_state), two_state)


class TestSolveStateDC:

    def test_matches_analytic_optimum(self, two_state):
        counts = AggCountTable(two_state, {(0, 1): 1.0, (1, 1): 2.0,
                                           (1, 2): 3.0}, {0: 1.0})
        st = solve_state_dc(1, counts, BackoffIndex(two_state))
        assert st.converged
        # maximizer of 2 log y + 3 log(1 - y) - log(1 - y)
        assert st.y[0] == pytest.approx(0.5, abs=1e-8)
        assert math.fsum(st.y.tolist()) == pytest.approx(1.0, abs=1e-12)

    @pytest.mark.parametrize('ca, cterm, cphi', [
        (2.0, 3.0, 1.0), (0.5, 4.0, 3.5), (7.0, 1.0, 0.25), (1e-3, 2.0, 1.0)])
    def test_beats_grid_search(self, two_state, ca, cterm, cphi):
        counts = AggCountTable(two_state, {(0, 1): 1.0, (1, 1): ca,
                                           (1, 2): cterm}, {0: cphi})
        st = solve_state_dc(1, counts, BackoffIndex(two_state))
        grid = np.linspace(1e-6, 1 - 1e-6, 100001)
        best = max(objective(ca, cterm, cphi, y) for y in grid.tolist())
        assert objective(ca, cterm, cphi, st.y[0]) >= best - 1e-9
        assert st.objective == pytest.approx(
            objective(ca, cterm, cphi, st.y[0]), abs=1e-9)

    def test_zero_counts_give_uniform(self, two_state):
        st = solve_state_dc(1, AggCountTable(two_state),
                            BackoffIndex(two_state))
        assert st.y.tolist() == [0.5, 0.5]

    def test_without_contributors_is_closed_form(self, rng):
        a = unrolled_topology(rng, k=3)
        c = rng.uniform(0.1, 2.0, len(a.labels(a.initial)))
        counts = AggCountTable(a, dict(((a.initial, x), v) for x, v in
                                       zip(a.labels(a.initial), c)))
        st = solve_state_dc(a.initial, counts, BackoffIndex(a),
                            epsilon=1e-15)
        assert st.y.tolist() == pytest.approx((c / c.sum()).tolist(),
                                              abs=1e-12)

    def test_floor(self, two_state):
        counts = AggCountTable(two_state, {(1, 1): 0.0, (1, 2): 5.0})
        st = solve_state_dc(1, counts, BackoffIndex(two_state),
                            epsilon=1e-4)
        assert st.y.min() >= 1e-4 - 1e-15
        assert math.fsum(st.y.tolist()) == pytest.approx(1.0, abs=1e-12)

    def test_epsilon_too_large(self, two_state):
        with pytest.raises(SfstError):
            solve_state_dc(1, AggCountTable(two_state, {(1, 2): 1.0}),
                           BackoffIndex(two_state), epsilon=0.5)


class TestAssignFailureWeights:

    def test_failure_weight(self):
        sy = make_symbols(2)
        a, b, term, phi = 1, 2, sy.terminator_id, sy.phi_id
        topo = Automaton(3, [Transition(0, a, 1.0, 0),
                             Transition(0, phi, 1.0, 1),
                             Transition(1, a, 1.0, 0),
                             Transition(1, b, 1.0, 1),
                             Transition(1, term, 1.0, 2)], 0, 2, sy)
        ys = {0: {a: 0.7, phi: 0.3}, 1: {a: 0.4, b: 0.35, term: 0.25}}
        out = assign_failure_weights(ys, topo)
        assert out.phi_arc(0).weight == pytest.approx(0.5)
        assert is_stochastic(out)

    def test_no_residual_mass(self, two_state):
        ys = {0: {1: 0.5, 0: 0.5}, 1: {1: 1.0, 2: 0.0}}
        with pytest.raises(DCInvariantError):
            assign_failure_weights(ys, two_state)


class TestNormalizeCounts:

    def test_phi_free_uses_closed_form(self, geometric_source):
        counts = unit(geometric_source).reweight(
            lambda t: 3.0 if t.label == 1 else 1.0)
        out = normalize_counts(counts)
        assert out.arc(0, 1).weight == 0.75

    def test_bad_method(self, geometric_source):
        with pytest.raises(ValueError):
            normalize_counts(geometric_source, method='global')

    def test_needs_backoff_complete(self):
        sy = make_symbols(2)
        bad = Automaton(3, [Transition(0, 1, 1.0, 0), Transition(0, 0, 1.0, 1),
                            Transition(1, 2, 1.0, 0),
                            Transition(1, 3, 1.0, 2)], 0, 2, sy)
        with pytest.raises(BackoffError):
            normalize_counts(bad)


class TestApproximate:

    def test_idempotent_on_acyclic_sources(self, rng):
        for _ in range(3):
            s = random_weights(rng, unrolled_topology(rng, k=3))
            out = approximate(s, unit(s), tol=1e-13)
            assert kl_divergence(s, out) < 1e-9

    def test_idempotent_on_cyclic_source(self, backoff_chain):
        out = approximate(backoff_chain, unit(backoff_chain), tol=1e-13)
        assert kl_divergence(backoff_chain, out) < 1e-9
        # state 2 is only entered by failure, so its a and b are unseen
        phi = backoff_chain.phi_id
        for t in backoff_chain.transitions:
            if t.src == 0 or (t.src == 1 and t.label != phi):
                assert out.arc(t.src, t.label).weight == \
                    pytest.approx(t.weight, abs=1e-6)

    def test_recovers_identifiable_states(self, rng):
        excluded = 0
        for i in range(50):
            if i % 5:
                s = random_weights(rng, unrolled_topology(rng, k=3))
            else:
                s = random_weights(rng, random_kgram_topology(rng))
            states = identifiable_states(count_phi(s, unit(s)))
            excluded += s.num_states - 1 - len(states)
            out = approximate(s, unit(s), tol=1e-13)
            assert max_total_variation(s, out, states) <= 1e-6
        assert excluded > 0

    def test_failure_only_state_is_not_identifiable(self, backoff_chain):
        counts = count_phi(backoff_chain, unit(backoff_chain))
        assert identifiable_states(counts) == [0, 1]
        out = approximate(backoff_chain, unit(backoff_chain), tol=1e-13)
        # 2's a and b are always shadowed and sit at the floor
        assert max_total_variation(backoff_chain, out, [2]) > 0.1

    def test_result_is_stochastic(self, rng):
        for _ in range(5):
            s = random_weights(rng, unrolled_topology(rng, k=3))
            a = unrolled_topology(rng, k=3)
            for method in ('kl_min', 'local'):
                out = approximate(s, a, method=method)
                assert is_stochastic(out)
                assert out.num_arcs == a.num_arcs

    def test_not_beaten_by_other_weights(self, rng):
        for _ in range(5):
            s = random_weights(rng, unrolled_topology(rng, k=3))
            a = unrolled_topology(rng, k=3)
            kl = kl_divergence(s, approximate(s, a, tol=1e-13))
            for alpha in (0.5, 1.0, 5.0, 50.0):
                other = random_weights(rng, a, alpha)
                assert kl <= kl_divergence(s, other) + 1e-12

    def test_kl_min_not_worse_than_local(self, rng):
        for _ in range(5):
            s = random_weights(rng, unrolled_topology(rng, k=3))
            a = unrolled_topology(rng, k=3)
            kl = kl_divergence(s, approximate(s, a))
            local = kl_divergence(s, approximate(s, a, method='local'))
            assert kl <= local + 1e-9

    def test_sampled_is_close_to_exact(self, backoff_chain):
        a = unit(backoff_chain)
        exact = approximate(backoff_chain, a)
        sampled = approximate(backoff_chain, a, samples=20000, seed=1)
        assert max_total_variation(exact, sampled) < 0.05
