import math
import pytest
from sfst.automata import Automaton, Transition
from sfst.counting import (AggCountTable, CountTable, count_phi,
                           count_sampled, count_wfa)
from sfst.errors import (BackoffError, CoverageError, CyclicMachineError,
                         NegativeCountError, SfstError)
from sfst.models import ToyCharModel, WfaBackedModel
from sfst.ngram import build_kgram_topology
from conftest import (brute_force_counts, make_symbols, random_corpus,
                      random_weights, unrolled_topology)

HORIZON = 3


def unit(a):
    return a.reweight(lambda t: 1.0)


def assert_counts_match(counts, expected, phi_expected, abs=1e-12):
    for key, c in counts.counts.items():
        assert c == pytest.approx(expected.get(key, 0.0), abs=abs), key
    for q in range(counts.topology.num_states):
        assert counts.phi_count(q) == \
            pytest.approx(phi_expected.get(q, 0.0), abs=abs), q


class TestCountWfa:

    def test_geometric(self, geometric_source):
        c = count_wfa(geometric_source, unit(geometric_source))
        a, term = 1, geometric_source.terminator
        assert c[(0, a)] == pytest.approx(1.0, abs=1e-9)
        assert c[(0, term)] == pytest.approx(1.0, abs=1e-9)

    def test_matches_enumeration(self, rng):
        for _ in range(5):
            s = random_weights(rng, unrolled_topology(rng, k=3, keep=0.0))
            a = unrolled_topology(rng, k=3, keep=0.0)
            expected, _ = brute_force_counts(s, a, HORIZON + 1)
            c = count_wfa(s, a)
            for key, v in c.counts.items():
                assert v == pytest.approx(expected.get(key, 0.0), abs=1e-12)

    def test_rejects_phi(self, backoff_chain):
        with pytest.raises(SfstError):
            count_wfa(backoff_chain, unit(backoff_chain))

    def test_coverage(self):
        sy = make_symbols(2)
        term = sy.terminator_id
        s = Automaton(2, [Transition(0, 1, 0.25, 0), Transition(0, 2, 0.25, 0),
                          Transition(0, term, 0.5, 1)], 0, 1, sy)
        a = Automaton(2, [Transition(0, 1, 1.0, 0),
                          Transition(0, term, 1.0, 1)], 0, 1, sy)
        with pytest.raises(CoverageError) as e:
            count_wfa(s, a)
        assert e.value.witness == 'b'


class TestCountPhi:

    @pytest.mark.parametrize('route', ['auto', 'compensate', 'expand'])
    def test_matches_enumeration(self, rng, route):
        for _ in range(5):
            s = random_weights(rng, unrolled_topology(rng, k=3))
            a = unrolled_topology(rng, k=3)
            expected, phi_expected = brute_force_counts(s, a, HORIZON + 1)
            c = count_phi(s, a, route=route)
            assert_counts_match(c, expected, phi_expected)

    def test_phi_free_agrees_with_count_wfa(self, rng):
        s = random_weights(rng, unrolled_topology(rng, keep=0.0))
        a = unrolled_topology(rng, keep=0.0)
        plain = count_wfa(s, a)
        agg = count_phi(s, a)
        for key, v in plain.counts.items():
            assert agg[key] == pytest.approx(v, abs=1e-15)
        assert agg.phi_counts == {}

    def test_cyclic_routes(self, backoff_chain):
        topo = unit(backoff_chain)
        with pytest.raises(CyclicMachineError):
            count_phi(backoff_chain, topo, route='compensate')
        auto = count_phi(backoff_chain, topo)
        expand = count_phi(backoff_chain, topo, route='expand')
        assert auto.counts == expand.counts

    def test_flow_conservation(self, backoff_chain):
        a = unit(backoff_chain)
        c = count_phi(backoff_chain, a)
        inflow = [0.0] * a.num_states
        inflow[a.initial] += 1.0
        for t in a.transitions:
            if t.label == a.phi_id:
                inflow[t.dst] += c.phi_count(t.src)
            else:
                inflow[t.dst] += c[(t.src, t.label)]
        for q in range(a.num_states):
            if q != a.final:
                assert c.total(q) == pytest.approx(inflow[q], abs=1e-9)
        assert inflow[a.final] == pytest.approx(1.0, abs=1e-9)
        assert c[(2, a.terminator)] == pytest.approx(1.0, abs=1e-9)

    def test_chain_failure_counts(self, backoff_chain):
        # state 2 is entered by failure from 1 only; b-arcs lead into 1
        a = unit(backoff_chain)
        c = count_phi(backoff_chain, a)
        term = a.terminator
        assert c.phi_count(1) == pytest.approx(
            c[(2, 1)] + c[(2, 2)] + c[(2, term)], abs=1e-9)
        assert c.phi_count(0) == pytest.approx(
            c[(1, 1)] + c.phi_count(1) - c[(2, 2)], abs=1e-9)
        # b is always read before reaching state 2
        assert c[(2, 2)] == 0.0

    def test_needs_backoff_complete(self, backoff_chain):
        sy = backoff_chain.symbols
        bad = Automaton(3, [Transition(0, 1, 1.0, 0), Transition(0, 0, 1.0, 1),
                            Transition(1, 2, 1.0, 0),
                            Transition(1, 3, 1.0, 2)], 0, 2, sy)
        with pytest.raises(BackoffError):
            count_phi(backoff_chain, bad)

    def test_bad_route(self, backoff_chain):
        with pytest.raises(ValueError):
            count_phi(backoff_chain, unit(backoff_chain), route='sideways')


class TestCountTables:

    def test_round_trip_through_automaton(self, backoff_chain):
        c = count_phi(backoff_chain, unit(backoff_chain))
        back = AggCountTable.from_automaton(c.to_automaton())
        assert back.counts == c.counts
        assert back.phi_counts == c.phi_counts

    def test_negative_count(self, backoff_chain):
        bad = backoff_chain.reweight(lambda t: -1.0 if t.src == 2 else 1.0)
        with pytest.raises(NegativeCountError):
            AggCountTable.from_automaton(bad)

    def test_unknown_key(self, backoff_chain):
        with pytest.raises(SfstError):
            CountTable(backoff_chain, {(0, 2): 1.0})


class TestCountSampled:

    def test_single_terminator(self):
        sy = make_symbols(1)
        term = sy.terminator_id
        s = Automaton(2, [Transition(0, term, 1.0, 1)], 0, 1, sy)
        c = count_sampled(WfaBackedModel(s), unit(s), 1)
        assert c[(0, term)] == 1.0
        assert c.report == {'samples': 1, 'truncated': 0}

    def test_deterministic(self, backoff_chain):
        model = WfaBackedModel(backoff_chain)
        a = unit(backoff_chain)
        one = count_sampled(model, a, 500, seed=3)
        two = count_sampled(model, a, 500, seed=3)
        other = count_sampled(model, a, 500, seed=4)
        assert one.counts == two.counts
        assert one.phi_counts == two.phi_counts
        assert one.counts != other.counts

    def test_independent_of_jobs(self, backoff_chain):
        model = WfaBackedModel(backoff_chain)
        a = unit(backoff_chain)
        serial = count_sampled(model, a, 400, seed=9, shard_size=50, jobs=1)
        parallel = count_sampled(model, a, 400, seed=9, shard_size=50,
                                 jobs=2)
        assert serial.counts == parallel.counts
        assert serial.phi_counts == parallel.phi_counts

    def test_truncation(self, geometric_source):
        model = WfaBackedModel(geometric_source)
        c = count_sampled(model, unit(geometric_source), 200, seed=1,
                          max_len=2)
        assert 0 < c.report['truncated'] < 200

    def test_bad_sample_size(self, backoff_chain):
        with pytest.raises(ValueError):
            count_sampled(WfaBackedModel(backoff_chain),
                          unit(backoff_chain), 0)

    def test_coverage(self):
        sy = make_symbols(2)
        term = sy.terminator_id
        s = Automaton(2, [Transition(0, 1, 0.25, 0), Transition(0, 2, 0.25, 0),
                          Transition(0, term, 0.5, 1)], 0, 1, sy)
        a = Automaton(2, [Transition(0, 1, 1.0, 0),
                          Transition(0, term, 1.0, 1)], 0, 1, sy)
        with pytest.raises(CoverageError):
            count_sampled(WfaBackedModel(s), a, 10)

    def test_non_kgram_source(self, rng):
        sy = make_symbols(3)
        model = ToyCharModel(sy, seed=5, min_stop=0.2)
        a = build_kgram_topology(random_corpus(rng, sy, 30), 2, sy)
        c = count_sampled(model, a, 300, seed=2)
        assert all(v >= 0 for v in c.counts.values())
        assert all(v >= 0 for v in c.phi_counts.values())
        assert c.total(a.initial) == pytest.approx(1.0, abs=1e-9)

    @pytest.mark.slow
    def test_converges_to_exact(self, backoff_chain):
        a = unit(backoff_chain)
        exact = count_phi(backoff_chain, a)
        est = count_sampled(WfaBackedModel(backoff_chain), a, 100000, seed=0)
        for key, c in exact.counts.items():
            assert math.isclose(est.counts[key], c, rel_tol=0.02), key
        for q, c in exact.phi_counts.items():
            assert math.isclose(est.phi_count(q), c, rel_tol=0.02), q

    @pytest.mark.slow
    def test_error_falls_as_root_n(self, backoff_chain):
        a = unit(backoff_chain)
        exact = count_phi(backoff_chain, a)
        model = WfaBackedModel(backoff_chain)

        def rms_relative_error(n):
            errs = []
            for seed in range(12):
                est = count_sampled(model, a, n, seed=seed)
                errs.extend((est.counts[key] - c) / c
                            for key, c in exact.counts.items() if c > 0)
                errs.extend((est.phi_count(q) - c) / c
                            for q, c in exact.phi_counts.items() if c > 0)
            return math.sqrt(math.fsum(e * e for e in errs) / len(errs))

        ratio = rms_relative_error(100000) / rms_relative_error(400000)
        assert 1.5 <= ratio <= 2.7
