import os
import pandas as pd
import pytest
import sfst.forward_models as fm
from sfst.setter import SettingsObject


@pytest.fixture(scope='module')
def corpora():
    return fm.load_corpora(SettingsObject())


class TestLoadCorpora:

    def test_held_out_split(self, corpora):
        train, test, symbols, oov = corpora
        assert len(train) == 4 * len(test)
        assert oov == 0
        assert all(s[-1] == symbols.terminator_id for s in train + test)

    def test_unknown_word_symbol(self):
        train, test, symbols, oov = fm.load_corpora(
            SettingsObject(unk='<unk>'))
        unk = symbols.find('<unk>')
        assert oov == sum(s.count(unk) for s in test)
        assert all(unk not in s for s in train)

    def test_separate_test_corpus(self, tmp_path):
        train = tmp_path / 'train.txt'
        test = tmp_path / 'test.txt'
        train.write_text("a b\nb a\n")
        test.write_text("a c\n")
        so = SettingsObject(train_corpus=str(train), test_corpus=str(test))
        tr, te, symbols, _ = fm.load_corpora(so)
        assert len(tr) == 2
        assert te == [(symbols.find('a'), symbols.find('c'),
                       symbols.terminator_id)]


class TestExperimentKinds:

    def test_idempotency(self, corpora):
        so = SettingsObject(experiment='idempotency', order=2)
        r = fm.EXPERIMENTS['idempotency'](so, *corpora)
        assert r['num_arcs'] > 0
        # the unigram state is entered by failure transitions only
        assert 0 < r['identifiable_states'] < r['num_states'] - 1
        assert r['max_tv'] < 1e-3

    def test_pruning(self, corpora):
        so = SettingsObject(experiment='pruning', order=2, theta=0.5)
        r = fm.EXPERIMENTS['pruning'](so, *corpora)
        assert r['arcs_pruned'] < r['arcs_full']
        assert r['kl_approx'] <= r['kl_greedy'] + 1e-9

    def test_sampling_needs_samples(self, corpora):
        so = SettingsObject(experiment='sampling', order=2)
        with pytest.raises(ValueError):
            fm.EXPERIMENTS['sampling'](so, *corpora)

    def test_sampling(self, corpora):
        so = SettingsObject(experiment='sampling', order=2, samples=2000,
                            seed=1)
        r = fm.EXPERIMENTS['sampling'](so, *corpora)
        assert r['truncated'] == 0
        assert r['mean_abs_error'] < 0.05

    def test_run_an_experiment(self):
        so = SettingsObject(id=4, experiment='idempotency', order=1)
        r, i = fm.run_an_experiment(so)
        assert i == 4
        assert r['max_tv'] < 0.01


class TestMaxTotalVariation:

    def test_identical(self, backoff_chain):
        assert fm.max_total_variation(backoff_chain, backoff_chain) == 0.0

    def test_moved_mass(self, geometric_source):
        other = geometric_source.reweight(
            lambda t: 0.75 if t.label == 1 else 0.25)
        assert fm.max_total_variation(geometric_source, other) == \
            pytest.approx(0.25)

    def test_restricted_to_states(self, backoff_chain):
        other = backoff_chain.reweight(
            lambda t: 0.1 if t.src == 2 and t.label == 1 else t.weight)
        assert fm.max_total_variation(backoff_chain, other) > 0
        assert fm.max_total_variation(backoff_chain, other, [0, 1]) == 0.0


class TestExperiments:

    @pytest.fixture
    def settings(self):
        return {'experiment': 'idempotency', 'order': [1, 2]}

    def test_run_and_save(self, settings, tmp_path):
        suite = fm.Experiments(settings, output_dir=str(tmp_path))
        suite.run_experiments()
        path = suite.save()
        for name in ('settings.pkl', 'results.pkl', 'settings_results.csv'):
            assert os.path.isfile(os.path.join(str(tmp_path), name))
        df = pd.read_csv(path)
        assert sorted(df['order']) == [1, 2]
        assert 'max_tv' in df.columns

    def test_reuses_previous_output(self, settings, tmp_path, caplog):
        first = fm.Experiments(settings, output_dir=str(tmp_path))
        first.run_experiments()
        first.save()
        caplog.set_level('INFO', logger='sfst')
        again = fm.Experiments(settings, output_dir=str(tmp_path))
        again.run_experiments()
        assert '2 out of 2 experiments are repeats' in caplog.text
        assert [r for r, _ in again.results] == \
            [r for r, _ in first.results]

    def test_bad_mode(self, tmp_path):
        suite = fm.Experiments({'order': 1}, output_dir=str(tmp_path))
        with pytest.raises(ValueError):
            suite.run_experiments(mode='sideways')
