import pytest
from sfst.setter import (NameSwitcher, SettingsMaker, SettingsObject,
                         command_config, sfst_defaults, sfst_types)


class TestNameSwitcher:

    def test_round_trip(self):
        ns = NameSwitcher()
        assert ns('phi_label') == '--phi-label'
        assert ns(ns('max_iters')) == 'max_iters'

    def test_containers(self):
        ns = NameSwitcher()
        assert ns(['order', 'theta']) == ['--order', '--theta']
        assert ns({'--seed'}) == {'seed'}
        assert ns({'epsilon': 1e-3}) == {'--epsilon': 1e-3}

    def test_unsupported(self):
        with pytest.raises(TypeError):
            NameSwitcher()(3)

    def test_every_setting_has_a_flag(self):
        ns = NameSwitcher()
        assert set(ns.c2f) == set(sfst_defaults) == set(sfst_types)


class TestSettingsObject:

    def test_defaults(self):
        s = SettingsObject()
        assert s.epsilon == 1e-6
        assert s.method == 'kl_min'
        assert s.id is None

    def test_flag_names(self):
        s = SettingsObject(**{'--max-iters': 5})
        assert s.max_iters == 5
        assert s('--max-iters') == 5
        assert s('order', 'theta') == (3, 0.0)

    def test_set(self):
        s = SettingsObject()
        s.set('seed', 4)
        s.set(route='expand', jobs=2)
        assert (s.seed, s.route, s.jobs) == (4, 'expand', 2)

    @pytest.mark.parametrize('name, value, error', [
        ('epsilon', 0.6, ValueError),
        ('epsilon', float('nan'), ValueError),
        ('order', 0, ValueError),
        ('order', 2.5, TypeError),
        ('jobs', True, TypeError),
        ('method', 'global', ValueError),
        ('route', 3, ValueError),
        ('bits', 1, TypeError),
        ('symbols', 4, TypeError),
    ])
    def test_validation(self, name, value, error):
        with pytest.raises(error):
            SettingsObject(**{name: value})

    def test_unknown_setting(self):
        with pytest.raises(AttributeError):
            SettingsObject(colour='red')
        with pytest.raises(AttributeError):
            SettingsObject().validate_entry('colour', 1)

    def test_float_setting_accepts_int(self):
        assert SettingsObject(theta=2).theta == 2

    def test_dict_and_equals(self):
        a = SettingsObject(id=1, order=2)
        b = SettingsObject(id=7, order=2)
        assert 'id' not in a.dict()
        assert a.dict()['order'] == 2
        assert a.equals(b)
        assert not a.equals(SettingsObject())


class TestSettingsMaker:

    def test_expands_lists(self):
        sm = SettingsMaker(order=[2, 3], theta=[0.0, 0.5, 1.0], seed=3)
        out = sm.settings()
        assert len(out) == 6
        assert [s.id for s in out] == list(range(6))
        assert all(s.seed == 3 for s in out)
        assert {(s.order, s.theta) for s in out} == \
            {(o, t) for o in (2, 3) for t in (0.0, 0.5, 1.0)}

    def test_single_values(self):
        out = SettingsMaker(order=2).settings()
        assert len(out) == 1
        assert out[0].order == 2

    def test_validates_every_combination(self):
        with pytest.raises(ValueError):
            SettingsMaker(order=[2, 0])

    def test_settings_are_copies(self):
        sm = SettingsMaker(order=[2])
        sm.settings()[0].order = 5
        assert sm.settings()[0].order == 2


class TestCommandConfig:

    def test_none_keeps_default(self):
        so = command_config('approx', epsilon=None, seed=2)
        assert so.subcommand == 'approx'
        assert so.epsilon == 1e-6
        assert so.seed == 2
        assert 'subcommand' not in so.dict()

    def test_bad_flag(self):
        with pytest.raises(ValueError):
            command_config('approx', method='global')

    def test_command_defaults(self):
        so = command_config('ngram_make', {'order': None, 'theta': 0.5})
        assert so.order is None
        assert so.theta == 0.5
        so = command_config('ngram_make', {'order': None}, order=2)
        assert so.order == 2
        so = command_config('ngram_make', {'order': None}, **{'--order': 4})
        assert so.order == 4
