"""Generates settings for the sfst command-line interface and for running
suites of experiments with forward_models.py. SettingsObject instances are
used for validating settings before any input file is read.

Classes defined here:
    NameSwitcher
    SettingsObject
    SettingsMaker

Functions defined here:
    command_config
"""

import copy
import itertools
import sfst.data.mapping
import sfst.data.defaults as sd
import sfst.data.types_and_limits as tal

sfst_defaults = {k: v for k, v in vars(sd).items() if '__' not in k}
sfst_types = {k: v for k, v in vars(tal).items() if '__' not in k}


class NameSwitcher(object):
    """Handles switching setting names between code and flag versions.

    Names and their flag equivalents are given in sfst.data.mapping.

    Usage:
        ns = NameSwitcher()
        name2 = ns(name1)
        name3 = ns(name2)   # name3 = name1
    """

    def __init__(self):
        self._name_map()

    def __call__(self, names):
        """Convert setting names to their alternative formats.

        If names are passed as code names, flag versions are returned and
        vice versa.

        Args:
            names: Setting name(s) to convert. May be a string, list, set or
                dict where the keys represent the setting names.
        Returns:
            A copy of the original with the names switched to their
            alternative forms.
        """

        return self._switch_names(names)

    def _name_map(self):
        """Load name mappings as two dicts."""

        d1 = {k: v for k, v in vars(sfst.data.mapping).items()
              if '__' not in k}
        self.c2f = d1
        self.f2c = {v: k for (k, v) in d1.items()}

    def _one(self, name):
        try:
            return self.c2f[name]
        except KeyError:
            return self.f2c[name]

    def _switch_names(self, s):
        if isinstance(s, dict):
            return {self._one(k): v for (k, v) in s.items()}
        if isinstance(s, set):
            return {self._one(k) for k in s}
        if isinstance(s, list):
            return [self._one(k) for k in s]
        if isinstance(s, str):
            return self._one(s)
        raise TypeError("Input of type %s unsupported" % type(s))


class SettingsObject(object):
    """Validated settings for one sfst command or experiment.

    Defaults come from data/defaults.py. Every value is checked against
    data/types_and_limits.py as it is set, so a bad flag is reported before
    any file is opened. Names may be given as code names (phi_label) or flag
    names (--phi-label).
    """

    ns = NameSwitcher()

    def __init__(self, id=None, **kwargs):
        """Initialise the object with default settings.

        Args:
            id: Experiment id number (optional)
            kwargs: Non-default settings
        """

        self.id = id
        for k, v in sfst_defaults.items():
            setattr(self, k, copy.copy(v))
        self.set(**kwargs)

    def __call__(self, *args):
        """Calls self.get() on *args."""

        return self.get(*args)

    def validate_entry(self, attribute, value='self'):
        """Check an attribute, value pair is a valid setting.

        Args:
            attribute (str): A setting code name.
            value: Value to be tested for validity. If not specified, the
                value already set is used.
        Returns:
            True if the value is valid.
        Raises:
            TypeError: value has the wrong type.
            ValueError: value is out of range or not an allowed choice.
        """

        a = attribute
        b = getattr(self, a) if value == 'self' else value
        if a not in sfst_types:
            raise AttributeError("SettingsObject has no attribute %r" % a)
        r = sfst_types[a]

        if r == 'str':
            if isinstance(b, str):
                return True
            raise TypeError("%s is of incorrect type: %r" % (a, type(b)))

        if r is True:
            if isinstance(b, bool):
                return True
            raise TypeError("%s is of incorrect type: %r" % (a, type(b)))

        if isinstance(r, tuple):
            if isinstance(b, (int, float)) and not isinstance(b, bool):
                if b != b:
                    raise ValueError("%s invalid value: nan" % a)
                if r[0] is not None and b < r[0]:
                    raise ValueError("%s invalid value: %r is less than %r" %
                                     (a, b, r[0]))
                if r[1] is not None and b > r[1]:
                    raise ValueError(
                        "%s invalid value: %r is greater than %r" %
                        (a, b, r[1]))
                if isinstance(sfst_defaults[a], int) and \
                        not isinstance(b, int):
                    raise TypeError("%s is of incorrect type: %r" %
                                    (a, type(b)))
                return True
            if isinstance(b, str) and len(r) > 2:
                if b in r[2:]:
                    return True
                raise ValueError("%s invalid value: %r" % (a, b))
            raise TypeError("%s unsupported type: %r" % (a, type(b)))

        if isinstance(r, list):
            if isinstance(b, str) and b in r:
                return True
            raise ValueError("%s invalid value: %r (choose from %s)" %
                             (a, b, ', '.join(r)))

        raise Exception("Failed to check input type.\nData:\t%r\t%r\t%r"
                        % (a, b, r))

    def set(self, parameter=None, value=None, **kwargs):
        """Set setting(s).

        Arguments are first checked with validate_entry(). If validated, the
        settings are updated.

        Args:
            parameter (str): The name of the setting.
            value: The value to set.
            **kwargs: Multiple name=value pairs.
        """

        if parameter:
            kwargs[parameter] = value

        for k, v in kwargs.items():
            if k not in self.ns.c2f:
                if k in self.ns.f2c:
                    k = self.ns(k)
                else:
                    raise AttributeError(
                        "SettingsObject has no attribute %r" % k)
            self.validate_entry(k, v)
            setattr(self, k, v)

    def get(self, *args):
        """Get specified settings.

        Args:
            *args: names (code or flag) of settings to be queried.
        Returns:
            A single value, a tuple of values, or self.dict() when no names
            are given.
        """

        if not args:
            return self.dict()
        o = []
        for k in args:
            if k in self.ns.f2c:
                k = self.ns(k)
            o.append(getattr(self, k))
        return o[0] if len(o) == 1 else tuple(o)

    def dict(self):
        """Return a dict of settings, excluding the id."""

        a = copy.copy(vars(self))
        a.pop('id')
        a.pop('subcommand', None)
        return a

    def equals(self, other):
        """Compare two SettingsObjects for equality of their settings."""

        return self.dict() == other.dict()


class SettingsMaker(object):
    """Generates suites of SettingsObjects.

    List-valued settings are expanded into all combinations, usually to be
    run in series by sfst.forward_models.
    """

    def __init__(self, **kwargs):
        """Make a suite of SettingsObjects based on **kwargs.

        Args:
            **kwargs: setting=value pairs for all non-default settings.
                Values may be single entries or lists of entries.

        SettingsObjects generated are stored in the list self.o.
        """

        self.inps = kwargs
        self.sv = [(k, v) for k, v in kwargs.items()
                   if not isinstance(v, list)]
        self.mv = [(k, v) for k, v in kwargs.items() if isinstance(v, list)]
        self.o = []
        self._make_set()
        self._set_ids()

    def _make_set(self):
        consts = dict(self.sv)
        names = [k for k, _ in self.mv]
        for combo in itertools.product(*[v for _, v in self.mv]):
            self.o.append(SettingsObject(**consts, **dict(zip(names, combo))))

    def _set_ids(self):
        for i, a in enumerate(self.o):
            a.id = i

    def settings(self):
        """Return the list of generated SettingsObjects."""

        return copy.deepcopy(self.o)


def command_config(subcommand, defaults=None, **flags):
    """Build the validated configuration of one command-line invocation.

    Args:
        subcommand: Name of the subcommand.
        defaults: Optional dict of command-specific defaults by code name,
            replacing those of the defaults table. A None default leaves the
            setting None, meaning it is taken from the command's input.
        **flags: Flag values, by code or flag name. None values are treated
            as "not given" and keep the default.
    Returns:
        A SettingsObject with an extra `subcommand` attribute.
    """

    given = {k: v for k, v in flags.items() if v is not None}
    so = SettingsObject(**given)
    ns = SettingsObject.ns
    given = {k if k in ns.c2f else ns(k) for k in given}
    for k, v in (defaults or {}).items():
        if k in given:
            continue
        if v is None:
            setattr(so, k, None)
        else:
            so.set(k, v)
    so.subcommand = subcommand
    return so
