import functools
import re
from collections import OrderedDict

from .errors import ConfigurationError


__all__ = ["memoize", "parse_options", "coerce_option", "render_option"]


def memoize(f):
    memo = OrderedDict()
    @functools.wraps(f)
    def g(*args):
        if args not in memo:
            memo[args] = f(*args)
        return memo[args]
    return g


_option_re = re.compile(r"^\s*([A-Za-z_][\w.]*)\s*=\s*(.*?)\s*$")


def parse_options(text, *, origin="<string>"):
    """Parse a flat ``key = value`` document into an ordered mapping of raw strings.

    Blank lines and lines starting with ``#`` are ignored. A key may appear only once.
    """
    options = OrderedDict()
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        match = _option_re.match(line)
        if match is None:
            raise ConfigurationError("Malformed option {!r} (at {}:{})"
                                     .format(stripped, origin, lineno))
        key, value = match.groups()
        if key in options:
            raise ConfigurationError("Option {!r} is specified more than once (at {}:{})"
                                     .format(key, origin, lineno))
        options[key] = value
    return options


def coerce_option(name, option, type):
    if type is bool:
        if option.lower() in ("1", "yes", "true", "enable"):
            return True
        if option.lower() in ("0", "no", "false", "disable"):
            return False
    elif type is int:
        try:
            return int(option, 0)
        except ValueError:
            pass
    elif type is float:
        try:
            return float(option)
        except ValueError:
            pass
    elif type is str:
        return option
    elif isinstance(type, tuple) and len(type) == 1:
        item_type, = type
        items = [item.strip() for item in option.split(",") if item.strip()]
        return tuple(coerce_option(name, item, item_type) for item in items)
    else:
        assert False
    raise ConfigurationError("Option {!r} must be of type {}, not {!r}"
                             .format(name, getattr(type, "__name__", type), option))


def render_option(value):
    if isinstance(value, bool):
        return "yes" if value else "no"
    if isinstance(value, (tuple, list)):
        return ",".join(render_option(item) for item in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)
