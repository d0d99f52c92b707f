"""Manages config and meta info.

Variables are registered once with a default and loaded, later source wins,
from:

* registered defaults,
* a python config file named by the environment variable ``STREAMWEAK_CONF``,
* individual ``STREAMWEAK_<NAME>`` environment variables and
* explicit overrides (e.g.: command line flags).
"""

import json
import os
from typing import Any, Callable, Mapping, MutableMapping, Optional, Sequence

from flask import Config

from .constants import EXTERN_TIMEOUT_MS, LogLevel
from .errors import MissingVariable, ParameterError

PREFIX = "STREAMWEAK"

_config = Config(root_path="")


class ConfigMeta:
    """Container for config meta."""

    def __init__(self) -> None:
        self._name2var: MutableMapping[str, Any] = {}

    def clear(self) -> None:
        self._name2var.clear()

    def register_variable(
        self,
        name: str,
        required: bool = False,
        default: Optional[Any] = None,
        check: Optional[Callable[[Any], bool]] = None,
    ) -> str:
        """Register meta info for a variable.

        Args:
            name: Name of the variable.
            required: Value required or not. Default: False.
            default: (Optional) Default value of variable.
            check: (Optional) Predicate a value must satisfy.

        Returns:
            Variable name.
        """
        var = variable_name(name)
        self._name2var[var] = {"required": required, "default": default, "check": check}
        return var

    @property
    def variables(self) -> Sequence[str]:
        return tuple(self._name2var)

    @property
    def name2var(self) -> Mapping[str, Any]:
        """Variable name to variable mapping."""
        return dict(self._name2var)

    def set_defaults(self, config: MutableMapping[str, Any]) -> None:
        """Set default values for variables missing in ``config``."""
        for var_name, meta in self._name2var.items():
            if meta["default"] is not None and var_name not in config:
                config[var_name] = meta["default"]

    def update_from_env(
        self, config: MutableMapping[str, Any], environ: Mapping[str, str]
    ) -> None:
        """Copy registered variables from ``environ``.

        Values are parsed as JSON when possible and kept as strings otherwise.
        """
        for var_name in self._name2var:
            if var_name in environ:
                config[var_name] = _parse_env(environ[var_name])

    def check_config(self, config: Mapping[str, Any]) -> None:
        """Check that required variables are set and values are valid.

        Raises:
            :class:`MissingVariable` for unset required variables.
            :class:`ParameterError` for values rejected by their check.
        """
        for var_name, meta in self._name2var.items():
            value = config.get(var_name)
            if meta["required"] and value is None:
                raise MissingVariable(var_name)
            if value is not None and meta["check"] is not None and not meta["check"](value):
                raise ParameterError(f"Invalid value for {var_name}: {value!r}")


def _parse_env(value: str) -> Any:
    try:
        return json.loads(value)
    except ValueError:
        return value


def variable_name(name: str) -> str:
    """Format variable name.

    Examples:
        >>> variable_name("log")
        "STREAMWEAK_LOG"
    """
    return f"{PREFIX}_{name}".upper()


def _positive_int(value: Any) -> bool:
    return isinstance(value, int) and not isinstance(value, bool) and value > 0


config_meta = ConfigMeta()
LOG = config_meta.register_variable(
    "log",
    default=LogLevel.INFO.value,
    check=lambda v: isinstance(v, str) and v.lower() in {e.value for e in LogLevel},
)
JOBS = config_meta.register_variable("jobs", default=1, check=_positive_int)
CACHE_CAPACITY = config_meta.register_variable(
    "cache_capacity",
    default=0,
    check=lambda v: isinstance(v, int) and not isinstance(v, bool) and v >= 0,
)
EXTERN_TIMEOUT = config_meta.register_variable(
    "extern_timeout_ms", default=EXTERN_TIMEOUT_MS, check=_positive_int
)
PARANOID = config_meta.register_variable(
    "paranoid", default=False, check=lambda v: isinstance(v, bool)
)
PROGRESS = config_meta.register_variable(
    "progress", default=False, check=lambda v: isinstance(v, bool)
)


def load(
    overrides: Optional[Mapping[str, Any]] = None,
    environ: Optional[Mapping[str, str]] = None,
    meta: ConfigMeta = config_meta,
) -> Mapping[str, Any]:
    """(Re)load the package configuration.

    Args:
        overrides: (Optional) Values by short name (e.g.: ``{"jobs": 2}``);
            ``None`` values are ignored.
        environ: (Optional) Environment to read. Default: ``os.environ``.
        meta: Registered variables. Default: package variables.

    Returns:
        Loaded configuration.
    """
    if environ is None:
        environ = os.environ

    _config.clear()
    meta.set_defaults(_config)
    conf_var = variable_name("conf")
    if environ.get(conf_var):
        try:
            _config.from_pyfile(environ[conf_var])
        except OSError as e:
            raise ParameterError(f"Cannot load {conf_var}: {e}") from e
    meta.update_from_env(_config, environ)
    for name, value in (overrides or {}).items():
        if value is not None:
            _config[variable_name(name)] = value
    if isinstance(_config.get(LOG), str):
        _config[LOG] = _config[LOG].lower()
    meta.check_config(_config)
    return get_config()


def get_streamweak(name: str, default: Optional[Any] = None) -> Any:
    return _config.get(variable_name(name), default)


def require_streamweak(name: str) -> Any:
    var = variable_name(name)
    if var not in _config:
        raise MissingVariable(var)
    return _config[var]


def get_config() -> Mapping[str, Any]:
    return dict(_config)


config_meta.set_defaults(_config)
