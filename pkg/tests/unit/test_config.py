# pylint: disable=redefined-outer-name
# pylint: disable=protected-access

from contextlib import nullcontext as does_not_raise
from typing import Any, Dict, Optional

import pytest

from streamweak import config, errors


class TestConfigMeta:
    @pytest.mark.parametrize(
        "name,required,default",
        [
            ("name1", False, "def1"),
            ("name2", True, None),
        ],
    )
    def test_register_variable(
        self,
        config_meta: config.ConfigMeta,
        name: str,
        required: bool,
        default: Optional[Any],
    ) -> None:
        var_name = config_meta.register_variable(name=name, required=required, default=default)
        assert config_meta._name2var[var_name] == {
            "required": required,
            "default": default,
            "check": None,
        }

    def test_variables(self, default_config_meta: config.ConfigMeta) -> None:
        assert default_config_meta.variables == (
            "STREAMWEAK_VAR1",
            "STREAMWEAK_VAR2",
            "STREAMWEAK_VAR3",
            "STREAMWEAK_VAR4",
        )

    def test_set_defaults(self, default_config_meta: config.ConfigMeta) -> None:
        conf: Dict[str, Any] = {"STREAMWEAK_VAR3": "set"}
        default_config_meta.set_defaults(conf)
        assert conf == {"STREAMWEAK_VAR3": "set", "STREAMWEAK_VAR4": 4}

    def test_update_from_env(self, default_config_meta: config.ConfigMeta) -> None:
        conf: Dict[str, Any] = {}
        default_config_meta.update_from_env(
            conf, {"STREAMWEAK_VAR1": "3", "STREAMWEAK_VAR2": "text", "OTHER": "1"}
        )
        assert conf == {"STREAMWEAK_VAR1": 3, "STREAMWEAK_VAR2": "text"}

    def test_check_config_fails(self, default_config_meta: config.ConfigMeta) -> None:
        conf: Dict[str, Any] = {}
        default_config_meta.set_defaults(conf)
        with pytest.raises(errors.MissingVariable) as excinfo:
            default_config_meta.check_config(conf)
        assert excinfo.value.variable == "STREAMWEAK_VAR2"

    @pytest.mark.parametrize(
        "value,expectation",
        [
            (4, does_not_raise()),
            (0, pytest.raises(errors.ParameterError)),
        ],
    )
    def test_check(
        self, default_config_meta: config.ConfigMeta, value: int, expectation: Any
    ) -> None:
        conf = {"STREAMWEAK_VAR2": "x", "STREAMWEAK_VAR4": value}
        with expectation:
            default_config_meta.check_config(conf)


@pytest.mark.parametrize(
    "name,expected",
    [
        ("log", "STREAMWEAK_LOG"),
        ("cache_capacity", "STREAMWEAK_CACHE_CAPACITY"),
    ],
)
def test_variable_name(name: str, expected: str) -> None:
    assert config.variable_name(name) == expected


class TestLoad:
    def test_defaults(self) -> None:
        conf = config.load(environ={})
        assert conf[config.LOG] == "info"
        assert conf[config.JOBS] == 1
        assert conf[config.CACHE_CAPACITY] == 0
        assert conf[config.PARANOID] is False

    def test_environment(self) -> None:
        conf = config.load(environ={"STREAMWEAK_JOBS": "4", "STREAMWEAK_LOG": "DEBUG"})
        assert conf[config.JOBS] == 4 and conf[config.LOG] == "debug"
        assert config.get_streamweak("jobs") == 4

    def test_overrides_win(self) -> None:
        conf = config.load({"jobs": 2, "cache_capacity": None}, environ={"STREAMWEAK_JOBS": "4"})
        assert conf[config.JOBS] == 2 and conf[config.CACHE_CAPACITY] == 0

    def test_config_file(self, tmp_path: Any) -> None:
        fname = tmp_path / "conf.py"
        fname.write_text("STREAMWEAK_CACHE_CAPACITY = 64\nSTREAMWEAK_JOBS = 3\n")
        conf = config.load(environ={"STREAMWEAK_CONF": str(fname), "STREAMWEAK_JOBS": "5"})
        assert conf[config.CACHE_CAPACITY] == 64 and conf[config.JOBS] == 5

    def test_missing_config_file(self, tmp_path: Any) -> None:
        with pytest.raises(errors.ParameterError):
            config.load(environ={"STREAMWEAK_CONF": str(tmp_path / "missing.py")})

    @pytest.mark.parametrize(
        "environ",
        [
            {"STREAMWEAK_JOBS": "0"},
            {"STREAMWEAK_JOBS": "true"},
            {"STREAMWEAK_LOG": "verbose"},
            {"STREAMWEAK_CACHE_CAPACITY": "-1"},
        ],
    )
    def test_invalid(self, environ: Dict[str, str]) -> None:
        with pytest.raises(errors.ParameterError):
            config.load(environ=environ)

    def test_require(self, clean_config: None) -> None:
        assert config.require_streamweak("jobs") == 1
        with pytest.raises(errors.MissingVariable):
            config.require_streamweak("unknown")
