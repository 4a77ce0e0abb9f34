"""
Tests for runtime overrides and settings helpers
"""
import os

import pytest

from config.settings import settings
from utils.env_config import load_runtime_overrides
from utils.exceptions import InvalidConfigurationError

OVERRIDDEN = ("FLOOR_PADDING", "CONVERGENCE_MARGIN", "DEFAULT_JOBS", "INFINITE_INDEX_LIMIT",
              "ORACLE_SAMPLES", "RANDOM_SEED", "DEFAULT_FORMAT")
VARIABLES = ("WALGEBRA_FLOOR_PADDING", "WALGEBRA_MARGIN", "WALGEBRA_JOBS", "WALGEBRA_INDEX_LIMIT",
             "WALGEBRA_ORACLE_SAMPLES", "WALGEBRA_SEED", "WALGEBRA_FORMAT")


@pytest.fixture(autouse=True)
def clean_environment(monkeypatch):
    """Start from defaults and restore settings afterwards"""
    for variable in VARIABLES:
        monkeypatch.delenv(variable, raising=False)
    for attribute in OVERRIDDEN:
        monkeypatch.setattr(settings, attribute, getattr(settings, attribute))


class TestOverrides:
    """Environment variables applied to settings"""

    def test_nothing_set(self):
        """No variables, no overrides"""
        assert load_runtime_overrides(env_file=None) == {}

    def test_integer_overrides(self, monkeypatch):
        """Integers land on the matching attributes"""
        monkeypatch.setenv("WALGEBRA_JOBS", "4")
        monkeypatch.setenv("WALGEBRA_FLOOR_PADDING", "3")
        applied = load_runtime_overrides(env_file=None)
        assert applied == {"DEFAULT_JOBS": 4, "FLOOR_PADDING": 3}
        assert settings.DEFAULT_JOBS == 4
        assert settings.density_floor(3, 2) == -8

    def test_empty_value_ignored(self, monkeypatch):
        """An empty variable keeps the default"""
        monkeypatch.setenv("WALGEBRA_SEED", "")
        assert load_runtime_overrides(env_file=None) == {}

    def test_non_integer(self, monkeypatch):
        """Text where an integer is expected"""
        monkeypatch.setenv("WALGEBRA_MARGIN", "two")
        with pytest.raises(InvalidConfigurationError) as excinfo:
            load_runtime_overrides(env_file=None)
        assert excinfo.value.config_key == "WALGEBRA_MARGIN"

    def test_negative_integer(self, monkeypatch):
        """Negative values are rejected"""
        monkeypatch.setenv("WALGEBRA_ORACLE_SAMPLES", "-1")
        with pytest.raises(InvalidConfigurationError):
            load_runtime_overrides(env_file=None)

    def test_output_format(self, monkeypatch):
        """Only text, latex and json"""
        monkeypatch.setenv("WALGEBRA_FORMAT", "latex")
        assert load_runtime_overrides(env_file=None) == {"DEFAULT_FORMAT": "latex"}
        monkeypatch.setenv("WALGEBRA_FORMAT", "html")
        with pytest.raises(InvalidConfigurationError):
            load_runtime_overrides(env_file=None)

    def test_env_file(self, tmp_path):
        """Values can come from a .env file"""
        env_file = tmp_path / ".env"
        env_file.write_text("WALGEBRA_INDEX_LIMIT=3\n")
        try:
            applied = load_runtime_overrides(env_file=str(env_file))
        finally:
            os.environ.pop("WALGEBRA_INDEX_LIMIT", None)
        assert applied == {"INFINITE_INDEX_LIMIT": 3}

    def test_missing_env_file(self):
        """A missing file is not an error"""
        assert load_runtime_overrides(env_file="does-not-exist.env") == {}


class TestSettingsHelpers:
    """Derived defaults"""

    @pytest.mark.parametrize("N,m,infinite,expected", [
        (2, 1, False, 5),
        (3, 1, False, 4),
        (1, 1, True, 4),
        (2, 2, False, 3),
        (7, 1, False, 4),
    ])
    def test_default_kmax(self, N, m, infinite, expected):
        """Per-family defaults with a fallback"""
        assert settings.default_kmax(N, m, infinite) == expected
