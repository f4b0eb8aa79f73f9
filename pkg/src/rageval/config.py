import configparser
from pathlib import Path
from typing import Any, Callable, Mapping

import keyring
from dotenv import load_dotenv
from platformdirs import user_cache_dir, user_config_dir

from rageval.models.llm import DEFAULT_API_KEY_ENV, DEFAULT_BASE_URL, BackendConfig
from rageval.models.settings import (
    DEFAULT_EMBED_MODEL,
    DEFAULT_JUDGE_MODEL,
    MetricConfig,
    RunSettings,
    Settings,
)
from rageval.utils.enumerators import Method, ReportFormat
from rageval.utils.exceptions import ConfigurationError

APP_NAME = "RagEval"

DEFAULT_CACHE_DIR = Path(user_cache_dir(appname=APP_NAME))


def _to_bool(value: str) -> bool:
    lowered = str(value).strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {value!r}")


def _optional_int(value: str) -> int | None:
    value = str(value).strip()
    return int(value) if value and value.lower() != "none" else None


# key -> (INI section, converter). Keys mirror the CLI flags.
CONFIG_KEYS: dict[str, tuple[str, Callable[[str], Any]]] = {
    "base_url": ("BACKEND", str),
    "api_key_env": ("BACKEND", str),
    "timeout": ("BACKEND", float),
    "max_retries": ("BACKEND", int),
    "concurrency": ("BACKEND", int),
    "requests_per_minute": ("BACKEND", _optional_int),
    "cache_dir": ("BACKEND", Path),
    "cache_enabled": ("BACKEND", _to_bool),
    "judge_model": ("METRICS", str),
    "embed_model": ("METRICS", str),
    "n_questions": ("METRICS", int),
    "seed": ("METRICS", int),
    "judge_temperature": ("METRICS", float),
    "generation_temperature": ("METRICS", float),
    "methods": ("RUN", Method.parse_list),
    "formats": ("RUN", ReportFormat.parse_list),
    "failure_threshold": ("RUN", float),
    "out": ("RUN", Path),
}


def read_stored_api_key(env_name: str = DEFAULT_API_KEY_ENV) -> str | None:
    """API key saved by `rageval config`, if the OS keychain is reachable."""
    try:
        return keyring.get_password(APP_NAME, env_name)
    except keyring.errors.KeyringError:
        return None


class ConfigManager:
    def __init__(self, config_file: Path | None = None):
        if config_file is None:
            self.config_dir = Path(user_config_dir(appname=APP_NAME))
            self.config_file = self.config_dir / "config.ini"
        else:
            self.config_file = Path(config_file)
            self.config_dir = self.config_file.parent

        self._config: configparser.ConfigParser | None = None

    def save(self, values: Mapping[str, Any], api_key: str | None = None):
        """Saves the given settings (flat flag-style keys) and stores the API key in the keychain."""
        config = configparser.ConfigParser()
        for key, value in values.items():
            if value is None or key not in CONFIG_KEYS:
                continue
            section, _ = CONFIG_KEYS[key]
            if not config.has_section(section):
                config.add_section(section)
            if isinstance(value, (list, tuple)):
                value = ",".join(getattr(v, "value", str(v)) for v in value)
            config.set(section, key, str(value))

        if api_key:
            env_name = values.get("api_key_env") or DEFAULT_API_KEY_ENV
            keyring.set_password(APP_NAME, env_name, api_key)

        self.config_dir.mkdir(parents=True, exist_ok=True)
        with open(self.config_file, "w") as configfile:
            config.write(configfile)
        self._config = config

    def load(self):
        """Loads the user's configuration, and any .env file, if present."""
        load_dotenv()
        config = configparser.ConfigParser()
        if self.config_file.exists():
            try:
                config.read(self.config_file)
            except configparser.Error as error:
                raise ConfigurationError(f"Config file {self.config_file} is malformed: {error}")
        self._config = config
        return self

    def is_configured(self) -> bool:
        return self.config_file.exists()

    def file_values(self) -> dict[str, Any]:
        """Typed values present in the config file."""
        if self._config is None:
            self.load()

        values: dict[str, Any] = {}
        for key, (section, convert) in CONFIG_KEYS.items():
            raw = self._config.get(section, key, fallback=None)
            if raw is None or raw == "":
                continue
            try:
                values[key] = convert(raw)
            except ValueError as error:
                raise ConfigurationError(
                    f"Invalid value for '{key}' in {self.config_file}: {error}"
                )
        return values

    def validate_config(self):
        for section in self._config.sections() if self._config else []:
            if section not in {"BACKEND", "METRICS", "RUN"}:
                raise ConfigurationError(f"Config file has unknown section [{section}].")
            for key in self._config[section]:
                if key not in CONFIG_KEYS or CONFIG_KEYS[key][0] != section:
                    raise ConfigurationError(f"Config file has unknown key '{key}' in [{section}].")
        self.resolve({})

    def resolve(self, overrides: Mapping[str, Any]) -> Settings:
        """
        Builds Settings with precedence: explicit overrides (CLI flags) >
        config file > defaults. `None` overrides mean "not given".
        """
        values = self.file_values()
        values.update({k: v for k, v in overrides.items() if v is not None})

        try:
            backend = BackendConfig(
                base_url=values.get("base_url", DEFAULT_BASE_URL),
                api_key_env=values.get("api_key_env", DEFAULT_API_KEY_ENV),
                timeout_s=values.get("timeout", 60.0),
                max_retries=values.get("max_retries", 4),
                max_concurrency=values.get("concurrency", 4),
                requests_per_minute=values.get("requests_per_minute"),
                cache_dir=Path(values.get("cache_dir", DEFAULT_CACHE_DIR)),
                cache_enabled=values.get("cache_enabled", True),
            )
            metrics = MetricConfig(
                n_questions=values.get("n_questions", 3),
                embed_model_id=values.get("embed_model", DEFAULT_EMBED_MODEL),
                judge_model_id=values.get("judge_model", DEFAULT_JUDGE_MODEL),
                rng_seed=values.get("seed", 0),
                judge_temperature=values.get("judge_temperature", 0.0),
                generation_temperature=values.get("generation_temperature", 0.7),
            )
            run_defaults = RunSettings()
            run = RunSettings(
                methods=tuple(values.get("methods", run_defaults.methods)),
                formats=tuple(values.get("formats", run_defaults.formats)),
                failure_threshold=values.get("failure_threshold", 0.10),
                out_dir=Path(values.get("out", run_defaults.out_dir)),
            )
        except (TypeError, ValueError) as error:
            raise ConfigurationError(f"Invalid configuration: {error}")

        return Settings(backend=backend, metrics=metrics, run=run)

    def clean(self, console, api_key_env: str = DEFAULT_API_KEY_ENV):
        """Deletes the config file and the stored API key."""
        try:
            keyring.delete_password(APP_NAME, api_key_env)
            console.print(f"🗑️ API key '{api_key_env}' removed from keychain.")
        except keyring.errors.NoKeyringError:
            console.print("[yellow]Could not access system keychain to delete the API key.[/yellow]")
        except keyring.errors.PasswordDeleteError:
            console.print(f"[yellow]No API key '{api_key_env}' found in keychain to delete.[/yellow]")

        if self.config_file.exists():
            self.config_file.unlink()
            console.print(f"🗑️ Configuration file deleted: {self.config_file}")
        else:
            console.print("[yellow]No configuration file found to delete.[/yellow]")
