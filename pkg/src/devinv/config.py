"""Application configuration: one declarative YAML document.

Relative paths in the file resolve against the file's own directory, so a
config can travel with its fixtures. Credentials are never stored here;
remote providers name the environment variable that holds the key.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .gateway import ProviderConfig

CONFIG_ENV_VAR = "DEVINV_CONFIG"

# usable without any config file: hash<dim> resolves to a seeded offline embedder
BUILTIN_HASH_SEED = 42


@dataclass(frozen=True)
class AppConfig:
    corpus_path: str | None = None
    index_path: str | None = None
    template_dir: str | None = None
    providers: dict[str, ProviderConfig] = field(default_factory=dict)
    default_chat: str | None = None
    default_embed: str | None = None
    batch_id_pattern: str | None = None
    service_bind_address: str = "127.0.0.1:8000"
    audit_log_path: str | None = None

    def provider(self, name: str) -> ProviderConfig:
        """Look up a named provider; hash<dim> is a built-in shorthand."""
        if name in self.providers:
            return self.providers[name]
        if name.startswith("hash") and name[4:].isdigit():
            return ProviderConfig(
                kind="hash_embed", dimension=int(name[4:]), seed=BUILTIN_HASH_SEED
            )
        raise KeyError(f"unknown provider {name!r}")


def _resolve(base: Path, value: str | None) -> str | None:
    if value is None:
        return None
    path = Path(value)
    return str(path if path.is_absolute() else base / path)


def load_config(path: str | Path) -> AppConfig:
    path = Path(path)
    base = path.parent
    with path.open(encoding="utf-8") as handle:
        raw = yaml.safe_load(handle) or {}

    providers: dict[str, ProviderConfig] = {}
    for name, options in (raw.get("providers") or {}).items():
        options = dict(options)
        if "transcript_path" in options:
            options["transcript_path"] = _resolve(base, options["transcript_path"])
        providers[name] = ProviderConfig(**options)

    config = AppConfig(
        corpus_path=_resolve(base, raw.get("corpus_path")),
        index_path=_resolve(base, raw.get("index_path")),
        template_dir=_resolve(base, raw.get("template_dir")),
        providers=providers,
        default_chat=raw.get("default_chat"),
        default_embed=raw.get("default_embed"),
        batch_id_pattern=raw.get("batch_id_pattern"),
        service_bind_address=raw.get("service_bind_address", "127.0.0.1:8000"),
        audit_log_path=_resolve(base, raw.get("audit_log_path")),
    )
    for role, name in (("default_chat", config.default_chat),
                       ("default_embed", config.default_embed)):
        if name is not None and name not in providers:
            raise ValueError(f"{role} names unknown provider {name!r}")
    return config


def find_config(explicit: str | None) -> AppConfig:
    """Load --config, else $DEVINV_CONFIG, else an empty config."""
    candidate = explicit or os.environ.get(CONFIG_ENV_VAR)
    if candidate:
        return load_config(candidate)
    return AppConfig()
