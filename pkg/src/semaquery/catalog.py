"""Model catalog and secret store.

Models persist as JSON-lines records, one self-describing object per
line with a fixed field order: record, name, kind, path, on_prompt,
api, table, features, output, secret, options. Secrets live in a
separate file written with owner-only permissions; values are resolved
lazily and never appear in plans, error messages, or logs.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, replace

from .errors import CatalogError
from .values import ValueType

SECRET_ENV_PREFIX = "SEMAQUERY_SECRET_"


@dataclass
class ModelEntry:
    name: str
    kind: str  # LLM, TABULAR, EMBED
    path: str
    on_prompt: bool = False
    api: str | None = None
    table: str | None = None
    features: tuple[str, ...] = ()
    output_columns: tuple[tuple[str, ValueType], ...] = ()
    secret: str | None = None
    options: dict[str, object] = field(default_factory=dict)

    @property
    def is_remote(self) -> bool:
        return self.api is not None

    def to_record(self) -> dict:
        return {
            "record": "model",
            "name": self.name,
            "kind": self.kind,
            "path": self.path,
            "on_prompt": self.on_prompt,
            "api": self.api,
            "table": self.table,
            "features": list(self.features),
            "output": [[name, str(vtype)] for name, vtype in self.output_columns],
            "secret": self.secret,
            "options": self.options,
        }

    @classmethod
    def from_record(cls, record: dict) -> "ModelEntry":
        output = tuple((name, ValueType[type_name])
                       for name, type_name in record.get("output", []))
        return cls(
            name=record["name"],
            kind=record["kind"],
            path=record["path"],
            on_prompt=record.get("on_prompt", False),
            api=record.get("api"),
            table=record.get("table"),
            features=tuple(record.get("features", [])),
            output_columns=output,
            secret=record.get("secret"),
            options=dict(record.get("options", {})),
        )


class ModelCatalog:
    """Named models plus the secret store backing their credentials."""

    def __init__(self):
        self.models: dict[str, ModelEntry] = {}
        self.secrets: dict[str, str] = {}

    def create(self, entry: ModelEntry) -> ModelEntry:
        entry = self._normalize(entry)
        self._verify(entry)
        # re-creating a model overwrites the previous definition
        self.models[entry.name.lower()] = entry
        return entry

    def _normalize(self, entry: ModelEntry) -> ModelEntry:
        if entry.kind == "LLM" and not entry.on_prompt and not entry.features:
            entry = replace(entry, on_prompt=True)
        return entry

    def _verify(self, entry: ModelEntry) -> None:
        if entry.kind not in ("LLM", "TABULAR", "EMBED"):
            raise CatalogError(f"unknown model kind {entry.kind!r}")
        if not entry.path:
            raise CatalogError(f"model {entry.name!r} needs a non-empty PATH")
        if entry.kind == "TABULAR":
            if not entry.features:
                raise CatalogError(
                    f"tabular model {entry.name!r} needs a FEATURES clause")
            if not entry.output_columns:
                raise CatalogError(
                    f"tabular model {entry.name!r} needs an OUTPUT clause")
        if entry.kind == "LLM" and entry.output_columns:
            raise CatalogError(
                f"LLM model {entry.name!r} takes outputs from prompts, not OUTPUT")

    def get(self, name: str) -> ModelEntry:
        entry = self.models.get(name.lower())
        if entry is None:
            raise CatalogError(f"model not found: {name}")
        return entry

    def has(self, name: str) -> bool:
        return name.lower() in self.models

    def drop(self, name: str) -> None:
        if name.lower() not in self.models:
            raise CatalogError(f"model not found: {name}")
        del self.models[name.lower()]

    def names(self) -> list[str]:
        return sorted(entry.name for entry in self.models.values())

    # --- secrets ---

    def set_secret(self, name: str, value: str) -> None:
        self.secrets[name.upper()] = value

    def resolve_secret(self, name: str) -> str:
        """Look up a secret by name, falling back to the environment."""
        value = self.secrets.get(name.upper())
        if value is None:
            value = os.environ.get(SECRET_ENV_PREFIX + name.upper())
        if value is None:
            raise CatalogError(f"secret not found: {name}")
        return value

    # --- persistence ---

    def save(self, models_path: str, secrets_path: str | None = None) -> None:
        with open(models_path, "w", encoding="utf-8") as handle:
            for name in sorted(self.models):
                json.dump(self.models[name].to_record(), handle)
                handle.write("\n")
        if secrets_path is not None and self.secrets:
            fd = os.open(secrets_path, os.O_WRONLY | os.O_CREAT | os.O_TRUNC, 0o600)
            with os.fdopen(fd, "w", encoding="utf-8") as handle:
                for name in sorted(self.secrets):
                    json.dump({"record": "secret", "name": name,
                               "value": self.secrets[name]}, handle)
                    handle.write("\n")
            os.chmod(secrets_path, 0o600)

    def load(self, models_path: str, secrets_path: str | None = None) -> None:
        if os.path.exists(models_path):
            for lineno, record in _read_jsonl(models_path):
                if record.get("record") != "model":
                    raise CatalogError(
                        f"{models_path}:{lineno}: expected a model record")
                try:
                    entry = ModelEntry.from_record(record)
                except (KeyError, TypeError) as exc:
                    raise CatalogError(
                        f"{models_path}:{lineno}: malformed model record ({exc})")
                self.models[entry.name.lower()] = entry
        if secrets_path is not None and os.path.exists(secrets_path):
            for lineno, record in _read_jsonl(secrets_path):
                if record.get("record") != "secret":
                    raise CatalogError(
                        f"{secrets_path}:{lineno}: expected a secret record")
                self.secrets[record["name"].upper()] = record["value"]


def _read_jsonl(path: str):
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CatalogError(f"{path}:{lineno}: invalid JSON ({exc.msg})")
            if not isinstance(record, dict):
                raise CatalogError(f"{path}:{lineno}: expected a JSON object")
            yield lineno, record
