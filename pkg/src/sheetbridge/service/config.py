"""Service configuration: JSON file named by --config or SHEETBRIDGE_CONFIG."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

from ..broker import BrokerConfig
from ..registry import Role, User

ENV_VAR = "SHEETBRIDGE_CONFIG"


class ConfigError(ValueError):
    pass


@dataclass
class UserEntry:
    user_id: str
    name: str
    role: str
    token: str
    grants: tuple[str, ...] = ()

    def to_user(self) -> User:
        try:
            role = Role[self.role]
        except KeyError:
            raise ConfigError(f"unknown role {self.role!r} for {self.user_id}") from None
        return User(self.user_id, self.name, role, frozenset(self.grants))


@dataclass
class ServiceConfig:
    store_path: str = "store"
    host: str = "127.0.0.1"
    port: int = 8333
    broker: BrokerConfig = field(default_factory=BrokerConfig)
    users: list[UserEntry] = field(default_factory=list)
    ui_path: str | None = None  # built frontend dir to serve at /ui

    @classmethod
    def from_mapping(cls, raw: dict) -> "ServiceConfig":
        users = [
            UserEntry(
                user_id=u["user_id"],
                name=u.get("name", u["user_id"]),
                role=u.get("role", "END_USER"),
                token=u["token"],
                grants=tuple(u.get("grants", ())),
            )
            for u in raw.get("users", ())
        ]
        tokens = [u.token for u in users]
        if len(tokens) != len(set(tokens)):
            raise ConfigError("user tokens must be unique")
        return cls(
            store_path=raw.get("store_path", "store"),
            host=raw.get("host", "127.0.0.1"),
            port=int(raw.get("port", 8333)),
            broker=BrokerConfig.from_mapping(raw.get("broker", {})),
            users=users,
            ui_path=raw.get("ui_path"),
        )

    @classmethod
    def from_file(cls, path: str | Path) -> "ServiceConfig":
        try:
            raw = json.loads(Path(path).read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
        return cls.from_mapping(raw)

    @classmethod
    def from_env(cls, explicit: str | None = None) -> "ServiceConfig":
        path = explicit or os.environ.get(ENV_VAR)
        if path is None:
            raise ConfigError(f"no config: pass --config or set {ENV_VAR}")
        return cls.from_file(path)
