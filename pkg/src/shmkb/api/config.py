"""Service configuration."""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Optional

from .. import store
from ..errors import DomainError

ARENA_ENV = "SHMKB_ARENA"


@dataclass
class Config:
    arena_path: Optional[str] = None
    arena_cap_bytes: int = store.DEFAULT_CAP_BYTES
    rules_paths: list[str] = field(default_factory=list)
    depth_cap: int = 256
    http_bind: str = "127.0.0.1:8750"
    enable_spawn: bool = False

    def __post_init__(self) -> None:
        # the environment variable overrides the flag
        env = os.environ.get(ARENA_ENV)
        if env:
            self.arena_path = env
        if self.depth_cap < 1:
            raise DomainError("depth_cap must be at least 1")

    def bind_pair(self) -> tuple[str, int]:
        host, _, port = self.http_bind.rpartition(":")
        return host or "127.0.0.1", int(port)
