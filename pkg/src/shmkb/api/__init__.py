"""CLI and HTTP service over the knowledge engine."""

from .config import Config
from .service import KnowledgeService, ServiceBusy

__all__ = ["Config", "KnowledgeService", "ServiceBusy"]
