"""shmkb: a rule-based knowledge engine over a memory-mapped relation arena."""

from .store import Arena

__all__ = ["Arena"]
__version__ = "0.1.0"
