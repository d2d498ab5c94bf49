"""HTTP service and configuration."""

from .app import create_app, job_payload
from .config import ConfigError, ServiceConfig, UserEntry

__all__ = ["ConfigError", "ServiceConfig", "UserEntry", "create_app", "job_payload"]
