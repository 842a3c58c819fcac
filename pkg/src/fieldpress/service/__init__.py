from .app import create_app
from .jobs import Job, JobError, JobManager

__all__ = ["Job", "JobError", "JobManager", "create_app"]
