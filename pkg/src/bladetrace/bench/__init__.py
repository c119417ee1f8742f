"""Workload driver, centralized baseline, tamper experiments, and the bench CLI."""

from .workload import WorkloadConfig, run_workload
from .baseline import BaselineStore
from .tamper import run_tamper_suite

__all__ = ["BaselineStore", "WorkloadConfig", "run_tamper_suite", "run_workload"]
