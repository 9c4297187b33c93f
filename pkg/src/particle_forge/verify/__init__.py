"""Oracles and experiments that check the construction."""

from .harness import *  # noqa: F401,F403
from .oracle import CtmcOracle, OracleCheck, StateSpaceTooLarge
from .report import ExperimentReport, format_table, reports_to_json
