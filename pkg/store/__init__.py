"""On-disk formats: fields, trajectories and reports."""

from .files import ReportStore, read_trajectory, write_trajectory, write_conserved_csv

__all__ = ["ReportStore", "read_trajectory", "write_trajectory", "write_conserved_csv"]
