"""Figure rendering for windy-hallway experiment outputs."""

from .charts import bar_chart, learning_curve
from .io import MetricsTable, mean_and_ci, read_metrics, read_summary

__all__ = ["bar_chart", "learning_curve", "MetricsTable", "mean_and_ci",
           "read_metrics", "read_summary"]
