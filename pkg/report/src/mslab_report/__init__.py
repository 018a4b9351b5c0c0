"""Plot rendering for sweep CSV files and spectral diagnostics."""

from mslab_report.plots import render_cone_heatmap, render_scaling_plot

__all__ = ["render_scaling_plot", "render_cone_heatmap"]

__version__ = "0.1.0"
