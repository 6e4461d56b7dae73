"""Bundled figure configs and their execution."""

from __future__ import annotations

from importlib import resources

from ..errors import ConfigError
from .config import parse_config
from .runner import run_series, write_series

__all__ = ["FIGURES", "figure_configs", "run_figure"]

FIGURES = ("fig3", "fig4", "fig5", "fig6", "fig7", "fig8", "fig9", "fig10c")


def figure_configs(name: str, **overrides):
    """Parsed series of a bundled figure, with ``dim``/``guard``/``seed`` overrides applied."""
    if name not in FIGURES:
        raise ConfigError(f"unknown figure {name!r}; choose from {', '.join(FIGURES)}")
    text = resources.files("bosupp.cli").joinpath("configs", f"{name}.ini").read_text()
    configs = parse_config(text, f"{name}.ini")
    return [
        cfg.with_overrides(output=f"{name}_{cfg.name}.csv", **overrides) for cfg in configs
    ]


def run_figure(name: str, out_dir, jobs: int = 1, **overrides):
    """Run every series of a figure; returns ``[(SeriesResult, csv_path, meta_path)]``."""
    results = []
    for cfg in figure_configs(name, **overrides):
        res = run_series(cfg, jobs=jobs)
        csv_path, meta_path = write_series(res, out_dir, {"figure": name})
        results.append((res, csv_path, meta_path))
    return results
