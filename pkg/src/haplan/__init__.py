"""Human-AI kitchen coordination workbench.

A deterministic two-chef cooking simulator, a multi-session language
planning pipeline with a matching ground-truth oracle, scripted partner
policies, benchmark harnesses, and an HTTP/WebSocket service for live
play. The heaviest dependencies load lazily: importing the package pulls
in nothing beyond the standard library.
"""
from .kitchen import (
    Action,
    EpisodeConfig,
    GameState,
    GridPos,
    Layout,
    PlayerId,
    available_layouts,
    initial_state,
    load_layout,
    parse_layout,
    step,
)

__all__ = [
    "Action",
    "EpisodeConfig",
    "GameState",
    "GridPos",
    "Layout",
    "PlayerId",
    "available_layouts",
    "initial_state",
    "load_layout",
    "parse_layout",
    "step",
]

__version__ = "0.1.0"
