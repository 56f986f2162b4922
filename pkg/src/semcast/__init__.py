"""Latency-optimal planning for intent-aware generative semantic multicast."""

__version__ = "0.1.0"

from .channel import ChannelRealization, draw_channel, shannon_rate, snr, stream_latency
from .core import (ComputeSpec, IntentMatrix, RadioParams, Requirements, Scenario, SignalGeometry,
                   effective_requirements, intent_graph_stats)
from .metrics import RunMetrics, fgm_latency, metrics_from_solution, ngm_latency
from .optimizer import SolveReport, SqpOptions, reduced_solve, sqp_solve
from .rdp import RECONSTRUCTION_CURVE, SYNTHESIS_CURVE, RdpCurve, fit_curve

__all__ = [
    "ChannelRealization", "ComputeSpec", "IntentMatrix", "RECONSTRUCTION_CURVE", "RadioParams",
    "RdpCurve", "Requirements", "RunMetrics", "SYNTHESIS_CURVE", "Scenario", "SignalGeometry",
    "SolveReport", "SqpOptions", "draw_channel", "effective_requirements", "fgm_latency", "fit_curve",
    "intent_graph_stats", "metrics_from_solution", "ngm_latency", "reduced_solve", "shannon_rate",
    "snr", "sqp_solve", "stream_latency",
]
