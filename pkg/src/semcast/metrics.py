"""Run metrics and the two intent-unaware multicast baselines.

NGM compresses the whole signal at the tightest reconstruction requirement;
FGM sends only the semantic map and lets every user synthesise the rest.
Both multicast over B_0 at the full power budget, each user decoding at its
own rate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelRealization, shannon_rate, stream_latency
from .core import Scenario, effective_requirements
from .optimizer.report import SolveReport

BENCHMARKS = ("proposed", "ngm", "fgm")


@dataclass(frozen=True)
class RunMetrics:
    per_user_latency: float  # s
    spectral_efficiency: float  # bit/s/Hz
    power_ratio: float
    compression_rate: float  # bpp
    total_bits: float

    def as_dict(self) -> dict:
        return {
            "latency": self.per_user_latency,
            "spectral_efficiency": self.spectral_efficiency,
            "power_ratio": self.power_ratio,
            "compression_rate": self.compression_rate,
            "total_bits": self.total_bits,
        }


def compression_rate(scenario: Scenario, rates) -> float:
    """r* = r_0 + (|X_bar|/|X|) * sum of active class rates."""
    rates = np.asarray(rates, dtype=float)
    active = scenario.intent.active_classes()
    return float(rates[0] + scenario.geometry.class_pixel_fraction * rates[active + 1].sum())


def total_bits(scenario: Scenario, r_star: float) -> float:
    return r_star * scenario.geometry.total_pixels


def occupied_bandwidth(scenario: Scenario) -> float:
    """B_0 plus the bandwidth of every class somebody asked for."""
    active = scenario.intent.active_classes()
    return float(scenario.radio.bandwidths[0] + scenario.radio.bandwidths[active + 1].sum())


def spectral_efficiency(scenario: Scenario, channel: ChannelRealization, powers) -> float:
    radio = scenario.radio
    I = scenario.intent.entries
    total = shannon_rate(powers[0], channel.gains, radio.bandwidths[0], radio.noise_density).sum()
    for l in scenario.intent.active_classes():
        users = I[:, l] == 1
        total += shannon_rate(powers[l + 1], channel.gains[users], radio.bandwidths[l + 1],
                              radio.noise_density).sum()
    return float(total / occupied_bandwidth(scenario))


def metrics_from_solution(report: SolveReport, scenario: Scenario,
                          channel: ChannelRealization) -> RunMetrics:
    a = report.allocation
    r_star = compression_rate(scenario, a.rates)
    return RunMetrics(
        per_user_latency=float(a.epigraph.sum() / scenario.num_users),
        spectral_efficiency=spectral_efficiency(scenario, channel, a.powers),
        power_ratio=float(a.powers[0] / scenario.radio.power_budget),
        compression_rate=r_star,
        total_bits=total_bits(scenario, r_star),
    )


def _multicast_rates(scenario: Scenario, channel: ChannelRealization) -> np.ndarray:
    radio = scenario.radio
    return shannon_rate(radio.power_budget, channel.gains, radio.bandwidths[0], radio.noise_density)


def ngm_rate(scenario: Scenario) -> float:
    req = scenario.requirements.reconstruction
    return scenario.recon_curve.invert(float(np.min(req[np.isfinite(req)])))


def fgm_rate(scenario: Scenario) -> float:
    return scenario.synth_curve.invert(effective_requirements(scenario)[0])


def ngm_latency(scenario: Scenario, channel: ChannelRealization) -> np.ndarray:
    bits = ngm_rate(scenario) * scenario.geometry.total_pixels
    return stream_latency(bits, _multicast_rates(scenario, channel))


def fgm_latency(scenario: Scenario, channel: ChannelRealization) -> np.ndarray:
    bits = fgm_rate(scenario) * scenario.geometry.total_pixels
    return scenario.compute.generation_latency + stream_latency(bits, _multicast_rates(scenario, channel))


def _baseline_metrics(scenario, channel, latency, rate) -> RunMetrics:
    # one shared stream: average delivered rate per hertz of B_0
    se = float(_multicast_rates(scenario, channel).mean() / scenario.radio.bandwidths[0])
    return RunMetrics(
        per_user_latency=float(latency.mean()),
        spectral_efficiency=se,
        power_ratio=1.0,
        compression_rate=rate,
        total_bits=total_bits(scenario, rate),
    )


def ngm_metrics(scenario: Scenario, channel: ChannelRealization) -> RunMetrics:
    return _baseline_metrics(scenario, channel, ngm_latency(scenario, channel), ngm_rate(scenario))


def fgm_metrics(scenario: Scenario, channel: ChannelRealization) -> RunMetrics:
    return _baseline_metrics(scenario, channel, fgm_latency(scenario, channel), fgm_rate(scenario))
