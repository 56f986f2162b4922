"""Scenario files and unit conversion.

Scenario files are TOML. Every section is optional except ``[radio]``'s
user distances (or ``num_users`` with a ``distance_range_m``); omitted
values fall back to the default setup. Example::

    [geometry]
    total_pixels = 131072        # |X|
    class_pixel_fraction = 0.1   # |X_bar| / |X|
    num_classes = 35             # L

    [radio]
    multicast_bandwidth_mhz = 1.0
    class_bandwidth_mhz = 1.0    # scalar or list of L values
    noise_density_dbm_hz = -174
    power_budget_mw = 100
    pathloss_ref_db = -30
    pathloss_exp = 3.4
    distances_m = [150, 320, 540]

    [compute]
    generation_latency_ms = 2.0  # scalar or per-user list
    # model_flops = 2.87e12 and processor_flops = [312e12, ...] instead

    [intent]
    matrix = [[1, 0, 0], [0, 1, 0], [0, 0, 1]]   # K x L, or:
    # policy = "distinct-single" | "overlapped" | "non-overlapped"
    # per_user = 2, total_classes = 10, seed = 0

    [requirements]
    reconstruction = 0.02850     # scalar, or K x L matrix
    synthesis = 0.58705          # scalar, or per-user list

    [curves]
    reconstruction = [0.199, 3.454, 0.008]   # (a, b, c)
    synthesis = [0.214, 5.14, 0.566]

    [channel]
    fading = "mean"              # or "rayleigh"
    gains = [...]                # optional fixed linear gains
    seed = 0
"""

from __future__ import annotations

import sys

import numpy as np

from .core import (ComputeSpec, IntentMatrix, RadioParams, Requirements, Scenario,
                   SignalGeometry)
from .errors import ScenarioError
from .rdp import RECONSTRUCTION_CURVE, SYNTHESIS_CURVE, RdpCurve

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

DEFAULTS = {
    "total_pixels": 131072,
    "class_pixel_fraction": 0.1,
    "num_classes": 35,
    "bandwidth_hz": 1e6,
    "noise_density_dbm_hz": -174.0,
    "power_budget_w": 0.1,
    "pathloss_ref_db": -30.0,
    "pathloss_exp": 3.4,
    "distance_range_m": (150.0, 550.0),
    "generation_latency_s": 2e-3,
    "recon_requirement": 0.02850,
    "synth_requirement": 0.58705,
}


def db_to_linear(x):
    return 10.0 ** (np.asarray(x, dtype=float) / 10.0)


def dbm_to_watts(x):
    return 10.0 ** ((np.asarray(x, dtype=float) - 30.0) / 10.0)


def default_radio(distances, power_budget=DEFAULTS["power_budget_w"],
                  num_classes=DEFAULTS["num_classes"], bandwidth=DEFAULTS["bandwidth_hz"]) -> RadioParams:
    return RadioParams(
        bandwidths=np.full(num_classes + 1, float(bandwidth)),
        noise_density=float(dbm_to_watts(DEFAULTS["noise_density_dbm_hz"])),
        power_budget=float(power_budget),
        pathloss_ref=float(db_to_linear(DEFAULTS["pathloss_ref_db"])),
        pathloss_exp=DEFAULTS["pathloss_exp"],
        distances=np.asarray(distances, dtype=float),
    )


def default_scenario(intent, distances, *, power_budget=DEFAULTS["power_budget_w"],
                     recon=DEFAULTS["recon_requirement"], synth=DEFAULTS["synth_requirement"],
                     generation_latency=DEFAULTS["generation_latency_s"],
                     geometry: SignalGeometry | None = None) -> Scenario:
    """Scenario with the default radio, curves and uniform requirements."""
    intent = intent if isinstance(intent, IntentMatrix) else IntentMatrix(intent)
    K, L = intent.entries.shape
    geometry = geometry or SignalGeometry(DEFAULTS["total_pixels"],
                                          DEFAULTS["class_pixel_fraction"], L)
    if geometry.num_classes != L:
        geometry = SignalGeometry(geometry.total_pixels, geometry.class_pixel_fraction, L)
    return Scenario(
        geometry=geometry,
        intent=intent,
        requirements=Requirements.uniform(K, L, recon, synth),
        radio=default_radio(distances, power_budget, L),
        compute=ComputeSpec.uniform(K, generation_latency),
        recon_curve=RECONSTRUCTION_CURVE,
        synth_curve=SYNTHESIS_CURVE,
    )


def _per_class(value, L, name):
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 0:
        return np.full(L, float(arr))
    if arr.shape != (L,):
        raise ScenarioError(f"{name} must be a scalar or have {L} entries")
    return arr


def _per_user(value, K, name):
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 0:
        return np.full(K, float(arr))
    if arr.shape != (K,):
        raise ScenarioError(f"{name} must be a scalar or have {K} entries")
    return arr


def _curve(spec, fallback):
    if spec is None:
        return fallback
    if isinstance(spec, dict):
        return RdpCurve(float(spec["a"]), float(spec["b"]), float(spec["c"]))
    a, b, c = spec
    return RdpCurve(float(a), float(b), float(c))


def load_config(path) -> dict:
    """Parse a TOML file (or a JSON failure dump with the same layout)."""
    if str(path).endswith(".json"):
        import json

        with open(path) as fh:
            try:
                return json.load(fh)
            except json.JSONDecodeError as exc:
                raise ScenarioError(f"{path}: {exc}") from None
    with open(path, "rb") as fh:
        try:
            return tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ScenarioError(f"{path}: {exc}") from None


def scenario_from_dict(cfg: dict, rng=None) -> tuple[Scenario, dict]:
    """Build a :class:`Scenario` from parsed config.

    Returns the scenario and the ``[channel]`` section (fading options are
    applied by the caller, since a scenario is channel-independent).
    """
    from .harness import assign_intents  # local: harness imports this module

    rng = rng if rng is not None else np.random.default_rng(cfg.get("seed", 0))
    geo = cfg.get("geometry", {})
    radio_cfg = cfg.get("radio", {})
    intent_cfg = cfg.get("intent", {})

    if "distances_m" in radio_cfg:
        distances = np.asarray(radio_cfg["distances_m"], dtype=float)
    elif "num_users" in radio_cfg:
        lo, hi = radio_cfg.get("distance_range_m", DEFAULTS["distance_range_m"])
        distances = rng.uniform(lo, hi, int(radio_cfg["num_users"]))
    else:
        raise ScenarioError("[radio] needs distances_m or num_users")
    K = distances.size

    if "matrix" in intent_cfg:
        intent = IntentMatrix(intent_cfg["matrix"])
        L = intent.num_classes
    else:
        L = int(geo.get("num_classes", DEFAULTS["num_classes"]))
        intent = assign_intents(K, L, intent_cfg.get("policy", "distinct-single"),
                                seed=intent_cfg.get("seed", 0),
                                per_user=intent_cfg.get("per_user", 1),
                                total_classes=intent_cfg.get("total_classes"))
    if intent.num_users != K:
        raise ScenarioError(f"intent matrix has {intent.num_users} rows but {K} users")

    geometry = SignalGeometry(
        int(geo.get("total_pixels", DEFAULTS["total_pixels"])),
        float(geo.get("class_pixel_fraction", DEFAULTS["class_pixel_fraction"])),
        L,
    )

    b0 = float(radio_cfg.get("multicast_bandwidth_mhz", DEFAULTS["bandwidth_hz"] / 1e6)) * 1e6
    bl = _per_class(radio_cfg.get("class_bandwidth_mhz", DEFAULTS["bandwidth_hz"] / 1e6), L,
                    "class_bandwidth_mhz") * 1e6
    radio = RadioParams(
        bandwidths=np.concatenate([[b0], bl]),
        noise_density=float(dbm_to_watts(radio_cfg.get("noise_density_dbm_hz",
                                                       DEFAULTS["noise_density_dbm_hz"]))),
        power_budget=float(radio_cfg.get("power_budget_mw", DEFAULTS["power_budget_w"] * 1e3)) / 1e3,
        pathloss_ref=float(db_to_linear(radio_cfg.get("pathloss_ref_db", DEFAULTS["pathloss_ref_db"]))),
        pathloss_exp=float(radio_cfg.get("pathloss_exp", DEFAULTS["pathloss_exp"])),
        distances=distances,
    )

    comp_cfg = cfg.get("compute", {})
    if "model_flops" in comp_cfg:
        pf = _per_user(comp_cfg["processor_flops"], K, "processor_flops")
        compute = ComputeSpec.from_flops(float(comp_cfg["model_flops"]), pf)
    else:
        tg = comp_cfg.get("generation_latency_ms", DEFAULTS["generation_latency_s"] * 1e3)
        compute = ComputeSpec(_per_user(tg, K, "generation_latency_ms") / 1e3)

    req_cfg = cfg.get("requirements", {})
    recon = np.asarray(req_cfg.get("reconstruction", DEFAULTS["recon_requirement"]), dtype=float)
    if recon.ndim == 0:
        recon = np.full((K, L), float(recon))
    synth = _per_user(req_cfg.get("synthesis", DEFAULTS["synth_requirement"]), K, "synthesis")

    curves = cfg.get("curves", {})
    scenario = Scenario(
        geometry=geometry,
        intent=intent,
        requirements=Requirements(recon, synth),
        radio=radio,
        compute=compute,
        recon_curve=_curve(curves.get("reconstruction"), RECONSTRUCTION_CURVE),
        synth_curve=_curve(curves.get("synthesis"), SYNTHESIS_CURVE),
    )
    return scenario, dict(cfg.get("channel", {}))


def load_scenario(path, rng=None) -> tuple[Scenario, dict]:
    return scenario_from_dict(load_config(path), rng)
