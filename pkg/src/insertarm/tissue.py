"""Layered synthetic-tissue axial force model.

Each layer loads elastically (linear + quadratic in local indentation) until
the load reaches its puncture threshold, at which point the layer latches
punctured and its elastic term collapses -- the sudden force drop seen at
needle penetration. Punctured layers contribute viscous friction plus a
constant cutting force while the shaft runs through them. Elastic loading
only resists advance; retraction inside punctured tissue sees friction only,
which keeps the model dissipative.

Force sign convention: negative resists advance (the needle is pushed back).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

from .errors import ConfigurationError, DomainError


@dataclass(frozen=True)
class TissueLayer:
    name: str
    thickness: float  # m
    stiffness_k: float  # N/m
    stiffness_a: float  # N/m^2
    puncture_force: float  # N
    friction_mu: float  # N*s/m
    cutting_f: float  # N

    def __post_init__(self):
        if self.thickness <= 0.0:
            raise ConfigurationError(f"layer {self.name!r}: thickness must be > 0")
        if self.puncture_force <= 0.0:
            raise ConfigurationError(f"layer {self.name!r}: puncture force must be > 0")
        for attr in ("stiffness_k", "stiffness_a", "friction_mu", "cutting_f"):
            if getattr(self, attr) < 0.0:
                raise ConfigurationError(f"layer {self.name!r}: {attr} must be >= 0")

    def elastic_force(self, indentation: float) -> float:
        """Pre-puncture load magnitude at the given local indentation."""
        return self.stiffness_k * indentation + self.stiffness_a * indentation**2


@dataclass
class TissueSample:
    """Ordered stack of layers (entry side first) with per-layer puncture latches."""

    layers: tuple[TissueLayer, ...]
    punctured: list[bool] = field(default_factory=list)
    name: str = ""

    def __post_init__(self):
        self.layers = tuple(self.layers)
        if not self.layers:
            raise ConfigurationError("tissue sample needs at least one layer")
        if not self.punctured:
            self.punctured = [False] * len(self.layers)
        if len(self.punctured) != len(self.layers):
            raise ConfigurationError("one puncture latch per layer required")

    @property
    def total_thickness(self) -> float:
        return sum(layer.thickness for layer in self.layers)

    def copy(self) -> "TissueSample":
        return TissueSample(layers=self.layers, punctured=list(self.punctured), name=self.name)


@dataclass(frozen=True)
class NeedleSpec:
    diameter: float  # m
    gauge_label: str = ""

    def __post_init__(self):
        if self.diameter <= 0.0:
            raise ConfigurationError("needle diameter must be > 0")


# Default layer families. The skin parameters are calibrated so the layer
# punctures at exactly 2 mm indentation; the two deep-tissue families differ
# mainly in elasticity.
def skin_layer(thickness: float) -> TissueLayer:
    k, a = 800.0, 2.5e5
    d = 0.002
    return TissueLayer(
        name="skin_superficial",
        thickness=thickness,
        stiffness_k=k,
        stiffness_a=a,
        puncture_force=k * d + a * d * d,  # 2.6 N at 2 mm
        friction_mu=40.0,
        cutting_f=0.15,
    )


def fibrous_layer(thickness: float) -> TissueLayer:
    k, a = 1200.0, 1.0e5
    d = 0.003
    return TissueLayer(
        name="fibrous",
        thickness=thickness,
        stiffness_k=k,
        stiffness_a=a,
        puncture_force=k * d + a * d * d,  # 4.5 N at 3 mm
        friction_mu=60.0,
        cutting_f=0.25,
    )


def duct_embedded_layer(thickness: float) -> TissueLayer:
    k, a = 600.0, 5.0e4
    d = 0.004
    return TissueLayer(
        name="duct_embedded",
        thickness=thickness,
        stiffness_k=k,
        stiffness_a=a,
        puncture_force=k * d + a * d * d,  # 3.2 N at 4 mm
        friction_mu=50.0,
        cutting_f=0.20,
    )


def standard_samples() -> dict[str, TissueSample]:
    """The four benchmark stacks used by the insertion experiments."""
    return {
        "setup1": TissueSample(
            layers=(skin_layer(0.002), fibrous_layer(0.010)), name="setup1"
        ),
        "setup2": TissueSample(
            layers=(skin_layer(0.002), duct_embedded_layer(0.015)), name="setup2"
        ),
        "setup3": TissueSample(
            layers=(skin_layer(0.004), fibrous_layer(0.010)), name="setup3"
        ),
        "setup4": TissueSample(
            layers=(skin_layer(0.004), duct_embedded_layer(0.015)), name="setup4"
        ),
    }


def _traversal_force(layer: TissueLayer, velocity: float) -> float:
    """Friction + cutting contribution of a punctured layer the shaft runs through."""
    drag = -layer.friction_mu * velocity
    if velocity > 0.0:
        return drag - layer.cutting_f
    if velocity < 0.0:
        return drag + layer.cutting_f
    return -layer.cutting_f  # static grip, resist-advance convention


def axial_force(
    sample: TissueSample, depth: float, velocity: float
) -> tuple[float, list[int]]:
    """Total signed axial force at the given tool depth and velocity.

    Latches puncture flags in place; returns (force, indices of layers that
    punctured during this evaluation). A layer punctures when its elastic load
    reaches the threshold, or immediately when the tip passes clean through it.
    """
    if depth < 0.0:
        raise DomainError(f"depth must be >= 0, got {depth}")
    if not (math.isfinite(depth) and math.isfinite(velocity)):
        raise ConfigurationError("depth and velocity must be finite")

    force = 0.0
    events: list[int] = []
    start = 0.0
    for i, layer in enumerate(sample.layers):
        end = start + layer.thickness
        if depth <= start:
            break
        if sample.punctured[i]:
            force += _traversal_force(layer, velocity)
            start = end
            continue
        # first unpunctured layer the tip has entered
        if depth >= end:
            # tip displaced clean through: pierced regardless of force history
            sample.punctured[i] = True
            events.append(i)
            force += _traversal_force(layer, velocity)
            start = end
            continue
        if velocity >= 0.0:
            load = layer.elastic_force(depth - start)
            if load >= layer.puncture_force - 1e-12:
                sample.punctured[i] = True
                events.append(i)
                force += _traversal_force(layer, velocity)
            else:
                force += -load
        break  # deeper layers are shielded by this unpunctured layer
    return force, events


def reset(sample: TissueSample) -> TissueSample:
    """Clear every puncture latch (idempotent); returns the same sample."""
    for i in range(len(sample.punctured)):
        sample.punctured[i] = False
    return sample
