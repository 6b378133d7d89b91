"""Physical parameters and value types for the two-mass elastic joint."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace


@dataclass(frozen=True)
class PlantParams:
    """Physical constants of the motor / spring / link chain.

    Attributes
    ----------
    J_m : motor-side inertia [kg m^2]
    J_a : link-side inertia with nominal load [kg m^2]
    K_f : torsional spring stiffness [N m / rad]
    G_0 : load torque at q = 90 deg with the nominal load [N m]
    m_0 : nominal load mass [kg]
    m   : actual load mass [kg]
    K_t : motor torque per unit current [N m / permil of nominal current]
    f_m : viscous friction coefficient on the motor side [N m / (rad/s)]
    """

    J_m: float
    J_a: float
    K_f: float
    G_0: float
    m_0: float
    m: float
    K_t: float
    f_m: float

    def __post_init__(self):
        for name in ("J_m", "J_a", "K_f", "m_0", "K_t"):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"{name} must be strictly positive")
        if self.f_m < 0.0:
            raise ValueError("f_m must be nonnegative")
        if self.m < 0.0:
            raise ValueError("m must be nonnegative")

    @property
    def omega(self) -> float:
        """Natural frequency sqrt(K_f / J_a) [rad/s]."""
        return math.sqrt(self.K_f / self.J_a)

    def with_mass(self, m: float) -> "PlantParams":
        return replace(self, m=m)


def benchmark_params(m: float = 1.5) -> PlantParams:
    """Parameter set of the benchmark actuator (nominal load 1.5 kg)."""
    return PlantParams(
        J_m=0.294,
        J_a=0.345,
        K_f=125.478,
        G_0=8.856,
        m_0=1.5,
        m=m,
        K_t=0.094,
        f_m=4.082,
    )


@dataclass(frozen=True)
class PlantState:
    """State of the joint: link position/velocity and motor position/velocity."""

    q: float
    dq: float
    theta: float
    dtheta: float

    def __post_init__(self):
        if not all(map(math.isfinite, (self.q, self.dq, self.theta, self.dtheta))):
            raise ValueError("plant state must be finite")

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.q, self.dq, self.theta, self.dtheta)

    @staticmethod
    def zero() -> "PlantState":
        return PlantState(0.0, 0.0, 0.0, 0.0)


@dataclass(frozen=True)
class EnvironmentModel:
    """Link-side disturbance sources: load deviation and a contact spring.

    ``delta_m`` is the load-mass deviation from nominal; ``None`` means
    "derive it from ``params.m - params.m_0``". The contact spring with
    stiffness ``K_e`` engages at position ``q_0``; by default it is a
    one-sided wall (active only for q > q_0), ``bilateral=True`` makes it a
    linear spring for cross-checks against linear analysis.
    """

    K_e: float = 0.0
    q_0: float = 0.0
    delta_m: float | None = None
    bilateral: bool = False

    def __post_init__(self):
        if self.K_e < 0.0:
            raise ValueError("contact stiffness K_e must be nonnegative")

    def mass_deviation(self, params: PlantParams) -> float:
        if self.delta_m is not None:
            return self.delta_m
        return params.m - params.m_0


FREE_SPACE = EnvironmentModel()
