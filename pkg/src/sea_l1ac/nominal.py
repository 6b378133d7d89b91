"""Closed-loop nominal model: state feedback gains, LTI quadruple, transfers.

The baseline position law places all four closed-loop poles at -omega via

    K_p = K_f / J_a,   K_r = 4 / J_a,   K_v = 4 omega,   omega = sqrt(K_f / J_a)

which, written as state feedback u1 = -K x over x = [q, q', theta, theta'],
gives K = [-K_r K_f, 0, K_p + K_r K_f, K_v]. The resulting closed-loop
matrix A_m together with the matched input column B_m, the unmatched columns
B_um and the output row c form the model the adaptive layer predicts against.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .params import PlantParams


@dataclass(frozen=True)
class RrcGains:
    """Pole-placement gains of the baseline law plus the stacked K row."""

    K_p: float
    K_r: float
    K_v: float
    omega: float
    K: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "K", np.asarray(self.K, dtype=float))


def build_rrc_gains(params: PlantParams) -> RrcGains:
    omega = params.omega
    K_p = params.K_f / params.J_a
    K_r = 4.0 / params.J_a
    K_v = 4.0 * omega
    K = np.array([-K_r * params.K_f, 0.0, K_p + K_r * params.K_f, K_v])
    return RrcGains(K_p=K_p, K_r=K_r, K_v=K_v, omega=omega, K=K)


def open_loop_matrix(params: PlantParams) -> np.ndarray:
    """Linear plant with gravity, friction and disturbance stripped and the
    motor side reduced to a double integrator driven by u."""
    a = params.K_f / params.J_a
    return np.array([
        [0.0, 1.0, 0.0, 0.0],
        [-a, 0.0, a, 0.0],
        [0.0, 0.0, 0.0, 1.0],
        [0.0, 0.0, 0.0, 0.0],
    ])


@dataclass(frozen=True)
class NominalModel:
    """Closed-loop quadruple (A_m, B_m, B_um, c) with feedforward gain K_g."""

    A_m: np.ndarray
    B_m: np.ndarray
    B_um: np.ndarray
    c: np.ndarray
    K_g: float

    @property
    def b_stacked(self) -> np.ndarray:
        """[B_m B_um], a 4x4 permutation of identity columns."""
        return np.column_stack([self.B_m, self.B_um])

    def H_m(self) -> "TransferFunction":
        """Transfer from the matched input to the output y = c x."""
        return transfer_from_state_space(self.A_m, self.B_m, self.c)

    def H_um(self, column: int) -> "TransferFunction":
        """Transfer from unmatched input ``column`` (0..2) to the output."""
        return transfer_from_state_space(self.A_m, self.B_um[:, column], self.c)


def build_nominal_model(params: PlantParams, gains: RrcGains) -> NominalModel:
    a = params.K_f / params.J_a
    b = gains.K_r * params.K_f
    A_m = np.array([
        [0.0, 1.0, 0.0, 0.0],
        [-a, 0.0, a, 0.0],
        [0.0, 0.0, 0.0, 1.0],
        [b, 0.0, -b - gains.K_p, -gains.K_v],
    ])
    B_m = np.array([0.0, 0.0, 0.0, 1.0])
    B_um = np.array([
        [1.0, 0.0, 0.0],
        [0.0, 1.0, 0.0],
        [0.0, 0.0, 1.0],
        [0.0, 0.0, 0.0],
    ])
    c = np.array([1.0, 0.0, 0.0, 0.0])  # output is the link position q
    eig = np.linalg.eigvals(A_m)
    if np.max(eig.real) >= 0.0:
        raise ValueError("closed-loop matrix is not Hurwitz")
    try:
        dc = float(c @ np.linalg.solve(A_m, B_m))
    except np.linalg.LinAlgError as exc:
        raise ValueError("closed-loop matrix is singular, cannot form K_g") from exc
    if dc == 0.0:
        raise ValueError("zero DC path from matched input, cannot form K_g")
    K_g = -1.0 / dc
    return NominalModel(A_m=A_m, B_m=B_m, B_um=B_um, c=c, K_g=K_g)


class TransferFunction:
    """Real-rational transfer function stored as descending-power coefficients.

    ``num``/``den`` keep whatever scaling they were built with; ``den`` must
    have a nonzero leading coefficient.
    """

    def __init__(self, num, den):
        self.num = np.atleast_1d(np.asarray(num, dtype=float))
        self.den = np.atleast_1d(np.asarray(den, dtype=float))
        if self.den[0] == 0.0:
            raise ValueError("denominator leading coefficient must be nonzero")

    @property
    def relative_degree(self) -> int:
        num = np.trim_zeros(self.num, "f")
        deg_num = len(num) - 1 if len(num) else -1
        return (len(self.den) - 1) - deg_num

    @property
    def is_proper(self) -> bool:
        return self.relative_degree >= 0

    @property
    def is_strictly_proper(self) -> bool:
        return self.relative_degree >= 1

    def __call__(self, s):
        """Evaluate at complex frequency ``s`` (scalar or array)."""
        return np.polyval(self.num, s) / np.polyval(self.den, s)

    def dc_gain(self) -> float:
        return float(self(0.0).real)

    def __repr__(self):
        return f"TransferFunction(num={self.num!r}, den={self.den!r})"


def characteristic_polynomial(A: np.ndarray) -> np.ndarray:
    """Monic characteristic polynomial by the Faddeev-LeVerrier recursion."""
    A = np.asarray(A, dtype=float)
    n = A.shape[0]
    coeffs = np.zeros(n + 1)
    coeffs[0] = 1.0
    R = np.eye(n)
    for k in range(1, n + 1):
        M = A @ R
        coeffs[k] = -np.trace(M) / k
        R = M + coeffs[k] * np.eye(n)
    return coeffs


def transfer_from_state_space(A, B, c, d: float = 0.0) -> TransferFunction:
    """Exact polynomial form of c (sI - A)^-1 B + d for a SISO channel.

    Uses the Faddeev-LeVerrier adjugate expansion, so numerator and
    denominator come out of one finite recursion instead of a fit.
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float).reshape(-1)
    c = np.asarray(c, dtype=float).reshape(-1)
    n = A.shape[0]
    if A.shape != (n, n) or B.shape != (n,) or c.shape != (n,):
        raise ValueError("inconsistent state-space dimensions")
    den = np.zeros(n + 1)
    den[0] = 1.0
    num = np.zeros(n + 1)
    R = np.eye(n)
    for k in range(1, n + 1):
        num[k] = float(c @ R @ B)  # coefficient of s^(n-k) in c adj(sI-A) B
        M = A @ R
        den[k] = -np.trace(M) / k
        R = M + den[k] * np.eye(n)
    if d != 0.0:
        num = num + d * den
    return TransferFunction(num, den)
