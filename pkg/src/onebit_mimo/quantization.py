"""Pilot design, one-bit quantization, and the Bussgang-linearized model.

The quantized pilot observation r = Q(y) is rewritten as r = A y + q with A
the Bussgang gain and q distortion uncorrelated with y. The second-order
statistics of r follow the arcsine law, which is everything the linear
estimators downstream need.
"""

from dataclasses import dataclass, replace

import numpy as np

from .rng import complex_normal


@dataclass(frozen=True)
class PilotMatrix:
    """Unit-modulus pilot block, one column per user."""

    phi: np.ndarray
    rho: float | None = None

    @property
    def tau(self):
        return self.phi.shape[0]

    @property
    def K(self):
        return self.phi.shape[1]

    def with_rho(self, rho):
        """Attach the pilot-phase transmit power."""
        if rho <= 0:
            raise ValueError("pilot power must be positive")
        return replace(self, rho=float(rho))

    def phi_bar(self, n_antennas):
        """Aggregate pilot operator mapping the stacked channel to vec(Y)."""
        if self.rho is None:
            raise ValueError("pilot power not set, call with_rho first")
        return np.kron(self.phi, np.sqrt(self.rho) * np.eye(n_antennas))


@dataclass(frozen=True)
class BussgangModel:
    """Second-order description of the quantized pilot observation.

    a_diag holds the diagonal of the Bussgang gain A. C_y is the analog
    covariance; C_r, C_q and C_n_eff are filled by the later construction
    stages (arcsine law, distortion covariance, effective noise).
    """

    a_diag: np.ndarray
    C_y: np.ndarray
    C_r: np.ndarray | None = None
    C_q: np.ndarray | None = None
    C_n_eff: np.ndarray | None = None


@dataclass(frozen=True)
class QuantizedObservation:
    """One slot of quantized pilots with the model it was received under."""

    slot: int
    r: np.ndarray
    model: BussgangModel | None = None
    phi_tilde: np.ndarray | None = None


def dft_pilots(tau, n_users):
    """First n_users columns of the tau-point DFT matrix.

    Columns are orthogonal under the unconjugated product, phi^T phi* =
    tau I, and every entry has unit modulus.
    """
    if n_users < 1:
        raise ValueError("need at least one user")
    if tau < n_users:
        raise ValueError("pilot length must be at least the user count")
    m = np.arange(tau)
    phi = np.exp(-2j * np.pi * np.outer(m, m[:n_users]) / tau)
    return PilotMatrix(phi=phi)


def one_bit_quantize(y):
    """Signs of real and imaginary parts, scaled to unit power per entry.

    Zero is mapped to +1 in each part so the output alphabet is exactly
    {±1 ± j}/sqrt(2).
    """
    y = np.asarray(y)
    re = np.where(y.real >= 0, 1.0, -1.0)
    im = np.where(y.imag >= 0, 1.0, -1.0)
    return (re + 1j * im) / np.sqrt(2.0)


def received_pilot_signal(state, pilots, rng):
    """Analog pilot observation y = Phi_bar h + n and the noise that made it."""
    n_antennas = state.h.size // pilots.K
    noise = complex_normal(rng, n_antennas * pilots.tau)
    y = pilots.phi_bar(n_antennas) @ state.h + noise
    return y, noise


def bussgang_operator(pilots, corr):
    """Bussgang gain and analog covariance for the pilot observation.

    C_y = Phi_bar R Phi_bar^H + I and A = sqrt(2/pi) diag(C_y)^(-1/2). The
    unit noise floor keeps the diagonal strictly positive.
    """
    n_antennas = corr.matrix.shape[0] // pilots.K
    phi_bar = pilots.phi_bar(n_antennas)
    c_y = phi_bar @ corr.matrix @ phi_bar.conj().T + np.eye(phi_bar.shape[0])
    diag = np.real(np.diag(c_y))
    a_diag = np.sqrt(2.0 / np.pi) / np.sqrt(diag)
    return BussgangModel(a_diag=a_diag, C_y=c_y)


def arcsin_covariance(c_y):
    """Covariance of the one-bit output via the arcsine law.

    With X and Y the diagonally normalized real and imaginary parts of C_y,
    C_r = (2/pi)(arcsin X + j arcsin Y). Arguments are clamped to [-1, 1]
    against floating-point spill. The diagonal is written as exactly 1, its
    analytic value: near 1 the arcsine slope is unbounded, so leaving the
    normalization roundoff in would cost sqrt(eps) there.
    """
    d = np.sqrt(np.real(np.diag(c_y)))
    scale = np.outer(d, d)
    x = np.clip(np.real(c_y) / scale, -1.0, 1.0)
    y = np.clip(np.imag(c_y) / scale, -1.0, 1.0)
    out = (2.0 / np.pi) * (np.arcsin(x) + 1j * np.arcsin(y))
    np.fill_diagonal(out, 1.0)
    return out


def quantization_noise_covariance(model):
    """Distortion covariance C_q and effective noise covariance C_n_eff.

    C_q = C_r - A C_y A^H is the part of the quantizer output the linear
    model cannot explain; the effective noise A n + q then has covariance
    A A^H + C_q.
    """
    c_r = model.C_r if model.C_r is not None else arcsin_covariance(model.C_y)
    scaled = model.a_diag[:, None] * model.C_y * model.a_diag[None, :]
    c_q = c_r - scaled
    c_n_eff = np.diag(model.a_diag**2) + c_q
    return c_q, c_n_eff


def build_bussgang_model(pilots, corr):
    """Fully populated model: gain, analog, arcsine, distortion, effective."""
    model = bussgang_operator(pilots, corr)
    c_r = arcsin_covariance(model.C_y)
    model = replace(model, C_r=c_r)
    c_q, c_n_eff = quantization_noise_covariance(model)
    return replace(model, C_q=c_q, C_n_eff=c_n_eff)


def quantize_pilot_slot(state, pilots, model, rng):
    """Receive one slot, quantize it, and package it for the estimators.

    The model is passed in prebuilt since pilots and correlation are static
    across slots; phi_tilde = A Phi_bar is attached for the linearized
    observation equation r = phi_tilde h + effective noise.
    """
    y, _ = received_pilot_signal(state, pilots, rng)
    r = one_bit_quantize(y)
    n_antennas = state.h.size // pilots.K
    phi_tilde = model.a_diag[:, None] * pilots.phi_bar(n_antennas)
    return QuantizedObservation(slot=state.slot, r=r, model=model, phi_tilde=phi_tilde)
