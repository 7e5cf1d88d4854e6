"""Closed-form per-rotor damage estimation.

The adaptive loop hides damage from the tracking error, but the speeds it
ends up commanding betray it.  Comparing the speeds that realize the
nominal wrench under the healthy model (omega_nom) against the speeds the
adaptive loop actually commands (omega_l1) gives a per-rotor first guess
of the true thrust coefficient.  The guess is then corrected by the
smallest adjustment that makes the estimated coefficients consistent with
the nominal thrust, roll, and pitch at the commanded speeds; the yaw
equation is left out because the torque coefficient follows its own
(r^5) degradation law.

Estimates are reported as mismatch fractions k_mis = 1 - k_est/kf_model,
so 0 is healthy and 0.4 means the rotor lost 40 percent of its thrust
coefficient.
"""

from collections import deque
from dataclasses import dataclass

import numpy as np

from .vehicle import PITCH_SIGNS, ROLL_SIGNS


class EstimateUnavailable(RuntimeError):
    """Raised when a cycle cannot produce a trustworthy estimate."""


@dataclass
class DamageObservation:
    """Inputs of one estimation cycle, all from the same control cycle."""

    omega_nom: np.ndarray      # speeds allocating the nominal wrench
    omega_l1: np.ndarray       # speeds actually commanded (post adaptation)
    f_nom: float               # nominal collective thrust [N]
    m_nom: np.ndarray          # nominal body moment [N m]


@dataclass
class DamageEstimate:
    k_real: np.ndarray         # estimated true thrust coefficients
    k_mis: np.ndarray          # raw mismatch fractions this cycle
    d_prior: np.ndarray        # prior vector fed to the solver


def initial_guess(omega_nom, omega_l1, kf_model, eps=1.0):
    """First-cut coefficient guess from the speed ratio, per rotor.

    A rotor that must spin faster than the healthy model predicts to do
    the same job has lost coefficient: k_i = kf_model * w_nom^2 / w_l1^2.
    """
    if np.any(omega_l1 < eps):
        raise EstimateUnavailable("commanded speed near zero")
    return kf_model * (omega_nom / omega_l1) ** 2


def apply_prior(k_guess, kf_model, threshold=0.05):
    """Snap rotors with small implied mismatch back to the healthy value.

    Mild negative mismatches (rotor apparently better than new) are
    physically impossible for blade damage and get the same treatment,
    which keeps the healthy rotors from soaking up solver corrections.
    """
    mis = 1.0 - k_guess / kf_model
    d = np.where(mis <= threshold, kf_model, k_guess)
    return d


def build_constraints(omega_l1, f_nom, m_nom, params):
    """Equality system A k = b tying coefficients to the nominal wrench.

    Rows: thrust, roll, pitch at the commanded speeds.  Yaw is excluded.
    """
    w2 = omega_l1 ** 2
    A = np.array([
        w2,
        params.arm_x * ROLL_SIGNS * w2,
        params.arm_y * PITCH_SIGNS * w2,
    ])
    b = np.array([f_nom, m_nom[0], m_nom[1]])
    return A, b


def solve_damage(A, b, d, cond_limit=1e12):
    """Minimum-distance-to-prior solution of A k = b.

    k = A^T (A A^T)^-1 (b - A d) + d, the closed form of
    min ||k - d||^2 subject to A k = b.
    """
    G = A @ A.T
    ev = np.linalg.eigvalsh(G)       # G is symmetric PSD, cond = ratio of extremes
    if ev[0] <= 0.0 or ev[-1] / ev[0] > cond_limit:
        raise EstimateUnavailable("constraint system ill-conditioned")
    nu = np.linalg.solve(G, b - A @ d)
    return A.T @ nu + d


class DamageEstimator:
    """Gated per-cycle estimation with a sliding mean filter.

    Cycles are skipped (previous filtered value held) when the nominal
    thrust is too low to excite the rotors, when a commanded speed is near
    zero, or when the raw answer is non-physical; each skip reason maps to
    EstimateUnavailable internally.
    """

    def __init__(self, params, window=50, prior_threshold=0.05,
                 min_thrust_factor=0.5, negative_limit=-0.2):
        self.params = params
        self.window = deque(maxlen=window)
        self.prior_threshold = prior_threshold
        self.min_thrust_factor = min_thrust_factor
        self.negative_limit = negative_limit
        self.filtered = np.zeros(4)
        self.last = None
        self.last_raw = None       # raw k_mis of the most recent cycle, or None

    def reset(self):
        self.window.clear()
        self.filtered = np.zeros(4)
        self.last = None
        self.last_raw = None

    def estimate_cycle(self, obs):
        """Run one cycle; returns the current filtered mismatch 4-vector."""
        self.last_raw = None
        try:
            est = self._raw_estimate(obs)
        except EstimateUnavailable:
            return self.filtered
        self.last = est
        self.last_raw = est.k_mis
        self.window.append(est.k_mis)
        self.filtered = np.mean(self.window, axis=0)
        return self.filtered

    def _raw_estimate(self, obs):
        kf = self.params.kf_model
        if abs(obs.f_nom) <= self.min_thrust_factor * self.params.weight:
            raise EstimateUnavailable("nominal thrust below excitation floor")
        guess = initial_guess(obs.omega_nom, obs.omega_l1, kf)
        d = apply_prior(guess, kf, self.prior_threshold)
        A, b = build_constraints(obs.omega_l1, obs.f_nom, obs.m_nom, self.params)
        k = solve_damage(A, b, d)
        k_mis = 1.0 - k / kf
        if np.any(k_mis < self.negative_limit) or np.any(k_mis >= 1.0):
            raise EstimateUnavailable("non-physical mismatch")
        return DamageEstimate(k_real=k, k_mis=k_mis, d_prior=d)
