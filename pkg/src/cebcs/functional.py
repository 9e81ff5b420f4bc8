"""Gauge-resolved energy and mean fields of the constant-pairing Hamiltonian.

With the extended Wick theorem the rotated expectation value of
``H = sum_k (t_k - mu) N_k - g B^dag B`` factorizes into pair densities:

    <B^dag B>^phi = (sum_k kappabar_k)(sum_k kappa_k) + sum_k rho_k rho_kbar
    E^phi = sum_k (t_k - mu)(rho_k + rho_kbar) - g <B^dag B>^phi

The second term of ``<B^dag B>`` is the diagonal normal contraction; it is
dropped when the model is built with ``wick="pair"``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kernel import PairKernel
from .model import LevelScheme, ModelParams

__all__ = ["GaugeFields", "energy_at_angle", "fields_at_angle", "gauge_fields"]


@dataclass(frozen=True)
class GaugeFields:
    """Per-node energy and fields; level arrays have shape (omega, L)."""

    E: np.ndarray
    bb: np.ndarray
    h: np.ndarray
    h_bar: np.ndarray
    delta: np.ndarray  # (L,), same for every level
    delta_bar: np.ndarray
    D: np.ndarray


def _diag_on(model: ModelParams) -> float:
    return 1.0 if model.wick == "full" else 0.0


def energy_at_angle(levels: LevelScheme, model: ModelParams, kernels: PairKernel):
    """(E^phi, <B^dag B>^phi) at every node of ``kernels``."""
    t = (np.asarray(levels.t) - model.mu)[:, None]
    bb = kernels.kappa_bar.sum(axis=0) * kernels.kappa.sum(axis=0)
    bb = bb + _diag_on(model) * np.sum(kernels.rho * kernels.rho_bar, axis=0)
    E = np.sum(t * (kernels.rho + kernels.rho_bar), axis=0) - model.g * bb
    return E, bb


def fields_at_angle(levels: LevelScheme, model: ModelParams, kernels: PairKernel):
    """(h, h_bar, Delta, Delta_bar, D): derivatives of E^phi with respect to the densities."""
    t = (np.asarray(levels.t) - model.mu)[:, None]
    c = model.g * _diag_on(model)
    h = t - c * kernels.rho_bar
    h_bar = t - c * kernels.rho
    delta = model.g * kernels.kappa.sum(axis=0)
    delta_bar = model.g * kernels.kappa_bar.sum(axis=0)
    D = (h * kernels.rho + h_bar * kernels.rho_bar
         - delta[None, :] * kernels.kappa_bar - delta_bar[None, :] * kernels.kappa)
    return h, h_bar, delta, delta_bar, D


def gauge_fields(levels: LevelScheme, model: ModelParams, kernels: PairKernel) -> GaugeFields:
    E, bb = energy_at_angle(levels, model, kernels)
    h, h_bar, delta, delta_bar, D = fields_at_angle(levels, model, kernels)
    return GaugeFields(E=E, bb=bb, h=h, h_bar=h_bar, delta=delta, delta_bar=delta_bar, D=D)
