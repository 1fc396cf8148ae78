"""Exhaustive maximum-likelihood decoding over equivalent channel models.

The decision metric is the variance-weighted squared Euclidean distance

    sum_k |y_k - theta (H X)_k|^2 / var_k

which is the exact ML rule for independent complex Gaussian noise with the
given per-observation variances.  Codebooks are enumerated exhaustively; ties
resolve to the lowest index.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .codes import Codebook

DECODE_BUDGET = 2**20


class DecodeBudgetError(ValueError):
    """Raised when a codebook is too large for exhaustive decoding."""


@dataclass
class DecodeProblem:
    equivalent_channel: np.ndarray
    observations: np.ndarray
    codebook: Codebook
    theta: float
    noise_variance_profile: np.ndarray

    def __post_init__(self):
        if np.any(np.asarray(self.noise_variance_profile) <= 0):
            raise ValueError("noise variances must be positive")


def weighted_metric(y: np.ndarray, model: np.ndarray,
                    variances: np.ndarray) -> float:
    """sum |y - model|^2 / var; plain squared distance when all var = 1."""
    diff = np.abs(np.asarray(y) - np.asarray(model)) ** 2
    return float(np.sum(diff / variances))


def ml_decode(problem: DecodeProblem) -> int:
    """Index of the codeword minimizing the weighted metric."""
    book = problem.codebook
    if book.size > DECODE_BUDGET:
        raise DecodeBudgetError(
            f"codebook size {book.size} exceeds decode budget {DECODE_BUDGET}")
    words = book.all_codewords()
    H = np.atleast_2d(np.asarray(problem.equivalent_channel))
    y = np.atleast_2d(np.asarray(problem.observations))
    variances = np.broadcast_to(
        np.atleast_2d(np.asarray(problem.noise_variance_profile)), y.shape)
    model = problem.theta * np.einsum("rn,knt->krt", H, words)
    metrics = np.sum(np.abs(y[None, :, :] - model) ** 2 / variances[None, :, :],
                     axis=(1, 2))
    return int(np.argmin(metrics))
