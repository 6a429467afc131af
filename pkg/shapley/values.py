"""
Exact Shapley values over a complete utility table.

    phi_i = sum over S not containing i of |S|! (N - |S| - 1)! / N! * (U(S + i) - U(S))

with U(empty) = 0. The weights equal 1 / (N * C(N - 1, |S|)).
"""

from __future__ import annotations

from itertools import permutations
from math import comb

import numpy as np

from shapley.coalitions import ShapleyVector, UtilityTable, ValuationError, coalition_sizes

# N! orderings are enumerated; 10! is about 3.6 million
MAX_PERMUTATION_PLAYERS = 10


def shapley_weights(n_players: int) -> np.ndarray:
    """Weight per coalition size s = 0..N-1."""
    return np.array([1.0 / (n_players * comb(n_players - 1, s)) for s in range(n_players)])


def shapley_from_table(table: UtilityTable) -> ShapleyVector:
    table.require_complete()
    n = table.n_players
    u = table.values
    masks = np.arange(1 << n)
    size_weight = shapley_weights(n)[np.minimum(coalition_sizes(n), n - 1)]

    phi = np.empty(n)
    for i in range(n):
        bit = 1 << i
        without = masks[(masks & bit) == 0]
        phi[i] = np.sum(size_weight[without] * (u[without | bit] - u[without]))
    return ShapleyVector(table.utility, phi, table.grand_utility, list(table.client_ids))


def shapley_by_permutations(table: UtilityTable) -> ShapleyVector:
    """Average marginal contribution over all N! join orders; a cross-check for small N."""
    table.require_complete()
    n = table.n_players
    if n > MAX_PERMUTATION_PLAYERS:
        raise ValuationError(f"permutation enumeration limited to {MAX_PERMUTATION_PLAYERS} clients, got {n}")
    u = table.values
    phi = np.zeros(n)
    count = 0
    for order in permutations(range(n)):
        mask = 0
        for i in order:
            phi[i] += u[mask | (1 << i)] - u[mask]
            mask |= 1 << i
        count += 1
    return ShapleyVector(table.utility, phi / count, table.grand_utility, list(table.client_ids))
