"""Orthogonal pilot book, per-cell pilot matrices, and allocation plans."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np


def build_pilot_book(n_pilots: int) -> np.ndarray:
    """Rows of the n-point DFT matrix: n orthogonal unit-power sequences.

    Row p, symbol t is exp(-2j*pi*p*t/n); every symbol has unit modulus and
    book @ book.conj().T == n * I.
    """
    if n_pilots < 1:
        raise ValueError("need at least one pilot sequence")
    idx = np.arange(n_pilots)
    return np.exp(-2j * np.pi * np.outer(idx, idx) / n_pilots)


@dataclass
class AllocationPlan:
    """Per-cell pilot indices: cells[l][j] is the pilot of user j in cell l."""

    cells: np.ndarray
    allocator: str = ""

    def __post_init__(self):
        self.cells = np.asarray(self.cells, dtype=int)
        if self.cells.ndim != 2:
            raise ValueError("plan must be a (cells, users) index table")

    @property
    def n_cells(self) -> int:
        return self.cells.shape[0]

    @property
    def n_users(self) -> int:
        return self.cells.shape[1]

    def to_json(self) -> str:
        return json.dumps({"cells": self.cells.tolist(), "allocator": self.allocator})

    @classmethod
    def from_json(cls, text: str) -> "AllocationPlan":
        data = json.loads(text)
        return cls(cells=np.array(data["cells"], dtype=int),
                   allocator=data.get("allocator", ""))


def pilot_matrix(plan: AllocationPlan, cell: int, book: np.ndarray) -> np.ndarray:
    """Stack the assigned sequences of one cell into an (N, pilot_len) matrix."""
    idx = plan.cells[cell]
    n_pilots = book.shape[0]
    if np.any(idx < 0) or np.any(idx >= n_pilots):
        raise ValueError(
            f"pilot index out of range [0, {n_pilots}) in cell {cell}: {idx.tolist()}")
    return book[idx]


def correlation(lam_a: np.ndarray, lam_b: np.ndarray) -> np.ndarray:
    """Pilot cross-correlation lam_a @ lam_b^H.

    With a shared orthogonal book the entries are pilot_len where the two
    users collide and 0 elsewhere.
    """
    if lam_a.shape[1] != lam_b.shape[1]:
        raise ValueError("pilot matrices must share the sequence length")
    return lam_a @ lam_b.conj().T


def is_balanced(cell_assignment: np.ndarray, n_pilots: int) -> bool:
    """True when every pilot is used floor(N/n) or ceil(N/n) times."""
    counts = np.bincount(np.asarray(cell_assignment, dtype=int), minlength=n_pilots)
    n = len(cell_assignment)
    return bool(counts.min() >= n // n_pilots and counts.max() <= -(-n // n_pilots))
