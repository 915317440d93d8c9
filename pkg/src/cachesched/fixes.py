from __future__ import annotations

from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

from .errors import ContractError


class FixSet:
    """Partial assignment of caching variables, keyed by 0-based ``(t, f)``.

    Fixes are monotone: re-fixing a pair to the same value is a no-op, and
    changing a fixed value raises :class:`ContractError`.
    """

    def __init__(self, fixes: Mapping[tuple[int, int], int] | None = None):
        self._fixed: dict[tuple[int, int], int] = {}
        for (t, f), v in (fixes or {}).items():
            self.fix(t, f, v)

    def fix(self, t: int, f: int, value: int) -> bool:
        """Fix ``x[t, f] = value``; return True when the pair was new."""
        value = int(value)
        if value not in (0, 1):
            raise ContractError(f"fix value must be 0 or 1, got {value}")
        old = self._fixed.get((t, f))
        if old is None:
            self._fixed[(t, f)] = value
            return True
        if old != value:
            raise ContractError(f"x[{t},{f}] already fixed to {old}")
        return False

    def get(self, t: int, f: int) -> int | None:
        return self._fixed.get((t, f))

    def __contains__(self, key) -> bool:
        return key in self._fixed

    def __len__(self) -> int:
        return len(self._fixed)

    def __iter__(self) -> Iterator[tuple[int, int]]:
        return iter(self._fixed)

    def items(self) -> Iterable[tuple[tuple[int, int], int]]:
        return self._fixed.items()

    def copy(self) -> "FixSet":
        out = FixSet()
        out._fixed = dict(self._fixed)
        return out

    def issuperset(self, other: "FixSet") -> bool:
        return all(self._fixed.get(k) == v for k, v in other.items())

    def for_content(self, f: int) -> dict[int, int]:
        return {t: v for (t, g), v in self._fixed.items() if g == f}

    def allows(self, f: int, sequence: Sequence[int]) -> bool:
        return all(int(sequence[t]) == v for (t, g), v in self._fixed.items() if g == f)

    def masks(self, T: int, F: int) -> tuple[np.ndarray, np.ndarray]:
        """Boolean ``(T, F)`` masks of pairs fixed to one and to zero."""
        ones = np.zeros((T, F), dtype=bool)
        zeros = np.zeros((T, F), dtype=bool)
        for (t, f), v in self._fixed.items():
            (ones if v else zeros)[t, f] = True
        return ones, zeros

    def fixed_one_load(self, t: int, sizes: Sequence[int]) -> int:
        return sum(sizes[f] for (s, f), v in self._fixed.items() if s == t and v == 1)

    def __eq__(self, other):
        return isinstance(other, FixSet) and self._fixed == other._fixed

    def __repr__(self):
        return f"FixSet({dict(sorted(self._fixed.items()))})"
