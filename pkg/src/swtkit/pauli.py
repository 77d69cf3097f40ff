"""Symbolic algebra of n-qubit Pauli strings and weighted Pauli sums.

A string is stored as two bitmasks ``(x, z)`` and represents
``i^{|x & z|} X^x Z^z``, so ``x = z = 1`` on a qubit is ``Y``.  Qubit 0 is
the leftmost letter and the most significant bit of a computational basis
index; the same convention is used by the state-vector simulator.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Iterator, Mapping

import numpy as np

from .errors import DimensionError, ResourceError, ValidationError
from .policy import DEFAULT_POLICY

_LETTER_BITS = {"I": (0, 0), "X": (1, 0), "Y": (1, 1), "Z": (0, 1)}
_BITS_LETTER = {bits: letter for letter, bits in _LETTER_BITS.items()}
_I_POWERS = (1, 1j, -1, -1j)


def _popcount(v: int) -> int:
    return bin(v).count("1")


@dataclass(frozen=True, order=False)
class PauliString:
    n_qubits: int
    x: int = 0
    z: int = 0

    def __post_init__(self):
        if self.n_qubits < 1:
            raise ValidationError("a Pauli string needs at least one qubit")
        limit = 1 << self.n_qubits
        if not (0 <= self.x < limit and 0 <= self.z < limit):
            raise ValidationError("bitmask exceeds the declared qubit count")

    @classmethod
    def from_label(cls, label: str) -> "PauliString":
        label = label.strip().upper()
        if not label or any(c not in _LETTER_BITS for c in label):
            raise ValidationError(f"invalid Pauli label {label!r}")
        x = z = 0
        for c in label:
            bx, bz = _LETTER_BITS[c]
            x = (x << 1) | bx
            z = (z << 1) | bz
        return cls(len(label), x, z)

    @classmethod
    def from_sparse(cls, n_qubits: int, letters: Mapping[int, str]) -> "PauliString":
        """Build from ``{qubit_index: letter}`` with 0-based qubit indices."""
        chars = ["I"] * n_qubits
        for q, c in letters.items():
            if not 0 <= q < n_qubits:
                raise ValidationError(f"qubit {q} out of range for n={n_qubits}")
            chars[q] = c
        return cls.from_label("".join(chars))

    @classmethod
    def identity(cls, n_qubits: int) -> "PauliString":
        return cls(n_qubits)

    @property
    def letters(self) -> str:
        n = self.n_qubits
        return "".join(
            _BITS_LETTER[((self.x >> (n - 1 - q)) & 1, (self.z >> (n - 1 - q)) & 1)]
            for q in range(n)
        )

    @property
    def weight(self) -> int:
        return _popcount(self.x | self.z)

    @property
    def support(self) -> tuple[int, ...]:
        n = self.n_qubits
        mask = self.x | self.z
        return tuple(q for q in range(n) if (mask >> (n - 1 - q)) & 1)

    @property
    def is_identity(self) -> bool:
        return self.x == 0 and self.z == 0

    @property
    def y_count(self) -> int:
        return _popcount(self.x & self.z)

    def commutes_with(self, other: "PauliString") -> bool:
        _check_sizes(self.n_qubits, other.n_qubits)
        return (_popcount(self.x & other.z) + _popcount(self.z & other.x)) % 2 == 0

    def to_dense(self, policy=DEFAULT_POLICY) -> np.ndarray:
        _check_cap(self.n_qubits, policy)
        dim = 1 << self.n_qubits
        cols = np.arange(dim)
        mat = np.zeros((dim, dim), dtype=complex)
        mat[cols ^ self.x, cols] = self.phases(cols)
        return mat

    def phases(self, indices: np.ndarray) -> np.ndarray:
        """Phase picked up by basis state ``|c>`` under ``P|c> = phase |c ^ x>``."""
        signs = _parity(indices & self.z)
        return _I_POWERS[self.y_count % 4] * (1 - 2 * signs)

    def __str__(self) -> str:
        return self.letters

    def __repr__(self) -> str:
        return f"PauliString({self.letters!r})"

    def __lt__(self, other: "PauliString") -> bool:
        return self.letters < other.letters


def _parity(values: np.ndarray) -> np.ndarray:
    values = np.asarray(values, dtype=np.int64).copy()
    out = np.zeros(values.shape, dtype=np.int64)
    while np.any(values):
        out ^= values & 1
        values >>= 1
    return out


def _check_sizes(n_a: int, n_b: int) -> None:
    if n_a != n_b:
        raise DimensionError(f"qubit count mismatch: {n_a} vs {n_b}")


def _check_cap(n: int, policy) -> None:
    if n > policy.max_dense_qubits:
        raise ResourceError(
            f"dense materialization of {n} qubits exceeds the cap of {policy.max_dense_qubits}"
        )


def pauli_multiply(a: PauliString, b: PauliString) -> tuple[complex, PauliString]:
    """Return ``(phase, product)`` with ``a @ b == phase * product``."""
    _check_sizes(a.n_qubits, b.n_qubits)
    x, z = a.x ^ b.x, a.z ^ b.z
    power = a.y_count + b.y_count - _popcount(x & z) + 2 * _popcount(a.z & b.x)
    return _I_POWERS[power % 4], PauliString(a.n_qubits, x, z)


class PauliSum:
    """Weighted sum of Pauli strings in canonical (lexicographic) order.

    Coefficients are complex internally; sums built from real data stay
    real and ``is_real`` reports it.  Terms whose magnitude falls below the
    drop tolerance are removed on construction.
    """

    __slots__ = ("n_qubits", "_terms", "_hash")

    def __init__(self, n_qubits: int, terms: Iterable[tuple[complex, PauliString]] = (), *,
                 drop_tol: float = DEFAULT_POLICY.drop_tol):
        if n_qubits < 1:
            raise ValidationError("a Pauli sum needs at least one qubit")
        merged: dict[PauliString, complex] = {}
        for coeff, string in terms:
            if isinstance(string, str):
                string = PauliString.from_label(string)
            _check_sizes(n_qubits, string.n_qubits)
            merged[string] = merged.get(string, 0.0) + complex(coeff)
        self.n_qubits = n_qubits
        self._terms = tuple(
            (merged[s], s) for s in sorted(merged, key=lambda s: s.letters)
            if abs(merged[s]) >= drop_tol
        )
        self._hash = None

    @classmethod
    def from_dict(cls, data: Mapping[str, complex]) -> "PauliSum":
        if not data:
            raise ValidationError("cannot infer qubit count from an empty mapping")
        n = len(next(iter(data)))
        return cls(n, ((c, PauliString.from_label(s)) for s, c in data.items()))

    @classmethod
    def identity(cls, n_qubits: int, coeff: float = 1.0) -> "PauliSum":
        return cls(n_qubits, [(coeff, PauliString.identity(n_qubits))])

    @property
    def terms(self) -> tuple[tuple[complex, PauliString], ...]:
        return self._terms

    @property
    def strings(self) -> tuple[PauliString, ...]:
        return tuple(s for _, s in self._terms)

    @property
    def is_real(self) -> bool:
        return all(abs(c.imag) < DEFAULT_POLICY.drop_tol for c, _ in self._terms)

    def real_terms(self) -> list[tuple[float, PauliString]]:
        if not self.is_real:
            raise ValidationError("Pauli sum has complex coefficients")
        return [(c.real, s) for c, s in self._terms]

    def coefficient(self, string: PauliString | str) -> complex:
        if isinstance(string, str):
            string = PauliString.from_label(string)
        for c, s in self._terms:
            if s == string:
                return c
        return 0.0

    def __len__(self) -> int:
        return len(self._terms)

    def __iter__(self) -> Iterator[tuple[complex, PauliString]]:
        return iter(self._terms)

    def __eq__(self, other) -> bool:
        return isinstance(other, PauliSum) and self.n_qubits == other.n_qubits and self._terms == other._terms

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self.n_qubits, self._terms))
        return self._hash

    def __add__(self, other: "PauliSum") -> "PauliSum":
        _check_sizes(self.n_qubits, other.n_qubits)
        return PauliSum(self.n_qubits, self._terms + other._terms)

    def __sub__(self, other: "PauliSum") -> "PauliSum":
        return self + (-1.0) * other

    def __mul__(self, scalar: complex) -> "PauliSum":
        return PauliSum(self.n_qubits, ((scalar * c, s) for c, s in self._terms))

    __rmul__ = __mul__

    def __neg__(self) -> "PauliSum":
        return (-1.0) * self

    def normalized(self) -> "PauliSum":
        return PauliSum(self.n_qubits, self._terms)

    def to_dense(self, policy=DEFAULT_POLICY) -> np.ndarray:
        return to_dense(self, policy)

    def __repr__(self) -> str:
        return f"PauliSum({self.n_qubits}, {len(self)} terms)"

    def __str__(self) -> str:
        return format_pauli_sum(self)


def hermitian_commutator(a: PauliSum, b: PauliSum) -> PauliSum:
    """Real-coefficient sum ``S`` with ``[A, B] = i S``."""
    _check_sizes(a.n_qubits, b.n_qubits)
    out = []
    for ca, sa in a:
        for cb, sb in b:
            if sa.commutes_with(sb):
                continue
            phase, prod = pauli_multiply(sa, sb)
            # anticommuting strings: [sa, sb] = 2 sa sb and phase is +-i
            out.append((2.0 * ca * cb * phase / 1j, prod))
    return PauliSum(a.n_qubits, out)


def pauli_sum_product(a: PauliSum, b: PauliSum) -> PauliSum:
    _check_sizes(a.n_qubits, b.n_qubits)
    out = []
    for ca, sa in a:
        for cb, sb in b:
            phase, prod = pauli_multiply(sa, sb)
            out.append((ca * cb * phase, prod))
    return PauliSum(a.n_qubits, out)


@lru_cache(maxsize=64)
def pauli_square(a: PauliSum) -> PauliSum:
    """Cached ``A @ A``; Hermitian sums square to real coefficients."""
    return pauli_sum_product(a, a)


def to_dense(a: PauliSum, policy=DEFAULT_POLICY) -> np.ndarray:
    _check_cap(a.n_qubits, policy)
    dim = 1 << a.n_qubits
    cols = np.arange(dim)
    mat = np.zeros((dim, dim), dtype=complex)
    for coeff, s in a:
        mat[cols ^ s.x, cols] += coeff * s.phases(cols)
    return mat


def format_pauli_sum(a: PauliSum) -> str:
    """One ``<coefficient> <letters>`` line per term in canonical order."""
    lines = []
    for c, s in a:
        if abs(c.imag) < DEFAULT_POLICY.drop_tol:
            lines.append(f"{float(c.real)!r} {s.letters}")
        else:
            lines.append(f"{c!r} {s.letters}")
    return "\n".join(lines) + ("\n" if lines else "")


def parse_pauli_sum(text: str, n_qubits: int | None = None) -> PauliSum:
    terms = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ValidationError(f"line {lineno}: expected '<coefficient> <letters>'")
        try:
            coeff = complex(parts[0]) if "j" in parts[0] else float(parts[0])
        except ValueError as exc:
            raise ValidationError(f"line {lineno}: bad coefficient {parts[0]!r}") from exc
        terms.append((coeff, PauliString.from_label(parts[1])))
    if n_qubits is None:
        if not terms:
            raise ValidationError("empty Pauli sum needs an explicit qubit count")
        n_qubits = terms[0][1].n_qubits
    return PauliSum(n_qubits, terms)
