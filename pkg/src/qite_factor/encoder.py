"""Compile a biprime N into a diagonal Z-string Hamiltonian.

The cost function (N - p*q)**2 over the binary digits of the candidate
factors is expanded into an exact-integer multilinear polynomial, then
mapped to spin variables s_i = 2*x_i - 1.  All coefficient arithmetic is
exact: integers on the binary side, dyadic rationals (handled through
``fractions.Fraction``) on the spin side.  Floating point enters only when
a diagonal energy vector is materialized, and every energy is an exact
small-denominator dyadic so the float values are themselves exact.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from math import ceil

import numpy as np

# Beyond this, 16 * max(N, p_max*q_max)**2 can leave the float64 exact-integer
# range and diagonal energies would silently round.
_EXACT_FLOAT_BITS = 53

DEFAULT_MAX_QUBITS = 24


@dataclass(frozen=True)
class BitAllocation:
    """Register split for the two factors, LSBs of both fixed to 1."""

    n_bits_N: int
    m: int  # bit length allotted to factor p
    l: int  # bit length allotted to factor q

    def __post_init__(self):
        if self.m < 2 or self.l < 2:
            raise ValueError(f"factor registers need >= 2 bits, got m={self.m}, l={self.l}")

    @property
    def n_qubits(self) -> int:
        return (self.m - 1) + (self.l - 1)

    @property
    def p_max(self) -> int:
        return (1 << self.m) - 1

    @property
    def q_max(self) -> int:
        return (1 << self.l) - 1

    def decode(self, z: int) -> tuple[int, int]:
        """Map a basis index to the (p, q) pair it encodes.

        Bit i of z is variable x_i: x_0..x_{m-2} are p's bits 1..m-1
        (ascending significance), the rest are q's bits 1..l-1.
        """
        p = 1
        for i in range(self.m - 1):
            if (z >> i) & 1:
                p += 1 << (i + 1)
        q = 1
        for j in range(self.l - 1):
            if (z >> (self.m - 1 + j)) & 1:
                q += 1 << (j + 1)
        return p, q

    def encode(self, p: int, q: int) -> int:
        """Basis index whose decode() is (p, q); inverse of decode."""
        if p % 2 == 0 or q % 2 == 0:
            raise ValueError("factors must be odd (LSBs are fixed to 1)")
        if p.bit_length() > self.m or q.bit_length() > self.l:
            raise ValueError(f"({p}, {q}) does not fit allocation ({self.m}, {self.l})")
        z = 0
        for i in range(self.m - 1):
            if (p >> (i + 1)) & 1:
                z |= 1 << i
        for j in range(self.l - 1):
            if (q >> (j + 1)) & 1:
                z |= 1 << (self.m - 1 + j)
        return z


def _check_exact_range(N: int, m: int, l: int) -> None:
    peak = max(N, ((1 << m) - 1) * ((1 << l) - 1))
    if (peak * peak) << 4 >= (1 << _EXACT_FLOAT_BITS):
        raise ValueError(
            f"allocation ({m}, {l}) for N={N} overflows exact float64 energies"
        )


def _smallest_odd_factor(N: int) -> int | None:
    f = 3
    while f * f <= N:
        if N % f == 0:
            return f
        f += 2
    return None


def allocate_bits(
    N: int,
    override: tuple[int, int] | None = None,
    *,
    policy: str = "heuristic",
) -> BitAllocation:
    """Choose bit lengths (m, l) for the two factor registers of N.

    With ``override`` the given (m, l) is validated and used.  Otherwise
    ``policy`` selects the rule: "heuristic" takes m = ceil(bits(N)/2)
    (smaller factor is at most sqrt(N)) and l = bits(N) - 1 (cofactor is
    at most N/3 once the trivial N x 1 split is excluded);
    "oracle-assisted" factors N by trial division and returns the exact
    bit lengths (smaller factor first), reproducing solution-sized
    registers.

    Primality of N is not checked; callers own that concern.
    """
    if N % 2 == 0:
        raise ValueError("N must be odd")
    if N < 9:
        raise ValueError("N must be >= 9")
    n_bits = N.bit_length()
    if override is not None:
        m, l = override
    elif policy == "heuristic":
        m, l = ceil(n_bits / 2), n_bits - 1
    elif policy == "oracle-assisted":
        p = _smallest_odd_factor(N)
        if p is None:
            raise ValueError(f"N={N} is prime; oracle-assisted allocation impossible")
        m, l = p.bit_length(), (N // p).bit_length()
    else:
        raise ValueError(f"unknown allocation policy {policy!r}")
    if m < 2 or l < 2:
        raise ValueError(f"factor registers need >= 2 bits, got m={m}, l={l}")
    _check_exact_range(N, m, l)
    return BitAllocation(n_bits_N=n_bits, m=m, l=l)


@dataclass(frozen=True)
class MultilinearPoly:
    """Multilinear polynomial over binary variables with exact integer coefficients.

    ``terms`` maps a variable-subset bitmask to its coefficient; the
    empty mask holds the constant.  x_i**2 = x_i reduction is implicit in
    the representation (masks cannot repeat a variable).
    """

    n_vars: int
    terms: dict[int, int]

    def evaluate(self, z: int) -> int:
        """Value at the assignment where bit i of z is x_i."""
        return sum(c for mask, c in self.terms.items() if mask & ~z == 0)

    def __add__(self, other: "MultilinearPoly") -> "MultilinearPoly":
        n = max(self.n_vars, other.n_vars)
        terms = dict(self.terms)
        for mask, c in other.terms.items():
            terms[mask] = terms.get(mask, 0) + c
        return MultilinearPoly(n, _drop_zeros(terms))

    def __mul__(self, other: "MultilinearPoly") -> "MultilinearPoly":
        n = max(self.n_vars, other.n_vars)
        terms: dict[int, int] = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                mask = m1 | m2  # x_i**2 = x_i
                terms[mask] = terms.get(mask, 0) + c1 * c2
        return MultilinearPoly(n, _drop_zeros(terms))

    def scale(self, k: int) -> "MultilinearPoly":
        return MultilinearPoly(self.n_vars, _drop_zeros({m: k * c for m, c in self.terms.items()}))


def _drop_zeros(terms: dict) -> dict:
    return {m: c for m, c in terms.items() if c != 0}


def build_cost_poly(N: int, alloc: BitAllocation) -> MultilinearPoly:
    """Fully expanded (N - p(x)*q(x))**2 with p_0 = q_0 = 1 substituted."""
    Q = alloc.n_qubits
    p = MultilinearPoly(Q, {0: 1, **{1 << i: 1 << (i + 1) for i in range(alloc.m - 1)}})
    q = MultilinearPoly(
        Q, {0: 1, **{1 << (alloc.m - 1 + j): 1 << (j + 1) for j in range(alloc.l - 1)}}
    )
    diff = MultilinearPoly(Q, {0: N}) + (p * q).scale(-1)
    return diff * diff


@dataclass(frozen=True)
class SpinHamiltonian:
    """Diagonal Hamiltonian as Z-string terms with dyadic-rational coefficients.

    Each entry of ``terms`` is (qubit-subset mask, coefficient); the empty
    mask carries the constant.  A basis state z assigns spin s_i = +1 to
    qubits with bit i of z set and s_i = -1 otherwise (operator form:
    s_i -> -Z_i under Z|0> = +|0>).  ``alloc`` is optional decode metadata
    carried along when the operator came out of the encoder.
    """

    n_qubits: int
    terms: tuple[tuple[int, Fraction], ...]
    alloc: BitAllocation | None = None

    def evaluate(self, z: int) -> Fraction:
        """Exact diagonal entry for basis state z."""
        total = Fraction(0)
        for mask, coeff in self.terms:
            m = mask
            sign = 1
            while m:
                low = m & -m
                if not (z & low):
                    sign = -sign
                m ^= low
            total += sign * coeff
        return total

    def diagonal(self, max_qubits: int = DEFAULT_MAX_QUBITS) -> np.ndarray:
        """diag(H)[z] for all 2**n basis states, cached after first call."""
        cached = getattr(self, "_diag", None)
        if cached is not None:
            return cached
        diag = diag_energies(self, max_qubits=max_qubits)
        object.__setattr__(self, "_diag", diag)
        return diag


def binary_to_spin(poly: MultilinearPoly) -> SpinHamiltonian:
    """Substitute x_i = (s_i + 1)/2 and collect spin monomials exactly."""
    spin: dict[int, Fraction] = {}
    for mask, coeff in poly.terms.items():
        k = mask.bit_count()
        base = Fraction(coeff, 1 << k)
        # expand prod_{i in mask} (s_i + 1) over all submasks
        sub = mask
        while True:
            spin[sub] = spin.get(sub, Fraction(0)) + base
            if sub == 0:
                break
            sub = (sub - 1) & mask
    terms = tuple(sorted((m, c) for m, c in spin.items() if c != 0))
    return SpinHamiltonian(n_qubits=poly.n_vars, terms=terms)


def compile_hamiltonian(N: int, alloc: BitAllocation) -> SpinHamiltonian:
    """Full pipeline: cost polynomial -> spin form, with decode metadata."""
    h = binary_to_spin(build_cost_poly(N, alloc))
    return SpinHamiltonian(n_qubits=h.n_qubits, terms=h.terms, alloc=alloc)


def diag_energies(h: SpinHamiltonian, max_qubits: int = DEFAULT_MAX_QUBITS) -> np.ndarray:
    """Diagonal of H over all basis states, exact in float64.

    Basis convention: bit i of the vector index is variable x_i, with x_0
    the least significant bit.
    """
    if h.n_qubits > max_qubits:
        raise ValueError(f"{h.n_qubits} qubits exceeds the configured maximum {max_qubits}")
    dim = 1 << h.n_qubits
    idx = np.arange(dim)
    spins = [np.where((idx >> i) & 1 == 1, 1.0, -1.0) for i in range(h.n_qubits)]
    diag = np.zeros(dim)
    for mask, coeff in h.terms:
        sign = np.ones(dim)
        m = mask
        while m:
            i = (m & -m).bit_length() - 1
            sign = sign * spins[i]
            m &= m - 1
        diag += float(coeff) * sign
    return diag


def ground_solutions(
    h: SpinHamiltonian, N: int, alloc: BitAllocation | None = None
) -> list[tuple[int, int, int]]:
    """All basis states with energy exactly 0, decoded to (p, q, z).

    Brute force over the full basis; the ground truth used by the engine's
    target tracking and by the tests.  An empty result means the
    allocation cannot represent a factor pair of N (reported, not raised).
    Symmetric encodings (p, q) and (q, p) are both returned when both fit.
    """
    alloc = alloc or h.alloc
    if alloc is None:
        raise ValueError("decoding ground states needs a BitAllocation")
    diag = h.diagonal()
    out = []
    for z in np.nonzero(diag == 0.0)[0]:
        p, q = alloc.decode(int(z))
        if p * q == N:
            out.append((p, q, int(z)))
    return out


def term_count_bound(n: int) -> int:
    """Monomial-class count bound for an n x n free-bit expansion."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return (n * (n + 1) // 2) ** 2 + 1


def hamiltonian_to_json(h: SpinHamiltonian) -> dict:
    """JSON document for a spin Hamiltonian; terms sorted by ascending mask."""
    terms = []
    for mask, coeff in sorted(h.terms):
        denom = coeff.denominator
        k = denom.bit_length() - 1
        if 1 << k != denom:
            raise ValueError(f"coefficient {coeff} is not dyadic")
        terms.append({"mask": int(mask), "num": int(coeff.numerator), "denom_pow2": k})
    doc = {"n_qubits": h.n_qubits, "terms": terms}
    if h.alloc is not None:
        doc["allocation"] = {"n_bits_N": h.alloc.n_bits_N, "m": h.alloc.m, "l": h.alloc.l}
    return doc


def hamiltonian_from_json(doc: dict) -> SpinHamiltonian:
    """Inverse of hamiltonian_to_json; validates the schema strictly."""
    if not isinstance(doc, dict):
        raise ValueError("hamiltonian document must be a JSON object")
    try:
        n_qubits = doc["n_qubits"]
        raw_terms = doc["terms"]
    except KeyError as exc:
        raise ValueError(f"hamiltonian document missing key {exc}") from None
    if not isinstance(n_qubits, int) or n_qubits < 1:
        raise ValueError("n_qubits must be a positive integer")
    if not isinstance(raw_terms, list):
        raise ValueError("terms must be a list")
    terms = []
    for entry in raw_terms:
        try:
            mask, num, k = entry["mask"], entry["num"], entry["denom_pow2"]
        except (TypeError, KeyError):
            raise ValueError(f"malformed term entry {entry!r}") from None
        if not all(isinstance(v, int) for v in (mask, num, k)) or k < 0:
            raise ValueError(f"malformed term entry {entry!r}")
        if mask < 0 or mask >= 1 << n_qubits:
            raise ValueError(f"term mask {mask} out of range for {n_qubits} qubits")
        terms.append((mask, Fraction(num, 1 << k)))
    alloc = None
    if "allocation" in doc:
        a = doc["allocation"]
        alloc = BitAllocation(n_bits_N=a["n_bits_N"], m=a["m"], l=a["l"])
    return SpinHamiltonian(n_qubits=n_qubits, terms=tuple(sorted(terms)), alloc=alloc)


def save_hamiltonian(h: SpinHamiltonian, path) -> None:
    with open(path, "w") as f:
        json.dump(hamiltonian_to_json(h), f, indent=1)


def load_hamiltonian(path) -> SpinHamiltonian:
    with open(path) as f:
        return hamiltonian_from_json(json.load(f))
