"""Encoder tests: the N=15 worked example is the golden anchor, everything
else is checked against independent brute-force expansions."""

from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qite_factor import (
    BitAllocation,
    SpinHamiltonian,
    allocate_bits,
    binary_to_spin,
    build_cost_poly,
    compile_hamiltonian,
    diag_energies,
    ground_solutions,
    term_count_bound,
)
from qite_factor.encoder import (
    hamiltonian_from_json,
    hamiltonian_to_json,
    load_hamiltonian,
    save_hamiltonian,
)

N15_ALLOC = BitAllocation(n_bits_N=4, m=3, l=2)


def spin_coeffs_by_character_sum(poly):
    """Independent spin-coefficient extraction.

    Over s_i = +-1 the monomials chi_S(z) = prod_{i in S} s_i(z) are an
    orthogonal basis, so coeff(S) = 2^-Q sum_z f(z) chi_S(z).  This never
    touches the substitution path used by binary_to_spin.
    """
    Q = poly.n_vars
    out = {}
    for S in range(1 << Q):
        acc = Fraction(0)
        for z in range(1 << Q):
            chi = 1
            m = S
            while m:
                low = m & -m
                if not z & low:
                    chi = -chi
                m ^= low
            acc += chi * poly.evaluate(z)
        coeff = Fraction(acc, 1 << Q)
        if coeff:
            out[S] = coeff
    return out


# --- bit allocation ---------------------------------------------------------


def test_allocation_n15_paper_example():
    alloc = allocate_bits(15, override=(3, 2))
    assert alloc.n_qubits == 3
    assert (alloc.m, alloc.l) == (3, 2)


def test_allocation_n91():
    assert allocate_bits(91, override=(3, 4)).n_qubits == 5


def test_allocation_default_heuristic():
    alloc = allocate_bits(15)
    assert (alloc.m, alloc.l) == (2, 3)
    assert alloc.n_qubits == 3


def test_allocation_oracle_assisted():
    assert (allocate_bits(91, policy="oracle-assisted").m,
            allocate_bits(91, policy="oracle-assisted").l) == (3, 4)
    assert (allocate_bits(15, policy="oracle-assisted").m,
            allocate_bits(15, policy="oracle-assisted").l) == (2, 3)


def test_allocation_rejects_bad_inputs():
    with pytest.raises(ValueError):
        allocate_bits(16)  # even
    with pytest.raises(ValueError):
        allocate_bits(7)  # too small
    with pytest.raises(ValueError):
        allocate_bits(15, override=(1, 3))  # m < 2
    with pytest.raises(ValueError):
        allocate_bits(15, override=(3, 1))  # l < 2
    with pytest.raises(ValueError):
        allocate_bits(15, override=(20, 20))  # exceeds exact float64 energies
    with pytest.raises(ValueError):
        allocate_bits(13, policy="oracle-assisted")  # prime


def test_decode_encode_roundtrip():
    alloc = BitAllocation(n_bits_N=7, m=3, l=4)
    for z in range(1 << alloc.n_qubits):
        p, q = alloc.decode(z)
        assert alloc.encode(p, q) == z


# --- cost polynomial --------------------------------------------------------


def test_n15_binary_golden():
    # 196 - 52x2 - 52x0 - 56x2x0 - 96x1 - 48x2x1 + 16x0x1 + 128x0x1x2
    poly = build_cost_poly(15, N15_ALLOC)
    assert poly.terms == {
        0b000: 196,
        0b100: -52,
        0b001: -52,
        0b101: -56,
        0b010: -96,
        0b110: -48,
        0b011: 16,
        0b111: 128,
    }


def test_n15_solution_assignment_is_zero():
    poly = build_cost_poly(15, N15_ALLOC)
    assert poly.evaluate(0b110) == 0  # x0=0, x1=1, x2=1
    assert poly.evaluate(0b000) == 196  # (15 - 1*1)**2


def test_cost_poly_equals_squared_residual_everywhere():
    for N, m, l in [(15, 3, 2), (15, 2, 3), (21, 3, 3), (91, 3, 4), (35, 3, 3)]:
        alloc = allocate_bits(N, override=(m, l))
        poly = build_cost_poly(N, alloc)
        for z in range(1 << alloc.n_qubits):
            p, q = alloc.decode(z)
            assert poly.evaluate(z) == (N - p * q) ** 2


@settings(max_examples=40, deadline=None)
@given(
    n=st.integers(min_value=9, max_value=2001).filter(lambda v: v % 2 == 1),
    m=st.integers(min_value=2, max_value=4),
    l=st.integers(min_value=2, max_value=4),
)
def test_cost_poly_identity_property(n, m, l):
    alloc = allocate_bits(n, override=(m, l))
    poly = build_cost_poly(n, alloc)
    for z in range(1 << alloc.n_qubits):
        p, q = alloc.decode(z)
        assert poly.evaluate(z) == (n - p * q) ** 2


# --- spin mapping -----------------------------------------------------------


def test_n15_spin_golden():
    # 90 - 36s2 - 40s1 - 20s0 + 2s2s0 + 4s2s1 + 20s0s1 + 16s0s1s2; the
    # second pair coefficient (the paper prints s2s0 twice) must come out
    # as +4 on s2s1.
    h = binary_to_spin(build_cost_poly(15, N15_ALLOC))
    assert dict(h.terms) == {
        0b000: Fraction(90),
        0b100: Fraction(-36),
        0b010: Fraction(-40),
        0b001: Fraction(-20),
        0b101: Fraction(2),
        0b110: Fraction(4),
        0b011: Fraction(20),
        0b111: Fraction(16),
    }


def test_n15_spin_matches_character_sum_oracle():
    poly = build_cost_poly(15, N15_ALLOC)
    assert dict(binary_to_spin(poly).terms) == spin_coeffs_by_character_sum(poly)


def test_spin_preserves_evaluation_everywhere():
    for N, m, l in [(15, 3, 2), (21, 3, 3), (91, 3, 4)]:
        alloc = allocate_bits(N, override=(m, l))
        poly = build_cost_poly(N, alloc)
        h = binary_to_spin(poly)
        for z in range(1 << alloc.n_qubits):
            assert h.evaluate(z) == poly.evaluate(z)


def test_spin_solution_state_energy_zero():
    h = binary_to_spin(build_cost_poly(15, N15_ALLOC))
    assert h.evaluate(0b110) == 0


def test_constant_poly_maps_to_constant_term():
    from qite_factor import MultilinearPoly

    h = binary_to_spin(MultilinearPoly(2, {0: 7}))
    assert h.terms == ((0, Fraction(7)),)


def test_spin_coefficients_are_dyadic_with_bounded_denominator():
    for N, m, l in [(15, 3, 2), (91, 3, 4), (247, 4, 5)]:
        h = compile_hamiltonian(N, allocate_bits(N, override=(m, l)))
        for _, coeff in h.terms:
            denom = coeff.denominator
            assert denom & (denom - 1) == 0  # power of two
            assert denom <= 16  # max monomial degree is 4


# --- diagonal and ground states ---------------------------------------------


def test_diag_energies_n15():
    h = compile_hamiltonian(15, N15_ALLOC)
    diag = diag_energies(h)
    assert diag.tolist() == [196.0, 144.0, 100.0, 64.0, 144.0, 36.0, 0.0, 36.0]
    assert diag[3] == 64.0  # p=7, q=1
    assert diag[6] == 0.0  # p=5, q=3


def test_diag_energies_zero_hamiltonian():
    h = SpinHamiltonian(n_qubits=3, terms=())
    assert np.array_equal(diag_energies(h), np.zeros(8))


def test_diag_energies_size_guard():
    h = SpinHamiltonian(n_qubits=30, terms=())
    with pytest.raises(ValueError):
        diag_energies(h)


def test_diag_exact_integer_identity_over_corpus():
    for N, m, l in [(15, 3, 2), (55, 3, 4), (65, 3, 4), (77, 3, 4), (91, 3, 4), (247, 4, 5)]:
        alloc = allocate_bits(N, override=(m, l))
        diag = diag_energies(compile_hamiltonian(N, alloc))
        for z in range(1 << alloc.n_qubits):
            p, q = alloc.decode(z)
            assert diag[z] == (N - p * q) ** 2  # exact, no tolerance


def test_ground_solutions_n15():
    h = compile_hamiltonian(15, N15_ALLOC)
    assert ground_solutions(h, 15) == [(5, 3, 6)]


def test_ground_solutions_n91():
    alloc = allocate_bits(91, override=(3, 4))
    sols = ground_solutions(compile_hamiltonian(91, alloc), 91)
    assert sols == [(7, 13, alloc.encode(7, 13))]


def test_ground_solutions_symmetric_pair():
    alloc = allocate_bits(15, override=(3, 3))
    sols = ground_solutions(compile_hamiltonian(15, alloc), 15)
    assert {(p, q) for p, q, _ in sols} == {(3, 5), (5, 3)}


def test_ground_solutions_too_small_allocation():
    alloc = allocate_bits(15, override=(2, 2))
    assert ground_solutions(compile_hamiltonian(15, alloc), 15) == []


def test_min_diag_zero_iff_representable():
    representable = compile_hamiltonian(15, N15_ALLOC)
    assert diag_energies(representable).min() == 0.0
    unrepresentable = compile_hamiltonian(15, allocate_bits(15, override=(2, 2)))
    assert diag_energies(unrepresentable).min() > 0.0


# --- term counting -----------------------------------------------------------


def test_term_count_bound_values():
    assert term_count_bound(1) == 2
    assert term_count_bound(2) == 10
    assert term_count_bound(3) == 37


def free_bit_term_count(n: int) -> int:
    """Independent symbolic oracle: expand (N - p*q)**2 with all 2n factor
    bits free and N symbolic, reduce x**2 -> x, count distinct monomials."""
    import sympy

    N = sympy.Symbol("N")
    ps = sympy.symbols(f"p0:{n}")
    qs = sympy.symbols(f"q0:{n}")
    p = sum(2**i * ps[i] for i in range(n))
    q = sum(2**i * qs[i] for i in range(n))
    expr = sympy.expand((N - p * q) ** 2)
    monomials = set()
    poly = sympy.Poly(expr, *ps, *qs)
    for exponents, coeff in poly.terms():
        key = tuple(min(e, 1) for e in exponents)
        monomials.add(key)
    # distinct after idempotent reduction; coefficients cannot cancel for
    # symbolic N (constant, -2N, and N**2 blocks never merge)
    return len(monomials)


@pytest.mark.parametrize("n,expect_equal", [(2, True), (3, True), (4, False), (5, False)])
def test_free_bit_expansion_term_count(n, expect_equal):
    count = free_bit_term_count(n)
    bound = term_count_bound(n)
    assert count <= bound
    if expect_equal:
        assert count == bound


# --- export ------------------------------------------------------------------


def test_json_roundtrip(tmp_path):
    h = compile_hamiltonian(91, allocate_bits(91, override=(3, 4)))
    doc = hamiltonian_to_json(h)
    masks = [t["mask"] for t in doc["terms"]]
    assert masks == sorted(masks)
    h2 = hamiltonian_from_json(doc)
    assert h2.terms == h.terms
    assert h2.alloc == h.alloc
    path = tmp_path / "h.json"
    save_hamiltonian(h, path)
    assert load_hamiltonian(path).terms == h.terms


def test_json_rejects_garbage():
    with pytest.raises(ValueError):
        hamiltonian_from_json({"n_qubits": 3})
    with pytest.raises(ValueError):
        hamiltonian_from_json({"n_qubits": 3, "terms": [{"mask": 9}]})
    with pytest.raises(ValueError):
        hamiltonian_from_json({"n_qubits": 2, "terms": [{"mask": 4, "num": 1, "denom_pow2": 0}]})
    with pytest.raises(ValueError):
        hamiltonian_from_json([1, 2, 3])
