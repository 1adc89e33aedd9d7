import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import heisenberg_dense, hubbard_dense, restrict
from tripletmc import ed
from tripletmc.hamiltonians import (
    HeisenbergParams,
    HubbardParams,
    degenerate_free_ground_states,
    element,
    fermion_hop_sign,
    heis_connections,
    heis_diagonal,
    hub_connections,
    hub_diagonal,
    make_model,
)
from tripletmc.lattice import FermionConfig, InvalidMoveError, LatticeSpec

CHAIN2 = LatticeSpec("chain", 2, 1)
CHAIN3 = LatticeSpec("chain", 3, 1)
TORUS2 = LatticeSpec("square", 2, 2, (True, True))


def test_heis_diagonal_examples():
    p = HeisenbergParams(1.0, CHAIN2)
    assert heis_diagonal(0b01, p) == -0.5
    assert heis_diagonal(0b11, HeisenbergParams(1.0, CHAIN2, n_up=2)) == 0.5
    assert heis_diagonal(0b0110, HeisenbergParams(1.0, TORUS2)) == -2.0


def test_heis_connections_examples():
    p = HeisenbergParams(1.0, CHAIN2)
    assert heis_connections(0b01, p) == [(0b10, 0.5)]
    assert heis_connections(0b11, HeisenbergParams(1.0, CHAIN2, n_up=2)) == []
    conn = heis_connections(0b0110, HeisenbergParams(1.0, TORUS2))
    assert len(conn) == 4 and all(e == 0.5 for _, e in conn)


def test_hub_diagonal_examples():
    p = HubbardParams(1.0, 4.0, CHAIN2, 1, 1)
    assert hub_diagonal(FermionConfig(0b01, 0b01), p) == 4
    assert hub_diagonal(FermionConfig(0b01, 0b10), p) == 0
    assert hub_diagonal(FermionConfig(0b11, 0b11), HubbardParams(1.0, 4.0, CHAIN2, 2, 2)) == 8


def test_hub_connections_examples():
    p = HubbardParams(1.0, 4.0, CHAIN2, 1, 0)
    assert hub_connections(FermionConfig(0b01, 0), p) == [(FermionConfig(0b10, 0), -1.0)]
    full = hub_connections(FermionConfig(0b11, 0), HubbardParams(1.0, 4.0, CHAIN2, 2, 0))
    assert full == []
    three = dict(hub_connections(FermionConfig(0b101, 0), HubbardParams(1.0, 4.0, CHAIN3, 2, 0)))
    assert three[FermionConfig(0b011, 0)] == -1.0


def test_fermion_hop_sign_examples():
    assert fermion_hop_sign(0b001, 0, 2) == 1
    assert fermion_hop_sign(0b011, 0, 2) == -1  # site 1 occupied in between
    assert fermion_hop_sign(0b1, 0, 1) == 1
    assert fermion_hop_sign(0b1011, 3, 2) == 1
    assert fermion_hop_sign(0b1011, 0, 2) == -1
    with pytest.raises(InvalidMoveError):
        fermion_hop_sign(0b111, 0, 2)
    with pytest.raises(InvalidMoveError):
        fermion_hop_sign(0b100, 0, 1)


def test_element_examples(heis2, hub2):
    assert element(0b01, 0b01, heis2) == -0.5
    assert element(0b01, 0b10, heis2) == 0.5
    assert element(FermionConfig(0b01, 0b10), FermionConfig(0b01, 0b10), hub2) == 0.0


def test_degenerate_free_ground_states(heis2x2, hub2):
    assert sorted(degenerate_free_ground_states(heis2x2)) == [0b0110, 0b1001]
    assert sorted(degenerate_free_ground_states(hub2)) == [FermionConfig(0b01, 0b10), FermionConfig(0b10, 0b01)]
    forced = make_model(HubbardParams(1.0, 4.0, CHAIN2, 2, 1))
    assert all(s.up == 0b11 for s in degenerate_free_ground_states(forced))


def test_degenerate_cap_is_seeded_subset():
    model = make_model(HubbardParams(1.0, 4.0, LatticeSpec("square", 3, 3, (True, True)), 5, 5))
    a = degenerate_free_ground_states(model, cap=10, rng=3)
    b = degenerate_free_ground_states(model, cap=10, rng=3)
    assert a == b and len(set(a)) == 10
    assert all(model.diagonal_energy(s) == 4.0 for s in a)


def test_empty_sector_raises():
    model = make_model(HeisenbergParams(1.0, CHAIN2, n_up=2))
    model.sector_codes()  # fine: one state
    with pytest.raises(ValueError):
        make_model(HeisenbergParams(1.0, CHAIN2, n_up=3))


SMALL_MODELS = [
    HeisenbergParams(1.0, CHAIN2),
    HeisenbergParams(0.7, TORUS2),
    HeisenbergParams(1.3, LatticeSpec("square", 2, 2)),
    HeisenbergParams(1.0, LatticeSpec("triangular", 2, 2, (True, True))),
    HeisenbergParams(-1.0, LatticeSpec("chain", 6, 1, (True, False)), n_up=2),
    HubbardParams(1.0, 4.0, CHAIN2, 1, 1),
    HubbardParams(0.8, 2.0, CHAIN3, 2, 1),
    HubbardParams(1.0, 3.0, LatticeSpec("chain", 4, 1, (True, False)), 2, 2),
    HubbardParams(1.0, 4.0, TORUS2, 2, 1),
]


def _dense_oracle(model):
    p = model.params
    if isinstance(p, HeisenbergParams):
        return heisenberg_dense(model.edges, model.n_sites, p.J)
    return hubbard_dense(model.edges, model.n_sites, p.t, p.U)


@pytest.mark.parametrize("params", SMALL_MODELS, ids=str)
def test_sector_matrix_matches_kronecker_oracle(params):
    model = make_model(params)
    basis = ed.enumerate_sector(model)
    expected = restrict(_dense_oracle(model), basis.codes)
    np.testing.assert_allclose(ed.dense_hamiltonian(model, basis), expected, atol=1e-14)


@pytest.mark.parametrize("params", SMALL_MODELS, ids=str)
def test_connections_and_elements_consistent(params):
    model = make_model(params)
    codes = model.sector_codes()
    H = restrict(_dense_oracle(model), codes)
    pos = {int(c): k for k, c in enumerate(codes)}
    for i in codes:
        i_state = model.decode(int(i))
        listed = {model.encode(k): e for k, e in model.connections(i_state)}
        for k, e in listed.items():
            assert k in pos, "connection left the sector"
            assert model.element(i_state, model.decode(k)) == e
            assert H[pos[k], pos[int(i)]] == e
        for j in codes:
            j_state = model.decode(int(j))
            e_ij = model.element(i_state, j_state)
            assert e_ij == model.element(j_state, i_state)
            assert e_ij == H[pos[int(j)], pos[int(i)]]
            if int(j) != int(i) and int(j) not in listed:
                assert e_ij == 0.0


def test_hop_sign_reverse_consistency_exhaustive():
    for n in range(2, 7):
        for occ in range(1 << n):
            for a, b in itertools.permutations(range(n), 2):
                if not (occ >> a) & 1 or (occ >> b) & 1:
                    continue
                moved = occ ^ (1 << a) ^ (1 << b)
                assert fermion_hop_sign(moved, b, a) == fermion_hop_sign(occ, a, b)


@pytest.mark.parametrize("params", SMALL_MODELS[:5] + [
    HubbardParams(1.0, 4.0, LatticeSpec("square", 3, 3, (True, True)), 5, 5),
    HeisenbergParams(1.0, LatticeSpec("triangular", 4, 4, (True, True))),
], ids=str)
def test_cached_and_direct_spawn_tables_agree(params):
    model = make_model(params)
    codes = model.sector_codes()
    rng = np.random.default_rng(0)
    sample = codes[rng.integers(0, len(codes), 500)]
    u = rng.random(500)
    t1, e1, n1 = model.pick_connections(sample, u, use_cache=True)
    t2, e2, n2 = model.pick_connections(sample, u, use_cache=False)
    ok = n1 > 0
    np.testing.assert_array_equal(n1, n2)
    np.testing.assert_array_equal(t1[ok], t2[ok])
    np.testing.assert_array_equal(e1[ok], e2[ok])


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**16 - 1))
def test_heisenberg_moves_stay_in_sector(bits):
    model = make_model(HeisenbergParams(1.0, LatticeSpec("triangular", 4, 4, (True, True)),
                                        n_up=bits.bit_count()))
    for k, _ in model.connections(bits):
        assert k.bit_count() == bits.bit_count()


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**9 - 1), st.integers(0, 2**9 - 1))
def test_hubbard_moves_stay_in_sector(up, down):
    model = make_model(HubbardParams(1.0, 4.0, LatticeSpec("square", 3, 3, (True, True)),
                                     up.bit_count(), down.bit_count()))
    for k, e in model.connections(FermionConfig(up, down)):
        assert (k.up.bit_count(), k.down.bit_count()) == (up.bit_count(), down.bit_count())
        assert abs(e) == 1.0
