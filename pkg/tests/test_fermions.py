import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from xychain import fermions, fock, tiers
from xychain.chain import ChainSpec, diagonalize
from xychain.fermions import ResourceError


def hopping_oracle(K):
    """``sum K_ij a_i^dag a_j`` built from full Jordan-Wigner matrices."""
    n = K.shape[0]
    a = [fermions.annihilation(i + 1, n) for i in range(n)]
    out = 0
    for i in range(n):
        for j in range(n):
            if K[i, j] != 0:
                out = out + K[i, j] * (a[i].getH() @ a[j])
    return out.toarray()


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 6).flatmap(lambda n: st.tuples(
    st.just(n), st.integers(0, n), st.integers(0, 2 ** 31 - 1))))
def test_sector_operator_matches_full_space(args):
    n, k, seed = args
    rng = np.random.default_rng(seed)
    K = rng.normal(size=(n, n))
    E = fermions.sector_embedding(n, k).toarray()
    assert np.allclose(fock.quadratic_operator(K, k), E.T @ hopping_oracle(K) @ E, atol=1e-12)


def test_anticommutation():
    n = 4
    a = [fermions.annihilation(i + 1, n).toarray() for i in range(n)]
    for i in range(n):
        for j in range(n):
            anti = a[i] @ a[j].conj().T + a[j].conj().T @ a[i]
            assert np.allclose(anti, np.eye(2 ** n) * (i == j))
            assert np.allclose(a[i] @ a[j] + a[j] @ a[i], 0)


def test_vacuum_is_all_spins_down():
    v = fermions.vacuum(3)
    assert v[2 ** 3 - 1] == 1.0
    Z1 = fermions.pauli_string({1: "Z"}, 3).toarray()
    occ = fermions.site_fock_state([1], 3)
    assert np.vdot(occ, Z1 @ occ).real == pytest.approx(1.0)


def test_sector_basis_size_and_order():
    basis = fock.sector_basis(6, 3)
    assert len(basis) == 20
    vals = [fock.occupation_value(o, 6) for o in basis]
    assert vals == sorted(vals)


def test_slater_matrix_is_unitary():
    sp = diagonalize(ChainSpec.engineered(6, 0.3))
    for k in range(7):
        S = fock.slater_matrix(sp.mode_matrix, k)
        assert np.allclose(S.T @ S, np.eye(S.shape[0]), atol=1e-12)


def test_control_operators_are_hermitian():
    spec = ChainSpec((0.0, 1.0, 0.5), (0.0, 0.1, 0.2, 0.3), gamma=0.3)
    for which in ("h1", "h2", "h3", "h4"):
        assert fermions.control_operator(which, spec).hermiticity_residual() < 1e-14


def test_number_conserving_controls_commute_with_number():
    spec = ChainSpec.engineered(4)
    Nop = sum(fermions.annihilation(i + 1, 4).getH() @ fermions.annihilation(i + 1, 4) for i in range(4))
    for which in ("h2", "h3", "h4"):
        h = fermions.control_operator(which, spec).matrix
        assert abs(h @ Nop - Nop @ h).max() < 1e-14
    h1 = fermions.control_operator("h1", spec).matrix
    assert abs(h1 @ Nop - Nop @ h1).max() > 0.5


def test_phase_string_and_encoding():
    sp = diagonalize(ChainSpec.engineered(5, 1.4))
    d = fermions.phase_string(4, sp).matrix.diagonal()
    assert set(np.round(d.real).astype(int)) == {-1, 1}
    lab = fermions.encode_logical("10", sp)
    assert lab.occupied == (3, 4)
    enc = fermions.LogicalEncoding(5)
    assert [l.occupied for l in enc.basis_labels()] == [(2, 4), (2, 5), (3, 4), (3, 5)]


def test_full_space_guard():
    with pytest.raises(ResourceError):
        fermions.sector_embedding(fermions.MAX_SITES + 1, 1)


def test_channel_check():
    with pytest.raises(tiers.TierError):
        tiers.check_channels("sector", {"h1"})
    tiers.check_channels("full", {"h1", "h2"})
