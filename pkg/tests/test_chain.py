import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.linalg import eigh_tridiagonal

from xychain import fermions
from xychain.chain import (ChainError, ChainSpec, bdg_spectrum, diagonalize, engineered_couplings,
                           gap_report, load_spec, single_particle_matrix, spec_from_dict)


def ladder(N, offset=0.0):
    return np.array([-1 + 2 * k / (N - 2) for k in range(N - 1)]) - offset


@pytest.mark.parametrize("N", [3, 5, 9, 21, 101])
def test_engineered_ladder_against_tridiagonal_solver(N):
    js = np.array(engineered_couplings(N))
    lam, vec = eigh_tridiagonal(np.zeros(N - 1), js)
    assert np.allclose(lam, ladder(N), atol=1e-9)
    assert np.allclose(np.abs(vec[0]), 1 / math.sqrt(N - 1), atol=1e-9)


@pytest.mark.parametrize("N", [5, 9, 21])
def test_diagonalize_engineered_with_offset(N):
    sp = diagonalize(ChainSpec.engineered(N, math.sqrt(2)))
    assert sp.eigenvalue(1) == 0.0
    assert np.allclose(np.sort(sp.eigenvalues[1:]), ladder(N, math.sqrt(2)), atol=1e-9)
    assert np.allclose(sp.alphas[1:], 1 / math.sqrt(N - 1), atol=1e-9)
    assert sp.engineered_labels
    for q, (lo, hi) in sp.pair_labels.items():
        assert hi == lo + 1 == 2 * q + 1
        assert sp.pair_gap(q) == pytest.approx((N - 1) / (N - 2))


def test_printed_couplings_small_chain():
    assert engineered_couplings(4, as_printed=True) == pytest.approx([1.0, 1 / math.sqrt(2)])
    assert engineered_couplings(5, as_printed=True) == pytest.approx([1.0, 0.8, 0.6])


@pytest.mark.parametrize("N", [4, 7, 30])
def test_printed_is_a_rescaling(N):
    ratio = np.array(engineered_couplings(N, True)) / np.array(engineered_couplings(N))
    assert np.allclose(ratio, math.sqrt(3 * (N - 2) / N))


def test_engineered_needs_three_sites():
    with pytest.raises(ChainError):
        engineered_couplings(2)


def random_chain(draw_j, draw_b):
    return ChainSpec((0.0, *draw_j), (0.0, *draw_b))


chains = st.integers(3, 8).flatmap(lambda n: st.builds(
    random_chain,
    st.lists(st.floats(0.3, 2.0), min_size=n - 2, max_size=n - 2),
    st.lists(st.floats(-1.0, 1.0), min_size=n - 1, max_size=n - 1)))


@settings(max_examples=40, deadline=None)
@given(chains)
def test_mode_matrix_diagonalizes(spec):
    sp = diagonalize(spec)
    h = single_particle_matrix(spec)
    u = sp.mode_matrix
    assert sp.orthonormality_residual() < 1e-10
    assert np.allclose(u.T @ h @ u, np.diag(sp.eigenvalues), atol=1e-10)
    assert np.all(sp.alphas[1:] >= 0)


@settings(max_examples=15, deadline=None)
@given(chains)
def test_many_body_hamiltonian_is_free_fermion(spec):
    sp = diagonalize(spec)
    W = fermions.mode_basis_transform(sp)
    H = fermions.many_body_hamiltonian(spec).dense()
    assert np.allclose(W.conj().T @ H @ W, np.diag(fermions.mode_energies(sp)), atol=1e-9)


@pytest.mark.parametrize("N", [4, 6])
def test_alpha_matches_many_body_matrix_element(N):
    sp = diagonalize(ChainSpec.engineered(N, 0.7))
    for n in range(2, N + 1):
        assert fermions.alpha_from_oracle(sp, n) == pytest.approx(sp.alpha(n), abs=1e-10)


@settings(max_examples=20, deadline=None)
@given(st.floats(0.0, 0.9), chains)
def test_bdg_positive_branch_matches_number_conserving(gamma, spec):
    lam, _ = bdg_spectrum(ChainSpec(spec.couplings, spec.fields, gamma))
    if gamma == 0.0:
        assert np.allclose(np.sort(lam), np.sort(np.abs(np.linalg.eigvalsh(single_particle_matrix(spec)))),
                           atol=1e-9)
    assert np.all(np.asarray(lam) >= -1e-12)


def test_gap_report_flags_mirror_spectrum():
    rep = gap_report(diagonalize(ChainSpec.engineered(5)))
    assert rep.degenerate_pairs == []
    assert rep.abs_collisions
    assert rep.min_gap == pytest.approx(1 / 3)
    clean = gap_report(diagonalize(ChainSpec.engineered(5, math.sqrt(2))))
    assert clean.clean


def test_energy_constant():
    spec = ChainSpec((0.0, 1.0, 1.0), (0.0, 0.2, 0.4, -0.1), offset=0.5)
    assert spec.energy_constant == pytest.approx(0.25 + 0.75)


def test_spec_rejects_bad_shapes():
    with pytest.raises(ChainError):
        ChainSpec((1.0,), (0.0, 0.0, 0.0))
    with pytest.raises(ChainError):
        ChainSpec((math.nan,), (0.0, 0.0))


def test_config_round_trip(tmp_path):
    spec = ChainSpec.engineered(6, 1.2)
    assert spec_from_dict(spec.to_dict()) == spec
    doc = {"n_sites": 5, "couplings": "engineered", "offset": 1.0}
    assert spec_from_dict(doc) == ChainSpec.engineered(5, 1.0)


@pytest.mark.parametrize("doc, field", [
    ({"couplings": [1.0]}, "n_sites"),
    ({"n_sites": 3, "couplings": [1.0]}, "couplings"),
    ({"n_sites": 3, "fields": [0.0]}, "fields"),
    ({"n_sites": 3, "couplings": "spiral"}, "couplings"),
])
def test_config_errors_name_the_field(doc, field):
    with pytest.raises(ChainError, match=f"'{field}'"):
        spec_from_dict(doc)


def test_load_spec_reports_line(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text('{"n_sites": 4,\n "couplings": [1, 2\n}')
    with pytest.raises(ChainError, match="line 3"):
        load_spec(p)
    p.write_text(json.dumps({"n_sites": 4, "couplings": "uniform"}))
    assert load_spec(p).couplings == (0.0, 1.0, 1.0)
