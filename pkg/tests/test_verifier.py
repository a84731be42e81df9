import numpy as np
import pytest
import scipy.sparse as sp

from hyperbolize.geometry import euclidean_triangle, hyperbolic_triangle
from hyperbolize.solver import build_ghost_rules, build_grid, init_state, solve
from hyperbolize.symmetry import reflection_group
from hyperbolize.verifier import (
    SparseOperator,
    VerifierError,
    assemble,
    dense_spectral_radius,
    direct_fixed_point,
    irreducible_component,
    spectral_radius,
    sweep_equivalence,
)


@pytest.fixture(scope="module")
def solved_states():
    te = euclidean_triangle(3, 3, 3)
    out = {}
    for name, orders, delta in (
        ("433", (4, 3, 3), 0.014),
        ("543", (5, 4, 3), 0.012),
    ):
        th = hyperbolic_triangle(*orders)
        st, rep = solve(th, te, delta, tol=1e-9, max_sweeps=200_000)
        assert rep.converged
        out[name] = st
    return out


def toy_operator(diag: complex, n: int = 8) -> SparseOperator:
    rows = np.arange(n)
    vals = np.full(n, diag, dtype=complex)
    mat = sp.csr_matrix((vals, (rows, rows)), shape=(n, n))
    return SparseOperator(mat, np.zeros(n, dtype=complex), rows, rows.copy(), vals)


def cycle_operator(n: int = 12) -> SparseOperator:
    # averaging around a cycle: rows sum to one, no contraction anywhere
    rows = np.repeat(np.arange(n), 2)
    cols = np.concatenate([[(i + 1) % n, (i - 1) % n] for i in range(n)])
    vals = np.full(2 * n, 0.5, dtype=complex)
    mat = sp.csr_matrix((vals, (rows, cols)), shape=(n, n))
    return SparseOperator(mat, np.zeros(n, dtype=complex), rows, cols, vals)


# ---------------------------------------------------------------------------
# assembly structure


def test_interior_rows_are_pure_averages(solved_states):
    st = solved_states["433"]
    op = assemble(st)
    # an interior point with four interior neighbors
    for k in range(st.size):
        if not st.is_inner[k]:
            continue
        i, j = (int(v) for v in st.index[k])
        nb = [st.row_of(i + 1, j), st.row_of(i - 1, j), st.row_of(i, j + 1), st.row_of(i, j - 1)]
        if min(nb) >= 0 and all(st.is_inner[r] for r in nb):
            break
    row = op.matrix.getrow(k)
    assert row.nnz == 4
    assert np.allclose(row.data, 0.25)
    assert abs(op.shift[k]) == 0.0


def test_reflection_reads_land_in_conjugate_block(solved_states):
    st = solved_states["433"]
    op = assemble(st)
    m = st.size
    conj_rules = np.nonzero(st._ghost_conj)[0]
    assert len(conj_rules) > 0
    gid = int(conj_rules[0])
    # find a point reading through this rule
    for s in range(4):
        hits = np.nonzero(st._nb_ghost_src[s] == gid)[0]
        if len(hits):
            k = int(st._nb_ghost_pos[s][hits[0]])
            break
    row = op.matrix.getrow(k)
    expected_cols = set(int(c) + m for c in st._ghost_corners[gid])
    assert expected_cols <= set(row.indices.tolist())


def test_row_abs_sums_unit(solved_states):
    for st in solved_states.values():
        op = assemble(st)
        sums = op.row_abs_sums()
        assert np.max(np.abs(sums - 1.0)) < 1e-12


def test_block_conjugate_symmetry(solved_states):
    st = solved_states["433"]
    op = assemble(st)
    m = st.size
    n_entries = len(op.entries_row) // 2
    r = op.entries_row[:n_entries]
    c = op.entries_col[:n_entries]
    v = op.entries_val[:n_entries]
    rt = op.entries_row[n_entries:]
    ct = op.entries_col[n_entries:]
    vt = op.entries_val[n_entries:]
    assert np.array_equal(rt, r + m)
    assert np.array_equal(ct, np.where(c < m, c + m, c - m))
    assert np.allclose(vt, v.conj())
    assert np.allclose(op.shift[m:], op.shift[:m].conj())


# ---------------------------------------------------------------------------
# sweep equivalence


def test_sweep_equivalence_tight(solved_states):
    for st in solved_states.values():
        op = assemble(st)
        assert sweep_equivalence(st, op) < 1e-12


def test_sweep_equivalence_detects_corruption(solved_states):
    st = solved_states["433"]
    op = assemble(st)
    bad = op.matrix.copy()
    bad.data[17] += 0.01
    corrupted = SparseOperator(bad, op.shift, op.entries_row, op.entries_col, op.entries_val)
    assert sweep_equivalence(st, corrupted) > 1e-6


# ---------------------------------------------------------------------------
# component analysis


def test_component_of_toy_interior_grid():
    op = cycle_operator(10)
    comp = irreducible_component(op, {0})
    assert comp == set(range(10))


def test_isolated_row_excluded():
    # a cycle plus one extra row that reads the cycle but is never read
    n = 6
    rows = np.concatenate([np.repeat(np.arange(n), 2), [n]])
    cols = np.concatenate([[(i + 1) % n, (i - 1) % n] for i in range(n)] + [[0]])
    vals = np.concatenate([np.full(2 * n, 0.5), [1.0]]).astype(complex)
    mat = sp.csr_matrix((vals, (rows, cols)), shape=(n + 1, n + 1))
    op = SparseOperator(mat, np.zeros(n + 1, dtype=complex), rows, cols, vals)
    comp = irreducible_component(op, {0})
    assert n not in comp


def test_component_contains_inner_and_twins(solved_states):
    st = solved_states["433"]
    op = assemble(st)
    seeds = np.nonzero(st.is_inner)[0]
    comp = irreducible_component(op, seeds)
    for s in seeds:
        assert int(s) in comp
        assert int(s) + st.size in comp


# ---------------------------------------------------------------------------
# spectral radius


def test_spectral_radius_diagonal_half():
    op = toy_operator(0.5 + 0j)
    rep = spectral_radius(op, set(range(op.dim)), tol=1e-9, window=50)
    assert rep.converged
    assert rep.rho_estimate == pytest.approx(0.5, abs=1e-8)


def test_spectral_radius_cycle_is_one():
    op = cycle_operator(12)
    rep = spectral_radius(op, set(range(op.dim)), tol=1e-6, window=200)
    assert rep.rho_estimate == pytest.approx(1.0, abs=1e-4)


def test_spectral_radius_matches_dense(solved_states):
    te = euclidean_triangle(3, 3, 3)
    th = hyperbolic_triangle(4, 3, 3)
    st, _ = solve(th, te, 0.02, tol=1e-9, max_sweeps=100_000)
    op = assemble(st)
    comp = irreducible_component(op, np.nonzero(st.is_inner)[0])
    rep = spectral_radius(op, comp, tol=1e-9)
    ref = dense_spectral_radius(op, comp)
    assert rep.converged
    assert rep.rho_estimate < 1.0
    assert abs(rep.rho_estimate - ref) < 1e-6


def test_spectral_radius_toward_one_with_refinement():
    te = euclidean_triangle(3, 3, 3)
    th = hyperbolic_triangle(4, 3, 3)
    estimates = []
    for delta in (0.03, 0.02, 0.014):
        st = build_grid(th, delta)
        st = build_ghost_rules(st, reflection_group(th), reflection_group(te))
        st = init_state(st, th, te)
        op = assemble(st)
        comp = irreducible_component(op, np.nonzero(st.is_inner)[0])
        estimates.append(spectral_radius(op, comp, tol=1e-8).rho_estimate)
    assert estimates[0] < estimates[1] < estimates[2] < 1.0


# ---------------------------------------------------------------------------
# direct fixed point


def test_direct_fixed_point_identity():
    te = euclidean_triangle(3, 3, 3)
    st, _ = solve(te, te, 0.02, tol=1e-12, max_sweeps=5)
    op = assemble(st)
    fixed = direct_fixed_point(op)
    assert np.max(np.abs(fixed - st.pos)) < 1e-9


def test_direct_matches_iterative(solved_states):
    for st in solved_states.values():
        op = assemble(st)
        fixed = direct_fixed_point(op)
        err = np.max(np.abs(fixed - st.p)) / st.diam_target
        assert err < 1e-6


def test_direct_fixed_point_cap():
    te = euclidean_triangle(3, 3, 3)
    st, _ = solve(te, te, 0.02, tol=1e-12, max_sweeps=5)
    op = assemble(st)
    with pytest.raises(VerifierError, match="too large"):
        direct_fixed_point(op, cap=10)


def test_direct_fixed_point_singular():
    base = cycle_operator(8)  # I - A singular: constant vectors are neutral
    shift = np.ones(base.dim, dtype=complex)
    op = SparseOperator(base.matrix, shift, base.entries_row, base.entries_col,
                        base.entries_val)
    with pytest.raises(VerifierError, match="no unique fixed point"):
        direct_fixed_point(op)


def test_conjugate_halves_consistent(solved_states):
    from hyperbolize.verifier import _direct_fixed_point_full

    st = solved_states["433"]
    op = assemble(st)
    full = _direct_fixed_point_full(op)
    m = st.size
    assert np.max(np.abs(full[m:] - full[:m].conj())) < 1e-10
