import numpy as np
import pytest

from granufv import (candidate_gradients, eno_select, evaluate_trace,
                     generate_box_mesh, limit_extremum,
                     limited_field_gradients, positivity_guard,
                     scalar_gradients)


@pytest.fixture(scope="module")
def mesh():
    return generate_box_mesh((0.0, 4.0), (0.0, 3.0), 8, 6)


def interior_cells(mesh):
    return np.all(mesh.cell_neighbors >= 0, axis=1)


class TestCandidates:
    def test_constant_field(self, mesh):
        cands, valid = candidate_gradients(mesh, np.full(mesh.n_cells, 3.5))
        assert np.all(cands[valid] == 0.0)

    def test_linear_field_reproduced(self, mesh):
        psi = mesh.cell_centroid[:, 0]
        cands, valid = candidate_gradients(mesh, psi)
        err = np.abs(cands[valid] - [1.0, 0.0]).max()
        assert err < 1e-12

    def test_boundary_cell_with_one_neighbor(self):
        # two triangles: each cell has exactly 1 neighbor -> no pair
        from granufv import load_mesh
        doc = "4 2\n0 0 0\n1 1 0\n2 1 1\n3 0 1\n0 0 1 2\n1 0 2 3\n"
        m = load_mesh(doc)
        cands, valid = candidate_gradients(m, np.array([1.0, 2.0]))
        assert not valid.any()

    def test_interior_cells_have_three_candidates(self, mesh):
        cands, valid = candidate_gradients(mesh, mesh.cell_centroid[:, 1])
        assert np.all(valid[interior_cells(mesh)].sum(axis=1) == 3)


class TestEnoSelect:
    def test_direct_minimum(self):
        g = eno_select(np.array([[1.0, 0.0], [0.5, 0.0], [2.0, 0.0]]))
        assert np.allclose(g, [0.5, 0.0])

    def test_empty(self):
        g = eno_select(np.empty((0, 2)))
        assert np.allclose(g, [0.0, 0.0])

    def test_tie_breaks_by_construction_order(self):
        g = eno_select(np.array([[1.0, 0.0], [0.0, 1.0]]))
        assert np.allclose(g, [1.0, 0.0])

    def test_invalid_candidates_skipped(self):
        cands = np.array([[[0.1, 0.0], [5.0, 0.0], [1.0, 0.0]]])
        valid = np.array([[False, True, True]])
        g = eno_select(cands, valid)
        assert np.allclose(g[0], [1.0, 0.0])


class TestLimitExtremum:
    def test_local_max_flattened(self, mesh):
        psi = np.zeros(mesh.n_cells)
        grad = np.ones((mesh.n_cells, 2))
        k = int(np.nonzero(interior_cells(mesh))[0][0])
        psi[k] = 5.0
        out = limit_extremum(mesh, psi, grad)
        assert np.all(out[k] == 0.0)

    def test_interior_value_untouched(self, mesh):
        psi = mesh.cell_centroid[:, 0].copy()
        grad = np.tile([1.0, 0.0], (mesh.n_cells, 1))
        out = limit_extremum(mesh, psi, grad)
        keep = interior_cells(mesh)
        assert np.array_equal(out[keep], grad[keep])

    def test_constant_field_flattened(self, mesh):
        psi = np.ones(mesh.n_cells)
        grad = np.ones((mesh.n_cells, 2))
        out = limit_extremum(mesh, psi, grad)
        assert np.all(out[interior_cells(mesh)] == 0.0)


class TestPositivityGuard:
    def test_zero_depth_any_gradient(self, mesh):
        h = np.zeros(mesh.n_cells)
        grad = np.tile([1.0, 1.0], (mesh.n_cells, 1))
        assert np.all(positivity_guard(mesh, h, grad) == 0.0)

    def test_safe_gradient_unchanged(self, mesh):
        h = np.ones(mesh.n_cells)
        grad = np.tile([1e-3, 0.0], (mesh.n_cells, 1))
        assert np.array_equal(positivity_guard(mesh, h, grad), grad)

    def test_negative_trace_flattens(self, mesh):
        h = np.full(mesh.n_cells, 0.1)
        grad = np.tile([2.0, 0.0], (mesh.n_cells, 1))
        out = positivity_guard(mesh, h, grad)
        assert np.all(out == 0.0)


class TestEvaluateTrace:
    def test_zero_gradient(self):
        U = np.array([1.0, 2.0, 3.0])
        out = evaluate_trace(U, np.zeros((3, 2)), np.array([0.7, -0.3]))
        assert np.allclose(out, U)

    def test_linear_extrapolation(self):
        U = np.array([1.0, 0.0, 0.0])
        grad = np.array([[1.0, 0.0], [0.0, 0.0], [0.0, 0.0]])
        out = evaluate_trace(U, grad, np.array([0.5, 0.0]))
        assert np.allclose(out, [1.5, 0.0, 0.0])

    def test_roundoff_clamped(self):
        U = np.array([1e-17, 0.0, 0.0])
        grad = np.array([[1.0, 0.0], [0.0, 0.0], [0.0, 0.0]])
        out = evaluate_trace(U, grad, np.array([-1.0, 0.0]))
        assert out[0] == 0.0


class TestPipeline:
    def test_linear_exactness_interior(self, mesh):
        cx, cy = mesh.cell_centroid.T
        psi = 0.3 * cx - 0.2 * cy + 1.0
        grad = scalar_gradients(mesh, psi)
        keep = interior_cells(mesh)
        assert np.abs(grad[keep] - [0.3, -0.2]).max() < 1e-12
        limited = limit_extremum(mesh, psi, grad)
        assert np.array_equal(limited[keep], grad[keep])

    def test_mean_preserved_by_midpoint_rule(self, mesh):
        # midpoint-rule average of the linear trace over the three edge
        # midpoints equals the cell value
        rng = np.random.default_rng(2)
        U = rng.uniform(0.5, 2.0, (mesh.n_cells, 3))
        grads = limited_field_gradients(mesh, U)
        mids = mesh.edge_midpoint[mesh.cell_edges]
        off = mids - mesh.cell_centroid[:, None, :]
        for f in range(3):
            tr = (U[:, None, f] + grads[:, None, f, 0] * off[:, :, 0]
                  + grads[:, None, f, 1] * off[:, :, 1])
            assert np.abs(tr.mean(axis=1) - U[:, f]).max() < 1e-12

    def test_depth_traces_nonnegative(self, mesh):
        rng = np.random.default_rng(4)
        U = np.zeros((mesh.n_cells, 3))
        U[:, 0] = np.maximum(rng.uniform(-0.2, 1.0, mesh.n_cells), 0.0)
        grads = limited_field_gradients(mesh, U)
        mids = mesh.edge_midpoint[mesh.cell_edges]
        off = mids - mesh.cell_centroid[:, None, :]
        tr = (U[:, None, 0] + grads[:, None, 0, 0] * off[:, :, 0]
              + grads[:, None, 0, 1] * off[:, :, 1])
        assert tr.min() >= 0.0

    def test_front_cells_first_order(self, mesh):
        U = np.zeros((mesh.n_cells, 3))
        U[:, 0] = np.where(mesh.cell_centroid[:, 0] < 2.0, 1.0, 0.0)
        U[:, 1] = 0.3 * U[:, 0]
        grads = limited_field_gradients(mesh, U, h_dry=1e-8)
        dry_nb = ~np.all(
            np.where(mesh.cell_neighbors >= 0,
                     (U[:, 0] >= 1e-8)[np.clip(mesh.cell_neighbors, 0, None)],
                     True), axis=1)
        front = (U[:, 0] < 1e-8) | dry_nb
        assert np.all(grads[front] == 0.0)
