import numpy as np
import pytest

from csbp.basis import REF_VERTICES, basis_size, tri_monomial_moment
from csbp.tricub import build_tri_cubature, face_rule, verify_cubature, save_cubature, load_cubature


def test_monomial_moment_oracle():
    # spot checks by direct integration over {xi >= -1, eta >= -1, xi+eta <= 0}
    assert abs(tri_monomial_moment(0, 0) - 2.0) < 1e-15
    assert abs(tri_monomial_moment(1, 0) - (-2.0 / 3.0)) < 1e-15
    # brute-force midpoint oracle on a fine grid
    n = 800
    h = 2.0 / n
    xs = -1 + h * (np.arange(n) + 0.5)
    X, Y = np.meshgrid(xs, xs)
    mask = X + Y <= 0
    for a, b in [(2, 1), (3, 2), (0, 4)]:
        approx = np.sum(X[mask] ** a * Y[mask] ** b) * h * h
        assert abs(approx - tri_monomial_moment(a, b)) < 5e-3


def test_p0_rule_is_vertices():
    cub = build_tri_cubature(0)
    assert cub.n_k == 3
    assert np.allclose(cub.weights, 2.0 / 3.0)
    assert np.allclose(cub.nodes, REF_VERTICES)


def test_p1_rule_structure():
    cub = build_tri_cubature(1)
    assert cub.n_k == 7  # vertices, face midpoints, centroid
    assert cub.face_node_ids.shape == (3, 3)
    assert np.allclose(sorted(np.unique(np.round(cub.weights, 12))), [0.1, 4.0 / 15.0, 0.9])


@pytest.mark.parametrize("p", [0, 1, 2, 3, 4])
def test_rule_invariants(p):
    cub = build_tri_cubature(p)
    assert np.all(cub.weights > 0)
    assert abs(cub.weights.sum() - 2.0) < 1e-13
    assert verify_cubature(cub, 2 * p) < 1e-12
    assert cub.n_k >= basis_size(p)
    # vertices are nodes
    for v in REF_VERTICES:
        assert np.min(np.linalg.norm(cub.nodes - v, axis=1)) < 1e-14
    # each face carries p+2 nodes at LGL positions in arclength parameter
    from csbp.lgl import lgl_rule

    ts = lgl_rule(p + 2).nodes
    for f, (a, b) in enumerate(((0, 1), (1, 2), (2, 0))):
        ids = cub.face_node_ids[f]
        va, vb = REF_VERTICES[a], REF_VERTICES[b]
        expect = np.array([0.5 * (1 - t) * va + 0.5 * (1 + t) * vb for t in ts])
        got = cub.nodes[ids]
        # ordering: endpoints first, then interior ascending
        reorder = np.concatenate(([0], np.arange(2, p + 2), [1]))
        assert np.max(np.abs(got[reorder] - expect)) < 1e-13


@pytest.mark.parametrize("p", [1, 2, 3, 4])
def test_symmetry_orbit_invariance(p):
    cub = build_tri_cubature(p)
    # reflect across the xi=eta axis (swap coordinates): a triangle symmetry
    reflected = cub.nodes[:, ::-1]
    for i, q in enumerate(reflected):
        j = int(np.argmin(np.linalg.norm(cub.nodes - q, axis=1)))
        assert np.linalg.norm(cub.nodes[j] - q) < 1e-12
        assert abs(cub.weights[j] - cub.weights[i]) < 1e-12


def test_adjacent_faces_share_vertex():
    cub = build_tri_cubature(2)
    for f in range(3):
        shared = set(cub.face_node_ids[f]) & set(cub.face_node_ids[(f + 1) % 3])
        assert len(shared) == 1


def test_exactness_does_not_extend():
    cub = build_tri_cubature(2)
    assert verify_cubature(cub, 4) < 1e-12
    assert verify_cubature(cub, 6) > 1e-8


def test_rejects_out_of_range():
    with pytest.raises(ValueError):
        build_tri_cubature(5)


def test_face_rule_values():
    fr = face_rule(1, 1.0)
    assert np.allclose(fr.B, [1 / 6, 1 / 6, 4 / 6])
    assert np.allclose(fr.nodes, [-1.0, 1.0, 0.0])  # midpoint ordered last
    fr0 = face_rule(0, 3.0)
    assert np.allclose(fr0.B, [1.5, 1.5])
    for p in range(5):
        fr = face_rule(p, 2.7)
        assert abs(fr.B.sum() - 2.7) < 1e-13


def test_fixture_roundtrip(tmp_path):
    cub = build_tri_cubature(3)
    path = tmp_path / "p3.json"
    save_cubature(cub, path)
    loaded = load_cubature(path)
    assert loaded.p == 3
    assert np.allclose(loaded.nodes, cub.nodes)
    # tampering is rejected on load
    import json

    d = json.loads(path.read_text())
    d["weights"][0] *= 1.01
    path.write_text(json.dumps(d))
    with pytest.raises(RuntimeError):
        load_cubature(path)
