import numpy as np
import pytest

import torustile as tt
from torustile import fixtures as fx


@pytest.fixture(scope="session")
def triangle():
    return fx.single_triangle()


@pytest.fixture(scope="session")
def quad():
    return fx.quad()


@pytest.fixture(scope="session")
def kite():
    return fx.kite_obtuse()


@pytest.fixture(scope="session")
def disk50():
    return fx.delaunay_disk(50)


@pytest.fixture(scope="session")
def tetra():
    return fx.tetrahedron()


@pytest.fixture(scope="session")
def symsphere():
    return fx.sym_sphere(2)


class Bank:
    """Lazily built and cached tori and solves shared across the suite."""

    def __init__(self, meshes):
        self.meshes = meshes
        self._tori = {}
        self._solved = {}

    def torus(self, name):
        if name not in self._tori:
            self._tori[name] = self._build(name)
        return self._tori[name]

    def solved(self, name, scheme="uniform"):
        key = (name, scheme)
        if key not in self._solved:
            t = self.torus(name)
            w = tt.make_weights(t.mesh, scheme)
            emb = tt.solve_torus(t, w, tt.canonical_jumps(t))
            self._solved[key] = (t, w, emb)
        return self._solved[key]

    def _build(self, name):
        base, kind = name.rsplit("_", 1)
        if kind == "63":
            mesh, sigma, p_o = self.meshes[base]
            seed = int(min(v for v in range(mesh.n_vertices) if sigma[v] != v))
            cuts = tt.make_symmetric_cuts(mesh, p_o, np.asarray(sigma), seed)
            return tt.build_torus_63(cuts)
        mesh = self.meshes[base]
        n = 4 if kind == "4" else 3
        d = tt.MarkedDisk(mesh, fx.spread_marks(mesh, n))
        if kind == "8":
            return tt.build_torus_8(d)
        if kind == "4":
            return tt.build_torus_4(d)
        if kind == "42":
            return tt.build_torus_42(d)
        raise KeyError(name)


@pytest.fixture(scope="session")
def bank(triangle, quad, kite, disk50, tetra, symsphere):
    return Bank(
        {
            "tri": triangle,
            "quad": quad,
            "kite": kite,
            "d50": disk50,
            "tetra": tetra,
            "sphere": symsphere,
        }
    )
