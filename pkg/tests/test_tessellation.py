"""Tessellation builders, combinatorial structure, trust flags, storage."""

import numpy as np
import pytest
from scipy.spatial import cKDTree

from tessperc.geom2d import Window, polygon_area, unit_square_window
from tessperc.tessellation import (
    ARCHIMEDEAN_CODES,
    GeneratorConfig,
    PlanarTessellation,
    _poisson_line_once,
    _poisson_voronoi_once,
    build,
    load_tessellation,
    save_tessellation,
    tessellation_from_dict,
    tessellation_to_dict,
    validate,
)
from tessperc.analytic import archimedean_gammas

from conftest import _cfg


LATTICE_DEGREE = {"4.4.4.4": 4, "3.3.3.3.3.3": 6, "6.6.6": 3, "3.6.3.6": 4}


class TestArchimedean:
    @pytest.mark.parametrize("code", ARCHIMEDEAN_CODES)
    def test_structurally_valid(self, code):
        t = build(_cfg("lattice", 80, 2, lattice_code=code, edge_length=1.0))
        rep = validate(t)
        assert rep.ok, rep.messages
        assert rep.euler_ok

    @pytest.mark.parametrize("code", ARCHIMEDEAN_CODES)
    def test_vertex_degree(self, code):
        t = build(_cfg("lattice", 80, 2, lattice_code=code, edge_length=1.0))
        rep = validate(t)
        hist = rep.degree_histogram
        assert set(hist) == {LATTICE_DEGREE[code]}
        expected_normal = LATTICE_DEGREE[code] == 3
        assert rep.normal == expected_normal

    @pytest.mark.parametrize("code", ARCHIMEDEAN_CODES)
    def test_face_intensities(self, code):
        """Steiner points per unit area, counted in the core, match the
        exact lattice intensities up to a boundary-layer fraction."""
        t = build(_cfg("lattice", 2500, 3, lattice_code=code, edge_length=1.0))
        g_exact = archimedean_gammas(code, 1.0)
        area = t.core_region.area
        poly = t.core_region.poly
        lo, hi = poly.min(axis=0), poly.max(axis=0)
        for k in range(3):
            s = t.steiner(k)
            inside = np.all((s >= lo) & (s <= hi), axis=1)
            ghat = inside.sum() / area
            # counts deviate by at most the one-cell boundary layer
            layer = 4 * g_exact[k] * (hi - lo).max() * 2.5 / area
            assert abs(ghat - g_exact[k]) <= layer + 1e-12, (code, k, ghat)

    def test_edge_length_scaling(self):
        t = build(_cfg("lattice", 80, 2, lattice_code="4.4.4.4",
                       edge_length=0.5))
        lens = t.edge_len
        assert np.allclose(lens, 0.5)

    def test_random_shift_varies_with_seed(self):
        t1 = build(_cfg("lattice", 40, 1, lattice_code="4.4.4.4"))
        t2 = build(_cfg("lattice", 40, 2, lattice_code="4.4.4.4"))
        assert not np.allclose(t1.points[:4], t2.points[:4])


class TestPoissonBuilders:
    @pytest.mark.parametrize("model", ["voronoi", "line"])
    def test_structurally_valid(self, model):
        t = build(_cfg(model, 150, 4, intensity=1.0))
        rep = validate(t)
        assert rep.ok, rep.messages
        assert rep.untrusted_core_faces == 0

    def test_voronoi_is_normal(self, voronoi_t120):
        assert validate(voronoi_t120).normal

    def test_line_vertices_have_degree_four(self, line_t120):
        rep = validate(line_t120)
        assert set(rep.degree_histogram) == {4}
        assert not rep.normal

    def test_voronoi_nearest_generator_is_own(self, voronoi_t120):
        t = voronoi_t120
        gens = t.generators_xy
        tree = cKDTree(gens)
        probe = t.cell_steiner
        _, idx = tree.query(probe)
        assert np.array_equal(idx, np.arange(len(gens)))

    def test_voronoi_cells_tile_without_overlap(self, voronoi_t120):
        rep = validate(voronoi_t120)
        assert rep.overlap_violations == 0
        assert rep.face_to_face_ok

    @pytest.mark.parametrize("model", ["voronoi", "line"])
    def test_rebuild_bit_identical(self, model):
        cfg = _cfg(model, 90, 13, intensity=1.0)
        a, b = build(cfg), build(cfg)
        assert np.array_equal(a.points, b.points)
        assert np.array_equal(a.cell_verts, b.cell_verts)
        assert np.array_equal(a.cell_off, b.cell_off)

    @pytest.mark.parametrize("model,once", [("voronoi", _poisson_voronoi_once),
                                            ("line", _poisson_line_once)])
    def test_padding_growth_extends_same_realization(self, model, once):
        """Enlarging the sampled region must keep every already-trusted
        cell geometrically unchanged; that is what makes adaptive padding
        growth a stopping rule rather than a resample."""
        cfg = _cfg(model, 90, 21, intensity=1.0)
        t1 = once(cfg, 12.0)
        t2 = once(cfg, 12.0 * 1.6)
        s1 = t1.cell_steiner[t1.trusted_cell]
        d, idx = cKDTree(t2.cell_steiner).query(s1)
        assert d.max() < 1e-9
        a1 = [polygon_area(t1.cell_polygon(c))
              for c in np.nonzero(t1.trusted_cell)[0]]
        a2 = [polygon_area(t2.cell_polygon(c)) for c in idx]
        assert np.allclose(a1, a2, atol=1e-9)

    @pytest.mark.parametrize("model", ["voronoi", "line"])
    def test_core_trust_certified(self, model):
        for seed in range(6):
            t = build(_cfg(model, 100, 100 + seed, intensity=1.0))
            assert t.untrusted_in_core() == 0

    def test_growth_steps_recorded(self):
        t = build(_cfg("voronoi", 60, 5, intensity=1.0))
        assert "padding_used" in t.generator
        assert t.generator["growth_steps"] >= 0


class TestStars:
    def brute_star(self, t, f, l):
        """Face star via direct incidence chasing, used as an oracle."""
        k = f.dim
        if k == l:
            return {f.index}
        if k == 0:
            if l == 1:
                return set(t.vertex_edge_ids(f.index).tolist())
            return set(t.vertex_cell_ids(f.index).tolist())
        if k == 1:
            va, vb = t.edges[f.index]
            if l == 0:
                return {int(va), int(vb)}
            return {int(c) for c in t.edge_cells[f.index] if c >= 0}
        vids = t.cell_vertex_ids(f.index)
        if l == 0:
            return set(vids.tolist())
        return set(t.cell_edge_ids(f.index).tolist())

    @pytest.mark.parametrize("model", ["voronoi", "line", "lattice"])
    def test_face_star_matches_brute_force(self, model, voronoi_t120,
                                           line_t120, square_t120):
        from tessperc.tessellation import FaceRef
        t = {"voronoi": voronoi_t120, "line": line_t120,
             "lattice": square_t120}[model]
        rng = np.random.default_rng(3)
        for k in range(3):
            ok = np.nonzero(t.trusted(k))[0]
            for idx in rng.choice(ok, 8, replace=False):
                f = FaceRef(k, int(idx))
                for l in range(3):
                    got = {g.index for g in t.face_star(f, l)}
                    assert all(g.dim == l for g in t.face_star(f, l))
                    assert got == self.brute_star(t, f, l), (model, k, l, idx)

    def test_shared_partition_square_lattice(self, square_t120):
        """An interior square-lattice edge shares one cell with the 6 other
        edges of its two squares, and both cells only with itself."""
        from tessperc.tessellation import FaceRef
        t = square_t120
        e = int(np.nonzero(t.trusted_edge)[0][10])
        f = FaceRef(1, e)
        by_m = {m: t.face_star_shared(f, 1, 2, m) for m in (0, 1, 2)}
        assert len(by_m[1]) == 6
        assert [g.index for g in by_m[2]] == [e]
        assert by_m[0] == []
        cell_edges = set()
        for g in t.face_star(f, 2):
            cell_edges.update(t.cell_edge_ids(g.index).tolist())
        assert {g.index for g in by_m[1]} | {e} == cell_edges

    def test_shared_classes_verified_by_recount(self, voronoi_t120):
        """Each face the classifier puts in class m really shares exactly m
        cells, classes are disjoint, and the face itself lands in the class
        of its full cell star."""
        from tessperc.tessellation import FaceRef
        t = voronoi_t120
        rng = np.random.default_rng(8)
        for k in range(3):
            ok = np.nonzero(t.trusted(k))[0]
            for idx in rng.choice(ok, 4, replace=False):
                f = FaceRef(k, int(idx))
                own = {g.index for g in t.face_star(f, 2)}
                seen = set()
                for l in range(3):
                    for m in range(1, 8):
                        cls = t.face_star_shared(f, l, 2, m)
                        for g in cls:
                            other = {h.index for h in t.face_star(g, 2)}
                            assert len(own & other) == m, (k, l, m, g)
                            key = (g.dim, g.index)
                            assert key not in seen
                            seen.add(key)
                assert (k, int(idx)) in seen  # own class m = |own|

    def test_truncated_star_raises(self, voronoi_t120):
        from tessperc.tessellation import FaceRef, StarTruncatedError
        t = voronoi_t120
        bad = np.nonzero(~t.complete_vertex)[0]
        with pytest.raises(StarTruncatedError):
            t.face_star(FaceRef(0, int(bad[0])), 2)


class TestFaceOfPoint:
    def test_resolves_each_dimension(self, voronoi_t120):
        t = voronoi_t120
        ci = int(np.nonzero(t.trusted_cell)[0][3])
        ref = t.face_of_point(t.cell_steiner[ci])
        assert (ref.dim, ref.index) == (2, ci)
        vid = int(t.cell_vertex_ids(ci)[0])
        ref = t.face_of_point(t.points[vid])
        assert (ref.dim, ref.index) == (0, vid)
        eid = int(t.cell_edge_ids(ci)[0])
        ref = t.face_of_point(t.edge_mid[eid])
        assert (ref.dim, ref.index) == (1, eid)

    def test_outside_raises(self, voronoi_t120):
        with pytest.raises(ValueError):
            voronoi_t120.face_of_point([1e6, 1e6])


class TestStorage:
    @pytest.mark.parametrize("model", ["voronoi", "line", "lattice"])
    def test_json_round_trip(self, model, tmp_path):
        t = build(_cfg(model, 50, 6, intensity=1.0, lattice_code="6.6.6"))
        path = tmp_path / "t.json"
        save_tessellation(t, path)
        t2, cdoc = load_tessellation(path)
        assert cdoc is None
        assert np.array_equal(t.points, t2.points)
        assert np.array_equal(t.edges, t2.edges)
        assert np.array_equal(t.cell_verts, t2.cell_verts)
        assert np.array_equal(t.trusted_cell, t2.trusted_cell)
        assert t.generator == t2.generator

    def test_dict_round_trip_preserves_window(self, square_t120):
        doc = tessellation_to_dict(square_t120)
        t2 = tessellation_from_dict(doc)
        assert np.allclose(square_t120.core_region.poly, t2.core_region.poly)

    def test_coloring_travels_with_tessellation(self, tmp_path, square_t120):
        from tessperc.percolation import Coloring, color
        c = color(square_t120, 1, 0.4, seed=9)
        path = tmp_path / "tc.json"
        save_tessellation(square_t120, path, coloring=c)
        _, cdoc = load_tessellation(path)
        c2 = Coloring.from_dict(cdoc)
        assert c2.mode_n == 1 and c2.p == 0.4
        assert all(np.array_equal(a, b) for a, b in zip(c.black, c2.black))


class TestEulerCounts:
    @pytest.mark.parametrize("model", ["voronoi", "honeycomb"])
    def test_windowed_euler_identity(self, model, voronoi_t120,
                                     honeycomb_t120):
        """Window face counts of a normal tessellation obey the planar
        count identities N0 = 2 N2 - eps - 2 and N1 = 3 N2 - eps - 3."""
        t = {"voronoi": voronoi_t120, "honeycomb": honeycomb_t120}[model]
        rep = validate(t)
        assert rep.euler_checked and rep.euler_ok, rep.euler_detail

    @pytest.mark.parametrize("model", ["line", "square"])
    def test_identity_not_claimed_off_normal(self, model, line_t120,
                                             square_t120):
        """Degree-4 tessellations do not satisfy the degree-3 count
        identities, so validation must not apply them there."""
        t = {"line": line_t120, "square": square_t120}[model]
        rep = validate(t)
        assert not rep.euler_checked
        assert rep.ok


class TestConfig:
    def test_build_dispatch_unknown_model(self):
        with pytest.raises(ValueError):
            build(GeneratorConfig(model="hex", region=unit_square_window(10)))

    def test_to_dict_round_trip(self):
        cfg = _cfg("voronoi", 30, 5, intensity=2.0)
        d = cfg.to_dict()
        assert d["model"] == "voronoi" and d["intensity"] == 2.0

    def test_intensity_scales_core_cell_count(self):
        def core_count(intensity):
            t = build(_cfg("voronoi", 200, 7, intensity=intensity))
            poly = t.core_region.poly
            lo, hi = poly.min(axis=0), poly.max(axis=0)
            s = t.cell_steiner
            return np.all((s >= lo) & (s <= hi), axis=1).sum()

        r = core_count(2.0) / core_count(1.0)
        assert 1.6 < r < 2.4
