"""Mode indexing, beam geometry and field evaluation.

Field normalization is the load-bearing contract here: both families
must form an orthonormal set under plain grid quadrature, at the waist
and away from it, because every coupling oracle and simulator
projection builds on exactly that inner product.
"""

import math

import numpy as np
import pytest

from turbmodes.modes import (
    Basis,
    BeamGeometry,
    ModeId,
    enumerate_basis,
    eval_hg,
    eval_lg,
    group_by_order,
    hg_axis_profile,
    parse_mode_label,
    theta,
)


def sample_mode(mode: ModeId, geom: BeamGeometry, n: int = 192, halfspan: float = 6.0):
    """Mode field on a square grid spanning +-halfspan spot radii."""
    span = halfspan * geom.spot
    x = (np.arange(n) - n / 2 + 0.5) * (2 * span / n)
    xx, yy = np.meshgrid(x, x, indexing="ij")
    if mode.family == "HG":
        field = eval_hg(mode, xx, yy, geom)
    else:
        field = eval_lg(mode, np.hypot(xx, yy), np.arctan2(yy, xx), geom)
    return field, (2 * span / n) ** 2


class TestModeId:
    def test_families_and_indices(self):
        hg = ModeId.hg(2, 3)
        assert (hg.m, hg.n, hg.order) == (2, 3, 5)
        lg = ModeId.lg(1, -4)
        assert (lg.p, lg.l, lg.order) == (1, -4, 6)

    def test_fundamental_flag(self):
        assert ModeId.hg(0, 0).is_fundamental
        assert ModeId.lg(0, 0).is_fundamental
        assert not ModeId.lg(0, 1).is_fundamental

    def test_wrong_family_attribute_rejected(self):
        with pytest.raises(AttributeError):
            ModeId.hg(1, 0).p
        with pytest.raises(AttributeError):
            ModeId.lg(0, 1).m

    def test_label_round_trip(self):
        for mode in (ModeId.hg(0, 7), ModeId.lg(3, -2), ModeId.lg(0, 0)):
            assert parse_mode_label(mode.label()) == mode
        assert parse_mode_label("  LG(1,-2) ") == ModeId.lg(1, -2)

    def test_parse_rejects_garbage(self):
        for text in ("LG(1)", "XY(0,0)", "LG(a,b)", "", "HG 0 0"):
            with pytest.raises(ValueError):
                parse_mode_label(text)

    def test_validation(self):
        with pytest.raises(ValueError):
            ModeId.hg(-1, 0)
        with pytest.raises(ValueError):
            ModeId.hg(0, -2)
        with pytest.raises(ValueError):
            ModeId.lg(-1, 2)


class TestBeamGeometry:
    def test_derived_quantities(self):
        geom = BeamGeometry(850e-9, 0.04, 0.0)
        assert geom.k == pytest.approx(2 * math.pi / 850e-9, rel=1e-15)
        assert geom.rayleigh == pytest.approx(math.pi * 0.04**2 / 850e-9, rel=1e-15)
        assert geom.spot == 0.04

    def test_spot_growth(self):
        geom = BeamGeometry(1e-6, 1e-3, 0.0)
        assert geom.at(geom.rayleigh).spot == pytest.approx(
            1e-3 * math.sqrt(2.0), rel=1e-12
        )
        assert geom.at(-geom.rayleigh).spot == geom.at(geom.rayleigh).spot

    def test_validation(self):
        with pytest.raises(ValueError):
            BeamGeometry(0.0, 0.04)
        with pytest.raises(ValueError):
            BeamGeometry(850e-9, -0.01)


class TestTheta:
    def test_waist_value(self, desk_geom):
        K = 100.0
        assert theta(K, desk_geom) == pytest.approx(K**2 * 0.04**2 / 8.0, rel=1e-15)

    def test_tracks_local_spot(self, desk_geom):
        far = desk_geom.at(desk_geom.rayleigh)
        assert theta(10.0, far) == pytest.approx(2.0 * theta(10.0, desk_geom), rel=1e-12)

    def test_rejects_negative_frequency(self, desk_geom):
        with pytest.raises(ValueError):
            theta(-1.0, desk_geom)


class TestFieldOrthonormality:
    @pytest.mark.parametrize("family", ["HG", "LG"])
    @pytest.mark.parametrize("z_frac", [0.0, 0.7])
    def test_orthonormal_grid_quadrature(self, family, z_frac):
        geom = BeamGeometry(1e-6, 1e-3, 0.0)
        geom = geom.at(z_frac * geom.rayleigh)
        basis = enumerate_basis(family, 3)
        fields = []
        for mode in basis:
            field, cell = sample_mode(mode, geom)
            fields.append(field)
        overlaps = np.array(
            [[np.vdot(fa, fb) * cell for fb in fields] for fa in fields]
        )
        np.testing.assert_allclose(overlaps, np.eye(len(basis)), atol=1e-9)

    def test_lg_equals_hg_fundamental(self):
        geom = BeamGeometry(1e-6, 1e-3, 0.0)
        for z in (0.0, 0.4 * geom.rayleigh):
            g = geom.at(z)
            hg, cell = sample_mode(ModeId.hg(0, 0), g)
            lg, _ = sample_mode(ModeId.lg(0, 0), g)
            np.testing.assert_allclose(lg, hg, atol=1e-12 * np.abs(hg).max())

    def test_lg_conjugate_pair_at_waist(self):
        geom = BeamGeometry(1e-6, 1e-3, 0.0)
        plus, _ = sample_mode(ModeId.lg(1, 2), geom)
        minus, _ = sample_mode(ModeId.lg(1, -2), geom)
        np.testing.assert_allclose(minus, np.conj(plus), atol=1e-14)

    def test_lg_pair_same_intensity_off_waist(self):
        base = BeamGeometry(1e-6, 1e-3, 0.0)
        geom = base.at(0.3 * base.rayleigh)
        plus, _ = sample_mode(ModeId.lg(0, 3), geom)
        minus, _ = sample_mode(ModeId.lg(0, -3), geom)
        np.testing.assert_allclose(np.abs(minus), np.abs(plus), atol=1e-14)

    def test_hg_separability(self):
        geom = BeamGeometry(1e-6, 1e-3, 0.0)
        x = np.linspace(-3e-3, 3e-3, 41)
        xx, yy = np.meshgrid(x, x, indexing="ij")
        joint = eval_hg(ModeId.hg(2, 1), xx, yy, geom)
        split = hg_axis_profile(2, xx, geom) * hg_axis_profile(1, yy, geom)
        np.testing.assert_allclose(joint, split, rtol=1e-14)

    def test_family_mismatch_rejected(self, desk_geom):
        with pytest.raises(ValueError):
            eval_hg(ModeId.lg(0, 0), 0.0, 0.0, desk_geom)
        with pytest.raises(ValueError):
            eval_lg(ModeId.hg(0, 0), 0.0, 0.0, desk_geom)
        with pytest.raises(ValueError):
            eval_lg(ModeId.lg(0, 0), -0.1, 0.0, desk_geom)


class TestBasis:
    def test_sizes(self):
        assert len(enumerate_basis("LG", 14)) == 120
        assert len(enumerate_basis("HG", 6)) == 28
        assert len(enumerate_basis("HG", 0)) == 1

    def test_triangular_count(self):
        for n_max in range(0, 9):
            size = (n_max + 1) * (n_max + 2) // 2
            assert len(enumerate_basis("LG", n_max)) == size
            assert len(enumerate_basis("HG", n_max)) == size

    def test_deterministic_ordering(self):
        hg = enumerate_basis("HG", 2)
        assert hg.labels() == [
            "HG(0,0)",
            "HG(0,1)",
            "HG(1,0)",
            "HG(0,2)",
            "HG(1,1)",
            "HG(2,0)",
        ]
        assert np.all(np.diff(hg.orders()) >= 0)
        lg = enumerate_basis("LG", 2)
        assert lg.modes[0] == ModeId.lg(0, 0)
        assert set(lg.modes[1:3]) == {ModeId.lg(0, -1), ModeId.lg(0, 1)}
        assert set(lg.modes[3:]) == {ModeId.lg(0, -2), ModeId.lg(0, 2), ModeId.lg(1, 0)}

    def test_index_and_labels(self):
        basis = enumerate_basis("LG", 4)
        for i, mode in enumerate(basis):
            assert basis.index(mode) == i
        assert basis.labels()[0] == "LG(0,0)"
        assert basis.family == "LG"
        assert basis.n_max == 4

    def test_validation(self):
        with pytest.raises(ValueError):
            Basis(())
        with pytest.raises(ValueError):
            Basis((ModeId.hg(0, 0), ModeId.lg(0, 0)))
        with pytest.raises(ValueError):
            Basis((ModeId.hg(0, 0), ModeId.hg(0, 0)))
        with pytest.raises(ValueError):
            enumerate_basis("XY", 3)
        with pytest.raises(ValueError):
            enumerate_basis("LG", -1)


class TestGroupByOrder:
    def test_partial_sums(self):
        basis = enumerate_basis("HG", 2)
        values = np.arange(1.0, len(basis) + 1)
        got = group_by_order(basis, values)
        assert got[0] == (0, 1.0)
        assert got[1][0] == 1 and got[1][1] == pytest.approx(2.0 + 3.0)
        assert got[2][0] == 2 and got[2][1] == pytest.approx(4.0 + 5.0 + 6.0)

    def test_length_mismatch_rejected(self):
        basis = enumerate_basis("HG", 1)
        with pytest.raises(ValueError):
            group_by_order(basis, np.ones(5))
