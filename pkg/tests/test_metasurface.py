import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm

from dualbasis import metasurface as ms
from dualbasis.polarization import jones_vector, pauli

from oracles import SY, SZ

H, V, R, L = (jones_vector(s) for s in "HVRL")


def profile(bz, by, **kw):
    return ms.PhaseProfile(depth_z=bz, depth_y=by, **kw)


class TestProfile:
    @pytest.mark.parametrize("kw", [dict(depth_z=1.5), dict(depth_y=-0.1), dict(period_x=0.0)])
    def test_rejects(self, kw):
        with pytest.raises(ValueError):
            ms.PhaseProfile(**kw)

    def test_custom_needs_samples(self):
        with pytest.raises(ValueError):
            ms.PhaseProfile(shape="CustomSamples", samples_x=[0.0] * 4, samples_y=[0.0] * 8)

    def test_custom_piecewise(self):
        sx = np.linspace(0, np.pi, 8, endpoint=False)
        p = ms.PhaseProfile(shape="CustomSamples", samples_x=sx, samples_y=np.zeros(8))
        x = (np.arange(8) + 0.5) * p.period_x / 8
        assert np.allclose(p.linear_phase(x), sx)


class TestDualRampField:
    def test_zero_depth_identity(self):
        j = ms.eq1_jones_at(profile(0, 0), np.linspace(0, 20, 7), 3.3)
        assert np.allclose(j, np.eye(2), atol=1e-15)

    def test_quarter_period(self):
        p = profile(1, 0)
        j = ms.eq1_jones_at(p, p.period_x / 4, 1.0)
        assert np.allclose(j, np.diag([1j, -1j]), atol=1e-14)

    def test_half_period_circular(self):
        p = profile(0, 1)
        j = ms.eq1_jones_at(p, 0.3, p.period_y / 2)
        assert np.allclose(j @ R, -R, atol=1e-14)

    @settings(max_examples=60, deadline=None)
    @given(st.floats(0, 1), st.floats(0, 1), st.floats(-30, 30), st.floats(-30, 30))
    def test_matches_expm(self, bz, by, x, y):
        p = profile(bz, by)
        a = 2 * np.pi * bz * np.mod(x / p.period_x, 1)
        b = 2 * np.pi * by * np.mod(y / p.period_y, 1)
        ref = expm(1j * a * SZ) @ expm(1j * b * SY)
        assert np.allclose(ms.eq1_jones_at(p, x, y), ref, atol=1e-12)

    def test_factorizes_and_is_periodic(self):
        p = profile(0.37, 0.81)
        xs, ys = np.meshgrid(np.linspace(0.01, 7.9, 23), np.linspace(0.02, 7.7, 19), indexing="ij")
        j = ms.eq1_jones_at(p, xs, ys)
        jx = ms.eq1_jones_at(p, xs, 0.0)
        jy = ms.eq1_jones_at(p, 0.0, ys)
        assert np.max(np.abs(j - jx @ jy)) <= 1e-10
        assert np.max(np.abs(ms.eq1_jones_at(p, xs + p.period_x, ys) - j)) <= 1e-12
        assert np.max(np.abs(ms.eq1_jones_at(p, xs, ys + p.period_y) - j)) <= 1e-12
        prod = np.conj(np.swapaxes(j, -1, -2)) @ j
        assert np.max(np.abs(prod - np.eye(2))) <= 1e-12


class TestAtoms:
    def test_validation(self):
        with pytest.raises(ValueError):
            ms.MetaAtom(w1=0.0, w2=100.0)
        with pytest.raises(ValueError):
            ms.MetaAtom(w1=100.0, w2=100.0, n_host=1.0, n_env=1.5)

    def test_isotropic_is_global_phase(self):
        j = ms.atom_jones(ms.MetaAtom(w1=200.0, w2=200.0), 1550.0)
        assert np.allclose(j / j[0, 0], np.eye(2), atol=1e-12)

    def _half_wave(self, theta):
        # choose w2 so that phi1 - phi2 = pi exactly
        a = ms.MetaAtom(w1=400.0, w2=100.0, theta=theta)
        p1, _ = ms.atom_phases(a, 1550.0)
        n2 = (p1 - np.pi) * 1550.0 / (2 * np.pi * a.height)
        w2 = float(ms.width_for_index(n2))
        return ms.MetaAtom(w1=400.0, w2=w2, theta=theta)

    @pytest.mark.parametrize("theta", [0.0, 0.3, 1.1, -0.7])
    def test_geometric_phase(self, theta):
        atom = self._half_wave(theta)
        p1, p2 = ms.atom_phases(atom, 1550.0)
        assert p1 - p2 == pytest.approx(np.pi, abs=1e-9)
        out = ms.atom_jones(atom, 1550.0) @ R
        # oracle: direct product R(t) diag(1, -1) R(-t) applied to R, global phase e^{i phi1}
        c, s = np.cos(theta), np.sin(theta)
        rot = np.array([[c, -s], [s, c]])
        ref = np.exp(1j * p1) * (rot @ np.diag([1, -1]) @ rot.T @ R)
        assert np.allclose(out, ref, atol=1e-9)
        assert np.allclose(out, np.exp(1j * p1) * np.exp(2j * theta) * L, atol=1e-9)

    def test_circular_retardance(self):
        atom = ms.MetaAtom(w1=250.0, w2=250.0, circ_retardance=np.pi / 2)
        j = ms.atom_jones(atom, 1550.0)
        out_r, out_l = j @ R, j @ L
        ph_r = np.vdot(R, out_r)
        ph_l = np.vdot(L, out_l)
        assert abs(ph_r) == pytest.approx(1.0, abs=1e-12)
        assert np.angle(ph_r / ph_l) == pytest.approx(np.pi, abs=1e-12)  # +pi/2 - (-pi/2)
        assert np.allclose(out_r, ph_r * R, atol=1e-12)

    @settings(max_examples=80, deadline=None)
    @given(st.floats(1, 500), st.floats(1, 500), st.floats(-np.pi, np.pi),
           st.floats(100, 2000), st.floats(-np.pi, np.pi))
    def test_unitary(self, w1, w2, theta, h, phic):
        atom = ms.MetaAtom(w1=w1, w2=w2, theta=theta, height=h, circ_retardance=phic)
        j = ms.atom_jones(atom, 1550.0)
        assert np.linalg.norm(j.conj().T @ j - np.eye(2)) <= 1e-10

    def test_effective_index_monotone_and_bounded(self):
        w = np.linspace(0, 800, 2001)
        n = ms.effective_index(w)
        assert np.all(np.diff(n) >= 0)
        assert n.min() >= ms.DEFAULT_N_ENV and n.max() <= ms.DEFAULT_N_HOST

    def test_width_inverse(self):
        w = np.linspace(1, 500, 50)
        assert np.allclose(ms.width_for_index(ms.effective_index(w)), w)


class TestSampleField:
    def test_identity(self):
        f = ms.sample_field(profile(0, 0), 16, 8)
        assert np.allclose(f.samples, np.eye(2))

    def test_pointwise_match(self):
        p = profile(0.6, 0.9)
        f = ms.sample_field(p, 64, 64)
        xs, ys = f.coordinates()
        ref = ms.eq1_jones_at(p, xs[:, None], ys[None, :])
        assert np.max(np.abs(f.samples - ref)) <= 1e-12
        assert f.max_unitarity_error() <= 1e-10

    def test_passthrough_and_resample(self):
        f = ms.sample_field(profile(1, 1), 32, 32)
        assert ms.sample_field(f, 32, 32) is f
        g = ms.sample_field(f, 16, 16)
        assert np.allclose(g.samples, f.samples[1::2, 1::2])

    def test_too_coarse(self):
        with pytest.raises(ValueError):
            ms.sample_field(profile(1, 1), 4, 32)

    def test_round_trip_bit_exact(self):
        f = ms.sample_field(profile(0.3141, 0.2718), 12, 9)
        g = ms.JonesField.loads(f.dumps())
        assert g.shape == f.shape and g.period_x == f.period_x
        assert np.array_equal(g.samples.view(np.float64), f.samples.view(np.float64))


class TestSynthesis:
    def test_constant_profile(self):
        s = ms.synthesize_lattice(profile(0, 0))
        assert s.max_error <= 1e-10
        assert len({(a.w1, a.w2) for row in s.atoms for a in row}) == 1

    def test_chiral_exact(self):
        s = ms.synthesize_lattice(profile(1, 1), architecture="ChiralRetarder")
        assert s.field.shape == (16, 16)
        assert s.max_error <= 1e-8
        assert s.field.max_unitarity_error() <= 1e-10
        for row in s.atoms:
            for a in row:
                assert 0 < a.w1 <= a.w_max and 0 < a.w2 <= a.w_max

    def test_chiral_finer_lattice(self):
        s = ms.synthesize_lattice(profile(0.7, 0.4), lattice_pitch=0.25, architecture="ChiralRetarder")
        assert s.field.shape == (32, 32)
        assert s.max_error <= 1e-8

    def test_geometric_phase_residual(self):
        s = ms.synthesize_lattice(profile(1, 1), architecture="GeometricPhase")
        summ = s.summary()
        # regression of the recorded residual (rotated linear retarders only)
        assert summ["max_error"] == pytest.approx(1.705, abs=5e-3)
        assert summ["rms_error"] == pytest.approx(0.794, abs=5e-3)
        assert s.field.max_unitarity_error() <= 1e-10

    def test_geometric_phase_exact_for_linear_only(self):
        s = ms.synthesize_lattice(profile(1, 0), architecture="GeometricPhase")
        assert s.max_error <= 1e-6

    def test_pitch_must_divide(self):
        with pytest.raises(ValueError):
            ms.synthesize_lattice(profile(1, 1), lattice_pitch=0.3)

    def test_too_few_sites(self):
        with pytest.raises(ValueError):
            ms.synthesize_lattice(profile(1, 1), lattice_pitch=2.0)
