import numpy as np
import pytest

from clockframes.clocks import (
    function_of_time,
    gaussian_time_probe,
    make_custom_clock,
    make_gaussian_clock,
    make_ideal_clock,
)
from clockframes.errors import DomainError, LayoutError, SingularOperatorError
from clockframes.operators import Ket, embed, hermiticity_defect, identity, partial_matrix_element, tensor_product
from clockframes.scenarios import (
    PhysicalConstants,
    add_external_clock,
    add_spectator,
    build_accelerated,
    build_gravitational,
    build_time_parametrized,
    interaction_kernel,
    make_particle,
    position_profile,
    potential_profile,
    time_profile,
)


def two_level_clock(label="A"):
    return make_custom_clock(np.diag([0.0, 1.0]), 1.0, label=label)


def small_particle(label="M", n=4, lo=-1.0, hi=1.0):
    return make_particle(label, np.linspace(lo, hi, n, endpoint=False), mass=1.0)


class TestConstants:
    @pytest.mark.parametrize("kw", [{"hbar": 0}, {"c": -1}, {"G": -1e-3}, {"hbar": np.inf}])
    def test_invalid(self, kw):
        with pytest.raises(DomainError):
            PhysicalConstants(**kw)


class TestParticle:
    def test_position_diagonal(self):
        p = small_particle()
        np.testing.assert_array_equal(np.diag(p.position.matrix).real, p.grid)

    def test_kinetic_hermitian_and_momentum_diagonal(self):
        p = small_particle(n=8)
        assert hermiticity_defect(p.hamiltonian) <= 1e-13
        f = p.momentum_basis()
        in_p = f.conj().T @ p.hamiltonian.matrix @ f
        np.testing.assert_allclose(in_p, np.diag(p.momentum_grid() ** 2 / 2), atol=1e-12)
        assert np.max(np.abs(in_p.imag)) <= 1e-12

    def test_plane_wave_momentum(self):
        p = small_particle(n=16, lo=-4, hi=4)
        k = p.momentum_grid()[3]
        wave = np.exp(1j * k * p.grid)
        np.testing.assert_allclose(p.momentum.matrix @ wave, k * wave, atol=1e-12)

    def test_non_hermitian_rejected(self):
        with pytest.raises(DomainError):
            make_particle("M", [0.0, 1.0], hamiltonian=[[0, 1], [0, 0]])

    def test_kinetic_needs_mass(self):
        with pytest.raises(DomainError):
            make_particle("M", [0.0, 1.0], mass=0.0)


class TestProfile:
    @pytest.mark.parametrize("coeffs", [(0.5,), (0.1, -0.3), (0.2, 0.0, 0.7), (1.0, -1.0, 0.5, 0.25)])
    def test_polynomial_quadrature(self, coeffs):
        a = np.polynomial.Polynomial(coeffs)
        x0 = 0.3
        prof = position_profile(a, x0=x0)
        xs = np.linspace(-1, 1, 7)
        exact = -(a.integ()(xs) - a.integ()(x0))
        np.testing.assert_allclose(prof.f(xs), exact, atol=1e-10)
        assert prof.f(x0)[0] == 0.0

    def test_speed_of_light(self):
        prof = position_profile(lambda x: 2.0 + 0 * x)
        np.testing.assert_allclose(prof.f([1.0], c=2.0), [-0.5])

    def test_time_profile_has_no_f(self):
        with pytest.raises(DomainError):
            time_profile(lambda t: t).f([0.0])

    def test_numeric_derivative(self):
        prof = time_profile(lambda t: np.sin(t))
        assert prof.derivative(1.0)(0.4) == pytest.approx(np.cos(0.4), abs=1e-8)


class TestAccelerated:
    def test_free_case(self):
        clock = make_ideal_clock(4, 1.0)
        part = small_particle()
        sc = build_accelerated(clock, part, position_profile(lambda x: 0 * x))
        expect = tensor_product(clock.hamiltonian, identity(part.layout)) + embed(part.hamiltonian, sc.layout)
        np.testing.assert_allclose(sc.hamiltonian.matrix, expect.matrix, atol=1e-14)

    def test_coupling_example(self):
        clock = two_level_clock()
        part = make_particle("M", [0.0, 1.0], hamiltonian=np.zeros((2, 2)))
        sc = build_accelerated(clock, part, position_profile(lambda x: 0.5 + 0 * x))
        np.testing.assert_allclose(sc.split("A").interaction.matrix, np.diag([0, 0, 0, -0.5]), atol=1e-13)
        np.testing.assert_allclose(sc.hamiltonian.matrix, np.diag([0, 0, 1, 0.5]), atol=1e-13)

    def test_linear_slope(self):
        part = small_particle(n=6)
        sc = build_accelerated(make_ideal_clock(3, 1.0), part, position_profile(lambda x: 0.3 + 0 * x))
        np.testing.assert_allclose(np.diag(sc.potential.matrix).real, -0.3 * part.grid, atol=1e-13)

    def test_hermitian(self):
        part = small_particle(n=5)
        sc = build_accelerated(make_ideal_clock(6, 0.5), part, position_profile(lambda x: 0.2 + 0.1 * x))
        assert hermiticity_defect(sc.hamiltonian) <= 1e-13

    def test_rest_mass_flag(self):
        clock = make_ideal_clock(3, 1.0)
        part = make_particle("M", np.linspace(-1, 1, 4, endpoint=False), mass=2.0)
        prof = position_profile(lambda x: 0.3 + 0 * x)
        plain = build_accelerated(clock, part, prof)
        full = build_accelerated(clock, part, prof, include_rest_mass=True)
        extra = embed(2.0 * plain.potential, plain.layout)
        np.testing.assert_allclose(full.hamiltonian.matrix - plain.hamiltonian.matrix, extra.matrix, atol=1e-13)

    def test_not_invertible(self):
        part = make_particle("M", [0.0, 0.5, 1.0, 1.5], mass=1.0)
        with pytest.raises(SingularOperatorError):
            build_accelerated(make_ideal_clock(3, 1.0), part, position_profile(lambda x: 1.0 + 0 * x))

    def test_requires_position_profile(self):
        with pytest.raises(DomainError):
            build_accelerated(make_ideal_clock(3, 1.0), small_particle(), time_profile(lambda t: t))

    def test_label_clash(self):
        with pytest.raises(LayoutError):
            build_accelerated(make_ideal_clock(3, 1.0, label="M"), small_particle(), potential_profile(lambda x: 0 * x))


def grav_fixture(G=0.2, n_grid=(1.0, 2.0)):
    clock_a = make_ideal_clock(3, 1.0, label="A")
    clock_b = two_level_clock("B")
    m = make_particle("M", [-1.0, 1.0], hamiltonian=[[0, 0.5], [0.5, 0]])
    n = make_particle("N", list(n_grid), hamiltonian=np.diag([0.1, -0.1]))
    return build_gravitational(clock_a, m, clock_b, n, PhysicalConstants(G=G))


class TestGravitational:
    def test_decoupled(self):
        sc = grav_fixture(G=0.0)
        lay = sc.layout
        expect = sum((embed(x, lay) for x in (sc.clocks[0].hamiltonian, sc.clocks[1].hamiltonian,
                                                sc.particles[0].hamiltonian, sc.particles[1].hamiltonian)),
                     start=0 * identity(lay))
        np.testing.assert_allclose(sc.hamiltonian.matrix, expect.matrix, atol=1e-14)
        assert lay.labels == ("A", "M", "B", "N")

    def test_coupling_example(self):
        sc = grav_fixture(G=0.2)
        assert sc.extras["coupling_strength"] == pytest.approx(0.1)
        np.testing.assert_allclose(sc.extras["f_B"].matrix, np.diag([0, 0, -0.1, -0.05]), atol=1e-15)

    def test_hermitian_random(self):
        rng = np.random.default_rng(3)
        for _ in range(3):
            hb = rng.standard_normal((2, 2))
            clock_b = make_custom_clock(hb + hb.T, 0.7, label="B")
            m = make_particle("M", [0.0, 1.0], hamiltonian=np.diag(rng.standard_normal(2)))
            n = make_particle("N", np.linspace(1, 3, 3, endpoint=False), mass=1.0)
            sc = build_gravitational(make_ideal_clock(3, 0.5), m, clock_b, n, PhysicalConstants(G=0.3))
            assert hermiticity_defect(sc.hamiltonian) <= 1e-12

    def test_linear_in_G(self):
        a, b = grav_fixture(G=0.01), grav_fixture(G=0.02)
        np.testing.assert_allclose(b.extras["f_B"].matrix, 2 * a.extras["f_B"].matrix, rtol=1e-15, atol=0)

    def test_singularity(self):
        with pytest.raises(SingularOperatorError):
            grav_fixture(n_grid=(0.0, 1.0))

    def test_softening(self):
        with pytest.raises(SingularOperatorError):
            grav_fixture(n_grid=(0.2, 1.0))
        sc = build_gravitational(make_ideal_clock(2, 1.0), make_particle("M", [0.0, 1.0], mass=1.0),
                                 make_ideal_clock(2, 1.0, label="B"), make_particle("N", [0.2, 1.0], mass=1.0),
                                 PhysicalConstants(G=0.1), softening=0.1)
        assert hermiticity_defect(sc.hamiltonian) <= 1e-12

    def test_two_body_extension(self):
        m = make_particle("M", [-3.0, -2.0], mass=1.0)
        n = make_particle("N", [1.0, 2.0], mass=1.0)
        sc = build_gravitational(make_ideal_clock(2, 1.0), m, make_ideal_clock(2, 1.0, label="B"), n,
                                 PhysicalConstants(G=0.1), two_body=True)
        assert sc.extras["two_body"]
        assert hermiticity_defect(sc.hamiltonian) <= 1e-12

    def test_kernel_matches_matrix_elements(self):
        sc = grav_fixture()
        clock = sc.clock("A")
        k = interaction_kernel(sc, "A")
        s = clock.time_states()
        for j, kk in [(0, 0), (0, 2), (1, 2)]:
            direct = partial_matrix_element(Ket(clock.layout, s[:, j]), sc.split("A").interaction,
                                            Ket(clock.layout, s[:, kk]))
            np.testing.assert_allclose(k[j, kk] * clock.tick, direct.matrix, atol=1e-12)


class TestTimeParametrized:
    def test_zero(self):
        sc = build_time_parametrized(make_ideal_clock(8, 0.25), small_particle(), lambda t: 0 * t)
        assert np.all(sc.split("A").interaction.matrix == 0)

    def test_one_collapses_to_H_A(self):
        clock = make_ideal_clock(8, 0.25)
        sc = build_time_parametrized(clock, small_particle(), lambda t: 1.0 + 0 * t)
        np.testing.assert_allclose(sc.extras["clock_interaction"].matrix, clock.hamiltonian.matrix, atol=1e-12)

    def test_weyl_hermitian(self):
        sc = build_time_parametrized(make_ideal_clock(32, 1 / 32), small_particle(), lambda t: 0.1 * t)
        assert hermiticity_defect(sc.extras["clock_interaction"]) <= 1e-13
        assert hermiticity_defect(sc.hamiltonian) <= 1e-12

    @pytest.mark.parametrize("ordering", ["left", "right"])
    def test_other_orderings_not_hermitian(self, ordering):
        sc = build_time_parametrized(make_ideal_clock(16, 1 / 16), small_particle(), lambda t: 0.1 * t,
                                     ordering=ordering)
        assert hermiticity_defect(sc.hamiltonian) > 1e-3

    def test_unknown_ordering(self):
        with pytest.raises(DomainError):
            build_time_parametrized(make_ideal_clock(4, 1.0), small_particle(), lambda t: t, ordering="up")

    def test_weyl_local_form_on_interior_probe(self):
        clock = make_ideal_clock(128, 1 / 128)
        g, dg = (lambda t: 0.1 * t), (lambda t: 0.1 + 0 * t)
        sc = build_time_parametrized(clock, small_particle(n=2), g, dg=dg)
        h_int = sc.extras["clock_interaction"].matrix
        local = function_of_time(clock, g).matrix @ clock.hamiltonian.matrix \
            - 0.5j * clock.hbar * function_of_time(clock, dg).matrix
        v = gaussian_time_probe(clock, width=0.025).vector
        assert np.linalg.norm((h_int - local) @ v) <= 1e-2

    def test_diagonal_elements(self):
        clock = make_ideal_clock(16, 1 / 16)
        g = lambda t: 0.3 * t + 0.1  # noqa: E731
        sc = build_time_parametrized(clock, small_particle(n=2), g)
        s = clock.time_states()
        h_int = s.conj().T @ sc.extras["clock_interaction"].matrix @ s
        h_a = s.conj().T @ clock.hamiltonian.matrix @ s
        # Weyl symmetrization leaves the diagonal at g(t_j) <t_j|H_A|t_j>
        np.testing.assert_allclose(np.diag(h_int), g(clock.readings) * np.diag(h_a), atol=1e-12)

    def test_kernel_identity_resolution(self):
        clock = make_ideal_clock(8, 0.5)
        sc = build_time_parametrized(clock, small_particle(n=2), lambda t: 1.0 + 0 * t)
        k = interaction_kernel(sc, "A")
        s = clock.time_states()
        h_a = s.conj().T @ clock.hamiltonian.matrix @ s
        col = (k.sum(axis=0) * clock.tick)[:, 0, 0]
        np.testing.assert_allclose(col, h_a.sum(axis=0), atol=1e-10)

    def test_gaussian_clock_allowed(self):
        sc = build_time_parametrized(make_gaussian_clock(8, 0.5, 0.3), small_particle(n=2), lambda t: 0.1 * t)
        assert hermiticity_defect(sc.hamiltonian) <= 1e-12

    def test_kernel_zero(self):
        sc = build_accelerated(make_ideal_clock(4, 1.0), small_particle(n=2), potential_profile(lambda x: 0 * x))
        assert np.all(interaction_kernel(sc, "A") == 0)

    def test_kernel_unknown_clock(self):
        sc = build_accelerated(make_ideal_clock(4, 1.0), small_particle(n=2), potential_profile(lambda x: 0 * x))
        with pytest.raises(LayoutError):
            interaction_kernel(sc, "Z")


class TestExternalClock:
    def base(self):
        part = make_particle("M", [0.0, 0.5, 1.0], hamiltonian=np.diag([0.3, -0.2, 0.5]))
        return build_accelerated(make_ideal_clock(3, 1.0), part, position_profile(lambda x: 0.2 + 0 * x))

    def test_spectrum_minkowski_sum(self):
        sc = self.base()
        clock_b = make_ideal_clock(2, 1.5, label="B")
        out = add_external_clock(sc, clock_b)
        ea = np.linalg.eigvalsh(sc.hamiltonian.matrix)
        eb = np.linalg.eigvalsh(clock_b.hamiltonian.matrix)
        np.testing.assert_allclose(np.sort(np.linalg.eigvalsh(out.hamiltonian.matrix)),
                                   np.sort(np.add.outer(ea, eb).ravel()), atol=1e-12)

    def test_hermitian_iff(self):
        out = add_external_clock(self.base(), make_ideal_clock(2, 1.0, label="B"))
        assert hermiticity_defect(out.hamiltonian) <= 1e-12
        left = build_time_parametrized(make_ideal_clock(4, 0.25), small_particle(n=2), lambda t: 0.2 * t,
                                       ordering="left")
        out = add_external_clock(left, make_ideal_clock(2, 1.0, label="B"))
        assert hermiticity_defect(out.hamiltonian) > 1e-3

    def test_conditioning_sanity(self):
        sc = self.base()
        clock_b = make_ideal_clock(4, 1.0, label="B")
        out = add_external_clock(sc, clock_b)
        s = clock_b.time_states()
        for j in range(4):
            tj = Ket(clock_b.layout, s[:, j])
            block = partial_matrix_element(tj, out.hamiltonian, tj).matrix
            h_bb = np.vdot(s[:, j], clock_b.hamiltonian.matrix @ s[:, j])
            np.testing.assert_allclose(block - h_bb * np.eye(sc.layout.dim), sc.hamiltonian.matrix, atol=1e-12)

    def test_collision(self):
        with pytest.raises(LayoutError):
            add_external_clock(self.base(), make_ideal_clock(2, 1.0, label="M"))

    def test_spectator(self):
        out = add_spectator(self.base(), "S", np.diag([0.0, 1.0]))
        assert out.layout.labels == ("A", "M", "S")
        assert hermiticity_defect(out.hamiltonian) <= 1e-12
