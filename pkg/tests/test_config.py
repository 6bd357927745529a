import numpy as np
import pytest
import yaml

from clockframes.config import build_scenario, load_config, parse_config, profile_functions, serialize_config
from clockframes.errors import ConfigError, DegenerateClockError

from conftest import DECAY, FREE, GRAVITY


def edited(text, **changes):
    cfg = yaml.safe_load(text)
    for dotted, value in changes.items():
        node = cfg
        parts = dotted.split("__")
        for p in parts[:-1]:
            node = node[int(p)] if isinstance(node, list) else node[p]
        if value is None:
            del node[parts[-1]]
        else:
            node[parts[-1]] = value
    return yaml.safe_dump(cfg)


def errors_of(text):
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    return info.value.errors


def test_roundtrip_is_bit_identical():
    cfg = parse_config(FREE)
    text = serialize_config(cfg)
    assert parse_config(text) == cfg
    assert serialize_config(parse_config(text)) == text


def test_load_from_file(write_config):
    assert load_config(write_config(FREE))["clocks"][0]["dimension"] == 16


def test_dimension_cap():
    errs = errors_of(edited(FREE, particles__0__grid={"min": -8.0, "max": 8.0, "count": 1000000}))
    assert any("exceeds" in e and "4096" in e for e in errs)


def test_ideal_and_width_contradict():
    errs = errors_of(edited(FREE, clocks__0__ideal=True, clocks__0__width=0.01))
    assert any("clocks[0]" in e and "contradiction" in e for e in errs)


def test_unknown_key():
    errs = errors_of(edited(FREE, run__colour="blue"))
    assert errs == ["run.colour: unknown key"]


def test_all_errors_collected():
    text = edited(FREE, clocks__0__tick=-1.0, run__integrator="euler", particles__0__mass="heavy")
    assert len(errors_of(text)) >= 3


def test_missing_section():
    assert any("run" in e and "missing" in e for e in errors_of(edited(FREE, run=None)))


def test_bad_yaml():
    assert errors_of("scenario: [unclosed")[0].startswith("<yaml>")


def test_not_a_mapping():
    assert errors_of("- 1\n- 2\n")


@pytest.mark.parametrize("obs", ["spin:M", "position:Q", "position"])
def test_bad_observable(obs):
    assert errors_of(edited(FREE, run__observables=[obs]))


def test_family_kind_mismatch():
    # a clock-time profile makes no sense for a position-parametrized coupling
    assert errors_of(edited(FREE, profile={"family": "linear", "alpha": 0.1}))


def test_gravitational_singularity():
    text = edited(GRAVITY, particles__1__grid={"min": -1.0, "max": 1.0, "count": 4})
    errs = errors_of(text)
    assert any("particles[1].grid" in e and "singularity" in e for e in errs)


def test_gravitational_needs_two_clocks():
    cfg = yaml.safe_load(GRAVITY)
    cfg["clocks"] = cfg["clocks"][:1]
    assert errors_of(yaml.safe_dump(cfg))


def test_build_free():
    sc = build_scenario(parse_config(FREE))
    assert sc.coupling == "accelerated"
    assert sc.layout.dims == (16, 32)
    assert np.max(np.abs(sc.hamiltonian.matrix - sc.hamiltonian.matrix.conj().T)) <= 1e-12


def test_build_decay_and_external():
    sc = build_scenario(parse_config(DECAY))
    assert sc.coupling == "time-parametrized" and sc.ordering == "weyl"
    small = {"min": -8.0, "max": 8.0, "count": 8}
    sc = build_scenario(parse_config(edited(FREE, scenario__external_clock="B", particles__0__grid=small)))
    assert sc.layout.labels == ("A", "M", "B")
    assert sc.clocks[1].dimension == 16 and sc.clocks[1].ideal


def test_build_gaussian_clock():
    sc = build_scenario(parse_config(edited(FREE, clocks__0__width=0.01)))
    assert not sc.clocks[0].ideal


def test_offset_shifts_free_hamiltonian():
    a = build_scenario(parse_config(FREE)).particles[0].hamiltonian.matrix
    b = build_scenario(parse_config(edited(FREE, particles__0__offset=2.0))).particles[0].hamiltonian.matrix
    np.testing.assert_allclose(b - a, 2.0 * np.eye(32), atol=1e-13)


def test_build_error_carries_path():
    # passes validation, but the Gaussian energy amplitudes underflow when the clock is built
    text = edited(FREE, clocks__0__dimension=64, clocks__0__width=1000.0)
    with pytest.raises(DegenerateClockError) as info:
        build_scenario(parse_config(text))
    assert info.value.config_path == "clocks[0]"


def test_profile_functions():
    kind, g, dg = profile_functions({"family": "quadratic", "beta": 0.5})
    assert kind == "time" and g(2.0) == 2.0 and dg(2.0) == 2.0
    kind, a, _ = profile_functions({"family": "tabulated", "points": [[0, 0], [1, 2]]})
    assert kind == "tabulated" and a(0.5) == 1.0
