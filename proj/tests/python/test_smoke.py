import math

import numpy as np
import pytest

import phonon_laser as pl


def test_recipes_listed_and_valid():
    names = pl.recipe_names()
    assert "fig2-dynamics" in names and len(names) == 9
    for name in names:
        assert isinstance(pl.check_recipe(name), list)


def test_defaults_round_trip_as_dicts():
    cfg = pl.recipe_defaults("fig2-dynamics")
    assert cfg["sites"][0]["omega_m"] == 5.0
    assert cfg["bonds"][0]["big_omega"] == 9.0
    cfg["dissipation"]["gamma_mech"] = 2e-3
    assert isinstance(pl.check_recipe("fig2-dynamics", cfg), list)


def test_bad_config_raises_value_error():
    with pytest.raises(ValueError, match="bonds"):
        pl.check_recipe("fig2-dynamics", {"sites": [{"delta": 2.0, "omega_m": 5.0, "lambda": 0.4}, {"delta": 2.0}], "bonds": []})
    with pytest.raises(ValueError):
        pl.recipe_defaults("nope")


def test_states_and_g2():
    assert pl.g2_zero(pl.thermal_state(0.7, 60)) == pytest.approx(2.0, rel=1e-6)
    assert pl.g2_zero(pl.coherent_state(1.5, 40)) == pytest.approx(1.0, rel=1e-6)
    assert pl.g2_zero(pl.fock_state(0, 5)) is None
    b = pl.annihilation(4)
    assert b.shape == (5, 5)
    assert b[0, 1] == pytest.approx(1.0)


def test_wigner_of_vacuum():
    w = pl.wigner(pl.thermal_state(0.0, 10), n_points=101, extent=4.0)
    assert w["W"].shape == (101, 101)
    assert w["W"][50, 50] == pytest.approx(1.0 / math.pi, rel=1e-6)
    dx = w["x"][1] - w["x"][0]
    assert w["W"].sum() * dx * dx == pytest.approx(1.0, rel=1e-3)


def test_hamiltonians_are_hermitian():
    cfg = pl.recipe_defaults("fig2-dynamics")
    for s in cfg["sites"]:
        s["n_max"] = 3
    h = pl.full_hamiltonian(cfg, 0.37)
    assert h.shape == (16, 16)
    assert np.abs(h - h.conj().T).max() < 1e-12
    heff = pl.effective_hamiltonian(cfg, 1)
    assert np.abs(heff - heff.conj().T).max() < 1e-12


def test_bessel_and_kuramoto():
    assert abs(pl.bessel_j(0, 2.4048)) < 1e-4
    phases = np.exp(1j * np.array([[0.3, 0.4], [0.3, 0.4 + math.pi]]))
    r = pl.kuramoto(phases.tolist())
    assert r[0] == pytest.approx(1.0)
    assert r[1] == pytest.approx(0.0, abs=1e-12)


def test_short_minimal_run():
    cfg = {"integration": {"t_end": 20.0, "dt": 0.05, "sample_every": 20}, "recipe": {"n_max": 4, "n_max_escalation": 0}}
    out = pl.minimal_dynamics("fig2-dynamics", cfg)
    assert len(out["full"]["times"]) == 21
    assert out["full"]["n1"][0].real == pytest.approx(0.1, rel=1e-3)  # thermal state cut at n_max = 4
    rho = out["final_state"]
    assert np.trace(rho).real == pytest.approx(1.0, abs=1e-10)


def test_short_array_run():
    out = pl.array_run("fig3-array", {"integration": {"t_end": 20.0}})
    assert out["n"].shape[0] == 10
    assert out["max_conjugacy_error"] < 1e-8


def test_sweep_and_recipe_files(tmp_path):
    res = pl.run_sweep(
        {
            "experiment": "minimal-case1",
            "target": "bonds[0].j_amp",
            "values": [0.02, 0.08],
            "base": "fig2-threshold",
            "n_max": 4,
            "n_max_escalation": 0,
            "config": {"integration": {"t_end": 20.0}},
        }
    )
    assert list(res["values"]) == [0.02, 0.08]
    assert res["n_ss"].shape == (2,)
    assert res["errors"] == [None, None]

    out = pl.run_recipe(
        "fig2-dynamics",
        tmp_path,
        {"integration": {"t_end": 10.0, "dt": 0.05, "sample_every": 20}, "recipe": {"n_max": 4, "n_max_escalation": 0}},
    )
    assert (tmp_path / "timeseries.csv").exists()
    assert "max_rel_dev" in out["summary"]
