"""Smoke test for the cpk extension module."""

import math
import sys

import cpk


def close(a, b, rel):
    return abs(a - b) <= rel * abs(b)


def main():
    assert close(cpk.thermal_frequency(300.0), 3.93e13, 5e-3)
    assert abs(cpk.photon_number(1e13, 300.0) + cpk.photon_number(-1e13, 300.0) + 1.0) < 1e-12
    t_omega, t_z = cpk.characteristic_temperatures(2.41e15, 5e-6)
    assert t_omega > 10 * t_z

    lih = cpk.Species.bundled("LiH")
    assert "Rb" in cpk.Species.bundled_names()
    perfect = cpk.Surface.perfect()
    s = cpk.Scenario(lih, perfect, 5e-6, 300.0)

    b = s.breakdown()
    assert b["regime"] == "temperature-invariant (molecule)"
    assert abs(b["u_nonresonant"]) > 10 * abs(b["u_total"])
    assert close(b["u_total"], s.asymptote("eq10"), 0.03)
    assert close(s.u_nonresonant(), s.u_nonresonant_closed(), 1e-6)
    assert close(s.u_evanescent(), s.u_evanescent_closed(), 1e-6)

    gold = cpk.Scenario(lih, cpk.Surface.gold(), 5e-6, 300.0)
    assert math.isfinite(gold.breakdown()["u_total"])

    csv = s.sweep_csv("temperature", 0.0, 300.0, 4, asymptotes=["eq9", "eq10"])
    lines = csv.splitlines()
    assert lines[0].startswith("temperature_K,u_nonresonant_J,u_evanescent_J,u_total_J,eq9_J,eq10_J")
    assert len(lines) == 5

    rb = cpk.Scenario(cpk.Species.bundled("Rb"), perfect, 5e-6, 300.0)
    report = rb.compare([1.0, 1500.0, 1800.0], 0.01)
    assert report["rows"][1]["best_total"] == "eq17"

    gas = cpk.Species.two_level("gas", 2.758e12, 1.0, "thermal_ensemble")
    e = cpk.casimir_energy(gas, perfect, 1e-6, 300.0, 1e20)
    assert e["closed"] < 0 and close(e["numerical"], e["closed"], 1e-3)

    try:
        cpk.Scenario(lih, perfect, -1.0, 300.0)
    except ValueError:
        pass
    else:
        raise AssertionError("negative distance accepted")

    print("cpk smoke test passed")
    return 0


if __name__ == "__main__":
    sys.exit(main())
