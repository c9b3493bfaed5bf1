"""Regenerate src/scenred/data/rts24.json (24-bus, 32-unit system with six wind farms).

Topology, reactances, ratings, bus loads and unit sizes follow the IEEE RTS-24
(MATPOWER ``case24_ieee_rts``). Unit technical data follow the RTS-96 unit
classes; start-up costs are assumed round numbers. Run from the repo root.
"""

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))
from scenred.data import FORMAT_VERSION, write_network_document  # noqa: E402

LOAD = {1: 108, 2: 97, 3: 180, 4: 74, 5: 71, 6: 136, 7: 125, 8: 171, 9: 175, 10: 195,
        13: 265, 14: 194, 15: 317, 16: 100, 18: 333, 19: 181, 20: 128}
PROFILE = [67, 63, 60, 59, 59, 60, 74, 86, 95, 96, 96, 95, 95, 95, 93, 94, 99, 100, 100, 96, 91, 83, 73, 63]
LINES = [
    (1, 2, 0.0139, 175), (1, 3, 0.2112, 175), (1, 5, 0.0845, 175), (2, 4, 0.1267, 175),
    (2, 6, 0.192, 175), (3, 9, 0.119, 175), (3, 24, 0.0839, 400), (4, 9, 0.1037, 175),
    (5, 10, 0.0883, 175), (6, 10, 0.0605, 175), (7, 8, 0.0614, 175), (8, 9, 0.1651, 175),
    (8, 10, 0.1651, 175), (9, 11, 0.0839, 400), (9, 12, 0.0839, 400), (10, 11, 0.0839, 400),
    (10, 12, 0.0839, 400), (11, 13, 0.0476, 500), (11, 14, 0.0418, 500), (12, 13, 0.0476, 500),
    (12, 23, 0.0966, 500), (13, 23, 0.0865, 500), (14, 16, 0.0389, 500), (15, 16, 0.0173, 500),
    (15, 21, 0.049, 500), (15, 21, 0.049, 500), (15, 24, 0.0519, 500), (16, 17, 0.0259, 500),
    (16, 19, 0.0231, 500), (17, 18, 0.0144, 500), (17, 22, 0.1053, 500), (18, 21, 0.0259, 500),
    (18, 21, 0.0259, 500), (19, 20, 0.0396, 500), (19, 20, 0.0396, 500), (20, 23, 0.0216, 500),
    (20, 23, 0.0216, 500), (21, 22, 0.0678, 500),
]
# class: p_min, p_max, ramp MW/h, min_up, min_down, c_su $, c_fix $/h, c_lin $/MWh, initially on
UNITS = {
    "U12": (2.4, 12, 60, 4, 2, 800, 86.4, 56.56, False),
    "U20": (16, 20, 180, 1, 1, 300, 400.7, 130.0, False),
    "U50": (10, 50, 300, 1, 1, 50, 0.001, 0.001, True),
    "U76": (15.2, 76, 120, 8, 4, 1500, 212.3, 16.08, True),
    "U100": (25, 100, 420, 8, 8, 3000, 781.5, 43.66, False),
    "U155": (54.3, 155, 180, 8, 8, 2500, 382.2, 12.39, True),
    "U197": (69, 197, 180, 12, 10, 3500, 832.8, 48.58, False),
    "U350": (140, 350, 240, 24, 48, 5000, 665.1, 11.85, True),
    "U400": (100, 400, 1200, 24, 48, 8000, 395.4, 4.42, True),
}
FLEET = [(1, "U20"), (1, "U20"), (1, "U76"), (1, "U76"), (2, "U20"), (2, "U20"), (2, "U76"), (2, "U76"),
         (7, "U100"), (7, "U100"), (7, "U100"), (13, "U197"), (13, "U197"), (13, "U197"),
         (15, "U12"), (15, "U12"), (15, "U12"), (15, "U12"), (15, "U12"), (15, "U155"), (16, "U155"),
         (18, "U400"), (21, "U400"), (22, "U50"), (22, "U50"), (22, "U50"), (22, "U50"), (22, "U50"),
         (22, "U50"), (23, "U155"), (23, "U155"), (23, "U350")]
WIND_BUSES = (3, 5, 7, 16, 21, 23)


def main():
    gens = []
    for k, (bus, cls) in enumerate(FLEET, start=1):
        pmin, pmax, ramp, ut, dt, csu, cfix, clin, on = UNITS[cls]
        gens.append({
            "id": f"G{k}_{cls}", "bus": bus, "p_min_mw": float(pmin), "p_max_mw": float(pmax),
            "ramp_up_mw": float(ramp), "ramp_down_mw": float(ramp), "min_up": ut, "min_down": dt,
            "u0": int(on), "t_u0": 48 if on else 24, "p0_mw": round(0.6 * pmax, 6) if on else 0.0,
            "c_su": float(csu), "c_fix": float(cfix), "c_lin": float(clin),
        })
    doc = {
        "format_version": FORMAT_VERSION,
        "name": "rts24-wind",
        "base_mva": 100.0,
        "cost_scale": 0.0001,
        "period_hours": 1.0,
        "c_shed": 1500.0,
        "reference_bus": 1,
        "buses": [{"id": b} for b in range(1, 25)],
        "lines": [{"from": f, "to": t, "susceptance": round(1.0 / x, 12), "f_max_mw": float(r)}
                  for f, t, x, r in LINES],
        "generators": gens,
        "demands": [{"bus": b, "mw": [round(mw * s / 100.0, 6) for s in PROFILE]} for b, mw in LOAD.items()],
        "wind_farms": [{"id": f"W{b}", "bus": b, "capacity_mw": 350.0} for b in WIND_BUSES],
    }
    write_network_document(doc, Path("src/scenred/data/rts24.json"))


if __name__ == "__main__":
    main()
