"""Risk Shadow of a loaded cantilever beam.

A weight hangs on the free end of the beam; the support load cell streams
readings and every component of the Risk Shadow (four beam segments and
three arm motors) is refreshed at 10 Hz with a color-banded reliability
index. Heavier weights push the near-support segments down through the
bands.

Run:  python3 demos/02_beam_risk_shadow.py
"""

from risktwin import Session, load_scenario

ANSI = {"Safe": "\033[92m", "Low": "\033[93m", "Medium": "\033[38;5;209m",
        "High": "\033[91m"}
RESET = "\033[0m"


def shadow_line(frame):
    cells = []
    for c in frame["components"]:
        color = ANSI.get(c["band"], "")
        beta = "≥10" if c["beta"] >= 10 else f"{c['beta']:.1f}"
        cells.append(f"{color}{c['id']}:{beta}{RESET}")
    return "  ".join(cells)


for weight in (0.2, 0.5, 0.9):
    scenario = load_scenario({
        "id": "beam-arm",
        "n_samples": 50_000,
        "n_failure": 500,
        "seed": 2345,
        "truth": {"weight": weight},
    })
    session = Session(scenario, seed=7)
    for _ in range(30):
        frame = session.step()
    print(f"\nweight = {weight} kg ({weight / 0.102:.1f} N on the tip)")
    print("  " + shadow_line(frame))
    worst = min(frame["components"], key=lambda c: c["beta"])
    print(f"  worst component: {worst['id']} at beta {worst['beta']:.2f} "
          f"({worst['band']}, method {worst['method']})")
