import numpy as np
import pytest

from l1profile.profiles import Profile, ProfileSet, make_grid
from l1profile.synthetic import generate, pseudo_vdp_spec


def smooth_set(n=8, m=40, seed=0, sigma=0.3, shift_sd=1.0, domain=(0.0, 1.0)):
    """Small non-degenerate profile set: sine shape, random centers, noise."""
    rng = np.random.default_rng(seed)
    x = np.linspace(*domain, m)
    profiles = []
    for i in range(n):
        y = np.sin(2 * np.pi * x) + shift_sd * rng.standard_normal() + sigma * rng.standard_normal(m)
        profiles.append(Profile(f"S{i + 1}", x, y))
    return ProfileSet(tuple(profiles), domain)


@pytest.fixture
def small_set():
    return smooth_set()


@pytest.fixture(scope="session")
def vdp_gaussian():
    """100 clean profiles from the pseudo-VDP spec (Gaussian errors)."""
    return generate(pseudo_vdp_spec("gaussian", 0), 100)


@pytest.fixture(scope="session")
def vdp_model(vdp_gaussian):
    from l1profile.phase1 import fit
    return fit(vdp_gaussian)


@pytest.fixture
def vdp_grid():
    return make_grid(0.0, 0.626, 0.002)


# ---------------------------------------------------------------- acceptance report

ACCEPTANCE = {}  # criterion number -> list of (label, status, detail)


def record(criterion, label, status, detail=""):
    ACCEPTANCE.setdefault(criterion, []).append((label, status, detail))
    print(f"criterion {criterion} [{label}]: {status} {detail}")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        entries = ACCEPTANCE[n]
        states = {s for _, s, _ in entries}
        overall = "FAIL" if "FAIL" in states else ("SKIP" if states == {"SKIP"} else "PASS")
        detail = "; ".join(f"{label}: {s}" + (f" ({d})" if d else "") for label, s, d in entries)
        tr.write_line(f"criterion {n}: {overall}  {detail}")
