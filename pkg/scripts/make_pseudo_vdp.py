"""Regenerate the committed pseudo-VDP fixture.

A stand-in for the 24 Walker-Wright board profiles: spline control values
hand-picked to trace a board density profile (dense faces, soft core),
profiles drawn from the synthetic model, then re-estimated with
``calibrate_spec_from_phase1`` exactly as one would from real data.

    python scripts/make_pseudo_vdp.py [--sigma S] [--sigma-delta SD] [--corr-rate R] [--out PATH]
"""
import argparse
from pathlib import Path

from l1profile.profiles import make_grid
from l1profile.synthetic import (VDP_DOMAIN, VDP_STEP, SyntheticSpec,
                                 calibrate_spec_from_phase1, generate)

# density (lb/ft^3) control values: surface, face peak, shoulder, core x2, ...
HAND_COEFFS = (54.0, 66.0, 57.0, 50.5, 50.5, 57.0, 66.0, 54.0)
N_BOARDS = 24
SEED = 20020


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--sigma", type=float, default=0.5)
    ap.add_argument("--sigma-delta", type=float, default=0.6)
    ap.add_argument("--corr-rate", type=float, default=8.0)
    ap.add_argument("--out", default=str(Path(__file__).resolve().parents[1]
                                         / "src/l1profile/data/pseudo_vdp.txt"))
    args = ap.parse_args()

    gen = SyntheticSpec(make_grid(*VDP_DOMAIN, VDP_STEP), HAND_COEFFS, args.sigma_delta,
                        args.sigma, corr_rate=args.corr_rate, seed=SEED)
    boards = generate(gen, N_BOARDS, id_prefix="B")
    cal = calibrate_spec_from_phase1(boards)
    lines = [
        "# pseudo-VDP fixture: generator inputs and the values re-estimated from",
        "# the generated boards (per-profile L1 spline fits). Regenerate with",
        "# scripts/make_pseudo_vdp.py.",
        f"generator.alpha0_coeffs={' '.join(repr(c) for c in HAND_COEFFS)}",
        f"generator.sigma_delta={args.sigma_delta!r}",
        f"generator.sigma={args.sigma!r}",
        f"generator.corr_rate={args.corr_rate!r}",
        f"generator.n_profiles={N_BOARDS}",
        f"generator.seed={SEED}",
        f"calibrated.alpha0_coeffs={' '.join(repr(c) for c in cal.alpha0_coeffs)}",
        f"calibrated.sigma_delta={cal.sigma_delta!r}",
        f"calibrated.sigma={cal.sigma!r}",
    ]
    Path(args.out).write_text("\n".join(lines) + "\n", encoding="utf-8")
    print("\n".join(lines[3:]))


if __name__ == "__main__":
    main()
