"""Regenerate the checked-in determinism fixtures.

Run from the repository root:

    python3 tests/golden/regen.py

Overwrites owl_car_plan.json and the stage PNGs in this directory. Only do
this deliberately: the whole point of these files is that compiler and
renderer output never drifts.
"""

from pathlib import Path

from lexcraft import canon, demo, raster
from lexcraft.compiler import compile_lexicon
from lexcraft.moodboard import DEFAULT_SEED
from lexcraft.renderer import CompositorBackend, render

GOLDEN_DIR = Path(__file__).resolve().parent


def main() -> None:
    board, lex, _roles = demo.build_owl_car_scene()
    plan = compile_lexicon(lex, board)
    (GOLDEN_DIR / "owl_car_plan.json").write_text(canon.dumps(plan.to_doc()) + "\n")
    print(f"plan_hash {plan.plan_hash}")

    artifact = render(plan, board, CompositorBackend(), canvas=(256, 256), seed=DEFAULT_SEED)
    for name, image in zip(artifact.stage_filenames(), artifact.stage_images):
        data = raster.encode_png(image)
        (GOLDEN_DIR / name).write_bytes(data)
        print(f"wrote {name} ({len(data)} bytes)")
    (GOLDEN_DIR / "final.png").write_bytes(raster.encode_png(artifact.final))
    print("wrote final.png")


if __name__ == "__main__":
    main()
