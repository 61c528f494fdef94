"""Generate the cross-implementation fixture files under bmnet/fixtures/.

Produces, via the main codec package:
  - mask.bmik        64x64 Bernoulli(0.5) mask, seed 42
  - meas.bmim        chart crop encoded at grid 2x2 (Cr = 4)
  - x_<name>.f32     input cubes (merged to full images) for projection checks
  - v_<name>_eta<e>.f32  the codec's projection_step output for each (x, eta)
  - chart.f32        the ground-truth crop

Cubes/outputs are stored merged to 2-d with the shared row-major block
convention; values may exceed [0, 1] so they bypass the image readers.

Run from this directory:  python3 make_fixtures.py
"""

from pathlib import Path

import numpy as np

from bmicodec import BlockGrid, MaskSpec, calibration_chart, center_crop, encode, generate
from bmicodec.blocks import merge_blocks, split_blocks
from bmicodec.container import write_image, write_mask, write_measurement
from bmicodec.sensing import SensingOperator

OUT = Path(__file__).resolve().parent.parent / "fixtures"
ETAS = (0.05, 0.3, 1.0)


def write_raw(path, a):
    a = np.asarray(a, dtype="<f4")
    path.write_bytes(a.tobytes())
    Path(str(path) + ".dims").write_text(f"{a.shape[0]} {a.shape[1]}\n")


def main():
    OUT.mkdir(exist_ok=True)
    grid = BlockGrid(2, 2)
    chart = center_crop(calibration_chart(256), 64)
    mask = generate(MaskSpec(64, 64, density=0.5, seed=42))
    meas = encode(chart, mask, grid)

    write_mask(mask, OUT / "mask.bmik")
    write_measurement(meas, OUT / "meas.bmim")
    write_image(chart, OUT / "chart.f32")

    op = SensingOperator.from_mask(mask, grid)
    y = meas.data.astype(np.float64)
    rng = np.random.default_rng(77)
    cubes = {
        "zero": np.zeros((4, 32, 32)),
        "init": op.init_estimate(y),
        "random": rng.random((4, 32, 32)),
    }
    for name, cube in cubes.items():
        write_raw(OUT / f"x_{name}.f32", merge_blocks(cube.astype(np.float64), grid))
        for eta in ETAS:
            v = op.projection_step(cube, y, eta=eta)
            write_raw(OUT / f"v_{name}_eta{eta}.f32", merge_blocks(v, grid))

    # sanity: merged/split round trip stays exact
    for name, cube in cubes.items():
        assert np.array_equal(split_blocks(merge_blocks(cube, grid), grid), cube)
    print(f"wrote fixtures to {OUT}")


if __name__ == "__main__":
    main()
