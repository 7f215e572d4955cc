"""Reproduce the five-ion numbers and write every report format."""

import os
import sys

from magic_coupling_studio import MagicCouplingStudio
from magic_coupling_studio.report import render_report

HERE = os.path.dirname(os.path.abspath(__file__))


def main(out_dir: str = "results") -> None:
    studio = MagicCouplingStudio(os.path.join(HERE, "five_ion_150T.json"))

    couplings = studio.couplings()
    for row in couplings["tables"]["main"]:
        print(f"J{row['ion_i']}{row['ion_j']} / 2pi = {row['J_hz']:.1f} Hz")

    fields = studio.local_fields()
    edge = fields["tables"]["main"][0]["local_field_hz"]
    print(f"edge local field / 2pi = {edge:.1f} Hz")

    three_body = studio.three_body()
    print(f"max three-body / 2pi = {three_body['document']['J3_coulomb_max_hz']:.4f} Hz")

    for payload in (couplings, fields, three_body, studio.oracle(n_ions=2, cutoff=6, order=2)):
        render_report(payload, ["table", "structured", "plot"], out_dir)


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "results")
