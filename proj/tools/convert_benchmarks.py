#!/usr/bin/env python3
"""Convert downloaded benchmark archives into the CSV files named in data/manifest.json.

usage: convert_benchmarks.py ARCHIVE_DIR DATA_DIR

Needs numpy and scipy. Every CSV has a header "u,y" and one sample per row.
"""
import pathlib
import sys
import tempfile
import zipfile

import numpy as np
from scipy.io import loadmat


def find(root, name):
    hits = sorted(p for p in root.rglob(name) if p.is_file())
    if not hits:
        raise FileNotFoundError(f"{name} not found under {root}")
    return hits[0]


def find_with_key(root, key):
    for p in sorted(root.rglob("*.mat")):
        try:
            if key in loadmat(p):
                return p
        except Exception:
            continue
    raise FileNotFoundError(f"no .mat under {root} holds '{key}'")


def write(path, u, y):
    data = np.column_stack([np.ravel(u), np.ravel(y)])
    np.savetxt(path, data, delimiter=",", header="u,y", comments="", fmt="%.17g")
    print(f"wrote {path} ({len(data)} rows)")


def unpack(archives, work):
    for z in archives.glob("*.zip"):
        with zipfile.ZipFile(z) as f:
            f.extractall(work / z.stem)
        for inner in (work / z.stem).rglob("*.zip"):
            with zipfile.ZipFile(inner) as f:
                f.extractall(inner.parent / inner.stem)
    for m in archives.glob("*.mat"):
        (work / m.name).write_bytes(m.read_bytes())


def main(argv):
    if len(argv) != 3:
        print(__doc__)
        return 2
    archives, out = pathlib.Path(argv[1]), pathlib.Path(argv[2])
    out.mkdir(parents=True, exist_ok=True)
    with tempfile.TemporaryDirectory() as tmp:
        work = pathlib.Path(tmp)
        unpack(archives, work)

        m = loadmat(find(work, "SNLS80mV.mat"))
        write(out / "silverbox.csv", m["V1"][0], m["V2"][0])

        m = loadmat(find(work, "WienerHammerBenchMark.mat"))
        write(out / "wiener_hammerstein.csv", m["uBenchMark"][:, 0], m["yBenchMark"][:, 0])

        for name, target in [("DATA_EMPS.mat", "emps_train.csv"), ("DATA_EMPS_PULSES.mat", "emps_test.csv")]:
            m = loadmat(find(work, name))
            write(out / target, m["vir"][:, 0], m["qm"][:, 0])

        m = loadmat(find(work, "dataBenchmark.mat"))
        write(out / "cascaded_tanks_train.csv", m["uEst"][:, 0], m["yEst"][:, 0])
        write(out / "cascaded_tanks_test.csv", m["uVal"][:, 0], m["yVal"][:, 0])

        m = loadmat(find_with_key(work, "u11"))
        write(out / "ced_low.csv", m["u11"][:, 0], m["z11"][:, 0])
        write(out / "ced_high.csv", m["u12"][:, 0], m["z12"][:, 0])
    return 0


if __name__ == "__main__":
    sys.exit(main(sys.argv))
